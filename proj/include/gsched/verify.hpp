#pragma once

#include "gsched/simkernel.hpp"
#include "gsched/trace_io.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace gsched {

// Trace validators. Everything here works from the recorded events plus the
// trace's config and workload; none of it consults the scheduler code, so it
// can serve as an independent check of it. Structurally broken traces
// (unmatched compute events, bad ranks) throw MalformedTrace.

struct CheckResult {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    explicit operator bool() const { return ok(); }
    void merge(const CheckResult& other);
    std::string summary() const;
};

struct ComputeInterval {
    int rank = 0;
    std::vector<int> gpus;
    std::optional<SubBatchRef> subbatch;
    SimTime start;
    SimTime end;
};

// Every ComputeStart/ComputeEnd pair, in ComputeStart order.
std::vector<ComputeInterval> compute_intervals(const Trace& trace);

struct BusyInterval {
    SimTime start;
    SimTime end;
    int rank = 0;
};
// Per GPU (index = GPU id), sorted by start.
std::vector<std::vector<BusyInterval>> resource_busy_intervals(const Trace& trace);

// Timestamps non-decreasing per rank, holds properly bracketed, exactly one
// RankFinished per rank and nothing after it.
CheckResult check_well_formed(const Trace& trace);
// Busy intervals on each GPU pairwise disjoint.
CheckResult check_mutual_exclusion(const Trace& trace);
// Compute intervals disjoint across all GPUs (one2all, baseline).
CheckResult check_global_serialization(const Trace& trace);
// Computed sub-batches equal the partition of the workload as a multiset.
CheckResult check_exactly_once(const Trace& trace);
// Rank r computes on GPU r mod m under one2one/opt_one2one and on all GPUs
// otherwise.
CheckResult check_pipeline_affinity(const Trace& trace);
// Within each ring (global for one2all, one per GPU otherwise) turns follow
// (batch, sub-batch, rank) order; (batch, rank) with whole-batch turns.
CheckResult check_ring_order(const Trace& trace);
// Receives match sends FIFO per channel and complete no earlier than the
// send time plus msg_latency.
CheckResult check_message_causality(const Trace& trace);
// A turn handed over between two ranks starts no earlier than the previous
// turn's end plus msg_latency.
CheckResult check_barrier_soundness(const Trace& trace);

// Every check that applies to the trace's scheduler.
CheckResult verify_trace(const Trace& trace);

struct Metrics {
    SimTime total_time;
    SimTime alignment_time;
    SimTime difference_time;
    std::int64_t handoff_messages = 0;
    std::int64_t exchange_messages = 0;
    std::vector<double> per_gpu_busy; // busy fraction of the alignment span
    int max_concurrent_computes = 0;
};

Metrics compute_metrics(const Trace& trace);

inline constexpr std::string_view metrics_csv_header =
    "scheduler,n,m,c,total,alignment,difference,handoffs,exchange,max_conc";
std::string format_metrics_line(const Metrics& metrics, const ClusterConfig& config);

} // namespace gsched
