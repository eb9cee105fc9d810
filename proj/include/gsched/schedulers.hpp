#pragma once

#include "gsched/ring.hpp"
#include "gsched/simkernel.hpp"
#include "gsched/workload.hpp"

#include <span>
#include <vector>

namespace gsched {

// gpu_alpha + gpu_beta * pairs / gpus_used, in seconds.
double subbatch_gpu_duration(const SubBatch& sb, int gpus_used, const CostModel& cost);

// Per-rank preamble: the single-rank non-alignment time split over all ranks.
SimTime preamble_share(const ClusterConfig& config);

// Single process driving all GPUs: cpu gap, then the sub-batch on every GPU.
// Requires num_ranks == 1.
RankProgram build_baseline_program(const Workload& workload, const ClusterConfig& config);

// Every rank holds all GPUs for each of its sub-batches; one global token
// ring passed once per sub-batch. The cpu gap runs inside the turn.
RankProgram build_one2all_program(int rank, const Workload& workload, const ClusterConfig& config);

// Rank r drives GPU r mod m only; each GPU has its own token ring of the
// ranks mapped to it, passed once per sub-batch. The cpu gap for the next
// sub-batch runs before waiting for the token.
RankProgram build_one2one_program(int rank, const Workload& workload, const ClusterConfig& config);

// As one2one, but the token is passed once per batch: a rank runs all
// sub-batches of a batch in one turn, with the cpu gaps between them inside
// the turn.
RankProgram build_opt_one2one_program(int rank, const Workload& workload, const ClusterConfig& config);

// Dispatches on config.scheduler.
RankProgram build_program(int rank, const Workload& workload, const ClusterConfig& config);

// Builds every rank's program and runs it. Throws std::invalid_argument on an
// invalid config or a workload of the wrong length; DeadlockError propagates.
Trace simulate(const Workload& workload, const ClusterConfig& config);

// What a rank announces in the batch-count exchange. With per_batch_turns
// every batch is one turn, otherwise the last batch takes one turn per
// non-empty sub-batch.
RankTally tally_for(std::int64_t pairs, const ClusterConfig& config, bool per_batch_turns);

// Runs only the all-to-all batch-count exchange: members announce in rank
// order, each sending its tally to every other member while the rest receive.
// views[r] is what rank r holds afterwards (indexed by rank).
struct ExchangeOutcome {
    std::vector<std::vector<RankTally>> views;
    Trace trace;
};
ExchangeOutcome exchange_batch_counts(std::span<const RankTally> announced, const ClusterConfig& config);

} // namespace gsched
