#include "gsched/verify.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace gsched {

void CheckResult::merge(const CheckResult& other) {
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
}

std::string CheckResult::summary() const {
    if (ok()) {
        return "ok";
    }
    std::string out;
    for (const auto& v : violations) {
        out += v;
        out += '\n';
    }
    return out;
}

namespace {

std::string ref_name(const SubBatchRef& r) {
    return "r" + std::to_string(r.rank) + ".b" + std::to_string(r.batch) + ".s" + std::to_string(r.sub);
}

std::string ref_name(const std::optional<SubBatchRef>& r) { return r ? ref_name(*r) : "an untagged compute"; }

std::string span_name(SimTime a, SimTime b) { return "[" + a.to_string() + ", " + b.to_string() + ")"; }

std::vector<std::vector<const TraceEvent*>> by_rank(const Trace& trace) {
    std::vector<std::vector<const TraceEvent*>> out(static_cast<std::size_t>(trace.config.num_ranks));
    for (const auto& e : trace.events) {
        if (e.rank < 0 || e.rank >= trace.config.num_ranks) {
            throw MalformedTrace("event for unknown rank " + std::to_string(e.rank));
        }
        out[e.rank].push_back(&e);
    }
    for (auto& evs : out) {
        std::stable_sort(evs.begin(), evs.end(), [](auto* a, auto* b) { return a->seq < b->seq; });
    }
    return out;
}

bool one_to_one(Scheduler s) { return s == Scheduler::one2one || s == Scheduler::opt_one2one; }

} // namespace

std::vector<ComputeInterval> compute_intervals(const Trace& trace) {
    std::vector<ComputeInterval> out;
    for (const auto& evs : by_rank(trace)) {
        const TraceEvent* open = nullptr;
        for (const auto* e : evs) {
            if (e->kind == EventKind::ComputeStart) {
                if (open) {
                    throw MalformedTrace("rank " + std::to_string(e->rank) + ": ComputeStart at " +
                                         e->time.to_string() + " while a compute is open");
                }
                open = e;
            } else if (e->kind == EventKind::ComputeEnd) {
                if (!open || open->subbatch != e->subbatch || open->gpus != e->gpus) {
                    throw MalformedTrace("rank " + std::to_string(e->rank) + ": unmatched ComputeEnd at " +
                                         e->time.to_string());
                }
                out.push_back({e->rank, e->gpus, e->subbatch, open->time, e->time});
                open = nullptr;
            }
        }
        if (open) {
            throw MalformedTrace("rank " + std::to_string(open->rank) + ": ComputeStart at " +
                                 open->time.to_string() + " never ends");
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.start, a.rank) < std::tie(b.start, b.rank);
    });
    return out;
}

std::vector<std::vector<BusyInterval>> resource_busy_intervals(const Trace& trace) {
    std::vector<std::vector<BusyInterval>> per_gpu(static_cast<std::size_t>(trace.config.num_gpus));
    for (const auto& c : compute_intervals(trace)) {
        for (int g : c.gpus) {
            if (g < 0 || g >= trace.config.num_gpus) {
                throw MalformedTrace("compute on unknown GPU " + std::to_string(g));
            }
            per_gpu[g].push_back({c.start, c.end, c.rank});
        }
    }
    for (auto& v : per_gpu) {
        std::stable_sort(v.begin(), v.end(),
                         [](const auto& a, const auto& b) { return std::tie(a.start, a.end) < std::tie(b.start, b.end); });
    }
    return per_gpu;
}

CheckResult check_well_formed(const Trace& trace) {
    CheckResult res;
    const auto ranks = by_rank(trace);
    for (int r = 0; r < static_cast<int>(ranks.size()); ++r) {
        const std::string who = "rank " + std::to_string(r) + ": ";
        SimTime last;
        std::optional<std::vector<int>> hold;
        int finished = 0;
        for (const auto* e : ranks[r]) {
            if (e->time < last) {
                res.violations.push_back(who + "time goes backwards at " + e->time.to_string());
            }
            last = e->time;
            if (finished > 0) {
                res.violations.push_back(who + "event after RankFinished at " + e->time.to_string());
            }
            switch (e->kind) {
            case EventKind::HoldAcquired:
                if (hold) {
                    res.violations.push_back(who + "nested HoldAcquired at " + e->time.to_string());
                }
                hold = e->gpus;
                break;
            case EventKind::HoldReleased:
                if (!hold || *hold != e->gpus) {
                    res.violations.push_back(who + "HoldReleased without matching acquire at " + e->time.to_string());
                }
                hold.reset();
                break;
            case EventKind::ComputeStart:
            case EventKind::ComputeEnd:
                if (!hold || *hold != e->gpus) {
                    res.violations.push_back(who + std::string(event_kind_name(e->kind)) + " outside its hold at " +
                                             e->time.to_string());
                }
                break;
            case EventKind::RankFinished: ++finished; break;
            default: break;
            }
        }
        if (hold) {
            res.violations.push_back(who + "hold never released");
        }
        if (finished != 1) {
            res.violations.push_back(who + "expected one RankFinished, found " + std::to_string(finished));
        }
    }
    return res;
}

CheckResult check_mutual_exclusion(const Trace& trace) {
    CheckResult res;
    const auto per_gpu = resource_busy_intervals(trace);
    for (std::size_t g = 0; g < per_gpu.size(); ++g) {
        const auto& v = per_gpu[g];
        std::size_t holder = 0; // interval reaching furthest so far
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (v[i].start < v[holder].end) {
                res.violations.push_back("gpu" + std::to_string(g) + ": rank " + std::to_string(v[holder].rank) +
                                         " and rank " + std::to_string(v[i].rank) + " overlap during " +
                                         span_name(v[i].start, std::min(v[i].end, v[holder].end)));
            }
            if (v[i].end > v[holder].end) {
                holder = i;
            }
        }
    }
    return res;
}

CheckResult check_global_serialization(const Trace& trace) {
    CheckResult res;
    const auto all = compute_intervals(trace);
    std::size_t holder = 0;
    for (std::size_t i = 1; i < all.size(); ++i) {
        if (all[i].start < all[holder].end) {
            res.violations.push_back("computes " + ref_name(all[holder].subbatch) + " and " +
                                     ref_name(all[i].subbatch) + " overlap during " +
                                     span_name(all[i].start, std::min(all[i].end, all[holder].end)));
        }
        if (all[i].end > all[holder].end) {
            holder = i;
        }
    }
    return res;
}

CheckResult check_exactly_once(const Trace& trace) {
    CheckResult res;
    std::map<SubBatchRef, int> expected;
    const auto& cfg = trace.config;
    for (int r = 0; r < trace.workload.num_ranks(); ++r) {
        for (const auto& sb :
             partition_rank_workload(trace.workload.pairs_per_rank[r], cfg.batch_size, cfg.subbatches_per_batch, r)) {
            ++expected[sb.ref()];
        }
    }
    std::map<SubBatchRef, int> seen;
    for (const auto& e : trace.events) {
        if (e.kind == EventKind::ComputeStart) {
            if (e.subbatch) {
                ++seen[*e.subbatch];
            } else {
                res.violations.push_back("rank " + std::to_string(e.rank) + " computes an untagged sub-batch at " +
                                         e.time.to_string());
            }
        }
    }
    for (const auto& [ref, count] : expected) {
        if (!seen.contains(ref)) {
            res.violations.push_back("missing " + ref_name(ref));
        }
    }
    for (const auto& [ref, count] : seen) {
        if (!expected.contains(ref)) {
            res.violations.push_back("unexpected " + ref_name(ref));
        } else if (count > 1) {
            res.violations.push_back("duplicate " + ref_name(ref) + " (computed " + std::to_string(count) + " times)");
        }
    }
    return res;
}

CheckResult check_pipeline_affinity(const Trace& trace) {
    CheckResult res;
    const int m = trace.config.num_gpus;
    std::vector<int> all(static_cast<std::size_t>(m));
    std::iota(all.begin(), all.end(), 0);
    for (const auto& c : compute_intervals(trace)) {
        const std::vector<int> want =
            one_to_one(trace.config.scheduler) ? std::vector<int>{c.rank % m} : all;
        if (c.gpus != want) {
            res.violations.push_back(ref_name(c.subbatch) + " ran on the wrong GPU set");
        }
    }
    return res;
}

namespace {

struct Turn {
    int rank;
    int batch;
    int sub; // 0 for whole-batch turns
    SimTime start;
    SimTime end;
};

std::string turn_name(const Turn& t) {
    std::string s = "r" + std::to_string(t.rank) + ".b" + std::to_string(t.batch);
    if (t.sub > 0) {
        s += ".s" + std::to_string(t.sub);
    }
    return s;
}

// Turns per ring in the order they happened (sorted by start time).
std::map<int, std::vector<Turn>> observed_turns(const Trace& trace) {
    const bool whole_batch = trace.config.scheduler == Scheduler::opt_one2one;
    const bool per_gpu = one_to_one(trace.config.scheduler);
    std::map<int, std::vector<Turn>> rings;
    for (const auto& c : compute_intervals(trace)) {
        auto& ring = rings[per_gpu ? c.rank % trace.config.num_gpus : 0];
        if (!c.subbatch) {
            continue; // reported by check_exactly_once
        }
        if (whole_batch) {
            // Turns of one rank never interleave inside a ring, so a new turn
            // starts whenever the (rank, batch) pair changes.
            if (!ring.empty() && ring.back().rank == c.rank && ring.back().batch == c.subbatch->batch) {
                ring.back().end = std::max(ring.back().end, c.end);
                continue;
            }
            ring.push_back({c.rank, c.subbatch->batch, 0, c.start, c.end});
        } else {
            ring.push_back({c.rank, c.subbatch->batch, c.subbatch->sub, c.start, c.end});
        }
    }
    return rings;
}

std::vector<Turn> ring_sorted(std::vector<Turn> turns) {
    std::stable_sort(turns.begin(), turns.end(), [](const Turn& a, const Turn& b) {
        return std::tie(a.batch, a.sub, a.rank) < std::tie(b.batch, b.sub, b.rank);
    });
    return turns;
}

} // namespace

CheckResult check_ring_order(const Trace& trace) {
    CheckResult res;
    for (const auto& [ring_id, turns] : observed_turns(trace)) {
        const auto expected = ring_sorted(turns);
        for (std::size_t i = 0; i < turns.size(); ++i) {
            const auto& got = turns[i];
            const auto& want = expected[i];
            if (got.rank != want.rank || got.batch != want.batch || got.sub != want.sub) {
                res.violations.push_back("ring " + std::to_string(ring_id) + ": turn " + turn_name(got) +
                                         (i > 0 ? " after " + turn_name(turns[i - 1]) : std::string(" first")) +
                                         ", ring order expects " + turn_name(want));
                break;
            }
        }
    }
    return res;
}

CheckResult check_message_causality(const Trace& trace) {
    CheckResult res;
    const SimTime latency = SimTime::from_seconds(trace.config.cost.msg_latency);
    std::map<std::pair<int, int>, std::vector<const TraceEvent*>> sends;
    std::map<std::pair<int, int>, std::vector<const TraceEvent*>> recvs;
    for (const auto& evs : by_rank(trace)) {
        for (const auto* e : evs) {
            if (e->kind == EventKind::SendPosted || e->kind == EventKind::RecvCompleted) {
                if (!e->peer) {
                    throw MalformedTrace("message event without peer on rank " + std::to_string(e->rank));
                }
                if (e->kind == EventKind::SendPosted) {
                    sends[{e->rank, *e->peer}].push_back(e);
                } else {
                    recvs[{*e->peer, e->rank}].push_back(e);
                }
            }
        }
    }
    for (const auto& [chan, rs] : recvs) {
        const auto& ss = sends[chan];
        const std::string name = "channel " + std::to_string(chan.first) + "->" + std::to_string(chan.second);
        if (rs.size() > ss.size()) {
            res.violations.push_back(name + ": " + std::to_string(rs.size()) + " receives but only " +
                                     std::to_string(ss.size()) + " sends");
            continue;
        }
        for (std::size_t i = 0; i < rs.size(); ++i) {
            if (rs[i]->time < ss[i]->time + latency) {
                res.violations.push_back(name + ": message " + std::to_string(i) + " received at " +
                                         rs[i]->time.to_string() + " before delivery at " +
                                         (ss[i]->time + latency).to_string());
            }
            if (rs[i]->subbatch != ss[i]->subbatch) {
                res.violations.push_back(name + ": message " + std::to_string(i) + " received out of FIFO order");
            }
        }
    }
    return res;
}

CheckResult check_barrier_soundness(const Trace& trace) {
    CheckResult res;
    const SimTime latency = SimTime::from_seconds(trace.config.cost.msg_latency);
    for (const auto& [ring_id, turns] : observed_turns(trace)) {
        const auto ordered = ring_sorted(turns);
        for (std::size_t i = 1; i < ordered.size(); ++i) {
            const auto& prev = ordered[i - 1];
            const auto& cur = ordered[i];
            if (prev.rank != cur.rank && cur.start < prev.end + latency) {
                res.violations.push_back("ring " + std::to_string(ring_id) + ": " + turn_name(cur) + " starts at " +
                                         cur.start.to_string() + ", before the signal from " + turn_name(prev) +
                                         " can arrive at " + (prev.end + latency).to_string());
            }
        }
    }
    return res;
}

CheckResult verify_trace(const Trace& trace) {
    CheckResult res = check_well_formed(trace);
    res.merge(check_mutual_exclusion(trace));
    res.merge(check_exactly_once(trace));
    res.merge(check_pipeline_affinity(trace));
    res.merge(check_ring_order(trace));
    res.merge(check_message_causality(trace));
    res.merge(check_barrier_soundness(trace));
    if (!one_to_one(trace.config.scheduler)) {
        res.merge(check_global_serialization(trace));
    }
    return res;
}

Metrics compute_metrics(const Trace& trace) {
    Metrics m;
    for (const auto& e : trace.events) {
        if (e.kind == EventKind::RankFinished) {
            m.total_time = std::max(m.total_time, e.time);
        } else if (e.kind == EventKind::SendPosted) {
            ++(e.subbatch ? m.handoff_messages : m.exchange_messages);
        }
    }
    const auto computes = compute_intervals(trace);
    if (!computes.empty()) {
        SimTime first = computes.front().start;
        SimTime last = computes.front().end;
        for (const auto& c : computes) {
            first = std::min(first, c.start);
            last = std::max(last, c.end);
        }
        m.alignment_time = last - first;
    }
    m.difference_time = m.total_time - m.alignment_time;

    m.per_gpu_busy.assign(static_cast<std::size_t>(trace.config.num_gpus), 0.0);
    if (m.alignment_time > SimTime{}) {
        const auto per_gpu = resource_busy_intervals(trace);
        for (std::size_t g = 0; g < per_gpu.size(); ++g) {
            std::int64_t busy = 0;
            for (const auto& iv : per_gpu[g]) {
                busy += (iv.end - iv.start).micros();
            }
            m.per_gpu_busy[g] = static_cast<double>(busy) / static_cast<double>(m.alignment_time.micros());
        }
    }

    // Ends sort before starts at the same instant; empty intervals never overlap anything.
    std::vector<std::pair<SimTime, int>> edges;
    for (const auto& c : computes) {
        if (c.end > c.start) {
            edges.emplace_back(c.start, +1);
            edges.emplace_back(c.end, -1);
        }
    }
    std::sort(edges.begin(), edges.end());
    int live = 0;
    for (const auto& [t, delta] : edges) {
        live += delta;
        m.max_concurrent_computes = std::max(m.max_concurrent_computes, live);
    }
    return m;
}

std::string format_metrics_line(const Metrics& metrics, const ClusterConfig& config) {
    std::string out(scheduler_name(config.scheduler));
    for (auto v : {std::int64_t{config.num_ranks}, std::int64_t{config.num_gpus},
                   std::int64_t{config.subbatches_per_batch}}) {
        out += ',' + std::to_string(v);
    }
    for (auto t : {metrics.total_time, metrics.alignment_time, metrics.difference_time}) {
        out += ',' + t.to_string();
    }
    for (auto v : {metrics.handoff_messages, metrics.exchange_messages,
                   std::int64_t{metrics.max_concurrent_computes}}) {
        out += ',' + std::to_string(v);
    }
    return out;
}

} // namespace gsched
