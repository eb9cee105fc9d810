#include "gsched/schedulers.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

namespace gsched {

double subbatch_gpu_duration(const SubBatch& sb, int gpus_used, const CostModel& cost) {
    return cost.gpu_alpha + cost.gpu_beta * static_cast<double>(sb.pairs) / gpus_used;
}

SimTime preamble_share(const ClusterConfig& config) {
    return SimTime::from_seconds(config.cost.preamble / config.num_ranks);
}

RankTally tally_for(std::int64_t pairs, const ClusterConfig& config, bool per_batch_turns) {
    const auto batches = partition_by_batch(pairs, config.batch_size, config.subbatches_per_batch);
    if (batches.empty()) {
        return {};
    }
    return {static_cast<int>(batches.size()), per_batch_turns ? 1 : static_cast<int>(batches.back().size())};
}

namespace {

Payload tally_payload(RankTally t) { return {{t.batches, t.last_iterations}, std::nullopt}; }

RankTally payload_tally(const Payload& p) {
    if (p.values.size() != 2 || p.step) {
        throw ProgramError("unexpected message during batch-count exchange");
    }
    return {static_cast<int>(p.values[0]), static_cast<int>(p.values[1])};
}

Payload handoff(const SubBatch& last) { return {{1}, last.ref()}; }

std::vector<int> all_gpus(int m) {
    std::vector<int> g(static_cast<std::size_t>(m));
    std::iota(g.begin(), g.end(), 0);
    return g;
}

// Everything one rank's token-ring program needs; owned by the coroutine frame.
struct RingPlan {
    int rank = 0;
    std::vector<int> members;
    std::vector<int> gpus;
    bool per_batch_turns = false;
    bool gap_inside_turn = false;
    std::vector<std::vector<SubBatch>> batches;
    int iterations_per_batch = 1;
    RankTally own;
    SimTime preamble;
    SimTime cpu_gap;
    CostModel cost;
};

HoldAndCompute compute(const RingPlan& plan, const SubBatch& sb) {
    return {plan.gpus,
            SimTime::from_seconds(subbatch_gpu_duration(sb, static_cast<int>(plan.gpus.size()), plan.cost)),
            sb.ref()};
}

RankProgram ring_program(RingPlan plan) {
    if (plan.preamble > SimTime{}) {
        co_await LocalWork{plan.preamble, std::nullopt};
    }

    std::vector<RankTally> tallies(plan.members.size());
    for (std::size_t i = 0; i < plan.members.size(); ++i) {
        const int src = plan.members[i];
        if (src == plan.rank) {
            tallies[i] = plan.own;
            for (int dst : plan.members) {
                if (dst != plan.rank) {
                    co_await Send{dst, tally_payload(plan.own)};
                }
            }
        } else {
            const Message m = co_await Recv{src};
            tallies[i] = payload_tally(m.payload);
        }
    }
    const TurnRing ring(plan.members, std::move(tallies), plan.iterations_per_batch);

    const bool with_gap = plan.cpu_gap > SimTime{};
    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
        const auto& subs = plan.batches[b];
        if (plan.per_batch_turns) {
            const Step step{static_cast<int>(b) + 1, 1};
            if (with_gap) {
                co_await LocalWork{plan.cpu_gap, subs.front().ref()};
            }
            if (const auto gate = ring.gate(plan.rank, step)) {
                co_await Recv{*gate};
            }
            for (std::size_t i = 0; i < subs.size(); ++i) {
                if (with_gap && i > 0) {
                    co_await LocalWork{plan.cpu_gap, subs[i].ref()};
                }
                co_await compute(plan, subs[i]);
            }
            if (const auto target = ring.signal_target(plan.rank, step)) {
                co_await Send{*target, handoff(subs.back())};
            }
            continue;
        }
        for (const auto& sb : subs) {
            const Step step{sb.batch_idx, sb.sub_idx};
            if (with_gap && !plan.gap_inside_turn) {
                co_await LocalWork{plan.cpu_gap, sb.ref()};
            }
            if (const auto gate = ring.gate(plan.rank, step)) {
                co_await Recv{*gate};
            }
            if (with_gap && plan.gap_inside_turn) {
                co_await LocalWork{plan.cpu_gap, sb.ref()};
            }
            co_await compute(plan, sb);
            if (const auto target = ring.signal_target(plan.rank, step)) {
                co_await Send{*target, handoff(sb)};
            }
        }
    }
}

void check_inputs(const Workload& workload, const ClusterConfig& config) {
    validate(config);
    if (workload.num_ranks() != config.num_ranks) {
        throw std::invalid_argument("workload has " + std::to_string(workload.num_ranks()) + " ranks, config has " +
                                    std::to_string(config.num_ranks));
    }
    for (auto p : workload.pairs_per_rank) {
        if (p < 0) {
            throw std::invalid_argument("workload has a negative pair count");
        }
    }
}

RingPlan make_plan(int rank, const Workload& workload, const ClusterConfig& config, bool one_to_one,
                   bool per_batch_turns) {
    check_inputs(workload, config);
    if (rank < 0 || rank >= config.num_ranks) {
        throw std::invalid_argument("rank " + std::to_string(rank) + " out of range");
    }
    RingPlan plan;
    plan.rank = rank;
    const std::int64_t pairs = workload.pairs_per_rank[rank];
    if (one_to_one) {
        const int gpu = pipeline_for_rank(rank, config.num_gpus);
        plan.members = pipeline_members(gpu, config.num_ranks, config.num_gpus);
        plan.gpus = {gpu};
    } else {
        plan.members.resize(static_cast<std::size_t>(config.num_ranks));
        std::iota(plan.members.begin(), plan.members.end(), 0);
        plan.gpus = all_gpus(config.num_gpus);
    }
    plan.per_batch_turns = per_batch_turns;
    plan.gap_inside_turn = !one_to_one;
    plan.batches = partition_by_batch(pairs, config.batch_size, config.subbatches_per_batch, rank);
    plan.iterations_per_batch =
        per_batch_turns ? 1
                        : static_cast<int>(std::min<std::int64_t>(config.subbatches_per_batch, config.batch_size));
    plan.own = tally_for(pairs, config, per_batch_turns);
    plan.preamble = preamble_share(config);
    plan.cpu_gap = SimTime::from_seconds(config.cost.cpu_gap);
    plan.cost = config.cost;
    return plan;
}

RankProgram baseline_program(std::vector<SubBatch> subs, std::vector<int> gpus, SimTime preamble, SimTime gap,
                             CostModel cost) {
    if (preamble > SimTime{}) {
        co_await LocalWork{preamble, std::nullopt};
    }
    for (const auto& sb : subs) {
        if (gap > SimTime{}) {
            co_await LocalWork{gap, sb.ref()};
        }
        co_await HoldAndCompute{
            gpus, SimTime::from_seconds(subbatch_gpu_duration(sb, static_cast<int>(gpus.size()), cost)), sb.ref()};
    }
}

RankProgram exchange_program(int rank, std::vector<int> members, RankTally own,
                             std::shared_ptr<std::vector<RankTally>> view) {
    for (int src : members) {
        if (src == rank) {
            (*view)[src] = own;
            for (int dst : members) {
                if (dst != rank) {
                    co_await Send{dst, tally_payload(own)};
                }
            }
        } else {
            const Message m = co_await Recv{src};
            (*view)[src] = payload_tally(m.payload);
        }
    }
}

} // namespace

RankProgram build_baseline_program(const Workload& workload, const ClusterConfig& config) {
    check_inputs(workload, config);
    if (config.num_ranks != 1) {
        throw std::invalid_argument("baseline scheduler requires num_ranks = 1");
    }
    return baseline_program(
        partition_rank_workload(workload.pairs_per_rank[0], config.batch_size, config.subbatches_per_batch, 0),
        all_gpus(config.num_gpus), preamble_share(config), SimTime::from_seconds(config.cost.cpu_gap), config.cost);
}

RankProgram build_one2all_program(int rank, const Workload& workload, const ClusterConfig& config) {
    return ring_program(make_plan(rank, workload, config, false, false));
}

RankProgram build_one2one_program(int rank, const Workload& workload, const ClusterConfig& config) {
    return ring_program(make_plan(rank, workload, config, true, false));
}

RankProgram build_opt_one2one_program(int rank, const Workload& workload, const ClusterConfig& config) {
    return ring_program(make_plan(rank, workload, config, true, true));
}

RankProgram build_program(int rank, const Workload& workload, const ClusterConfig& config) {
    switch (config.scheduler) {
    case Scheduler::baseline: return build_baseline_program(workload, config);
    case Scheduler::one2all: return build_one2all_program(rank, workload, config);
    case Scheduler::one2one: return build_one2one_program(rank, workload, config);
    case Scheduler::opt_one2one: return build_opt_one2one_program(rank, workload, config);
    }
    throw std::invalid_argument("unknown scheduler");
}

Trace simulate(const Workload& workload, const ClusterConfig& config) {
    check_inputs(workload, config);
    std::vector<RankProgram> programs;
    programs.reserve(static_cast<std::size_t>(config.num_ranks));
    for (int r = 0; r < config.num_ranks; ++r) {
        programs.push_back(build_program(r, workload, config));
    }
    Trace trace = run_programs(std::move(programs), config);
    trace.workload = workload;
    return trace;
}

ExchangeOutcome exchange_batch_counts(std::span<const RankTally> announced, const ClusterConfig& config) {
    const int n = static_cast<int>(announced.size());
    if (n != config.num_ranks) {
        throw std::invalid_argument("exchange: one tally per rank required");
    }
    std::vector<int> members(static_cast<std::size_t>(n));
    std::iota(members.begin(), members.end(), 0);
    std::vector<std::shared_ptr<std::vector<RankTally>>> views;
    std::vector<RankProgram> programs;
    for (int r = 0; r < n; ++r) {
        views.push_back(std::make_shared<std::vector<RankTally>>(static_cast<std::size_t>(n)));
        programs.push_back(exchange_program(r, members, announced[r], views.back()));
    }
    ExchangeOutcome out;
    out.trace = run_programs(std::move(programs), config);
    for (auto& v : views) {
        out.views.push_back(*v);
    }
    return out;
}

} // namespace gsched
