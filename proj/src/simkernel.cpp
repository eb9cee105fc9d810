#include "gsched/simkernel.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <queue>
#include <set>

namespace gsched {

Action RankProgram::step(std::optional<Message> delivered) {
    if (!handle_) {
        throw ProgramError("stepping an empty rank program");
    }
    if (handle_.done()) {
        return Finish{};
    }
    auto& promise = handle_.promise();
    promise.delivered = std::move(delivered);
    handle_.resume();
    if (promise.error) {
        std::rethrow_exception(std::exchange(promise.error, nullptr));
    }
    if (handle_.done()) {
        return Finish{};
    }
    return std::move(promise.pending);
}

RankProgram scripted_program(std::vector<Action> actions) {
    for (auto& a : actions) {
        if (std::holds_alternative<Finish>(a)) {
            co_return;
        }
        if (auto* s = std::get_if<Send>(&a)) {
            co_await std::move(*s);
        } else if (auto* r = std::get_if<Recv>(&a)) {
            co_await *r;
        } else if (auto* h = std::get_if<HoldAndCompute>(&a)) {
            co_await std::move(*h);
        } else if (auto* w = std::get_if<LocalWork>(&a)) {
            co_await std::move(*w);
        }
    }
}

std::string_view event_kind_name(EventKind k) {
    switch (k) {
    case EventKind::SendPosted: return "SendPosted";
    case EventKind::RecvCompleted: return "RecvCompleted";
    case EventKind::HoldAcquired: return "HoldAcquired";
    case EventKind::ComputeStart: return "ComputeStart";
    case EventKind::ComputeEnd: return "ComputeEnd";
    case EventKind::HoldReleased: return "HoldReleased";
    case EventKind::LocalWorkStart: return "LocalWorkStart";
    case EventKind::LocalWorkEnd: return "LocalWorkEnd";
    case EventKind::RankFinished: return "RankFinished";
    }
    return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view name) {
    for (int k = 0; k <= static_cast<int>(EventKind::RankFinished); ++k) {
        if (event_kind_name(static_cast<EventKind>(k)) == name) {
            return static_cast<EventKind>(k);
        }
    }
    return std::nullopt;
}

namespace {

std::string describe_edges(const std::vector<DeadlockError::Edge>& edges) {
    std::string out;
    for (const auto& [waiter, awaited] : edges) {
        if (!out.empty()) {
            out += "; ";
        }
        out += "rank " + std::to_string(waiter) + " waits for rank " + std::to_string(awaited);
    }
    return out;
}

} // namespace

DeadlockError::DeadlockError(std::vector<Edge> wait_for, SimTime at)
    : std::runtime_error("deadlock at t=" + at.to_string() + ": " + describe_edges(wait_for)),
      wait_for_(std::move(wait_for)), time_(at) {}

namespace {

enum class Mode { Ready, BlockedRecv, WaitingHold, Busy, Finished };

// What a rank's next wake-up completes before its program is stepped.
enum class Pending { None, RecvDone, LocalWorkDone, ComputeDone };

struct RankState {
    RankProgram program;
    Mode mode = Mode::Ready;
    Pending pending = Pending::None;
    int recv_src = -1;
    HoldAndCompute hold{{}, SimTime{}};  // current or requested hold
    std::optional<SubBatchRef> work_ref; // current LocalWork
    std::vector<TraceEvent> events;
};

struct Wake {
    SimTime time;
    int rank;
    friend bool operator>(const Wake& a, const Wake& b) {
        return std::tie(a.time, a.rank) > std::tie(b.time, b.rank);
    }
};

class Kernel {
public:
    Kernel(std::vector<RankProgram> programs, const ClusterConfig& config)
        : config_(config), latency_(SimTime::from_seconds(config.cost.msg_latency)),
          gpu_busy_(static_cast<std::size_t>(config.num_gpus), false) {
        ranks_.resize(programs.size());
        for (std::size_t r = 0; r < programs.size(); ++r) {
            ranks_[r].program = std::move(programs[r]);
        }
    }

    Trace run() {
        for (int r = 0; r < num_ranks(); ++r) {
            wakes_.push({SimTime{}, r});
        }
        SimTime now;
        while (!wakes_.empty()) {
            now = wakes_.top().time;
            while (!wakes_.empty() && wakes_.top().time == now) {
                const int r = wakes_.top().rank;
                wakes_.pop();
                wake(r, now);
            }
            grant_holds(now);
        }

        std::vector<DeadlockError::Edge> blocked;
        for (int r = 0; r < num_ranks(); ++r) {
            const auto& st = ranks_[r];
            if (st.mode == Mode::BlockedRecv) {
                blocked.emplace_back(r, st.recv_src);
            } else if (st.mode != Mode::Finished) {
                // Unreachable while holds are granted greedily; kept so a
                // kernel bug surfaces as an error rather than a short trace.
                blocked.emplace_back(r, r);
            }
        }
        if (!blocked.empty()) {
            throw DeadlockError(std::move(blocked), now);
        }

        Trace trace;
        trace.config = config_;
        for (auto& st : ranks_) {
            trace.events.insert(trace.events.end(), std::make_move_iterator(st.events.begin()),
                                std::make_move_iterator(st.events.end()));
        }
        std::sort(trace.events.begin(), trace.events.end(), [](const TraceEvent& a, const TraceEvent& b) {
            return std::tie(a.time, a.rank, a.seq) < std::tie(b.time, b.rank, b.seq);
        });
        return trace;
    }

private:
    int num_ranks() const { return static_cast<int>(ranks_.size()); }

    void record(int r, SimTime t, EventKind kind, std::vector<int> gpus = {}, std::optional<int> peer = {},
                std::optional<SubBatchRef> ref = {}) {
        auto& evs = ranks_[r].events;
        evs.push_back({t, r, kind, std::move(gpus), peer, ref, static_cast<std::int64_t>(evs.size())});
    }

    void wake(int r, SimTime now) {
        auto& st = ranks_[r];
        std::optional<Message> delivered;
        switch (st.pending) {
        case Pending::RecvDone: {
            auto& chan = channels_[{st.recv_src, r}];
            delivered = std::move(chan.front());
            chan.pop_front();
            record(r, now, EventKind::RecvCompleted, {}, delivered->src, delivered->payload.step);
            break;
        }
        case Pending::LocalWorkDone:
            record(r, now, EventKind::LocalWorkEnd, {}, {}, st.work_ref);
            break;
        case Pending::ComputeDone:
            record(r, now, EventKind::ComputeEnd, st.hold.gpus, {}, st.hold.subbatch);
            record(r, now, EventKind::HoldReleased, st.hold.gpus, {}, st.hold.subbatch);
            for (int g : st.hold.gpus) {
                gpu_busy_[g] = false;
            }
            break;
        case Pending::None:
            break;
        }
        st.pending = Pending::None;
        st.mode = Mode::Ready;
        dispatch(r, now, st.program.step(std::move(delivered)));
    }

    void check_rank(int r, int other, const char* what) const {
        if (other < 0 || other >= num_ranks()) {
            throw ProgramError("rank " + std::to_string(r) + ": " + what + " unknown rank " + std::to_string(other));
        }
        if (other == r) {
            throw ProgramError("rank " + std::to_string(r) + ": " + what + " itself");
        }
    }

    void dispatch(int r, SimTime now, Action action) {
        auto& st = ranks_[r];
        std::visit(
            [&](auto&& a) {
                using A = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<A, Send>) {
                    check_rank(r, a.dst, "sends to");
                    record(r, now, EventKind::SendPosted, {}, a.dst, a.payload.step);
                    auto& chan = channels_[{r, a.dst}];
                    chan.push_back({r, a.dst, std::move(a.payload), now, now + latency_});
                    auto& dst = ranks_[a.dst];
                    if (dst.mode == Mode::BlockedRecv && dst.recv_src == r && chan.size() == 1) {
                        dst.mode = Mode::Busy;
                        dst.pending = Pending::RecvDone;
                        wakes_.push({now + latency_, a.dst});
                    }
                    wakes_.push({now, r});
                } else if constexpr (std::is_same_v<A, Recv>) {
                    check_rank(r, a.src, "receives from");
                    st.recv_src = a.src;
                    auto& chan = channels_[{a.src, r}];
                    if (chan.empty()) {
                        st.mode = Mode::BlockedRecv;
                    } else {
                        st.mode = Mode::Busy;
                        st.pending = Pending::RecvDone;
                        wakes_.push({std::max(now, chan.front().deliver_time), r});
                    }
                } else if constexpr (std::is_same_v<A, HoldAndCompute>) {
                    if (a.gpus.empty() || !std::is_sorted(a.gpus.begin(), a.gpus.end()) ||
                        std::adjacent_find(a.gpus.begin(), a.gpus.end()) != a.gpus.end() || a.gpus.front() < 0 ||
                        a.gpus.back() >= config_.num_gpus) {
                        throw ProgramError("rank " + std::to_string(r) + ": invalid GPU set in hold");
                    }
                    if (a.duration < SimTime{}) {
                        throw ProgramError("rank " + std::to_string(r) + ": negative compute duration");
                    }
                    st.hold = std::move(a);
                    st.mode = Mode::WaitingHold;
                    waiting_.insert(r);
                } else if constexpr (std::is_same_v<A, LocalWork>) {
                    if (a.duration < SimTime{}) {
                        throw ProgramError("rank " + std::to_string(r) + ": negative local work duration");
                    }
                    st.work_ref = a.subbatch;
                    record(r, now, EventKind::LocalWorkStart, {}, {}, a.subbatch);
                    st.mode = Mode::Busy;
                    st.pending = Pending::LocalWorkDone;
                    wakes_.push({now + a.duration, r});
                } else {
                    record(r, now, EventKind::RankFinished);
                    st.mode = Mode::Finished;
                }
            },
            std::move(action));
    }

    void grant_holds(SimTime now) {
        for (auto it = waiting_.begin(); it != waiting_.end();) {
            const int r = *it;
            auto& st = ranks_[r];
            const bool all_free =
                std::none_of(st.hold.gpus.begin(), st.hold.gpus.end(), [&](int g) { return gpu_busy_[g]; });
            if (!all_free) {
                ++it;
                continue;
            }
            for (int g : st.hold.gpus) {
                gpu_busy_[g] = true;
            }
            record(r, now, EventKind::HoldAcquired, st.hold.gpus, {}, st.hold.subbatch);
            record(r, now, EventKind::ComputeStart, st.hold.gpus, {}, st.hold.subbatch);
            st.mode = Mode::Busy;
            st.pending = Pending::ComputeDone;
            wakes_.push({now + st.hold.duration, r});
            it = waiting_.erase(it);
        }
    }

    ClusterConfig config_;
    SimTime latency_;
    std::vector<RankState> ranks_;
    std::vector<bool> gpu_busy_;
    std::set<int> waiting_;
    std::map<std::pair<int, int>, std::deque<Message>> channels_;
    std::priority_queue<Wake, std::vector<Wake>, std::greater<>> wakes_;
};

} // namespace

Trace run_programs(std::vector<RankProgram> programs, const ClusterConfig& config) {
    if (static_cast<int>(programs.size()) != config.num_ranks) {
        throw std::invalid_argument("run_programs: expected " + std::to_string(config.num_ranks) +
                                    " programs, got " + std::to_string(programs.size()));
    }
    for (const auto& p : programs) {
        if (!p.valid()) {
            throw std::invalid_argument("run_programs: empty rank program");
        }
    }
    if (config.num_gpus < 1) {
        throw std::invalid_argument("run_programs: num_gpus must be >= 1");
    }
    return Kernel(std::move(programs), config).run();
}

} // namespace gsched
