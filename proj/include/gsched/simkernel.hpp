#pragma once

#include "gsched/sim_time.hpp"
#include "gsched/workload.hpp"

#include <coroutine>
#include <cstdint>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace gsched {

// Handoff signals carry the constant tag {1} plus the sender's last computed
// sub-batch; batch-count exchange messages carry a count vector and no step.
struct Payload {
    Payload() = default;
    Payload(std::vector<std::int64_t> v, std::optional<SubBatchRef> s = std::nullopt)
        : values(std::move(v)), step(s) {}

    std::vector<std::int64_t> values;
    std::optional<SubBatchRef> step;

    friend bool operator==(const Payload&, const Payload&) = default;
};

struct Message {
    int src = 0;
    int dst = 0;
    Payload payload;
    SimTime send_time;
    SimTime deliver_time;
};

// Rank program actions. The constructors are deliberate: GCC 11 destroys
// aggregate temporaries inside a co_await expression twice.
struct Send {
    Send(int d, Payload p = {}) : dst(d), payload(std::move(p)) {}
    int dst;
    Payload payload;
};
struct Recv {
    int src;
};
struct HoldAndCompute {
    HoldAndCompute(std::vector<int> g, SimTime d, std::optional<SubBatchRef> sb = std::nullopt)
        : gpus(std::move(g)), duration(d), subbatch(sb) {}
    std::vector<int> gpus; // sorted, unique
    SimTime duration;
    std::optional<SubBatchRef> subbatch;
};
struct LocalWork {
    explicit LocalWork(SimTime d, std::optional<SubBatchRef> sb = std::nullopt) : duration(d), subbatch(sb) {}
    SimTime duration;
    std::optional<SubBatchRef> subbatch;
};
struct Finish {};

using Action = std::variant<Send, Recv, HoldAndCompute, LocalWork, Finish>;

// A rank's sequential program, written as a coroutine:
//
//     RankProgram pingpong(int peer) {
//         co_await Send{peer, {}};
//         Message m = co_await Recv{peer};
//     }
//
// Each co_await hands one action to the kernel and resumes once it has
// completed; returning from the coroutine is the Finish action.
class RankProgram {
public:
    struct promise_type {
        Action pending = Finish{};
        std::optional<Message> delivered;
        std::exception_ptr error;

        RankProgram get_return_object() {
            return RankProgram{std::coroutine_handle<promise_type>::from_promise(*this)};
        }
        std::suspend_always initial_suspend() noexcept { return {}; }
        std::suspend_always final_suspend() noexcept { return {}; }
        void return_void() {}
        void unhandled_exception() { error = std::current_exception(); }

        struct VoidAwaiter {
            bool await_ready() const noexcept { return false; }
            void await_suspend(std::coroutine_handle<>) const noexcept {}
            void await_resume() const noexcept {}
        };
        struct RecvAwaiter {
            promise_type& p;
            bool await_ready() const noexcept { return false; }
            void await_suspend(std::coroutine_handle<>) const noexcept {}
            Message await_resume() const { return std::move(*p.delivered); }
        };

        VoidAwaiter await_transform(Send&& a) {
            pending = std::move(a);
            return {};
        }
        VoidAwaiter await_transform(HoldAndCompute&& a) {
            pending = std::move(a);
            return {};
        }
        VoidAwaiter await_transform(LocalWork&& a) {
            pending = std::move(a);
            return {};
        }
        RecvAwaiter await_transform(Recv a) {
            pending = a;
            return {*this};
        }
    };

    RankProgram() = default;
    RankProgram(RankProgram&& other) noexcept : handle_(std::exchange(other.handle_, {})) {}
    RankProgram& operator=(RankProgram&& other) noexcept {
        if (this != &other) {
            reset();
            handle_ = std::exchange(other.handle_, {});
        }
        return *this;
    }
    RankProgram(const RankProgram&) = delete;
    RankProgram& operator=(const RankProgram&) = delete;
    ~RankProgram() { reset(); }

    bool valid() const { return static_cast<bool>(handle_); }

    // Resumes the program, passing the message if its last action was a
    // Recv, and returns the next action. Finish once the body returns.
    Action step(std::optional<Message> delivered = std::nullopt);

private:
    explicit RankProgram(std::coroutine_handle<promise_type> h) : handle_(h) {}
    void reset() {
        if (handle_) {
            handle_.destroy();
            handle_ = {};
        }
    }

    std::coroutine_handle<promise_type> handle_;
};

// Runs `actions` in order, ignoring received payloads.
RankProgram scripted_program(std::vector<Action> actions);

enum class EventKind {
    SendPosted,
    RecvCompleted,
    HoldAcquired,
    ComputeStart,
    ComputeEnd,
    HoldReleased,
    LocalWorkStart,
    LocalWorkEnd,
    RankFinished,
};

std::string_view event_kind_name(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view name);

struct TraceEvent {
    SimTime time;
    int rank = 0;
    EventKind kind = EventKind::RankFinished;
    std::vector<int> gpus;            // hold/compute events
    std::optional<int> peer;          // message events: destination or source
    std::optional<SubBatchRef> subbatch;
    std::int64_t seq = 0;             // per-rank sequence number

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct Trace {
    std::vector<TraceEvent> events; // ordered by (time, rank, seq)
    ClusterConfig config;
    Workload workload;
};

class DeadlockError : public std::runtime_error {
public:
    // (waiter, awaited) edges of the wait-for graph
    using Edge = std::pair<int, int>;
    DeadlockError(std::vector<Edge> wait_for, SimTime at);

    const std::vector<Edge>& wait_for() const { return wait_for_; }
    SimTime time() const { return time_; }

private:
    std::vector<Edge> wait_for_;
    SimTime time_;
};

// Bad action from a rank program (self-send, unknown rank or GPU, ...).
class ProgramError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Executes one program per rank over a virtual clock. Sends are buffered,
// receives block and match on source (FIFO per channel), holds acquire their
// whole GPU set atomically. Simultaneous events are ordered by rank, and GPU
// grants at one instant go to the lowest waiting rank first, so the trace is
// a deterministic function of the inputs. Throws DeadlockError if every
// unfinished rank is blocked.
Trace run_programs(std::vector<RankProgram> programs, const ClusterConfig& config);

} // namespace gsched
