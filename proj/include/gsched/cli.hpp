#pragma once

#include "gsched/batch_runner.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gsched::cli {

enum ExitCode : int {
    ok = 0,
    failure = 1,
    bad_input = 2,  // usage, config, workload or spec errors
    deadlock = 3,
    violation = 4,  // a trace failed verification
};

// `path` or `synthetic:TOTAL[:SKEW]`.
struct WorkloadSource {
    std::optional<std::filesystem::path> file;
    std::int64_t total_pairs = 0;
    double skew = 0.0;

    static WorkloadSource parse(std::string_view text);
    Workload materialize(int n, std::uint64_t seed) const;
};

struct SweepSpec {
    std::vector<Scheduler> schedulers;
    std::vector<int> ranks{1, 4, 9, 16, 25};
    std::vector<int> gpus{1, 2, 4};
    WorkloadSource workload = WorkloadSource::parse("synthetic:1000000");
    int repetitions = 1;
    ClusterConfig base;  // batch size, sub-batches, cost model, seed
    std::optional<std::filesystem::path> output;
};

// JSON: {"schedulers": [...], "ranks": [...], "gpus": [...],
// "workload": "synthetic:1000000", "repetitions": 1, "output": "sweep.csv",
// "base": {<config keys except num_ranks/num_gpus/scheduler>}}.
SweepSpec parse_sweep_spec(std::string_view json_text);

struct SweepCellId {
    Scheduler scheduler;
    int n;
    int m;
    int rep;
    std::string to_string() const;
};

// Cells in (scheduler, n, m, rep) order. Baseline only applies to n = 1 and
// is skipped for larger rank counts.
std::vector<std::pair<SweepCellId, Cell>> sweep_cells(const SweepSpec& spec);

class SweepFailure : public std::runtime_error {
public:
    SweepFailure(const std::string& what, bool deadlocked) : std::runtime_error(what), deadlocked_(deadlocked) {}
    bool deadlocked() const { return deadlocked_; }

private:
    bool deadlocked_;
};

// Runs a sweep and returns the CSV text (header included). Throws
// SweepFailure naming the first cell that deadlocked or failed verification.
std::string run_sweep(const SweepSpec& spec, Execution exec);

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace gsched::cli
