#include "gsched/batch_runner.hpp"

#include "gsched/schedulers.hpp"

namespace gsched {

CellResult run_cell(const Cell& cell, bool verify) {
    CellResult out;
    try {
        const Trace trace = simulate(cell.workload, cell.config);
        if (verify) {
            out.checks = verify_trace(trace);
        }
        out.metrics = compute_metrics(trace);
    } catch (const DeadlockError& e) {
        out.deadlocked = true;
        out.error = e.what();
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

std::vector<CellResult> run_cells(std::span<const Cell> cells, bool verify, Execution exec) {
    std::vector<CellResult> results(cells.size());
    const auto count = static_cast<std::int64_t>(cells.size());
    if (exec == Execution::serial) {
        for (std::int64_t i = 0; i < count; ++i) {
            results[i] = run_cell(cells[i], verify);
        }
        return results;
    }
    // Cell costs vary by orders of magnitude, hence dynamic scheduling.
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
        results[i] = run_cell(cells[i], verify);
    }
    return results;
}

} // namespace gsched
