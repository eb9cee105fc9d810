#pragma once

#include "gsched/verify.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsched {

// One independent simulation: a sweep cell, a calibration row, a property case.
struct Cell {
    Workload workload;
    ClusterConfig config;
};

struct CellResult {
    std::optional<Metrics> metrics;
    CheckResult checks;  // empty unless verification was requested
    bool deadlocked = false;
    std::string error;   // deadlock or other failure; metrics unset

    bool ok() const { return metrics.has_value() && checks.ok(); }
};

enum class Execution { serial, parallel };

// Simulates every cell (optionally verifying its trace) and returns results
// in input order. The parallel path spreads cells over OpenMP threads; both
// paths produce identical results, and the serial one is kept as the
// reference for tests and benchmarks.
std::vector<CellResult> run_cells(std::span<const Cell> cells, bool verify, Execution exec);

CellResult run_cell(const Cell& cell, bool verify);

} // namespace gsched
