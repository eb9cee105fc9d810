#pragma once

#include "gsched/batch_runner.hpp"

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gsched {

// One measured run. Points files are CSV with the header
//
//     label,scheduler,n,m,c,pairs,total,alignment
//
// where `pairs` is the total alignment-pair count (split evenly over the n
// ranks) and times are seconds. An optional trailing `difference` column is
// checked against total - alignment and otherwise ignored.
struct MeasuredPoint {
    std::string label;
    Scheduler scheduler = Scheduler::one2all;
    int n = 1;
    int m = 1;
    int c = 1;
    std::int64_t pairs = 0;
    double total = 0.0;
    double alignment = 0.0;

    double difference() const { return total - alignment; }
};

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<MeasuredPoint> parse_points(std::string_view csv);
std::vector<MeasuredPoint> load_points(const std::filesystem::path& path);

inline constexpr std::size_t num_cost_params = 5;
// gpu_alpha, gpu_beta, cpu_gap, msg_latency, preamble
inline constexpr std::array<std::string_view, num_cost_params> cost_param_names{
    "gpu_alpha", "gpu_beta", "cpu_gap", "msg_latency", "preamble"};

std::array<double, num_cost_params> cost_to_array(const CostModel& c);
CostModel cost_from_array(const std::array<double, num_cost_params>& v);

struct ParamGrid {
    double lo = 0.0;
    double hi = 1.0;
    double step = 0.01; // finest grid resolution
};

struct CalibrationSettings {
    std::array<ParamGrid, num_cost_params> grid{{
        {0.0, 5.0, 0.001},     // gpu_alpha, s per sub-batch
        {0.0, 1.0e-3, 1.0e-7}, // gpu_beta, s per pair
        {0.0, 5.0, 0.001},     // cpu_gap, s
        {0.0, 5.0, 0.001},     // msg_latency, s
        {0.0, 1000.0, 0.01},   // preamble, s
    }};
    std::int64_t batch_size = 10'000;
    int max_sweeps_per_level = 60;
    Execution execution = Execution::parallel;
};

struct RowFit {
    MeasuredPoint point;
    Metrics simulated;
    double alignment_rel = 0.0;  // (simulated - measured) / measured
    double difference_rel = 0.0;
    double total_rel = 0.0;
};

struct Calibration {
    CostModel cost;
    double objective = 0.0;  // sum of squared alignment and difference residuals
    std::vector<RowFit> rows;
    bool converged = false;
    int evaluations = 0;
};

// The cell simulated for a measured point under `cost`.
Cell cell_for_point(const MeasuredPoint& p, const CostModel& cost, std::int64_t batch_size);

std::vector<RowFit> evaluate_fit(std::span<const MeasuredPoint> points, const CostModel& cost,
                                 std::int64_t batch_size, Execution exec);

// Bounded multi-resolution coordinate search: each level scans every
// parameter over +-4 grid steps around the incumbent, falls back to one step
// in every diagonal direction when a sweep stalls, and halves the step once
// neither helps, down to the finest resolution. The search
// is deterministic (ties keep the smaller move). Throws CalibrationError when
// there are fewer points than parameters; a fit that exhausts its sweep budget
// returns converged = false with the best point found.
Calibration calibrate(std::span<const MeasuredPoint> points, const CalibrationSettings& settings = {});

} // namespace gsched
