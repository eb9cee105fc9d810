#pragma once

#include "gsched/workload.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gsched {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// JSON document with keys num_ranks, num_gpus, batch_size,
// subbatches_per_batch, scheduler, seed and a `cost` object
// {gpu_alpha, gpu_beta, cpu_gap, msg_latency, preamble}. Missing keys keep
// their defaults; unknown keys are rejected.
ClusterConfig parse_config(std::string_view json_text);
ClusterConfig load_config(const std::filesystem::path& path);

std::string config_to_json(const ClusterConfig& config);
std::string cost_to_json(const CostModel& cost);

} // namespace gsched
