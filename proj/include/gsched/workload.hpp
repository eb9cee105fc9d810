#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gsched {

enum class Scheduler { baseline, one2all, one2one, opt_one2one };

std::string_view scheduler_name(Scheduler s);
// Exact lowercase names only.
std::optional<Scheduler> parse_scheduler(std::string_view name);

// All values in seconds (gpu_beta in seconds per pair).
struct CostModel {
    double gpu_alpha = 0.05;
    double gpu_beta = 2.0e-5;
    double cpu_gap = 0.01;
    double msg_latency = 0.05;
    // Non-alignment pipeline time of a single-rank run; every rank is
    // charged preamble / num_ranks before it starts scheduling.
    double preamble = 60.0;

    friend bool operator==(const CostModel&, const CostModel&) = default;
};

struct ClusterConfig {
    int num_ranks = 1;
    int num_gpus = 4;
    std::int64_t batch_size = 10'000;
    int subbatches_per_batch = 4;
    CostModel cost{};
    Scheduler scheduler = Scheduler::baseline;
    std::uint64_t seed = 0;

    friend bool operator==(const ClusterConfig&, const ClusterConfig&) = default;
};

// Throws std::invalid_argument naming the first violated invariant.
void validate(const ClusterConfig& config);

struct Workload {
    std::vector<std::int64_t> pairs_per_rank;

    int num_ranks() const { return static_cast<int>(pairs_per_rank.size()); }
    std::int64_t total() const;
    friend bool operator==(const Workload&, const Workload&) = default;
};

struct SubBatchRef {
    int rank = 0;
    int batch = 0; // 1-based
    int sub = 0;   // 1-based

    friend auto operator<=>(const SubBatchRef&, const SubBatchRef&) = default;
    std::string to_string() const; // "rank.batch.sub"
};

struct SubBatch {
    int rank = 0;
    int batch_idx = 0;
    int sub_idx = 0;
    std::int64_t pairs = 0;

    SubBatchRef ref() const { return {rank, batch_idx, sub_idx}; }
    friend bool operator==(const SubBatch&, const SubBatch&) = default;
};

// Batches of batch_size pairs (last one possibly short), each split into c
// near-equal sub-batches, larger first, empty ones dropped.
std::vector<SubBatch> partition_rank_workload(std::int64_t pairs, std::int64_t batch_size, int c,
                                              int rank = 0);

// Same partition grouped by batch: result[k] holds the sub-batches of batch k+1.
std::vector<std::vector<SubBatch>> partition_by_batch(std::int64_t pairs, std::int64_t batch_size,
                                                      int c, int rank = 0);

std::int64_t batch_count(std::int64_t pairs, std::int64_t batch_size);
std::vector<int> batch_counts(const Workload& workload, const ClusterConfig& config);

Workload equal_split(std::int64_t total_pairs, int n);
Workload generate_synthetic_workload(std::int64_t total_pairs, int n, double skew, std::uint64_t seed);

class WorkloadFileError : public std::runtime_error {
public:
    WorkloadFileError(const std::string& what, int line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// `rank,pairs` per line, every rank in [0, n) exactly once, any order.
Workload parse_workload(std::string_view text, int n);
Workload load_workload_file(const std::filesystem::path& path, int n);
std::string format_workload(const Workload& workload);

} // namespace gsched
