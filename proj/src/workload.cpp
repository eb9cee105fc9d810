#include "gsched/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace gsched {

std::string_view scheduler_name(Scheduler s) {
    switch (s) {
    case Scheduler::baseline: return "baseline";
    case Scheduler::one2all: return "one2all";
    case Scheduler::one2one: return "one2one";
    case Scheduler::opt_one2one: return "opt_one2one";
    }
    return "?";
}

std::optional<Scheduler> parse_scheduler(std::string_view name) {
    for (auto s : {Scheduler::baseline, Scheduler::one2all, Scheduler::one2one, Scheduler::opt_one2one}) {
        if (scheduler_name(s) == name) {
            return s;
        }
    }
    return std::nullopt;
}

void validate(const ClusterConfig& config) {
    const auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (config.num_ranks < 1) fail("num_ranks must be >= 1");
    if (config.num_gpus < 1) fail("num_gpus must be >= 1");
    if (config.batch_size < 1) fail("batch_size must be >= 1");
    if (config.subbatches_per_batch < 1) fail("subbatches_per_batch must be >= 1");
    if (config.scheduler == Scheduler::baseline && config.num_ranks != 1) {
        fail("baseline scheduler requires num_ranks = 1");
    }
    const auto& c = config.cost;
    for (auto [name, v] : {std::pair{"gpu_alpha", c.gpu_alpha}, {"gpu_beta", c.gpu_beta}, {"cpu_gap", c.cpu_gap},
                           {"msg_latency", c.msg_latency}, {"preamble", c.preamble}}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            fail(std::string("cost.") + name + " must be a finite value >= 0");
        }
    }
}

std::int64_t Workload::total() const {
    return std::accumulate(pairs_per_rank.begin(), pairs_per_rank.end(), std::int64_t{0});
}

std::string SubBatchRef::to_string() const {
    return std::to_string(rank) + "." + std::to_string(batch) + "." + std::to_string(sub);
}

std::int64_t batch_count(std::int64_t pairs, std::int64_t batch_size) {
    return pairs <= 0 ? 0 : (pairs + batch_size - 1) / batch_size;
}

std::vector<std::vector<SubBatch>> partition_by_batch(std::int64_t pairs, std::int64_t batch_size, int c,
                                                      int rank) {
    std::vector<std::vector<SubBatch>> batches;
    const std::int64_t nbatches = batch_count(pairs, batch_size);
    batches.reserve(static_cast<std::size_t>(nbatches));
    for (std::int64_t b = 0; b < nbatches; ++b) {
        const std::int64_t in_batch = std::min(batch_size, pairs - b * batch_size);
        const std::int64_t base = in_batch / c;
        const std::int64_t extra = in_batch % c;
        auto& subs = batches.emplace_back();
        for (int s = 0; s < c; ++s) {
            const std::int64_t size = base + (s < extra ? 1 : 0);
            if (size == 0) {
                break; // sizes are non-increasing, so every later one is empty too
            }
            subs.push_back({rank, static_cast<int>(b + 1), s + 1, size});
        }
    }
    return batches;
}

std::vector<SubBatch> partition_rank_workload(std::int64_t pairs, std::int64_t batch_size, int c, int rank) {
    std::vector<SubBatch> flat;
    for (auto& batch : partition_by_batch(pairs, batch_size, c, rank)) {
        flat.insert(flat.end(), batch.begin(), batch.end());
    }
    return flat;
}

std::vector<int> batch_counts(const Workload& workload, const ClusterConfig& config) {
    std::vector<int> counts;
    counts.reserve(workload.pairs_per_rank.size());
    for (auto p : workload.pairs_per_rank) {
        counts.push_back(static_cast<int>(batch_count(p, config.batch_size)));
    }
    return counts;
}

Workload equal_split(std::int64_t total_pairs, int n) {
    Workload w;
    w.pairs_per_rank.assign(static_cast<std::size_t>(n), total_pairs / n);
    for (std::int64_t r = 0; r < total_pairs % n; ++r) {
        ++w.pairs_per_rank[static_cast<std::size_t>(r)];
    }
    return w;
}

Workload generate_synthetic_workload(std::int64_t total_pairs, int n, double skew, std::uint64_t seed) {
    if (n < 1 || total_pairs < 0 || !(skew >= 0.0 && skew <= 1.0)) {
        throw std::invalid_argument("synthetic workload needs n >= 1, total >= 0 and skew in [0, 1]");
    }
    if (skew == 0.0) {
        return equal_split(total_pairs, n);
    }
    // Raw engine bits rather than std::uniform_real_distribution, whose
    // output is implementation-defined.
    std::mt19937_64 rng(seed);
    std::vector<double> weight(static_cast<std::size_t>(n));
    for (auto& w : weight) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        w = 1.0 + skew * (2.0 * u - 1.0);
    }
    const double sum = std::accumulate(weight.begin(), weight.end(), 0.0);

    // Largest-remainder apportionment; ties go to the lower rank.
    Workload out;
    out.pairs_per_rank.resize(weight.size());
    std::vector<std::pair<double, int>> remainders;
    std::int64_t assigned = 0;
    for (int r = 0; r < n; ++r) {
        const double exact = sum > 0.0 ? static_cast<double>(total_pairs) * weight[r] / sum
                                       : static_cast<double>(total_pairs) / n;
        const auto floor = static_cast<std::int64_t>(std::floor(exact));
        out.pairs_per_rank[r] = floor;
        assigned += floor;
        remainders.emplace_back(exact - static_cast<double>(floor), r);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::int64_t i = 0; assigned < total_pairs; ++i, ++assigned) {
        ++out.pairs_per_rank[remainders[static_cast<std::size_t>(i % n)].second];
    }
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::int64_t parse_int(std::string_view s, int line, const char* what) {
    s = trim(s);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
        throw WorkloadFileError("malformed " + std::string(what) + " '" + std::string(s) + "'", line);
    }
    return v;
}

} // namespace

Workload parse_workload(std::string_view text, int n) {
    std::vector<std::optional<std::int64_t>> seen(static_cast<std::size_t>(n));
    int line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        const std::string_view raw = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            throw WorkloadFileError("malformed line, expected 'rank,pairs'", line_no);
        }
        const auto rank = parse_int(line.substr(0, comma), line_no, "rank");
        const auto pairs = parse_int(line.substr(comma + 1), line_no, "pair count");
        if (pairs < 0) {
            throw WorkloadFileError("negative count " + std::to_string(pairs), line_no);
        }
        if (rank < 0 || rank >= n) {
            throw WorkloadFileError("rank " + std::to_string(rank) + " out of range [0, " + std::to_string(n) + ")",
                                    line_no);
        }
        if (seen[rank]) {
            throw WorkloadFileError("duplicate rank " + std::to_string(rank), line_no);
        }
        seen[rank] = pairs;
    }
    Workload w;
    for (int r = 0; r < n; ++r) {
        if (!seen[r]) {
            throw WorkloadFileError("missing rank " + std::to_string(r), 0);
        }
        w.pairs_per_rank.push_back(*seen[r]);
    }
    return w;
}

Workload load_workload_file(const std::filesystem::path& path, int n) {
    std::ifstream in(path);
    if (!in) {
        throw WorkloadFileError("cannot open workload file " + path.string(), 0);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_workload(ss.str(), n);
}

std::string format_workload(const Workload& workload) {
    std::string out;
    for (int r = 0; r < workload.num_ranks(); ++r) {
        out += std::to_string(r) + "," + std::to_string(workload.pairs_per_rank[r]) + "\n";
    }
    return out;
}

} // namespace gsched
