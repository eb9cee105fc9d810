#include "gsched/calibrate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace gsched {

namespace {

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
            field.remove_suffix(1);
        out.emplace_back(field);
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

template <typename T>
T number(const std::string& s, int line, const char* col) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
        throw CalibrationError("line " + std::to_string(line) + ": bad " + col + " '" + s + "'");
    }
    return v;
}

} // namespace

std::vector<MeasuredPoint> parse_points(std::string_view csv) {
    std::vector<MeasuredPoint> points;
    int line_no = 0;
    bool header = false;
    std::size_t start = 0;
    while (start < csv.size()) {
        const auto eol = csv.find('\n', start);
        const auto line = csv.substr(start, eol == std::string_view::npos ? std::string_view::npos : eol - start);
        start = eol == std::string_view::npos ? csv.size() : eol + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos || line.front() == '#') {
            continue;
        }
        const auto f = split_csv(line);
        if (!header) {
            const std::vector<std::string> want{"label", "scheduler", "n", "m", "c", "pairs", "total", "alignment"};
            auto got = f;
            if (got.size() == want.size() + 1 && got.back() == "difference") {
                got.pop_back();
            }
            if (got != want) {
                throw CalibrationError("line " + std::to_string(line_no) +
                                       ": expected header label,scheduler,n,m,c,pairs,total,alignment[,difference]");
            }
            header = true;
            continue;
        }
        if (f.size() != 8 && f.size() != 9) {
            throw CalibrationError("line " + std::to_string(line_no) + ": expected 8 or 9 fields");
        }
        MeasuredPoint p;
        p.label = f[0];
        const auto s = parse_scheduler(f[1]);
        if (!s) {
            throw CalibrationError("line " + std::to_string(line_no) + ": unknown scheduler '" + f[1] + "'");
        }
        p.scheduler = *s;
        p.n = number<int>(f[2], line_no, "n");
        p.m = number<int>(f[3], line_no, "m");
        p.c = number<int>(f[4], line_no, "c");
        p.pairs = number<std::int64_t>(f[5], line_no, "pairs");
        p.total = number<double>(f[6], line_no, "total");
        p.alignment = number<double>(f[7], line_no, "alignment");
        if (p.n < 1 || p.m < 1 || p.c < 1 || p.pairs < 0 || p.total < 0 || p.alignment < 0 ||
            p.alignment > p.total) {
            throw CalibrationError("line " + std::to_string(line_no) + ": values out of range");
        }
        if (p.scheduler == Scheduler::baseline && p.n != 1) {
            throw CalibrationError("line " + std::to_string(line_no) + ": baseline requires n = 1");
        }
        if (f.size() == 9) {
            const double diff = number<double>(f[8], line_no, "difference");
            if (std::abs(diff - p.difference()) > 0.015) {
                throw CalibrationError("line " + std::to_string(line_no) + ": difference != total - alignment");
            }
        }
        points.push_back(std::move(p));
    }
    if (!header) {
        throw CalibrationError("points file has no header");
    }
    return points;
}

std::vector<MeasuredPoint> load_points(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw CalibrationError("cannot open points file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_points(ss.str());
}

std::array<double, num_cost_params> cost_to_array(const CostModel& c) {
    return {c.gpu_alpha, c.gpu_beta, c.cpu_gap, c.msg_latency, c.preamble};
}

CostModel cost_from_array(const std::array<double, num_cost_params>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
}

Cell cell_for_point(const MeasuredPoint& p, const CostModel& cost, std::int64_t batch_size) {
    Cell cell;
    cell.workload = equal_split(p.pairs, p.n);
    cell.config.num_ranks = p.n;
    cell.config.num_gpus = p.m;
    cell.config.subbatches_per_batch = p.c;
    cell.config.batch_size = batch_size;
    cell.config.scheduler = p.scheduler;
    cell.config.cost = cost;
    return cell;
}

namespace {

double rel(double simulated, double measured) {
    return measured != 0.0 ? (simulated - measured) / measured : simulated;
}

double objective_of(const std::vector<RowFit>& rows) {
    double sum = 0.0;
    for (const auto& r : rows) {
        sum += r.alignment_rel * r.alignment_rel + r.difference_rel * r.difference_rel;
    }
    return sum;
}

std::vector<Cell> cells_for(std::span<const MeasuredPoint> points, const CostModel& cost, std::int64_t batch_size) {
    std::vector<Cell> cells;
    cells.reserve(points.size());
    for (const auto& p : points) {
        cells.push_back(cell_for_point(p, cost, batch_size));
    }
    return cells;
}

std::vector<RowFit> rows_from(std::span<const MeasuredPoint> points, std::span<const CellResult> results) {
    std::vector<RowFit> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!results[i].metrics) {
            throw CalibrationError("simulation of point '" + points[i].label + "' failed: " + results[i].error);
        }
        RowFit r;
        r.point = points[i];
        r.simulated = *results[i].metrics;
        r.alignment_rel = rel(r.simulated.alignment_time.seconds(), points[i].alignment);
        r.difference_rel = rel(r.simulated.difference_time.seconds(), points[i].difference());
        r.total_rel = rel(r.simulated.total_time.seconds(), points[i].total);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace

std::vector<RowFit> evaluate_fit(std::span<const MeasuredPoint> points, const CostModel& cost,
                                 std::int64_t batch_size, Execution exec) {
    const auto cells = cells_for(points, cost, batch_size);
    const auto results = run_cells(cells, false, exec);
    return rows_from(points, results);
}

Calibration calibrate(std::span<const MeasuredPoint> points, const CalibrationSettings& settings) {
    if (points.size() < num_cost_params) {
        throw CalibrationError("under-determined: " + std::to_string(points.size()) + " measured points for " +
                               std::to_string(num_cost_params) + " free parameters");
    }
    const auto& grid = settings.grid;
    for (const auto& g : grid) {
        if (!(g.step > 0.0) || !(g.hi >= g.lo)) {
            throw CalibrationError("invalid calibration grid");
        }
    }

    // Positions are integer multiples of each parameter's finest step above lo.
    using Pos = std::array<std::int64_t, num_cost_params>;
    std::array<std::int64_t, num_cost_params> max_pos{};
    int levels = 0;
    for (std::size_t j = 0; j < num_cost_params; ++j) {
        max_pos[j] = static_cast<std::int64_t>(std::floor((grid[j].hi - grid[j].lo) / grid[j].step + 1e-9));
        int l = 0;
        while ((std::int64_t{1} << (l + 1)) * 8 <= max_pos[j]) {
            ++l;
        }
        levels = std::max(levels, l);
    }
    const auto to_cost = [&](const Pos& pos) {
        std::array<double, num_cost_params> v{};
        for (std::size_t j = 0; j < num_cost_params; ++j) {
            v[j] = grid[j].lo + static_cast<double>(pos[j]) * grid[j].step;
        }
        return cost_from_array(v);
    };

    // Candidates of one coordinate are evaluated together so the parallel
    // runner sees rows x candidates independent cells.
    Calibration out;
    const auto evaluate = [&](const std::vector<Pos>& candidates) {
        std::vector<Cell> cells;
        for (const auto& pos : candidates) {
            auto batch = cells_for(points, to_cost(pos), settings.batch_size);
            cells.insert(cells.end(), batch.begin(), batch.end());
        }
        const auto results = run_cells(cells, false, settings.execution);
        std::vector<double> objectives;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            const std::span<const CellResult> slice(results.data() + k * points.size(), points.size());
            bool failed = false;
            for (const auto& r : slice) {
                failed = failed || !r.metrics;
            }
            objectives.push_back(failed ? std::numeric_limits<double>::infinity()
                                        : objective_of(rows_from(points, slice)));
        }
        out.evaluations += static_cast<int>(candidates.size());
        return objectives;
    };

    Pos best{};
    for (std::size_t j = 0; j < num_cost_params; ++j) {
        best[j] = max_pos[j] / 2;
    }
    double best_obj = evaluate({best}).front();

    const auto stride_of = [&](std::size_t j, int level) {
        return std::min<std::int64_t>(std::int64_t{1} << level, std::max<std::int64_t>(max_pos[j] / 8, 1));
    };

    // Coordinate scans cannot follow a valley that runs diagonally between
    // parameters; one step in each of the 3^5 - 1 directions can.
    const auto pattern_move = [&](int level) {
        std::vector<Pos> candidates;
        for (int code = 1; code < 243; ++code) {
            Pos cand = best;
            bool inside = true;
            for (std::size_t j = 0, rest = static_cast<std::size_t>(code); j < num_cost_params; ++j, rest /= 3) {
                const std::int64_t dir = static_cast<std::int64_t>(rest % 3) - 1;
                cand[j] += dir * stride_of(j, level);
                inside = inside && cand[j] >= 0 && cand[j] <= max_pos[j];
            }
            if (inside) {
                candidates.push_back(cand);
            }
        }
        const auto objs = evaluate(candidates);
        const auto it = std::min_element(objs.begin(), objs.end());
        if (it == objs.end() || !(*it < best_obj * (1.0 - 1e-12))) {
            return false;
        }
        best = candidates[static_cast<std::size_t>(it - objs.begin())];
        best_obj = *it;
        return true;
    };

    bool converged = true;
    for (int level = levels; level >= 0; --level) {
        bool improved = true;
        int sweeps = 0;
        while (improved) {
            if (sweeps++ == settings.max_sweeps_per_level) {
                converged = false;
                break;
            }
            improved = false;
            for (std::size_t j = 0; j < num_cost_params; ++j) {
                const std::int64_t stride = stride_of(j, level);
                std::vector<Pos> candidates;
                std::vector<std::int64_t> moves;
                for (std::int64_t k : {-1, 1, -2, 2, -3, 3, -4, 4}) {
                    const std::int64_t p = best[j] + k * stride;
                    if (p < 0 || p > max_pos[j]) {
                        continue;
                    }
                    Pos cand = best;
                    cand[j] = p;
                    candidates.push_back(cand);
                    moves.push_back(k);
                }
                if (candidates.empty()) {
                    continue;
                }
                const auto objs = evaluate(candidates);
                std::size_t pick = objs.size();
                double pick_obj = best_obj;
                for (std::size_t k = 0; k < objs.size(); ++k) {
                    // Strict improvement only; candidates are ordered by |move|.
                    if (objs[k] < pick_obj * (1.0 - 1e-12)) {
                        pick = k;
                        pick_obj = objs[k];
                    }
                }
                if (pick < objs.size()) {
                    best = candidates[pick];
                    best_obj = pick_obj;
                    improved = true;
                }
            }
            if (!improved) {
                improved = pattern_move(level);
            }
        }
    }

    out.cost = to_cost(best);
    out.rows = evaluate_fit(points, out.cost, settings.batch_size, settings.execution);
    out.objective = objective_of(out.rows);
    out.converged = converged;
    return out;
}

} // namespace gsched
