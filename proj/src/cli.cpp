#include "gsched/cli.hpp"

#include "gsched/calibrate.hpp"
#include "gsched/config_io.hpp"
#include "gsched/schedulers.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <ostream>
#include <sstream>

namespace gsched::cli {

using nlohmann::json;

WorkloadSource WorkloadSource::parse(std::string_view text) {
    WorkloadSource src;
    constexpr std::string_view prefix = "synthetic:";
    if (!text.starts_with(prefix)) {
        if (text.empty()) {
            throw std::invalid_argument("empty workload source");
        }
        src.file = std::filesystem::path(std::string(text));
        return src;
    }
    text.remove_prefix(prefix.size());
    const auto colon = text.find(':');
    const auto total = text.substr(0, colon);
    auto [p, ec] = std::from_chars(total.data(), total.data() + total.size(), src.total_pairs);
    if (total.empty() || ec != std::errc{} || p != total.data() + total.size() || src.total_pairs < 0) {
        throw std::invalid_argument("bad synthetic total '" + std::string(total) + "'");
    }
    if (colon != std::string_view::npos) {
        const auto skew = text.substr(colon + 1);
        auto [q, ec2] = std::from_chars(skew.data(), skew.data() + skew.size(), src.skew);
        if (skew.empty() || ec2 != std::errc{} || q != skew.data() + skew.size() || !(src.skew >= 0.0) ||
            src.skew > 1.0) {
            throw std::invalid_argument("bad synthetic skew '" + std::string(skew) + "' (expected 0..1)");
        }
    }
    return src;
}

Workload WorkloadSource::materialize(int n, std::uint64_t seed) const {
    if (file) {
        return load_workload_file(*file, n);
    }
    return generate_synthetic_workload(total_pairs, n, skew, seed);
}

namespace {

template <typename T>
std::vector<T> int_list(const json& doc, const char* key) {
    const auto& v = doc.at(key);
    if (!v.is_array()) {
        throw std::invalid_argument(std::string("sweep spec: '") + key + "' must be an array");
    }
    std::vector<T> out;
    for (const auto& x : v) {
        if (!x.is_number_integer() || x.get<std::int64_t>() < 1) {
            throw std::invalid_argument(std::string("sweep spec: '") + key + "' entries must be integers >= 1");
        }
        out.push_back(x.get<T>());
    }
    if (out.empty()) {
        throw std::invalid_argument(std::string("sweep spec: '") + key + "' must not be empty");
    }
    return out;
}

} // namespace

SweepSpec parse_sweep_spec(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("sweep spec: ") + e.what());
    }
    if (!doc.is_object()) {
        throw std::invalid_argument("sweep spec must be a JSON object");
    }
    static const std::set<std::string> allowed{"schedulers", "ranks",  "gpus", "workload",
                                               "repetitions", "output", "base"};
    for (const auto& [key, _] : doc.items()) {
        if (!allowed.contains(key)) {
            throw std::invalid_argument("sweep spec: unknown key '" + key + "'");
        }
    }
    SweepSpec spec;
    if (!doc.contains("schedulers") || !doc["schedulers"].is_array() || doc["schedulers"].empty()) {
        throw std::invalid_argument("sweep spec: 'schedulers' must be a non-empty array");
    }
    for (const auto& s : doc["schedulers"]) {
        const auto parsed = s.is_string() ? parse_scheduler(s.get<std::string>()) : std::nullopt;
        if (!parsed) {
            throw std::invalid_argument("sweep spec: unknown scheduler " + s.dump());
        }
        spec.schedulers.push_back(*parsed);
    }
    if (doc.contains("ranks")) spec.ranks = int_list<int>(doc, "ranks");
    if (doc.contains("gpus")) spec.gpus = int_list<int>(doc, "gpus");
    if (doc.contains("repetitions")) {
        const auto& r = doc["repetitions"];
        if (!r.is_number_integer() || r.get<std::int64_t>() < 1) {
            throw std::invalid_argument("sweep spec: 'repetitions' must be an integer >= 1");
        }
        spec.repetitions = r.get<int>();
    }
    if (doc.contains("workload")) {
        if (!doc["workload"].is_string()) {
            throw std::invalid_argument("sweep spec: 'workload' must be a string");
        }
        spec.workload = WorkloadSource::parse(doc["workload"].get<std::string>());
    }
    if (doc.contains("output")) {
        spec.output = std::filesystem::path(doc["output"].get<std::string>());
    }
    if (doc.contains("base")) {
        for (const auto* key : {"num_ranks", "num_gpus", "scheduler"}) {
            if (doc["base"].contains(key)) {
                throw std::invalid_argument(std::string("sweep spec: 'base.") + key + "' is set by the sweep grid");
            }
        }
        try {
            spec.base = parse_config(doc["base"].dump());
        } catch (const ConfigError& e) {
            throw std::invalid_argument(std::string("sweep spec: base: ") + e.what());
        }
    }
    return spec;
}

std::string SweepCellId::to_string() const {
    return std::string(scheduler_name(scheduler)) + " n=" + std::to_string(n) + " m=" + std::to_string(m) +
           " rep=" + std::to_string(rep);
}

std::vector<std::pair<SweepCellId, Cell>> sweep_cells(const SweepSpec& spec) {
    std::vector<std::pair<SweepCellId, Cell>> cells;
    for (auto s : spec.schedulers) {
        for (int n : spec.ranks) {
            if (s == Scheduler::baseline && n != 1) {
                continue;
            }
            for (int m : spec.gpus) {
                for (int rep = 0; rep < spec.repetitions; ++rep) {
                    Cell cell;
                    cell.config = spec.base;
                    cell.config.scheduler = s;
                    cell.config.num_ranks = n;
                    cell.config.num_gpus = m;
                    cell.config.seed = spec.base.seed + static_cast<std::uint64_t>(rep);
                    cell.workload = spec.workload.materialize(n, cell.config.seed);
                    cells.emplace_back(SweepCellId{s, n, m, rep}, std::move(cell));
                }
            }
        }
    }
    return cells;
}

std::string run_sweep(const SweepSpec& spec, Execution exec) {
    const auto ids_and_cells = sweep_cells(spec);
    std::vector<Cell> cells;
    for (const auto& [_, c] : ids_and_cells) {
        cells.push_back(c);
    }
    const auto results = run_cells(cells, true, exec);
    std::string csv(metrics_csv_header);
    csv += '\n';
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& id = ids_and_cells[i].first;
        const auto& r = results[i];
        if (!r.metrics) {
            throw SweepFailure("cell " + id.to_string() + ": " + r.error, r.deadlocked);
        }
        if (!r.checks.ok()) {
            throw SweepFailure("cell " + id.to_string() + " failed verification: " + r.checks.violations.front(),
                               false);
        }
        csv += format_metrics_line(*r.metrics, cells[i].config);
        csv += '\n';
    }
    return csv;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

struct Inputs {
    ClusterConfig config;
    Workload workload;
};

Inputs load_inputs(const std::string& config_path, const std::string& workload_text,
                   const std::optional<std::uint64_t>& seed) {
    Inputs in;
    in.config = load_config(config_path);
    if (seed) {
        in.config.seed = *seed;
    }
    in.workload = WorkloadSource::parse(workload_text).materialize(in.config.num_ranks, in.config.seed);
    return in;
}

int cmd_run(const std::string& config_path, const std::string& workload, const std::string& out_path,
            const std::optional<std::uint64_t>& seed, std::ostream& out, std::ostream& err) {
    Inputs in;
    try {
        in = load_inputs(config_path, workload, seed);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return bad_input;
    }
    Trace trace;
    try {
        trace = simulate(in.workload, in.config);
    } catch (const DeadlockError& e) {
        err << "error: " << e.what() << "\n";
        return deadlock;
    }
    write_file(out_path, export_trace(trace));
    const auto checks = verify_trace(trace);
    out << format_metrics_line(compute_metrics(trace), in.config) << "\n";
    if (!checks.ok()) {
        err << "verification failed:\n" << checks.summary();
        return violation;
    }
    return ok;
}

int cmd_verify(const std::string& trace_path, const std::string& config_path, const std::string& workload,
               const std::optional<std::uint64_t>& seed, std::ostream& out, std::ostream& err) {
    Trace trace;
    try {
        auto in = load_inputs(config_path, workload, seed);
        trace.config = in.config;
        trace.workload = std::move(in.workload);
        trace.events = parse_trace_events(read_file(trace_path));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return bad_input;
    }
    try {
        const auto checks = verify_trace(trace);
        if (!checks.ok()) {
            out << checks.summary();
            return violation;
        }
        out << "ok\n" << format_metrics_line(compute_metrics(trace), trace.config) << "\n";
    } catch (const MalformedTrace& e) {
        out << "malformed trace: " << e.what() << "\n";
        return violation;
    }
    return ok;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_path, const std::optional<std::uint64_t>& seed,
              bool serial, std::ostream& out, std::ostream& err) {
    SweepSpec spec;
    try {
        spec = parse_sweep_spec(read_file(spec_path));
        if (seed) {
            spec.base.seed = *seed;
        }
        if (!out_path.empty()) {
            spec.output = out_path;
        }
        sweep_cells(spec); // surfaces workload errors as bad input
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return bad_input;
    }
    std::string csv;
    try {
        csv = run_sweep(spec, serial ? Execution::serial : Execution::parallel);
    } catch (const SweepFailure& e) {
        err << "error: " << e.what() << "\n";
        return e.deadlocked() ? deadlock : violation;
    }
    if (spec.output) {
        write_file(*spec.output, csv);
    } else {
        out << csv;
    }
    return ok;
}

int cmd_calibrate(const std::string& points_path, const std::string& out_path, bool serial, std::ostream& out,
                  std::ostream& err) {
    std::vector<MeasuredPoint> points;
    try {
        points = load_points(points_path);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return bad_input;
    }
    CalibrationSettings settings;
    settings.execution = serial ? Execution::serial : Execution::parallel;
    Calibration fit;
    try {
        fit = calibrate(points, settings);
    } catch (const CalibrationError& e) {
        err << "error: " << e.what() << "\n";
        return bad_input;
    }
    if (!fit.converged) {
        err << "warning: search budget exhausted; reporting the best parameters found\n";
    }
    const auto params = cost_to_array(fit.cost);
    out << std::setprecision(9);
    for (std::size_t j = 0; j < num_cost_params; ++j) {
        out << cost_param_names[j] << " = " << params[j] << "\n";
    }
    out << "objective = " << fit.objective << " (" << fit.evaluations << " evaluations)\n";
    out << "label,scheduler,n,m,sim_total,sim_alignment,sim_difference,rel_total,rel_alignment,rel_difference\n";
    out << std::fixed;
    for (const auto& r : fit.rows) {
        out << r.point.label << ',' << scheduler_name(r.point.scheduler) << ',' << r.point.n << ',' << r.point.m
            << ',' << r.simulated.total_time.to_string() << ',' << r.simulated.alignment_time.to_string() << ','
            << r.simulated.difference_time.to_string() << ',' << std::setprecision(4) << r.total_rel << ','
            << r.alignment_rel << ',' << r.difference_rel << "\n";
    }
    write_file(out_path, cost_to_json(fit.cost));
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Virtual-time simulator for multi-process GPU scheduling protocols", "gsched"};
    app.require_subcommand(1);

    std::string config_path;
    std::string workload = "synthetic:1000000";
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::string positional;
    bool serial = false;

    auto* run_cmd = app.add_subcommand("run", "Simulate one configuration, write its trace, print its metrics line");
    run_cmd->add_option("--config", config_path, "Cluster config (JSON)")->required();
    run_cmd->add_option("--workload", workload, "Workload file or synthetic:TOTAL[:SKEW]");
    run_cmd->add_option("--out", out_path, "Trace output path (default trace.tsv)");
    run_cmd->add_option("--seed", seed, "Override the config seed");

    auto* sweep_cmd = app.add_subcommand("sweep", "Run a scaling sweep and write a metrics CSV");
    sweep_cmd->add_option("spec", positional, "Sweep spec (JSON)");
    sweep_cmd->add_option("--config", positional, "Sweep spec (alias of the positional argument)");
    sweep_cmd->add_option("--out", out_path, "CSV output path (default: spec 'output', else stdout)");
    sweep_cmd->add_option("--seed", seed, "Override the base seed");
    sweep_cmd->add_flag("--serial", serial, "Run cells on the serial reference path");

    auto* verify_cmd = app.add_subcommand("verify", "Check an exported trace against every invariant");
    verify_cmd->add_option("trace", positional, "Trace file")->required();
    verify_cmd->add_option("--config", config_path, "Config the trace was produced with")->required();
    verify_cmd->add_option("--workload", workload, "Workload the trace was produced with");
    verify_cmd->add_option("--seed", seed, "Override the config seed");

    auto* cal_cmd = app.add_subcommand("calibrate", "Fit cost-model parameters to measured runs");
    cal_cmd->add_option("points", positional, "Measured points CSV")->required();
    cal_cmd->add_option("--out", out_path, "Config fragment output path (default calibrated.json)");
    cal_cmd->add_flag("--serial", serial, "Evaluate candidates on the serial reference path");

    std::vector<const char*> argv{"gsched"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return bad_input;
    }

    try {
        if (run_cmd->parsed()) {
            return cmd_run(config_path, workload, out_path.empty() ? "trace.tsv" : out_path, seed, out, err);
        }
        if (sweep_cmd->parsed()) {
            if (positional.empty()) {
                err << "error: sweep needs a spec file\n";
                return bad_input;
            }
            return cmd_sweep(positional, out_path, seed, serial, out, err);
        }
        if (verify_cmd->parsed()) {
            return cmd_verify(positional, config_path, workload, seed, out, err);
        }
        if (cal_cmd->parsed()) {
            return cmd_calibrate(positional, out_path.empty() ? "calibrated.json" : out_path, serial, out, err);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return failure;
    }
    return bad_input;
}

} // namespace gsched::cli
