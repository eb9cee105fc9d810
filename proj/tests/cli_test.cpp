#include "gsched/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace gsched;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("gsched_cli_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return path / name;
    }
    std::string read(const std::string& name) const {
        std::ifstream in(path / name);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
};

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

const char* hand_trace_config = R"({
    "num_ranks": 2, "num_gpus": 1, "batch_size": 2, "subbatches_per_batch": 2, "scheduler": "one2one",
    "cost": {"gpu_alpha": 1.0, "gpu_beta": 0.0, "cpu_gap": 0.0, "msg_latency": 0.5, "preamble": 0.0}
})";

std::vector<std::string> csv_rows(const std::string& csv) {
    std::vector<std::string> rows;
    std::istringstream in(csv);
    for (std::string line; std::getline(in, line);) {
        rows.push_back(line);
    }
    return rows;
}

std::string field(const std::string& row, int index) {
    std::istringstream in(row);
    std::string f;
    for (int i = 0; i <= index; ++i) {
        std::getline(in, f, ',');
    }
    return f;
}

} // namespace

TEST_CASE("run: baseline on a tiny workload") {
    TempDir dir;
    const auto cfg = dir.write("base.json", R"({"batch_size": 100})");
    const auto r = invoke({"run", "--config", cfg.string(), "--workload", "synthetic:250",
                           "--out", (dir.path / "t.tsv").string()});
    CHECK(r.code == cli::ok);
    CHECK(r.out.starts_with("baseline,1,4,4,"));
    CHECK(fs::exists(dir.path / "t.tsv"));
}

TEST_CASE("run: hand-trace alignment") {
    TempDir dir;
    const auto cfg = dir.write("c.json", hand_trace_config);
    const auto wl = dir.write("w.csv", "0,2\n1,2\n");
    const auto r = invoke({"run", "--config", cfg.string(), "--workload", wl.string(), "--out",
                           (dir.path / "t.tsv").string()});
    CHECK(r.code == cli::ok);
    CHECK(field(r.out, 5) == "5.500000");
}

TEST_CASE("run: bad inputs exit 2 with a diagnostic") {
    TempDir dir;
    const auto bad = dir.write("bad.json", "{\n  \"num_ranks\": 2,\n  \"cost\": {\"alpha\": 1}\n}");
    auto r = invoke({"run", "--config", bad.string()});
    CHECK(r.code == cli::bad_input);
    CHECK(r.err.find("cost.alpha") != std::string::npos);

    const auto broken = dir.write("broken.json", "{\n  \"num_ranks\": ,\n}");
    r = invoke({"run", "--config", broken.string()});
    CHECK(r.code == cli::bad_input);
    CHECK(r.err.find("line 2") != std::string::npos);

    const auto cfg = dir.write("c.json", hand_trace_config);
    const auto wl = dir.write("w.csv", "0,2\n");
    r = invoke({"run", "--config", cfg.string(), "--workload", wl.string()});
    CHECK(r.code == cli::bad_input);
    CHECK(r.err.find("missing rank 1") != std::string::npos);

    CHECK(invoke({"run", "--config", cfg.string(), "--workload", "synthetic:x"}).code == cli::bad_input);
    CHECK(invoke({"run"}).code == cli::bad_input);
    CHECK(invoke({"frobnicate"}).code == cli::bad_input);
    CHECK(invoke({}).code == cli::bad_input);
}

TEST_CASE("verify: clean trace passes, corrupted trace exits 4") {
    TempDir dir;
    const auto cfg = dir.write("c.json", hand_trace_config);
    const auto wl = dir.write("w.csv", "0,2\n1,2\n");
    const auto trace = dir.path / "t.tsv";
    REQUIRE(invoke({"run", "--config", cfg.string(), "--workload", wl.string(), "--out", trace.string()}).code ==
            cli::ok);

    auto r = invoke({"verify", trace.string(), "--config", cfg.string(), "--workload", wl.string()});
    CHECK(r.code == cli::ok);
    CHECK(r.out.starts_with("ok\none2one,2,1,2,"));

    // drop both compute events of r1.b1.s2
    std::string kept;
    for (const auto& line : csv_rows(dir.read("t.tsv"))) {
        if (line.ends_with("\t1.1.2") && line.find("Compute") != std::string::npos) {
            continue;
        }
        kept += line + "\n";
    }
    const auto bad = dir.write("bad.tsv", kept);
    r = invoke({"verify", bad.string(), "--config", cfg.string(), "--workload", wl.string()});
    CHECK(r.code == cli::violation);
    CHECK(r.out.find("missing r1.b1.s2") != std::string::npos);

    const auto junk = dir.write("junk.tsv", "not a trace\n");
    CHECK(invoke({"verify", junk.string(), "--config", cfg.string(), "--workload", wl.string()}).code ==
          cli::bad_input);
}

TEST_CASE("sweep: strong scaling rows and determinism") {
    TempDir dir;
    const auto spec = dir.write("s.json", R"({"schedulers": ["one2one"], "ranks": [1, 4], "gpus": [1],
                                              "workload": "synthetic:100000"})");
    const auto a = invoke({"sweep", spec.string()});
    REQUIRE(a.code == cli::ok);
    const auto rows = csv_rows(a.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "scheduler,n,m,c,total,alignment,difference,handoffs,exchange,max_conc");
    CHECK(std::stod(field(rows[2], 4)) < std::stod(field(rows[1], 4)));

    const auto b = invoke({"sweep", "--config", spec.string(), "--serial"});
    CHECK(b.out == a.out);

    const auto c = invoke({"sweep", spec.string(), "--out", (dir.path / "o.csv").string()});
    CHECK(c.code == cli::ok);
    CHECK(dir.read("o.csv") == a.out);
}

TEST_CASE("sweep: handoffs differ by exactly c between one2one and opt") {
    TempDir dir;
    const auto spec = dir.write("s.json", R"({"schedulers": ["one2one", "opt_one2one"], "ranks": [2], "gpus": [1],
        "workload": "synthetic:600", "base": {"batch_size": 100, "subbatches_per_batch": 4}})");
    const auto r = invoke({"sweep", spec.string()});
    REQUIRE(r.code == cli::ok);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 3);
    const long plain = std::stol(field(rows[1], 7));
    const long opt = std::stol(field(rows[2], 7));
    CHECK(opt > 0);
    CHECK(plain == 4 * opt);
}

TEST_CASE("sweep: spec validation") {
    TempDir dir;
    CHECK(invoke({"sweep", dir.write("a.json", R"({"schedulers": []})").string()}).code == cli::bad_input);
    CHECK(invoke({"sweep", dir.write("b.json", R"({"schedulers": ["one2one"], "ranks": []})").string()}).code ==
          cli::bad_input);
    CHECK(invoke({"sweep", dir.write("c.json", R"({"schedulers": ["one2one"], "ranks": [0]})").string()}).code ==
          cli::bad_input);
    CHECK(invoke({"sweep", dir.write("d.json", R"({"schedulers": ["one2one"], "extra": 1})").string()}).code ==
          cli::bad_input);
    CHECK(invoke({"sweep", dir.write("e.json", R"({"schedulers": ["one2one"], "base": {"num_ranks": 3}})")
                               .string()})
              .code == cli::bad_input);
    CHECK(invoke({"sweep"}).code == cli::bad_input);

    const auto spec = cli::parse_sweep_spec(R"({"schedulers": ["baseline", "one2all"], "ranks": [1, 4],
                                              "gpus": [2], "repetitions": 2})");
    const auto cells = cli::sweep_cells(spec);
    // baseline only at n = 1
    REQUIRE(cells.size() == 6);
    CHECK(cells[0].first.to_string() == "baseline n=1 m=2 rep=0");
    CHECK(cells[1].second.config.seed == 1);
    CHECK(cells[5].first.to_string() == "one2all n=4 m=2 rep=1");
}

TEST_CASE("calibrate: under-determined input exits 2") {
    TempDir dir;
    const auto pts = dir.write("p.csv", "label,scheduler,n,m,c,pairs,total,alignment\nx,one2all,1,4,4,1000,10,5\n");
    const auto r = invoke({"calibrate", pts.string(), "--out", (dir.path / "cal.json").string()});
    CHECK(r.code == cli::bad_input);
    CHECK(r.err.find("under-determined") != std::string::npos);
}

TEST_CASE("workload sources") {
    const auto s = cli::WorkloadSource::parse("synthetic:1000:0.25");
    CHECK(s.total_pairs == 1000);
    CHECK(s.skew == 0.25);
    CHECK(s.materialize(4, 3).total() == 1000);
    CHECK(cli::WorkloadSource::parse("w.csv").file == fs::path("w.csv"));
    CHECK_THROWS(cli::WorkloadSource::parse("synthetic:10:2"));
    CHECK_THROWS(cli::WorkloadSource::parse(""));
}
