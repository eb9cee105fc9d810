#include "gsched/config_io.hpp"

#include <doctest.h>

#include <string>

using namespace gsched;

namespace {

std::string error_of(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "no error";
}

} // namespace

TEST_CASE("empty object keeps defaults") {
    const auto cfg = parse_config("{}");
    CHECK(cfg == ClusterConfig{});
    CHECK(cfg.num_ranks == 1);
    CHECK(cfg.scheduler == Scheduler::baseline);
}

TEST_CASE("full config") {
    const auto cfg = parse_config(R"({
        "num_ranks": 16, "num_gpus": 2, "batch_size": 5000, "subbatches_per_batch": 3,
        "scheduler": "opt_one2one", "seed": 9,
        "cost": {"gpu_alpha": 0.5, "gpu_beta": 1e-4, "cpu_gap": 0.2, "msg_latency": 0.01, "preamble": 30}
    })");
    CHECK(cfg.num_ranks == 16);
    CHECK(cfg.num_gpus == 2);
    CHECK(cfg.batch_size == 5000);
    CHECK(cfg.subbatches_per_batch == 3);
    CHECK(cfg.scheduler == Scheduler::opt_one2one);
    CHECK(cfg.seed == 9);
    CHECK(cfg.cost.gpu_alpha == 0.5);
    CHECK(cfg.cost.gpu_beta == 1e-4);
    CHECK(cfg.cost.cpu_gap == 0.2);
    CHECK(cfg.cost.msg_latency == 0.01);
    CHECK(cfg.cost.preamble == 30.0);
    CHECK(parse_config(config_to_json(cfg)) == cfg);
}

TEST_CASE("partial cost keeps the other defaults") {
    const auto cfg = parse_config(R"({"cost": {"cpu_gap": 0.3}})");
    CHECK(cfg.cost.cpu_gap == 0.3);
    CHECK(cfg.cost.gpu_alpha == CostModel{}.gpu_alpha);
}

TEST_CASE("rejections") {
    CHECK(error_of(R"({"num_rank": 2})").find("unknown key 'num_rank'") != std::string::npos);
    CHECK(error_of(R"({"cost": {"alpha": 1}})").find("cost.alpha") != std::string::npos);
    CHECK(error_of(R"({"num_ranks": "two"})").find("num_ranks") != std::string::npos);
    CHECK(error_of(R"({"num_ranks": 1.5})").find("num_ranks") != std::string::npos);
    CHECK(error_of(R"({"scheduler": "round_robin"})").find("round_robin") != std::string::npos);
    CHECK(error_of(R"({"num_ranks": 2})").find("baseline") != std::string::npos);
    CHECK(error_of(R"({"num_gpus": 0})") != "no error");
    CHECK(error_of(R"({"cost": {"preamble": -1}})") != "no error");
    CHECK(error_of("[1, 2]") != "no error");
    CHECK(error_of("{\n  \"num_ranks\": ,\n}").find("line 2") != std::string::npos);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("cost fragment") {
    CostModel c;
    c.gpu_alpha = 1.25;
    c.preamble = 7.5;
    const auto cfg = parse_config(cost_to_json(c));
    CHECK(cfg.cost == c);
}
