#include "gsched/batch_runner.hpp"

#include <doctest.h>

#include <random>

using namespace gsched;

namespace {

std::vector<Cell> random_cells(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Scheduler kinds[] = {Scheduler::one2all, Scheduler::one2one, Scheduler::opt_one2one};
    std::vector<Cell> cells;
    for (int i = 0; i < count; ++i) {
        Cell cell;
        cell.config.scheduler = kinds[rng() % 3];
        cell.config.num_ranks = 1 + static_cast<int>(rng() % 12);
        cell.config.num_gpus = 1 + static_cast<int>(rng() % 4);
        cell.config.subbatches_per_batch = 1 + static_cast<int>(rng() % 5);
        cell.config.batch_size = 50;
        cell.workload = generate_synthetic_workload(static_cast<std::int64_t>(rng() % 5000),
                                                    cell.config.num_ranks, 0.5, rng());
        cells.push_back(std::move(cell));
    }
    return cells;
}

} // namespace

TEST_CASE("parallel results equal the serial reference") {
    const auto cells = random_cells(64, 21);
    const auto serial = run_cells(cells, true, Execution::serial);
    const auto parallel = run_cells(cells, true, Execution::parallel);
    REQUIRE(serial.size() == cells.size());
    REQUIRE(parallel.size() == cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CAPTURE(i);
        REQUIRE(serial[i].ok());
        REQUIRE(parallel[i].ok());
        CHECK(format_metrics_line(*serial[i].metrics, cells[i].config) ==
              format_metrics_line(*parallel[i].metrics, cells[i].config));
        CHECK(serial[i].metrics->per_gpu_busy == parallel[i].metrics->per_gpu_busy);
    }
}

TEST_CASE("failures are reported per cell") {
    std::vector<Cell> cells(3);
    cells[0].workload = Workload{{10}};
    cells[1].workload = Workload{{10, 10}}; // baseline with two ranks of work, one in the config
    cells[2].config.num_ranks = 2;          // invalid: baseline requires one rank
    cells[2].workload = Workload{{1, 1}};
    for (auto exec : {Execution::serial, Execution::parallel}) {
        const auto r = run_cells(cells, true, exec);
        CHECK(r[0].ok());
        CHECK_FALSE(r[1].ok());
        CHECK_FALSE(r[1].deadlocked);
        CHECK(r[1].error.find("workload has 2 ranks") != std::string::npos);
        CHECK_FALSE(r[2].ok());
        CHECK(r[2].error.find("baseline") != std::string::npos);
    }
}

TEST_CASE("verification is optional") {
    Cell cell;
    cell.workload = Workload{{100}};
    const auto r = run_cell(cell, false);
    CHECK(r.ok());
    CHECK(r.checks.violations.empty());
}

TEST_CASE("empty input") {
    CHECK(run_cells({}, true, Execution::parallel).empty());
}
