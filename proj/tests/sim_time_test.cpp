#include "gsched/sim_time.hpp"

#include <doctest.h>

#include <random>
#include <stdexcept>

using gsched::SimTime;

TEST_CASE("seconds round to the nearest microsecond") {
    CHECK(SimTime::from_seconds(0.0125).micros() == 12'500);
    CHECK(SimTime::from_seconds(1e-7).micros() == 0);
    CHECK(SimTime::from_seconds(6e-7).micros() == 1);
    CHECK_THROWS_AS(SimTime::from_seconds(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("fixed six-digit formatting") {
    CHECK(SimTime{}.to_string() == "0.000000");
    CHECK(SimTime::from_micros(5'500'000).to_string() == "5.500000");
    CHECK(SimTime::from_micros(1).to_string() == "0.000001");
    CHECK(SimTime::from_micros(-1'250'000).to_string() == "-1.250000");
}

TEST_CASE("parse accepts short fractions and rejects junk") {
    CHECK(SimTime::parse("2.5").micros() == 2'500'000);
    CHECK(SimTime::parse("3").micros() == 3'000'000);
    CHECK_THROWS(SimTime::parse(""));
    CHECK_THROWS(SimTime::parse("1.0000001"));
    CHECK_THROWS(SimTime::parse("1.x"));
    CHECK_THROWS(SimTime::parse("abc"));
}

TEST_CASE("format/parse round trip") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const auto t = SimTime::from_micros(static_cast<std::int64_t>(rng() % 10'000'000'000ULL) - 5'000'000'000LL);
        CHECK(SimTime::parse(t.to_string()) == t);
    }
}
