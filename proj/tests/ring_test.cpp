#include "gsched/ring.hpp"

#include <doctest.h>

#include <random>

using namespace gsched;

namespace {

using Counts = std::vector<int>;

// Literal transcription of the while-loops: step, wrap, stop on self.
std::optional<int> literal_walk(int rank, int batch, const Counts& counts, int dir) {
    const int n = static_cast<int>(counts.size());
    int r = ((rank + dir) % n + n) % n;
    while (r != rank) {
        if (batch <= counts[r]) {
            return r;
        }
        r = ((r + dir) % n + n) % n;
    }
    return std::nullopt;
}

struct TurnRef {
    int rank;
    Step step;
};

// Turns in execution order, enumerated straight from the tallies.
std::vector<TurnRef> enumerate_turns(const std::vector<int>& members, const std::vector<RankTally>& tallies, int iters) {
    std::vector<TurnRef> out;
    int max_batch = 0;
    for (const auto& t : tallies) {
        max_batch = std::max(max_batch, t.batches);
    }
    for (int b = 1; b <= max_batch; ++b) {
        for (int it = 1; it <= iters; ++it) {
            for (std::size_t i = 0; i < members.size(); ++i) {
                const auto& t = tallies[i];
                const int last = b < t.batches ? iters : (b == t.batches ? t.last_iterations : 0);
                if (it <= last) {
                    out.push_back({members[i], Step{b, it}});
                }
            }
        }
    }
    return out;
}

} // namespace

TEST_CASE("left predecessor examples") {
    CHECK(left_predecessor(2, 1, Counts{3, 3, 3, 3}) == 1);
    CHECK(left_predecessor(0, 1, Counts{3, 3, 3, 3}) == 3);
    CHECK(left_predecessor(2, 3, Counts{3, 2, 3, 1}) == 0);
    CHECK(left_predecessor(1, 5, Counts{2, 5, 3}) == std::nullopt);
    CHECK(left_predecessor(0, 1, Counts{4}) == std::nullopt);
}

TEST_CASE("right successor examples") {
    CHECK(right_successor(2, 1, Counts{3, 3, 3, 3}) == 3);
    CHECK(right_successor(3, 1, Counts{3, 3, 3, 3}) == 0);
    CHECK(right_successor(0, 3, Counts{3, 2, 3, 1}) == 2);
}

TEST_CASE("walks agree with the literal loops") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 3000; ++i) {
        const int n = 1 + static_cast<int>(rng() % 10);
        Counts counts(n);
        for (auto& c : counts) c = static_cast<int>(rng() % 5);
        const int rank = static_cast<int>(rng() % n);
        const int batch = 1 + static_cast<int>(rng() % 5);
        CHECK(left_predecessor(rank, batch, counts) == literal_walk(rank, batch, counts, -1));
        CHECK(right_successor(rank, batch, counts) == literal_walk(rank, batch, counts, +1));
    }
}

TEST_CASE("pipelines") {
    CHECK(pipeline_for_rank(5, 4) == 1);
    CHECK(pipeline_for_rank(0, 4) == 0);
    CHECK(pipeline_for_rank(7, 3) == 1);
    static_assert(pipeline_for_rank(9, 4) == 1);
    CHECK(pipeline_members(0, 4, 2) == std::vector<int>{0, 2});
    CHECK(pipeline_members(1, 4, 2) == std::vector<int>{1, 3});
    CHECK(pipeline_members(3, 3, 4).empty());
}

TEST_CASE("turn ring with equal tallies is the plain ring walk") {
    // Constant participation: every handoff is the literal left/right search.
    for (int n = 1; n <= 6; ++n) {
        std::vector<int> members(n);
        for (int r = 0; r < n; ++r) members[r] = r;
        const TurnRing ring(members, std::vector<RankTally>(n, RankTally{3, 2}), 2);
        const Counts counts(n, 3);
        for (int r = 0; r < n; ++r) {
            for (const Step s : {Step{1, 2}, Step{2, 1}, Step{2, 2}, Step{3, 1}}) {
                CHECK(ring.gate(r, s) == left_predecessor(r, s.batch, counts));
            }
            for (const Step s : {Step{1, 1}, Step{1, 2}, Step{2, 1}, Step{2, 2}, Step{3, 1}}) {
                CHECK(ring.signal_target(r, s) == right_successor(r, s.batch, counts));
            }
        }
        // Nobody waits at the very first turn; the last turn still sends the
        // wrap-around signal.
        CHECK(ring.gate(0, Step{1, 1}) == std::nullopt);
        CHECK(ring.signal_target(n - 1, Step{3, 2}) == right_successor(n - 1, 3, counts));
    }
}

TEST_CASE("uneven tallies: the closing rank hands over to the next level") {
    // counts [2,1] with one turn per batch: r0.b1, r1.b1, r0.b2.
    const TurnRing ring({0, 1}, {RankTally{2, 1}, RankTally{1, 1}}, 1);
    CHECK(ring.gate(0, Step{1, 1}) == std::nullopt);
    CHECK(ring.signal_target(0, Step{1, 1}) == 1);
    CHECK(ring.gate(1, Step{1, 1}) == 0);
    CHECK(ring.signal_target(1, Step{1, 1}) == 0);
    CHECK(ring.gate(0, Step{2, 1}) == 1);
    CHECK(ring.signal_target(0, Step{2, 1}) == std::nullopt);
    // The literal search at batch 2 skips r1.
    CHECK(left_predecessor(0, 2, Counts{2, 1}) == std::nullopt);
}

TEST_CASE("ring with [4,4,3] does not leave a signal dangling") {
    const TurnRing ring({0, 1, 2}, {RankTally{4, 1}, RankTally{4, 1}, RankTally{3, 1}}, 1);
    // r2 closes level 3 and must hand to r0 at level 4, which r0 waits for.
    CHECK(ring.signal_target(2, Step{3, 1}) == 0);
    CHECK(ring.gate(0, Step{4, 1}) == 2);
    // r1 closes level 4; its wrap-around signal skips r2 and goes unconsumed.
    CHECK(ring.signal_target(1, Step{4, 1}) == 0);
}

TEST_CASE("property: gates and signals pair up along the turn sequence") {
    std::mt19937_64 rng(77);
    for (int iter = 0; iter < 2000; ++iter) {
        const int size = 1 + static_cast<int>(rng() % 8);
        const int stride = 1 + static_cast<int>(rng() % 3);
        const int iters = 1 + static_cast<int>(rng() % 4);
        std::vector<int> members;
        std::vector<RankTally> tallies;
        for (int i = 0; i < size; ++i) {
            members.push_back(static_cast<int>(rng() % stride) + i * stride);
            const int b = static_cast<int>(rng() % 5);
            tallies.push_back({b, b == 0 ? 0 : 1 + static_cast<int>(rng() % iters)});
        }
        const TurnRing ring(members, tallies, iters);
        const auto turns = enumerate_turns(members, tallies, iters);
        for (std::size_t k = 0; k < turns.size(); ++k) {
            const auto& t = turns[k];
            const auto want_gate = k == 0 || turns[k - 1].rank == t.rank ? std::nullopt
                                                                        : std::optional{turns[k - 1].rank};
            std::optional<int> want_signal;
            if (k + 1 < turns.size()) {
                if (turns[k + 1].rank != t.rank) {
                    want_signal = turns[k + 1].rank;
                }
            } else {
                // closing signal: the plain walk at the final level
                const int idx = ring.index_of(t.rank);
                for (int d = 1; d < size; ++d) {
                    const int j = (idx + d) % size;
                    if (ring.participates(j, t.step)) {
                        want_signal = members[j];
                        break;
                    }
                }
            }
            CHECK(ring.participates(ring.index_of(t.rank), t.step));
            CHECK(ring.gate(t.rank, t.step) == want_gate);
            CHECK(ring.signal_target(t.rank, t.step) == want_signal);
        }
    }
}

TEST_CASE("turn ring rejects inconsistent input") {
    CHECK_THROWS(TurnRing({0, 1}, {RankTally{}}, 1));
    CHECK_THROWS(TurnRing({}, {}, 1));
    CHECK_THROWS(TurnRing({1, 0}, {RankTally{}, RankTally{}}, 1));
    const TurnRing ring({0, 2}, {RankTally{1, 1}, RankTally{1, 1}}, 1);
    CHECK_THROWS(ring.index_of(1));
}
