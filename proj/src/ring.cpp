#include "gsched/ring.hpp"

#include <algorithm>
#include <stdexcept>

namespace gsched {

namespace {

template <typename Pred>
std::optional<int> ring_walk(int start, int size, int direction, Pred active) {
    int i = start;
    while (true) {
        i = ((i + direction) % size + size) % size;
        if (i == start) {
            return std::nullopt;
        }
        if (active(i)) {
            return i;
        }
    }
}

} // namespace

std::optional<int> left_predecessor(int rank, int batch, std::span<const int> batch_counts) {
    return ring_walk(rank, static_cast<int>(batch_counts.size()), -1,
                     [&](int r) { return batch <= batch_counts[r]; });
}

std::optional<int> right_successor(int rank, int batch, std::span<const int> batch_counts) {
    return ring_walk(rank, static_cast<int>(batch_counts.size()), +1,
                     [&](int r) { return batch <= batch_counts[r]; });
}

std::vector<int> pipeline_members(int pipeline, int n, int m) {
    std::vector<int> members;
    for (int r = pipeline; r < n; r += m) {
        members.push_back(r);
    }
    return members;
}

TurnRing::TurnRing(std::vector<int> members, std::vector<RankTally> tallies, int iterations_per_batch)
    : members_(std::move(members)), tallies_(std::move(tallies)), iterations_(iterations_per_batch) {
    if (members_.size() != tallies_.size() || members_.empty() || iterations_ < 1 ||
        !std::is_sorted(members_.begin(), members_.end())) {
        throw std::invalid_argument("TurnRing: inconsistent members/tallies");
    }
}

int TurnRing::index_of(int rank) const {
    const auto it = std::lower_bound(members_.begin(), members_.end(), rank);
    if (it == members_.end() || *it != rank) {
        throw std::invalid_argument("rank " + std::to_string(rank) + " is not a ring member");
    }
    return static_cast<int>(it - members_.begin());
}

bool TurnRing::participates(int index, Step s) const {
    const auto& t = tallies_[index];
    if (s.batch < t.batches) {
        return s.iteration <= iterations_;
    }
    return s.batch == t.batches && s.iteration <= t.last_iterations;
}

std::optional<Step> TurnRing::next(Step s) const {
    Step n = s.iteration < iterations_ ? Step{s.batch, s.iteration + 1} : Step{s.batch + 1, 1};
    return lowest_at(n) ? std::optional{n} : std::nullopt;
}

std::optional<Step> TurnRing::prev(Step s) const {
    if (s.iteration > 1) {
        return Step{s.batch, s.iteration - 1};
    }
    if (s.batch > 1) {
        return Step{s.batch - 1, iterations_};
    }
    return std::nullopt;
}

std::optional<int> TurnRing::walk(int from_index, int direction, Step s) const {
    return ring_walk(from_index, static_cast<int>(members_.size()), direction,
                     [&](int i) { return participates(i, s); });
}

std::optional<int> TurnRing::lowest_at(Step s) const {
    for (int i = 0; i < static_cast<int>(members_.size()); ++i) {
        if (participates(i, s)) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<int> TurnRing::highest_at(Step s) const {
    for (int i = static_cast<int>(members_.size()) - 1; i >= 0; --i) {
        if (participates(i, s)) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<int> TurnRing::gate(int rank, Step s) const {
    const int self = index_of(rank);
    if (const auto left = walk(self, -1, s); left && *left < self) {
        return members_[*left];
    }
    const auto p = prev(s);
    if (!p) {
        return std::nullopt;
    }
    const auto closer = highest_at(*p);
    if (!closer || *closer == self) {
        return std::nullopt;
    }
    return members_[*closer];
}

std::optional<int> TurnRing::signal_target(int rank, Step s) const {
    const int self = index_of(rank);
    const auto right = walk(self, +1, s);
    if (right && *right > self) {
        return members_[*right];
    }
    const auto n = next(s);
    if (!n) {
        // Last turn of the ring: the plain wrap-around signal. Nobody receives
        // again, so it is never consumed.
        return right ? std::optional{members_[*right]} : std::nullopt;
    }
    const auto opener = lowest_at(*n);
    if (!opener || *opener == self) {
        return std::nullopt;
    }
    return members_[*opener];
}

} // namespace gsched
