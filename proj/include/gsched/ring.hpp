#pragma once

#include <compare>
#include <optional>
#include <span>
#include <vector>

namespace gsched {

// Ring walks over ranks 0..n-1 at one batch level. A rank r counts as
// completed when batch > batch_counts[r]. Walking left goes rank-1, rank-2,
// ... with wrap-around and returns the first uncompleted rank, or nullopt
// once the walk comes back to `rank`. right_successor walks upward.
std::optional<int> left_predecessor(int rank, int batch, std::span<const int> batch_counts);
std::optional<int> right_successor(int rank, int batch, std::span<const int> batch_counts);

// GPU (and pipeline) of a rank under the one-to-one schedulers.
constexpr int pipeline_for_rank(int rank, int num_gpus) { return rank % num_gpus; }

// Ranks r < n with r mod m == pipeline, ascending.
std::vector<int> pipeline_members(int pipeline, int n, int m);

// One turn position in a ring: turns run in (batch, iteration, rank) order.
struct Step {
    int batch = 1;
    int iteration = 1;
    friend auto operator<=>(const Step&, const Step&) = default;
};

// What each ring member announces before scheduling: how many batches it
// owns and how many turns its final batch takes.
struct RankTally {
    int batches = 0;
    int last_iterations = 0;
    friend bool operator==(const RankTally&, const RankTally&) = default;
};

// Token ring over a fixed member set. Every full batch takes
// `iterations_per_batch` turns; a member's last batch may take fewer. Within
// one step the gate and signal searches are the left/right walks above. At
// the wrap-around edge the token crosses into the neighbouring step, so the
// edge is resolved against that step's participants: a member that drops out
// at the next level never receives a signal it would not consume, and the
// first member of a level waits on whoever actually closed the previous one.
// The ring's very last turn still sends the plain wrap-around signal.
class TurnRing {
public:
    TurnRing(std::vector<int> members, std::vector<RankTally> tallies, int iterations_per_batch);

    // Index into members(); rank must be a member.
    int index_of(int rank) const;
    const std::vector<int>& members() const { return members_; }

    bool participates(int index, Step s) const;
    std::optional<Step> next(Step s) const;
    std::optional<Step> prev(Step s) const;

    // Rank whose signal `rank` must receive before its turn at s.
    std::optional<int> gate(int rank, Step s) const;
    // Rank to signal after `rank` finishes its turn at s.
    std::optional<int> signal_target(int rank, Step s) const;

private:
    std::optional<int> walk(int from_index, int direction, Step s) const;
    std::optional<int> lowest_at(Step s) const;
    std::optional<int> highest_at(Step s) const;

    std::vector<int> members_;
    std::vector<RankTally> tallies_;
    int iterations_;
};

} // namespace gsched
