#pragma once
// Bi-objective evolutionary machinery (minimization): dominance, fast
// non-dominated sorting, crowding distance, elitist selection, hypervolume,
// convergence test and Latin hypercube sampling.

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mftd::moea {

struct ObjectivePoint {
  std::array<double, 2> j{};
  int id = 0;
};

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b);

// Fronts as lists of indices into `points`, best first. Indices inside a
// front are ascending.
std::vector<std::vector<int>> non_dominated_sort(std::span<const ObjectivePoint> points);

// Rank (0 = first front) per input index.
std::vector<int> front_ranks(const std::vector<std::vector<int>>& fronts, std::size_t count);

// Crowding distance of each member of `front` (same order as `front`).
// Objective ties are ordered by sample id.
std::vector<double> crowding_distance(std::span<const ObjectivePoint> points,
                                      std::span<const int> front);

// Indices of the selected points, ascending. Fronts are admitted whole in
// rank order; the first front that does not fit is admitted by descending
// crowding distance. The first front is never truncated: when it exceeds
// min_offspring or target_size it is returned whole.
std::vector<int> select(std::span<const ObjectivePoint> points, int target_size, int min_offspring);

// Area dominated by the points and bounded by `reference`. Points that do
// not strictly dominate the reference contribute nothing.
double hypervolume_2d(std::span<const ObjectivePoint> points, std::array<double, 2> reference);

// True when the relative change over each of the last `window` steps is
// below epsilon. Needs at least window + 1 entries.
bool converged(std::span<const double> hv_history, double epsilon, int window);

// Relative change between consecutive entries (0 for the first).
double relative_change(double previous, double current);

// n points in the box given by `ranges`; each dimension has exactly one
// point per stratum of width 1/n.
std::vector<std::vector<double>> latin_hypercube(int n,
                                                 std::span<const std::pair<double, double>> ranges,
                                                 std::uint64_t seed);

}  // namespace mftd::moea
