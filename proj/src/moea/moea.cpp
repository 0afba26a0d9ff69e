#include "mftd/moea.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mftd/error.hpp"

namespace mftd::moea {

bool dominates(const ObjectivePoint& a, const ObjectivePoint& b) {
  bool strict = false;
  for (std::size_t k = 0; k < a.j.size(); ++k) {
    if (a.j[k] > b.j[k]) return false;
    if (a.j[k] < b.j[k]) strict = true;
  }
  return strict;
}

std::vector<std::vector<int>> non_dominated_sort(std::span<const ObjectivePoint> points) {
  const int n = static_cast<int>(points.size());
  std::vector<std::vector<int>> dominated(static_cast<std::size_t>(n));
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> fronts;
  std::vector<int> current;
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(points[p], points[q])) {
        dominated[p].push_back(q);
      } else if (dominates(points[q], points[p])) {
        ++count[p];
      }
    }
    if (count[p] == 0) current.push_back(p);
  }
  while (!current.empty()) {
    std::vector<int> next;
    for (int p : current) {
      for (int q : dominated[p]) {
        if (--count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<int> front_ranks(const std::vector<std::vector<int>>& fronts, std::size_t count) {
  std::vector<int> rank(count, -1);
  for (std::size_t f = 0; f < fronts.size(); ++f) {
    for (int i : fronts[f]) rank[static_cast<std::size_t>(i)] = static_cast<int>(f);
  }
  return rank;
}

std::vector<double> crowding_distance(std::span<const ObjectivePoint> points,
                                      std::span<const int> front) {
  const std::size_t m = front.size();
  std::vector<double> dist(m, 0.0);
  if (m == 0) return dist;
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (m <= 2) {
    std::fill(dist.begin(), dist.end(), inf);
    return dist;
  }
  std::vector<std::size_t> order(m);
  for (std::size_t k = 0; k < 2; ++k) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const ObjectivePoint& pa = points[front[a]];
      const ObjectivePoint& pb = points[front[b]];
      if (pa.j[k] != pb.j[k]) return pa.j[k] < pb.j[k];
      return pa.id < pb.id;
    });
    const double lo = points[front[order.front()]].j[k];
    const double hi = points[front[order.back()]].j[k];
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    const double range = hi - lo;
    if (!(range > 0.0)) continue;
    for (std::size_t r = 1; r + 1 < m; ++r) {
      const double gap = points[front[order[r + 1]]].j[k] - points[front[order[r - 1]]].j[k];
      dist[order[r]] += gap / range;
    }
  }
  return dist;
}

std::vector<int> select(std::span<const ObjectivePoint> points, int target_size, int min_offspring) {
  const auto fronts = non_dominated_sort(points);
  std::vector<int> out;
  if (fronts.empty()) return out;
  const int first = static_cast<int>(fronts.front().size());
  if (first > min_offspring || first >= target_size) {
    out = fronts.front();
    std::sort(out.begin(), out.end());
    return out;
  }
  for (const auto& front : fronts) {
    const int room = target_size - static_cast<int>(out.size());
    if (room <= 0) break;
    if (static_cast<int>(front.size()) <= room) {
      out.insert(out.end(), front.begin(), front.end());
      continue;
    }
    const auto dist = crowding_distance(points, front);
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (dist[a] != dist[b]) return dist[a] > dist[b];
      return points[front[a]].id < points[front[b]].id;
    });
    for (int r = 0; r < room; ++r) out.push_back(front[order[static_cast<std::size_t>(r)]]);
    break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

double hypervolume_2d(std::span<const ObjectivePoint> points, std::array<double, 2> reference) {
  std::vector<std::array<double, 2>> pts;
  for (const auto& p : points) {
    if (p.j[0] < reference[0] && p.j[1] < reference[1]) pts.push_back(p.j);
  }
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  double level = reference[1];
  for (const auto& p : pts) {
    if (p[1] < level) {
      area += (reference[0] - p[0]) * (level - p[1]);
      level = p[1];
    }
  }
  return area;
}

double relative_change(double previous, double current) {
  constexpr double tiny = 1e-300;
  return std::abs(current - previous) / std::max(std::abs(current), tiny);
}

bool converged(std::span<const double> hv, double epsilon, int window) {
  if (window < 1) throw ConfigError("converged: window must be >= 1");
  if (hv.size() < static_cast<std::size_t>(window) + 1) return false;
  for (std::size_t i = hv.size() - static_cast<std::size_t>(window); i < hv.size(); ++i) {
    if (!(relative_change(hv[i - 1], hv[i]) < epsilon)) return false;
  }
  return true;
}

std::vector<std::vector<double>> latin_hypercube(int n,
                                                 std::span<const std::pair<double, double>> ranges,
                                                 std::uint64_t seed) {
  if (n < 1) throw ConfigError("latin_hypercube: n must be >= 1");
  if (ranges.empty()) throw ConfigError("latin_hypercube: no dimensions");
  for (const auto& [lo, hi] : ranges) {
    if (!(hi >= lo)) throw ConfigError("latin_hypercube: range must be ordered");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n), std::vector<double>(ranges.size()));
  std::vector<int> strata(static_cast<std::size_t>(n));
  for (std::size_t d = 0; d < ranges.size(); ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    const auto [lo, hi] = ranges[d];
    for (int s = 0; s < n; ++s) {
      const double t = (strata[static_cast<std::size_t>(s)] + unit(rng)) / n;
      out[static_cast<std::size_t>(s)][d] = lo + std::min(t, std::nextafter(1.0, 0.0)) * (hi - lo);
    }
  }
  return out;
}

}  // namespace mftd::moea
