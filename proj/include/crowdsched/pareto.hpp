#pragma once

#include "crowdsched/common.hpp"
#include "crowdsched/random.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace crowdsched {

using Point = Objectives<double>;

/// Minimization: no worse in every objective and strictly better in one.
template <typename DerivedA, typename DerivedB>
auto dominates(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) -> bool
{
    return (a.array() <= b.array()).all() && (a.array() < b.array()).any();
}

/// Fronts F1, F2, ... of point indices. With violations, a smaller total
/// violation wins outright and feasible points (violation 0) compare by objectives.
auto fast_nondominated_sort(std::span<const Point> points, std::span<const double> violations = {})
    -> std::vector<std::vector<std::size_t>>;

/// Distance per member of `front` (same order). Boundary members are infinite;
/// objectives with zero range contribute nothing.
auto crowding_distance(std::span<const Point> points, std::span<const std::size_t> front) -> std::vector<double>;

struct Ranking {
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> rank;  // 0 for the first front
    std::vector<double> crowding;
};

auto rank_population(std::span<const Point> points, std::span<const double> violations = {}) -> Ranking;

/// Crowded comparison: negative when a wins, positive when b wins, 0 on a full tie.
auto crowded_compare(const Ranking& ranking, std::size_t a, std::size_t b) -> int;

/// Best of `size` uniform draws (with replacement); full ties resolved uniformly.
auto tournament(const Ranking& ranking, std::size_t size, Rng& rng) -> std::size_t;

auto select_parents(const Ranking& ranking, std::size_t count, std::size_t tournament_size, Rng& rng)
    -> std::vector<std::size_t>;

/// Indices kept by NSGA-II survivor selection: whole fronts in order, the last
/// partial front by decreasing crowding distance (lower index on ties).
auto survivors(const Ranking& ranking, std::size_t count) -> std::vector<std::size_t>;

/// Volume dominated by `points` and bounded by `reference` (minimization).
/// Points not strictly better than the reference in every objective add nothing.
auto hypervolume(std::span<const Point> points, const Point& reference) -> double;

} // namespace crowdsched
