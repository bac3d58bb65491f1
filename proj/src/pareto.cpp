#include "crowdsched/pareto.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace crowdsched {

namespace {

auto constrained_dominates(std::span<const Point> points, std::span<const double> violations, std::size_t a,
                           std::size_t b) -> bool
{
    if (!violations.empty()) {
        const double va = violations[a];
        const double vb = violations[b];
        if (va > 0.0 || vb > 0.0) {
            return va < vb;
        }
    }
    return dominates(points[a], points[b]);
}

auto area_2d(std::vector<Eigen::Vector2d> points, const Eigen::Vector2d& reference) -> double
{
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    double area = 0.0;
    double ceiling = reference.y();
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (points[k].y() >= ceiling) {
            continue;
        }
        // Strip from this x to the reference, lowered to this point's y.
        area += (reference.x() - points[k].x()) * (ceiling - points[k].y());
        ceiling = points[k].y();
    }
    return area;
}

} // namespace

auto fast_nondominated_sort(std::span<const Point> points, std::span<const double> violations)
    -> std::vector<std::vector<std::size_t>>
{
    const auto n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> counter(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) {
                continue;
            }
            if (constrained_dominates(points, violations, p, q)) {
                dominated[p].push_back(q);
            } else if (constrained_dominates(points, violations, q, p)) {
                ++counter[p];
            }
        }
        if (counter[p] == 0) {
            current.push_back(p);
        }
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto p : current) {
            for (auto q : dominated[p]) {
                if (--counter[q] == 0) {
                    next.push_back(q);
                }
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

auto crowding_distance(std::span<const Point> points, std::span<const std::size_t> front) -> std::vector<double>
{
    const auto m = front.size();
    std::vector<double> distance(m, 0.0);
    if (m <= 2) {
        std::fill(distance.begin(), distance.end(), std::numeric_limits<double>::infinity());
        return distance;
    }
    std::vector<std::size_t> order(m);
    for (Eigen::Index k = 0; k < Point::RowsAtCompileTime; ++k) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return points[front[a]](k) < points[front[b]](k); });
        const double lo = points[front[order.front()]](k);
        const double hi = points[front[order.back()]](k);
        distance[order.front()] = std::numeric_limits<double>::infinity();
        distance[order.back()] = std::numeric_limits<double>::infinity();
        if (hi <= lo) {
            continue;
        }
        for (std::size_t r = 1; r + 1 < m; ++r) {
            distance[order[r]] += (points[front[order[r + 1]]](k) - points[front[order[r - 1]]](k)) / (hi - lo);
        }
    }
    return distance;
}

auto rank_population(std::span<const Point> points, std::span<const double> violations) -> Ranking
{
    Ranking ranking;
    ranking.fronts = fast_nondominated_sort(points, violations);
    ranking.rank.assign(points.size(), 0);
    ranking.crowding.assign(points.size(), 0.0);
    for (std::size_t f = 0; f < ranking.fronts.size(); ++f) {
        const auto& front = ranking.fronts[f];
        const auto distance = crowding_distance(points, front);
        for (std::size_t k = 0; k < front.size(); ++k) {
            ranking.rank[front[k]] = f;
            ranking.crowding[front[k]] = distance[k];
        }
    }
    return ranking;
}

auto crowded_compare(const Ranking& ranking, std::size_t a, std::size_t b) -> int
{
    if (ranking.rank[a] != ranking.rank[b]) {
        return ranking.rank[a] < ranking.rank[b] ? -1 : 1;
    }
    if (ranking.crowding[a] != ranking.crowding[b]) {
        return ranking.crowding[a] > ranking.crowding[b] ? -1 : 1;
    }
    return 0;
}

auto tournament(const Ranking& ranking, std::size_t size, Rng& rng) -> std::size_t
{
    const auto n = ranking.rank.size();
    auto best = rng.index(n);
    std::size_t ties = 1;
    for (std::size_t k = 1; k < size; ++k) {
        const auto challenger = rng.index(n);
        const int order = crowded_compare(ranking, challenger, best);
        if (order < 0) {
            best = challenger;
            ties = 1;
        } else if (order == 0 && rng.index(++ties) == 0) {
            best = challenger;
        }
    }
    return best;
}

auto select_parents(const Ranking& ranking, std::size_t count, std::size_t tournament_size, Rng& rng)
    -> std::vector<std::size_t>
{
    std::vector<std::size_t> parents(count);
    for (auto& p : parents) {
        p = tournament(ranking, tournament_size, rng);
    }
    return parents;
}

auto survivors(const Ranking& ranking, std::size_t count) -> std::vector<std::size_t>
{
    std::vector<std::size_t> kept;
    kept.reserve(count);
    for (const auto& front : ranking.fronts) {
        if (kept.size() + front.size() <= count) {
            kept.insert(kept.end(), front.begin(), front.end());
            continue;
        }
        std::vector<std::size_t> last(front.begin(), front.end());
        std::stable_sort(last.begin(), last.end(), [&](std::size_t a, std::size_t b) {
            return ranking.crowding[a] > ranking.crowding[b];
        });
        last.resize(count - kept.size());
        kept.insert(kept.end(), last.begin(), last.end());
        break;
    }
    return kept;
}

auto hypervolume(std::span<const Point> points, const Point& reference) -> double
{
    std::vector<Point> inside;
    for (const auto& p : points) {
        if ((p.array() < reference.array()).all()) {
            inside.push_back(p);
        }
    }
    std::sort(inside.begin(), inside.end(), [](const Point& a, const Point& b) { return a(0) < b(0); });
    // Slice along the first objective; each slab's cross-section is a 2-D staircase.
    double volume = 0.0;
    std::vector<Eigen::Vector2d> slice;
    const Eigen::Vector2d base(reference(1), reference(2));
    for (std::size_t k = 0; k < inside.size(); ++k) {
        slice.emplace_back(inside[k](1), inside[k](2));
        const double next = k + 1 < inside.size() ? inside[k + 1](0) : reference(0);
        const double depth = next - inside[k](0);
        if (depth > 0.0) {
            volume += depth * area_2d(slice, base);
        }
    }
    return volume;
}

} // namespace crowdsched
