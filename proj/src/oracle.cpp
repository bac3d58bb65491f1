#include "crowdsched/oracle.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace crowdsched {

namespace {

auto no_worse(const Point& a, const Point& b) -> bool
{
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        if (a(k) > b(k)) {
            return false;
        }
    }
    return true;
}

auto strictly_better(const Point& a, const Point& b) -> bool
{
    if (!no_worse(a, b)) {
        return false;
    }
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        if (a(k) < b(k)) {
            return true;
        }
    }
    return false;
}

/// Keeps the non-dominated members offered so far; an equal point already kept wins.
class FrontFilter {
public:
    void offer(ParetoMember member)
    {
        const auto p = member.evaluation.fitness.point();
        for (const auto& k : kept_) {
            if (no_worse(k.evaluation.fitness.point(), p)) {
                return;
            }
        }
        std::erase_if(kept_, [&](const ParetoMember& k) { return strictly_better(p, k.evaluation.fitness.point()); });
        kept_.push_back(std::move(member));
    }
    auto take() -> std::vector<ParetoMember> { return std::move(kept_); }

private:
    std::vector<ParetoMember> kept_;
};

void descend(const Project& project, Day horizon, std::size_t depth, std::vector<Day>& starts,
             const std::function<void(std::span<const Day>)>& visit)
{
    const auto& order = project.topological_order();
    if (depth == order.size()) {
        visit(starts);
        return;
    }
    const auto task = order[depth];
    Day lowest = 0;
    for (auto p : project.predecessors(task)) {
        lowest = std::max(lowest, starts[p] + project.task(p).duration() + 1);
    }
    for (Day gene = lowest; gene <= horizon; ++gene) {
        starts[task] = gene;
        descend(project, horizon, depth + 1, starts, visit);
    }
}

auto points_of(const std::vector<ParetoMember>& members) -> std::vector<Point>
{
    std::vector<Point> points;
    points.reserve(members.size());
    for (const auto& m : members) {
        points.push_back(m.evaluation.fitness.point());
    }
    return points;
}

} // namespace

auto enumeration_estimate(std::size_t tasks, Day horizon) -> double
{
    return std::pow(static_cast<double>(horizon) + 1.0, static_cast<double>(tasks));
}

void check_enumerable(const Project& project, Day horizon, const EnumerationLimits& limits)
{
    const double estimate = enumeration_estimate(project.size(), horizon);
    if (project.size() > limits.max_tasks || horizon > limits.max_horizon || estimate > limits.max_schedules) {
        throw GuardError(estimate, "exhaustive enumeration refused: " + std::to_string(project.size()) +
                                       " tasks, horizon " + std::to_string(horizon) + ", estimated " +
                                       std::to_string(static_cast<long long>(estimate)) + " schedules (limits: " +
                                       std::to_string(limits.max_tasks) + " tasks, horizon " +
                                       std::to_string(limits.max_horizon) + ", " +
                                       std::to_string(static_cast<long long>(limits.max_schedules)) + " schedules)");
    }
    if (horizon < 0) {
        throw ConfigError("enumeration horizon must be non-negative");
    }
}

void enumerate_schedules(const Project& project, Day horizon, const std::function<void(std::span<const Day>)>& visit,
                         const EnumerationLimits& limits)
{
    check_enumerable(project, horizon, limits);
    std::vector<Day> starts(project.size(), 0);
    descend(project, horizon, 0, starts, visit);
}

auto enumerate_schedules(const Project& project, Day horizon, const EnumerationLimits& limits)
    -> std::vector<Chromosome>
{
    std::vector<Chromosome> out;
    enumerate_schedules(
        project, horizon, [&](std::span<const Day> s) { out.push_back({{s.begin(), s.end()}, true}); }, limits);
    return out;
}

auto exact_front(const SchedulingProblem& problem, std::optional<Day> horizon, const EnumerationLimits& limits,
                 unsigned threads) -> ExactFront
{
    const auto& project = problem.project();
    const Day bound = horizon.value_or(project.max_horizon());
    check_enumerable(project, bound, limits);

    ExactFront out{project.id(), project.size(), {}, 0};
    if (project.size() == 0) {
        return out;
    }
    // One chunk per value of the first gene in topological order; merged in chunk order.
    const auto first = project.topological_order().front();
    const auto chunks = static_cast<std::size_t>(bound) + 1;
    std::vector<std::vector<ParetoMember>> partial(chunks);
    std::vector<std::size_t> counts(chunks, 0);
    parallel_for(chunks, threads, [&](std::size_t chunk) {
        FrontFilter filter;
        std::vector<Day> starts(project.size(), 0);
        starts[first] = static_cast<Day>(chunk);
        descend(project, bound, 1, starts, [&](std::span<const Day> s) {
            ++counts[chunk];
            Chromosome genome{{s.begin(), s.end()}, true};
            auto evaluation = evaluate(genome, problem);
            if (evaluation.violation == 0.0) {
                filter.offer({std::move(genome), std::move(evaluation)});
            }
        });
        partial[chunk] = filter.take();
    });
    FrontFilter merged;
    for (std::size_t chunk = 0; chunk < chunks; ++chunk) {
        out.schedules += counts[chunk];
        for (auto& m : partial[chunk]) {
            merged.offer(std::move(m));
        }
    }
    out.members = merged.take();
    std::stable_sort(out.members.begin(), out.members.end(), [](const ParetoMember& a, const ParetoMember& b) {
        const auto& x = a.evaluation.fitness;
        const auto& y = b.evaluation.fitness;
        return std::tie(x.duration, x.similarity_cost, x.failure) < std::tie(y.duration, y.similarity_cost, y.failure);
    });
    return out;
}

auto nondominated_indices(std::span<const Point> points) -> std::vector<std::size_t>
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < points.size() && keep; ++j) {
            if (j == i) {
                continue;
            }
            if (strictly_better(points[j], points[i]) || (j < i && points[j] == points[i])) {
                keep = false;
            }
        }
        if (keep) {
            out.push_back(i);
        }
    }
    return out;
}

auto reference_point(std::span<const Point> a, std::span<const Point> b) -> Point
{
    Point worst = Point::Constant(-std::numeric_limits<double>::infinity());
    for (auto set : {a, b}) {
        for (const auto& p : set) {
            worst = worst.cwiseMax(p);
        }
    }
    Point reference;
    for (Eigen::Index k = 0; k < reference.size(); ++k) {
        reference(k) = worst(k) > 0.0 ? 1.1 * worst(k) : 1.0;
    }
    return reference;
}

auto compare_fronts(const ParetoResult& found, const ExactFront& exact) -> FrontComparison
{
    if (found.project_id != exact.project_id || found.task_count != exact.task_count) {
        throw InputError("fronts belong to different projects");
    }
    const auto found_points = points_of(found.front);
    const auto exact_points = points_of(exact.members);

    FrontComparison out;
    out.found_size = found_points.size();
    out.exact_size = exact_points.size();
    if (found_points.empty()) {
        return out;
    }
    std::size_t clean = 0;
    for (const auto& f : found_points) {
        const bool beaten = std::any_of(exact_points.begin(), exact_points.end(),
                                        [&](const Point& e) { return strictly_better(e, f); });
        clean += beaten ? 0 : 1;
    }
    out.nondominated_fraction = static_cast<double>(clean) / static_cast<double>(found_points.size());

    out.reference = reference_point(found_points, exact_points);
    out.found_hypervolume = hypervolume(found_points, out.reference);
    out.exact_hypervolume = hypervolume(exact_points, out.reference);
    out.hypervolume_ratio = out.exact_hypervolume > 0.0 ? out.found_hypervolume / out.exact_hypervolume : 1.0;

    if (!exact_points.empty()) {
        Point best_found = Point::Constant(std::numeric_limits<double>::infinity());
        Point best_exact = best_found;
        for (const auto& p : found_points) {
            best_found = best_found.cwiseMin(p);
        }
        for (const auto& p : exact_points) {
            best_exact = best_exact.cwiseMin(p);
        }
        for (Eigen::Index k = 0; k < out.regret.size(); ++k) {
            const double span = out.reference(k) - best_exact(k);
            const double gap = std::max(0.0, best_found(k) - best_exact(k));
            out.regret(k) = span > 0.0 ? gap / span : gap;
        }
        out.max_regret = out.regret.maxCoeff();
    }
    return out;
}

} // namespace crowdsched
