#pragma once

#include "crowdsched/scheduler.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crowdsched {

struct EnumerationLimits {
    std::size_t max_tasks = 8;
    Day max_horizon = 15;
    double max_schedules = 1e7;
};

/// Size of the unconstrained gene space, (horizon + 1)^tasks.
auto enumeration_estimate(std::size_t tasks, Day horizon) -> double;

/// Throws GuardError when the instance is outside the limits.
void check_enumerable(const Project& project, Day horizon, const EnumerationLimits& limits = {});

/// Calls `visit` once for every dependency-feasible assignment in [0, horizon]^n,
/// lexicographic in topological order.
void enumerate_schedules(const Project& project, Day horizon, const std::function<void(std::span<const Day>)>& visit,
                         const EnumerationLimits& limits = {});

auto enumerate_schedules(const Project& project, Day horizon, const EnumerationLimits& limits = {})
    -> std::vector<Chromosome>;

struct ExactFront {
    std::string project_id;
    std::size_t task_count = 0;
    std::vector<ParetoMember> members; // ordered by objectives
    std::size_t schedules = 0;         // feasible schedules evaluated
};

/// Evaluates every feasible schedule with the scheduler's evaluate() and keeps the
/// non-dominated ones; equal objective vectors keep the first schedule enumerated.
/// Horizon defaults to the project's.
auto exact_front(const SchedulingProblem& problem, std::optional<Day> horizon = std::nullopt,
                 const EnumerationLimits& limits = {}, unsigned threads = 1) -> ExactFront;

/// Plain O(n^2) filter: indices of points not dominated by any other point,
/// with later duplicates of an earlier point dropped.
auto nondominated_indices(std::span<const Point> points) -> std::vector<std::size_t>;

struct FrontComparison {
    double nondominated_fraction = 0.0; // found members no exact member dominates
    double hypervolume_ratio = 0.0;
    double max_regret = 0.0;            // largest per-objective regret
    Point regret = Point::Zero();       // (best found - best exact) / (reference - best exact)
    Point reference = Point::Zero();
    double found_hypervolume = 0.0;
    double exact_hypervolume = 0.0;
    std::size_t found_size = 0;
    std::size_t exact_size = 0;
};

/// Shared reference point: component-wise worst over both fronts times 1.1 (1 where the worst is 0).
auto reference_point(std::span<const Point> a, std::span<const Point> b) -> Point;

/// Throws InputError when the fronts belong to different projects.
auto compare_fronts(const ParetoResult& found, const ExactFront& exact) -> FrontComparison;

} // namespace crowdsched
