#include "crowdsched/oracle.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <set>

namespace crowdsched {
namespace {

using testing::make_task;

TEST(Enumerate, SingleTask)
{
    const Project p("s", {make_task("A", 0, 1, 2)}, {});
    const auto all = enumerate_schedules(p, 2);
    ASSERT_EQ(all.size(), 3u);
    std::set<Day> starts;
    for (const auto& c : all) {
        starts.insert(c.starts[0]);
    }
    EXPECT_EQ(starts, (std::set<Day>{0, 1, 2}));
}

TEST(Enumerate, TwoIndependentTasks)
{
    const Project p("p", {make_task("A", 0, 1, 2), make_task("B", 0, 1, 2)}, {});
    EXPECT_EQ(enumerate_schedules(p, 1).size(), 4u);
}

TEST(Enumerate, ChainCountMatchesDirectLoop)
{
    const auto p = testing::chain_project({1, 1}, 3);
    std::size_t expected = 0;
    for (Day a = 0; a <= 3; ++a) {
        for (Day b = 0; b <= 3; ++b) {
            expected += b >= a + 2 ? 1 : 0;
        }
    }
    const auto all = enumerate_schedules(p, 3);
    EXPECT_EQ(all.size(), expected);
    for (const auto& c : all) {
        EXPECT_TRUE(satisfies_dependencies(c.starts, p));
    }
}

TEST(Enumerate, GuardRefusesLargeInstances)
{
    Rng rng(1);
    const auto big = testing::random_project(rng, 10, 0.2, 1, 3);
    EXPECT_THROW(check_enumerable(big, 5), GuardError);
    const auto wide = testing::random_project(rng, 3, 0.2, 1, 3);
    EXPECT_THROW(check_enumerable(wide, 16), GuardError);
    EXPECT_NO_THROW(check_enumerable(wide, 12));
    try {
        check_enumerable(wide, 10, {8, 15, 100.0});
        FAIL() << "expected refusal";
    } catch (const GuardError& e) {
        EXPECT_EQ(e.estimate(), enumeration_estimate(3, 10));
    }
    EXPECT_DOUBLE_EQ(enumeration_estimate(3, 10), 1331.0);
}

TEST(ExactFront, SingleTaskIsSingleton)
{
    const auto model = testing::constant_model(0.4);
    const SchedulingProblem problem(Project("s", {make_task("A", 0, 1, 3)}, {}, 2), model);
    const auto exact = exact_front(problem);
    ASSERT_EQ(exact.members.size(), 1u);
    // Shifted copies score the same; the first enumerated one is kept.
    EXPECT_EQ(exact.members[0].genome.starts, (std::vector<Day>{0}));
    EXPECT_EQ(exact.schedules, 3u);
}

TEST(ExactFront, EqualsFilteringOfAllEvaluations)
{
    const auto model = testing::logistic_model();
    Rng rng(2);
    const SchedulingProblem problem(testing::random_project(rng, 4, 0.3, 1, 3, 7), model);
    const auto exact = exact_front(problem);

    std::vector<Point> points;
    for (const auto& c : enumerate_schedules(problem.project(), 7)) {
        points.push_back(evaluate(c, problem).fitness.point());
    }
    std::set<std::vector<double>> expected;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool beaten = false;
        for (std::size_t j = 0; j < points.size() && !beaten; ++j) {
            beaten = dominates(points[j], points[i]);
        }
        if (!beaten) {
            expected.insert({points[i](0), points[i](1), points[i](2)});
        }
    }
    std::set<std::vector<double>> got;
    for (const auto& m : exact.members) {
        const auto p = m.evaluation.fitness.point();
        got.insert({p(0), p(1), p(2)});
    }
    EXPECT_EQ(got, expected);
    EXPECT_EQ(got.size(), exact.members.size());
}

TEST(ExactFront, ThreadCountDoesNotMatter)
{
    const auto model = testing::logistic_model();
    Rng rng(3);
    const SchedulingProblem problem(testing::random_project(rng, 4, 0.3, 1, 3, 8), model);
    const auto a = exact_front(problem, std::nullopt, {}, 1);
    const auto b = exact_front(problem, std::nullopt, {}, 3);
    ASSERT_EQ(a.members.size(), b.members.size());
    for (std::size_t k = 0; k < a.members.size(); ++k) {
        EXPECT_EQ(a.members[k].genome, b.members[k].genome);
    }
}

TEST(NondominatedIndices, DropsDuplicatesAndDominated)
{
    const std::vector<Point> points{Point(1, 1, 1), Point(2, 0, 1), Point(1, 1, 1), Point(3, 3, 3)};
    EXPECT_EQ(nondominated_indices(points), (std::vector<std::size_t>{0, 1}));
}

TEST(CompareFronts, IdenticalAndSubset)
{
    const auto model = testing::logistic_model();
    Rng rng(4);
    const SchedulingProblem problem(testing::random_project(rng, 4, 0.2, 1, 3, 6), model);
    const auto exact = exact_front(problem);
    ParetoResult same{exact.project_id, exact.task_count, exact.members, {}, 0};
    const auto c = compare_fronts(same, exact);
    EXPECT_EQ(c.nondominated_fraction, 1.0);
    EXPECT_DOUBLE_EQ(c.hypervolume_ratio, 1.0);
    EXPECT_EQ(c.max_regret, 0.0);

    ASSERT_GE(exact.members.size(), 2u);
    ParetoResult subset = same;
    subset.front.pop_back();
    const auto s = compare_fronts(subset, exact);
    EXPECT_EQ(s.nondominated_fraction, 1.0);
    EXPECT_LE(s.hypervolume_ratio, 1.0);
    EXPECT_GE(s.max_regret, 0.0);
}

TEST(CompareFronts, MismatchedProjectsThrow)
{
    const auto model = testing::constant_model(0.1);
    const SchedulingProblem problem(Project("s", {make_task("A", 0, 1, 3)}, {}, 2), model);
    const auto exact = exact_front(problem);
    ParetoResult other{"elsewhere", 1, exact.members, {}, 0};
    EXPECT_THROW((void)compare_fronts(other, exact), InputError);
}

TEST(CompareFronts, EvolvedSmallProject)
{
    const auto model = testing::logistic_model();
    Rng rng(7);
    const SchedulingProblem problem(testing::random_project(rng, 5, 0.3, 1, 3, 10), model);
    GAConfig config;
    config.seed = 7;
    const auto found = evolve(problem, config);
    const auto exact = exact_front(problem);
    const auto c = compare_fronts(found, exact);
    EXPECT_GE(c.nondominated_fraction, 0.95);
    EXPECT_GE(c.hypervolume_ratio, 0.95);
    EXPECT_LE(c.hypervolume_ratio, 1.0 + 1e-12);
}

TEST(ReferencePoint, ZeroWorstBecomesOne)
{
    const std::vector<Point> a{Point(4, 0, 0.5)};
    const std::vector<Point> b{Point(2, 0, 0.25)};
    const auto r = reference_point(a, b);
    EXPECT_DOUBLE_EQ(r(0), 4.4);
    EXPECT_DOUBLE_EQ(r(1), 1.0);
    EXPECT_DOUBLE_EQ(r(2), 0.55);
}

} // namespace
} // namespace crowdsched
