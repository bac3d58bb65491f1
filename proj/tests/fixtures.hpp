#pragma once

#include "crowdsched/model.hpp"
#include "crowdsched/predictor.hpp"
#include "crowdsched/random.hpp"
#include "crowdsched/scheduler.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace crowdsched::testing {

inline auto make_task(std::string id, Day start, Day window, Day duration, double prize = 500.0,
                      std::string type = "Code", std::vector<std::string> technologies = {"Java"},
                      std::string requirements = "build the service") -> Task
{
    Task t;
    t.id = std::move(id);
    t.project_id = "P";
    t.registration_start = start;
    t.registration_end = start + window;
    t.submission_end = start + duration;
    t.prize = prize;
    t.total_prize = prize * 1.5;
    t.type = std::move(type);
    t.technologies = std::move(technologies);
    t.platforms = {"Web"};
    t.requirements = std::move(requirements);
    t.registrations = 10;
    t.submissions = 2;
    t.valid_submissions = 1;
    return t;
}

/// Fixed, smooth failure model: more open tasks and more similar ones raise the risk.
inline auto logistic_model() -> FunctionPredictor
{
    return FunctionPredictor([](const FeatureRow<double>& x) {
        const double z = -2.5 + 0.6 * x(input::open_tasks) + 1.0 * x(input::avg_similarity);
        return 1.0 / (1.0 + std::exp(-z));
    });
}

inline auto constant_model(double p) -> FunctionPredictor
{
    return FunctionPredictor([p](const FeatureRow<double>&) { return p; });
}

inline auto chain_project(const std::vector<Day>& durations, std::optional<Day> horizon = std::nullopt) -> Project
{
    std::vector<Task> tasks;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < durations.size(); ++i) {
        tasks.push_back(make_task("T" + std::to_string(i + 1), 0, std::max(1, durations[i] / 2), durations[i]));
        if (i > 0) {
            edges.push_back({i - 1, i});
        }
    }
    return {"chain", std::move(tasks), std::move(edges), horizon};
}

/// Random DAG: edges only go from lower to higher index, so it is acyclic by construction.
inline auto random_project(Rng& rng, std::size_t n, double edge_probability, Day min_duration, Day max_duration,
                           std::optional<Day> horizon = std::nullopt) -> Project
{
    static const std::vector<std::string> types{"Code", "Design", "Test"};
    static const std::vector<std::string> techs{"Java", "Python", "SQL", "React"};
    static const std::vector<std::string> words{"api", "login", "report", "sync", "mobile", "ui"};
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < n; ++i) {
        const auto duration = static_cast<Day>(rng.uniform_int(min_duration, max_duration));
        const auto window = static_cast<Day>(rng.uniform_int(1, std::max<Day>(1, duration)));
        std::vector<std::string> tech{techs[rng.index(techs.size())]};
        if (rng.bernoulli(0.5)) {
            tech.push_back(techs[rng.index(techs.size())]);
        }
        std::sort(tech.begin(), tech.end());
        tech.erase(std::unique(tech.begin(), tech.end()), tech.end());
        const std::string text = words[rng.index(words.size())] + " " + words[rng.index(words.size())];
        tasks.push_back(make_task("T" + std::to_string(i + 1), static_cast<Day>(rng.uniform_int(0, 10)), window,
                                  duration, 100.0 * static_cast<double>(rng.uniform_int(1, 10)),
                                  types[rng.index(types.size())], tech, text));
    }
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (rng.bernoulli(edge_probability)) {
                edges.push_back({i, j});
            }
        }
    }
    return {"random", std::move(tasks), std::move(edges), horizon};
}

struct TaskRow {
    const char* id;
    Day start;
    Day window;
    Day duration;
    double prize;
    const char* type;
    const char* tech;
    const char* text;
};

/// Nineteen tasks with repost chains; the historical plan spans 110 days.
inline auto nineteen_task_rows() -> std::vector<TaskRow>
{
    return {
        {"1", 0, 5, 14, 800, "Design", "React", "storyboard for the mobile client"},
        {"2", 0, 5, 14, 1000, "Code", "Java", "payment gateway integration service"},
        {"3", 3, 5, 14, 600, "Code", "Python", "data import scripts for legacy records"},
        {"4", 5, 5, 12, 750, "Test", "Java", "automated regression suite for checkout"},
        {"5", 15, 5, 14, 1100, "Code", "Java", "payment gateway integration service"},
        {"6", 18, 5, 12, 750, "Test", "Java", "automated regression suite for checkout"},
        {"7", 30, 5, 14, 1200, "Assembly", "Java", "payment gateway integration service"},
        {"8", 2, 4, 10, 400, "Code", "SQL", "reporting database schema and views"},
        {"9", 20, 5, 14, 600, "Code", "Python", "data cleansing pipeline"},
        {"10", 35, 5, 14, 900, "Design", "React", "dashboard layout and widgets"},
        {"11", 13, 4, 10, 450, "Code", "SQL", "reporting database schema and views"},
        {"12", 40, 5, 14, 1000, "Code", "React", "dashboard front end implementation"},
        {"13", 24, 4, 10, 500, "Code", "SQL", "reporting database schema and views"},
        {"14", 35, 4, 10, 550, "Assembly", "SQL", "reporting database schema and views"},
        {"15", 46, 4, 10, 600, "Assembly", "SQL", "reporting database schema and views"},
        {"16", 55, 5, 14, 800, "Test", "React", "end to end tests for the dashboard"},
        {"17", 57, 4, 10, 650, "Code", "Python", "reporting database schema and views"},
        {"18", 96, 4, 14, 700, "Code", "Python", "reporting database schema and views"},
        {"19", 70, 5, 14, 500, "Code", "Java", "deployment scripts and release notes"},
    };
}

inline auto tasks_from(const std::vector<TaskRow>& rows) -> std::vector<Task>
{
    std::vector<Task> tasks;
    for (const auto& s : rows) {
        tasks.push_back(make_task(s.id, s.start, s.window, s.duration, s.prize, s.type, {s.tech}, s.text));
    }
    return tasks;
}

inline auto nineteen_task_edges() -> std::vector<IdEdge>
{
    return {{"2", "5"},   {"5", "7"},   {"4", "6"},   {"8", "11"},  {"11", "13"}, {"13", "14"},
            {"14", "15"}, {"15", "17"}, {"17", "18"}, {"1", "3"},   {"3", "9"},   {"9", "10"},
            {"7", "12"},  {"12", "16"}, {"16", "19"}, {"6", "12"}};
}

inline auto nineteen_task_project() -> Project
{
    const TaskCatalog catalog(tasks_from(nineteen_task_rows()), {});
    std::vector<std::string> ids;
    for (const auto& t : catalog.tasks()) {
        ids.push_back(t.id);
    }
    return build_project(catalog, ids, nineteen_task_edges(), std::nullopt, "motivating");
}

/// First eleven tasks of the nineteen-task project with the edges among them.
inline auto eleven_task_project() -> Project
{
    auto rows = nineteen_task_rows();
    rows.resize(11);
    const TaskCatalog catalog(tasks_from(rows), {});
    std::vector<std::string> ids;
    for (const auto& t : catalog.tasks()) {
        ids.push_back(t.id);
    }
    std::vector<IdEdge> edges;
    for (const auto& e : nineteen_task_edges()) {
        if (catalog.contains(e.first) && catalog.contains(e.second)) {
            edges.push_back(e);
        }
    }
    return build_project(catalog, ids, edges, std::nullopt, "eleven");
}

} // namespace crowdsched::testing
