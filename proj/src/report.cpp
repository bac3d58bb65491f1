#include "crowdsched/report.hpp"

#include <array>
#include <cstdio>
#include <ostream>
#include <string>

namespace crowdsched {

namespace {

auto number(double value) -> std::string
{
    std::array<char, 40> buffer{};
    std::snprintf(buffer.data(), buffer.size(), "%.10g", value);
    return buffer.data();
}

auto objectives_json(const FitnessTriple& f) -> nlohmann::ordered_json
{
    return {{"duration", f.duration}, {"similarity_cost", f.similarity_cost}, {"failure", f.failure}};
}

auto joined(const std::vector<Day>& starts) -> std::string
{
    std::string out;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        out += (i ? ";" : "") + std::to_string(starts[i]);
    }
    return out;
}

} // namespace

auto front_to_json(const ParetoResult& result, const FrontContext& context) -> nlohmann::ordered_json
{
    nlohmann::ordered_json doc;
    doc["schema"] = "crowdsched-front v1";
    nlohmann::ordered_json project;
    project["id"] = result.project_id;
    auto ids = nlohmann::ordered_json::array();
    if (context.project != nullptr) {
        for (const auto& t : context.project->tasks()) {
            ids.push_back(t.id);
        }
        project["max_horizon"] = context.project->max_horizon();
    }
    project["tasks"] = ids;
    if (context.historical_duration) {
        project["historical_duration"] = *context.historical_duration;
    }
    doc["project"] = project;
    doc["similarity_enabled"] = context.similarity_enabled;
    doc["seed"] = context.seed;
    doc["evaluations"] = result.evaluations;

    auto front = nlohmann::ordered_json::array();
    for (const auto& m : result.front) {
        nlohmann::ordered_json member;
        member["objectives"] = objectives_json(m.evaluation.fitness);
        if (context.historical_duration && *context.historical_duration > 0.0) {
            member["acceleration_pct"] =
                schedule_acceleration(*context.historical_duration, m.evaluation.fitness.duration);
        }
        member["genome"] = m.genome.starts;
        member["starts"] = m.evaluation.schedule.starts;
        auto tasks = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < m.evaluation.diagnostics.size(); ++i) {
            const auto& d = m.evaluation.diagnostics[i];
            nlohmann::ordered_json row;
            row["id"] = context.project != nullptr ? context.project->task(i).id : std::to_string(i);
            row["start"] = d.start;
            row["best_day"] = d.best_day;
            row["failure"] = d.failure;
            row["open_on_arrival"] = d.open_on_arrival;
            row["similarity_on_arrival"] = d.similarity_on_arrival;
            tasks.push_back(row);
        }
        member["tasks"] = tasks;
        front.push_back(member);
    }
    doc["front"] = front;

    auto generations = nlohmann::ordered_json::array();
    for (const auto& g : result.generations) {
        generations.push_back({{"run", g.run},
                               {"generation", g.generation},
                               {"front_size", g.front_size},
                               {"archive_size", g.archive_size},
                               {"best", objectives_json(g.best)}});
    }
    doc["generations"] = generations;
    return doc;
}

void write_front_table(std::ostream& out, const ParetoResult& result, const FrontContext& context)
{
    const bool acceleration = context.historical_duration && *context.historical_duration > 0.0;
    out << "member,duration,similarity_cost,failure" << (acceleration ? ",acceleration_pct" : "") << ",starts\n";
    for (std::size_t k = 0; k < result.front.size(); ++k) {
        const auto& f = result.front[k].evaluation.fitness;
        out << k << ',' << number(f.duration) << ',' << number(f.similarity_cost) << ',' << number(f.failure);
        if (acceleration) {
            out << ',' << number(schedule_acceleration(*context.historical_duration, f.duration));
        }
        out << ',' << joined(result.front[k].evaluation.schedule.starts) << '\n';
    }
}

void write_diagnostics_table(std::ostream& out, const ParetoResult& result, const FrontContext& context)
{
    out << "member,task,start,best_day,failure,open_on_arrival,similarity_on_arrival\n";
    for (std::size_t k = 0; k < result.front.size(); ++k) {
        const auto& diagnostics = result.front[k].evaluation.diagnostics;
        for (std::size_t i = 0; i < diagnostics.size(); ++i) {
            const auto& d = diagnostics[i];
            out << k << ',' << (context.project != nullptr ? context.project->task(i).id : std::to_string(i)) << ','
                << d.start << ',' << d.best_day << ',' << number(d.failure) << ',' << d.open_on_arrival << ','
                << number(d.similarity_on_arrival) << '\n';
        }
    }
}

void write_duration_failure(std::ostream& out, const ParetoResult& result)
{
    out << "duration,failure\n";
    for (const auto& m : result.front) {
        out << number(m.evaluation.fitness.duration) << ',' << number(m.evaluation.fitness.failure) << '\n';
    }
}

void write_duration_similarity(std::ostream& out, const ParetoResult& result)
{
    out << "duration,similarity_cost\n";
    for (const auto& m : result.front) {
        out << number(m.evaluation.fitness.duration) << ',' << number(m.evaluation.fitness.similarity_cost) << '\n';
    }
}

auto comparison_to_json(const FrontComparison& comparison, const ExactFront& exact) -> nlohmann::ordered_json
{
    auto point = [](const Point& p) { return nlohmann::ordered_json::array({p(0), p(1), p(2)}); };
    nlohmann::ordered_json doc;
    doc["schema"] = "crowdsched-oracle v1";
    doc["project"] = exact.project_id;
    doc["schedules_enumerated"] = exact.schedules;
    doc["found_size"] = comparison.found_size;
    doc["exact_size"] = comparison.exact_size;
    doc["nondominated_fraction"] = comparison.nondominated_fraction;
    doc["hypervolume_ratio"] = comparison.hypervolume_ratio;
    doc["max_regret"] = comparison.max_regret;
    doc["regret"] = point(comparison.regret);
    doc["reference_point"] = point(comparison.reference);
    doc["found_hypervolume"] = comparison.found_hypervolume;
    doc["exact_hypervolume"] = comparison.exact_hypervolume;
    auto members = nlohmann::ordered_json::array();
    for (const auto& m : exact.members) {
        members.push_back({{"objectives", objectives_json(m.evaluation.fitness)}, {"starts", m.evaluation.schedule.starts}});
    }
    doc["exact_front"] = members;
    return doc;
}

auto training_to_json(const TrainingReport& report, const TrainConfig& config) -> nlohmann::ordered_json
{
    nlohmann::ordered_json doc;
    doc["schema"] = "crowdsched-training v1";
    doc["folds"] = config.folds;
    doc["seed"] = config.seed;
    doc["learning_rate"] = config.learning_rate;
    doc["batch_size"] = config.batch_size;
    doc["patience"] = config.patience;
    doc["restarts"] = config.restarts;
    doc["max_epochs"] = config.max_epochs;
    doc["fold_losses"] = report.fold_losses;
    doc["fold_epochs"] = report.fold_epochs;
    doc["mean_loss"] = report.mean_loss;
    doc["stddev_loss"] = report.stddev_loss;
    doc["final_epochs"] = report.final_epochs;
    return doc;
}

} // namespace crowdsched
