#pragma once

#include "crowdsched/oracle.hpp"
#include "crowdsched/predictor.hpp"
#include "crowdsched/scheduler.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>

namespace crowdsched {

struct FrontContext {
    const Project* project = nullptr;
    std::optional<double> historical_duration; // enables acceleration columns
    bool similarity_enabled = true;
    std::uint64_t seed = 0;
};

/// `crowdsched-front v1`: objectives, starts and per-task diagnostics per member,
/// plus generation statistics.
auto front_to_json(const ParetoResult& result, const FrontContext& context) -> nlohmann::ordered_json;

/// One row per front member.
void write_front_table(std::ostream& out, const ParetoResult& result, const FrontContext& context);

/// One row per (member, task).
void write_diagnostics_table(std::ostream& out, const ParetoResult& result, const FrontContext& context);

/// Two-column scatter data: duration against failure, or against similarity cost.
void write_duration_failure(std::ostream& out, const ParetoResult& result);
void write_duration_similarity(std::ostream& out, const ParetoResult& result);

auto comparison_to_json(const FrontComparison& comparison, const ExactFront& exact) -> nlohmann::ordered_json;
auto training_to_json(const TrainingReport& report, const TrainConfig& config) -> nlohmann::ordered_json;

} // namespace crowdsched
