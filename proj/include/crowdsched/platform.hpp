#pragma once

#include "crowdsched/common.hpp"
#include "crowdsched/similarity.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace crowdsched {

/// A task placed on the marketplace timeline. It is open for registration on
/// every day in [start, start + window].
struct PlatformTask {
    std::size_t similarity_index = 0; // row in the SimilarityMatrix
    Day start = 0;
    Day window = 1;
    Day duration = 0;
    int valid_submissions = 0;

    [[nodiscard]] auto registration_end() const -> Day { return start + window; }
    [[nodiscard]] auto open_on(Day day) const -> bool { return start <= day && day <= registration_end(); }
};

/// Which length the arrival rate divides by.
enum class ArrivalDenominator { TaskDuration, RegistrationWindow };

struct PlatformOptions {
    ArrivalDenominator denominator = ArrivalDenominator::TaskDuration;
};

/// The task asking about the platform: its similarity row, and its own
/// position in the state (excluded from counts) if it is placed there.
struct Probe {
    std::size_t similarity_index = 0;
    std::optional<std::size_t> self;
};

/// Marketplace quantities seen by a probe on one day.
struct DayMetrics {
    double open_tasks = 0.0;     // NOT_d
    double avg_similarity = 0.0; // ATS_d
    double arrival_rate = 0.0;   // TA_d
    double failure_ratio = 0.0;  // empirical p(TF_d)
};

// Free functions over an explicit open set.

auto count_open(std::span<const PlatformTask> tasks, Day day, std::optional<std::size_t> exclude = std::nullopt)
    -> std::size_t;

/// Mean similarity between the probe and the open tasks; 0 when none are open.
auto average_similarity(std::size_t probe, std::span<const PlatformTask> open, const SimilarityMatrix& sims)
    -> double;

/// Share of open tasks without a valid submission; 0 when none are open.
auto empirical_failure_ratio(std::span<const PlatformTask> open) -> double;

/// Open tasks per day of open-task length. Zero-length tasks count their
/// registration window instead.
auto arrival_rate(std::span<const PlatformTask> open, ArrivalDenominator denominator = ArrivalDenominator::TaskDuration)
    -> double;

/// Tasks still open `lookahead` days later plus the expected arrivals.
auto future_open_tasks(std::span<const PlatformTask> open, Day day, Day lookahead, double rate) -> double;

/// Weighted mean of the still-open similarity and today's similarity for the projected arrivals.
auto future_avg_similarity(std::size_t probe, std::span<const PlatformTask> open, Day day, Day lookahead, double rate,
                           const SimilarityMatrix& sims) -> double;

/// Day-indexed marketplace over [0, horizon]; immutable after construction.
class PlatformState {
public:
    PlatformState(std::vector<PlatformTask> tasks, Day horizon, const SimilarityMatrix& sims,
                  PlatformOptions options = {});

    [[nodiscard]] auto horizon() const -> Day { return horizon_; }
    [[nodiscard]] auto tasks() const -> const std::vector<PlatformTask>& { return tasks_; }
    [[nodiscard]] auto similarities() const -> const SimilarityMatrix& { return *sims_; }
    [[nodiscard]] auto options() const -> const PlatformOptions& { return options_; }

    /// Open tasks on `day` other than the probe itself, in placement order.
    [[nodiscard]] auto open_set(Day day, const Probe& probe) const -> std::vector<PlatformTask>;
    [[nodiscard]] auto open_tasks(Day day, const Probe& probe) const -> std::size_t;
    [[nodiscard]] auto avg_similarity(Day day, const Probe& probe) const -> double;
    [[nodiscard]] auto failure_ratio(Day day, const Probe& probe) const -> double;
    [[nodiscard]] auto arrival_rate(Day day, const Probe& probe) const -> double;
    [[nodiscard]] auto future_open_tasks(Day day, Day lookahead, const Probe& probe) const -> double;
    [[nodiscard]] auto future_avg_similarity(Day day, Day lookahead, const Probe& probe) const -> double;
    [[nodiscard]] auto metrics(Day day, const Probe& probe) const -> DayMetrics;

private:
    std::vector<PlatformTask> tasks_;
    std::vector<std::size_t> by_start_; // positions sorted by start
    Day horizon_ = 0;
    Day longest_window_ = 0;
    const SimilarityMatrix* sims_ = nullptr;
    PlatformOptions options_;
};

} // namespace crowdsched
