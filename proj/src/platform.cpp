#include "crowdsched/platform.hpp"

#include <algorithm>
#include <numeric>

namespace crowdsched {

auto count_open(std::span<const PlatformTask> tasks, Day day, std::optional<std::size_t> exclude) -> std::size_t
{
    std::size_t count = 0;
    for (std::size_t j = 0; j < tasks.size(); ++j) {
        if (j != exclude && tasks[j].open_on(day)) {
            ++count;
        }
    }
    return count;
}

auto average_similarity(std::size_t probe, std::span<const PlatformTask> open, const SimilarityMatrix& sims)
    -> double
{
    if (open.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& t : open) {
        total += sims(probe, t.similarity_index);
    }
    return total / static_cast<double>(open.size());
}

auto empirical_failure_ratio(std::span<const PlatformTask> open) -> double
{
    if (open.empty()) {
        return 0.0;
    }
    const auto succeeded =
        std::count_if(open.begin(), open.end(), [](const PlatformTask& t) { return t.valid_submissions >= 1; });
    return 1.0 - static_cast<double>(succeeded) / static_cast<double>(open.size());
}

auto arrival_rate(std::span<const PlatformTask> open, ArrivalDenominator denominator) -> double
{
    if (open.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& t : open) {
        const Day length = denominator == ArrivalDenominator::TaskDuration && t.duration > 0 ? t.duration : t.window;
        total += std::max(1, length);
    }
    return static_cast<double>(open.size()) / total;
}

auto future_open_tasks(std::span<const PlatformTask> open, Day day, Day lookahead, double rate) -> double
{
    const auto still = std::count_if(open.begin(), open.end(),
                                     [&](const PlatformTask& t) { return t.registration_end() >= day + lookahead; });
    return static_cast<double>(still) + rate * lookahead;
}

auto future_avg_similarity(std::size_t probe, std::span<const PlatformTask> open, Day day, Day lookahead,
                           double rate, const SimilarityMatrix& sims) -> double
{
    std::vector<PlatformTask> still;
    std::copy_if(open.begin(), open.end(), std::back_inserter(still),
                 [&](const PlatformTask& t) { return t.registration_end() >= day + lookahead; });
    const double arrivals = rate * lookahead;
    const double weight = static_cast<double>(still.size()) + arrivals;
    if (weight <= 0.0) {
        return 0.0;
    }
    const double today = average_similarity(probe, open, sims);
    const double remaining = average_similarity(probe, still, sims);
    return std::clamp((static_cast<double>(still.size()) * remaining + arrivals * today) / weight, 0.0, 1.0);
}

PlatformState::PlatformState(std::vector<PlatformTask> tasks, Day horizon, const SimilarityMatrix& sims,
                             PlatformOptions options)
    : tasks_(std::move(tasks)), by_start_(tasks_.size()), horizon_(horizon), sims_(&sims), options_(options)
{
    std::iota(by_start_.begin(), by_start_.end(), std::size_t{0});
    std::stable_sort(by_start_.begin(), by_start_.end(),
                     [&](std::size_t a, std::size_t b) { return tasks_[a].start < tasks_[b].start; });
    for (const auto& t : tasks_) {
        longest_window_ = std::max(longest_window_, t.window);
        if (t.similarity_index >= sims.size()) {
            throw InputError("platform task has no similarity row");
        }
    }
}

auto PlatformState::open_set(Day day, const Probe& probe) const -> std::vector<PlatformTask>
{
    // Only tasks starting in [day - longest window, day] can be open.
    const auto first = std::partition_point(by_start_.begin(), by_start_.end(), [&](std::size_t k) {
        return tasks_[k].start < day - longest_window_;
    });
    std::vector<std::size_t> hits;
    for (auto it = first; it != by_start_.end() && tasks_[*it].start <= day; ++it) {
        if (*it != probe.self && tasks_[*it].open_on(day)) {
            hits.push_back(*it);
        }
    }
    std::sort(hits.begin(), hits.end());
    std::vector<PlatformTask> out;
    out.reserve(hits.size());
    for (auto k : hits) {
        out.push_back(tasks_[k]);
    }
    return out;
}

auto PlatformState::open_tasks(Day day, const Probe& probe) const -> std::size_t
{
    return open_set(day, probe).size();
}

auto PlatformState::avg_similarity(Day day, const Probe& probe) const -> double
{
    return average_similarity(probe.similarity_index, open_set(day, probe), *sims_);
}

auto PlatformState::failure_ratio(Day day, const Probe& probe) const -> double
{
    return empirical_failure_ratio(open_set(day, probe));
}

auto PlatformState::arrival_rate(Day day, const Probe& probe) const -> double
{
    return crowdsched::arrival_rate(open_set(day, probe), options_.denominator);
}

auto PlatformState::future_open_tasks(Day day, Day lookahead, const Probe& probe) const -> double
{
    const auto open = open_set(day, probe);
    return crowdsched::future_open_tasks(open, day, lookahead, crowdsched::arrival_rate(open, options_.denominator));
}

auto PlatformState::future_avg_similarity(Day day, Day lookahead, const Probe& probe) const -> double
{
    const auto open = open_set(day, probe);
    return crowdsched::future_avg_similarity(probe.similarity_index, open, day, lookahead,
                                             crowdsched::arrival_rate(open, options_.denominator), *sims_);
}

auto PlatformState::metrics(Day day, const Probe& probe) const -> DayMetrics
{
    const auto open = open_set(day, probe);
    return {static_cast<double>(open.size()), average_similarity(probe.similarity_index, open, *sims_),
            crowdsched::arrival_rate(open, options_.denominator), empirical_failure_ratio(open)};
}

} // namespace crowdsched
