#pragma once

#include "crowdsched/common.hpp"

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crowdsched {

enum class TaskStatus { Completed, Failed };

struct Task {
    std::string id;
    std::string project_id;
    Day registration_start = 0; // TR
    Day registration_end = 0;   // TRE
    Day submission_end = 0;     // TS
    double prize = 0.0;         // MP
    double total_prize = 0.0;   // TMP, winner plus runner-up
    std::string type;
    std::vector<std::string> technologies; // sorted, unique
    std::vector<std::string> platforms;    // sorted, unique
    std::string requirements;
    int registrations = 0;
    int submissions = 0;
    int valid_submissions = 0;
    TaskStatus status = TaskStatus::Completed;

    [[nodiscard]] auto duration() const -> Day { return submission_end - registration_start; }

    /// Length of the registration window, at least one day.
    [[nodiscard]] auto registration_window() const -> Day
    {
        return std::max(1, registration_end - registration_start);
    }

    friend auto operator==(const Task&, const Task&) -> bool = default;
};

/// Describes the first broken invariant, or nothing when the task is well formed.
auto check_invariants(const Task& task) -> std::optional<std::string>;

/// Largest pairwise differences in the corpus; denominators of the similarity features.
struct CorpusMaxima {
    double prize_diff = 0.0;
    Day registration_diff = 0;
    Day submission_diff = 0;
    std::size_t technologies = 0;

    friend auto operator==(const CorpusMaxima&, const CorpusMaxima&) -> bool = default;
};

auto corpus_maxima(std::span<const Task> tasks) -> CorpusMaxima;

class TaskCatalog {
public:
    TaskCatalog() = default;
    TaskCatalog(std::vector<Task> tasks, std::chrono::sys_days epoch);

    [[nodiscard]] auto tasks() const -> const std::vector<Task>& { return tasks_; }
    [[nodiscard]] auto size() const -> std::size_t { return tasks_.size(); }
    [[nodiscard]] auto empty() const -> bool { return tasks_.empty(); }
    [[nodiscard]] auto maxima() const -> const CorpusMaxima& { return maxima_; }
    [[nodiscard]] auto epoch() const -> std::chrono::sys_days { return epoch_; }

    [[nodiscard]] auto contains(const std::string& id) const -> bool { return index_.contains(id); }
    /// Throws LookupError for unknown ids.
    [[nodiscard]] auto at(const std::string& id) const -> const Task&;

    /// Tasks whose project id matches, in catalog order.
    [[nodiscard]] auto project_tasks(const std::string& project_id) const -> std::vector<Task>;

private:
    std::vector<Task> tasks_;
    std::map<std::string, std::size_t> index_;
    CorpusMaxima maxima_;
    std::chrono::sys_days epoch_{};
};

struct RowIssue {
    std::size_t row = 0; // 1-based data row, header excluded
    std::string field;
    std::string message;
};

struct ParseOptions {
    char delimiter = ',';
};

struct ParseResult {
    TaskCatalog catalog;
    std::vector<RowIssue> issues;
};

/// Canonical column names of the task table.
namespace column {
inline constexpr const char* id = "Task ID";
inline constexpr const char* project = "Project ID";
inline constexpr const char* registration_start = "Registration Start";
inline constexpr const char* registration_end = "Registration End";
inline constexpr const char* submission_end = "Submission End";
inline constexpr const char* prize = "Monetary Prize";
inline constexpr const char* total_prize = "Total Monetary Prize";
inline constexpr const char* type = "Task Type";
inline constexpr const char* technologies = "Technology";
inline constexpr const char* platforms = "Platforms";
inline constexpr const char* requirements = "Requirements";
inline constexpr const char* registrations = "Registrations";
inline constexpr const char* submissions = "Submissions";
inline constexpr const char* valid_submissions = "Valid Submissions";
inline constexpr const char* status = "Task Status";
} // namespace column

/// Reads a header-prefixed task table. Missing required columns throw
/// SchemaError; bad rows are skipped and reported in ParseResult::issues.
/// Dates are ISO-8601 and become day offsets from the earliest date seen.
auto parse_dataset(std::istream& in, const ParseOptions& options = {}) -> ParseResult;

/// Writes every canonical column; parse_dataset reads the output back to an equal catalog.
void write_dataset(std::ostream& out, const TaskCatalog& catalog, const ParseOptions& options = {});

auto parse_date(const std::string& text) -> std::optional<std::chrono::sys_days>;
auto format_date(std::chrono::sys_days day) -> std::string;

/// Finish-to-start edge between task positions: `to` runs after `from`.
struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;
    friend auto operator==(const Edge&, const Edge&) -> bool = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

class Project {
public:
    /// Validates edges and acyclicity. Without an explicit horizon the bound is the
    /// fully sequential duration, raised if needed so the earliest schedule fits.
    Project(std::string id, std::vector<Task> tasks, std::vector<Edge> edges,
            std::optional<Day> max_horizon = std::nullopt);

    [[nodiscard]] auto id() const -> const std::string& { return id_; }
    [[nodiscard]] auto size() const -> std::size_t { return tasks_.size(); }
    [[nodiscard]] auto tasks() const -> const std::vector<Task>& { return tasks_; }
    [[nodiscard]] auto task(std::size_t i) const -> const Task& { return tasks_[i]; }
    [[nodiscard]] auto edges() const -> const std::vector<Edge>& { return edges_; }
    [[nodiscard]] auto predecessors(std::size_t i) const -> const std::vector<std::size_t>& { return preds_[i]; }
    [[nodiscard]] auto successors(std::size_t i) const -> const std::vector<std::size_t>& { return succs_[i]; }
    [[nodiscard]] auto topological_order() const -> const std::vector<std::size_t>& { return topo_; }
    [[nodiscard]] auto max_horizon() const -> Day { return horizon_; }

    /// True when a dependency path links the two tasks in either direction.
    [[nodiscard]] auto sequential(std::size_t a, std::size_t b) const -> bool
    {
        return reach_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) ||
               reach_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a));
    }

    /// All slacks zero: sources on day 0, successors one day after their last predecessor ends.
    [[nodiscard]] auto earliest_schedule() const -> std::vector<Day>;

    /// Latest start per task that still leaves room for every successor chain
    /// before the horizon. Negative when the horizon is too tight.
    [[nodiscard]] auto latest_starts() const -> const std::vector<Day>& { return latest_; }

    /// True when the earliest schedule fits below the latest starts.
    [[nodiscard]] auto fits_horizon() const -> bool { return fits_; }

    /// Sum of task durations.
    [[nodiscard]] auto sequential_duration() const -> Day;

    /// Historical day index of the earliest registration start among the tasks.
    [[nodiscard]] auto historical_origin() const -> Day;

    /// Historical duration (last submission end minus first registration start).
    [[nodiscard]] auto historical_duration() const -> Day;

    [[nodiscard]] auto index_of(const std::string& task_id) const -> std::size_t;

private:
    std::string id_;
    std::vector<Task> tasks_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> preds_;
    std::vector<std::vector<std::size_t>> succs_;
    std::vector<std::size_t> topo_;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> reach_;
    Day horizon_ = 0;
    std::vector<Day> latest_;
    bool fits_ = true;
};

using IdEdge = std::pair<std::string, std::string>;

/// Throws LookupError for unknown ids and CycleError naming the cycle.
auto build_project(const TaskCatalog& catalog, const std::vector<std::string>& task_ids,
                   const std::vector<IdEdge>& edges, std::optional<Day> max_horizon = std::nullopt,
                   std::string project_id = {}) -> Project;

/// One `predecessor_id,successor_id` pair per line; blank lines and `#` comments skipped.
auto read_dependencies(std::istream& in, char delimiter = ',') -> std::vector<IdEdge>;

/// Latest finish minus earliest start.
auto project_duration(const Project& project, std::span<const Day> starts) -> Day;

} // namespace crowdsched
