#include "crowdsched/model.hpp"

#include "csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

namespace crowdsched {

namespace {

auto trim(std::string_view s) -> std::string
{
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

auto lower(std::string s) -> std::string
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

auto split_labels(const std::string& cell) -> std::vector<std::string>
{
    std::set<std::string> labels;
    std::string current;
    std::istringstream stream(cell);
    while (std::getline(stream, current, ';')) {
        auto label = trim(current);
        if (!label.empty()) {
            labels.insert(std::move(label));
        }
    }
    return {labels.begin(), labels.end()};
}

auto join_labels(const std::vector<std::string>& labels) -> std::string
{
    std::string out;
    for (const auto& label : labels) {
        if (!out.empty()) {
            out.push_back(';');
        }
        out += label;
    }
    return out;
}

template <typename T>
auto parse_number(const std::string& text) -> std::optional<T>
{
    const auto s = trim(text);
    T value{};
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || s.empty()) {
        return std::nullopt;
    }
    return value;
}

auto format_number(double value) -> std::string
{
    std::array<char, 64> buffer{};
    auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    return {buffer.data(), ptr};
}

/// A row with its dates still absolute; converted once the epoch is known.
struct RawRow {
    Task task;
    std::chrono::sys_days tr;
    std::chrono::sys_days tre;
    std::chrono::sys_days ts;
};

} // namespace

auto parse_date(const std::string& text) -> std::optional<std::chrono::sys_days>
{
    const auto s = trim(text);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        return std::nullopt;
    }
    const auto y = parse_number<int>(s.substr(0, 4));
    const auto m = parse_number<unsigned>(s.substr(5, 2));
    const auto d = parse_number<unsigned>(s.substr(8, 2));
    if (!y || !m || !d) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m}, std::chrono::day{*d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return std::chrono::sys_days{ymd};
}

auto format_date(std::chrono::sys_days day) -> std::string
{
    const std::chrono::year_month_day ymd{day};
    std::array<char, 16> buffer{};
    std::snprintf(buffer.data(), buffer.size(), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buffer.data();
}

auto check_invariants(const Task& task) -> std::optional<std::string>
{
    if (task.registration_start > task.submission_end) {
        return "registration start after submission end";
    }
    if (task.registration_start > task.registration_end) {
        return "registration start after registration end";
    }
    if (task.registration_end > task.submission_end) {
        return "registration end after submission end";
    }
    if (task.prize < 0.0 || task.total_prize < 0.0) {
        return "negative prize";
    }
    if (task.valid_submissions < 0 || task.valid_submissions > task.submissions ||
        task.submissions > task.registrations) {
        return "outcome counts must satisfy 0 <= valid submissions <= submissions <= registrations";
    }
    return std::nullopt;
}

auto corpus_maxima(std::span<const Task> tasks) -> CorpusMaxima
{
    CorpusMaxima out;
    if (tasks.empty()) {
        return out;
    }
    auto [pmin, pmax] = std::minmax_element(tasks.begin(), tasks.end(),
                                            [](const Task& a, const Task& b) { return a.prize < b.prize; });
    auto [rmin, rmax] = std::minmax_element(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) {
        return a.registration_start < b.registration_start;
    });
    auto [smin, smax] = std::minmax_element(tasks.begin(), tasks.end(), [](const Task& a, const Task& b) {
        return a.submission_end < b.submission_end;
    });
    out.prize_diff = pmax->prize - pmin->prize;
    out.registration_diff = rmax->registration_start - rmin->registration_start;
    out.submission_diff = smax->submission_end - smin->submission_end;
    for (const auto& t : tasks) {
        out.technologies = std::max(out.technologies, t.technologies.size());
    }
    return out;
}

TaskCatalog::TaskCatalog(std::vector<Task> tasks, std::chrono::sys_days epoch)
    : tasks_(std::move(tasks)), maxima_(corpus_maxima(tasks_)), epoch_(epoch)
{
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        if (!index_.emplace(tasks_[i].id, i).second) {
            throw InputError("duplicate task id '" + tasks_[i].id + "'");
        }
    }
}

auto TaskCatalog::at(const std::string& id) const -> const Task&
{
    const auto it = index_.find(id);
    if (it == index_.end()) {
        throw LookupError("unknown task id '" + id + "'");
    }
    return tasks_[it->second];
}

auto TaskCatalog::project_tasks(const std::string& project_id) const -> std::vector<Task>
{
    std::vector<Task> out;
    std::copy_if(tasks_.begin(), tasks_.end(), std::back_inserter(out),
                 [&](const Task& t) { return t.project_id == project_id; });
    return out;
}

auto parse_dataset(std::istream& in, const ParseOptions& options) -> ParseResult
{
    ParseResult result;
    const auto header = csv::read_record(in, options.delimiter);
    if (!header) {
        throw SchemaError(column::id, "empty input: missing header row");
    }
    std::map<std::string, std::size_t> columns;
    for (std::size_t i = 0; i < header->size(); ++i) {
        auto name = trim((*header)[i]);
        if (i == 0 && name.starts_with("\xEF\xBB\xBF")) {
            name.erase(0, 3);
        }
        columns.emplace(std::move(name), i);
    }
    for (const auto* required : {column::id, column::registration_start, column::registration_end,
                                 column::submission_end, column::prize}) {
        if (!columns.contains(required)) {
            throw SchemaError(required, std::string("missing required column '") + required + "'");
        }
    }

    std::vector<RawRow> rows;
    std::set<std::string> seen;
    std::size_t row_number = 0;
    while (auto record = csv::read_record(in, options.delimiter)) {
        ++row_number;
        if (record->size() == 1 && trim(record->front()).empty()) {
            continue;
        }
        auto cell = [&](const char* name) -> std::optional<std::string> {
            const auto it = columns.find(name);
            if (it == columns.end() || it->second >= record->size()) {
                return std::nullopt;
            }
            return (*record)[it->second];
        };
        auto fail = [&](const char* field, std::string message) {
            result.issues.push_back({row_number, field, std::move(message)});
        };

        RawRow raw;
        Task& task = raw.task;
        task.id = trim(cell(column::id).value_or(""));
        if (task.id.empty()) {
            fail(column::id, "empty task id");
            continue;
        }
        if (seen.contains(task.id)) {
            fail(column::id, "duplicate task id '" + task.id + "'");
            continue;
        }
        task.project_id = trim(cell(column::project).value_or(""));

        bool ok = true;
        auto date = [&](const char* name, std::chrono::sys_days& out) {
            const auto parsed = parse_date(cell(name).value_or(""));
            if (!parsed) {
                fail(name, "unparseable date '" + cell(name).value_or("") + "'");
                ok = false;
                return;
            }
            out = *parsed;
        };
        date(column::registration_start, raw.tr);
        if (ok) date(column::registration_end, raw.tre);
        if (ok) date(column::submission_end, raw.ts);
        if (!ok) {
            continue;
        }

        auto number = [&]<typename T>(const char* name, T& out, T fallback) {
            const auto text = cell(name);
            if (!text || trim(*text).empty()) {
                out = fallback;
                return;
            }
            const auto parsed = parse_number<T>(*text);
            if (!parsed || !std::isfinite(static_cast<double>(*parsed))) {
                fail(name, "unparseable number '" + *text + "'");
                ok = false;
                return;
            }
            out = *parsed;
        };
        const auto prize_text = cell(column::prize).value_or("");
        if (trim(prize_text).empty()) {
            fail(column::prize, "missing value");
            continue;
        }
        number(column::prize, task.prize, 0.0);
        if (ok) number(column::total_prize, task.total_prize, task.prize);
        if (ok) number(column::registrations, task.registrations, 0);
        if (ok) number(column::submissions, task.submissions, 0);
        if (ok) number(column::valid_submissions, task.valid_submissions, 0);
        if (!ok) {
            continue;
        }

        task.type = trim(cell(column::type).value_or(""));
        task.technologies = split_labels(cell(column::technologies).value_or(""));
        task.platforms = split_labels(cell(column::platforms).value_or(""));
        task.requirements = cell(column::requirements).value_or("");

        const auto status = lower(trim(cell(column::status).value_or("")));
        if (status.empty()) {
            task.status = task.valid_submissions > 0 ? TaskStatus::Completed : TaskStatus::Failed;
        } else if (status == "completed") {
            task.status = TaskStatus::Completed;
        } else if (status == "failed") {
            task.status = TaskStatus::Failed;
        } else {
            fail(column::status, "unknown status '" + status + "'");
            continue;
        }

        // Invariants are checked on absolute dates before the epoch shift.
        task.registration_start = 0;
        task.registration_end = static_cast<Day>((raw.tre - raw.tr).count());
        task.submission_end = static_cast<Day>((raw.ts - raw.tr).count());
        if (auto violation = check_invariants(task)) {
            fail(column::id, "invariant violation: " + *violation);
            continue;
        }
        seen.insert(task.id);
        rows.push_back(std::move(raw));
    }

    std::chrono::sys_days epoch{};
    if (!rows.empty()) {
        epoch = std::min_element(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) {
                    return a.tr < b.tr;
                })->tr;
    }
    std::vector<Task> tasks;
    tasks.reserve(rows.size());
    for (auto& raw : rows) {
        raw.task.registration_start = static_cast<Day>((raw.tr - epoch).count());
        raw.task.registration_end = static_cast<Day>((raw.tre - epoch).count());
        raw.task.submission_end = static_cast<Day>((raw.ts - epoch).count());
        tasks.push_back(std::move(raw.task));
    }
    result.catalog = TaskCatalog(std::move(tasks), epoch);
    return result;
}

void write_dataset(std::ostream& out, const TaskCatalog& catalog, const ParseOptions& options)
{
    const std::vector<std::string> header{
        column::id,           column::project,       column::registration_start, column::registration_end,
        column::submission_end, column::prize,       column::total_prize,        column::type,
        column::technologies, column::platforms,     column::requirements,       column::registrations,
        column::submissions,  column::valid_submissions, column::status};
    csv::write_record(out, header, options.delimiter);
    const auto day = [&](Day offset) { return format_date(catalog.epoch() + std::chrono::days{offset}); };
    for (const auto& t : catalog.tasks()) {
        csv::write_record(out,
                          {t.id, t.project_id, day(t.registration_start), day(t.registration_end),
                           day(t.submission_end), format_number(t.prize), format_number(t.total_prize), t.type,
                           join_labels(t.technologies), join_labels(t.platforms), t.requirements,
                           std::to_string(t.registrations), std::to_string(t.submissions),
                           std::to_string(t.valid_submissions),
                           t.status == TaskStatus::Completed ? "completed" : "failed"},
                          options.delimiter);
    }
}

Project::Project(std::string id, std::vector<Task> tasks, std::vector<Edge> edges, std::optional<Day> max_horizon)
    : id_(std::move(id)), tasks_(std::move(tasks)), edges_(std::move(edges))
{
    const auto n = tasks_.size();
    preds_.resize(n);
    succs_.resize(n);
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    for (const auto& e : edges_) {
        if (e.from >= n || e.to >= n) {
            throw LookupError("dependency edge references a task outside the project");
        }
        if (e.from == e.to) {
            throw CycleError({tasks_[e.from].id, tasks_[e.from].id},
                             "dependency cycle: " + tasks_[e.from].id + " -> " + tasks_[e.from].id);
        }
        preds_[e.to].push_back(e.from);
        succs_[e.from].push_back(e.to);
    }

    // Kahn's algorithm, smallest index first.
    std::vector<std::size_t> indegree(n);
    for (std::size_t i = 0; i < n; ++i) {
        indegree[i] = preds_[i].size();
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) {
            ready.push(i);
        }
    }
    while (!ready.empty()) {
        const auto i = ready.top();
        ready.pop();
        topo_.push_back(i);
        for (auto j : succs_[i]) {
            if (--indegree[j] == 0) {
                ready.push(j);
            }
        }
    }
    if (topo_.size() != n) {
        // Walk predecessors inside the unresolved set until a node repeats.
        std::size_t start = 0;
        while (indegree[start] == 0) {
            ++start;
        }
        std::vector<std::size_t> path;
        std::vector<int> position(n, -1);
        auto node = start;
        while (position[node] < 0) {
            position[node] = static_cast<int>(path.size());
            path.push_back(node);
            node = *std::find_if(preds_[node].begin(), preds_[node].end(),
                                 [&](std::size_t p) { return indegree[p] > 0; });
        }
        // path follows predecessors; reverse the looping tail into successor order.
        std::vector<std::string> cycle;
        for (auto k = path.size(); k > static_cast<std::size_t>(position[node]); --k) {
            cycle.push_back(tasks_[path[k - 1]].id);
        }
        cycle.push_back(cycle.front());
        std::string text = "dependency cycle: ";
        for (std::size_t i = 0; i < cycle.size(); ++i) {
            text += (i ? " -> " : "") + cycle[i];
        }
        throw CycleError(std::move(cycle), text);
    }

    reach_.setConstant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), false);
    for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
        const auto i = static_cast<Eigen::Index>(*it);
        for (auto j : succs_[*it]) {
            const auto jj = static_cast<Eigen::Index>(j);
            reach_(i, jj) = true;
            reach_.row(i) = reach_.row(i).array() || reach_.row(jj).array();
        }
    }

    if (max_horizon) {
        if (*max_horizon < 0) {
            throw ConfigError("max horizon must be non-negative");
        }
        horizon_ = *max_horizon;
    } else {
        const auto earliest = earliest_schedule();
        const Day latest = earliest.empty() ? 0 : *std::max_element(earliest.begin(), earliest.end());
        horizon_ = std::max(sequential_duration(), latest);
    }

    latest_.assign(tasks_.size(), horizon_);
    for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
        for (auto s : succs_[*it]) {
            latest_[*it] = std::min(latest_[*it], latest_[s] - tasks_[*it].duration() - 1);
        }
    }
    const auto earliest = earliest_schedule();
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        fits_ = fits_ && earliest[i] <= latest_[i];
    }
}

auto Project::earliest_schedule() const -> std::vector<Day>
{
    std::vector<Day> starts(tasks_.size(), 0);
    for (auto i : topo_) {
        for (auto p : preds_[i]) {
            starts[i] = std::max(starts[i], starts[p] + tasks_[p].duration() + 1);
        }
    }
    return starts;
}

auto Project::sequential_duration() const -> Day
{
    Day total = 0;
    for (const auto& t : tasks_) {
        total += t.duration();
    }
    return total;
}

auto Project::historical_origin() const -> Day
{
    if (tasks_.empty()) {
        return 0;
    }
    return std::min_element(tasks_.begin(), tasks_.end(), [](const Task& a, const Task& b) {
               return a.registration_start < b.registration_start;
           })->registration_start;
}

auto Project::historical_duration() const -> Day
{
    if (tasks_.empty()) {
        return 0;
    }
    Day last = std::numeric_limits<Day>::min();
    for (const auto& t : tasks_) {
        last = std::max(last, t.submission_end);
    }
    return last - historical_origin();
}

auto Project::index_of(const std::string& task_id) const -> std::size_t
{
    const auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const Task& t) { return t.id == task_id; });
    if (it == tasks_.end()) {
        throw LookupError("task '" + task_id + "' is not part of project '" + id_ + "'");
    }
    return static_cast<std::size_t>(it - tasks_.begin());
}

auto build_project(const TaskCatalog& catalog, const std::vector<std::string>& task_ids,
                   const std::vector<IdEdge>& edges, std::optional<Day> max_horizon, std::string project_id)
    -> Project
{
    std::vector<Task> tasks;
    std::map<std::string, std::size_t> position;
    for (const auto& id : task_ids) {
        if (!position.emplace(id, tasks.size()).second) {
            throw InputError("task '" + id + "' listed twice");
        }
        tasks.push_back(catalog.at(id));
    }
    std::vector<Edge> resolved;
    for (const auto& [from, to] : edges) {
        const auto a = position.find(from);
        const auto b = position.find(to);
        if (a == position.end()) {
            throw LookupError("dependency references unknown task '" + from + "'");
        }
        if (b == position.end()) {
            throw LookupError("dependency references unknown task '" + to + "'");
        }
        resolved.push_back({a->second, b->second});
    }
    return {std::move(project_id), std::move(tasks), std::move(resolved), max_horizon};
}

auto read_dependencies(std::istream& in, char delimiter) -> std::vector<IdEdge>
{
    std::vector<IdEdge> edges;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        const auto cut = text.find(delimiter);
        if (cut == std::string::npos) {
            throw InputError("dependency line " + std::to_string(number) + ": expected 'predecessor" +
                             delimiter + "successor'");
        }
        auto from = trim(text.substr(0, cut));
        auto to = trim(text.substr(cut + 1));
        if (from.empty() || to.empty() || to.find(delimiter) != std::string::npos) {
            throw InputError("dependency line " + std::to_string(number) + ": malformed edge '" + text + "'");
        }
        edges.emplace_back(std::move(from), std::move(to));
    }
    return edges;
}

auto project_duration(const Project& project, std::span<const Day> starts) -> Day
{
    if (starts.empty()) {
        return 0;
    }
    Day first = std::numeric_limits<Day>::max();
    Day last = std::numeric_limits<Day>::min();
    for (std::size_t i = 0; i < starts.size(); ++i) {
        first = std::min(first, starts[i]);
        last = std::max(last, starts[i] + project.task(i).duration());
    }
    return last - first;
}

} // namespace crowdsched
