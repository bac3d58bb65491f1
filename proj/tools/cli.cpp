#include "cli.hpp"

#include "crowdsched/model.hpp"
#include "crowdsched/oracle.hpp"
#include "crowdsched/predictor.hpp"
#include "crowdsched/report.hpp"
#include "crowdsched/scheduler.hpp"
#include "crowdsched/similarity.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace crowdsched::cli {

namespace {

namespace fs = std::filesystem;

class IoError : public Error {
public:
    using Error::Error;
};

class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Threshold check failed; the report is still written.
class ThresholdError : public Error {
public:
    using Error::Error;
};

auto open_input(const std::string& path) -> std::ifstream
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read '" + path + "'");
    }
    return in;
}

auto open_output(const fs::path& path) -> std::ofstream
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    return out;
}

auto make_directory(const std::string& dir) -> fs::path
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir + "'");
    }
    return dir;
}

auto fixed(double value, int digits = 4) -> std::string
{
    std::array<char, 64> buffer{};
    std::snprintf(buffer.data(), buffer.size(), "%.*f", digits, value);
    return buffer.data();
}

auto delimiter_of(const std::string& text) -> char
{
    if (text == "\\t" || text == "tab") {
        return '\t';
    }
    if (text.size() != 1) {
        throw ConfigError("delimiter must be a single character");
    }
    return text.front();
}

auto load_catalog(const std::string& path, char delimiter, std::ostream& err) -> ParseResult
{
    auto in = open_input(path);
    auto parsed = parse_dataset(in, {delimiter});
    for (const auto& issue : parsed.issues) {
        err << path << ": row " << issue.row << ": " << issue.field << ": " << issue.message << '\n';
    }
    return parsed;
}

/// Flags shared by the subcommands that build and schedule a project.
struct ProjectFlags {
    std::string dataset;
    std::string delimiter = ",";
    std::string project_id;
    std::vector<std::string> task_ids;
    std::string dependencies;
    std::string background;
    std::optional<Day> horizon;
    std::string model_path;
    std::optional<double> constant_failure;
    std::string prize = "mp";
    std::string denominator = "duration";
    double similarity_target = 0.6;
    double similarity_tolerance = 0.05;
    bool no_similarity = false;
    GAConfig ga;
    std::string out_dir = ".";
};

void add_project_flags(CLI::App& app, ProjectFlags& f)
{
    app.add_option("dataset,--dataset", f.dataset, "Task table")->required();
    app.add_option("--delimiter", f.delimiter, "Field delimiter of the task table");
    app.add_option("--project", f.project_id, "Schedule the tasks with this Project ID");
    app.add_option("--tasks", f.task_ids, "Explicit task ids (comma separated)")->delimiter(',');
    app.add_option("--deps", f.dependencies, "Dependency file, one 'predecessor,successor' per line");
    app.add_option("--background", f.background, "Other marketplace tasks to replay (task table format)");
    app.add_option("--horizon", f.horizon, "Largest start day a gene may take");
    auto* model = app.add_option("--model", f.model_path, "Trained predictor model file");
    auto* constant = app.add_option("--constant-failure", f.constant_failure,
                                    "Use a fixed failure probability instead of a model")
                         ->check(CLI::Range(0.0, 1.0));
    model->excludes(constant);
    app.add_option("--prize", f.prize, "Prize feature: mp (monetary) or tmp (total)")
        ->check(CLI::IsMember({"mp", "tmp"}));
    app.add_option("--arrival-denominator", f.denominator, "Arrival rate divides by task 'duration' or 'window'")
        ->check(CLI::IsMember({"duration", "window"}));
    app.add_option("--similarity-target", f.similarity_target, "Similarity that parallel tasks may share");
    app.add_option("--similarity-tolerance", f.similarity_tolerance, "Half width of the similarity band");
    app.add_flag("--no-similarity", f.no_similarity, "Drop the similarity repair and objective");
    app.add_option("--population", f.ga.population, "Population size (even, >= 4)");
    app.add_option("--generations", f.ga.generations, "Generations per run");
    app.add_option("--crossover", f.ga.crossover_probability, "Crossover probability");
    app.add_option("--variation", f.ga.variation_probability, "Per-chromosome mutation probability");
    app.add_option("--tournament", f.ga.tournament_size, "Tournament size");
    app.add_option("--runs", f.ga.runs, "Independent runs merged into one front");
    app.add_option("--seed", f.ga.seed, "Seed for all randomness");
    app.add_option("--threads", f.ga.threads, "Worker threads (results do not depend on it)");
    app.add_option("--out", f.out_dir, "Output directory");
}

struct LoadedProblem {
    TaskCatalog catalog;
    std::unique_ptr<FailurePredictor> model;
    std::unique_ptr<SchedulingProblem> problem;
};

auto load_problem(const ProjectFlags& f, std::ostream& err) -> LoadedProblem
{
    LoadedProblem loaded;
    const char delimiter = delimiter_of(f.delimiter);
    loaded.catalog = load_catalog(f.dataset, delimiter, err).catalog;
    const auto& catalog = loaded.catalog;

    std::vector<std::string> ids = f.task_ids;
    if (ids.empty()) {
        for (const auto& t : catalog.tasks()) {
            if (f.project_id.empty() || t.project_id == f.project_id) {
                ids.push_back(t.id);
            }
        }
    }
    if (ids.empty()) {
        throw InputError("no tasks selected" + (f.project_id.empty() ? "" : " for project '" + f.project_id + "'"));
    }
    std::vector<IdEdge> edges;
    if (!f.dependencies.empty()) {
        auto in = open_input(f.dependencies);
        edges = read_dependencies(in);
    }
    auto project = build_project(catalog, ids, edges, f.horizon, f.project_id);

    std::vector<Task> background;
    if (!f.background.empty()) {
        auto parsed = load_catalog(f.background, delimiter, err);
        // Shift the replay onto the dataset's day numbering.
        const auto shift = static_cast<Day>((parsed.catalog.epoch() - catalog.epoch()).count());
        std::set<std::string> selected(ids.begin(), ids.end());
        for (auto t : parsed.catalog.tasks()) {
            if (selected.contains(t.id)) {
                continue;
            }
            t.registration_start += shift;
            t.registration_end += shift;
            t.submission_end += shift;
            background.push_back(std::move(t));
        }
    }
    std::vector<Task> corpus = catalog.tasks();
    corpus.insert(corpus.end(), background.begin(), background.end());
    const auto norms = corpus_maxima(corpus);

    if (f.constant_failure) {
        const double p = *f.constant_failure;
        loaded.model = std::make_unique<FunctionPredictor>([p](const FeatureRow<double>&) { return p; });
    } else if (!f.model_path.empty()) {
        auto in = open_input(f.model_path);
        loaded.model = std::make_unique<PredictorModel>(PredictorModel::load(in));
    } else {
        throw ConfigError("either --model or --constant-failure is required");
    }

    ProblemOptions options;
    options.band = {f.similarity_target, f.similarity_tolerance};
    options.similarity_enabled = !f.no_similarity;
    options.prize = f.prize == "tmp" ? PrizeFeature::Total : PrizeFeature::Monetary;
    options.platform.denominator =
        f.denominator == "window" ? ArrivalDenominator::RegistrationWindow : ArrivalDenominator::TaskDuration;
    loaded.problem =
        std::make_unique<SchedulingProblem>(std::move(project), *loaded.model, options, std::move(background), norms);
    return loaded;
}

auto front_context(const SchedulingProblem& problem, const ProjectFlags& f) -> FrontContext
{
    FrontContext context;
    context.project = &problem.project();
    const auto historical = problem.project().historical_duration();
    if (historical > 0) {
        context.historical_duration = static_cast<double>(historical);
    }
    context.similarity_enabled = !f.no_similarity;
    context.seed = f.ga.seed;
    return context;
}

auto cmd_ingest(const std::string& dataset, const std::string& delimiter, const std::string& json_path, bool strict,
                std::ostream& out, std::ostream& err) -> int
{
    const auto parsed = load_catalog(dataset, delimiter_of(delimiter), err);
    const auto& catalog = parsed.catalog;
    const auto& tasks = catalog.tasks();

    nlohmann::ordered_json summary;
    summary["tasks"] = tasks.size();
    summary["row_issues"] = parsed.issues.size();
    out << tasks.size() << " tasks\n";
    if (!tasks.empty()) {
        Day last = 0;
        for (const auto& t : tasks) {
            last = std::max(last, t.submission_end);
        }
        const auto first_date = format_date(catalog.epoch());
        const auto last_date = format_date(catalog.epoch() + std::chrono::days{last});
        out << "date span: " << first_date << " .. " << last_date << " (" << last << " days)\n";
        summary["first_date"] = first_date;
        summary["last_date"] = last_date;
        summary["span_days"] = last;

        auto range = [&](const char* name, auto field) {
            auto [lo, hi] = std::minmax_element(tasks.begin(), tasks.end(),
                                                [&](const Task& a, const Task& b) { return field(a) < field(b); });
            out << name << ": " << field(*lo) << " .. " << field(*hi) << '\n';
            summary["ranges"][name] = {field(*lo), field(*hi)};
        };
        range("duration", [](const Task& t) { return t.duration(); });
        range("prize", [](const Task& t) { return t.prize; });
        range("total_prize", [](const Task& t) { return t.total_prize; });
        range("registrations", [](const Task& t) { return t.registrations; });
        range("submissions", [](const Task& t) { return t.submissions; });
        range("valid_submissions", [](const Task& t) { return t.valid_submissions; });
        const auto failed = std::count_if(tasks.begin(), tasks.end(),
                                          [](const Task& t) { return t.status == TaskStatus::Failed; });
        out << "failed: " << failed << '\n';
        summary["failed"] = failed;
    }
    const auto& m = catalog.maxima();
    out << "corpus maxima: prize_diff=" << m.prize_diff << " registration_diff=" << m.registration_diff
        << " submission_diff=" << m.submission_diff << " technologies=" << m.technologies << '\n';
    summary["corpus_maxima"] = {{"prize_diff", m.prize_diff},
                                {"registration_diff", m.registration_diff},
                                {"submission_diff", m.submission_diff},
                                {"technologies", m.technologies}};
    if (!parsed.issues.empty()) {
        out << parsed.issues.size() << " rows rejected\n";
    }
    if (!json_path.empty()) {
        auto file = open_output(json_path);
        file << summary.dump(2) << '\n';
    }
    return strict && !parsed.issues.empty() ? schema_error : ok;
}

auto cmd_train(const std::string& dataset, const std::string& delimiter, const std::string& model_path,
               const std::string& report_path, const TrainConfig& config, const std::string& labels,
               const std::string& prize, std::ostream& out, std::ostream& err) -> int
{
    const auto parsed = load_catalog(dataset, delimiter_of(delimiter), err);
    SampleOptions options;
    options.labels = labels == "outcome" ? LabelMode::TaskOutcome : LabelMode::DayFailureRatio;
    options.prize = prize == "tmp" ? PrizeFeature::Total : PrizeFeature::Monetary;
    const auto samples = build_training_samples(parsed.catalog, options);
    const auto result = train(samples, config);

    {
        auto file = open_output(model_path);
        result.model.save(file);
    }
    const auto& r = result.report;
    out << samples.size() << " samples, " << config.folds << "-fold validation MSE " << fixed(r.mean_loss, 6)
        << " +- " << fixed(r.stddev_loss, 6) << ", final fit " << r.final_epochs << " epochs\n";
    if (!report_path.empty()) {
        auto file = open_output(report_path);
        file << training_to_json(r, config).dump(2) << '\n';
    }
    return ok;
}

auto cmd_schedule(const ProjectFlags& f, const std::string& matrix_path, std::ostream& out, std::ostream& err) -> int
{
    const auto loaded = load_problem(f, err);
    const auto& problem = *loaded.problem;
    const auto result = evolve(problem, f.ga);
    if (result.front.empty()) {
        throw InfeasibleError("no feasible schedule within horizon " +
                              std::to_string(problem.project().max_horizon()));
    }
    const auto dir = make_directory(f.out_dir);
    const auto context = front_context(problem, f);
    {
        auto file = open_output(dir / "front.json");
        file << front_to_json(result, context).dump(2) << '\n';
    }
    {
        auto file = open_output(dir / "front.csv");
        write_front_table(file, result, context);
    }
    {
        auto file = open_output(dir / "diagnostics.csv");
        write_diagnostics_table(file, result, context);
    }
    {
        auto file = open_output(dir / "duration_failure.csv");
        write_duration_failure(file, result);
    }
    {
        auto file = open_output(dir / "duration_similarity.csv");
        write_duration_similarity(file, result);
    }
    if (!matrix_path.empty()) {
        auto file = open_output(matrix_path);
        write_similarity_matrix(file, problem.similarities());
    }

    const auto& shortest = result.front.front().evaluation.fitness;
    out << result.front.size() << " non-dominated schedules from " << result.evaluations << " evaluations\n";
    out << "shortest: " << shortest.duration << " days, failure " << fixed(shortest.failure) << ", similarity cost "
        << fixed(shortest.similarity_cost) << '\n';
    if (context.historical_duration) {
        out << "historical duration " << *context.historical_duration << " days, acceleration "
            << fixed(schedule_acceleration(*context.historical_duration, shortest.duration), 1) << "%\n";
    }
    return ok;
}

struct OracleThresholds {
    double min_nondominated = 0.95;
    double min_hypervolume = 0.95;
    std::optional<double> max_regret;
};

auto cmd_oracle_check(const ProjectFlags& f, const OracleThresholds& thresholds, const EnumerationLimits& limits,
                      std::ostream& out, std::ostream& err) -> int
{
    const auto loaded = load_problem(f, err);
    const auto& problem = *loaded.problem;
    check_enumerable(problem.project(), problem.project().max_horizon(), limits);
    const auto found = evolve(problem, f.ga);
    const auto exact = exact_front(problem, std::nullopt, limits, f.ga.threads);
    const auto comparison = compare_fronts(found, exact);

    const auto dir = make_directory(f.out_dir);
    {
        auto file = open_output(dir / "oracle.json");
        file << comparison_to_json(comparison, exact).dump(2) << '\n';
    }
    {
        auto file = open_output(dir / "front.json");
        file << front_to_json(found, front_context(problem, f)).dump(2) << '\n';
    }
    out << "exact front " << comparison.exact_size << " of " << exact.schedules << " schedules; found "
        << comparison.found_size << '\n';
    out << "non-dominated fraction " << fixed(comparison.nondominated_fraction) << ", hypervolume ratio "
        << fixed(comparison.hypervolume_ratio) << ", max regret " << fixed(comparison.max_regret) << '\n';

    bool pass = comparison.nondominated_fraction >= thresholds.min_nondominated &&
                comparison.hypervolume_ratio >= thresholds.min_hypervolume;
    if (thresholds.max_regret) {
        pass = pass && comparison.max_regret <= *thresholds.max_regret;
    }
    if (!pass) {
        throw ThresholdError("oracle thresholds violated");
    }
    return ok;
}

/// Flags that take no value; a config entry `name=true` turns them on.
const std::set<std::string> switch_names{"no-similarity", "strict"};

/// Expands `--config file` into flags placed before the command line ones, so
/// explicit flags win.
auto expand_config(const std::vector<std::string>& args) -> std::vector<std::string>
{
    std::vector<std::string> rest;
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[++i];
        } else if (args[i].starts_with("--config=")) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (path.empty() || rest.empty()) {
        return rest;
    }
    auto in = open_input(path);
    std::vector<std::string> expanded{rest.front()};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        line = trim(line);
        if (line.empty() || line.front() == '#' || line.front() == ';') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(number) + ": expected key=value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (switch_names.contains(key)) {
            if (value == "true" || value == "1" || value == "yes") {
                expanded.push_back("--" + key);
            }
            continue;
        }
        expanded.push_back("--" + key);
        expanded.push_back(value);
    }
    expanded.insert(expanded.end(), rest.begin() + 1, rest.end());
    return expanded;
}

} // namespace

auto run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) -> int
{
    CLI::App app{"Evolutionary scheduler for crowdsourced software tasks", "crowdsched"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.set_help_all_flag("--help-all");

    std::string delimiter = ",";

    auto* ingest = app.add_subcommand("ingest", "Parse a task table and summarize it");
    std::string ingest_dataset;
    std::string ingest_json;
    bool strict = false;
    ingest->add_option("dataset,--dataset", ingest_dataset, "Task table")->required();
    ingest->add_option("--delimiter", delimiter, "Field delimiter");
    ingest->add_option("--json", ingest_json, "Write the summary as JSON");
    ingest->add_flag("--strict", strict, "Exit 3 when any row is rejected");

    auto* train_cmd = app.add_subcommand("train", "Fit the failure predictor with K-fold cross-validation");
    std::string train_dataset;
    std::string model_path;
    std::string report_path;
    std::string labels = "ratio";
    std::string train_prize = "mp";
    TrainConfig train_config;
    train_cmd->add_option("dataset,--dataset", train_dataset, "Task table with outcome columns")->required();
    train_cmd->add_option("--delimiter", delimiter, "Field delimiter");
    train_cmd->add_option("--model", model_path, "Model file to write")->required();
    train_cmd->add_option("--report", report_path, "Fold report (JSON)");
    train_cmd->add_option("--folds", train_config.folds, "Cross-validation folds");
    train_cmd->add_option("--epochs", train_config.max_epochs, "Epoch budget per fold");
    train_cmd->add_option("--patience", train_config.patience, "Early-stopping patience");
    train_cmd->add_option("--learning-rate", train_config.learning_rate, "Gradient step size");
    train_cmd->add_option("--batch-size", train_config.batch_size, "Mini-batch size");
    train_cmd->add_option("--restarts", train_config.restarts, "Fresh initializations allowed when a fit stalls at the mean");
    train_cmd->add_option("--seed", train_config.seed, "Seed for initialization and shuffling");
    train_cmd->add_option("--threads", train_config.threads, "Folds trained in parallel");
    train_cmd->add_option("--labels", labels, "Targets: 'ratio' (day failure ratio) or 'outcome' (task failed)")
        ->check(CLI::IsMember({"ratio", "outcome"}));
    train_cmd->add_option("--prize", train_prize, "Prize feature: mp or tmp")->check(CLI::IsMember({"mp", "tmp"}));

    auto* schedule = app.add_subcommand("schedule", "Evolve a Pareto front of schedules for a project");
    ProjectFlags schedule_flags;
    std::string matrix_path;
    add_project_flags(*schedule, schedule_flags);
    schedule->add_option("--similarity-matrix", matrix_path, "Also write the task similarity matrix");

    auto* oracle = app.add_subcommand("oracle-check", "Compare an evolved front with the exhaustive front");
    ProjectFlags oracle_flags;
    OracleThresholds thresholds;
    EnumerationLimits limits;
    add_project_flags(*oracle, oracle_flags);
    oracle->add_option("--min-nondominated", thresholds.min_nondominated, "Required non-dominated fraction");
    oracle->add_option("--min-hypervolume", thresholds.min_hypervolume, "Required hypervolume ratio");
    oracle->add_option("--max-regret", thresholds.max_regret, "Largest allowed per-objective regret");
    oracle->add_option("--max-tasks", limits.max_tasks, "Enumeration guard: task count");
    oracle->add_option("--max-horizon", limits.max_horizon, "Enumeration guard: horizon");
    oracle->add_option("--max-schedules", limits.max_schedules, "Enumeration guard: schedule estimate");

    try {
        auto args = expand_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "crowdsched: " << e.what() << '\n';
        return schema_error;
    } catch (const IoError& e) {
        err << "crowdsched: " << e.what() << '\n';
        return io_error;
    } catch (const Error& e) {
        err << "crowdsched: " << e.what() << '\n';
        return schema_error;
    }

    try {
        if (*ingest) {
            return cmd_ingest(ingest_dataset, delimiter, ingest_json, strict, out, err);
        }
        if (*train_cmd) {
            return cmd_train(train_dataset, delimiter, model_path, report_path, train_config, labels, train_prize,
                             out, err);
        }
        if (*schedule) {
            return cmd_schedule(schedule_flags, matrix_path, out, err);
        }
        if (*oracle) {
            return cmd_oracle_check(oracle_flags, thresholds, limits, out, err);
        }
    } catch (const IoError& e) {
        err << "crowdsched: " << e.what() << '\n';
        return io_error;
    } catch (const FormatError& e) {
        err << "crowdsched: model: " << e.what() << '\n';
        return model_mismatch;
    } catch (const CycleError& e) {
        err << "crowdsched: " << e.what() << '\n';
        return infeasible;
    } catch (const InfeasibleError& e) {
        err << "crowdsched: " << e.what() << '\n';
        return infeasible;
    } catch (const GuardError& e) {
        err << "crowdsched: " << e.what() << '\n';
        return guard_refused;
    } catch (const ThresholdError& e) {
        err << "crowdsched: " << e.what() << '\n';
        return failure;
    } catch (const DivergenceError& e) {
        err << "crowdsched: " << e.what() << '\n';
        return failure;
    } catch (const SchemaError& e) {
        err << "crowdsched: schema: " << e.what() << '\n';
        return schema_error;
    } catch (const Error& e) {
        err << "crowdsched: " << e.what() << '\n';
        return schema_error;
    }
    return failure;
}

} // namespace crowdsched::cli
