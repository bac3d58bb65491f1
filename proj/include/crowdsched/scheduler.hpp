#pragma once

#include "crowdsched/common.hpp"
#include "crowdsched/model.hpp"
#include "crowdsched/pareto.hpp"
#include "crowdsched/platform.hpp"
#include "crowdsched/predictor.hpp"
#include "crowdsched/random.hpp"
#include "crowdsched/similarity.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crowdsched {

/// One start day per project task, plus whether every dependency edge holds.
struct Chromosome {
    std::vector<Day> starts;
    bool feasible = true;

    friend auto operator==(const Chromosome&, const Chromosome&) -> bool = default;
};

struct FitnessTriple {
    double duration = 0.0;        // days
    double similarity_cost = 0.0; // relative duration added by similarity postponements
    double failure = 0.0;         // mean predicted failure probability

    [[nodiscard]] auto point() const -> Point { return {duration, similarity_cost, failure}; }
    friend auto operator==(const FitnessTriple&, const FitnessTriple&) -> bool = default;
};

/// Parallel tasks whose similarity falls inside [target - tolerance, target + tolerance] may overlap.
struct SimilarityBand {
    double target = 0.6;
    double tolerance = 0.05;

    [[nodiscard]] auto contains(double similarity) const -> bool
    {
        return similarity >= target - tolerance && similarity <= target + tolerance;
    }
};

struct ProblemOptions {
    SimilarityBand band;
    bool similarity_enabled = true;
    PlatformOptions platform;
    PrizeFeature prize = PrizeFeature::Monetary;
    /// Catalog day that maps to project day 0 for background tasks;
    /// defaults to the project's earliest historical registration start.
    std::optional<Day> background_origin;
};

/// A project together with everything needed to score schedules for it.
/// Similarity rows 0..n-1 are the project tasks, background tasks follow.
class SchedulingProblem {
public:
    SchedulingProblem(Project project, const FailurePredictor& model, ProblemOptions options = {},
                      std::vector<Task> background = {}, std::optional<CorpusMaxima> norms = std::nullopt);

    [[nodiscard]] auto project() const -> const Project& { return project_; }
    [[nodiscard]] auto model() const -> const FailurePredictor& { return *model_; }
    [[nodiscard]] auto options() const -> const ProblemOptions& { return options_; }
    [[nodiscard]] auto similarities() const -> const SimilarityMatrix& { return sims_; }
    [[nodiscard]] auto background() const -> const std::vector<PlatformTask>& { return background_; }

private:
    Project project_;
    const FailurePredictor* model_;
    ProblemOptions options_;
    SimilarityMatrix sims_;
    std::vector<PlatformTask> background_;
};

struct GAConfig {
    std::size_t population = 100;
    std::size_t generations = 200;
    double crossover_probability = 0.9;
    double variation_probability = 0.1;
    std::size_t tournament_size = 2;
    std::uint64_t seed = 0;
    /// Independent runs with derived seeds; their fronts are merged.
    std::size_t runs = 1;
    unsigned threads = 1;

    void validate() const;
};

/// Lowers genes above their latest feasible start, then raises every task to at
/// least one day after each predecessor's submission end, in topological order.
/// When the horizon is too tight for any feasible plan, genes pushed past it are
/// clamped and the chromosome is flagged infeasible.
auto repair_dependencies(Chromosome chromosome, const Project& project) -> Chromosome;

/// Edge-by-edge check, independent of the repair routine.
auto satisfies_dependencies(std::span<const Day> starts, const Project& project) -> bool;

/// Total days by which finish-to-start edges are violated.
auto dependency_violation(std::span<const Day> starts, const Project& project) -> double;

struct SimilarityRepair {
    Chromosome chromosome;
    std::size_t passes = 0;
    bool converged = true;
};

/// Postpones, for each overlapping parallel pair outside the similarity band, the
/// task with the longer registration window to the other's registration end.
/// Sweeps until nothing moves, at most one sweep per task; dependencies are
/// repaired after every sweep.
auto repair_similarity(Chromosome chromosome, const Project& project, const SimilarityMatrix& sims,
                       const SimilarityBand& band) -> SimilarityRepair;

/// Swaps the segment [first_cut, second_cut) between the parents.
auto crossover_at(const Chromosome& a, const Chromosome& b, std::size_t first_cut, std::size_t second_cut)
    -> std::pair<Chromosome, Chromosome>;

/// Two distinct cut points drawn from [0, length]; parents shorter than 2 are copied.
auto crossover_two_point(const Chromosome& a, const Chromosome& b, Rng& rng) -> std::pair<Chromosome, Chromosome>;

/// Each gene is picked with probability 1/length and swapped with a uniformly
/// chosen other gene. Returns how many genes were picked.
auto shuffle_genes(Chromosome& chromosome, Rng& rng) -> std::size_t;

/// shuffle_genes applied with probability `variation_probability`.
auto mutate_shuffle(Chromosome chromosome, double variation_probability, Rng& rng) -> Chromosome;

struct TaskDiagnostics {
    Day start = 0;
    Day best_day = 0;       // argmin of the three-day failure window
    double failure = 0.0;   // predicted probability on best_day
    std::size_t open_on_arrival = 0;
    double similarity_on_arrival = 0.0;
};

struct Evaluation {
    FitnessTriple fitness;
    Chromosome schedule; // after similarity repair (equals the input with it disabled)
    std::vector<TaskDiagnostics> diagnostics;
    double violation = 0.0;
};

/// Scores a dependency-repaired chromosome. The similarity cost compares the
/// schedule after similarity repair with the dependency-only schedule.
auto evaluate(const Chromosome& chromosome, const SchedulingProblem& problem) -> Evaluation;

/// The marketplace seen by a schedule: project tasks at their starts plus background.
auto platform_for(std::span<const Day> starts, const SchedulingProblem& problem) -> PlatformState;

/// Earliest schedule first, the rest uniform in [0, horizon] and repaired.
auto init_population(const Project& project, std::size_t size, Rng& rng) -> std::vector<Chromosome>;

/// Genes uniform in [0, max_horizon], then dependency-repaired.
auto random_chromosome(const Project& project, Rng& rng) -> Chromosome;

struct ParetoMember {
    Chromosome genome;
    Evaluation evaluation;
};

struct GenerationStats {
    std::size_t run = 0;
    std::size_t generation = 0;
    std::size_t front_size = 0; // members of the population's first front
    std::size_t archive_size = 0;
    FitnessTriple best;         // per-objective minimum over the archive
};

struct ParetoResult {
    std::string project_id;
    std::size_t task_count = 0;
    std::vector<ParetoMember> front;
    std::vector<GenerationStats> generations;
    std::size_t evaluations = 0;
};

/// Called after initialization (generation 0) and after every generation with the
/// current non-dominated archive.
using GenerationObserver = std::function<void(const GenerationStats&, std::span<const ParetoMember>)>;

/// NSGA-II over start-day chromosomes. Returns every non-dominated feasible
/// schedule seen, deduplicated by objective values, ordered by duration.
auto evolve(const SchedulingProblem& problem, const GAConfig& config, const GenerationObserver& observer = {})
    -> ParetoResult;

/// Non-dominated archive with duplicate objective vectors dropped (first kept).
class ParetoArchive {
public:
    /// Returns true when the member entered the archive.
    auto insert(const ParetoMember& member) -> bool;
    [[nodiscard]] auto members() const -> const std::vector<ParetoMember>& { return members_; }
    [[nodiscard]] auto sorted() const -> std::vector<ParetoMember>;

private:
    std::vector<ParetoMember> members_;
};

/// Relative shortening against the historical duration, in percent.
auto schedule_acceleration(double final_duration, double recommended_duration) -> double;

} // namespace crowdsched
