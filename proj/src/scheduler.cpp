#include "crowdsched/scheduler.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <set>
#include <limits>
#include <numeric>
#include <tuple>

namespace crowdsched {

namespace {

void check_length(const Chromosome& chromosome, const Project& project)
{
    if (chromosome.starts.size() != project.size()) {
        throw InputError("chromosome has " + std::to_string(chromosome.starts.size()) + " genes for " +
                         std::to_string(project.size()) + " tasks");
    }
}

auto overlaps(Day start_a, Day window_a, Day start_b, Day window_b) -> bool
{
    // Half-open registration windows: a task moved to the other's registration
    // end no longer counts as parallel.
    return start_a < start_b + window_b && start_b < start_a + window_a;
}

} // namespace

SchedulingProblem::SchedulingProblem(Project project, const FailurePredictor& model, ProblemOptions options,
                                     std::vector<Task> background, std::optional<CorpusMaxima> norms)
    : project_(std::move(project)), model_(&model), options_(options)
{
    std::vector<Task> all = project_.tasks();
    all.insert(all.end(), background.begin(), background.end());
    sims_ = similarity_matrix(all, norms ? *norms : corpus_maxima(all));
    const Day origin = options_.background_origin.value_or(project_.historical_origin());
    for (std::size_t k = 0; k < background.size(); ++k) {
        const auto& t = background[k];
        background_.push_back({project_.size() + k, t.registration_start - origin, t.registration_window(),
                               t.duration(), t.valid_submissions});
    }
}

void GAConfig::validate() const
{
    if (population < 4 || population % 2 != 0) {
        throw ConfigError("population size must be even and at least 4");
    }
    for (double p : {crossover_probability, variation_probability}) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ConfigError("probabilities must lie in [0,1]");
        }
    }
    if (tournament_size < 1) {
        throw ConfigError("tournament size must be at least 1");
    }
    if (runs < 1) {
        throw ConfigError("at least one run is required");
    }
}

auto satisfies_dependencies(std::span<const Day> starts, const Project& project) -> bool
{
    return std::all_of(project.edges().begin(), project.edges().end(), [&](const Edge& e) {
        return starts[e.to] >= starts[e.from] + project.task(e.from).duration() + 1;
    });
}

auto dependency_violation(std::span<const Day> starts, const Project& project) -> double
{
    double total = 0.0;
    for (const auto& e : project.edges()) {
        total += std::max(0, starts[e.from] + project.task(e.from).duration() + 1 - starts[e.to]);
    }
    return total;
}

auto repair_dependencies(Chromosome chromosome, const Project& project) -> Chromosome
{
    check_length(chromosome, project);
    const Day horizon = project.max_horizon();
    auto& starts = chromosome.starts;
    // Pulling genes down to their latest start first keeps the forward pass
    // inside the horizon whenever the horizon admits a feasible plan at all.
    if (project.fits_horizon()) {
        const auto& latest = project.latest_starts();
        for (std::size_t i = 0; i < starts.size(); ++i) {
            starts[i] = std::min(starts[i], latest[i]);
        }
    }
    for (auto i : project.topological_order()) {
        Day required = 0;
        for (auto p : project.predecessors(i)) {
            required = std::max(required, starts[p] + project.task(p).duration() + 1);
        }
        starts[i] = std::clamp(std::max(starts[i], required), 0, horizon);
    }
    chromosome.feasible = satisfies_dependencies(starts, project);
    return chromosome;
}

auto repair_similarity(Chromosome chromosome, const Project& project, const SimilarityMatrix& sims,
                       const SimilarityBand& band) -> SimilarityRepair
{
    SimilarityRepair out{repair_dependencies(std::move(chromosome), project), 0, false};
    auto& starts = out.chromosome.starts;
    const auto n = project.size();
    const Day horizon = project.max_horizon();
    const auto max_passes = std::max<std::size_t>(1, n);
    for (std::size_t pass = 1; pass <= max_passes; ++pass) {
        out.passes = pass;
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (project.sequential(i, j)) {
                    continue;
                }
                const Day wi = project.task(i).registration_window();
                const Day wj = project.task(j).registration_window();
                if (!overlaps(starts[i], wi, starts[j], wj) || band.contains(sims(i, j))) {
                    continue;
                }
                // Longer window moves; then the later registration end; then the later index.
                bool move_j = wj > wi;
                if (wj == wi) {
                    move_j = starts[j] + wj >= starts[i] + wi;
                }
                const auto mover = move_j ? j : i;
                const auto other = move_j ? i : j;
                // Capped at the latest start so the dependency repair never pulls the move back.
                const Day cap = project.fits_horizon() ? project.latest_starts()[mover] : horizon;
                const Day target = std::min(starts[other] + project.task(other).registration_window(), cap);
                if (target > starts[mover]) {
                    starts[mover] = target;
                    moved = true;
                }
            }
        }
        if (!moved) {
            out.converged = true;
            break;
        }
        out.chromosome = repair_dependencies(std::move(out.chromosome), project);
    }
    out.chromosome = repair_dependencies(std::move(out.chromosome), project);
    return out;
}

auto crossover_at(const Chromosome& a, const Chromosome& b, std::size_t first_cut, std::size_t second_cut)
    -> std::pair<Chromosome, Chromosome>
{
    if (a.starts.size() != b.starts.size()) {
        throw InputError("crossover parents differ in length");
    }
    if (first_cut > second_cut || second_cut > a.starts.size()) {
        throw InputError("crossover cuts out of range");
    }
    Chromosome left = a;
    Chromosome right = b;
    for (auto k = first_cut; k < second_cut; ++k) {
        std::swap(left.starts[k], right.starts[k]);
    }
    return {std::move(left), std::move(right)};
}

auto crossover_two_point(const Chromosome& a, const Chromosome& b, Rng& rng) -> std::pair<Chromosome, Chromosome>
{
    const auto n = a.starts.size();
    if (n < 2) {
        return {a, b};
    }
    auto first = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n)));
    auto second = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    if (second >= first) {
        ++second;
    }
    if (first > second) {
        std::swap(first, second);
    }
    return crossover_at(a, b, first, second);
}

auto shuffle_genes(Chromosome& chromosome, Rng& rng) -> std::size_t
{
    auto& genes = chromosome.starts;
    const auto n = genes.size();
    if (n < 2) {
        return 0;
    }
    const double rate = 1.0 / static_cast<double>(n);
    std::size_t picked = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!rng.bernoulli(rate)) {
            continue;
        }
        ++picked;
        auto j = rng.index(n - 1);
        if (j >= i) {
            ++j;
        }
        std::swap(genes[i], genes[j]);
    }
    return picked;
}

auto mutate_shuffle(Chromosome chromosome, double variation_probability, Rng& rng) -> Chromosome
{
    if (rng.bernoulli(variation_probability)) {
        shuffle_genes(chromosome, rng);
    }
    return chromosome;
}

auto platform_for(std::span<const Day> starts, const SchedulingProblem& problem) -> PlatformState
{
    const auto& project = problem.project();
    std::vector<PlatformTask> placed;
    placed.reserve(project.size() + problem.background().size());
    for (std::size_t i = 0; i < project.size(); ++i) {
        const auto& t = project.task(i);
        placed.push_back({i, starts[i], t.registration_window(), t.duration(), t.valid_submissions});
    }
    placed.insert(placed.end(), problem.background().begin(), problem.background().end());
    // Two extra days so the three-day window of a task on the horizon stays inside.
    return {std::move(placed), project.max_horizon() + 2, problem.similarities(), problem.options().platform};
}

auto evaluate(const Chromosome& chromosome, const SchedulingProblem& problem) -> Evaluation
{
    const auto& project = problem.project();
    const auto& options = problem.options();
    const auto dependent = repair_dependencies(chromosome, project);

    Evaluation out;
    out.schedule = options.similarity_enabled
                       ? repair_similarity(dependent, project, problem.similarities(), options.band).chromosome
                       : dependent;
    const auto& starts = out.schedule.starts;
    out.violation = dependency_violation(starts, project);

    const auto duration = static_cast<double>(project_duration(project, starts));
    out.fitness.duration = duration;
    if (options.similarity_enabled) {
        const auto base = static_cast<double>(project_duration(project, dependent.starts));
        // Postponing the earliest task can shorten the span; the cost stays non-negative.
        out.fitness.similarity_cost = std::max(0.0, (duration - base) / std::max(1.0, base));
    }

    const auto state = platform_for(starts, problem);
    out.diagnostics.resize(project.size());
    double failure = 0.0;
    for (std::size_t i = 0; i < project.size(); ++i) {
        const Probe probe{i, i};
        const auto choice = best_start_day(problem.model(), project.task(i), probe, starts[i], state, options.prize);
        const auto open = state.open_set(starts[i], probe);
        out.diagnostics[i] = {starts[i], choice.day, choice.probability, open.size(),
                              average_similarity(i, open, problem.similarities())};
        failure += choice.probability;
    }
    out.fitness.failure = project.size() > 0 ? failure / static_cast<double>(project.size()) : 0.0;
    return out;
}

auto init_population(const Project& project, std::size_t size, Rng& rng) -> std::vector<Chromosome>
{
    if (size < 1) {
        throw ConfigError("population size must be at least 1");
    }
    std::vector<Chromosome> population;
    population.reserve(size);
    population.push_back(repair_dependencies({project.earliest_schedule(), true}, project));
    while (population.size() < size) {
        population.push_back(random_chromosome(project, rng));
    }
    return population;
}

auto random_chromosome(const Project& project, Rng& rng) -> Chromosome
{
    Chromosome c;
    c.starts.resize(project.size());
    for (auto& gene : c.starts) {
        gene = static_cast<Day>(rng.uniform_int(0, project.max_horizon()));
    }
    return repair_dependencies(std::move(c), project);
}

auto ParetoArchive::insert(const ParetoMember& member) -> bool
{
    const auto candidate = member.evaluation.fitness.point();
    for (const auto& m : members_) {
        const auto p = m.evaluation.fitness.point();
        if (p == candidate || dominates(p, candidate)) {
            return false;
        }
    }
    std::erase_if(members_, [&](const ParetoMember& m) { return dominates(candidate, m.evaluation.fitness.point()); });
    members_.push_back(member);
    return true;
}

auto ParetoArchive::sorted() const -> std::vector<ParetoMember>
{
    auto out = members_;
    std::stable_sort(out.begin(), out.end(), [](const ParetoMember& a, const ParetoMember& b) {
        const auto& x = a.evaluation.fitness;
        const auto& y = b.evaluation.fitness;
        return std::tie(x.duration, x.similarity_cost, x.failure) < std::tie(y.duration, y.similarity_cost, y.failure);
    });
    return out;
}

auto evolve(const SchedulingProblem& problem, const GAConfig& config, const GenerationObserver& observer)
    -> ParetoResult
{
    config.validate();
    const auto& project = problem.project();
    if (project.size() == 0) {
        throw ConfigError("project has no tasks");
    }
    const auto n = config.population;
    ParetoResult result;
    result.project_id = project.id();
    result.task_count = project.size();
    ParetoArchive archive;

    auto evaluate_all = [&](const std::vector<Chromosome>& genomes) {
        std::vector<ParetoMember> members(genomes.size());
        parallel_for(genomes.size(), config.threads, [&](std::size_t k) {
            members[k] = {genomes[k], evaluate(genomes[k], problem)};
        });
        result.evaluations += genomes.size();
        return members;
    };
    auto ranking_of = [](const std::vector<ParetoMember>& members) {
        std::vector<Point> points;
        std::vector<double> violations;
        for (const auto& m : members) {
            points.push_back(m.evaluation.fitness.point());
            violations.push_back(m.evaluation.violation);
        }
        return rank_population(points, violations);
    };
    auto absorb = [&](const std::vector<ParetoMember>& members) {
        for (const auto& m : members) {
            if (m.evaluation.violation == 0.0) {
                archive.insert(m);
            }
        }
    };

    for (std::size_t run = 0; run < config.runs; ++run) {
        const auto seed = derive_seed(config.seed, run);
        auto record = [&](std::size_t generation, const Ranking& ranking) {
            GenerationStats stats{run, generation, ranking.fronts.empty() ? 0 : ranking.fronts.front().size(),
                                  archive.members().size(), {}};
            stats.best = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity()};
            for (const auto& m : archive.members()) {
                const auto& f = m.evaluation.fitness;
                stats.best.duration = std::min(stats.best.duration, f.duration);
                stats.best.similarity_cost = std::min(stats.best.similarity_cost, f.similarity_cost);
                stats.best.failure = std::min(stats.best.failure, f.failure);
            }
            result.generations.push_back(stats);
            if (observer) {
                observer(stats, archive.members());
            }
        };

        Rng init_rng(derive_seed(seed, 0, 0));
        auto population = evaluate_all(init_population(project, n, init_rng));
        absorb(population);
        auto ranking = ranking_of(population);
        record(0, ranking);

        for (std::size_t generation = 1; generation <= config.generations; ++generation) {
            Rng selection_rng(derive_seed(seed, generation, 0));
            const auto parents = select_parents(ranking, n, config.tournament_size, selection_rng);

            std::vector<Chromosome> offspring(n);
            for (std::size_t pair = 0; pair < n / 2; ++pair) {
                Rng rng(derive_seed(seed, generation, pair + 1));
                const auto& a = population[parents[2 * pair]].genome;
                const auto& b = population[parents[2 * pair + 1]].genome;
                auto children = rng.bernoulli(config.crossover_probability) ? crossover_two_point(a, b, rng)
                                                                             : std::pair{a, b};
                offspring[2 * pair] =
                    repair_dependencies(mutate_shuffle(std::move(children.first), config.variation_probability, rng),
                                        project);
                offspring[2 * pair + 1] =
                    repair_dependencies(mutate_shuffle(std::move(children.second), config.variation_probability, rng),
                                        project);
            }
            // Swaps never create new start days, so a child that repeats a genome
            // already present is replaced by a fresh random one.
            {
                std::set<std::vector<Day>> seen;
                for (const auto& m : population) {
                    seen.insert(m.genome.starts);
                }
                Rng immigrant_rng(derive_seed(seed, generation, n + 1));
                for (auto& child : offspring) {
                    for (int attempt = 0; attempt < 8 && !seen.insert(child.starts).second; ++attempt) {
                        child = random_chromosome(project, immigrant_rng);
                    }
                }
            }
            auto children = evaluate_all(offspring);
            absorb(children);

            population.insert(population.end(), std::make_move_iterator(children.begin()),
                              std::make_move_iterator(children.end()));
            // Clones of an earlier member compete only for the places left over
            // once every distinct genome has been ranked.
            std::vector<std::size_t> distinct;
            std::vector<std::size_t> clones;
            {
                std::set<std::vector<Day>> seen;
                for (std::size_t k = 0; k < population.size(); ++k) {
                    (seen.insert(population[k].genome.starts).second ? distinct : clones).push_back(k);
                }
            }
            std::vector<ParetoMember> unique;
            unique.reserve(distinct.size());
            for (auto k : distinct) {
                unique.push_back(population[k]);
            }
            const auto combined = ranking_of(unique);
            const auto keep = survivors(combined, std::min(n, unique.size()));
            const auto last_rank = combined.fronts.size();

            std::vector<ParetoMember> next;
            Ranking carried;
            next.reserve(n);
            for (auto k : keep) {
                next.push_back(std::move(population[distinct[k]]));
                carried.rank.push_back(combined.rank[k]);
                carried.crowding.push_back(combined.crowding[k]);
            }
            for (std::size_t c = 0; next.size() < n; ++c) {
                next.push_back(std::move(population[clones[c]]));
                carried.rank.push_back(last_rank);
                carried.crowding.push_back(0.0);
            }
            std::vector<std::size_t> first;
            for (std::size_t k = 0; k < next.size(); ++k) {
                if (carried.rank[k] == 0) {
                    first.push_back(k);
                }
            }
            carried.fronts.push_back(std::move(first));
            population = std::move(next);
            ranking = std::move(carried);
            record(generation, ranking);
        }
    }
    result.front = archive.sorted();
    return result;
}

auto schedule_acceleration(double final_duration, double recommended_duration) -> double
{
    if (!(final_duration > 0.0)) {
        throw InputError("final duration must be positive");
    }
    return 100.0 * (final_duration - recommended_duration) / final_duration;
}

} // namespace crowdsched
