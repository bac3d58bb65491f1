#include "crowdsched/predictor.hpp"

#include "crowdsched/similarity.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace crowdsched {

namespace {

constexpr const char* model_header = "crowdsched-model v1";

auto format_exact(double value) -> std::string
{
    std::array<char, 40> buffer{};
    std::snprintf(buffer.data(), buffer.size(), "%.17g", value);
    return buffer.data();
}

auto next_line(std::istream& in, const std::string& what) -> std::istringstream
{
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            return std::istringstream(line);
        }
    }
    throw FormatError("model file ended before " + what);
}

void expect_keyword(std::istringstream& line, const std::string& keyword)
{
    std::string word;
    if (!(line >> word) || word != keyword) {
        throw FormatError("model file: expected '" + keyword + "'");
    }
}

auto read_value(std::istringstream& line, const std::string& what) -> double
{
    std::string token;
    if (!(line >> token)) {
        throw FormatError("model file: missing value in " + what);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw FormatError("model file: bad number '" + token + "' in " + what);
    }
    return value;
}

void expect_end(std::istringstream& line, const std::string& what)
{
    std::string extra;
    if (line >> extra) {
        throw FormatError("model file: trailing data in " + what);
    }
}

struct Batch {
    Matrix<double> inputs;  // features x samples, normalized
    Matrix<double> targets; // 1 x samples
};

auto gather(std::span<const TrainingSample> samples, const std::vector<std::size_t>& indices,
            const FeatureScaler<double>& scaler) -> Batch
{
    Batch batch{Matrix<double>(feature_count, static_cast<Eigen::Index>(indices.size())),
                Matrix<double>(1, static_cast<Eigen::Index>(indices.size()))};
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto& s = samples[indices[k]];
        batch.inputs.col(static_cast<Eigen::Index>(k)) = scaler(s.features);
        batch.targets(0, static_cast<Eigen::Index>(k)) = s.label;
    }
    return batch;
}

auto scaler_for(std::span<const TrainingSample> samples, const std::vector<std::size_t>& indices)
    -> FeatureScaler<double>
{
    std::vector<FeatureRow<double>> rows;
    rows.reserve(indices.size());
    for (auto i : indices) {
        rows.push_back(samples[i].features);
    }
    return fit_scaler<double>(rows);
}

struct Fit {
    Mlp<double> network;
    std::size_t epochs = 0;
    double loss = 0.0; // validation loss at the kept epoch, or final training loss
};

/// Mini-batch gradient descent. With a validation set, keeps the best epoch and
/// stops after `patience` epochs without improvement.
auto fit(const Batch& training, const Batch* validation, const TrainConfig& config, std::size_t epochs,
         std::uint64_t seed) -> Fit
{
    Rng rng(seed);
    Mlp<double> network(config.widths);
    network.initialize(rng);

    const auto n = static_cast<std::size_t>(training.inputs.cols());
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::vector<Layer<double>> gradient;

    Fit best{network, 0, std::numeric_limits<double>::infinity()};
    std::size_t stale = 0;
    double training_loss = 0.0;
    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        shuffle(order.begin(), order.end(), rng);
        for (std::size_t first = 0; first < n; first += config.batch_size) {
            const auto last = std::min(n, first + config.batch_size);
            const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(first),
                                                 order.begin() + static_cast<std::ptrdiff_t>(last));
            const Matrix<double> x = training.inputs(Eigen::all, rows);
            const Matrix<double> y = training.targets(Eigen::all, rows);
            network.loss_and_gradient(x, y, gradient);
            network.descend(gradient, config.learning_rate);
        }
        training_loss = network.loss(training.inputs, training.targets);
        if (!std::isfinite(training_loss)) {
            throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch));
        }
        if (validation == nullptr) {
            continue;
        }
        const double loss = network.loss(validation->inputs, validation->targets);
        if (loss < best.loss) {
            best = {network, epoch, loss};
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    if (validation == nullptr) {
        return {network, epochs, training_loss};
    }
    return best;
}

/// True when the fit does no better than predicting the mean target: either the
/// rectified layers died or early stopping ended the run on the initial plateau.
auto stalled(const Fit& result, const Batch& training) -> bool
{
    const auto targets = training.targets.row(0);
    const double variance = (targets.array() - targets.mean()).square().mean();
    if (variance <= 0.0) {
        return false;
    }
    return result.network.loss(training.inputs, training.targets) >= 0.95 * variance;
}

/// fit, redrawn from fresh initial weights while the result stalls. Keeps the
/// attempt with the lowest reported loss.
auto fit_restarting(const Batch& training, const Batch* validation, const TrainConfig& config, std::size_t epochs,
                    std::uint64_t seed) -> Fit
{
    auto best = fit(training, validation, config, epochs, seed);
    for (std::size_t attempt = 1; attempt <= config.restarts && stalled(best, training); ++attempt) {
        auto next = fit(training, validation, config, epochs, derive_seed(seed, attempt));
        if (next.loss < best.loss) {
            best = std::move(next);
        }
    }
    return best;
}

} // namespace

auto PredictorModel::probability(const FeatureRow<double>& raw) const -> double
{
    if (!raw.allFinite()) {
        throw InputError("predictor features must be finite");
    }
    return network_.forward(normalize(raw))(0, 0);
}

void PredictorModel::validate() const
{
    const auto widths = network_.widths();
    if (widths.empty() || widths.front() != feature_count || widths.back() != 1) {
        throw FormatError("predictor network must map 4 features to 1 output");
    }
    if ((scaler_.min.array() > scaler_.max.array()).any()) {
        throw FormatError("normalization minimum exceeds maximum");
    }
}

void PredictorModel::save(std::ostream& out) const
{
    out << model_header << '\n';
    out << "layers";
    for (auto w : network_.widths()) {
        out << ' ' << w;
    }
    out << '\n';
    auto row = [&](const char* keyword, const FeatureRow<double>& v) {
        out << keyword;
        for (Eigen::Index k = 0; k < v.size(); ++k) {
            out << ' ' << format_exact(v(k));
        }
        out << '\n';
    };
    row("min", scaler_.min);
    row("max", scaler_.max);
    for (std::size_t l = 0; l < network_.layers().size(); ++l) {
        const auto& layer = network_.layers()[l];
        out << "weights " << l << ' ' << layer.weights.rows() << ' ' << layer.weights.cols() << '\n';
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                out << (c ? " " : "") << format_exact(layer.weights(r, c));
            }
            out << '\n';
        }
        out << "bias";
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
            out << ' ' << format_exact(layer.bias(r));
        }
        out << '\n';
    }
    out << "trained " << epochs_ << ' ' << format_exact(validation_loss_) << '\n';
}

auto PredictorModel::load(std::istream& in) -> PredictorModel
{
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') {
        header.pop_back();
    }
    if (header != model_header) {
        throw FormatError("unsupported model file header '" + header + "' (expected '" + model_header + "')");
    }
    auto line = next_line(in, "layer widths");
    expect_keyword(line, "layers");
    std::vector<Eigen::Index> widths;
    Eigen::Index w = 0;
    while (line >> w) {
        widths.push_back(w);
    }
    if (widths.size() < 2 || widths.front() != feature_count || widths.back() != 1 ||
        std::any_of(widths.begin(), widths.end(), [](Eigen::Index v) { return v < 1; })) {
        throw FormatError("model file: invalid layer widths");
    }
    FeatureScaler<double> scaler;
    for (const auto* keyword : {"min", "max"}) {
        line = next_line(in, keyword);
        expect_keyword(line, keyword);
        auto& target = std::string(keyword) == "min" ? scaler.min : scaler.max;
        for (Eigen::Index k = 0; k < feature_count; ++k) {
            target(k) = read_value(line, keyword);
        }
        expect_end(line, keyword);
    }
    Mlp<double> network(widths);
    for (std::size_t l = 0; l < network.layers().size(); ++l) {
        auto& layer = network.layers()[l];
        line = next_line(in, "layer " + std::to_string(l));
        expect_keyword(line, "weights");
        std::size_t index = 0;
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        if (!(line >> index >> rows >> cols) || index != l || rows != layer.weights.rows() ||
            cols != layer.weights.cols()) {
            throw FormatError("model file: layer " + std::to_string(l) + " shape mismatch");
        }
        for (Eigen::Index r = 0; r < rows; ++r) {
            line = next_line(in, "weights row");
            for (Eigen::Index c = 0; c < cols; ++c) {
                layer.weights(r, c) = read_value(line, "weights");
            }
            expect_end(line, "weights row");
        }
        line = next_line(in, "bias");
        expect_keyword(line, "bias");
        for (Eigen::Index r = 0; r < rows; ++r) {
            layer.bias(r) = read_value(line, "bias");
        }
        expect_end(line, "bias");
    }
    line = next_line(in, "training metadata");
    expect_keyword(line, "trained");
    std::size_t epochs = 0;
    if (!(line >> epochs)) {
        throw FormatError("model file: bad epoch count");
    }
    const double loss = read_value(line, "trained");
    PredictorModel model(std::move(network), scaler);
    model.set_training_metadata(epochs, loss);
    return model;
}

void TrainConfig::validate() const
{
    if (folds < 2) {
        throw ConfigError("cross-validation needs at least 2 folds");
    }
    if (patience < 1) {
        throw ConfigError("early-stopping patience must be at least 1");
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("learning rate must be positive");
    }
    if (batch_size < 1 || max_epochs < 1) {
        throw ConfigError("batch size and epoch budget must be positive");
    }
    if (widths.size() < 2 || widths.front() != feature_count || widths.back() != 1) {
        throw ConfigError("network must map 4 features to 1 output");
    }
}

auto kfold_partition(std::size_t n, std::size_t folds, Rng& rng) -> std::vector<std::vector<std::size_t>>
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out(folds);
    for (std::size_t k = 0; k < n; ++k) {
        out[k % folds].push_back(order[k]);
    }
    for (auto& fold : out) {
        std::sort(fold.begin(), fold.end());
    }
    return out;
}

auto train(std::span<const TrainingSample> samples, const TrainConfig& config) -> TrainResult
{
    config.validate();
    if (samples.size() < config.folds) {
        throw ConfigError("need at least " + std::to_string(config.folds) + " samples for " +
                          std::to_string(config.folds) + "-fold cross-validation, got " +
                          std::to_string(samples.size()));
    }
    for (const auto& s : samples) {
        if (!s.features.allFinite() || !(s.label >= 0.0 && s.label <= 1.0)) {
            throw InputError("training samples need finite features and labels in [0,1]");
        }
    }

    Rng split_rng(derive_seed(config.seed, 0x5eed));
    const auto folds = kfold_partition(samples.size(), config.folds, split_rng);

    TrainingReport report;
    report.fold_losses.resize(config.folds);
    report.fold_epochs.resize(config.folds);
    parallel_for(config.folds, config.threads, [&](std::size_t k) {
        std::vector<std::size_t> training;
        for (std::size_t other = 0; other < config.folds; ++other) {
            if (other != k) {
                training.insert(training.end(), folds[other].begin(), folds[other].end());
            }
        }
        std::sort(training.begin(), training.end());
        const auto scaler = scaler_for(samples, training);
        const auto train_batch = gather(samples, training, scaler);
        const auto valid_batch = gather(samples, folds[k], scaler);
        const auto result = fit_restarting(train_batch, &valid_batch, config, config.max_epochs, derive_seed(config.seed, k + 1));
        report.fold_losses[k] = result.loss;
        report.fold_epochs[k] = result.epochs;
    });

    const auto k = static_cast<double>(config.folds);
    report.mean_loss = std::accumulate(report.fold_losses.begin(), report.fold_losses.end(), 0.0) / k;
    double spread = 0.0;
    for (auto loss : report.fold_losses) {
        spread += (loss - report.mean_loss) * (loss - report.mean_loss);
    }
    report.stddev_loss = std::sqrt(spread / k);
    const double mean_epochs =
        static_cast<double>(std::accumulate(report.fold_epochs.begin(), report.fold_epochs.end(), std::size_t{0})) / k;
    report.final_epochs = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(mean_epochs)));

    std::vector<std::size_t> all(samples.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto scaler = scaler_for(samples, all);
    const auto final_fit = fit_restarting(gather(samples, all, scaler), nullptr, config, report.final_epochs,
                               derive_seed(config.seed, 0));
    PredictorModel model(final_fit.network, scaler);
    model.set_training_metadata(report.final_epochs, report.mean_loss);
    return {std::move(model), std::move(report)};
}

auto prize_of(const Task& task, PrizeFeature prize) -> double
{
    return prize == PrizeFeature::Total ? task.total_prize : task.prize;
}

auto build_training_samples(const TaskCatalog& catalog, const SampleOptions& options) -> std::vector<TrainingSample>
{
    const auto& tasks = catalog.tasks();
    std::vector<TermVector> texts;
    texts.reserve(tasks.size());
    for (const auto& t : tasks) {
        texts.push_back(term_frequencies(t.requirements));
    }
    std::vector<TrainingSample> samples;
    samples.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& probe = tasks[i];
        const Day day = probe.registration_start;
        std::vector<PlatformTask> open;
        double similarity = 0.0;
        for (std::size_t j = 0; j < tasks.size(); ++j) {
            const auto& other = tasks[j];
            const PlatformTask placed{j, other.registration_start, other.registration_window(), other.duration(),
                                      other.valid_submissions};
            if (j == i || !placed.open_on(day)) {
                continue;
            }
            open.push_back(placed);
            similarity += cosine_to_ones(feature_vector(probe, texts[i], other, texts[j], catalog.maxima()));
        }
        TrainingSample sample;
        sample.features << static_cast<double>(probe.duration()), prize_of(probe, options.prize),
            static_cast<double>(open.size()), open.empty() ? 0.0 : similarity / static_cast<double>(open.size());
        sample.label = options.labels == LabelMode::TaskOutcome ? (probe.status == TaskStatus::Failed ? 1.0 : 0.0)
                                                                : empirical_failure_ratio(open);
        samples.push_back(sample);
    }
    return samples;
}

auto features_for_day(const Task& task, const Probe& probe, Day day, Day lookahead, const PlatformState& state,
                      PrizeFeature prize) -> FeatureRow<double>
{
    if (day < 0 || lookahead < 0 || day + lookahead > state.horizon()) {
        throw RangeError("day " + std::to_string(day) + "+" + std::to_string(lookahead) + " outside horizon [0, " +
                         std::to_string(state.horizon()) + "]");
    }
    const auto open = state.open_set(day, probe);
    const auto& sims = state.similarities();
    FeatureRow<double> row;
    row(input::duration) = static_cast<double>(task.duration());
    row(input::prize) = prize_of(task, prize);
    if (lookahead == 0) {
        row(input::open_tasks) = static_cast<double>(open.size());
        row(input::avg_similarity) = average_similarity(probe.similarity_index, open, sims);
    } else {
        const double rate = arrival_rate(open, state.options().denominator);
        row(input::open_tasks) = future_open_tasks(open, day, lookahead, rate);
        row(input::avg_similarity) = future_avg_similarity(probe.similarity_index, open, day, lookahead, rate, sims);
    }
    return row;
}

auto predict_for_day(const FailurePredictor& model, const Task& task, const Probe& probe, Day day, Day lookahead,
                     const PlatformState& state, PrizeFeature prize) -> double
{
    return model.probability(features_for_day(task, probe, day, lookahead, state, prize));
}

auto best_start_day(const FailurePredictor& model, const Task& task, const Probe& probe, Day day,
                    const PlatformState& state, PrizeFeature prize) -> StartChoice
{
    if (day < 0 || day > state.horizon()) {
        throw RangeError("arrival day " + std::to_string(day) + " outside horizon [0, " +
                         std::to_string(state.horizon()) + "]");
    }
    StartChoice choice;
    choice.candidates.fill(std::numeric_limits<double>::quiet_NaN());
    choice.day = day;
    choice.probability = std::numeric_limits<double>::infinity();
    for (Day lookahead = 0; lookahead <= 2 && day + lookahead <= state.horizon(); ++lookahead) {
        const double p = predict_for_day(model, task, probe, day, lookahead, state, prize);
        choice.candidates[static_cast<std::size_t>(lookahead)] = p;
        if (p < choice.probability) {
            choice.probability = p;
            choice.day = day + lookahead;
        }
    }
    return choice;
}

} // namespace crowdsched
