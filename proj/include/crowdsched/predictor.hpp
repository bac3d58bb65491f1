#pragma once

#include "crowdsched/common.hpp"
#include "crowdsched/model.hpp"
#include "crowdsched/platform.hpp"
#include "crowdsched/random.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace crowdsched {

inline constexpr Eigen::Index feature_count = 4;

/// Raw predictor inputs: task duration, prize, open tasks, average similarity.
template <typename Scalar = double>
using FeatureRow = Eigen::Matrix<Scalar, feature_count, 1>;

namespace input {
inline constexpr Eigen::Index duration = 0;
inline constexpr Eigen::Index prize = 1;
inline constexpr Eigen::Index open_tasks = 2;
inline constexpr Eigen::Index avg_similarity = 3;
} // namespace input

/// Five hidden layers (32, 16, 8, 4, 2) and a single output unit.
inline const std::vector<Eigen::Index> default_widths{feature_count, 32, 16, 8, 4, 2, 1};

template <typename Scalar>
struct Layer {
    Matrix<Scalar> weights; // out x in
    Vector<Scalar> bias;
};

/// Fully connected network: rectified-linear hidden layers, sigmoid output.
/// Inputs are column-major batches (features x samples).
template <typename Scalar = double>
class Mlp {
public:
    Mlp() = default;

    /// Zero weights and biases.
    explicit Mlp(const std::vector<Eigen::Index>& widths)
    {
        if (widths.size() < 2) {
            throw ConfigError("network needs an input and an output width");
        }
        for (std::size_t l = 1; l < widths.size(); ++l) {
            if (widths[l] < 1 || widths[l - 1] < 1) {
                throw ConfigError("layer widths must be positive");
            }
            layers_.push_back({Matrix<Scalar>::Zero(widths[l], widths[l - 1]), Vector<Scalar>::Zero(widths[l])});
        }
    }

    [[nodiscard]] auto widths() const -> std::vector<Eigen::Index>
    {
        std::vector<Eigen::Index> out;
        if (layers_.empty()) {
            return out;
        }
        out.push_back(layers_.front().weights.cols());
        for (const auto& layer : layers_) {
            out.push_back(layer.weights.rows());
        }
        return out;
    }

    [[nodiscard]] auto layers() const -> const std::vector<Layer<Scalar>>& { return layers_; }
    [[nodiscard]] auto layers() -> std::vector<Layer<Scalar>>& { return layers_; }

    /// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    void initialize(Rng& rng)
    {
        for (auto& layer : layers_) {
            const auto limit = std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
            for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
                for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                    layer.weights(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
                }
            }
            layer.bias.setZero();
        }
    }

    template <typename Derived>
    [[nodiscard]] auto forward(const Eigen::MatrixBase<Derived>& inputs) const -> Matrix<Scalar>
    {
        Matrix<Scalar> a = inputs.template cast<Scalar>();
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Matrix<Scalar> z = (layers_[l].weights * a).colwise() + layers_[l].bias;
            a = l + 1 == layers_.size() ? sigmoid(z) : relu(z);
        }
        return a;
    }

    /// Mean squared error over the batch.
    template <typename DerivedX, typename DerivedY>
    [[nodiscard]] auto loss(const Eigen::MatrixBase<DerivedX>& inputs, const Eigen::MatrixBase<DerivedY>& targets) const
        -> Scalar
    {
        return (forward(inputs) - targets).squaredNorm() / static_cast<Scalar>(inputs.cols());
    }

    /// Mean squared error and its gradient by backpropagation.
    template <typename DerivedX, typename DerivedY>
    auto loss_and_gradient(const Eigen::MatrixBase<DerivedX>& inputs, const Eigen::MatrixBase<DerivedY>& targets,
                           std::vector<Layer<Scalar>>& gradient) const -> Scalar
    {
        const auto depth = layers_.size();
        std::vector<Matrix<Scalar>> activations;
        activations.reserve(depth + 1);
        activations.push_back(inputs.template cast<Scalar>());
        for (std::size_t l = 0; l < depth; ++l) {
            Matrix<Scalar> z = (layers_[l].weights * activations.back()).colwise() + layers_[l].bias;
            activations.push_back(l + 1 == depth ? sigmoid(z) : relu(z));
        }
        const auto batch = static_cast<Scalar>(inputs.cols());
        const Matrix<Scalar> error = activations.back() - targets.template cast<Scalar>();
        const Scalar value = error.squaredNorm() / batch;

        gradient.resize(depth);
        // Output delta through the sigmoid: dL/dz = 2 (y - t) / B * y (1 - y).
        Matrix<Scalar> delta = (Scalar(2) / batch) * error.array() * activations.back().array() *
                               (Scalar(1) - activations.back().array());
        for (std::size_t l = depth; l-- > 0;) {
            gradient[l].weights = delta * activations[l].transpose();
            gradient[l].bias = delta.rowwise().sum();
            if (l > 0) {
                // ReLU derivative read off the stored activation: a > 0 iff z > 0.
                delta = ((layers_[l].weights.transpose() * delta).array() * (activations[l].array() > Scalar(0)).template cast<Scalar>())
                            .matrix();
            }
        }
        return value;
    }

    void descend(const std::vector<Layer<Scalar>>& gradient, Scalar rate)
    {
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            layers_[l].weights -= rate * gradient[l].weights;
            layers_[l].bias -= rate * gradient[l].bias;
        }
    }

    template <typename Other>
    [[nodiscard]] auto cast() const -> Mlp<Other>
    {
        Mlp<Other> out;
        for (const auto& layer : layers_) {
            out.layers().push_back({layer.weights.template cast<Other>(), layer.bias.template cast<Other>()});
        }
        return out;
    }

    friend auto operator==(const Mlp& a, const Mlp& b) -> bool
    {
        if (a.layers_.size() != b.layers_.size()) {
            return false;
        }
        for (std::size_t l = 0; l < a.layers_.size(); ++l) {
            const auto& x = a.layers_[l];
            const auto& y = b.layers_[l];
            if (x.weights.rows() != y.weights.rows() || x.weights.cols() != y.weights.cols() ||
                x.weights != y.weights || x.bias != y.bias) {
                return false;
            }
        }
        return true;
    }

private:
    static auto relu(const Matrix<Scalar>& z) -> Matrix<Scalar> { return z.cwiseMax(Scalar(0)); }

    static auto sigmoid(const Matrix<Scalar>& z) -> Matrix<Scalar>
    {
        return z.unaryExpr([](Scalar v) {
            using std::exp;
            return v >= Scalar(0) ? Scalar(1) / (Scalar(1) + exp(-v)) : exp(v) / (Scalar(1) + exp(v));
        });
    }

    std::vector<Layer<Scalar>> layers_;
};

/// Per-feature min-max scaling to [0,1], clamped; a constant feature maps to 0.5.
template <typename Scalar = double>
struct FeatureScaler {
    FeatureRow<Scalar> min = FeatureRow<Scalar>::Zero();
    FeatureRow<Scalar> max = FeatureRow<Scalar>::Ones();

    template <typename Derived>
    [[nodiscard]] auto operator()(const Eigen::MatrixBase<Derived>& raw) const -> FeatureRow<Scalar>
    {
        FeatureRow<Scalar> out;
        for (Eigen::Index k = 0; k < feature_count; ++k) {
            const Scalar span = max(k) - min(k);
            out(k) = span > Scalar(0) ? std::clamp((raw(k) - min(k)) / span, Scalar(0), Scalar(1)) : Scalar(0.5);
        }
        return out;
    }

    friend auto operator==(const FeatureScaler&, const FeatureScaler&) -> bool = default;
};

template <typename Scalar = double>
auto fit_scaler(std::span<const FeatureRow<Scalar>> rows) -> FeatureScaler<Scalar>
{
    FeatureScaler<Scalar> scaler;
    if (rows.empty()) {
        return scaler;
    }
    scaler.min = rows.front();
    scaler.max = rows.front();
    for (const auto& r : rows) {
        scaler.min = scaler.min.cwiseMin(r);
        scaler.max = scaler.max.cwiseMax(r);
    }
    return scaler;
}

/// Anything that maps raw features to a failure probability in [0,1].
class FailurePredictor {
public:
    virtual ~FailurePredictor() = default;
    [[nodiscard]] virtual auto probability(const FeatureRow<double>& raw) const -> double = 0;
};

/// Wraps a callable; used for fixed or hand-set failure models.
class FunctionPredictor final : public FailurePredictor {
public:
    explicit FunctionPredictor(std::function<double(const FeatureRow<double>&)> fn) : fn_(std::move(fn)) {}
    [[nodiscard]] auto probability(const FeatureRow<double>& raw) const -> double override { return fn_(raw); }

private:
    std::function<double(const FeatureRow<double>&)> fn_;
};

class PredictorModel final : public FailurePredictor {
public:
    PredictorModel() : network_(default_widths) {}
    PredictorModel(Mlp<double> network, FeatureScaler<double> scaler)
        : network_(std::move(network)), scaler_(std::move(scaler))
    {
        validate();
    }

    [[nodiscard]] auto network() const -> const Mlp<double>& { return network_; }
    [[nodiscard]] auto scaler() const -> const FeatureScaler<double>& { return scaler_; }
    [[nodiscard]] auto epochs() const -> std::size_t { return epochs_; }
    [[nodiscard]] auto validation_loss() const -> double { return validation_loss_; }
    void set_training_metadata(std::size_t epochs, double validation_loss)
    {
        epochs_ = epochs;
        validation_loss_ = validation_loss;
    }

    [[nodiscard]] auto normalize(const FeatureRow<double>& raw) const -> FeatureRow<double> { return scaler_(raw); }

    /// Throws InputError on non-finite features.
    [[nodiscard]] auto probability(const FeatureRow<double>& raw) const -> double override;

    void save(std::ostream& out) const;
    /// Throws FormatError on a wrong header, version or layout.
    static auto load(std::istream& in) -> PredictorModel;

    friend auto operator==(const PredictorModel& a, const PredictorModel& b) -> bool
    {
        return a.network_ == b.network_ && a.scaler_ == b.scaler_ && a.epochs_ == b.epochs_ &&
               a.validation_loss_ == b.validation_loss_;
    }

private:
    void validate() const;

    Mlp<double> network_;
    FeatureScaler<double> scaler_;
    std::size_t epochs_ = 0;
    double validation_loss_ = 0.0;
};

struct TrainingSample {
    FeatureRow<double> features;
    double label = 0.0;
};

struct TrainConfig {
    std::size_t folds = 10;
    std::size_t max_epochs = 500;
    std::size_t patience = 10;
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::vector<Eigen::Index> widths = default_widths;
    unsigned threads = 1;
    std::size_t restarts = 5; // fresh initializations allowed when a fit stalls at the mean

    void validate() const;
};

struct TrainingReport {
    std::vector<double> fold_losses; // validation MSE at each fold's best epoch
    std::vector<std::size_t> fold_epochs;
    double mean_loss = 0.0;
    double stddev_loss = 0.0;
    std::size_t final_epochs = 0;
};

struct TrainResult {
    PredictorModel model;
    TrainingReport report;
};

/// Shuffled K-way split of [0, n); every index lands in exactly one fold.
auto kfold_partition(std::size_t n, std::size_t folds, Rng& rng) -> std::vector<std::vector<std::size_t>>;

/// K-fold cross-validation with early stopping, then a final fit on all samples
/// for the mean best-epoch budget. Deterministic given the seed.
auto train(std::span<const TrainingSample> samples, const TrainConfig& config) -> TrainResult;

enum class PrizeFeature { Monetary, Total };
enum class LabelMode { DayFailureRatio, TaskOutcome };

struct SampleOptions {
    LabelMode labels = LabelMode::DayFailureRatio;
    PrizeFeature prize = PrizeFeature::Monetary;
};

/// One sample per task at its historical registration start, measured against
/// the other catalog tasks open that day.
auto build_training_samples(const TaskCatalog& catalog, const SampleOptions& options = {})
    -> std::vector<TrainingSample>;

auto prize_of(const Task& task, PrizeFeature prize) -> double;

/// Features the probe task sees when arriving `lookahead` days after `day`;
/// lookahead 0 uses the day's own counts, later days use projections.
/// Throws RangeError when day + lookahead leaves [0, horizon].
auto features_for_day(const Task& task, const Probe& probe, Day day, Day lookahead, const PlatformState& state,
                      PrizeFeature prize = PrizeFeature::Monetary) -> FeatureRow<double>;

auto predict_for_day(const FailurePredictor& model, const Task& task, const Probe& probe, Day day, Day lookahead,
                     const PlatformState& state, PrizeFeature prize = PrizeFeature::Monetary) -> double;

struct StartChoice {
    Day day = 0;
    double probability = 0.0;
    std::array<double, 3> candidates{}; // NaN where the window passes the horizon
};

/// Lowest predicted failure among day, day+1, day+2 (truncated at the horizon);
/// ties go to the earliest day.
auto best_start_day(const FailurePredictor& model, const Task& task, const Probe& probe, Day day,
                    const PlatformState& state, PrizeFeature prize = PrizeFeature::Monetary) -> StartChoice;

} // namespace crowdsched
