#pragma once

#include "crowdsched/common.hpp"
#include "crowdsched/model.hpp"

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace crowdsched {

/// Seven per-pair similarities in [0,1]; see the index constants below.
using FeatureVector = Eigen::Matrix<double, 7, 1>;

namespace feature {
inline constexpr Eigen::Index prize = 0;
inline constexpr Eigen::Index registration_date = 1;
inline constexpr Eigen::Index submission_date = 2;
inline constexpr Eigen::Index type = 3;
inline constexpr Eigen::Index technology = 4;
inline constexpr Eigen::Index platform = 5;
inline constexpr Eigen::Index text = 6;
} // namespace feature

/// Sorted (term, count) pairs.
using TermVector = std::vector<std::pair<std::string, double>>;

/// Lowercased alphanumeric runs; bytes outside ASCII count as word characters.
auto term_frequencies(std::string_view text) -> TermVector;

/// Cosine of term-frequency vectors. One empty side gives 0; two empty sides give 1.
auto text_similarity(const TermVector& a, const TermVector& b) -> double;
auto text_similarity(std::string_view a, std::string_view b) -> double;

auto feature_vector(const Task& a, const Task& b, const CorpusMaxima& norms) -> FeatureVector;
auto feature_vector(const Task& a, const TermVector& text_a, const Task& b, const TermVector& text_b,
                    const CorpusMaxima& norms) -> FeatureVector;

/// Cosine of the angle between `v` and the all-ones vector of the same length, clamped to [0,1].
/// An all-zero vector scores 0.
template <typename Derived>
auto cosine_to_ones(const Eigen::MatrixBase<Derived>& v) -> typename Derived::Scalar
{
    using Scalar = typename Derived::Scalar;
    const Scalar squares = v.squaredNorm();
    if (squares == Scalar(0)) {
        return Scalar(0);
    }
    // One square root keeps the all-ones vector at exactly 1.
    const Scalar score = v.sum() / std::sqrt(static_cast<Scalar>(v.size()) * squares);
    return std::clamp(score, Scalar(0), Scalar(1));
}

auto cosine_similarity(const Task& a, const Task& b, const CorpusMaxima& norms) -> double;

/// Symmetric task-by-task similarity scores with unit diagonal.
class SimilarityMatrix {
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::vector<std::string> ids, Matrix<double> values);

    [[nodiscard]] auto size() const -> std::size_t { return ids_.size(); }
    [[nodiscard]] auto ids() const -> const std::vector<std::string>& { return ids_; }
    [[nodiscard]] auto values() const -> const Matrix<double>& { return values_; }
    [[nodiscard]] auto operator()(std::size_t i, std::size_t j) const -> double
    {
        return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    [[nodiscard]] auto index_of(const std::string& id) const -> std::size_t;

private:
    std::vector<std::string> ids_;
    Matrix<double> values_;
};

auto similarity_matrix(std::span<const Task> tasks, const CorpusMaxima& norms, unsigned threads = 1)
    -> SimilarityMatrix;

/// Delimited table with task ids as row and column headers, six decimals.
void write_similarity_matrix(std::ostream& out, const SimilarityMatrix& matrix, char delimiter = ',');

} // namespace crowdsched
