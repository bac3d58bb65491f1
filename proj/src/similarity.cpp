#include "crowdsched/similarity.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <cstdio>
#include <map>
#include <ostream>

namespace crowdsched {

namespace {

auto word_char(unsigned char c) -> bool { return c >= 0x80 || std::isalnum(c) != 0; }

/// 1 - |a - b| / max; identical by vacuity when the corpus has no spread.
auto closeness(double a, double b, double max) -> double
{
    if (max <= 0.0) {
        return 1.0;
    }
    return std::clamp(1.0 - std::abs(a - b) / max, 0.0, 1.0);
}

auto shared_labels(const std::vector<std::string>& a, const std::vector<std::string>& b) -> std::size_t
{
    std::size_t count = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

} // namespace

auto term_frequencies(std::string_view text) -> TermVector
{
    std::map<std::string, double> counts;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            counts[word] += 1.0;
            word.clear();
        }
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (word_char(c)) {
            word.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return {counts.begin(), counts.end()};
}

auto text_similarity(const TermVector& a, const TermVector& b) -> double
{
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    if (a.empty() || b.empty()) {
        return 0.0;
    }
    double dot = 0.0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (i->first < j->first) {
            ++i;
        } else if (j->first < i->first) {
            ++j;
        } else {
            dot += i->second * j->second;
            ++i;
            ++j;
        }
    }
    auto norm = [](const TermVector& v) {
        double s = 0.0;
        for (const auto& [term, count] : v) {
            s += count * count;
        }
        return std::sqrt(s);
    };
    return std::clamp(dot / (norm(a) * norm(b)), 0.0, 1.0);
}

auto text_similarity(std::string_view a, std::string_view b) -> double
{
    return text_similarity(term_frequencies(a), term_frequencies(b));
}

auto feature_vector(const Task& a, const TermVector& text_a, const Task& b, const TermVector& text_b,
                    const CorpusMaxima& norms) -> FeatureVector
{
    FeatureVector v;
    v(feature::prize) = closeness(a.prize, b.prize, norms.prize_diff);
    v(feature::registration_date) =
        closeness(a.registration_start, b.registration_start, norms.registration_diff);
    v(feature::submission_date) = closeness(a.submission_end, b.submission_end, norms.submission_diff);
    v(feature::type) = a.type == b.type ? 1.0 : 0.0;
    // Overlap relative to the larger set of the pair, so a task matches itself fully.
    const auto larger = std::max(a.technologies.size(), b.technologies.size());
    v(feature::technology) =
        larger == 0 ? 1.0
                    : static_cast<double>(shared_labels(a.technologies, b.technologies)) / static_cast<double>(larger);
    v(feature::platform) = a.platforms == b.platforms ? 1.0 : 0.0;
    v(feature::text) = text_similarity(text_a, text_b);
    return v;
}

auto feature_vector(const Task& a, const Task& b, const CorpusMaxima& norms) -> FeatureVector
{
    return feature_vector(a, term_frequencies(a.requirements), b, term_frequencies(b.requirements), norms);
}

auto cosine_similarity(const Task& a, const Task& b, const CorpusMaxima& norms) -> double
{
    return cosine_to_ones(feature_vector(a, b, norms));
}

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> ids, Matrix<double> values)
    : ids_(std::move(ids)), values_(std::move(values))
{
    if (values_.rows() != values_.cols() || static_cast<std::size_t>(values_.rows()) != ids_.size()) {
        throw InputError("similarity matrix must be square with one id per row");
    }
}

auto SimilarityMatrix::index_of(const std::string& id) const -> std::size_t
{
    const auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) {
        throw LookupError("task '" + id + "' has no similarity row");
    }
    return static_cast<std::size_t>(it - ids_.begin());
}

auto similarity_matrix(std::span<const Task> tasks, const CorpusMaxima& norms, unsigned threads)
    -> SimilarityMatrix
{
    const auto n = static_cast<Eigen::Index>(tasks.size());
    std::vector<TermVector> texts(tasks.size());
    std::vector<std::string> ids(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        texts[i] = term_frequencies(tasks[i].requirements);
        ids[i] = tasks[i].id;
    }
    Matrix<double> values = Matrix<double>::Identity(n, n);
    parallel_for(tasks.size(), threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < tasks.size(); ++j) {
            const double s = cosine_to_ones(feature_vector(tasks[i], texts[i], tasks[j], texts[j], norms));
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
            values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s;
        }
    });
    return {std::move(ids), std::move(values)};
}

void write_similarity_matrix(std::ostream& out, const SimilarityMatrix& matrix, char delimiter)
{
    out << "task";
    for (const auto& id : matrix.ids()) {
        out << delimiter << id;
    }
    out << '\n';
    std::array<char, 32> buffer{};
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out << matrix.ids()[i];
        for (std::size_t j = 0; j < matrix.size(); ++j) {
            std::snprintf(buffer.data(), buffer.size(), "%.6f", matrix(i, j));
            out << delimiter << buffer.data();
        }
        out << '\n';
    }
}

} // namespace crowdsched
