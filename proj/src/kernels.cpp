#include "ic/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ic::kernels {

namespace {

// Below this many candidates the thread start-up costs more than the loop.
constexpr std::ptrdiff_t kParallelThreshold = 256;

double dot(const Embedding& a, const Embedding& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double cosine(const Embedding& a, double norm_a, const Embedding& b) {
    return dot(a, b) / (norm_a * std::sqrt(dot(b, b)));
}

std::vector<double> column_totals_serial(const Matrix& slice) {
    std::vector<double> totals(slice.cols(), 0.0);
    for (std::size_t c = 0; c < slice.cols(); ++c) {
        for (std::size_t r = 0; r < slice.rows(); ++r) totals[c] += slice(r, c);
    }
    return totals;
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

double jaccard(const TokenBag& a, const TokenBag& b) {
    const auto& x = a.tokens();
    const auto& y = b.tokens();
    if (x.empty() && y.empty()) return 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t common = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i] < y[j]) {
            ++i;
        } else if (y[j] < x[i]) {
            ++j;
        } else {
            ++common;
            ++i;
            ++j;
        }
    }
    const std::size_t uni = x.size() + y.size() - common;
    return static_cast<double>(common) / static_cast<double>(uni);
}

std::vector<double> jaccard_scores_serial(const TokenBag& target,
                                          std::span<const TokenBag> candidates) {
    std::vector<double> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = jaccard(target, candidates[i]);
    return out;
}

std::vector<double> jaccard_scores(const TokenBag& target, std::span<const TokenBag> candidates) {
    const auto n = static_cast<std::ptrdiff_t>(candidates.size());
    std::vector<double> out(candidates.size());
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = jaccard(target, candidates[i]);
    return out;
}

std::vector<double> cosine_scores_serial(const Embedding& target,
                                         std::span<const Embedding> candidates) {
    const double norm = std::sqrt(dot(target, target));
    std::vector<double> out(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = cosine(target, norm, candidates[i]);
    return out;
}

std::vector<double> cosine_scores(const Embedding& target, std::span<const Embedding> candidates) {
    const double norm = std::sqrt(dot(target, target));
    const auto n = static_cast<std::ptrdiff_t>(candidates.size());
    std::vector<double> out(candidates.size());
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = cosine(target, norm, candidates[i]);
    return out;
}

std::vector<double> statement_scores_serial(const Matrix& slice,
                                            std::span<const std::size_t> column_statement,
                                            std::size_t statement_count) {
    const auto totals = column_totals_serial(slice);
    std::vector<double> scores(statement_count, 0.0);
    for (std::size_t c = 0; c < totals.size(); ++c) scores[column_statement[c]] += totals[c];
    return scores;
}

std::vector<double> statement_scores(const Matrix& slice,
                                     std::span<const std::size_t> column_statement,
                                     std::size_t statement_count) {
    const auto cols = static_cast<std::ptrdiff_t>(slice.cols());
    const std::size_t rows = slice.rows();
    std::vector<double> totals(slice.cols(), 0.0);
    // Per-column row order matches the serial reference, so results are bitwise equal.
#pragma omp parallel for schedule(static) if (cols * static_cast<std::ptrdiff_t>(rows) >= 4096)
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < rows; ++r) sum += slice(r, static_cast<std::size_t>(c));
        totals[c] = sum;
    }
    std::vector<double> scores(statement_count, 0.0);
    for (std::size_t c = 0; c < totals.size(); ++c) scores[column_statement[c]] += totals[c];
    return scores;
}

}  // namespace ic::kernels
