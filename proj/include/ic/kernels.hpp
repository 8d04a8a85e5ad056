#pragma once

// Data-parallel inner loops. Every kernel has an OpenMP version (the default
// entry point) and a plain serial reference with identical results, which the
// tests compare and bench/ times against each other.

#include <cstddef>
#include <span>
#include <vector>

#include "ic/codetext.hpp"
#include "ic/matrix.hpp"

namespace ic::kernels {

using Embedding = std::vector<double>;

// |a ∩ b| / |a ∪ b|; 0 when both are empty.
double jaccard(const TokenBag& a, const TokenBag& b);

std::vector<double> jaccard_scores(const TokenBag& target, std::span<const TokenBag> candidates);
std::vector<double> jaccard_scores_serial(const TokenBag& target,
                                          std::span<const TokenBag> candidates);

// Cosine of each candidate against target. Dimensions and non-zero norms are
// the caller's responsibility.
std::vector<double> cosine_scores(const Embedding& target, std::span<const Embedding> candidates);
std::vector<double> cosine_scores_serial(const Embedding& target,
                                         std::span<const Embedding> candidates);

// Sums each column of `slice` and accumulates the totals into the statement
// named by `column_statement[col]`. Entries of column_statement must be < L.
std::vector<double> statement_scores(const Matrix& slice,
                                     std::span<const std::size_t> column_statement,
                                     std::size_t statement_count);
std::vector<double> statement_scores_serial(const Matrix& slice,
                                            std::span<const std::size_t> column_statement,
                                            std::size_t statement_count);

int max_threads();

}  // namespace ic::kernels
