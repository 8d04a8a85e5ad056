#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ic/codetext.hpp"
#include "ic/corpus.hpp"
#include "ic/matrix.hpp"
#include "ic/providers.hpp"

namespace ic {

// How many statements to keep and how token totals combine into a statement.
struct ExtractionPolicy {
    enum class Mode { Fraction, Fixed };
    enum class Combine { Sum, Mean };

    Mode mode = Mode::Fraction;
    double fraction = 0.3;  // q(L) = max(1, round(fraction * L))
    std::size_t fixed = 1;  // q(L) = fixed
    Combine combine = Combine::Sum;

    // Always within [1, L] for L >= 1.
    std::size_t count(std::size_t statement_count) const;

    // "fraction:0.3", "fixed:2"; optional ",mean" suffix.
    static ExtractionPolicy parse(std::string_view text);
    std::string describe() const;
};

struct ImportantStatement {
    std::size_t statement;
    double score;

    bool operator==(const ImportantStatement&) const = default;
};

struct Demonstration {
    CodeCommentPair pair;
    StatementList statements;
    std::vector<ImportantStatement> important;  // score descending
    double example_score = 0.0;
};

// Throws InvalidArgument when the matrix is not square with side K+1+N, has a
// negative or non-finite entry, or code_token_statement does not have N entries.
void validate_bundle(const AttentionBundle& bundle);

// Comment-token rows against code-token columns (intent row and column dropped).
// Throws InvalidArgument when K or N is zero.
Matrix slice_comment_to_code(const AttentionBundle& bundle);

// Column sums of `slice`, accumulated per statement. Throws AlignmentError for a
// column whose statement is >= L or when the map does not cover every column.
std::vector<double> aggregate_statement_scores(const Matrix& slice,
                                               std::span<const std::size_t> code_token_statement,
                                               std::size_t statement_count,
                                               ExtractionPolicy::Combine combine = ExtractionPolicy::Combine::Sum);

// Top q(L) statements by score, ties to the smaller index.
std::vector<ImportantStatement> extract_important(const AttentionBundle& bundle,
                                                  const StatementList& statements,
                                                  const ExtractionPolicy& policy);

// Serialized bundles keyed by (model tag, pair id, intent), one file each.
class BundleCache {
public:
    explicit BundleCache(std::filesystem::path directory);

    std::optional<AttentionBundle> get(const std::string& model_tag, const std::string& pair_id,
                                       IntentCategory intent) const;
    void put(const std::string& model_tag, const std::string& pair_id, IntentCategory intent,
             const AttentionBundle& bundle) const;

private:
    std::filesystem::path file_for(const std::string& model_tag, const std::string& pair_id,
                                   IntentCategory intent) const;
    std::filesystem::path directory_;
};

std::string bundle_to_json(const AttentionBundle& bundle);
AttentionBundle bundle_from_json(std::string_view text);

}  // namespace ic
