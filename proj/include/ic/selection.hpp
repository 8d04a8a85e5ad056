#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ic/providers.hpp"
#include "ic/retrieval.hpp"

namespace ic {

struct QualityAssessment {
    std::string pair_id;
    Embedding code_embedding;
    Embedding comment_embedding;
    double quality_score = 0.0;  // cosine(code_embedding, comment_embedding)
};

struct SelectionConfig {
    std::size_t k = 10;  // candidate pool
    std::size_t f = 3;   // shots
    double p = 0.8;      // weight of the similarity rank

    // Throws ConfigError when f > k, k == 0 or p is outside [0, 1].
    void validate() const;
};

// Embeds code and comment with the same encoder and scores their consistency.
// Embedding failures are rethrown as ServiceError naming the pair.
QualityAssessment assess_quality(const CodeCommentPair& pair, EmbeddingProvider& embedder,
                                 const std::string& model_tag);

struct SelectionResult {
    std::vector<ScoredExample> selected;  // best first
    std::vector<ScoredExample> ranked;    // every candidate, ranks and fused score filled in
    bool shortfall = false;               // fewer candidates than f
};

// Assigns sim_rank/quality_rank (1 = highest raw score, ties by corpus order),
// example_score = p*sim_rank + (1-p)*quality_rank, and keeps the f smallest
// fused scores. Ties on the fused score go to the smaller sim_rank, then to
// corpus order.
SelectionResult fuse_and_select(std::vector<ScoredExample> candidates,
                                const SelectionConfig& config);

// Fused scores closer than this are ties.
inline constexpr double kScoreTieTolerance = 1e-9;

// Quality scores persisted as JSON lines keyed by (model tag, pair id).
// Thread-safe; appends are flushed per entry.
class QualityCache {
public:
    QualityCache() = default;  // memory only
    explicit QualityCache(std::filesystem::path file);

    std::optional<double> get(const std::string& model_tag, const std::string& pair_id) const;
    void put(const std::string& model_tag, const std::string& pair_id, double score);
    std::size_t size() const;

private:
    std::optional<std::filesystem::path> file_;
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, std::string>, double> entries_;
};

}  // namespace ic
