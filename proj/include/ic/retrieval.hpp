#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ic/codetext.hpp"
#include "ic/corpus.hpp"
#include "ic/providers.hpp"

namespace ic {

enum class RetrievalStrategy { TokenBased, SemanticBased };

RetrievalStrategy parse_strategy(std::string_view text);
std::string_view strategy_name(RetrievalStrategy strategy);

struct ScoredExample {
    CodeCommentPair pair;
    std::size_t corpus_index = 0;  // position in the corpus it was retrieved from
    double sim_score = 0.0;
    std::size_t sim_rank = 0;      // 0 = unset, otherwise 1 = best
    double quality_score = 0.0;
    std::size_t quality_rank = 0;
    double example_score = 0.0;
};

// Jaccard over sub-token sets; 0 when both are empty.
double token_similarity(const TokenBag& target, const TokenBag& candidate);

// Cosine similarity. Throws InvalidArgument on a dimension mismatch or a
// zero vector.
double semantic_similarity(const Embedding& target, const Embedding& candidate);

struct RetrievalRequest {
    std::string code;
    IntentCategory intent = IntentCategory::What;
    RetrievalStrategy strategy = RetrievalStrategy::TokenBased;
    std::size_t k = 10;
    std::string embed_model;  // SemanticBased only
};

// Sub-token bags and per-intent positions for one corpus, built once.
class RetrievalIndex {
public:
    explicit RetrievalIndex(const Corpus& corpus);

    const Corpus& corpus() const { return *corpus_; }
    const std::vector<std::size_t>& positions(IntentCategory intent) const;
    // Bags aligned with positions(intent).
    const std::vector<TokenBag>& bags(IntentCategory intent) const;

private:
    const Corpus* corpus_;
    std::vector<std::vector<std::size_t>> by_intent_;
    std::vector<std::vector<TokenBag>> bags_by_intent_;
};

std::vector<ScoredExample> retrieve_top_k(const RetrievalRequest& request,
                                          const RetrievalIndex& index,
                                          EmbeddingProvider* embedder);

// Top-min(k, available) examples of the requested intent by descending
// sim_score, ties by ascending corpus order. `embedder` may be null for
// TokenBased. Ranks are left unset.
std::vector<ScoredExample> retrieve_top_k(const RetrievalRequest& request, const Corpus& corpus,
                                          EmbeddingProvider* embedder);

}  // namespace ic
