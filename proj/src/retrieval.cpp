#include "ic/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ic/error.hpp"
#include "ic/kernels.hpp"

namespace ic {

namespace {

void check_embedding(const Embedding& v, const char* which) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw InvalidArgument(std::string(which) + " embedding is a zero or non-finite vector");
    }
}

}  // namespace

RetrievalStrategy parse_strategy(std::string_view text) {
    if (text == "token") return RetrievalStrategy::TokenBased;
    if (text == "semantic") return RetrievalStrategy::SemanticBased;
    throw InvalidArgument("unknown retrieval strategy '" + std::string(text) +
                          "' (expected token or semantic)");
}

std::string_view strategy_name(RetrievalStrategy strategy) {
    return strategy == RetrievalStrategy::TokenBased ? "token" : "semantic";
}

double token_similarity(const TokenBag& target, const TokenBag& candidate) {
    return kernels::jaccard(target, candidate);
}

double semantic_similarity(const Embedding& target, const Embedding& candidate) {
    if (target.size() != candidate.size()) {
        throw InvalidArgument("embedding dimension mismatch: " + std::to_string(target.size()) +
                              " vs " + std::to_string(candidate.size()));
    }
    check_embedding(target, "target");
    check_embedding(candidate, "candidate");
    const Embedding* one = &candidate;
    return kernels::cosine_scores_serial(target, std::span(one, 1)).front();
}

RetrievalIndex::RetrievalIndex(const Corpus& corpus)
    : corpus_(&corpus),
      by_intent_(static_cast<std::size_t>(IntentCategory::Others) + 1),
      bags_by_intent_(by_intent_.size()) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto slot = static_cast<std::size_t>(corpus.pairs[i].intent);
        by_intent_[slot].push_back(i);
        bags_by_intent_[slot].push_back(subtokenize(corpus.pairs[i].code));
    }
}

const std::vector<TokenBag>& RetrievalIndex::bags(IntentCategory intent) const {
    return bags_by_intent_[static_cast<std::size_t>(intent)];
}

const std::vector<std::size_t>& RetrievalIndex::positions(IntentCategory intent) const {
    return by_intent_[static_cast<std::size_t>(intent)];
}

std::vector<ScoredExample> retrieve_top_k(const RetrievalRequest& request,
                                          const RetrievalIndex& index,
                                          EmbeddingProvider* embedder) {
    if (request.k == 0) throw InvalidArgument("k must be at least 1");
    const auto& positions = index.positions(request.intent);
    if (positions.empty()) return {};

    std::vector<double> scores;
    if (request.strategy == RetrievalStrategy::TokenBased) {
        scores = kernels::jaccard_scores(subtokenize(request.code), index.bags(request.intent));
    } else {
        if (embedder == nullptr) {
            throw InvalidArgument("semantic retrieval needs an embedding provider");
        }
        std::vector<std::string> texts;
        texts.reserve(positions.size() + 1);
        texts.push_back(request.code);
        for (auto pos : positions) texts.push_back(index.corpus().pairs[pos].code);
        auto vectors = embedder->embed(texts, request.embed_model);
        if (vectors.size() != texts.size()) {
            throw ProtocolError("embedding count mismatch: asked " + std::to_string(texts.size()) +
                                ", got " + std::to_string(vectors.size()));
        }
        check_embedding(vectors.front(), "target");
        for (std::size_t i = 1; i < vectors.size(); ++i) {
            if (vectors[i].size() != vectors.front().size()) {
                throw InvalidArgument("embedding dimension mismatch within retrieval batch");
            }
            check_embedding(vectors[i], "candidate");
        }
        scores = kernels::cosine_scores(vectors.front(),
                                        std::span(vectors).subspan(1));
    }

    std::vector<std::size_t> order(positions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(request.k, order.size());
    // positions are ascending, so a stable descending sort keeps corpus order on ties
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<ScoredExample> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        ScoredExample ex;
        ex.corpus_index = positions[order[i]];
        ex.pair = index.corpus().pairs[ex.corpus_index];
        ex.sim_score = scores[order[i]];
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<ScoredExample> retrieve_top_k(const RetrievalRequest& request, const Corpus& corpus,
                                          EmbeddingProvider* embedder) {
    RetrievalIndex index(corpus);
    return retrieve_top_k(request, index, embedder);
}

}  // namespace ic
