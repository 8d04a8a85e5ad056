#include "ic/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ic/error.hpp"

namespace ic {

namespace {

template <typename Key>
void assign_ranks(std::vector<ScoredExample>& candidates, Key key, std::size_t ScoredExample::*rank) {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ka = key(candidates[a]);
        const double kb = key(candidates[b]);
        if (ka != kb) return ka > kb;
        return candidates[a].corpus_index < candidates[b].corpus_index;
    });
    for (std::size_t r = 0; r < order.size(); ++r) candidates[order[r]].*rank = r + 1;
}

}  // namespace

void SelectionConfig::validate() const {
    if (k == 0) throw ConfigError("k must be at least 1");
    if (f > k) throw ConfigError("f (" + std::to_string(f) + ") exceeds k (" + std::to_string(k) + ")");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
}

QualityAssessment assess_quality(const CodeCommentPair& pair, EmbeddingProvider& embedder,
                                 const std::string& model_tag) {
    std::vector<Embedding> vectors;
    try {
        const std::vector<std::string> texts{pair.code, pair.comment};
        vectors = embedder.embed(texts, model_tag);
    } catch (const ServiceUnavailable&) {
        throw;
    } catch (const ServiceError& e) {
        throw ServiceError(e.status(), "quality embedding failed for pair '" + pair.id + "': " + e.what());
    }
    if (vectors.size() != 2) {
        throw ProtocolError("quality embedding for pair '" + pair.id + "' returned " +
                            std::to_string(vectors.size()) + " vectors");
    }
    QualityAssessment qa;
    qa.pair_id = pair.id;
    qa.code_embedding = std::move(vectors[0]);
    qa.comment_embedding = std::move(vectors[1]);
    try {
        qa.quality_score = semantic_similarity(qa.code_embedding, qa.comment_embedding);
    } catch (const InvalidArgument& e) {
        throw ProtocolError("quality embedding for pair '" + pair.id + "': " + e.what());
    }
    return qa;
}

SelectionResult fuse_and_select(std::vector<ScoredExample> candidates,
                                const SelectionConfig& config) {
    if (!(config.p >= 0.0 && config.p <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");

    assign_ranks(candidates, [](const ScoredExample& e) { return e.sim_score; },
                 &ScoredExample::sim_rank);
    assign_ranks(candidates, [](const ScoredExample& e) { return e.quality_score; },
                 &ScoredExample::quality_rank);
    for (auto& c : candidates) {
        c.example_score = config.p * static_cast<double>(c.sim_rank) +
                          (1.0 - config.p) * static_cast<double>(c.quality_rank);
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const ScoredExample& a, const ScoredExample& b) {
                  if (std::abs(a.example_score - b.example_score) > kScoreTieTolerance) {
                      return a.example_score < b.example_score;
                  }
                  if (a.sim_rank != b.sim_rank) return a.sim_rank < b.sim_rank;
                  return a.corpus_index < b.corpus_index;
              });

    SelectionResult result;
    result.shortfall = config.f > candidates.size();
    if (result.shortfall) {
        spdlog::warn("only {} candidates available for {} shots", candidates.size(), config.f);
    }
    const std::size_t take = std::min(config.f, candidates.size());
    result.selected.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take));
    result.ranked = std::move(candidates);
    return result;
}

QualityCache::QualityCache(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(*file_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            entries_[{j.at("model").get<std::string>(), j.at("pair_id").get<std::string>()}] =
                j.at("score").get<double>();
        } catch (const nlohmann::json::exception&) {
            // A torn final line from an interrupted run; the entry is recomputed.
            spdlog::warn("skipping unreadable quality cache line in {}", file_->string());
        }
    }
}

std::optional<double> QualityCache::get(const std::string& model_tag,
                                        const std::string& pair_id) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find({model_tag, pair_id});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void QualityCache::put(const std::string& model_tag, const std::string& pair_id, double score) {
    std::lock_guard lock(mutex_);
    entries_.insert_or_assign({model_tag, pair_id}, score);
    if (!file_) return;
    std::ofstream out(*file_, std::ios::app);
    nlohmann::ordered_json j;
    j["model"] = model_tag;
    j["pair_id"] = pair_id;
    j["score"] = score;
    out << j.dump() << '\n';
}

std::size_t QualityCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

}  // namespace ic
