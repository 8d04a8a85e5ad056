#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ic/intent.hpp"
#include "ic/providers.hpp"

namespace ic::metrics {

using Tokens = std::vector<std::string>;

// Lowercase; punctuation becomes whitespace except hyphens and underscores
// between word characters; then whitespace split.
Tokens tokenize(std::string_view text);

enum class Smoothing { None, AddOne };

// Identifier written into reports.
std::string_view smoothing_id(Smoothing smoothing);

// Clipped n-gram matches and candidate n-gram totals for n = 1..4.
struct BleuStats {
    std::array<std::size_t, 4> matches{};
    std::array<std::size_t, 4> totals{};
    std::size_t candidate_len = 0;
    std::size_t reference_len = 0;

    BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const Tokens& candidate, const Tokens& reference);

// BLEU-4 from sufficient statistics. AddOne adds one to the matches and totals
// of every order n > 1 (Lin & Och). No unigram match scores 0.
double bleu_from_stats(const BleuStats& stats, Smoothing smoothing);

// Sentence BLEU-4. Throws InvalidArgument on an empty reference; an empty
// candidate scores 0.
double bleu4(const Tokens& candidate, const Tokens& reference,
             Smoothing smoothing = Smoothing::AddOne);

// Corpus BLEU-4: statistics summed over all pairs before the geometric mean.
double corpus_bleu4(std::span<const Tokens> candidates, std::span<const Tokens> references,
                    Smoothing smoothing = Smoothing::None);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

// F-measure of LCS precision and recall; 0 for empty inputs.
double rouge_l(const Tokens& candidate, const Tokens& reference, double beta = 1.2);

// Original Porter (1980) suffix stripper on a lowercase word.
std::string porter_stem(std::string_view word);

struct MeteorAlignment {
    std::vector<std::pair<std::size_t, std::size_t>> matches;  // (candidate, reference), by candidate
    std::size_t chunks = 0;
};

// Exact stage then stem stage. Within a stage the candidate is scanned from
// its last word backwards and each word takes the latest unused reference
// position with the same form.
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference);

// Fmean = 10PR/(R+9P), penalty = 0.5 (chunks/matches)^3; 0 without matches.
double meteor(const Tokens& candidate, const Tokens& reference);

inline constexpr std::string_view kMeteorConfig = "meteor:exact+stem";

// Cosine of the sentence embeddings of candidate and reference.
double sbert_similarity(const std::string& candidate, const std::string& reference,
                        EmbeddingProvider& embedder, const std::string& model_tag);

struct SampleScores {
    double bleu4 = 0.0;
    double meteor = 0.0;
    double rouge_l = 0.0;
    std::optional<double> sbert;

    bool operator==(const SampleScores&) const = default;
};

// BLEU/METEOR/ROUGE-L of one candidate against one reference text.
SampleScores score_text(const std::string& candidate, const std::string& reference);

struct TextPair {
    std::string candidate;
    std::string reference;
};

// score_text over many pairs; OpenMP version and serial reference.
std::vector<SampleScores> score_batch(std::span<const TextPair> pairs);
std::vector<SampleScores> score_batch_serial(std::span<const TextPair> pairs);

// Mean over repetitions. sbert is present only when every repetition has it.
// Throws InvalidArgument when empty.
SampleScores average(std::span<const SampleScores> repetitions);

struct MetricMeans {
    double bleu4 = 0.0;
    double meteor = 0.0;
    double rouge_l = 0.0;
    std::optional<double> sbert;
    std::size_t n = 0;
};

struct MetricReport {
    MetricMeans overall;
    std::map<IntentCategory, MetricMeans> per_intent;
    std::string smoothing = std::string(smoothing_id(Smoothing::AddOne));
    std::string meteor_config = std::string(kMeteorConfig);

    std::size_t n() const { return overall.n; }
};

// Arithmetic means overall and per intent over already repetition-averaged
// samples. Throws InvalidArgument on empty or misaligned input.
MetricReport aggregate(std::span<const SampleScores> samples,
                       std::span<const IntentCategory> intents);

}  // namespace ic::metrics
