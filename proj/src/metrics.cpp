#include "ic/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "ic/error.hpp"
#include "ic/retrieval.hpp"

namespace ic::metrics {

namespace {

bool word_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) || c == '_';
}

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t j = 1; j < n; ++j) {
            key.push_back('\x1f');
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

// Porter stemmer helpers over a lowercase ASCII word.
class Porter {
public:
    static std::string stem(std::string word) {
        word = step1a(std::move(word));
        word = step1b(std::move(word));
        word = step1c(std::move(word));
        word = step2(std::move(word));
        word = step3(std::move(word));
        word = step4(std::move(word));
        word = step5a(std::move(word));
        return step5b(std::move(word));
    }

private:
    struct Rule {
        std::string_view suffix;
        std::string_view replacement;
    };

    static bool is_vowel_letter(char c) {
        return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
    }

    static std::vector<bool> consonants(std::string_view w) {
        std::vector<bool> flags(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (is_vowel_letter(w[i])) {
                flags[i] = false;
            } else if (w[i] == 'y') {
                flags[i] = i == 0 ? true : !flags[i - 1];
            } else {
                flags[i] = true;
            }
        }
        return flags;
    }

    static bool consonant_at(std::string_view w, std::size_t i) {
        return consonants(w.substr(0, i + 1))[i];
    }

    // Number of vowel->consonant transitions, i.e. m in [C](VC)^m[V].
    static int measure(std::string_view w) {
        const auto flags = consonants(w);
        int m = 0;
        for (std::size_t i = 1; i < flags.size(); ++i) {
            if (!flags[i - 1] && flags[i]) ++m;
        }
        return m;
    }

    static bool has_vowel(std::string_view w) {
        const auto flags = consonants(w);
        return std::any_of(flags.begin(), flags.end(), [](bool c) { return !c; });
    }

    static bool ends_double_consonant(std::string_view w) {
        return w.size() >= 2 && w[w.size() - 1] == w[w.size() - 2] && consonant_at(w, w.size() - 1);
    }

    static bool ends_cvc(std::string_view w) {
        if (w.size() < 3) return false;
        const auto flags = consonants(w);
        const std::size_t n = w.size();
        const char last = w[n - 1];
        return flags[n - 3] && !flags[n - 2] && flags[n - 1] && last != 'w' && last != 'x' &&
               last != 'y';
    }

    static bool ends_with(std::string_view w, std::string_view suffix) {
        return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
    }

    // First rule whose suffix matches decides; if its condition fails the word is kept.
    template <typename Cond>
    static std::string apply(std::string w, std::initializer_list<Rule> rules, Cond cond) {
        for (const auto& rule : rules) {
            if (!ends_with(w, rule.suffix)) continue;
            std::string_view stem(w.data(), w.size() - rule.suffix.size());
            if (!cond(stem)) return w;
            return std::string(stem) + std::string(rule.replacement);
        }
        return w;
    }

    static std::string step1a(std::string w) {
        return apply(std::move(w), {{"sses", "ss"}, {"ies", "i"}, {"ss", "ss"}, {"s", ""}},
                     [](std::string_view) { return true; });
    }

    static std::string step1b(std::string w) {
        if (ends_with(w, "eed")) {
            std::string_view stem(w.data(), w.size() - 3);
            return measure(stem) > 0 ? std::string(stem) + "ee" : w;
        }
        std::string stem;
        bool removed = false;
        for (std::string_view suffix : {std::string_view("ed"), std::string_view("ing")}) {
            if (ends_with(w, suffix)) {
                std::string_view s(w.data(), w.size() - suffix.size());
                if (has_vowel(s)) {
                    stem = std::string(s);
                    removed = true;
                    break;
                }
            }
        }
        if (!removed) return w;
        if (ends_with(stem, "at") || ends_with(stem, "bl") || ends_with(stem, "iz")) return stem + "e";
        if (ends_double_consonant(stem)) {
            const char last = stem.back();
            if (last != 'l' && last != 's' && last != 'z') stem.pop_back();
            return stem;
        }
        if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
        return stem;
    }

    static std::string step1c(std::string w) {
        return apply(std::move(w), {{"y", "i"}}, [](std::string_view s) { return has_vowel(s); });
    }

    static std::string step2(std::string w) {
        return apply(std::move(w),
                     {{"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
                      {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},    {"entli", "ent"},
                      {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
                      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
                      {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"}},
                     [](std::string_view s) { return measure(s) > 0; });
    }

    static std::string step3(std::string w) {
        return apply(std::move(w),
                     {{"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
                      {"ical", "ic"}, {"ful", ""}, {"ness", ""}},
                     [](std::string_view s) { return measure(s) > 0; });
    }

    static std::string step4(std::string w) {
        static constexpr std::string_view kSuffixes[] = {
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
            "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize"};
        for (auto suffix : kSuffixes) {
            if (!ends_with(w, suffix)) continue;
            std::string_view stem(w.data(), w.size() - suffix.size());
            bool ok = measure(stem) > 1;
            if (suffix == "ion") ok = ok && !stem.empty() && (stem.back() == 's' || stem.back() == 't');
            return ok ? std::string(stem) : w;
        }
        return w;
    }

    static std::string step5a(std::string w) {
        if (!ends_with(w, "e")) return w;
        std::string_view stem(w.data(), w.size() - 1);
        const int m = measure(stem);
        if (m > 1 || (m == 1 && !ends_cvc(stem))) return std::string(stem);
        return w;
    }

    static std::string step5b(std::string w) {
        if (ends_with(w, "ll") && measure(std::string_view(w.data(), w.size() - 1)) > 1) w.pop_back();
        return w;
    }
};

// One matching stage: scan candidate right to left, each word takes the
// highest unused reference position holding the same form.
void match_stage(const Tokens& cand_forms, const Tokens& ref_forms, std::vector<bool>& cand_used,
                 std::vector<bool>& ref_used,
                 std::vector<std::pair<std::size_t, std::size_t>>& matches) {
    std::unordered_map<std::string, std::vector<std::size_t>> positions;
    for (std::size_t j = 0; j < ref_forms.size(); ++j) {
        if (!ref_used[j]) positions[ref_forms[j]].push_back(j);
    }
    for (std::size_t i = cand_forms.size(); i-- > 0;) {
        if (cand_used[i]) continue;
        auto it = positions.find(cand_forms[i]);
        if (it == positions.end() || it->second.empty()) continue;
        const std::size_t j = it->second.back();
        it->second.pop_back();
        cand_used[i] = true;
        ref_used[j] = true;
        matches.emplace_back(i, j);
    }
}

Tokens lowercase_all(const Tokens& tokens) {
    Tokens out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        std::string s = t;
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

Tokens tokenize(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (word_char(c)) {
            cleaned.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (c == '-' && i > 0 && i + 1 < text.size() && word_char(text[i - 1]) &&
                   word_char(text[i + 1])) {
            cleaned.push_back('-');
        } else {
            cleaned.push_back(' ');
        }
    }
    Tokens tokens;
    std::size_t pos = 0;
    while (pos < cleaned.size()) {
        while (pos < cleaned.size() && cleaned[pos] == ' ') ++pos;
        std::size_t end = pos;
        while (end < cleaned.size() && cleaned[end] != ' ') ++end;
        if (end > pos) tokens.emplace_back(cleaned.substr(pos, end - pos));
        pos = end;
    }
    return tokens;
}

std::string_view smoothing_id(Smoothing smoothing) {
    return smoothing == Smoothing::AddOne ? "add-one(n>1)" : "none";
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
    for (std::size_t n = 0; n < 4; ++n) {
        matches[n] += other.matches[n];
        totals[n] += other.totals[n];
    }
    candidate_len += other.candidate_len;
    reference_len += other.reference_len;
    return *this;
}

BleuStats bleu_stats(const Tokens& candidate, const Tokens& reference) {
    BleuStats stats;
    stats.candidate_len = candidate.size();
    stats.reference_len = reference.size();
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto cand = ngrams(candidate, n);
        const auto ref = ngrams(reference, n);
        for (const auto& [gram, count] : cand) {
            stats.totals[n - 1] += count;
            if (auto it = ref.find(gram); it != ref.end()) {
                stats.matches[n - 1] += std::min(count, it->second);
            }
        }
    }
    return stats;
}

double bleu_from_stats(const BleuStats& stats, Smoothing smoothing) {
    if (stats.candidate_len == 0) return 0.0;
    if (std::all_of(stats.matches.begin(), stats.matches.end(), [](std::size_t m) { return m == 0; })) {
        return 0.0;
    }
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        double m = static_cast<double>(stats.matches[n]);
        double t = static_cast<double>(stats.totals[n]);
        if (smoothing == Smoothing::AddOne && n > 0) {
            m += 1.0;
            t += 1.0;
        }
        if (m == 0.0 || t == 0.0) return 0.0;
        log_sum += std::log(m / t);
    }
    double bp = 1.0;
    if (stats.candidate_len < stats.reference_len) {
        bp = std::exp(1.0 - static_cast<double>(stats.reference_len) /
                                static_cast<double>(stats.candidate_len));
    }
    return bp * std::exp(log_sum / 4.0);
}

double bleu4(const Tokens& candidate, const Tokens& reference, Smoothing smoothing) {
    if (reference.empty()) throw InvalidArgument("BLEU reference is empty");
    if (candidate.empty()) return 0.0;
    return bleu_from_stats(bleu_stats(candidate, reference), smoothing);
}

double corpus_bleu4(std::span<const Tokens> candidates, std::span<const Tokens> references,
                    Smoothing smoothing) {
    if (candidates.size() != references.size()) {
        throw InvalidArgument("corpus BLEU needs one reference per candidate");
    }
    BleuStats total;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (references[i].empty()) throw InvalidArgument("BLEU reference is empty");
        total += bleu_stats(candidates[i], references[i]);
    }
    return bleu_from_stats(total, smoothing);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l(const Tokens& candidate, const Tokens& reference, double beta) {
    if (candidate.empty() || reference.empty()) return 0.0;
    const double lcs = static_cast<double>(lcs_length(candidate, reference));
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(reference.size());
    if (p == 0.0 || r == 0.0) return 0.0;
    const double b2 = beta * beta;
    return (1.0 + b2) * p * r / (r + b2 * p);
}

std::string porter_stem(std::string_view word) {
    std::string lower(word);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return Porter::stem(std::move(lower));
}

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference) {
    const Tokens cand = lowercase_all(candidate);
    const Tokens ref = lowercase_all(reference);
    std::vector<bool> cand_used(cand.size(), false);
    std::vector<bool> ref_used(ref.size(), false);
    MeteorAlignment alignment;
    match_stage(cand, ref, cand_used, ref_used, alignment.matches);

    Tokens cand_stems;
    Tokens ref_stems;
    for (const auto& t : cand) cand_stems.push_back(porter_stem(t));
    for (const auto& t : ref) ref_stems.push_back(porter_stem(t));
    match_stage(cand_stems, ref_stems, cand_used, ref_used, alignment.matches);

    std::sort(alignment.matches.begin(), alignment.matches.end());
    if (!alignment.matches.empty()) {
        alignment.chunks = 1;
        for (std::size_t i = 1; i < alignment.matches.size(); ++i) {
            const auto& [pc, pr] = alignment.matches[i - 1];
            const auto& [c, r] = alignment.matches[i];
            if (!(c == pc + 1 && r == pr + 1)) ++alignment.chunks;
        }
    }
    return alignment;
}

double meteor(const Tokens& candidate, const Tokens& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    const auto alignment = meteor_align(candidate, reference);
    const double m = static_cast<double>(alignment.matches.size());
    if (m == 0.0) return 0.0;
    const double p = m / static_cast<double>(candidate.size());
    const double r = m / static_cast<double>(reference.size());
    const double fmean = p * r / (0.9 * p + 0.1 * r);
    const double frag = static_cast<double>(alignment.chunks) / m;
    const double penalty = 0.5 * frag * frag * frag;
    return fmean * (1.0 - penalty);
}

double sbert_similarity(const std::string& candidate, const std::string& reference,
                        EmbeddingProvider& embedder, const std::string& model_tag) {
    const std::vector<std::string> texts{candidate, reference};
    const auto vectors = embedder.embed(texts, model_tag);
    if (vectors.size() != 2) throw ProtocolError("sentence embedding returned the wrong count");
    return semantic_similarity(vectors[0], vectors[1]);
}

SampleScores score_text(const std::string& candidate, const std::string& reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    SampleScores s;
    s.bleu4 = ref.empty() ? 0.0 : bleu4(cand, ref);
    s.meteor = meteor(cand, ref);
    s.rouge_l = rouge_l(cand, ref);
    return s;
}

std::vector<SampleScores> score_batch_serial(std::span<const TextPair> pairs) {
    std::vector<SampleScores> out(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        out[i] = score_text(pairs[i].candidate, pairs[i].reference);
    }
    return out;
}

std::vector<SampleScores> score_batch(std::span<const TextPair> pairs) {
    const auto n = static_cast<std::ptrdiff_t>(pairs.size());
    std::vector<SampleScores> out(pairs.size());
#pragma omp parallel for schedule(dynamic, 16) if (n >= 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = score_text(pairs[i].candidate, pairs[i].reference);
    }
    return out;
}

SampleScores average(std::span<const SampleScores> repetitions) {
    if (repetitions.empty()) throw InvalidArgument("cannot average zero repetitions");
    SampleScores mean;
    double sbert = 0.0;
    bool all_sbert = true;
    for (const auto& r : repetitions) {
        mean.bleu4 += r.bleu4;
        mean.meteor += r.meteor;
        mean.rouge_l += r.rouge_l;
        if (r.sbert) {
            sbert += *r.sbert;
        } else {
            all_sbert = false;
        }
    }
    const double n = static_cast<double>(repetitions.size());
    mean.bleu4 /= n;
    mean.meteor /= n;
    mean.rouge_l /= n;
    if (all_sbert) mean.sbert = sbert / n;
    return mean;
}

namespace {

MetricMeans means(const std::vector<const SampleScores*>& samples) {
    MetricMeans m;
    m.n = samples.size();
    if (samples.empty()) return m;
    double sbert = 0.0;
    bool all_sbert = true;
    for (const auto* s : samples) {
        m.bleu4 += s->bleu4;
        m.meteor += s->meteor;
        m.rouge_l += s->rouge_l;
        if (s->sbert) {
            sbert += *s->sbert;
        } else {
            all_sbert = false;
        }
    }
    const double n = static_cast<double>(samples.size());
    m.bleu4 /= n;
    m.meteor /= n;
    m.rouge_l /= n;
    if (all_sbert) m.sbert = sbert / n;
    return m;
}

}  // namespace

MetricReport aggregate(std::span<const SampleScores> samples,
                       std::span<const IntentCategory> intents) {
    if (samples.empty()) throw InvalidArgument("cannot aggregate an empty set of samples");
    if (samples.size() != intents.size()) {
        throw InvalidArgument("samples and intents are not aligned");
    }
    std::vector<const SampleScores*> all;
    std::map<IntentCategory, std::vector<const SampleScores*>> groups;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        all.push_back(&samples[i]);
        groups[intents[i]].push_back(&samples[i]);
    }
    MetricReport report;
    report.overall = means(all);
    for (const auto& [intent, group] : groups) report.per_intent[intent] = means(group);
    return report;
}

}  // namespace ic::metrics
