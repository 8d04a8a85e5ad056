#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "ic/error.hpp"
#include "ic/metrics.hpp"

using namespace ic;
using namespace ic::metrics;

namespace {

nlohmann::json load_fixture(const std::string& name) {
    std::ifstream in(std::string(IC_FIXTURE_DIR) + "/" + name);
    REQUIRE(in);
    return nlohmann::json::parse(in);
}

// Multiset intersection of n-grams by explicit enumeration.
std::pair<std::size_t, std::size_t> ngram_oracle(const Tokens& cand, const Tokens& ref, std::size_t n) {
    auto grams = [n](const Tokens& t) {
        std::vector<std::vector<std::string>> out;
        for (std::size_t i = 0; i + n <= t.size(); ++i) out.emplace_back(t.begin() + i, t.begin() + i + n);
        return out;
    };
    auto c = grams(cand);
    auto r = grams(ref);
    std::vector<bool> used(r.size(), false);
    std::size_t matches = 0;
    for (const auto& g : c) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (!used[j] && r[j] == g) {
                used[j] = true;
                ++matches;
                break;
            }
        }
    }
    return {matches, c.size()};
}

std::size_t lcs_oracle(const Tokens& a, const Tokens& b) {
    std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
        }
    }
    return t[a.size()][b.size()];
}

Tokens random_tokens(std::mt19937_64& rng, std::size_t max_len, int vocab) {
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<int> word(0, vocab - 1);
    Tokens t(len(rng));
    for (auto& w : t) w = "w" + std::to_string(word(rng));
    return t;
}

class PairEmbedder : public EmbeddingProvider {
public:
    std::map<std::string, Embedding> table;
    std::vector<Embedding> embed(std::span<const std::string> texts, const std::string&) override {
        std::vector<Embedding> out;
        for (const auto& t : texts) out.push_back(table.at(t));
        return out;
    }
};

}  // namespace

TEST_CASE("fixture pairs match the reference scorers") {
    const auto fixture = load_fixture("metric_pairs.json");
    CHECK(fixture.at("smoothing_id").get<std::string>() == smoothing_id(Smoothing::AddOne));
    const auto& pairs = fixture.at("pairs");
    REQUIRE(pairs.size() >= 20);
    std::vector<Tokens> cands;
    std::vector<Tokens> refs;
    for (const auto& p : pairs) {
        const auto cand = p.at("candidate").get<Tokens>();
        const auto ref = p.at("reference").get<Tokens>();
        CAPTURE(p.dump());
        CHECK(std::abs(bleu4(cand, ref) - p.at("bleu4").get<double>()) <= 1e-4);
        CHECK(std::abs(meteor(cand, ref) - p.at("meteor").get<double>()) <= 1e-4);
        CHECK(std::abs(rouge_l(cand, ref) - p.at("rouge_l").get<double>()) <= 1e-4);
        cands.push_back(cand);
        refs.push_back(ref);
    }
    CHECK(std::abs(corpus_bleu4(cands, refs) - fixture.at("corpus_bleu4").get<double>()) <= 1e-4);
}

TEST_CASE("porter stemmer matches the reference stems") {
    const auto fixture = load_fixture("porter_stems.json");
    for (const auto& [word, stem] : fixture.at("stems").items()) {
        CAPTURE(word);
        CHECK(porter_stem(word) == stem.get<std::string>());
    }
}

TEST_CASE("bleu edge cases") {
    const Tokens four{"returns", "the", "user", "name"};
    CHECK(bleu4(four, four) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bleu4({"alpha", "beta"}, four) == 0.0);
    CHECK(bleu4({}, four) == 0.0);
    CHECK_THROWS_AS(bleu4(four, {}), InvalidArgument);
    CHECK(bleu4(four, four, Smoothing::None) == doctest::Approx(1.0));
    // Unsmoothed: a missing 4-gram order zeroes the score.
    CHECK(bleu4({"a", "b", "c"}, {"a", "b", "c"}, Smoothing::None) == 0.0);
}

TEST_CASE("rouge-l and meteor worked examples") {
    CHECK(rouge_l({"a", "c", "d"}, {"a", "b", "c", "d"}) ==
          doctest::Approx((1 + 1.44) * 0.75 / (0.75 + 1.44)).epsilon(1e-12));
    CHECK(rouge_l({"a", "b"}, {"c", "d"}) == 0.0);
    CHECK(rouge_l({}, {"a"}) == 0.0);
    CHECK(meteor({"foo"}, {"foo"}) == doctest::Approx(0.5));
    CHECK(meteor({"x"}, {"y"}) == 0.0);
    CHECK(meteor({}, {"y"}) == 0.0);
}

TEST_CASE("meteor on identical token lists equals 1 - 0.5/n^3") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto t = random_tokens(rng, 30, 1000);
        if (t.empty()) continue;
        const double n = static_cast<double>(t.size());
        CHECK(meteor(t, t) == doctest::Approx(1.0 - 0.5 / (n * n * n)).epsilon(1e-12));
        CHECK(rouge_l(t, t) == doctest::Approx(1.0));
    }
}

TEST_CASE("meteor stem stage aligns inflected forms") {
    const auto a = meteor_align({"sets", "the", "retries"}, {"set", "the", "retry"});
    CHECK(a.matches.size() == 3);
    CHECK(a.chunks == 1);
}

TEST_CASE("bleu n-gram counts equal a multiset-intersection oracle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const auto cand = random_tokens(rng, 20, 6);
        const auto ref = random_tokens(rng, 20, 6);
        const auto stats = bleu_stats(cand, ref);
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto [m, t] = ngram_oracle(cand, ref, n);
            CHECK(stats.matches[n - 1] == m);
            CHECK(stats.totals[n - 1] == t);
        }
    }
}

TEST_CASE("lcs equals a full-table dynamic programming oracle") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_tokens(rng, 64, 8);
        const auto b = random_tokens(rng, 64, 8);
        CHECK(lcs_length(a, b) == lcs_oracle(a, b));
    }
}

TEST_CASE("metrics stay in range and are zero on disjoint lists") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_tokens(rng, 15, 10);
        auto b = random_tokens(rng, 15, 10);
        if (b.empty()) b.push_back("w0");
        for (double v : {bleu4(a, b), meteor(a, b), rouge_l(a, b)}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0 + 1e-12);
        }
        Tokens disjoint;
        for (const auto& t : a) disjoint.push_back("z" + t);
        CHECK(bleu4(disjoint, b) == 0.0);
        CHECK(meteor(disjoint, b) == 0.0);
        CHECK(rouge_l(disjoint, b) == 0.0);
    }
}

TEST_CASE("tokenize lowercases and drops punctuation") {
    CHECK(tokenize("Returns the User-ID, or null.") == Tokens{"returns", "the", "user-id", "or", "null"});
    CHECK(tokenize("  ") == Tokens{});
    CHECK(tokenize("max_value -- (x)") == Tokens{"max_value", "x"});
}

TEST_CASE("sbert similarity is the embedding cosine") {
    PairEmbedder e;
    e.table["a"] = {1.0, 0.0};
    e.table["b"] = {0.0, 1.0};
    e.table["c"] = {3.0, 4.0};
    e.table["d"] = {4.0, 3.0};
    CHECK(sbert_similarity("a", "b", e, "m") == doctest::Approx(0.0));
    CHECK(std::abs(sbert_similarity("c", "d", e, "m") - 0.96) <= 1e-9);
    CHECK(sbert_similarity("c", "c", e, "m") == doctest::Approx(1.0));
}

TEST_CASE("average and aggregate") {
    std::vector<SampleScores> reps{{0.1, 0.2, 0.3, {}}, {0.3, 0.4, 0.5, {}}, {0.2, 0.0, 0.1, {}},
                                   {0.4, 0.4, 0.4, {}}, {0.5, 0.5, 0.2, {}}};
    const auto mean = average(reps);
    CHECK(mean.bleu4 == doctest::Approx(1.5 / 5));
    CHECK(mean.meteor == doctest::Approx(1.5 / 5));
    CHECK(mean.rouge_l == doctest::Approx(1.5 / 5));
    CHECK_FALSE(mean.sbert.has_value());
    CHECK_THROWS_AS(average(std::span<const SampleScores>{}), InvalidArgument);

    std::vector<SampleScores> one{{0.2, 0.3, 0.4, 0.5}};
    std::vector<IntentCategory> what{IntentCategory::What};
    const auto single = aggregate(one, what);
    CHECK(single.overall.bleu4 == 0.2);
    CHECK(single.overall.sbert == 0.5);
    CHECK(single.n() == 1);

    std::vector<SampleScores> two{{0.2, 0, 0, {}}, {0.4, 0, 0, {}}};
    std::vector<IntentCategory> intents{IntentCategory::What, IntentCategory::What};
    CHECK(aggregate(two, intents).overall.bleu4 == doctest::Approx(0.3));
    CHECK_THROWS_AS(aggregate(std::span<const SampleScores>{}, std::span<const IntentCategory>{}),
                    InvalidArgument);
}

TEST_CASE("per-intent means equal a group-by oracle") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> unit;
    std::uniform_int_distribution<int> pick(0, 4);
    std::vector<SampleScores> samples;
    std::vector<IntentCategory> intents;
    for (int i = 0; i < 200; ++i) {
        samples.push_back({unit(rng), unit(rng), unit(rng), {}});
        intents.push_back(kUsableIntents[static_cast<std::size_t>(pick(rng))]);
    }
    const auto report = aggregate(samples, intents);
    std::size_t total = 0;
    for (auto intent : kUsableIntents) {
        double sum = 0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (intents[i] == intent) {
                sum += samples[i].rouge_l;
                ++n;
            }
        }
        if (n == 0) continue;
        CHECK(report.per_intent.at(intent).n == n);
        CHECK(report.per_intent.at(intent).rouge_l == doctest::Approx(sum / static_cast<double>(n)));
        total += report.per_intent.at(intent).n;
    }
    CHECK(total == report.n());
}

TEST_CASE("parallel batch scoring equals the serial reference") {
    std::mt19937_64 rng(23);
    std::vector<TextPair> pairs;
    for (int i = 0; i < 500; ++i) {
        std::string a, b;
        for (const auto& t : random_tokens(rng, 12, 20)) a += t + " ";
        for (const auto& t : random_tokens(rng, 12, 20)) b += t + " ";
        pairs.push_back({a, b.empty() ? "w1" : b});
    }
    CHECK(score_batch(pairs) == score_batch_serial(pairs));
}
