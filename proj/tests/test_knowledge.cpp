#include <doctest.h>

#include <filesystem>
#include <numeric>
#include <random>

#include "ic/error.hpp"
#include "ic/knowledge.hpp"
#include "oracles.hpp"

using namespace ic;

namespace {

StatementList numbered(std::size_t l) {
    std::string code;
    for (std::size_t i = 0; i < l; ++i) code += "stmt" + std::to_string(i) + "();\n";
    return segment_statements(code);
}

AttentionBundle random_bundle(std::mt19937_64& rng, std::size_t k, std::size_t n, std::size_t l) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    AttentionBundle b;
    b.comment_len = k;
    b.code_len = n;
    b.matrix = Matrix(b.side(), b.side());
    for (std::size_t r = 0; r < b.side(); ++r) {
        for (std::size_t c = 0; c < b.side(); ++c) b.matrix(r, c) = unit(rng);
    }
    for (std::size_t t = 0; t < n; ++t) b.code_token_statement.push_back(t < l ? t : rng() % l);
    std::shuffle(b.code_token_statement.begin(), b.code_token_statement.end(), rng);
    return b;
}

}  // namespace

TEST_CASE("slice picks comment rows and code columns") {
    AttentionBundle b;
    b.comment_len = 2;
    b.code_len = 3;
    b.matrix = Matrix(6, 6);
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t c = 0; c < 6; ++c) b.matrix(r, c) = static_cast<double>(10 * r + c);
    }
    const auto s = slice_comment_to_code(b);
    REQUIRE(s.rows() == 2);
    REQUIRE(s.cols() == 3);
    CHECK(s(0, 0) == 3);
    CHECK(s(0, 2) == 5);
    CHECK(s(1, 0) == 13);
    CHECK(s(1, 2) == 15);

    AttentionBundle one;
    one.comment_len = 1;
    one.code_len = 1;
    one.matrix = Matrix(3, 3);
    one.matrix(0, 2) = 0.7;
    CHECK(slice_comment_to_code(one)(0, 0) == 0.7);

    AttentionBundle empty;
    empty.comment_len = 0;
    empty.code_len = 2;
    empty.matrix = Matrix(3, 3);
    CHECK_THROWS_AS(slice_comment_to_code(empty), InvalidArgument);

    std::mt19937_64 rng(1);
    const auto r = random_bundle(rng, 2, 3, 2);
    const auto rs = slice_comment_to_code(r);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 3; ++j) CHECK(rs(i, j) == r.matrix(i, 3 + j));
    }
}

TEST_CASE("aggregation worked example") {
    Matrix s(2, 3);
    s(0, 0) = 0.1;
    s(0, 1) = 0.2;
    s(0, 2) = 0.3;
    s(1, 0) = 0.4;
    s(1, 1) = 0.5;
    s(1, 2) = 0.6;
    const std::vector<std::size_t> map{0, 0, 1};
    const auto scores = aggregate_statement_scores(s, map, 2);
    REQUIRE(scores.size() == 2);
    CHECK(scores[0] == doctest::Approx(1.2));
    CHECK(scores[1] == doctest::Approx(0.9));
    const auto mean = aggregate_statement_scores(s, map, 2, ExtractionPolicy::Combine::Mean);
    CHECK(mean[0] == doctest::Approx(0.6));
    CHECK(mean[1] == doctest::Approx(0.9));

    CHECK(aggregate_statement_scores(Matrix(2, 3), map, 2) == std::vector<double>{0.0, 0.0});
    const std::vector<std::size_t> one{0, 0, 0};
    CHECK(aggregate_statement_scores(s, one, 1)[0] == doctest::Approx(2.1));

    const std::vector<std::size_t> bad{0, 2, 1};
    try {
        (void)aggregate_statement_scores(s, bad, 2);
        FAIL("expected AlignmentError");
    } catch (const AlignmentError& e) {
        CHECK(e.token_index() == 1);
    }
    const std::vector<std::size_t> short_map{0, 1};
    CHECK_THROWS_AS(aggregate_statement_scores(s, short_map, 2), AlignmentError);
}

TEST_CASE("extraction examples") {
    AttentionBundle b;
    b.comment_len = 2;
    b.code_len = 3;
    b.matrix = Matrix(6, 6);
    const double vals[2][3] = {{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < 3; ++c) b.matrix(r, 3 + c) = vals[r][c];
    }
    b.code_token_statement = {0, 0, 1};
    ExtractionPolicy fixed1;
    fixed1.mode = ExtractionPolicy::Mode::Fixed;
    fixed1.fixed = 1;
    const auto top = extract_important(b, numbered(2), fixed1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].statement == 0);
    CHECK(top[0].score == doctest::Approx(1.2));

    b.code_token_statement = {0, 0, 0};
    CHECK(extract_important(b, numbered(1), ExtractionPolicy{}).size() == 1);

    // statements 2 and 4 tie
    AttentionBundle t;
    t.comment_len = 1;
    t.code_len = 5;
    t.matrix = Matrix(7, 7);
    const double row[5] = {0.1, 0.2, 0.5, 0.3, 0.5};
    for (std::size_t c = 0; c < 5; ++c) t.matrix(0, 2 + c) = row[c];
    t.code_token_statement = {0, 1, 2, 3, 4};
    const auto tie = extract_important(t, numbered(5), fixed1);
    CHECK(tie[0].statement == 2);
}

TEST_CASE("extraction policy") {
    const ExtractionPolicy def;
    CHECK(def.count(1) == 1);
    CHECK(def.count(2) == 1);
    CHECK(def.count(5) == 2);
    CHECK(def.count(10) == 3);
    CHECK(def.count(12) == 4);
    for (std::size_t l = 1; l < 200; ++l) {
        CHECK(def.count(l) >= 1);
        CHECK(def.count(l) <= l);
    }
    const auto fixed = ExtractionPolicy::parse("fixed:4");
    CHECK(fixed.mode == ExtractionPolicy::Mode::Fixed);
    CHECK(fixed.count(2) == 2);
    CHECK(fixed.count(9) == 4);
    const auto mean = ExtractionPolicy::parse("fraction:0.5,mean");
    CHECK(mean.combine == ExtractionPolicy::Combine::Mean);
    CHECK(mean.count(9) == 5);
    CHECK(ExtractionPolicy::parse(mean.describe()).count(9) == 5);
    CHECK_THROWS_AS(ExtractionPolicy::parse("top3"), ConfigError);
    CHECK_THROWS_AS(ExtractionPolicy::parse("fraction:0"), ConfigError);
    CHECK_THROWS_AS(ExtractionPolicy::parse("fixed:0"), ConfigError);
}

TEST_CASE("bundle validation") {
    std::mt19937_64 rng(2);
    auto b = random_bundle(rng, 3, 4, 2);
    CHECK_NOTHROW(validate_bundle(b));
    auto neg = b;
    neg.matrix(1, 1) = -0.1;
    CHECK_THROWS_AS(validate_bundle(neg), InvalidArgument);
    auto shape = b;
    shape.code_len = 5;
    CHECK_THROWS_AS(validate_bundle(shape), InvalidArgument);
    auto map = b;
    map.code_token_statement.pop_back();
    CHECK_THROWS_AS(validate_bundle(map), InvalidArgument);
}

TEST_CASE("aggregation properties on random bundles") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 1 + rng() % 20, n = 1 + rng() % 30;
        const std::size_t l = 1 + rng() % std::min<std::size_t>(n, 10);
        const auto b = random_bundle(rng, k, n, l);
        const auto slice = slice_comment_to_code(b);
        const auto scores = aggregate_statement_scores(slice, b.code_token_statement, l);
        const auto expected = oracle::statement_scores(b, l);
        for (std::size_t i = 0; i < l; ++i) CHECK(std::abs(scores[i] - expected[i]) <= 1e-9);

        const double total = std::accumulate(slice.data().begin(), slice.data().end(), 0.0);
        CHECK(std::abs(std::accumulate(scores.begin(), scores.end(), 0.0) - total) <= 1e-9);

        // permuting code tokens with their statement map
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix permuted(k, n);
        std::vector<std::size_t> permuted_map(n);
        for (std::size_t c = 0; c < n; ++c) {
            permuted_map[c] = b.code_token_statement[perm[c]];
            for (std::size_t r = 0; r < k; ++r) permuted(r, c) = slice(r, perm[c]);
        }
        const auto again = aggregate_statement_scores(permuted, permuted_map, l);
        for (std::size_t i = 0; i < l; ++i) CHECK(std::abs(again[i] - scores[i]) <= 1e-9);

        // scale invariance of the order
        auto scaled = b;
        const double alpha = 0.1 + static_cast<double>(rng() % 1000) / 10.0;
        for (std::size_t r = 0; r < b.side(); ++r) {
            for (std::size_t c = 0; c < b.side(); ++c) scaled.matrix(r, c) *= alpha;
        }
        const auto statements = numbered(l);
        ExtractionPolicy all;
        all.mode = ExtractionPolicy::Mode::Fixed;
        all.fixed = l;
        const auto base = extract_important(b, statements, all);
        const auto big = extract_important(scaled, statements, all);
        const auto order = oracle::argsort_desc(expected);
        for (std::size_t i = 0; i < l; ++i) {
            CHECK(base[i].statement == big[i].statement);
            CHECK(base[i].statement == order[i]);
            CHECK(std::abs(big[i].score - alpha * base[i].score) <= 1e-9 * alpha * (1 + base[i].score));
        }
    }
}

TEST_CASE("bundle json and cache round trip") {
    std::mt19937_64 rng(4);
    const auto b = random_bundle(rng, 3, 5, 3);
    const auto back = bundle_from_json(bundle_to_json(b));
    CHECK(back.matrix == b.matrix);
    CHECK(back.comment_len == 3);
    CHECK(back.code_len == 5);
    CHECK(back.code_token_statement == b.code_token_statement);

    const auto dir = std::filesystem::temp_directory_path() / "ic_test_bundles";
    std::filesystem::remove_all(dir);
    BundleCache cache(dir);
    CHECK_FALSE(cache.get("m", "p", IntentCategory::What).has_value());
    cache.put("m", "p", IntentCategory::What, b);
    const auto hit = cache.get("m", "p", IntentCategory::What);
    REQUIRE(hit.has_value());
    CHECK(hit->matrix == b.matrix);
    CHECK_FALSE(cache.get("m", "p", IntentCategory::Why).has_value());
    CHECK_FALSE(cache.get("m2", "p", IntentCategory::What).has_value());
}
