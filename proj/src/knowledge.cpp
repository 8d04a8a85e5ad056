#include "ic/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ic/error.hpp"
#include "ic/hashing.hpp"
#include "ic/kernels.hpp"

namespace ic {

std::size_t ExtractionPolicy::count(std::size_t statement_count) const {
    if (statement_count == 0) return 0;
    std::size_t q = 1;
    if (mode == Mode::Fixed) {
        q = fixed;
    } else {
        q = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(statement_count)));
    }
    return std::clamp<std::size_t>(q, 1, statement_count);
}

ExtractionPolicy ExtractionPolicy::parse(std::string_view text) {
    ExtractionPolicy policy;
    std::string body(text);
    if (auto comma = body.find(','); comma != std::string::npos) {
        const std::string combine = body.substr(comma + 1);
        body.resize(comma);
        if (combine == "mean") {
            policy.combine = Combine::Mean;
        } else if (combine != "sum") {
            throw ConfigError("unknown statement score combine '" + combine + "'");
        }
    }
    const auto colon = body.find(':');
    if (colon == std::string::npos) throw ConfigError("q policy must look like fraction:0.3 or fixed:2");
    const std::string kind = body.substr(0, colon);
    const std::string value = body.substr(colon + 1);
    try {
        if (kind == "fraction") {
            policy.mode = Mode::Fraction;
            policy.fraction = std::stod(value);
            if (!(policy.fraction > 0.0 && policy.fraction <= 1.0)) throw ConfigError("");
        } else if (kind == "fixed") {
            policy.mode = Mode::Fixed;
            const long n = std::stol(value);
            if (n < 1) throw ConfigError("");
            policy.fixed = static_cast<std::size_t>(n);
        } else {
            throw ConfigError("");
        }
    } catch (const std::exception&) {
        throw ConfigError("invalid q policy '" + std::string(text) + "'");
    }
    return policy;
}

std::string ExtractionPolicy::describe() const {
    std::ostringstream out;
    if (mode == Mode::Fraction) {
        out << "fraction:" << fraction;
    } else {
        out << "fixed:" << fixed;
    }
    if (combine == Combine::Mean) out << ",mean";
    return out.str();
}

void validate_bundle(const AttentionBundle& bundle) {
    const std::size_t side = bundle.side();
    if (bundle.matrix.rows() != side || bundle.matrix.cols() != side) {
        throw InvalidArgument("attention matrix is " + std::to_string(bundle.matrix.rows()) + "x" +
                              std::to_string(bundle.matrix.cols()) + ", expected side " +
                              std::to_string(side) + " for K=" + std::to_string(bundle.comment_len) +
                              ", N=" + std::to_string(bundle.code_len));
    }
    for (double v : bundle.matrix.data()) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InvalidArgument("attention matrix has a negative or non-finite entry");
        }
    }
    if (bundle.code_token_statement.size() != bundle.code_len) {
        throw InvalidArgument("code_token_statement has " +
                              std::to_string(bundle.code_token_statement.size()) +
                              " entries, expected " + std::to_string(bundle.code_len));
    }
}

Matrix slice_comment_to_code(const AttentionBundle& bundle) {
    const std::size_t k = bundle.comment_len;
    const std::size_t n = bundle.code_len;
    if (k == 0 || n == 0) {
        throw InvalidArgument("degenerate attention bundle: K=" + std::to_string(k) +
                              ", N=" + std::to_string(n));
    }
    if (bundle.matrix.rows() != bundle.side() || bundle.matrix.cols() != bundle.side()) {
        throw InvalidArgument("attention matrix does not match K+1+N");
    }
    Matrix slice(k, n);
    for (std::size_t r = 0; r < k; ++r) {
        const double* src = bundle.matrix.data().data() + r * bundle.matrix.cols() + k + 1;
        std::copy(src, src + n, &slice(r, 0));
    }
    return slice;
}

std::vector<double> aggregate_statement_scores(const Matrix& slice,
                                               std::span<const std::size_t> code_token_statement,
                                               std::size_t statement_count,
                                               ExtractionPolicy::Combine combine) {
    for (std::size_t c = 0; c < slice.cols(); ++c) {
        if (c >= code_token_statement.size()) {
            throw AlignmentError(c, "code token " + std::to_string(c) + " has no statement");
        }
        if (code_token_statement[c] >= statement_count) {
            throw AlignmentError(c, "code token " + std::to_string(c) + " maps to statement " +
                                        std::to_string(code_token_statement[c]) + " of " +
                                        std::to_string(statement_count));
        }
    }
    auto scores = kernels::statement_scores(slice, code_token_statement.first(slice.cols()),
                                            statement_count);
    if (combine == ExtractionPolicy::Combine::Mean) {
        std::vector<std::size_t> tokens(statement_count, 0);
        for (std::size_t c = 0; c < slice.cols(); ++c) ++tokens[code_token_statement[c]];
        for (std::size_t l = 0; l < statement_count; ++l) {
            if (tokens[l] > 0) scores[l] /= static_cast<double>(tokens[l]);
        }
    }
    return scores;
}

std::vector<ImportantStatement> extract_important(const AttentionBundle& bundle,
                                                  const StatementList& statements,
                                                  const ExtractionPolicy& policy) {
    if (statements.empty()) throw InvalidArgument("demonstration code has no statements");
    const auto scores = aggregate_statement_scores(slice_comment_to_code(bundle),
                                                   bundle.code_token_statement, statements.size(),
                                                   policy.combine);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const std::size_t q = policy.count(statements.size());
    std::vector<ImportantStatement> out;
    out.reserve(q);
    for (std::size_t i = 0; i < q; ++i) out.push_back({order[i], scores[order[i]]});
    return out;
}

std::string bundle_to_json(const AttentionBundle& bundle) {
    nlohmann::ordered_json j;
    j["K"] = bundle.comment_len;
    j["N"] = bundle.code_len;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < bundle.matrix.rows(); ++r) {
        auto row = nlohmann::ordered_json::array();
        for (std::size_t c = 0; c < bundle.matrix.cols(); ++c) row.push_back(bundle.matrix(r, c));
        rows.push_back(std::move(row));
    }
    j["matrix"] = std::move(rows);
    j["code_token_statement"] = bundle.code_token_statement;
    return j.dump();
}

AttentionBundle bundle_from_json(std::string_view text) {
    const auto j = nlohmann::json::parse(text);
    AttentionBundle bundle;
    bundle.comment_len = j.at("K").get<std::size_t>();
    bundle.code_len = j.at("N").get<std::size_t>();
    const auto& rows = j.at("matrix");
    const std::size_t side = rows.size();
    bundle.matrix = Matrix(side, side);
    for (std::size_t r = 0; r < side; ++r) {
        const auto& row = rows[r];
        if (row.size() != side) throw InvalidArgument("attention matrix is not square");
        for (std::size_t c = 0; c < side; ++c) bundle.matrix(r, c) = row[c].get<double>();
    }
    bundle.code_token_statement = j.at("code_token_statement").get<std::vector<std::size_t>>();
    return bundle;
}

BundleCache::BundleCache(std::filesystem::path directory) : directory_(std::move(directory)) {
    std::filesystem::create_directories(directory_);
}

std::filesystem::path BundleCache::file_for(const std::string& model_tag,
                                            const std::string& pair_id,
                                            IntentCategory intent) const {
    std::string key = model_tag;
    key.push_back('\0');
    key += pair_id;
    key.push_back('\0');
    key += intent_name(intent);
    return directory_ / (sha256_hex(key) + ".json");
}

std::optional<AttentionBundle> BundleCache::get(const std::string& model_tag,
                                                const std::string& pair_id,
                                                IntentCategory intent) const {
    std::ifstream in(file_for(model_tag, pair_id, intent));
    if (!in) return std::nullopt;
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return bundle_from_json(text.str());
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void BundleCache::put(const std::string& model_tag, const std::string& pair_id,
                      IntentCategory intent, const AttentionBundle& bundle) const {
    const auto target = file_for(model_tag, pair_id, intent);
    auto tmp = target;
    tmp += "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << bundle_to_json(bundle);
    }
    std::filesystem::rename(tmp, target);
}

}  // namespace ic
