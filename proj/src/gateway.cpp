#include "ic/gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "ic/error.hpp"
#include "ic/hashing.hpp"

namespace ic {

namespace {

std::string excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

std::string env_or(const char* name, const char* fallback) {
    const char* value = std::getenv(name);
    return value != nullptr ? std::string(value) : std::string(fallback);
}

class SemaphoreGuard {
public:
    explicit SemaphoreGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
    ~SemaphoreGuard() { sem_.release(); }
    SemaphoreGuard(const SemaphoreGuard&) = delete;
    SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

private:
    std::counting_semaphore<>& sem_;
};

Embedding to_embedding(const nlohmann::json& row) {
    Embedding v;
    v.reserve(row.size());
    for (const auto& x : row) v.push_back(x.get<double>());
    return v;
}

}  // namespace

void ServiceEndpoint::validate() const {
    if (base_url.empty()) throw ConfigError("service base URL is empty");
    if (max_retries < 0 || max_retries > 5) throw ConfigError("max_retries must be within 0..5");
    if (max_concurrency < 1) throw ConfigError("max_concurrency must be at least 1");
    if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
}

ServiceEndpoint llm_endpoint_from_env() {
    ServiceEndpoint e;
    e.base_url = env_or("IC_LLM_URL", "http://127.0.0.1:8000");
    e.api_key = env_or("IC_LLM_API_KEY", "");
    return e;
}

ServiceEndpoint model_server_endpoint_from_env() {
    ServiceEndpoint e;
    e.base_url = env_or("IC_MODEL_SERVER_URL", "http://127.0.0.1:8001");
    e.api_key = env_or("IC_MODEL_SERVER_API_KEY", "");
    return e;
}

JsonHttpClient::JsonHttpClient(ServiceEndpoint endpoint)
    : endpoint_(std::move(endpoint)), in_flight_(std::max(1, endpoint_.max_concurrency)) {
    endpoint_.validate();
}

nlohmann::json JsonHttpClient::post(const std::string& path, const nlohmann::json& body) {
    const std::string payload = body.dump();
    httplib::Headers headers;
    if (!endpoint_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
    }

    std::string last_failure;
    bool last_was_transport = false;
    int last_status = 0;
    auto backoff = endpoint_.backoff;
    for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(endpoint_.base_url);
        client.set_connection_timeout(endpoint_.timeout);
        client.set_read_timeout(endpoint_.timeout);
        client.set_write_timeout(endpoint_.timeout);

        const auto start = std::chrono::steady_clock::now();
        httplib::Result result;
        {
            SemaphoreGuard guard(in_flight_);
            ++requests_sent_;
            result = client.Post(path, headers, payload, "application/json");
        }
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();

        if (!result) {
            last_was_transport = true;
            last_failure = httplib::to_string(result.error());
            spdlog::warn("POST {}{} attempt {} failed after {} ms: {}", endpoint_.base_url, path,
                         attempt + 1, ms, last_failure);
            continue;
        }
        spdlog::debug("POST {}{} -> {} in {} ms ({} bytes out, {} bytes in)", endpoint_.base_url,
                      path, result->status, ms, payload.size(), result->body.size());
        last_was_transport = false;
        last_status = result->status;
        if (result->status >= 500) {
            last_failure = excerpt(result->body);
            spdlog::warn("POST {}{} attempt {} returned {}", endpoint_.base_url, path, attempt + 1,
                         result->status);
            continue;
        }
        if (result->status == 422) {
            throw ProtocolError(path + " rejected the request: " + excerpt(result->body));
        }
        if (result->status != 200) {
            throw ServiceError(result->status, path + " returned " + std::to_string(result->status) +
                                                   ": " + excerpt(result->body));
        }
        try {
            return nlohmann::json::parse(result->body);
        } catch (const nlohmann::json::parse_error&) {
            throw ProtocolError(path + " returned invalid JSON: " + excerpt(result->body));
        }
    }
    const int attempts = endpoint_.max_retries + 1;
    if (last_was_transport) {
        throw ServiceUnavailable(endpoint_.base_url + path + " unreachable after " +
                                 std::to_string(attempts) + " attempts: " + last_failure);
    }
    throw ServiceError(last_status, path + " returned " + std::to_string(last_status) + " after " +
                                        std::to_string(attempts) + " attempts: " + last_failure);
}

EmbeddingCache::EmbeddingCache(std::filesystem::path directory) : directory_(std::move(directory)) {
    std::filesystem::create_directories(*directory_);
}

std::string EmbeddingCache::key(const std::string& model_tag, const std::string& text) {
    std::string material = model_tag;
    material.push_back('\0');
    material += text;
    return sha256_hex(material);
}

std::optional<Embedding> EmbeddingCache::get(const std::string& key) const {
    {
        std::shared_lock lock(mutex_);
        if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }
    if (!directory_) return std::nullopt;
    std::ifstream in(*directory_ / (key + ".json"));
    if (!in) return std::nullopt;
    try {
        Embedding v = to_embedding(nlohmann::json::parse(in));
        std::unique_lock lock(mutex_);
        memory_.emplace(key, v);
        return v;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

void EmbeddingCache::put(const std::string& key, const Embedding& vector) {
    {
        std::unique_lock lock(mutex_);
        memory_.insert_or_assign(key, vector);
    }
    if (!directory_) return;
    const auto target = *directory_ / (key + ".json");
    auto tmp = target;
    tmp += "." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << nlohmann::json(vector).dump();
    }
    std::filesystem::rename(tmp, target);
}

ModelServerClient::ModelServerClient(ServiceEndpoint endpoint, std::shared_ptr<EmbeddingCache> cache,
                                     std::size_t batch_size)
    : http_(std::move(endpoint)), cache_(std::move(cache)), batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::vector<Embedding> ModelServerClient::embed(std::span<const std::string> texts,
                                                const std::string& model_tag) {
    if (texts.empty()) throw InvalidArgument("embed called with an empty batch");

    std::vector<std::optional<Embedding>> out(texts.size());
    std::vector<std::string> keys(texts.size());
    // Distinct missing texts, first occurrence order.
    std::vector<std::size_t> missing;
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        keys[i] = EmbeddingCache::key(model_tag, texts[i]);
        out[i] = cache_->get(keys[i]);
        if (!out[i] && seen.emplace(keys[i], i).second) missing.push_back(i);
    }

    for (std::size_t start = 0; start < missing.size(); start += batch_size_) {
        const std::size_t stop = std::min(missing.size(), start + batch_size_);
        nlohmann::json request;
        request["model"] = model_tag;
        request["texts"] = nlohmann::json::array();
        for (std::size_t m = start; m < stop; ++m) request["texts"].push_back(texts[missing[m]]);

        const auto response = http_.post("/v1/embed", request);
        try {
            const auto& vectors = response.at("vectors");
            const auto dim = response.at("dim").get<std::size_t>();
            if (vectors.size() != stop - start) {
                throw ProtocolError("/v1/embed returned " + std::to_string(vectors.size()) +
                                    " vectors for " + std::to_string(stop - start) + " texts");
            }
            for (std::size_t m = start; m < stop; ++m) {
                Embedding v = to_embedding(vectors[m - start]);
                if (v.size() != dim) {
                    throw ProtocolError("/v1/embed vector " + std::to_string(m - start) + " has dimension " +
                                        std::to_string(v.size()) + ", advertised " + std::to_string(dim));
                }
                cache_->put(keys[missing[m]], v);
                out[missing[m]] = std::move(v);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("/v1/embed response malformed: ") + e.what());
        }
    }

    std::vector<Embedding> result;
    result.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (!out[i]) out[i] = cache_->get(keys[i]);
        result.push_back(std::move(*out[i]));
        if (result.back().size() != result.front().size()) {
            throw ProtocolError("/v1/embed produced mixed dimensions within one batch");
        }
    }
    return result;
}

AttentionBundle ModelServerClient::fetch_attention(const std::string& comment, IntentCategory intent,
                                                   const std::string& code,
                                                   const StatementList& statements,
                                                   const std::string& model_tag) {
    nlohmann::json request;
    request["model"] = model_tag;
    request["comment"] = comment;
    request["intent"] = intent_name(intent);
    request["code"] = code;
    request["statement_spans"] = nlohmann::json::array();
    for (const auto& s : statements.statements) {
        request["statement_spans"].push_back({s.begin, s.end});
    }
    const auto response = http_.post("/v1/attention", request);

    AttentionBundle bundle;
    try {
        bundle.comment_len = response.at("K").get<std::size_t>();
        bundle.code_len = response.at("N").get<std::size_t>();
        const auto& rows = response.at("matrix");
        const std::size_t side = bundle.side();
        if (rows.size() != side) {
            throw ProtocolError("/v1/attention matrix has " + std::to_string(rows.size()) +
                                " rows, expected K+1+N = " + std::to_string(side));
        }
        bundle.matrix = Matrix(side, side);
        for (std::size_t r = 0; r < side; ++r) {
            if (rows[r].size() != side) {
                throw ProtocolError("/v1/attention matrix row " + std::to_string(r) + " has " +
                                    std::to_string(rows[r].size()) + " columns, expected " +
                                    std::to_string(side));
            }
            for (std::size_t c = 0; c < side; ++c) {
                const double v = rows[r][c].get<double>();
                if (!(v >= 0.0)) {
                    throw ProtocolError("/v1/attention matrix entry (" + std::to_string(r) + ", " +
                                        std::to_string(c) + ") is negative");
                }
                bundle.matrix(r, c) = v;
            }
        }
        const auto& map = response.at("code_token_statement");
        if (map.size() != bundle.code_len) {
            throw ProtocolError("/v1/attention code_token_statement has " + std::to_string(map.size()) +
                                " entries for N = " + std::to_string(bundle.code_len));
        }
        for (std::size_t t = 0; t < map.size(); ++t) {
            const auto s = map[t].get<long long>();
            if (s < 0 || static_cast<std::size_t>(s) >= statements.size()) {
                throw ProtocolError("/v1/attention code token " + std::to_string(t) +
                                    " maps to statement " + std::to_string(s) + " of " +
                                    std::to_string(statements.size()));
            }
            bundle.code_token_statement.push_back(static_cast<std::size_t>(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("/v1/attention response malformed: ") + e.what());
    }
    return bundle;
}

double ModelServerClient::relevance(const std::string& comment, IntentCategory intent,
                                    const std::string& code, const std::string& model_tag) {
    nlohmann::json request;
    request["model"] = model_tag;
    request["comment"] = comment;
    request["intent"] = intent_name(intent);
    request["code"] = code;
    const auto response = http_.post("/v1/relevance", request);
    try {
        return response.at("score").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("/v1/relevance response malformed: ") + e.what());
    }
}

CompletionClient::CompletionClient(ServiceEndpoint endpoint) : http_(std::move(endpoint)) {}

std::string CompletionClient::complete(const CompletionRequest& request) {
    if (request.prompt.empty()) throw InvalidArgument("completion prompt is empty");
    if (request.temperature < 0.0) throw InvalidArgument("temperature must be non-negative");
    nlohmann::json body;
    body["model"] = request.model;
    body["prompt"] = request.prompt;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    if (request.seed_hint) body["seed"] = *request.seed_hint;
    const auto response = http_.post("/v1/complete", body);
    try {
        return response.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("/v1/complete response malformed: ") + e.what());
    }
}

std::vector<ParsedResponse> RepeatedResult::successes() const {
    std::vector<ParsedResponse> out;
    for (const auto& a : attempts) {
        if (a.response) out.push_back(*a.response);
    }
    return out;
}

bool RepeatedResult::all_failed() const {
    for (const auto& a : attempts) {
        if (a.response) return false;
    }
    return true;
}

RepeatedResult run_repeated(CompletionProvider& provider, const CompletionRequest& request,
                            int repetitions) {
    if (repetitions < 1) throw InvalidArgument("repetitions must be at least 1");
    RepeatedResult result;
    for (int i = 0; i < repetitions; ++i) {
        CompletionRequest attempt_request = request;
        if (request.seed_hint) attempt_request.seed_hint = *request.seed_hint + i;
        Attempt attempt;
        attempt.index = i;
        try {
            attempt.response = parse_response(provider.complete(attempt_request));
        } catch (const ServiceUnavailable&) {
            throw;
        } catch (const ParseError& e) {
            attempt.failure = std::string("parse: ") + e.what();
        } catch (const ServiceError& e) {
            attempt.failure = std::string("service: ") + e.what();
        }
        result.attempts.push_back(std::move(attempt));
    }
    return result;
}

}  // namespace ic
