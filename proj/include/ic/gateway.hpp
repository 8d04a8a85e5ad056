#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ic/promptgen.hpp"
#include "ic/providers.hpp"

namespace ic {

struct ServiceEndpoint {
    std::string base_url;  // e.g. http://127.0.0.1:8080
    std::chrono::milliseconds timeout{60000};
    int max_retries = 3;      // at most 5; total attempts = 1 + max_retries
    int max_concurrency = 4;  // in-flight requests through one client
    std::chrono::milliseconds backoff{250};  // doubled after every failed attempt
    std::string api_key;      // sent as a bearer token when non-empty

    void validate() const;
};

// Reads IC_LLM_URL / IC_LLM_API_KEY or IC_MODEL_SERVER_URL / IC_MODEL_SERVER_API_KEY.
ServiceEndpoint llm_endpoint_from_env();
ServiceEndpoint model_server_endpoint_from_env();

// JSON-over-HTTP POST with retries and a bounded number of in-flight requests.
// 5xx statuses and transport failures are retried; 422 becomes ProtocolError;
// other non-success statuses become ServiceError at once. Transport failure on
// the final attempt becomes ServiceUnavailable.
class JsonHttpClient {
public:
    explicit JsonHttpClient(ServiceEndpoint endpoint);

    nlohmann::json post(const std::string& path, const nlohmann::json& body);

    const ServiceEndpoint& endpoint() const { return endpoint_; }
    std::size_t requests_sent() const { return requests_sent_.load(); }

private:
    ServiceEndpoint endpoint_;
    std::counting_semaphore<> in_flight_;
    std::atomic<std::size_t> requests_sent_{0};
};

// Content-addressed embedding store keyed by sha256(model tag, text). Memory
// always; one JSON file per entry when a directory is given.
class EmbeddingCache {
public:
    EmbeddingCache() = default;
    explicit EmbeddingCache(std::filesystem::path directory);

    static std::string key(const std::string& model_tag, const std::string& text);
    std::optional<Embedding> get(const std::string& key) const;
    void put(const std::string& key, const Embedding& vector);

private:
    std::optional<std::filesystem::path> directory_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<std::string, Embedding> memory_;
};

// /v1/embed, /v1/attention and /v1/relevance.
class ModelServerClient : public EmbeddingProvider, public AttentionProvider {
public:
    explicit ModelServerClient(ServiceEndpoint endpoint,
                               std::shared_ptr<EmbeddingCache> cache = std::make_shared<EmbeddingCache>(),
                               std::size_t batch_size = 64);

    // Throws InvalidArgument on an empty batch; ProtocolError when the server
    // returns the wrong count or mixed dimensions.
    std::vector<Embedding> embed(std::span<const std::string> texts,
                                 const std::string& model_tag) override;

    // Throws ProtocolError when the matrix does not match K+1+N, has a negative
    // entry, or the token map does not cover N tokens with valid statements.
    AttentionBundle fetch_attention(const std::string& comment, IntentCategory intent,
                                    const std::string& code, const StatementList& statements,
                                    const std::string& model_tag) override;

    double relevance(const std::string& comment, IntentCategory intent, const std::string& code,
                     const std::string& model_tag);

    std::size_t requests_sent() const { return http_.requests_sent(); }

private:
    JsonHttpClient http_;
    std::shared_ptr<EmbeddingCache> cache_;
    std::size_t batch_size_;
};

// /v1/complete.
class CompletionClient : public CompletionProvider {
public:
    explicit CompletionClient(ServiceEndpoint endpoint);

    std::string complete(const CompletionRequest& request) override;

private:
    JsonHttpClient http_;
};

struct Attempt {
    int index = 0;  // 0-based repetition number
    std::optional<ParsedResponse> response;
    std::string failure;  // empty on success
};

struct RepeatedResult {
    std::vector<Attempt> attempts;

    std::vector<ParsedResponse> successes() const;
    bool all_failed() const;
};

// Runs completion + parse `repetitions` times. Per-attempt service and parse
// failures are recorded; ServiceUnavailable propagates.
RepeatedResult run_repeated(CompletionProvider& provider, const CompletionRequest& request,
                            int repetitions = 5);

}  // namespace ic
