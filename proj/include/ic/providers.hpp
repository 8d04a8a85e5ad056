#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ic/codetext.hpp"
#include "ic/intent.hpp"
#include "ic/matrix.hpp"

namespace ic {

using Embedding = std::vector<double>;

// Final-layer attention over the logical [comment, intent, code] layout.
// Row/column order: comment tokens 0..K-1, intent at K, code tokens K+1..K+N.
struct AttentionBundle {
    Matrix matrix;
    std::size_t comment_len = 0;  // K
    std::size_t code_len = 0;     // N
    std::vector<std::size_t> code_token_statement;  // size N, values < L

    std::size_t side() const { return comment_len + 1 + code_len; }
};

struct CompletionRequest {
    std::string prompt;
    double temperature = 0.5;
    int max_tokens = 256;
    std::string model;
    std::optional<long long> seed_hint;
};

// The services the pipeline consumes. HTTP clients implement them in
// production; tests plug in-process fakes.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    // One vector per text, in order, all of the same dimension.
    virtual std::vector<Embedding> embed(std::span<const std::string> texts,
                                         const std::string& model_tag) = 0;
};

class AttentionProvider {
public:
    virtual ~AttentionProvider() = default;
    virtual AttentionBundle fetch_attention(const std::string& comment, IntentCategory intent,
                                            const std::string& code,
                                            const StatementList& statements,
                                            const std::string& model_tag) = 0;
};

class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

}  // namespace ic
