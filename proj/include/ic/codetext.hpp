#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ic {

// Set of lowercase sub-tokens, stored sorted and unique so that set algebra is
// a linear merge.
class TokenBag {
public:
    TokenBag() = default;
    explicit TokenBag(std::vector<std::string> tokens);

    const std::vector<std::string>& tokens() const { return tokens_; }
    std::size_t count() const { return tokens_.size(); }
    bool empty() const { return tokens_.empty(); }
    bool contains(std::string_view token) const;

    bool operator==(const TokenBag&) const = default;

private:
    std::vector<std::string> tokens_;
};

struct SubToken {
    std::string text;    // lowercase
    std::size_t offset;  // byte offset of the first character in the source
};

// Ordered sub-token stream: identifiers split on camelCase humps, underscores
// and letter/digit boundaries; numbers kept; punctuation and the contents of
// string and character literals dropped.
std::vector<SubToken> subtoken_sequence(std::string_view code);

TokenBag subtokenize(std::string_view code);

struct Statement {
    std::size_t index;             // 0-based, contiguous
    std::string text;              // trimmed line content
    std::size_t begin;             // byte span of `text` inside the source
    std::size_t end;
    std::vector<std::size_t> token_spans;  // positions in subtoken_sequence(code)
};

struct StatementList {
    std::vector<Statement> statements;

    std::size_t size() const { return statements.size(); }
    bool empty() const { return statements.empty(); }
    const Statement& operator[](std::size_t i) const { return statements[i]; }
};

// One statement per non-blank physical line that is not made of braces only.
StatementList segment_statements(std::string_view code);

}  // namespace ic
