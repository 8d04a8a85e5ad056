#include "ic/codetext.hpp"

#include <algorithm>
#include <cctype>

namespace ic {

namespace {

enum class CharClass { Lower, Upper, Digit, Other };

CharClass classify(char c) {
    auto u = static_cast<unsigned char>(c);
    if (u >= 0x80) return CharClass::Lower;  // non-ASCII bytes stay inside words
    if (std::islower(u)) return CharClass::Lower;
    if (std::isupper(u)) return CharClass::Upper;
    if (std::isdigit(u)) return CharClass::Digit;
    return CharClass::Other;
}

bool is_word_char(char c) {
    return classify(c) != CharClass::Other || c == '_' || c == '$';
}

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Splits one identifier-like run (no separators) on case humps and digit runs.
void split_humps(std::string_view word, std::size_t base, std::vector<SubToken>& out) {
    std::size_t start = 0;
    for (std::size_t i = 1; i <= word.size(); ++i) {
        bool cut = i == word.size();
        if (!cut) {
            CharClass prev = classify(word[i - 1]);
            CharClass cur = classify(word[i]);
            if ((prev == CharClass::Digit) != (cur == CharClass::Digit)) {
                cut = true;
            } else if (prev == CharClass::Lower && cur == CharClass::Upper) {
                cut = true;
            } else if (prev == CharClass::Upper && cur == CharClass::Upper && i + 1 < word.size() &&
                       classify(word[i + 1]) == CharClass::Lower) {
                // "HTTPServer" -> HTTP | Server
                cut = true;
            }
        }
        if (cut) {
            if (i > start) out.push_back({lowercase(word.substr(start, i - start)), base + start});
            start = i;
        }
    }
}

std::size_t skip_literal(std::string_view code, std::size_t pos) {
    const char quote = code[pos];
    ++pos;
    while (pos < code.size()) {
        char c = code[pos];
        if (c == '\\') {
            pos += 2;
            continue;
        }
        ++pos;
        if (c == quote || c == '\n') break;
    }
    return std::min(pos, code.size());
}

bool brace_only(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](char c) {
        return c == '{' || c == '}' || std::isspace(static_cast<unsigned char>(c));
    });
}

}  // namespace

TokenBag::TokenBag(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    std::erase(tokens_, std::string{});
    for (auto& t : tokens_) t = lowercase(t);
    std::sort(tokens_.begin(), tokens_.end());
    tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
}

bool TokenBag::contains(std::string_view token) const {
    return std::binary_search(tokens_.begin(), tokens_.end(), token);
}

std::vector<SubToken> subtoken_sequence(std::string_view code) {
    std::vector<SubToken> out;
    std::size_t pos = 0;
    while (pos < code.size()) {
        char c = code[pos];
        if (c == '"' || c == '\'') {
            pos = skip_literal(code, pos);
            continue;
        }
        if (!is_word_char(c)) {
            ++pos;
            continue;
        }
        std::size_t end = pos;
        while (end < code.size() && is_word_char(code[end])) ++end;
        std::size_t part = pos;
        for (std::size_t i = pos; i <= end; ++i) {
            if (i == end || code[i] == '_' || code[i] == '$') {
                if (i > part) split_humps(code.substr(part, i - part), part, out);
                part = i + 1;
            }
        }
        pos = end;
    }
    return out;
}

TokenBag subtokenize(std::string_view code) {
    std::vector<std::string> words;
    for (auto& token : subtoken_sequence(code)) words.push_back(std::move(token.text));
    return TokenBag(std::move(words));
}

StatementList segment_statements(std::string_view code) {
    const auto tokens = subtoken_sequence(code);
    StatementList list;
    std::size_t next_token = 0;
    std::size_t line_begin = 0;
    while (line_begin <= code.size()) {
        std::size_t line_end = code.find('\n', line_begin);
        if (line_end == std::string_view::npos) line_end = code.size();
        std::string_view line = code.substr(line_begin, line_end - line_begin);

        std::size_t lo = 0;
        std::size_t hi = line.size();
        while (lo < hi && std::isspace(static_cast<unsigned char>(line[lo]))) ++lo;
        while (hi > lo && std::isspace(static_cast<unsigned char>(line[hi - 1]))) --hi;

        if (hi > lo && !brace_only(line)) {
            Statement stmt;
            stmt.index = list.statements.size();
            stmt.text = std::string(line.substr(lo, hi - lo));
            stmt.begin = line_begin + lo;
            stmt.end = line_begin + hi;
            while (next_token < tokens.size() && tokens[next_token].offset < line_end) {
                if (tokens[next_token].offset >= line_begin) stmt.token_spans.push_back(next_token);
                ++next_token;
            }
            list.statements.push_back(std::move(stmt));
        } else {
            while (next_token < tokens.size() && tokens[next_token].offset < line_end) ++next_token;
        }
        if (line_end == code.size()) break;
        line_begin = line_end + 1;
    }
    return list;
}

}  // namespace ic
