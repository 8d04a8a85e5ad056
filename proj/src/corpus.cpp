#include "ic/corpus.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ic/error.hpp"

namespace ic {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string fold(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : trim(text)) {
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string required_string(const nlohmann::json& record, const char* field, std::size_t index) {
    auto it = record.find(field);
    if (it == record.end() || !it->is_string()) {
        throw LoadError("record " + std::to_string(index) + ": missing or non-string field '" +
                        field + "'");
    }
    return it->get<std::string>();
}

}  // namespace

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_space(text[begin])) ++begin;
    while (end > begin && is_space(text[end - 1])) --end;
    return std::string(text.substr(begin, end - begin));
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "validation") return Split::Validation;
    if (text == "test") return Split::Test;
    throw InvalidArgument("unknown split '" + std::string(text) + "'");
}

std::string_view split_name(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "train";
}

LoadResult parse_corpus(std::string_view jsonl, CorpusRole role, std::string name) {
    LoadResult result;
    result.corpus.name = std::move(name);
    result.corpus.role = role;

    std::unordered_set<std::string> ids;
    std::size_t index = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        std::size_t eol = jsonl.find('\n', pos);
        if (eol == std::string_view::npos) eol = jsonl.size();
        std::string_view line = jsonl.substr(pos, eol - pos);
        pos = eol + 1;
        if (trim(line).empty()) continue;

        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw LoadError("record " + std::to_string(index) + ": invalid JSON (" + e.what() + ")");
        }
        if (!record.is_object()) {
            throw LoadError("record " + std::to_string(index) + ": not a JSON object");
        }

        CodeCommentPair pair;
        pair.id = required_string(record, "id", index);
        pair.code = required_string(record, "code", index);
        pair.comment = required_string(record, "comment", index);
        try {
            pair.intent = parse_intent(required_string(record, "intent", index));
            pair.split = parse_split(required_string(record, "split", index));
        } catch (const InvalidArgument& e) {
            throw LoadError("record " + std::to_string(index) + ": " + e.what());
        }
        if (trim(pair.code).empty()) {
            throw LoadError("record " + std::to_string(index) + ": empty code");
        }
        if (trim(pair.comment).empty()) {
            throw LoadError("record " + std::to_string(index) + ": empty comment");
        }
        if (!ids.insert(pair.id).second) {
            throw LoadError("record " + std::to_string(index) + ": duplicate id '" + pair.id + "'");
        }
        ++index;

        if (pair.intent == IntentCategory::Others) {
            ++result.dropped_others;
            continue;
        }
        result.corpus.pairs.push_back(std::move(pair));
    }
    if (index == 0) {
        throw LoadError("corpus '" + result.corpus.name + "' is empty");
    }
    return result;
}

LoadResult load_corpus(const std::filesystem::path& path, CorpusRole role) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open corpus file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    auto result = parse_corpus(buffer.str(), role, path.stem().string());
    spdlog::info("loaded {} pairs from {} ({} others dropped)", result.corpus.size(),
                 path.string(), result.dropped_others);
    return result;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write corpus file " + path.string());
    for (const auto& pair : corpus.pairs) {
        nlohmann::ordered_json record;
        record["id"] = pair.id;
        record["code"] = pair.code;
        record["comment"] = pair.comment;
        record["intent"] = intent_name(pair.intent);
        record["split"] = split_name(pair.split);
        out << record.dump() << '\n';
    }
}

DedupResult dedup_against(const Corpus& test, const Corpus& retrieval) {
    std::unordered_set<std::string> exact;
    std::unordered_set<std::string> folded;
    for (const auto& pair : retrieval.pairs) {
        exact.insert(trim(pair.comment));
        folded.insert(fold(pair.comment));
    }

    DedupResult result;
    result.corpus.name = test.name;
    result.corpus.role = test.role;
    for (const auto& pair : test.pairs) {
        if (exact.contains(trim(pair.comment))) {
            ++result.removed;
            continue;
        }
        if (folded.contains(fold(pair.comment))) ++result.near_duplicates;
        result.corpus.pairs.push_back(pair);
    }
    if (result.near_duplicates > 0) {
        spdlog::info("dedup: {} near-duplicate comments kept in '{}'", result.near_duplicates,
                     test.name);
    }
    return result;
}

Corpus filter_by_intent(const Corpus& corpus, IntentCategory intent) {
    if (intent == IntentCategory::Others) {
        throw InvalidArgument("cannot filter a corpus on intent 'others'");
    }
    Corpus out{corpus.name, corpus.role, {}};
    for (const auto& pair : corpus.pairs) {
        if (pair.intent == intent) out.pairs.push_back(pair);
    }
    return out;
}

}  // namespace ic
