#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ic/intent.hpp"

namespace ic {

enum class Split { Train, Validation, Test };
enum class CorpusRole { Retrieval, Test };

Split parse_split(std::string_view text);
std::string_view split_name(Split split);

struct CodeCommentPair {
    std::string id;
    std::string code;
    std::string comment;
    IntentCategory intent = IntentCategory::What;
    Split split = Split::Train;

    bool operator==(const CodeCommentPair&) const = default;
};

// Immutable once loaded; pairs keep file order.
struct Corpus {
    std::string name;
    CorpusRole role = CorpusRole::Retrieval;
    std::vector<CodeCommentPair> pairs;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

struct LoadResult {
    Corpus corpus;
    std::size_t dropped_others = 0;
};

// Reads a JSONL file (one {id, code, comment, intent, split} object per line).
// Others-intent records are dropped and counted. Blank lines are skipped.
// Throws LoadError on a malformed record (message names the 0-based record
// index), a duplicate id, or a file with no records.
LoadResult load_corpus(const std::filesystem::path& path, CorpusRole role);

// Parses JSONL text directly; `name` labels the corpus.
LoadResult parse_corpus(std::string_view jsonl, CorpusRole role, std::string name);

void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct DedupResult {
    Corpus corpus;
    std::size_t removed = 0;
    // Test comments that match a retrieval comment only after case/whitespace
    // folding. Reported, not removed.
    std::size_t near_duplicates = 0;
};

// Drops every test pair whose trimmed comment equals (case-sensitively) a
// trimmed comment in `retrieval`.
DedupResult dedup_against(const Corpus& test, const Corpus& retrieval);

// Throws InvalidArgument for Others.
Corpus filter_by_intent(const Corpus& corpus, IntentCategory intent);

std::string trim(std::string_view text);

}  // namespace ic
