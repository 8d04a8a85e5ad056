#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ic/corpus.hpp"
#include "ic/metrics.hpp"
#include "ic/providers.hpp"
#include "ic/retrieval.hpp"

namespace ic {

struct RunConfig {
    std::filesystem::path retrieval_corpus;  // train-split pairs are used
    std::filesystem::path test_corpus;       // test-split pairs are used
    std::optional<IntentCategory> intent;    // empty = all five
    RetrievalStrategy strategy = RetrievalStrategy::TokenBased;
    std::size_t k = 10;
    std::size_t f = 3;
    double p = 0.8;
    std::string q_policy = "fraction:0.3";
    std::string embed_model = "codebert-base";
    std::string quality_model = "codebert-base";
    std::string attention_model = "codebert-search";
    std::string completion_model = "codellama-34b-instruct";
    std::string sbert_model;  // empty disables the SBERT metric
    double temperature = 0.5;
    int max_tokens = 256;
    int repetitions = 5;
    std::filesystem::path output_dir = "run";
    std::size_t sample_limit = 0;  // 0 = every test pair
    std::uint64_t seed = 0;
    int workers = 4;
    std::filesystem::path cache_dir;  // empty = <output_dir>/cache

    // Throws ConfigError naming the offending field.
    void validate() const;

    std::filesystem::path effective_cache_dir() const;

    // Hash over the fields that change what a task produces.
    std::string fingerprint() const;
};

nlohmann::ordered_json config_to_json(const RunConfig& config);
// Missing keys keep their defaults; unknown keys and bad values throw ConfigError.
RunConfig config_from_json(const nlohmann::json& json, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path);

struct Services {
    EmbeddingProvider* embedder = nullptr;    // semantic retrieval, quality, SBERT
    AttentionProvider* attention = nullptr;   // needed when f > 0
    CompletionProvider* completion = nullptr;
};

struct DemonstrationRecord {
    std::string pair_id;
    double sim_score = 0.0;
    std::size_t sim_rank = 0;
    double quality_score = 0.0;
    std::size_t quality_rank = 0;
    double example_score = 0.0;
    std::vector<std::size_t> important;  // statement indices, score descending
};

struct RepetitionRecord {
    int index = 0;
    std::string raw;
    std::optional<std::string> comment;
    std::string failure;
    std::optional<metrics::SampleScores> scores;
};

enum class TaskStatus { Completed, Error };

struct RunRecord {
    std::string task_id;
    std::string pair_id;
    IntentCategory intent = IntentCategory::What;
    std::string reference;
    TaskStatus status = TaskStatus::Completed;
    std::vector<DemonstrationRecord> demonstrations;
    bool shortfall = false;
    std::string prompt_hash;
    std::vector<RepetitionRecord> repetitions;
    std::optional<metrics::SampleScores> scores;  // mean over successful repetitions
    std::vector<std::string> failures;
    std::string config_fingerprint;

    // Counted in the metric means.
    bool scored() const { return status == TaskStatus::Completed && scores.has_value(); }
};

nlohmann::ordered_json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& json);

// "t00042-<id with unsafe characters replaced>".
std::string task_id(std::size_t index, std::string_view pair_id);

// `limit` distinct indices of [0, n) chosen by a seeded Fisher-Yates shuffle,
// returned ascending. limit 0 or >= n returns every index.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t limit, std::uint64_t seed);

// Train pairs of the retrieval file and test pairs of the test file, the test
// side deduplicated against the retrieval side.
struct PreparedCorpora {
    Corpus retrieval;
    Corpus test;
    std::size_t dropped_others = 0;
    std::size_t duplicates_removed = 0;
    std::size_t near_duplicates = 0;
};

PreparedCorpora prepare_corpora(const Corpus& retrieval_source, const Corpus& test_source);

struct RunSummary {
    std::vector<RunRecord> records;  // task order
    std::size_t resumed = 0;         // tasks taken from existing record files
    PreparedCorpora corpora;
};

// Executes every selected test task and persists config.json, prompts/,
// records/ and run.log under config.output_dir. Tasks with a matching record
// file are not re-run. ServiceUnavailable stops the run and propagates after
// in-flight tasks finish.
RunSummary run(const RunConfig& config, const Services& services);

// Per-task failures and the aggregated metrics of the scored tasks.
struct RunReport {
    metrics::MetricReport metrics;  // n = 0 when no task was scored
    std::optional<double> corpus_bleu4;
    std::vector<nlohmann::ordered_json> failures;
};

RunReport build_report(std::span<const RunRecord> records);
nlohmann::ordered_json report_to_json(const RunReport& report);
// Aligned table, metric values x100.
std::string report_table(const RunReport& report);

// Writes metrics.json, metrics.txt and failures.json into `directory`.
void write_report(const RunReport& report, const std::filesystem::path& directory);

// Every records/*.json under a run directory, ordered by task id.
std::vector<RunRecord> load_records(const std::filesystem::path& output_dir);

}  // namespace ic
