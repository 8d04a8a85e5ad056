#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ic/error.hpp"
#include "ic/gateway.hpp"
#include "ic/metrics.hpp"
#include "ic/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct RunFlags {
    std::string config;
    std::optional<std::string> retrieval_corpus, test_corpus, intent, strategy, q_policy;
    std::optional<std::string> embed_model, quality_model, attention_model, completion_model, sbert_model;
    std::optional<std::string> output_dir, cache_dir;
    std::optional<std::size_t> k, f, sample_limit;
    std::optional<double> p, temperature;
    std::optional<int> max_tokens, repetitions, workers;
    std::optional<std::uint64_t> seed;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--config", flags.config, "JSON run configuration");
    cmd->add_option("--retrieval-corpus", flags.retrieval_corpus);
    cmd->add_option("--test-corpus", flags.test_corpus);
    cmd->add_option("--intent", flags.intent, "what|why|how-to-use|how-it-is-done|property|all");
    cmd->add_option("--strategy", flags.strategy, "token|semantic");
    cmd->add_option("-k", flags.k, "candidate pool size");
    cmd->add_option("-f", flags.f, "number of shots");
    cmd->add_option("-p", flags.p, "weight of the similarity rank");
    cmd->add_option("--q-policy", flags.q_policy, "fraction:0.3 | fixed:N, optional ,mean");
    cmd->add_option("--embed-model", flags.embed_model);
    cmd->add_option("--quality-model", flags.quality_model);
    cmd->add_option("--attention-model", flags.attention_model);
    cmd->add_option("--completion-model", flags.completion_model);
    cmd->add_option("--sbert-model", flags.sbert_model);
    cmd->add_option("--temperature", flags.temperature);
    cmd->add_option("--max-tokens", flags.max_tokens);
    cmd->add_option("--repetitions", flags.repetitions);
    cmd->add_option("--output", flags.output_dir);
    cmd->add_option("--cache-dir", flags.cache_dir);
    cmd->add_option("--sample-limit", flags.sample_limit);
    cmd->add_option("--seed", flags.seed);
    cmd->add_option("--workers", flags.workers);
}

ic::RunConfig resolve_config(const RunFlags& flags) {
    ic::RunConfig base = flags.config.empty() ? ic::RunConfig{} : ic::load_config(flags.config);
    nlohmann::json overrides = nlohmann::json::object();
    auto set = [&](const char* key, const auto& value) {
        if (value) overrides[key] = *value;
    };
    set("retrieval_corpus", flags.retrieval_corpus);
    set("test_corpus", flags.test_corpus);
    set("intent", flags.intent);
    set("strategy", flags.strategy);
    set("q_policy", flags.q_policy);
    set("embed_model", flags.embed_model);
    set("quality_model", flags.quality_model);
    set("attention_model", flags.attention_model);
    set("completion_model", flags.completion_model);
    set("sbert_model", flags.sbert_model);
    set("output_dir", flags.output_dir);
    set("cache_dir", flags.cache_dir);
    set("k", flags.k);
    set("f", flags.f);
    set("sample_limit", flags.sample_limit);
    set("p", flags.p);
    set("temperature", flags.temperature);
    set("max_tokens", flags.max_tokens);
    set("repetitions", flags.repetitions);
    set("workers", flags.workers);
    set("seed", flags.seed);
    auto config = ic::config_from_json(overrides, base);
    config.validate();
    return config;
}

int cmd_ingest(const std::string& input, const fs::path& out_dir) {
    auto loaded = ic::load_corpus(input, ic::CorpusRole::Retrieval);
    const auto prepared = ic::prepare_corpora(loaded.corpus, loaded.corpus);
    ic::Corpus validation{loaded.corpus.name, ic::CorpusRole::Retrieval, {}};
    for (const auto& pair : loaded.corpus.pairs) {
        if (pair.split == ic::Split::Validation) validation.pairs.push_back(pair);
    }
    fs::create_directories(out_dir);
    ic::write_corpus(prepared.retrieval, out_dir / "train.jsonl");
    ic::write_corpus(validation, out_dir / "validation.jsonl");
    ic::write_corpus(prepared.test, out_dir / "test.jsonl");
    std::cout << "train " << prepared.retrieval.size() << "\nvalidation " << validation.size() << "\ntest "
              << prepared.test.size() << "\ndropped others " << loaded.dropped_others
              << "\nduplicates removed " << prepared.duplicates_removed << "\nnear duplicates kept "
              << prepared.near_duplicates << '\n';
    return 0;
}

int cmd_run(const RunFlags& flags) {
    const auto config = resolve_config(flags);
    const fs::path cache = config.effective_cache_dir();
    auto embeddings = std::make_shared<ic::EmbeddingCache>(cache / "embeddings");
    ic::ModelServerClient model_server(ic::model_server_endpoint_from_env(), embeddings);
    ic::CompletionClient llm(ic::llm_endpoint_from_env());
    ic::Services services{&model_server, &model_server, &llm};

    const auto summary = ic::run(config, services);
    const auto report = ic::build_report(summary.records);
    ic::write_report(report, config.output_dir);
    spdlog::info("{} tasks, {} resumed, {} failed", summary.records.size(), summary.resumed,
                 report.failures.size());
    std::cout << ic::report_table(report);
    return 0;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ic::LoadError("cannot read " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

int cmd_score(const fs::path& candidates_path, const fs::path& references_path) {
    const auto candidates = read_lines(candidates_path);
    const auto references = read_lines(references_path);
    if (candidates.size() != references.size()) {
        throw ic::LoadError("candidate and reference files differ in line count");
    }
    std::vector<ic::metrics::TextPair> pairs;
    for (std::size_t i = 0; i < candidates.size(); ++i) pairs.push_back({candidates[i], references[i]});
    const auto scores = ic::metrics::score_batch(pairs);
    nlohmann::ordered_json out;
    out["n"] = scores.size();
    out["smoothing"] = ic::metrics::smoothing_id(ic::metrics::Smoothing::AddOne);
    out["meteor_config"] = ic::metrics::kMeteorConfig;
    if (!scores.empty()) {
        const auto mean = ic::metrics::average(scores);
        out["bleu4"] = mean.bleu4;
        out["meteor"] = mean.meteor;
        out["rouge_l"] = mean.rouge_l;
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_report(const fs::path& run_dir) {
    const auto records = ic::load_records(run_dir);
    const auto report = ic::build_report(records);
    ic::write_report(report, run_dir);
    std::cout << ic::report_table(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intent-aware code comment generation with retrieved, knowledge-augmented examples"};
    app.require_subcommand(1);

    std::string ingest_input;
    fs::path ingest_out = "data";
    auto* ingest = app.add_subcommand("ingest", "split, dedup and write a JSONL corpus");
    ingest->add_option("--input", ingest_input, "JSONL corpus")->required();
    ingest->add_option("--out", ingest_out, "output directory");

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "run the pipeline and write its report");
    add_run_flags(run, run_flags);

    fs::path candidates, references;
    auto* score = app.add_subcommand("score", "score candidate lines against reference lines");
    score->add_option("--candidates", candidates)->required();
    score->add_option("--references", references)->required();

    fs::path run_dir;
    auto* report = app.add_subcommand("report", "rebuild the report of a run directory");
    report->add_option("--run-dir", run_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_input, ingest_out);
        if (*run) return cmd_run(run_flags);
        if (*score) return cmd_score(candidates, references);
        if (*report) return cmd_report(run_dir);
    } catch (const ic::ConfigError& e) {
        spdlog::error("config: {}", e.what());
        return 2;
    } catch (const ic::LoadError& e) {
        spdlog::error("load: {}", e.what());
        return 2;
    } catch (const ic::ServiceUnavailable& e) {
        spdlog::error("service unavailable: {}", e.what());
        return 3;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 1;
}
