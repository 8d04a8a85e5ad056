#include "ic/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "ic/error.hpp"
#include "ic/gateway.hpp"
#include "ic/hashing.hpp"
#include "ic/knowledge.hpp"
#include "ic/promptgen.hpp"
#include "ic/selection.hpp"

namespace ic {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys{
        "retrieval_corpus", "test_corpus",      "intent",          "strategy",
        "k",                "f",                "p",               "q_policy",
        "embed_model",      "quality_model",    "attention_model", "completion_model",
        "sbert_model",      "temperature",      "max_tokens",      "repetitions",
        "output_dir",       "sample_limit",     "seed",            "workers",
        "cache_dir"};
    return keys;
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    std::ostringstream suffix;
    suffix << ".tmp." << std::this_thread::get_id();
    const fs::path tmp = path.string() + suffix.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
        if (!out) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::optional<std::string> read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

ordered_json scores_to_json(const metrics::SampleScores& s) {
    ordered_json j;
    j["bleu4"] = s.bleu4;
    j["meteor"] = s.meteor;
    j["rouge_l"] = s.rouge_l;
    j["sbert"] = s.sbert ? json(*s.sbert) : json(nullptr);
    return j;
}

metrics::SampleScores scores_from_json(const json& j) {
    metrics::SampleScores s;
    s.bleu4 = j.at("bleu4").get<double>();
    s.meteor = j.at("meteor").get<double>();
    s.rouge_l = j.at("rouge_l").get<double>();
    if (j.contains("sbert") && !j.at("sbert").is_null()) s.sbert = j.at("sbert").get<double>();
    return s;
}

ordered_json means_to_json(const metrics::MetricMeans& m) {
    ordered_json j;
    const bool empty = m.n == 0;
    j["n"] = m.n;
    j["bleu4"] = empty ? json(nullptr) : json(m.bleu4);
    j["meteor"] = empty ? json(nullptr) : json(m.meteor);
    j["rouge_l"] = empty ? json(nullptr) : json(m.rouge_l);
    j["sbert"] = m.sbert ? json(*m.sbert) : json(nullptr);
    return j;
}

Corpus select_split(const Corpus& source, Split split) {
    Corpus out{source.name, source.role, {}};
    for (const auto& pair : source.pairs) {
        if (pair.split == split) out.pairs.push_back(pair);
    }
    return out;
}

struct TaskInput {
    std::size_t index = 0;  // position in the prepared test corpus
    const CodeCommentPair* pair = nullptr;
};

class TaskRunner {
public:
    TaskRunner(const RunConfig& config, const Services& services, const RetrievalIndex& index,
               QualityCache& quality, BundleCache& bundles)
        : config_(config),
          services_(services),
          index_(index),
          quality_(quality),
          bundles_(bundles),
          policy_(ExtractionPolicy::parse(config.q_policy)),
          fingerprint_(config.fingerprint()) {}

    RunRecord execute(const TaskInput& task) {
        const CodeCommentPair& target = *task.pair;
        RunRecord record;
        record.task_id = task_id(task.index, target.id);
        record.pair_id = target.id;
        record.intent = target.intent;
        record.reference = target.comment;
        record.config_fingerprint = fingerprint_;
        try {
            fill(record, target);
        } catch (const ServiceUnavailable&) {
            throw;
        } catch (const Error& e) {
            record.status = TaskStatus::Error;
            record.failures.push_back(e.what());
        }
        return record;
    }

private:
    std::vector<Demonstration> demonstrations(RunRecord& record, const CodeCommentPair& target) {
        std::vector<Demonstration> demos;
        if (config_.f == 0) return demos;

        RetrievalRequest request;
        request.code = target.code;
        request.intent = target.intent;
        request.strategy = config_.strategy;
        request.k = config_.k;
        request.embed_model = config_.embed_model;
        auto candidates = retrieve_top_k(request, index_, services_.embedder);

        for (auto& c : candidates) {
            if (auto cached = quality_.get(config_.quality_model, c.pair.id)) {
                c.quality_score = *cached;
            } else {
                c.quality_score =
                    assess_quality(c.pair, *services_.embedder, config_.quality_model).quality_score;
                quality_.put(config_.quality_model, c.pair.id, c.quality_score);
            }
        }

        SelectionConfig selection{config_.k, config_.f, config_.p};
        auto selected = fuse_and_select(std::move(candidates), selection);
        record.shortfall = selected.shortfall;
        if (selected.shortfall) {
            record.failures.push_back("shortfall: " + std::to_string(selected.selected.size()) +
                                      " of " + std::to_string(config_.f) + " demonstrations");
        }

        for (const auto& example : selected.selected) {
            Demonstration demo;
            demo.pair = example.pair;
            demo.statements = segment_statements(example.pair.code);
            demo.example_score = example.example_score;
            auto bundle = bundles_.get(config_.attention_model, example.pair.id, example.pair.intent);
            if (!bundle) {
                bundle = services_.attention->fetch_attention(example.pair.comment, example.pair.intent,
                                                              example.pair.code, demo.statements,
                                                              config_.attention_model);
                bundles_.put(config_.attention_model, example.pair.id, example.pair.intent, *bundle);
            }
            demo.important = extract_important(*bundle, demo.statements, policy_);

            DemonstrationRecord dr;
            dr.pair_id = example.pair.id;
            dr.sim_score = example.sim_score;
            dr.sim_rank = example.sim_rank;
            dr.quality_score = example.quality_score;
            dr.quality_rank = example.quality_rank;
            dr.example_score = example.example_score;
            for (const auto& s : demo.important) dr.important.push_back(s.statement);
            record.demonstrations.push_back(std::move(dr));
            demos.push_back(std::move(demo));
        }
        return demos;
    }

    void fill(RunRecord& record, const CodeCommentPair& target) {
        const auto demos = demonstrations(record, target);
        const auto prompt = build_prompt(target.code, target.intent, demos, demos.size());
        record.prompt_hash = sha256_hex(prompt.rendered);
        write_text_atomic(config_.output_dir / "prompts" / (record.task_id + ".txt"), prompt.rendered);

        CompletionRequest request;
        request.prompt = prompt.rendered;
        request.temperature = config_.temperature;
        request.max_tokens = config_.max_tokens;
        request.model = config_.completion_model;
        request.seed_hint = static_cast<long long>(config_.seed);
        const auto result = run_repeated(*services_.completion, request, config_.repetitions);

        std::vector<metrics::SampleScores> successes;
        for (const auto& attempt : result.attempts) {
            RepetitionRecord rep;
            rep.index = attempt.index;
            rep.failure = attempt.failure;
            if (attempt.response) {
                rep.raw = attempt.response->raw;
                rep.comment = attempt.response->comment;
                auto scores = metrics::score_text(*rep.comment, target.comment);
                if (!config_.sbert_model.empty()) {
                    scores.sbert = metrics::sbert_similarity(*rep.comment, target.comment,
                                                             *services_.embedder, config_.sbert_model);
                }
                rep.scores = scores;
                successes.push_back(scores);
            } else {
                record.failures.push_back("repetition " + std::to_string(attempt.index) + ": " +
                                          attempt.failure);
            }
            record.repetitions.push_back(std::move(rep));
        }
        if (!successes.empty()) record.scores = metrics::average(successes);
        record.status = TaskStatus::Completed;
    }

    const RunConfig& config_;
    const Services& services_;
    const RetrievalIndex& index_;
    QualityCache& quality_;
    BundleCache& bundles_;
    ExtractionPolicy policy_;
    std::string fingerprint_;
};

std::string log_line(const RunRecord& r, bool resumed) {
    std::size_t ok = 0;
    for (const auto& rep : r.repetitions) ok += rep.comment.has_value() ? 1 : 0;
    std::ostringstream line;
    line << r.task_id << ' ' << (r.status == TaskStatus::Completed ? "completed" : "error") << ' '
         << ok << '/' << r.repetitions.size() << ' ' << (r.prompt_hash.empty() ? "-" : r.prompt_hash)
         << (resumed ? " resumed" : "");
    return line.str();
}

}  // namespace

void RunConfig::validate() const {
    if (retrieval_corpus.empty()) throw ConfigError("retrieval_corpus is required");
    if (test_corpus.empty()) throw ConfigError("test_corpus is required");
    if (intent && *intent == IntentCategory::Others) throw ConfigError("intent 'others' cannot be run");
    SelectionConfig{k, f, p}.validate();
    try {
        (void)ExtractionPolicy::parse(q_policy);
    } catch (const Error& e) {
        throw ConfigError(std::string("q_policy: ") + e.what());
    }
    if (!std::isfinite(temperature) || temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (max_tokens < 1) throw ConfigError("max_tokens must be positive");
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (output_dir.empty()) throw ConfigError("output_dir is required");
    if (completion_model.empty()) throw ConfigError("completion_model is required");
    if (f > 0 && (quality_model.empty() || attention_model.empty())) {
        throw ConfigError("quality_model and attention_model are required when f > 0");
    }
    if (strategy == RetrievalStrategy::SemanticBased && embed_model.empty()) {
        throw ConfigError("embed_model is required for semantic retrieval");
    }
}

fs::path RunConfig::effective_cache_dir() const {
    return cache_dir.empty() ? output_dir / "cache" : cache_dir;
}

std::string RunConfig::fingerprint() const {
    ordered_json j;
    j["retrieval_corpus"] = retrieval_corpus.string();
    j["test_corpus"] = test_corpus.string();
    j["strategy"] = strategy_name(strategy);
    j["k"] = k;
    j["f"] = f;
    j["p"] = p;
    j["q_policy"] = q_policy;
    j["embed_model"] = embed_model;
    j["quality_model"] = quality_model;
    j["attention_model"] = attention_model;
    j["completion_model"] = completion_model;
    j["sbert_model"] = sbert_model;
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens;
    j["repetitions"] = repetitions;
    j["seed"] = seed;
    return sha256_hex(j.dump()).substr(0, 16);
}

ordered_json config_to_json(const RunConfig& c) {
    ordered_json j;
    j["retrieval_corpus"] = c.retrieval_corpus.string();
    j["test_corpus"] = c.test_corpus.string();
    j["intent"] = c.intent ? std::string(intent_name(*c.intent)) : std::string("all");
    j["strategy"] = strategy_name(c.strategy);
    j["k"] = c.k;
    j["f"] = c.f;
    j["p"] = c.p;
    j["q_policy"] = c.q_policy;
    j["embed_model"] = c.embed_model;
    j["quality_model"] = c.quality_model;
    j["attention_model"] = c.attention_model;
    j["completion_model"] = c.completion_model;
    j["sbert_model"] = c.sbert_model;
    j["temperature"] = c.temperature;
    j["max_tokens"] = c.max_tokens;
    j["repetitions"] = c.repetitions;
    j["output_dir"] = c.output_dir.string();
    j["sample_limit"] = c.sample_limit;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["cache_dir"] = c.cache_dir.string();
    return j;
}

RunConfig config_from_json(const json& j, RunConfig c) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known_config_keys().contains(key)) throw ConfigError("unknown config field '" + key + "'");
    }
    std::string text;
    if (j.contains("retrieval_corpus")) {
        read_field(j, "retrieval_corpus", text);
        c.retrieval_corpus = text;
    }
    if (j.contains("test_corpus")) {
        read_field(j, "test_corpus", text);
        c.test_corpus = text;
    }
    if (j.contains("intent")) {
        read_field(j, "intent", text);
        try {
            c.intent = text == "all" ? std::nullopt : std::optional(parse_intent(text));
        } catch (const Error& e) {
            throw ConfigError(std::string("intent: ") + e.what());
        }
    }
    if (j.contains("strategy")) {
        read_field(j, "strategy", text);
        try {
            c.strategy = parse_strategy(text);
        } catch (const Error& e) {
            throw ConfigError(std::string("strategy: ") + e.what());
        }
    }
    read_field(j, "k", c.k);
    read_field(j, "f", c.f);
    read_field(j, "p", c.p);
    read_field(j, "q_policy", c.q_policy);
    read_field(j, "embed_model", c.embed_model);
    read_field(j, "quality_model", c.quality_model);
    read_field(j, "attention_model", c.attention_model);
    read_field(j, "completion_model", c.completion_model);
    read_field(j, "sbert_model", c.sbert_model);
    read_field(j, "temperature", c.temperature);
    read_field(j, "max_tokens", c.max_tokens);
    read_field(j, "repetitions", c.repetitions);
    if (j.contains("output_dir")) {
        read_field(j, "output_dir", text);
        c.output_dir = text;
    }
    read_field(j, "sample_limit", c.sample_limit);
    read_field(j, "seed", c.seed);
    read_field(j, "workers", c.workers);
    if (j.contains("cache_dir")) {
        read_field(j, "cache_dir", text);
        c.cache_dir = text;
    }
    return c;
}

RunConfig load_config(const fs::path& path) {
    const auto text = read_text(path);
    if (!text) throw ConfigError("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(*text);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

ordered_json record_to_json(const RunRecord& r) {
    ordered_json j;
    j["task_id"] = r.task_id;
    j["pair_id"] = r.pair_id;
    j["intent"] = intent_name(r.intent);
    j["reference"] = r.reference;
    j["status"] = r.status == TaskStatus::Completed ? "completed" : "error";
    j["config_fingerprint"] = r.config_fingerprint;
    j["shortfall"] = r.shortfall;
    ordered_json demos = ordered_json::array();
    for (const auto& d : r.demonstrations) {
        ordered_json dj;
        dj["pair_id"] = d.pair_id;
        dj["sim_score"] = d.sim_score;
        dj["sim_rank"] = d.sim_rank;
        dj["quality_score"] = d.quality_score;
        dj["quality_rank"] = d.quality_rank;
        dj["example_score"] = d.example_score;
        dj["important"] = d.important;
        demos.push_back(std::move(dj));
    }
    j["demonstrations"] = std::move(demos);
    j["prompt_hash"] = r.prompt_hash;
    ordered_json reps = ordered_json::array();
    for (const auto& rep : r.repetitions) {
        ordered_json rj;
        rj["index"] = rep.index;
        rj["raw"] = rep.raw;
        rj["comment"] = rep.comment ? json(*rep.comment) : json(nullptr);
        rj["failure"] = rep.failure;
        rj["scores"] = rep.scores ? scores_to_json(*rep.scores) : ordered_json(nullptr);
        reps.push_back(std::move(rj));
    }
    j["repetitions"] = std::move(reps);
    j["scores"] = r.scores ? scores_to_json(*r.scores) : ordered_json(nullptr);
    j["failures"] = r.failures;
    return j;
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    try {
        r.task_id = j.at("task_id").get<std::string>();
        r.pair_id = j.at("pair_id").get<std::string>();
        r.intent = parse_intent(j.at("intent").get<std::string>());
        r.reference = j.at("reference").get<std::string>();
        const auto status = j.at("status").get<std::string>();
        if (status != "completed" && status != "error") throw Error("unknown status '" + status + "'");
        r.status = status == "completed" ? TaskStatus::Completed : TaskStatus::Error;
        r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        r.shortfall = j.at("shortfall").get<bool>();
        for (const auto& dj : j.at("demonstrations")) {
            DemonstrationRecord d;
            d.pair_id = dj.at("pair_id").get<std::string>();
            d.sim_score = dj.at("sim_score").get<double>();
            d.sim_rank = dj.at("sim_rank").get<std::size_t>();
            d.quality_score = dj.at("quality_score").get<double>();
            d.quality_rank = dj.at("quality_rank").get<std::size_t>();
            d.example_score = dj.at("example_score").get<double>();
            d.important = dj.at("important").get<std::vector<std::size_t>>();
            r.demonstrations.push_back(std::move(d));
        }
        r.prompt_hash = j.at("prompt_hash").get<std::string>();
        for (const auto& rj : j.at("repetitions")) {
            RepetitionRecord rep;
            rep.index = rj.at("index").get<int>();
            rep.raw = rj.at("raw").get<std::string>();
            if (!rj.at("comment").is_null()) rep.comment = rj.at("comment").get<std::string>();
            rep.failure = rj.at("failure").get<std::string>();
            if (!rj.at("scores").is_null()) rep.scores = scores_from_json(rj.at("scores"));
            r.repetitions.push_back(std::move(rep));
        }
        if (!j.at("scores").is_null()) r.scores = scores_from_json(j.at("scores"));
        r.failures = j.at("failures").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw Error(std::string("malformed run record: ") + e.what());
    }
    return r;
}

std::string task_id(std::size_t index, std::string_view pair_id) {
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "t%05zu-", index);
    std::string id = prefix;
    for (char c : pair_id.substr(0, 64)) {
        const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        id.push_back(safe ? c : '_');
    }
    return id;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t limit, std::uint64_t seed) {
    std::vector<std::size_t> indices(n);
    for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    if (limit == 0 || limit >= n) return indices;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(indices[i], indices[j]);
    }
    indices.resize(limit);
    std::sort(indices.begin(), indices.end());
    return indices;
}

PreparedCorpora prepare_corpora(const Corpus& retrieval_source, const Corpus& test_source) {
    PreparedCorpora prepared;
    prepared.retrieval = select_split(retrieval_source, Split::Train);
    prepared.retrieval.role = CorpusRole::Retrieval;
    auto test = select_split(test_source, Split::Test);
    test.role = CorpusRole::Test;
    auto dedup = dedup_against(test, prepared.retrieval);
    prepared.test = std::move(dedup.corpus);
    prepared.duplicates_removed = dedup.removed;
    prepared.near_duplicates = dedup.near_duplicates;
    return prepared;
}

RunSummary run(const RunConfig& config, const Services& services) {
    config.validate();
    if (!services.completion) throw ConfigError("no completion service configured");
    if (config.f > 0 && (!services.embedder || !services.attention)) {
        throw ConfigError("few-shot runs need embedding and attention services");
    }
    if (config.strategy == RetrievalStrategy::SemanticBased && !services.embedder) {
        throw ConfigError("semantic retrieval needs an embedding service");
    }
    if (!config.sbert_model.empty() && !services.embedder) {
        throw ConfigError("the SBERT metric needs an embedding service");
    }

    auto retrieval_load = load_corpus(config.retrieval_corpus, CorpusRole::Retrieval);
    auto test_load = load_corpus(config.test_corpus, CorpusRole::Test);

    RunSummary summary;
    summary.corpora = prepare_corpora(retrieval_load.corpus, test_load.corpus);
    summary.corpora.dropped_others = retrieval_load.dropped_others + test_load.dropped_others;
    const Corpus& retrieval = summary.corpora.retrieval;
    const Corpus& test = summary.corpora.test;

    std::vector<TaskInput> tasks;
    {
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < test.size(); ++i) {
            if (!config.intent || test.pairs[i].intent == *config.intent) eligible.push_back(i);
        }
        for (auto pick : sample_indices(eligible.size(), config.sample_limit, config.seed)) {
            tasks.push_back({eligible[pick], &test.pairs[eligible[pick]]});
        }
    }

    fs::create_directories(config.output_dir / "records");
    fs::create_directories(config.output_dir / "prompts");
    const fs::path cache_dir = config.effective_cache_dir();
    fs::create_directories(cache_dir);
    write_text_atomic(config.output_dir / "config.json", config_to_json(config).dump(2) + "\n");

    spdlog::info("{} retrieval pairs, {} test pairs ({} duplicates removed, {} near duplicates), {} tasks",
                 retrieval.size(), test.size(), summary.corpora.duplicates_removed,
                 summary.corpora.near_duplicates, tasks.size());

    RetrievalIndex index(retrieval);
    QualityCache quality(cache_dir / "quality.jsonl");
    BundleCache bundles(cache_dir / "attention");
    TaskRunner runner(config, services, index, quality, bundles);
    const std::string fingerprint = config.fingerprint();

    std::vector<std::optional<RunRecord>> results(tasks.size());
    std::vector<bool> resumed(tasks.size(), false);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr failure;
    std::mutex mutex;
    std::ofstream log(config.output_dir / "run.log", std::ios::app);

    auto worker = [&] {
        while (!abort.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const auto id = task_id(tasks[i].index, tasks[i].pair->id);
            const fs::path record_path = config.output_dir / "records" / (id + ".json");
            try {
                if (auto text = read_text(record_path)) {
                    try {
                        auto existing = record_from_json(json::parse(*text));
                        if (existing.status == TaskStatus::Completed &&
                            existing.config_fingerprint == fingerprint) {
                            results[i] = std::move(existing);
                            resumed[i] = true;
                        }
                    } catch (const std::exception& e) {
                        spdlog::warn("ignoring unreadable record {}: {}", record_path.string(), e.what());
                    }
                }
                if (!results[i]) {
                    auto record = runner.execute(tasks[i]);
                    write_text_atomic(record_path, record_to_json(record).dump(2) + "\n");
                    results[i] = std::move(record);
                }
                std::lock_guard lock(mutex);
                log << log_line(*results[i], resumed[i]) << '\n';
                log.flush();
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!failure) failure = std::current_exception();
                abort.store(true);
            }
        }
    };

    const int thread_count = std::max(1, std::min<int>(config.workers, static_cast<int>(tasks.size())));
    std::vector<std::thread> threads;
    for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    if (failure) {
        try {
            std::rethrow_exception(failure);
        } catch (const ServiceUnavailable& e) {
            spdlog::error("run aborted: {}", e.what());
            log << "aborted " << e.what() << '\n';
            throw;
        }
    }

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        summary.resumed += resumed[i] ? 1 : 0;
        summary.records.push_back(std::move(*results[i]));
    }
    return summary;
}

RunReport build_report(std::span<const RunRecord> records) {
    RunReport report;
    std::vector<metrics::SampleScores> samples;
    std::vector<IntentCategory> intents;
    std::vector<metrics::Tokens> candidates;
    std::vector<metrics::Tokens> references;
    for (const auto& r : records) {
        if (r.scored()) {
            samples.push_back(*r.scores);
            intents.push_back(r.intent);
            const auto reference = metrics::tokenize(r.reference);
            for (const auto& rep : r.repetitions) {
                if (!rep.comment || reference.empty()) continue;
                candidates.push_back(metrics::tokenize(*rep.comment));
                references.push_back(reference);
            }
            continue;
        }
        ordered_json f;
        f["task_id"] = r.task_id;
        f["pair_id"] = r.pair_id;
        f["intent"] = intent_name(r.intent);
        f["status"] = r.status == TaskStatus::Completed ? "all repetitions failed" : "error";
        f["reasons"] = r.failures;
        report.failures.push_back(std::move(f));
    }
    if (!samples.empty()) report.metrics = metrics::aggregate(samples, intents);
    if (!candidates.empty()) report.corpus_bleu4 = metrics::corpus_bleu4(candidates, references);
    return report;
}

ordered_json report_to_json(const RunReport& report) {
    ordered_json j;
    j["n"] = report.metrics.n();
    j["smoothing"] = report.metrics.smoothing;
    j["meteor_config"] = report.metrics.meteor_config;
    j["overall"] = means_to_json(report.metrics.overall);
    ordered_json per_intent = ordered_json::object();
    for (const auto& [intent, means] : report.metrics.per_intent) {
        per_intent[std::string(intent_name(intent))] = means_to_json(means);
    }
    j["per_intent"] = std::move(per_intent);
    j["corpus_bleu4"] = report.corpus_bleu4 ? json(*report.corpus_bleu4) : json(nullptr);
    j["failed_tasks"] = report.failures.size();
    return j;
}

std::string report_table(const RunReport& report) {
    std::ostringstream out;
    auto cell = [&](std::optional<double> v) {
        std::ostringstream c;
        if (v) {
            c << std::fixed << std::setprecision(2) << *v * 100.0;
        } else {
            c << '-';
        }
        out << std::setw(9) << c.str();
    };
    auto row = [&](const std::string& label, const metrics::MetricMeans& m) {
        out << std::left << std::setw(16) << label << std::right << std::setw(6) << m.n;
        const bool empty = m.n == 0;
        cell(empty ? std::nullopt : std::optional(m.bleu4));
        cell(empty ? std::nullopt : std::optional(m.meteor));
        cell(empty ? std::nullopt : std::optional(m.rouge_l));
        cell(m.sbert);
        out << '\n';
    };
    out << std::left << std::setw(16) << "intent" << std::right << std::setw(6) << "n" << std::setw(9)
        << "BLEU-4" << std::setw(9) << "METEOR" << std::setw(9) << "ROUGE-L" << std::setw(9) << "SBERT"
        << '\n';
    for (const auto& [intent, means] : report.metrics.per_intent) row(std::string(intent_name(intent)), means);
    row("overall", report.metrics.overall);
    out << "failed tasks: " << report.failures.size() << '\n';
    out << "smoothing: " << report.metrics.smoothing << ", " << report.metrics.meteor_config << '\n';
    return out.str();
}

void write_report(const RunReport& report, const fs::path& directory) {
    fs::create_directories(directory);
    write_text_atomic(directory / "metrics.json", report_to_json(report).dump(2) + "\n");
    write_text_atomic(directory / "metrics.txt", report_table(report));
    ordered_json failures = ordered_json::array();
    for (const auto& f : report.failures) failures.push_back(f);
    write_text_atomic(directory / "failures.json", failures.dump(2) + "\n");
}

std::vector<RunRecord> load_records(const fs::path& output_dir) {
    const fs::path dir = output_dir / "records";
    if (!fs::is_directory(dir)) throw LoadError("no records directory under " + output_dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RunRecord> records;
    for (const auto& path : files) {
        const auto text = read_text(path);
        if (!text) throw LoadError("cannot read " + path.string());
        try {
            records.push_back(record_from_json(json::parse(*text)));
        } catch (const json::exception& e) {
            throw LoadError(path.string() + ": " + e.what());
        } catch (const Error& e) {
            throw LoadError(path.string() + ": " + e.what());
        }
    }
    return records;
}

}  // namespace ic
