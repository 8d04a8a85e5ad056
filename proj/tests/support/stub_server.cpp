#include "stub_server.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ic/codetext.hpp"

namespace ic::testing {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 1469598103934665603ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string strip(std::string_view text) {
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    std::string token;
    while (in >> token) {
        for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(token);
    }
    return out;
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

std::vector<double> stub_embedding(const std::string& text, std::size_t dim) {
    std::vector<double> v(dim, 0.0);
    if (dim == 0) return v;
    v[0] = 1.0;
    for (const auto& token : subtoken_sequence(text)) {
        const auto h = fnv1a(token.text);
        const std::size_t slot = dim > 1 ? 1 + h % (dim - 1) : 0;
        v[slot] += (h >> 32) % 2 == 0 ? 1.0 : 0.5;
    }
    return v;
}

std::string echo_completion(const std::string& reference) {
    return "# Step 1 - Important statements:\n(none)\n# Step 2 - The comment:\n" + reference;
}

std::string extract_test_code(const std::string& prompt) {
    static const std::string kStart = "# For the test code:\n";
    static const std::string kEnd = "\n\n# Please imitate";
    const auto start = prompt.rfind(kStart);
    if (start == std::string::npos) return {};
    const auto from = start + kStart.size();
    const auto end = prompt.find(kEnd, from);
    return prompt.substr(from, end == std::string::npos ? std::string::npos : end - from);
}

struct StubServer::Impl {
    StubOptions options;
    httplib::Server server;
    std::map<std::string, std::string> comment_by_code;
};

StubServer::StubServer(StubOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->options = std::move(options);
    for (const auto& pair : impl_->options.known_pairs) {
        impl_->comment_by_code.emplace(strip(pair.code), pair.comment);
    }

    // Shared entry: counting, in-flight tracking, delay and injected failures.
    auto guarded = [this](const std::string& path, auto handler) {
        return [this, path, handler](const httplib::Request& req, httplib::Response& res) {
            std::size_t call_number;
            {
                std::lock_guard lock(mutex_);
                call_number = ++calls_[path];
            }
            const auto now = ++in_flight_;
            auto seen = max_in_flight_.load();
            while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {
            }
            if (impl_->options.delay.count() > 0) std::this_thread::sleep_for(impl_->options.delay);
            if (static_cast<int>(call_number) <= impl_->options.fail_first) {
                reply(res, impl_->options.fail_status, json{{"error", "injected failure"}});
            } else {
                try {
                    handler(json::parse(req.body), res);
                } catch (const std::exception& e) {
                    reply(res, 400, json{{"error", e.what()}});
                }
            }
            --in_flight_;
        };
    };

    impl_->server.Post("/v1/embed", guarded("/v1/embed", [this](const json& body, httplib::Response& res) {
        const auto dim = impl_->options.embed_dim;
        json vectors = json::array();
        for (const auto& text : body.at("texts")) vectors.push_back(stub_embedding(text.get<std::string>(), dim));
        reply(res, 200, json{{"dim", dim}, {"vectors", vectors}});
    }));

    impl_->server.Post("/v1/attention", guarded("/v1/attention", [this](const json& body, httplib::Response& res) {
        const auto comment = whitespace_tokens(body.at("comment").get<std::string>());
        const auto code = body.at("code").get<std::string>();
        const auto intent = body.at("intent").get<std::string>();
        const auto spans = body.at("statement_spans").get<std::vector<std::pair<std::size_t, std::size_t>>>();

        std::vector<std::string> columns(comment.begin(), comment.end());
        columns.push_back("<" + intent + ">");
        std::vector<std::size_t> token_statement;
        for (const auto& token : subtoken_sequence(code)) {
            std::size_t owner = spans.size();
            for (std::size_t s = 0; s < spans.size(); ++s) {
                if (token.offset >= spans[s].first && token.offset < spans[s].second) {
                    owner = s;
                    break;
                }
            }
            if (owner == spans.size()) {
                reply(res, 422, json{{"error", "code token '" + token.text + "' outside every statement span"}});
                return;
            }
            token_statement.push_back(owner);
            columns.push_back(token.text);
        }
        const std::size_t side = columns.size();
        json matrix = json::array();
        for (std::size_t r = 0; r < side; ++r) {
            std::vector<double> row(side);
            double total = 0.0;
            for (std::size_t c = 0; c < side; ++c) {
                const auto h = fnv1a(columns[r] + '\x1f' + columns[c], r * 131 + c);
                double w = 1.0 + static_cast<double>(h % 512) / 1024.0;
                if (columns[r] == columns[c]) w += 4.0;
                row[c] = w;
                total += w;
            }
            for (auto& w : row) w /= total;
            if (impl_->options.negative_attention && r == 0) row[side - 1] = -0.25;
            matrix.push_back(row);
        }
        reply(res, 200,
              json{{"K", comment.size()}, {"N", token_statement.size()}, {"matrix", matrix},
                   {"code_token_statement", token_statement}});
    }));

    impl_->server.Post("/v1/relevance", guarded("/v1/relevance", [](const json& body, httplib::Response& res) {
        const auto a = subtokenize(body.at("comment").get<std::string>());
        const auto b = subtokenize(body.at("code").get<std::string>());
        std::size_t shared = 0;
        for (const auto& t : a.tokens()) shared += b.contains(t) ? 1 : 0;
        const std::size_t all = a.count() + b.count() - shared;
        reply(res, 200, json{{"score", all == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(all)}});
    }));

    impl_->server.Post("/v1/complete", guarded("/v1/complete", [this](const json& body, httplib::Response& res) {
        const auto prompt = body.at("prompt").get<std::string>();
        std::string text;
        switch (impl_->options.completion) {
            case CompletionMode::Echo: {
                auto it = impl_->comment_by_code.find(strip(extract_test_code(prompt)));
                if (it == impl_->comment_by_code.end()) {
                    reply(res, 400, json{{"error", "unknown test code"}});
                    return;
                }
                text = echo_completion(it->second);
                break;
            }
            case CompletionMode::Fixed:
                text = impl_->options.fixed_completion;
                break;
            case CompletionMode::Garbage:
                text = "I cannot help with that.";
                break;
        }
        reply(res, 200, json{{"text", text}});
    }));

    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("stub server could not bind");
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

StubServer::~StubServer() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

std::string StubServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::size_t StubServer::calls(const std::string& path) const {
    std::lock_guard lock(mutex_);
    auto it = calls_.find(path);
    return it == calls_.end() ? 0 : it->second;
}

void StubServer::reset_counters() {
    std::lock_guard lock(mutex_);
    calls_.clear();
    max_in_flight_.store(0);
}

}  // namespace ic::testing
