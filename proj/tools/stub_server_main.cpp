#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "ic/corpus.hpp"
#include "stub_server.hpp"

namespace {
volatile std::sig_atomic_t stop_requested = 0;
void on_signal(int) { stop_requested = 1; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic stub of the model-server and completion endpoints"};
    std::string corpus;
    std::string mode = "echo";
    std::string fixed;
    std::size_t dim = 64;
    app.add_option("--corpus", corpus, "JSONL corpus whose comments the echo mode returns");
    app.add_option("--mode", mode, "echo|fixed|garbage");
    app.add_option("--fixed-text", fixed);
    app.add_option("--dim", dim, "embedding dimension");
    CLI11_PARSE(app, argc, argv);

    ic::testing::StubOptions options;
    options.embed_dim = dim;
    options.fixed_completion = fixed;
    if (mode == "fixed") {
        options.completion = ic::testing::CompletionMode::Fixed;
    } else if (mode == "garbage") {
        options.completion = ic::testing::CompletionMode::Garbage;
    } else if (mode != "echo") {
        std::cerr << "unknown mode " << mode << '\n';
        return 2;
    }
    if (!corpus.empty()) options.known_pairs = ic::load_corpus(corpus, ic::CorpusRole::Test).corpus.pairs;

    ic::testing::StubServer server(options);
    std::cout << server.base_url() << std::endl;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    return 0;
}
