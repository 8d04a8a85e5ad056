#include "ic/promptgen.hpp"

#include <regex>

#include "ic/error.hpp"

namespace ic {

namespace {

constexpr std::string_view kStep1Marker = "# Step 1 - Important statements:";
constexpr std::string_view kStep2Marker = "# Step 2 - The comment:";

// Drops leading blank lines and trailing whitespace; keeps indentation.
std::string block(std::string_view text) {
    std::size_t begin = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n') {
            begin = i + 1;
        } else if (!std::isspace(static_cast<unsigned char>(text[i]))) {
            break;
        }
    }
    std::size_t end = text.size();
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::string join(const std::vector<std::string>& parts, std::string_view separator) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += separator;
        out += parts[i];
    }
    return out;
}

std::string render_demo(const Demonstration& demo, std::size_t number) {
    std::string out = "# Example Code " + std::to_string(number) + ":\n";
    out += block(demo.pair.code);
    out += '\n';
    out += kStep1Marker;
    out += '\n';
    out += render_important_statements(demo);
    out += '\n';
    out += kStep2Marker;
    out += '\n';
    out += trim(demo.pair.comment);
    return out;
}

const std::regex& step1_pattern() {
    static const std::regex re(R"(#*[ \t]*step[ \t]*1[ \t]*-[ \t]*important[ \t]+statements[ \t]*:)",
                               std::regex::icase);
    return re;
}

const std::regex& step2_pattern() {
    static const std::regex re(R"(#*[ \t]*step[ \t]*2[ \t]*-[ \t]*the[ \t]+comment[ \t]*:)",
                               std::regex::icase);
    return re;
}

}  // namespace

std::string render_important_statements(const Demonstration& demo) {
    if (demo.important.empty()) {
        throw InvalidArgument("demonstration '" + demo.pair.id + "' has no important statements");
    }
    std::vector<std::size_t> indices;
    indices.reserve(demo.important.size());
    for (const auto& s : demo.important) {
        if (s.statement >= demo.statements.size()) {
            throw InvalidArgument("demonstration '" + demo.pair.id + "' references statement " +
                                  std::to_string(s.statement) + " of " +
                                  std::to_string(demo.statements.size()));
        }
        indices.push_back(s.statement);
    }
    std::sort(indices.begin(), indices.end());
    std::vector<std::string> lines;
    lines.reserve(indices.size());
    for (auto i : indices) lines.push_back(demo.statements[i].text);
    return join(lines, "\n");
}

PromptBundle build_prompt(const std::string& target_code, IntentCategory intent,
                          std::span<const Demonstration> demos, std::size_t shots) {
    if (demos.size() != shots) {
        throw InvalidArgument("prompt expects " + std::to_string(shots) + " demonstrations, got " +
                              std::to_string(demos.size()));
    }
    const std::string phrase(instruction_phrase(intent));

    PromptBundle prompt;
    prompt.role_designation =
        "# You are an expert Java programmer. Give you a code snippet, your task is to " + phrase +
        " the code.";
    prompt.chain_of_thought =
        "# Based on the task itself, some of the statements in the code are more important for "
        "you to get the answer, so let's solve the problem step by step:\n"
        "Step 1 - extract the important statements from the code, which you should pay more "
        "attention to, in order to get the answer.\n"
        "Step 2 - " + phrase + " the code according to the code and the important statements.";
    for (std::size_t i = 0; i < demos.size(); ++i) {
        prompt.examples_block.push_back(render_demo(demos[i], i + 1));
    }
    prompt.input_block = "# For the test code:\n" + block(target_code);
    prompt.format_constraints =
        "# Please imitate the above example, extract the most important statements of the test "
        "code and analyse the code and important statements to use one sentence to " + phrase +
        " the code. Please output the results in the following format:\n" +
        std::string(kStep1Marker) + "...\n" + std::string(kStep2Marker) + "...";

    std::vector<std::string> parts{prompt.role_designation, prompt.chain_of_thought};
    if (!prompt.examples_block.empty()) parts.push_back(join(prompt.examples_block, "\n\n"));
    parts.push_back(prompt.input_block);
    parts.push_back(prompt.format_constraints);
    prompt.rendered = join(parts, "\n\n");
    return prompt;
}

ParsedResponse parse_response(const std::string& raw) {
    ParsedResponse parsed;
    parsed.raw = raw;

    std::smatch last2;
    bool found2 = false;
    for (auto it = std::sregex_iterator(raw.begin(), raw.end(), step2_pattern());
         it != std::sregex_iterator(); ++it) {
        last2 = *it;
        found2 = true;
    }
    if (!found2) throw ParseError("response has no 'Step 2 - The comment:' marker", raw);

    const auto step2_begin = static_cast<std::size_t>(last2.position(0));
    const auto step2_end = step2_begin + static_cast<std::size_t>(last2.length(0));
    parsed.comment = trim(std::string_view(raw).substr(step2_end));
    if (parsed.comment.empty()) throw ParseError("response has an empty comment", raw);

    const std::string head = raw.substr(0, step2_begin);
    std::smatch last1;
    bool found1 = false;
    for (auto it = std::sregex_iterator(head.begin(), head.end(), step1_pattern());
         it != std::sregex_iterator(); ++it) {
        last1 = *it;
        found1 = true;
    }
    if (found1) {
        const auto from = static_cast<std::size_t>(last1.position(0) + last1.length(0));
        parsed.important_statements = trim(std::string_view(head).substr(from));
    }
    return parsed;
}

}  // namespace ic
