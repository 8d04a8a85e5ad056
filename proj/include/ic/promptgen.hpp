#pragma once

#include <span>
#include <string>
#include <vector>

#include "ic/intent.hpp"
#include "ic/knowledge.hpp"

namespace ic {

// The five prompt components plus their rendering. An empty examples block
// (zero-shot) is left out of `rendered` instead of leaving a blank gap.
struct PromptBundle {
    std::string role_designation;
    std::string chain_of_thought;
    std::vector<std::string> examples_block;
    std::string input_block;
    std::string format_constraints;
    std::string rendered;
};

// Throws InvalidArgument when demos.size() != shots, when intent is Others,
// or when a demonstration has no important statements.
PromptBundle build_prompt(const std::string& target_code, IntentCategory intent,
                          std::span<const Demonstration> demos, std::size_t shots);

// Important statements of one demonstration as source lines, ascending index.
std::string render_important_statements(const Demonstration& demo);

struct ParsedResponse {
    std::string important_statements;
    std::string comment;
    std::string raw;
};

// Takes the text after the last "Step 2 - The comment:" marker as the comment
// and the text between the last preceding "Step 1 - Important statements:"
// marker and it as the statements. Markers may carry leading '#' and uneven
// spacing. Throws ParseError (carrying the raw text) when no Step 2 marker is
// found or the comment is empty.
ParsedResponse parse_response(const std::string& raw);

}  // namespace ic
