#pragma once

#include <array>
#include <string>
#include <string_view>

namespace ic {

enum class IntentCategory { What, Why, HowToUse, HowItIsDone, Property, Others };

// The five intents that may appear in a corpus or a run (Others is noise).
inline constexpr std::array<IntentCategory, 5> kUsableIntents = {
    IntentCategory::What, IntentCategory::Why, IntentCategory::HowToUse,
    IntentCategory::HowItIsDone, IntentCategory::Property};

// Case-insensitive; accepts "what", "why", "how-to-use", "how-it-is-done",
// "property", "others". Throws InvalidArgument otherwise.
IntentCategory parse_intent(std::string_view text);

// Canonical lowercase wire name, e.g. "how-to-use".
std::string_view intent_name(IntentCategory intent);

// Instruction phrase substituted into prompts. Throws InvalidArgument for Others.
std::string_view instruction_phrase(IntentCategory intent);

}  // namespace ic
