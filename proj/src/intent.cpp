#include "ic/intent.hpp"

#include <algorithm>
#include <cctype>

#include "ic/error.hpp"

namespace ic {

IntentCategory parse_intent(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "what") return IntentCategory::What;
    if (lower == "why") return IntentCategory::Why;
    if (lower == "how-to-use") return IntentCategory::HowToUse;
    if (lower == "how-it-is-done") return IntentCategory::HowItIsDone;
    if (lower == "property") return IntentCategory::Property;
    if (lower == "others") return IntentCategory::Others;
    throw InvalidArgument("unknown intent '" + std::string(text) + "'");
}

std::string_view intent_name(IntentCategory intent) {
    switch (intent) {
        case IntentCategory::What: return "what";
        case IntentCategory::Why: return "why";
        case IntentCategory::HowToUse: return "how-to-use";
        case IntentCategory::HowItIsDone: return "how-it-is-done";
        case IntentCategory::Property: return "property";
        case IntentCategory::Others: return "others";
    }
    return "others";
}

std::string_view instruction_phrase(IntentCategory intent) {
    switch (intent) {
        case IntentCategory::What:
            return "describe the functionality of";
        case IntentCategory::Why:
            return "explain the reason why the method is provided or the design rationale of";
        case IntentCategory::HowToUse:
            return "describe the usage or the expected set-up of using";
        case IntentCategory::HowItIsDone:
            return "describe the implementation details of";
        case IntentCategory::Property:
            return "describe the asserted properties of the code, including pre-conditions or "
                   "post-conditions of";
        case IntentCategory::Others:
            break;
    }
    throw InvalidArgument("intent 'others' has no instruction phrase");
}

}  // namespace ic
