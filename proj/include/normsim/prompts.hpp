#pragma once

#include <string>

#include "normsim/operations.hpp"

namespace normsim {

// Prompt template for an operation kind. Placeholders use {slot_name}
// syntax and correspond one-to-one with slot_names(kind).
const std::string& prompt_template(OperationKind kind);

// Substitutes the input's slots into the kind's template. String slots are
// inserted verbatim; structured slots are rendered as deterministic lists
// (numbered for norms, bulleted for observations, "speaker: text" lines for
// transcripts) or as compact JSON. Throws ParseError when a placeholder has
// no slot value.
std::string render_prompt(OperationKind kind, const OperationInput& input);

// Renders one structured slot value the same way render_prompt would.
std::string render_slot_value(const nlohmann::json& value);

// Fixed system message sent with every remote request.
extern const std::string kSystemMessage;

// Appended to the user message when a malformed reply triggers a retry.
// Versioned so logged prompts identify the exact corrective wording.
extern const std::string kRetryCorrective;

}  // namespace normsim
