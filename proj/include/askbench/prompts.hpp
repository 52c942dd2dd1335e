#pragma once

#include <string>
#include <string_view>

namespace askbench::prompts {

// Template texts are byte-exact repo assets; golden tests pin their
// content. Each has exactly one substitution slot.
extern const std::string_view kRecognizeTemplate;    // slot: [Question]
extern const std::string_view kRephraseTemplate;     // slot: [Question]
extern const std::string_view kInjectTemplate;       // slot: [Question]
extern const std::string_view kSolverStandardTemplate;   // slot: [QUESTION]
extern const std::string_view kSolverHeuristicTemplate;  // slot: [QUESTION]
extern const std::string_view kUserAgentTemplate;    // slots: [Context], [Question]

// Replaces exactly one occurrence of slot in tmpl; throws std::logic_error
// if the slot is absent (templates are fixed, so that is a programming
// error, not an input error).
std::string substitute(std::string_view tmpl, std::string_view slot, std::string_view value);

std::string render_recognize(std::string_view question);
std::string render_rephrase(std::string_view question);
std::string render_inject(std::string_view question);
std::string render_solver_standard(std::string_view question);
std::string render_solver_heuristic(std::string_view question);
std::string render_user_agent(std::string_view context, std::string_view query);

}  // namespace askbench::prompts
