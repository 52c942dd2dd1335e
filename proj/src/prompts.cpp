#include "askbench/prompts.hpp"

#include <stdexcept>

namespace askbench::prompts {

// The substitution slot in "Your Turn" is the final [Question] token; the
// demonstration text itself contains square brackets, so replacement is
// anchored to the last occurrence.

const std::string_view kRecognizeTemplate =
    R"(Identify and annotate key information in questions by enclosing each piece in square brackets [].

Examples:

Input:
Natalia sold clips to 48 of her friends in April, and then she sold half as many clips in May. How many clips did Natalia sell altogether in April and May?

Output:
Natalia sold clips to [48 of her friends in April], and then she sold [half as many clips in May]. How many clips did Natalia sell altogether in April and May?

Now, annotate the following question:
[Question])";

const std::string_view kRephraseTemplate =
    R"(Given a question with removed information, eliminate any unnatural phrasing while maintaining fluency.

The question is: [Question])";

const std::string_view kInjectTemplate =
    R"(Hide a misleading detail in the given question. The new question should yield the same answer as the original.

Examples:

Input:
Natalia sold clips to 48 of her friends in April, and then she sold half as many clips in May. How many clips did Natalia sell altogether in April and May?

Output:
Natalia sold clips to 48 of her friends in April, and then she sold half as many clips in May, but only to 30 of her friends. How many clips did Natalia sell altogether in April and May?

Now, hide a misleading detail in the following question:
[Question])";

const std::string_view kSolverStandardTemplate =
    R"(Question:
[QUESTION]

If the question is answerable, provide the final answer. Otherwise, ask the user for the necessary information by phrasing the request as a question.)";

const std::string_view kSolverHeuristicTemplate =
    R"(Question:
[QUESTION]

This question is unanswerable due to missing key information. Ask the user for the necessary information by phrasing the request as a question.)";

const std::string_view kUserAgentTemplate =
    R"(## Role
You are a Math Question Analyzer, a specialized AI assistant designed to extract and provide specific information from given math problems based on student queries.

## Capabilities
- Analyze the content of the provided math question with precision
- Identify and extract requested information if relevant parts present in the question

## Knowledge Base
- Mathematical terminology and problem structures
- Information extraction techniques
- Contextual understanding of student inquiries

## Instructions
1. Input Format:
- Math question: [math_question]
- Student's query: [student_question]
2. Processing Rules:
- Output only the combined relevant parts about the requested information (no explanations).
- Output "None" if the requested information is not mentioned in the math problem.
3. Constraints:
- Never infer or calculate missing information.
- Never add commentary, examples, or supplemental text.
- Prioritize brevity and accuracy.

## Output Example
Math question: James earns $20 an hour while working at his main job. He earns 20% less while working his second job. He works 30 hours at his main job and half that much at his second job. How much does he earn per week?
Student's query: What is James's hourly wage at his second job?
Reply: 20% less than his main job.

## Your Turn
Math question: [Context]
Student's query: [Question]
Reply:)";

std::string substitute(std::string_view tmpl, std::string_view slot, std::string_view value) {
    size_t pos = tmpl.rfind(slot);
    if (pos == std::string_view::npos) {
        throw std::logic_error("prompt template is missing slot " + std::string(slot));
    }
    std::string out;
    out.reserve(tmpl.size() + value.size());
    out.append(tmpl.substr(0, pos));
    out.append(value);
    out.append(tmpl.substr(pos + slot.size()));
    return out;
}

std::string render_recognize(std::string_view question) {
    return substitute(kRecognizeTemplate, "[Question]", question);
}

std::string render_rephrase(std::string_view question) {
    return substitute(kRephraseTemplate, "[Question]", question);
}

std::string render_inject(std::string_view question) {
    return substitute(kInjectTemplate, "[Question]", question);
}

std::string render_solver_standard(std::string_view question) {
    return substitute(kSolverStandardTemplate, "[QUESTION]", question);
}

std::string render_solver_heuristic(std::string_view question) {
    return substitute(kSolverHeuristicTemplate, "[QUESTION]", question);
}

std::string render_user_agent(std::string_view context, std::string_view query) {
    // Both slots are spliced against the original template so tokens inside
    // the substituted values can never be re-matched.
    std::string_view tmpl = kUserAgentTemplate;
    size_t ctx_pos = tmpl.rfind("[Context]");
    size_t q_pos = tmpl.rfind("[Question]");
    if (ctx_pos == std::string_view::npos || q_pos == std::string_view::npos || ctx_pos >= q_pos) {
        throw std::logic_error("user agent template slots are malformed");
    }
    std::string out;
    out.reserve(tmpl.size() + context.size() + query.size());
    out.append(tmpl.substr(0, ctx_pos));
    out.append(context);
    out.append(tmpl.substr(ctx_pos + 9, q_pos - (ctx_pos + 9)));
    out.append(query);
    out.append(tmpl.substr(q_pos + 10));
    return out;
}

}  // namespace askbench::prompts
