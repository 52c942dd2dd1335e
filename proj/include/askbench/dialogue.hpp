#pragma once

#include "askbench/corpus.hpp"
#include "askbench/decimal.hpp"
#include "askbench/forge.hpp"
#include "askbench/gateway.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace askbench::dialogue {

enum class SolverMode { standard, heuristic };
enum class Speaker { solver, user_agent };
enum class TurnKind { clarify_request, final_answer, user_reply, unparseable };
enum class QuestionStage { gsm8k, mc, mce };

std::string_view solver_mode_name(SolverMode mode);
SolverMode solver_mode_from_name(std::string_view name);
std::string_view speaker_name(Speaker speaker);
std::string_view turn_kind_name(TurnKind kind);
std::string_view question_stage_name(QuestionStage stage);
QuestionStage question_stage_from_name(std::string_view name);

enum class DialogueErrorKind { InputError, EmptyReply, SchemaViolation };

class DialogueError : public std::runtime_error {
public:
    DialogueError(DialogueErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    DialogueErrorKind kind() const { return kind_; }

private:
    DialogueErrorKind kind_;
};

struct Turn {
    int index = 0;
    Speaker speaker = Speaker::solver;
    TurnKind kind = TurnKind::final_answer;
    std::string content;                   // visible text (think block removed)
    std::optional<std::string> thinking;
};

struct Trajectory {
    std::string question_id;
    QuestionStage stage = QuestionStage::gsm8k;
    SolverMode mode = SolverMode::standard;
    std::vector<Turn> turns;
    std::optional<Decimal> extracted_answer;
    Decimal gold_answer;
    bool requested_first_turn = false;
    int num_solver_turns = 0;
    int max_turns = 0;
};

struct ResponseClass {
    enum class Kind { final_answer, clarify_request, unparseable };
    Kind kind = Kind::unparseable;
    std::optional<Decimal> value;  // final_answer
    std::string raw_box;           // final_answer: verbatim box content
    std::string query;             // clarify_request: box content, or full visible text
    std::string reason;            // unparseable
};

struct StripResult {
    std::string visible;
    std::optional<std::string> thinking;
};

// Removes the first well-formed <think>...</think> block; an unmatched
// opener swallows the whole text as thinking (visible part empty).
StripResult strip_thinking(std::string_view text);

std::vector<gateway::ChatMessage> render_solver_prompt(std::string_view question, SolverMode mode);
std::vector<gateway::ChatMessage> render_user_agent_prompt(std::string_view original_question,
                                                           std::string_view query);

// Strips thinking, then reads the *last* balanced \boxed{...}: numeric
// content is a final answer, anything else a clarify request. Without a box,
// visible text ending in '?' is a clarify request; otherwise unparseable.
ResponseClass classify_response(std::string_view text);

// Trims; "None" passes through verbatim (the solver must cope with an
// unhelpful user). Throws EmptyReply when nothing is left.
std::string interpret_agent_reply(std::string_view text);

struct EpisodeSpec {
    std::string question_id;
    QuestionStage stage = QuestionStage::gsm8k;
    std::string question;  // what the solver is asked
    std::string context;   // the original, fully-specified question the agent answers from
    Decimal gold_answer;
    SolverMode mode = SolverMode::standard;
    int max_turns = 2;
    double temperature = 0.0;
    int max_tokens = 2048;
};

EpisodeSpec make_episode_spec(const forge::ModifiedQuestion& q, SolverMode mode, int max_turns);
EpisodeSpec make_episode_spec(const corpus::SourceProblem& p, SolverMode mode, int max_turns);

// Backend failures (and empty agent replies) surface as this, carrying
// whatever portion of the episode completed for logging.
class EpisodeException : public std::runtime_error {
public:
    EpisodeException(std::string message, Trajectory partial)
        : std::runtime_error(std::move(message)), partial_(std::move(partial)) {}
    const Trajectory& partial() const { return partial_; }

private:
    Trajectory partial_;
};

// Runs the clarification protocol: solver turns capped at spec.max_turns,
// at most max_turns-1 agent replies in between. A trailing clarify request
// at the cap ends the episode with no extracted answer.
Trajectory run_episode(const EpisodeSpec& spec, gateway::Backend& solver, gateway::Backend& agent);

nlohmann::json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

std::vector<Trajectory> read_trajectory_file(const std::filesystem::path& path);
size_t write_trajectory_file(const std::filesystem::path& path, const std::vector<Trajectory>& records);

}  // namespace askbench::dialogue
