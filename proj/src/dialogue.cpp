#include "askbench/dialogue.hpp"

#include "askbench/prompts.hpp"

#include <fmt/format.h>

#include <utility>

namespace askbench::dialogue {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string trim(std::string_view text) {
    size_t b = 0, e = text.size();
    while (b < e && is_ws(text[b])) ++b;
    while (e > b && is_ws(text[e - 1])) --e;
    return std::string(text.substr(b, e - b));
}

// Finds the content of the last \boxed{...} whose braces balance.
std::optional<std::string> last_balanced_box(std::string_view text) {
    constexpr std::string_view kBox = "\\boxed{";
    size_t search_end = text.size();
    while (true) {
        size_t at = text.rfind(kBox, search_end == 0 ? 0 : search_end - 1);
        if (at == std::string_view::npos) return std::nullopt;
        size_t open = at + kBox.size() - 1;  // position of '{'
        int depth = 0;
        for (size_t i = open; i < text.size(); ++i) {
            if (text[i] == '{') {
                ++depth;
            } else if (text[i] == '}') {
                --depth;
                if (depth == 0) return std::string(text.substr(open + 1, i - open - 1));
            }
        }
        if (at == 0) return std::nullopt;
        search_end = at;
    }
}

// Unwraps a box whose whole content is a single \text{...} group.
std::string unwrap_text_group(const std::string& content) {
    constexpr std::string_view kText = "\\text{";
    std::string t = trim(content);
    if (t.size() > kText.size() + 1 && std::string_view(t).substr(0, kText.size()) == kText &&
        t.back() == '}') {
        std::string inner = t.substr(kText.size(), t.size() - kText.size() - 1);
        if (inner.find('{') == std::string::npos && inner.find('}') == std::string::npos) {
            return trim(inner);
        }
    }
    return t;
}

}  // namespace

std::string_view solver_mode_name(SolverMode mode) {
    return mode == SolverMode::standard ? "standard" : "heuristic";
}

SolverMode solver_mode_from_name(std::string_view name) {
    if (name == "standard") return SolverMode::standard;
    if (name == "heuristic") return SolverMode::heuristic;
    throw DialogueError(DialogueErrorKind::SchemaViolation, fmt::format("unknown solver mode '{}'", name));
}

std::string_view speaker_name(Speaker speaker) {
    return speaker == Speaker::solver ? "solver" : "user_agent";
}

std::string_view turn_kind_name(TurnKind kind) {
    switch (kind) {
        case TurnKind::clarify_request: return "clarify_request";
        case TurnKind::final_answer: return "final_answer";
        case TurnKind::user_reply: return "user_reply";
        case TurnKind::unparseable: return "unparseable";
    }
    return "unparseable";
}

namespace {

Speaker speaker_from_name(std::string_view name) {
    if (name == "solver") return Speaker::solver;
    if (name == "user_agent") return Speaker::user_agent;
    throw DialogueError(DialogueErrorKind::SchemaViolation, fmt::format("unknown speaker '{}'", name));
}

TurnKind turn_kind_from_name(std::string_view name) {
    if (name == "clarify_request") return TurnKind::clarify_request;
    if (name == "final_answer") return TurnKind::final_answer;
    if (name == "user_reply") return TurnKind::user_reply;
    if (name == "unparseable") return TurnKind::unparseable;
    throw DialogueError(DialogueErrorKind::SchemaViolation, fmt::format("unknown turn kind '{}'", name));
}

}  // namespace

std::string_view question_stage_name(QuestionStage stage) {
    switch (stage) {
        case QuestionStage::gsm8k: return "gsm8k";
        case QuestionStage::mc: return "mc";
        case QuestionStage::mce: return "mce";
    }
    return "gsm8k";
}

QuestionStage question_stage_from_name(std::string_view name) {
    if (name == "gsm8k") return QuestionStage::gsm8k;
    if (name == "mc") return QuestionStage::mc;
    if (name == "mce") return QuestionStage::mce;
    throw DialogueError(DialogueErrorKind::SchemaViolation, fmt::format("unknown question stage '{}'", name));
}

StripResult strip_thinking(std::string_view text) {
    constexpr std::string_view kOpen = "<think>";
    constexpr std::string_view kClose = "</think>";
    size_t open = text.find(kOpen);
    if (open == std::string_view::npos) {
        return {std::string(text), std::nullopt};
    }
    size_t close = text.find(kClose, open + kOpen.size());
    if (close == std::string_view::npos) {
        // Unmatched opener: the model never stopped thinking out loud, so
        // the whole text (minus the marker) is thinking and nothing is
        // visible.
        std::string thinking;
        thinking.append(text.substr(0, open));
        thinking.append(text.substr(open + kOpen.size()));
        return {"", std::move(thinking)};
    }
    std::string visible;
    visible.append(text.substr(0, open));
    visible.append(text.substr(close + kClose.size()));
    return {trim(visible), std::string(text.substr(open + kOpen.size(), close - open - kOpen.size()))};
}

std::vector<gateway::ChatMessage> render_solver_prompt(std::string_view question, SolverMode mode) {
    if (trim(question).empty()) {
        throw DialogueError(DialogueErrorKind::InputError, "solver question is empty");
    }
    std::string content = mode == SolverMode::standard ? prompts::render_solver_standard(question)
                                                       : prompts::render_solver_heuristic(question);
    return {{gateway::Role::user, std::move(content)}};
}

std::vector<gateway::ChatMessage> render_user_agent_prompt(std::string_view original_question,
                                                           std::string_view query) {
    if (trim(original_question).empty()) {
        throw DialogueError(DialogueErrorKind::InputError, "user-agent context is empty");
    }
    if (trim(query).empty()) {
        throw DialogueError(DialogueErrorKind::InputError, "user-agent query is empty");
    }
    return {{gateway::Role::user, prompts::render_user_agent(original_question, query)}};
}

ResponseClass classify_response(std::string_view text) {
    StripResult stripped = strip_thinking(text);
    const std::string& visible = stripped.visible;

    ResponseClass out;
    if (auto box = last_balanced_box(visible)) {
        std::string content = unwrap_text_group(*box);
        if (auto value = Decimal::parse_loose(content, /*take_rhs_of_equals=*/true)) {
            out.kind = ResponseClass::Kind::final_answer;
            out.value = *value;
            out.raw_box = *box;
            return out;
        }
        out.kind = ResponseClass::Kind::clarify_request;
        out.query = content.empty() ? *box : content;
        return out;
    }
    std::string tail = trim(visible);
    if (!tail.empty() && tail.back() == '?') {
        out.kind = ResponseClass::Kind::clarify_request;
        out.query = visible;
        return out;
    }
    out.kind = ResponseClass::Kind::unparseable;
    out.reason = "no box, no question";
    return out;
}

std::string interpret_agent_reply(std::string_view text) {
    std::string reply = trim(text);
    if (reply.empty()) {
        throw DialogueError(DialogueErrorKind::EmptyReply, "user agent returned an empty reply");
    }
    return reply;
}

EpisodeSpec make_episode_spec(const forge::ModifiedQuestion& q, SolverMode mode, int max_turns) {
    EpisodeSpec spec;
    spec.question_id = q.id;
    spec.stage = q.stage == forge::Stage::mc ? QuestionStage::mc : QuestionStage::mce;
    spec.question = q.modified_question;
    spec.context = q.original_question;
    spec.gold_answer = q.gold_answer;
    spec.mode = mode;
    spec.max_turns = max_turns;
    return spec;
}

EpisodeSpec make_episode_spec(const corpus::SourceProblem& p, SolverMode mode, int max_turns) {
    EpisodeSpec spec;
    spec.question_id = p.id;
    spec.stage = QuestionStage::gsm8k;
    spec.question = p.question;
    spec.context = p.question;
    spec.gold_answer = p.gold_answer;
    spec.mode = mode;
    spec.max_turns = max_turns;
    return spec;
}

Trajectory run_episode(const EpisodeSpec& spec, gateway::Backend& solver, gateway::Backend& agent) {
    if (spec.max_turns < 1) {
        throw DialogueError(DialogueErrorKind::InputError, "max_turns must be at least 1");
    }
    if (spec.mode == SolverMode::heuristic && spec.stage == QuestionStage::gsm8k) {
        throw DialogueError(DialogueErrorKind::InputError,
                            "heuristic mode is only legal for forged (unanswerable) questions");
    }

    Trajectory t;
    t.question_id = spec.question_id;
    t.stage = spec.stage;
    t.mode = spec.mode;
    t.gold_answer = spec.gold_answer;
    t.max_turns = spec.max_turns;

    std::vector<gateway::ChatMessage> history = render_solver_prompt(spec.question, spec.mode);

    auto finalize = [&]() {
        t.requested_first_turn = !t.turns.empty() && t.turns.front().kind == TurnKind::clarify_request;
    };
    auto fail = [&](const std::string& what) -> EpisodeException {
        finalize();
        return EpisodeException(fmt::format("episode {}: {}", spec.question_id, what), t);
    };

    gateway::CompletionRequest req;
    req.temperature = spec.temperature;
    req.max_tokens = spec.max_tokens;
    req.tag = spec.question_id;

    while (true) {
        req.messages = history;
        gateway::CompletionResult result;
        try {
            result = solver.complete(req);
        } catch (const gateway::GatewayException& e) {
            throw fail(fmt::format("solver backend: {}", e.what()));
        }
        ++t.num_solver_turns;

        StripResult stripped = strip_thinking(result.texts.at(0));
        ResponseClass cls = classify_response(result.texts.at(0));

        Turn turn;
        turn.index = static_cast<int>(t.turns.size());
        turn.speaker = Speaker::solver;
        turn.content = stripped.visible;
        turn.thinking = stripped.thinking;

        if (cls.kind == ResponseClass::Kind::final_answer) {
            turn.kind = TurnKind::final_answer;
            t.turns.push_back(std::move(turn));
            t.extracted_answer = cls.value;
            break;
        }
        if (cls.kind == ResponseClass::Kind::unparseable) {
            turn.kind = TurnKind::unparseable;
            t.turns.push_back(std::move(turn));
            break;
        }

        turn.kind = TurnKind::clarify_request;
        t.turns.push_back(std::move(turn));
        if (t.num_solver_turns >= spec.max_turns) break;  // cap: pending request goes unanswered

        history.push_back({gateway::Role::assistant, t.turns.back().content});

        gateway::CompletionRequest agent_req;
        agent_req.messages = render_user_agent_prompt(spec.context, cls.query);
        agent_req.temperature = spec.temperature;
        agent_req.max_tokens = spec.max_tokens;
        agent_req.tag = spec.question_id + ":agent";

        gateway::CompletionResult agent_result;
        try {
            agent_result = agent.complete(agent_req);
        } catch (const gateway::GatewayException& e) {
            throw fail(fmt::format("agent backend: {}", e.what()));
        }
        StripResult agent_stripped = strip_thinking(agent_result.texts.at(0));
        std::string reply;
        try {
            reply = interpret_agent_reply(agent_stripped.visible);
        } catch (const DialogueError& e) {
            throw fail(e.what());
        }

        Turn reply_turn;
        reply_turn.index = static_cast<int>(t.turns.size());
        reply_turn.speaker = Speaker::user_agent;
        reply_turn.kind = TurnKind::user_reply;
        reply_turn.content = reply;
        reply_turn.thinking = agent_stripped.thinking;
        t.turns.push_back(std::move(reply_turn));

        history.push_back({gateway::Role::user, reply});
    }

    finalize();
    return t;
}

nlohmann::json trajectory_to_json(const Trajectory& t) {
    nlohmann::json turns = nlohmann::json::array();
    for (const Turn& turn : t.turns) {
        nlohmann::json jt{
            {"index", turn.index},
            {"speaker", std::string(speaker_name(turn.speaker))},
            {"kind", std::string(turn_kind_name(turn.kind))},
            {"content", turn.content},
        };
        if (turn.thinking) {
            jt["thinking"] = *turn.thinking;
        } else {
            jt["thinking"] = nullptr;
        }
        turns.push_back(std::move(jt));
    }
    nlohmann::json j{
        {"question_id", t.question_id},
        {"stage", std::string(question_stage_name(t.stage))},
        {"mode", std::string(solver_mode_name(t.mode))},
        {"turns", std::move(turns)},
        {"gold_answer", t.gold_answer.to_string()},
        {"requested_first_turn", t.requested_first_turn},
        {"num_solver_turns", t.num_solver_turns},
        {"max_turns", t.max_turns},
    };
    if (t.extracted_answer) {
        j["extracted_answer"] = t.extracted_answer->to_string();
    } else {
        j["extracted_answer"] = nullptr;
    }
    return j;
}

namespace {

void validate_trajectory(const Trajectory& t) {
    auto bail = [&](const std::string& what) {
        throw DialogueError(DialogueErrorKind::SchemaViolation,
                            fmt::format("trajectory {}: {}", t.question_id, what));
    };
    if (t.turns.empty()) bail("no turns");
    if (t.max_turns < 1) bail("max_turns must be positive");
    if (t.num_solver_turns < 1) bail("num_solver_turns must be positive");
    int solver_turns = 0;
    for (size_t i = 0; i < t.turns.size(); ++i) {
        const Turn& turn = t.turns[i];
        if (turn.index != static_cast<int>(i)) bail("turn indices must be contiguous from 0");
        Speaker expect = (i % 2 == 0) ? Speaker::solver : Speaker::user_agent;
        if (turn.speaker != expect) bail("turns must alternate solver/user_agent starting with solver");
        if ((turn.speaker == Speaker::user_agent) != (turn.kind == TurnKind::user_reply)) {
            bail("user_agent turns carry user_reply and nothing else does");
        }
        if (turn.speaker == Speaker::solver) ++solver_turns;
    }
    if (solver_turns != t.num_solver_turns) bail("num_solver_turns disagrees with the turn list");
    if (t.num_solver_turns > t.max_turns) bail("num_solver_turns exceeds max_turns");
    const Turn& last = t.turns.back();
    if (last.speaker == Speaker::user_agent) bail("episodes end on a solver turn");
    bool closed = last.kind == TurnKind::final_answer || last.kind == TurnKind::unparseable;
    if (!closed && t.num_solver_turns != t.max_turns) {
        bail("open episodes are only legal at the turn cap");
    }
    if (t.requested_first_turn != (t.turns.front().kind == TurnKind::clarify_request)) {
        bail("requested_first_turn disagrees with the first turn");
    }
    if (t.extracted_answer && last.kind != TurnKind::final_answer) {
        bail("extracted_answer requires a closing final_answer turn");
    }
}

}  // namespace

Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t;
    try {
        t.question_id = j.at("question_id").get<std::string>();
        t.stage = question_stage_from_name(j.at("stage").get<std::string>());
        t.mode = solver_mode_from_name(j.at("mode").get<std::string>());
        for (const auto& jt : j.at("turns")) {
            Turn turn;
            turn.index = jt.at("index").get<int>();
            turn.speaker = speaker_from_name(jt.at("speaker").get<std::string>());
            turn.kind = turn_kind_from_name(jt.at("kind").get<std::string>());
            turn.content = jt.at("content").get<std::string>();
            const auto& th = jt.at("thinking");
            if (!th.is_null()) turn.thinking = th.get<std::string>();
            t.turns.push_back(std::move(turn));
        }
        const auto& extracted = j.at("extracted_answer");
        if (!extracted.is_null()) {
            auto value = Decimal::parse(extracted.get<std::string>());
            if (!value) {
                throw DialogueError(DialogueErrorKind::SchemaViolation,
                                    "extracted_answer is not a canonical decimal");
            }
            t.extracted_answer = *value;
        }
        auto gold = Decimal::parse(j.at("gold_answer").get<std::string>());
        if (!gold) {
            throw DialogueError(DialogueErrorKind::SchemaViolation, "gold_answer is not a canonical decimal");
        }
        t.gold_answer = *gold;
        t.requested_first_turn = j.at("requested_first_turn").get<bool>();
        t.num_solver_turns = j.at("num_solver_turns").get<int>();
        t.max_turns = j.at("max_turns").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw DialogueError(DialogueErrorKind::SchemaViolation,
                            fmt::format("bad trajectory record: {}", e.what()));
    }
    validate_trajectory(t);
    return t;
}

std::vector<Trajectory> read_trajectory_file(const std::filesystem::path& path) {
    return corpus::jsonl::read_file<Trajectory>(
        path, [](const nlohmann::json& j, size_t) { return trajectory_from_json(j); });
}

size_t write_trajectory_file(const std::filesystem::path& path, const std::vector<Trajectory>& records) {
    return corpus::jsonl::write_file<Trajectory>(
        path, records, [](const Trajectory& t) { return trajectory_to_json(t); });
}

}  // namespace askbench::dialogue
