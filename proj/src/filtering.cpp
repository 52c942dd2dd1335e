#include "askbench/filtering.hpp"

#include "askbench/concurrency.hpp"
#include "askbench/corpus.hpp"
#include "askbench/log.hpp"

#include <fmt/format.h>

namespace askbench::filtering {

void RolloutCounts::add(const RolloutOutcome& outcome) {
    switch (outcome.kind) {
        case RolloutOutcomeKind::direct_answer:
            ++n_direct;
            if (outcome.direct_correct) ++n_direct_correct;
            break;
        case RolloutOutcomeKind::clarified_solved:
            ++n_clarified_solved;
            break;
        case RolloutOutcomeKind::clarified_failed:
            ++n_clarified_failed;
            break;
        case RolloutOutcomeKind::unresolved:
            ++n_unresolved;
            break;
    }
}

std::string_view decision_name(FilterDecision decision) {
    switch (decision) {
        case FilterDecision::Keep: return "keep";
        case FilterDecision::DropAnswerable: return "drop_answerable";
        case FilterDecision::DropTooEasy: return "drop_too_easy";
        case FilterDecision::DropUnclarifiable: return "drop_unclarifiable";
    }
    return "keep";
}

FilterDecision decision_from_name(std::string_view name) {
    if (name == "keep") return FilterDecision::Keep;
    if (name == "drop_answerable") return FilterDecision::DropAnswerable;
    if (name == "drop_too_easy") return FilterDecision::DropTooEasy;
    if (name == "drop_unclarifiable") return FilterDecision::DropUnclarifiable;
    throw FilterError(FilterErrorKind::SchemaViolation, fmt::format("unknown filter decision '{}'", name));
}

RolloutOutcome classify_rollout(const dialogue::Trajectory& t) {
    using dialogue::TurnKind;
    if (t.turns.empty()) return {RolloutOutcomeKind::unresolved, false};

    bool correct = t.extracted_answer &&
                   Decimal::within_grading_tolerance(*t.extracted_answer, t.gold_answer);

    const dialogue::Turn& first = t.turns.front();
    if (first.kind == TurnKind::final_answer) {
        return {RolloutOutcomeKind::direct_answer, correct};
    }
    if (first.kind == TurnKind::clarify_request && t.turns.size() >= 3 &&
        t.turns[2].kind == TurnKind::final_answer) {
        return {correct ? RolloutOutcomeKind::clarified_solved : RolloutOutcomeKind::clarified_failed,
                false};
    }
    return {RolloutOutcomeKind::unresolved, false};
}

FilterDecision decide(const RolloutCounts& counts, const FilterConfig& cfg) {
    if (counts.total() != cfg.n_samples) {
        throw FilterError(FilterErrorKind::CountMismatch,
                          fmt::format("rollout counts sum to {} but the filter ran {} samples",
                                      counts.total(), cfg.n_samples));
    }
    if (counts.n_direct_correct > counts.n_direct) {
        throw FilterError(FilterErrorKind::CountMismatch,
                          "n_direct_correct cannot exceed n_direct");
    }
    if (counts.n_direct > cfg.direct_threshold) return FilterDecision::DropAnswerable;
    if (counts.n_clarified_solved > cfg.easy_threshold) return FilterDecision::DropTooEasy;
    if (counts.n_direct_correct + counts.n_clarified_solved == 0) return FilterDecision::DropUnclarifiable;
    return FilterDecision::Keep;
}

FilterReport run_filter(const forge::ModifiedQuestion& question, gateway::Backend& solver,
                        gateway::Backend& agent, const FilterConfig& cfg, int max_concurrency) {
    dialogue::EpisodeSpec spec =
        dialogue::make_episode_spec(question, dialogue::SolverMode::standard, 2);

    struct Slot {
        RolloutOutcome outcome;
        bool errored = false;
    };
    auto slots = parallel_map(static_cast<size_t>(cfg.n_samples), max_concurrency, [&](size_t i) {
        Slot slot;
        try {
            dialogue::Trajectory t = dialogue::run_episode(spec, solver, agent);
            slot.outcome = classify_rollout(t);
        } catch (const std::exception& e) {
            log::warn(fmt::format("filter rollout {}/{} for {} failed: {}", i + 1, cfg.n_samples,
                                  question.id, e.what()));
            slot.outcome = {RolloutOutcomeKind::unresolved, false};
            slot.errored = true;
        }
        return slot;
    });

    FilterReport report;
    report.question_id = question.id;
    for (const Slot& slot : slots) {
        report.counts.add(slot.outcome);
        if (slot.errored) ++report.n_errors;
    }
    report.decision = decide(report.counts, cfg);
    return report;
}

nlohmann::json report_to_json(const FilterReport& report) {
    return nlohmann::json{
        {"question_id", report.question_id},
        {"n_direct", report.counts.n_direct},
        {"n_clarified_solved", report.counts.n_clarified_solved},
        {"n_clarified_failed", report.counts.n_clarified_failed},
        {"n_unresolved", report.counts.n_unresolved},
        {"n_errors", report.n_errors},
        {"decision", std::string(decision_name(report.decision))},
    };
}

FilterReport report_from_json(const nlohmann::json& j) {
    FilterReport report;
    try {
        report.question_id = j.at("question_id").get<std::string>();
        report.counts.n_direct = j.at("n_direct").get<int>();
        report.counts.n_clarified_solved = j.at("n_clarified_solved").get<int>();
        report.counts.n_clarified_failed = j.at("n_clarified_failed").get<int>();
        report.counts.n_unresolved = j.at("n_unresolved").get<int>();
        report.n_errors = j.at("n_errors").get<int>();
        report.decision = decision_from_name(j.at("decision").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw FilterError(FilterErrorKind::SchemaViolation,
                          fmt::format("bad filter report record: {}", e.what()));
    }
    return report;
}

std::vector<FilterReport> read_report_file(const std::filesystem::path& path) {
    return corpus::jsonl::read_file<FilterReport>(
        path, [](const nlohmann::json& j, size_t) { return report_from_json(j); });
}

size_t write_report_file(const std::filesystem::path& path, const std::vector<FilterReport>& records) {
    return corpus::jsonl::write_file<FilterReport>(
        path, records, [](const FilterReport& r) { return report_to_json(r); });
}

}  // namespace askbench::filtering
