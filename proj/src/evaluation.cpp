#include "askbench/evaluation.hpp"

#include "askbench/concurrency.hpp"
#include "askbench/corpus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace askbench::evaluation {

std::string_view eval_stage_name(EvalStage stage) {
    switch (stage) {
        case EvalStage::gsm8k: return "gsm8k";
        case EvalStage::mc: return "mc";
        case EvalStage::mce: return "mce";
        case EvalStage::custom: return "custom";
    }
    return "custom";
}

EvalStage eval_stage_from_name(std::string_view name) {
    if (name == "gsm8k") return EvalStage::gsm8k;
    if (name == "mc") return EvalStage::mc;
    if (name == "mce") return EvalStage::mce;
    if (name == "custom") return EvalStage::custom;
    throw EvalError(EvalErrorKind::SchemaViolation, fmt::format("unknown eval stage '{}'", name));
}

Decimal normalize_answer(std::string_view text) {
    auto value = Decimal::parse_loose(text, /*take_rhs_of_equals=*/true);
    if (!value) {
        throw EvalError(EvalErrorKind::NotNumeric,
                        fmt::format("'{}' does not normalize to a decimal", text));
    }
    return *value;
}

bool answers_match(const Decimal& extracted, const Decimal& gold) {
    return Decimal::within_grading_tolerance(extracted, gold);
}

namespace {

EvalStage stage_of(dialogue::QuestionStage stage) {
    switch (stage) {
        case dialogue::QuestionStage::gsm8k: return EvalStage::gsm8k;
        case dialogue::QuestionStage::mc: return EvalStage::mc;
        case dialogue::QuestionStage::mce: return EvalStage::mce;
    }
    return EvalStage::custom;
}

}  // namespace

EvalRecord grade(const dialogue::Trajectory& t) {
    EvalRecord r;
    r.question_id = t.question_id;
    r.stage = stage_of(t.stage);
    r.requested_first_turn = t.requested_first_turn;
    r.correct = t.extracted_answer && answers_match(*t.extracted_answer, t.gold_answer);
    r.num_solver_turns = t.num_solver_turns;
    r.max_turns = t.max_turns;
    return r;
}

std::int64_t percent_centi(std::int64_t numerator, std::int64_t denominator) {
    // round-half-up of 10000 * numerator / denominator, all non-negative
    return (20000 * numerator + denominator) / (2 * denominator);
}

std::string format_percent(std::int64_t centi) {
    return fmt::format("{}.{:02}", centi / 100, centi % 100);
}

MetricsReport compute_metrics(const std::vector<EvalRecord>& records) {
    if (records.empty()) {
        throw EvalError(EvalErrorKind::EmptyInput, "no eval records to aggregate");
    }
    MetricsReport report;
    report.n = static_cast<int>(records.size());

    std::int64_t correct = 0, requested = 0;
    std::map<int, std::pair<std::int64_t, std::int64_t>> per_cap;  // cap -> (correct, n)
    for (const EvalRecord& r : records) {
        if (r.correct) ++correct;
        if (r.requested_first_turn) ++requested;
        auto& bucket = per_cap[r.max_turns];
        if (r.correct) ++bucket.first;
        ++bucket.second;
    }
    report.acc_centi = percent_centi(correct, report.n);
    report.req_centi = percent_centi(requested, report.n);
    if (per_cap.size() > 1) {
        for (const auto& [cap, bucket] : per_cap) {
            report.by_turn_cap[cap] = percent_centi(bucket.first, bucket.second);
        }
    }
    return report;
}

MetricsReport multiturn_sweep(const std::vector<dialogue::EpisodeSpec>& specs,
                              gateway::Backend& solver, gateway::Backend& agent,
                              const std::vector<int>& caps, int max_concurrency) {
    if (caps.empty()) throw EvalError(EvalErrorKind::EmptyInput, "no turn caps to sweep");
    for (int cap : caps) {
        if (cap < 1) throw EvalError(EvalErrorKind::EmptyInput, "turn caps must be at least 1");
    }
    if (specs.empty()) throw EvalError(EvalErrorKind::EmptyInput, "no questions to sweep");

    std::vector<dialogue::EpisodeSpec> runs;
    runs.reserve(specs.size() * caps.size());
    for (int cap : caps) {
        for (const dialogue::EpisodeSpec& spec : specs) {
            dialogue::EpisodeSpec run = spec;
            run.max_turns = cap;
            runs.push_back(std::move(run));
        }
    }
    auto records = parallel_map(runs.size(), max_concurrency, [&](size_t i) {
        return grade(dialogue::run_episode(runs[i], solver, agent));
    });

    MetricsReport report = compute_metrics(records);
    if (report.by_turn_cap.empty() && caps.size() == 1) {
        // A single-cap sweep still reports its cap explicitly.
        report.by_turn_cap[caps.front()] = report.acc_centi;
    }
    return report;
}

nlohmann::json eval_to_json(const EvalRecord& r) {
    return nlohmann::json{
        {"question_id", r.question_id},
        {"stage", std::string(eval_stage_name(r.stage))},
        {"requested_first_turn", r.requested_first_turn},
        {"correct", r.correct},
        {"num_solver_turns", r.num_solver_turns},
        {"max_turns", r.max_turns},
    };
}

EvalRecord eval_from_json(const nlohmann::json& j) {
    EvalRecord r;
    try {
        r.question_id = j.at("question_id").get<std::string>();
        r.stage = eval_stage_from_name(j.at("stage").get<std::string>());
        r.requested_first_turn = j.at("requested_first_turn").get<bool>();
        r.correct = j.at("correct").get<bool>();
        r.num_solver_turns = j.at("num_solver_turns").get<int>();
        r.max_turns = j.at("max_turns").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw EvalError(EvalErrorKind::SchemaViolation, fmt::format("bad eval record: {}", e.what()));
    }
    return r;
}

nlohmann::json metrics_to_json(const MetricsReport& report) {
    nlohmann::json j{
        {"n", report.n},
        {"acc", format_percent(report.acc_centi)},
        {"req", format_percent(report.req_centi)},
    };
    if (!report.by_turn_cap.empty()) {
        nlohmann::json caps = nlohmann::json::object();
        for (const auto& [cap, acc] : report.by_turn_cap) {
            caps[fmt::format("{}", cap)] = format_percent(acc);
        }
        j["by_turn_cap"] = std::move(caps);
    }
    return j;
}

std::string metrics_table(const MetricsReport& report) {
    std::string out;
    out += fmt::format("{:<12} {:>8}\n", "metric", "value");
    out += fmt::format("{:<12} {:>8}\n", "n", report.n);
    out += fmt::format("{:<12} {:>8}\n", "acc", format_percent(report.acc_centi));
    out += fmt::format("{:<12} {:>8}\n", "req", format_percent(report.req_centi));
    for (const auto& [cap, acc] : report.by_turn_cap) {
        out += fmt::format("{:<12} {:>8}\n", fmt::format("acc@{}", cap), format_percent(acc));
    }
    return out;
}

std::vector<EvalRecord> read_eval_file(const std::filesystem::path& path) {
    return corpus::jsonl::read_file<EvalRecord>(
        path, [](const nlohmann::json& j, size_t) { return eval_from_json(j); });
}

size_t write_eval_file(const std::filesystem::path& path, const std::vector<EvalRecord>& records) {
    return corpus::jsonl::write_file<EvalRecord>(
        path, records, [](const EvalRecord& r) { return eval_to_json(r); });
}

}  // namespace askbench::evaluation
