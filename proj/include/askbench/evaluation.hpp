#pragma once

#include "askbench/decimal.hpp"
#include "askbench/dialogue.hpp"
#include "askbench/gateway.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace askbench::evaluation {

enum class EvalStage { gsm8k, mc, mce, custom };

std::string_view eval_stage_name(EvalStage stage);
EvalStage eval_stage_from_name(std::string_view name);

struct EvalRecord {
    std::string question_id;
    EvalStage stage = EvalStage::custom;
    bool requested_first_turn = false;
    bool correct = false;
    int num_solver_turns = 0;
    int max_turns = 0;
};

// Percentages live as integer hundredths of a percent so rounding is exact
// and platform-independent; format_percent renders "85.53".
struct MetricsReport {
    int n = 0;
    std::int64_t acc_centi = 0;
    std::int64_t req_centi = 0;
    std::map<int, std::int64_t> by_turn_cap;  // max_turns -> acc; populated only for mixed caps
};

enum class EvalErrorKind { NotNumeric, EmptyInput, SchemaViolation };

class EvalError : public std::runtime_error {
public:
    EvalError(EvalErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    EvalErrorKind kind() const { return kind_; }

private:
    EvalErrorKind kind_;
};

// Lenient numeric read used on model output: whitespace, "$", ",", one
// trailing "%", and an "x = N" wrapper are all tolerated.
Decimal normalize_answer(std::string_view text);

// |extracted - gold| <= 1e-4 * max(1, |gold|) in exact decimal arithmetic.
bool answers_match(const Decimal& extracted, const Decimal& gold);

EvalRecord grade(const dialogue::Trajectory& t);

// Half-up rounding to two decimals via integer arithmetic.
std::int64_t percent_centi(std::int64_t numerator, std::int64_t denominator);
std::string format_percent(std::int64_t centi);

MetricsReport compute_metrics(const std::vector<EvalRecord>& records);

// Reruns the same episodes at each cap and aggregates per-cap accuracy
// into by_turn_cap (top-level acc/req cover every run pooled).
MetricsReport multiturn_sweep(const std::vector<dialogue::EpisodeSpec>& specs,
                              gateway::Backend& solver, gateway::Backend& agent,
                              const std::vector<int>& caps, int max_concurrency);

nlohmann::json eval_to_json(const EvalRecord& r);
EvalRecord eval_from_json(const nlohmann::json& j);
nlohmann::json metrics_to_json(const MetricsReport& report);
std::string metrics_table(const MetricsReport& report);

std::vector<EvalRecord> read_eval_file(const std::filesystem::path& path);
size_t write_eval_file(const std::filesystem::path& path, const std::vector<EvalRecord>& records);

}  // namespace askbench::evaluation
