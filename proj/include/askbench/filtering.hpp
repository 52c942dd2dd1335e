#pragma once

#include "askbench/dialogue.hpp"
#include "askbench/forge.hpp"
#include "askbench/gateway.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace askbench::filtering {

enum class RolloutOutcomeKind { direct_answer, clarified_solved, clarified_failed, unresolved };

struct RolloutOutcome {
    RolloutOutcomeKind kind = RolloutOutcomeKind::unresolved;
    bool direct_correct = false;  // meaningful only for direct_answer
};

struct FilterConfig {
    int n_samples = 16;
    int direct_threshold = 12;  // strict >: 13 direct answers drop, 12 keep
    int easy_threshold = 12;
};

struct RolloutCounts {
    int n_direct = 0;
    int n_direct_correct = 0;  // subset of n_direct; drives the unclarifiable rule
    int n_clarified_solved = 0;
    int n_clarified_failed = 0;
    int n_unresolved = 0;

    int total() const { return n_direct + n_clarified_solved + n_clarified_failed + n_unresolved; }
    void add(const RolloutOutcome& outcome);
};

enum class FilterDecision { Keep, DropAnswerable, DropTooEasy, DropUnclarifiable };

std::string_view decision_name(FilterDecision decision);
FilterDecision decision_from_name(std::string_view name);

struct FilterReport {
    std::string question_id;
    RolloutCounts counts;
    int n_errors = 0;  // rollouts that failed outright; already counted as unresolved
    FilterDecision decision = FilterDecision::Keep;
};

enum class FilterErrorKind { CountMismatch, SchemaViolation };

class FilterError : public std::runtime_error {
public:
    FilterError(FilterErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    FilterErrorKind kind() const { return kind_; }

private:
    FilterErrorKind kind_;
};

// First solver turn answered -> direct (correct per grading tolerance);
// first turn asked and the second solver turn answered -> solved/failed by
// correctness; everything else (unparseable, capped-out) -> unresolved.
RolloutOutcome classify_rollout(const dialogue::Trajectory& t);

// The three drop rules in fixed order, all thresholds strict:
//   1. counts.n_direct > cfg.direct_threshold            -> DropAnswerable
//   2. counts.n_clarified_solved > cfg.easy_threshold    -> DropTooEasy
//   3. counts.n_direct_correct + n_clarified_solved == 0 -> DropUnclarifiable
// otherwise Keep. Throws CountMismatch unless counts sum to cfg.n_samples.
FilterDecision decide(const RolloutCounts& counts, const FilterConfig& cfg);

// Runs cfg.n_samples independent standard-mode episodes at max_turns=2 and
// aggregates. Backend failures degrade to unresolved and bump n_errors;
// they never abort the report.
FilterReport run_filter(const forge::ModifiedQuestion& question, gateway::Backend& solver,
                        gateway::Backend& agent, const FilterConfig& cfg, int max_concurrency);

nlohmann::json report_to_json(const FilterReport& report);
FilterReport report_from_json(const nlohmann::json& j);

std::vector<FilterReport> read_report_file(const std::filesystem::path& path);
size_t write_report_file(const std::filesystem::path& path, const std::vector<FilterReport>& records);

}  // namespace askbench::filtering
