#pragma once

#include "askbench/dialogue.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace askbench::rewards {

struct RewardConfig {
    double correct_reward = 1.0;
    double incorrect_reward = 0.0;
    double unnecessary_request_penalty = -0.5;  // answerable question, solver asked anyway
    double request_bonus = 0.5;                 // unanswerable question, solver asked
};

struct RewardRecord {
    std::string trajectory_id;
    bool answerable = false;  // true only for unmodified source questions
    bool requested = false;   // first solver turn was a clarify request
    bool correct = false;
    double outcome = 0.0;
    double shaping = 0.0;
    double total = 0.0;  // always outcome + shaping
};

enum class RewardErrorKind { EmptyMask, LengthMismatch, EmptyGroup, SchemaViolation };

class RewardError : public std::runtime_error {
public:
    RewardError(RewardErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    RewardErrorKind kind() const { return kind_; }

private:
    RewardErrorKind kind_;
};

// outcome = correct ? correct_reward : incorrect_reward; shaping fires only
// when the solver asked: the penalty on answerable questions, the bonus on
// unanswerable ones. Composition is additive.
RewardRecord shaped_reward(std::string trajectory_id, bool answerable, bool requested, bool correct,
                           const RewardConfig& cfg = {});

// Derives (answerable, requested, correct) from a trajectory: answerable
// iff stage gsm8k, correctness per grading tolerance.
RewardRecord reward_for(const dialogue::Trajectory& t, const RewardConfig& cfg = {});

// Group-normalized advantages (r - mean) / (population_std + epsilon).
// A group whose rewards are all equal returns exact zeros.
std::vector<double> group_advantages(const std::vector<double>& rewards, double epsilon = 1e-6);

struct AdvantageGroup {
    std::string question_id;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

// Per-turn trainability: solver turns train, user-agent turns do not.
std::vector<bool> sft_mask(const dialogue::Trajectory& t);

struct SftMessage {
    std::string role;  // "user" | "assistant"
    std::string content;
    bool train = false;
};

// Role-tagged chat export: the rendered solver prompt (never trainable),
// then the turns. Assistant messages reassemble "<think>...</think>" ahead
// of the visible text when the turn carried thinking.
std::vector<SftMessage> sft_export(const dialogue::Trajectory& t, std::string_view question_text);

// Negative sum of log-probabilities over trainable positions.
double sft_loss_reference(const std::vector<double>& logp, const std::vector<bool>& mask);

enum class KlEstimator { k3 };

struct GrpoConfig {
    double beta = 0.0;
    KlEstimator kl_estimator = KlEstimator::k3;
};

struct TokenLogProbs {
    std::vector<double> new_policy;
    std::vector<double> old_policy;
    std::vector<double> reference;
    std::vector<bool> trainable_mask;
};

// Per trainable token: exp(new-old)*advantage - beta*k3(ref,new), where
// k3 = exp(ref-new) - (ref-new) - 1 >= 0. Returns the mean over trainable
// tokens only (user turns are excluded from the average, not zero-filled).
double grpo_objective_reference(const TokenLogProbs& tok, double advantage, const GrpoConfig& cfg = {});

nlohmann::json reward_to_json(const RewardRecord& r);
RewardRecord reward_from_json(const nlohmann::json& j);
nlohmann::json advantage_group_to_json(const AdvantageGroup& g);
AdvantageGroup advantage_group_from_json(const nlohmann::json& j);
nlohmann::json sft_messages_to_json(const std::vector<SftMessage>& messages);
std::vector<SftMessage> sft_messages_from_json(const nlohmann::json& j);

std::vector<RewardRecord> read_reward_file(const std::filesystem::path& path);
size_t write_reward_file(const std::filesystem::path& path, const std::vector<RewardRecord>& records);
std::vector<AdvantageGroup> read_advantage_file(const std::filesystem::path& path);
size_t write_advantage_file(const std::filesystem::path& path, const std::vector<AdvantageGroup>& records);

}  // namespace askbench::rewards
