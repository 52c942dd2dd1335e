#include "askbench/rewards.hpp"

#include "askbench/corpus.hpp"
#include "askbench/prompts.hpp"

#include <fmt/format.h>

#include <cmath>

namespace askbench::rewards {

RewardRecord shaped_reward(std::string trajectory_id, bool answerable, bool requested, bool correct,
                           const RewardConfig& cfg) {
    RewardRecord r;
    r.trajectory_id = std::move(trajectory_id);
    r.answerable = answerable;
    r.requested = requested;
    r.correct = correct;
    r.outcome = correct ? cfg.correct_reward : cfg.incorrect_reward;
    if (requested) {
        r.shaping = answerable ? cfg.unnecessary_request_penalty : cfg.request_bonus;
    } else {
        r.shaping = 0.0;
    }
    r.total = r.outcome + r.shaping;
    return r;
}

RewardRecord reward_for(const dialogue::Trajectory& t, const RewardConfig& cfg) {
    bool answerable = t.stage == dialogue::QuestionStage::gsm8k;
    bool correct = t.extracted_answer &&
                   Decimal::within_grading_tolerance(*t.extracted_answer, t.gold_answer);
    return shaped_reward(t.question_id, answerable, t.requested_first_turn, correct, cfg);
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double epsilon) {
    if (rewards.empty()) {
        throw RewardError(RewardErrorKind::EmptyGroup, "advantage group needs at least one reward");
    }
    const size_t g = rewards.size();
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);

    bool degenerate = true;
    for (double r : rewards) {
        if (r != rewards.front()) {
            degenerate = false;
            break;
        }
    }
    if (degenerate) return std::vector<double>(g, 0.0);

    double variance = 0.0;
    for (double r : rewards) variance += (r - mean) * (r - mean);
    variance /= static_cast<double>(g);
    double denom = std::sqrt(variance) + epsilon;

    std::vector<double> advantages(g);
    for (size_t i = 0; i < g; ++i) advantages[i] = (rewards[i] - mean) / denom;
    return advantages;
}

std::vector<bool> sft_mask(const dialogue::Trajectory& t) {
    std::vector<bool> mask;
    mask.reserve(t.turns.size());
    for (const dialogue::Turn& turn : t.turns) {
        mask.push_back(turn.speaker == dialogue::Speaker::solver);
    }
    return mask;
}

std::vector<SftMessage> sft_export(const dialogue::Trajectory& t, std::string_view question_text) {
    std::vector<SftMessage> out;
    out.reserve(t.turns.size() + 1);
    std::vector<gateway::ChatMessage> prompt = dialogue::render_solver_prompt(
        question_text, t.mode);
    out.push_back({"user", std::move(prompt.front().content), false});
    for (const dialogue::Turn& turn : t.turns) {
        SftMessage m;
        if (turn.speaker == dialogue::Speaker::solver) {
            m.role = "assistant";
            m.train = true;
            if (turn.thinking) {
                m.content = fmt::format("<think>{}</think>{}", *turn.thinking, turn.content);
            } else {
                m.content = turn.content;
            }
        } else {
            m.role = "user";
            m.train = false;
            m.content = turn.content;
        }
        out.push_back(std::move(m));
    }
    return out;
}

double sft_loss_reference(const std::vector<double>& logp, const std::vector<bool>& mask) {
    if (logp.size() != mask.size()) {
        throw RewardError(RewardErrorKind::LengthMismatch,
                          fmt::format("{} log-probs vs {} mask entries", logp.size(), mask.size()));
    }
    double sum = 0.0;
    size_t used = 0;
    for (size_t i = 0; i < logp.size(); ++i) {
        if (!mask[i]) continue;
        sum += logp[i];
        ++used;
    }
    if (used == 0) throw RewardError(RewardErrorKind::EmptyMask, "no trainable positions");
    return -sum;
}

double grpo_objective_reference(const TokenLogProbs& tok, double advantage, const GrpoConfig& cfg) {
    const size_t n = tok.new_policy.size();
    if (tok.old_policy.size() != n || tok.reference.size() != n || tok.trainable_mask.size() != n) {
        throw RewardError(RewardErrorKind::LengthMismatch, "token log-prob lists differ in length");
    }
    double sum = 0.0;
    size_t used = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!tok.trainable_mask[i]) continue;
        double ratio = std::exp(tok.new_policy[i] - tok.old_policy[i]);
        double delta = tok.reference[i] - tok.new_policy[i];
        // k3 = exp(delta) - delta - 1, via expm1 so cancellation near
        // delta ~ 1e-8 cannot round the estimate negative
        double kl = std::expm1(delta) - delta;
        sum += ratio * advantage - cfg.beta * kl;
        ++used;
    }
    if (used == 0) throw RewardError(RewardErrorKind::EmptyMask, "no trainable tokens");
    return sum / static_cast<double>(used);
}

nlohmann::json reward_to_json(const RewardRecord& r) {
    return nlohmann::json{
        {"trajectory_id", r.trajectory_id},
        {"answerable", r.answerable},
        {"requested", r.requested},
        {"correct", r.correct},
        {"outcome", r.outcome},
        {"shaping", r.shaping},
        {"total", r.total},
    };
}

RewardRecord reward_from_json(const nlohmann::json& j) {
    RewardRecord r;
    try {
        r.trajectory_id = j.at("trajectory_id").get<std::string>();
        r.answerable = j.at("answerable").get<bool>();
        r.requested = j.at("requested").get<bool>();
        r.correct = j.at("correct").get<bool>();
        r.outcome = j.at("outcome").get<double>();
        r.shaping = j.at("shaping").get<double>();
        r.total = j.at("total").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw RewardError(RewardErrorKind::SchemaViolation,
                          fmt::format("bad reward record: {}", e.what()));
    }
    if (r.total != r.outcome + r.shaping) {
        throw RewardError(RewardErrorKind::SchemaViolation, "total must equal outcome + shaping");
    }
    return r;
}

nlohmann::json advantage_group_to_json(const AdvantageGroup& g) {
    return nlohmann::json{
        {"question_id", g.question_id},
        {"rewards", g.rewards},
        {"advantages", g.advantages},
    };
}

AdvantageGroup advantage_group_from_json(const nlohmann::json& j) {
    AdvantageGroup g;
    try {
        g.question_id = j.at("question_id").get<std::string>();
        g.rewards = j.at("rewards").get<std::vector<double>>();
        g.advantages = j.at("advantages").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw RewardError(RewardErrorKind::SchemaViolation,
                          fmt::format("bad advantage record: {}", e.what()));
    }
    if (g.rewards.empty() || g.rewards.size() != g.advantages.size()) {
        throw RewardError(RewardErrorKind::SchemaViolation,
                          "rewards and advantages must be non-empty and equal length");
    }
    return g;
}

nlohmann::json sft_messages_to_json(const std::vector<SftMessage>& messages) {
    nlohmann::json list = nlohmann::json::array();
    for (const SftMessage& m : messages) {
        list.push_back(nlohmann::json{{"role", m.role}, {"content", m.content}, {"train", m.train}});
    }
    return nlohmann::json{{"messages", std::move(list)}};
}

std::vector<SftMessage> sft_messages_from_json(const nlohmann::json& j) {
    std::vector<SftMessage> out;
    try {
        for (const auto& jm : j.at("messages")) {
            SftMessage m;
            m.role = jm.at("role").get<std::string>();
            m.content = jm.at("content").get<std::string>();
            m.train = jm.at("train").get<bool>();
            out.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw RewardError(RewardErrorKind::SchemaViolation,
                          fmt::format("bad SFT export record: {}", e.what()));
    }
    return out;
}

std::vector<RewardRecord> read_reward_file(const std::filesystem::path& path) {
    return corpus::jsonl::read_file<RewardRecord>(
        path, [](const nlohmann::json& j, size_t) { return reward_from_json(j); });
}

size_t write_reward_file(const std::filesystem::path& path, const std::vector<RewardRecord>& records) {
    return corpus::jsonl::write_file<RewardRecord>(
        path, records, [](const RewardRecord& r) { return reward_to_json(r); });
}

std::vector<AdvantageGroup> read_advantage_file(const std::filesystem::path& path) {
    return corpus::jsonl::read_file<AdvantageGroup>(
        path, [](const nlohmann::json& j, size_t) { return advantage_group_from_json(j); });
}

size_t write_advantage_file(const std::filesystem::path& path, const std::vector<AdvantageGroup>& records) {
    return corpus::jsonl::write_file<AdvantageGroup>(
        path, records, [](const AdvantageGroup& g) { return advantage_group_to_json(g); });
}

}  // namespace askbench::rewards
