#include "askbench/rewards.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace askbench;
using namespace askbench::rewards;
using dialogue::QuestionStage;
using dialogue::TurnKind;

TEST_CASE("the shaped reward table, all eight corners, exact values") {
    struct Row {
        bool answerable, requested, correct;
        double outcome, shaping, total;
    };
    // outcome rewards correctness; shaping pays +0.5 for asking when the
    // question lacks information and -0.5 for asking when it does not
    const Row rows[] = {
        {true, true, true, 1.0, -0.5, 0.5},
        {true, true, false, 0.0, -0.5, -0.5},
        {true, false, true, 1.0, 0.0, 1.0},
        {true, false, false, 0.0, 0.0, 0.0},
        {false, true, true, 1.0, 0.5, 1.5},
        {false, true, false, 0.0, 0.5, 0.5},
        {false, false, true, 1.0, 0.0, 1.0},
        {false, false, false, 0.0, 0.0, 0.0},
    };
    std::multiset<double> totals;
    for (const Row& row : rows) {
        RewardRecord r = shaped_reward("t", row.answerable, row.requested, row.correct);
        CHECK(r.outcome == row.outcome);
        CHECK(r.shaping == row.shaping);
        CHECK(r.total == row.total);
        CHECK(r.total == r.outcome + r.shaping);
        totals.insert(r.total);
    }
    CHECK(totals == std::multiset<double>{-0.5, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.5});
    // the best move on an unanswerable question is to ask and then solve;
    // the worst is to ask on an answerable one and still get it wrong
    CHECK(*totals.rbegin() == 1.5);
    CHECK(*totals.begin() == -0.5);
}

TEST_CASE("shaped rewards compose from the configured components") {
    RewardConfig cfg;
    cfg.correct_reward = 2.0;
    cfg.incorrect_reward = -1.0;
    cfg.unnecessary_request_penalty = -0.25;
    cfg.request_bonus = 0.75;

    CHECK(shaped_reward("t", false, true, true, cfg).total == 2.75);
    CHECK(shaped_reward("t", true, true, false, cfg).total == -1.25);
    CHECK(shaped_reward("t", true, false, false, cfg).total == -1.0);
    CHECK(shaped_reward("t", false, false, true, cfg).total == 2.0);
}

TEST_CASE("reward_for derives the three bits from a trajectory") {
    const Decimal gold = *Decimal::parse("72");
    using testutil::make_trajectory;

    // unmodified question answered directly and correctly
    RewardRecord r = reward_for(
        make_trajectory("g1", QuestionStage::gsm8k, {TurnKind::final_answer}, gold, gold));
    CHECK(r.trajectory_id == "g1");
    CHECK(r.answerable);
    CHECK_FALSE(r.requested);
    CHECK(r.correct);
    CHECK(r.total == 1.0);

    // forged question, solver asked and then solved
    r = reward_for(make_trajectory(
        "m1-mc", QuestionStage::mc,
        {TurnKind::clarify_request, TurnKind::user_reply, TurnKind::final_answer}, gold, gold));
    CHECK_FALSE(r.answerable);
    CHECK(r.requested);
    CHECK(r.correct);
    CHECK(r.total == 1.5);

    // forged question answered blind and wrong
    r = reward_for(make_trajectory("m2-mce", QuestionStage::mce, {TurnKind::final_answer},
                                   *Decimal::parse("190"), gold));
    CHECK_FALSE(r.answerable);
    CHECK_FALSE(r.requested);
    CHECK_FALSE(r.correct);
    CHECK(r.total == 0.0);

    // asked on an answerable question: correct but penalized
    r = reward_for(make_trajectory(
        "g2", QuestionStage::gsm8k,
        {TurnKind::clarify_request, TurnKind::user_reply, TurnKind::final_answer}, gold, gold));
    CHECK(r.answerable);
    CHECK(r.requested);
    CHECK(r.total == 0.5);

    // tolerance applies to correctness
    r = reward_for(make_trajectory("g3", QuestionStage::gsm8k, {TurnKind::final_answer},
                                   *Decimal::parse("72.005"), gold));
    CHECK(r.correct);

    // capped-out episode: no extraction, not correct
    r = reward_for(make_trajectory("m3-mc", QuestionStage::mc,
                                   {TurnKind::clarify_request, TurnKind::user_reply,
                                    TurnKind::clarify_request},
                                   std::nullopt, gold));
    CHECK_FALSE(r.correct);
    CHECK(r.requested);
    CHECK(r.total == 0.5);
}

TEST_CASE("group advantages: known group, degenerate group, empty group") {
    std::vector<double> a = group_advantages({1.0, 1.0, 0.0, 0.0});
    REQUIRE(a.size() == 4);
    const double expected = 0.5 / (0.5 + 1e-6);  // (r - 0.5) / (pop std 0.5 + epsilon)
    for (size_t i = 0; i < 4; ++i) {
        double want = i < 2 ? expected : -expected;
        CHECK(std::abs(a[i] - want) < 1e-12);
        CHECK(std::abs(a[i] - (i < 2 ? 1.0 : -1.0)) < 1e-4);
    }

    for (std::vector<double> same :
         {std::vector<double>{0.5, 0.5, 0.5}, std::vector<double>{-1.0}, std::vector<double>(16, 1.5)}) {
        std::vector<double> zeros = group_advantages(same);
        for (double z : zeros) CHECK(z == 0.0);
    }

    CHECK_THROWS_AS(group_advantages({}), RewardError);
}

TEST_CASE("group advantages are centered, unit-scaled and shift-invariant") {
    std::mt19937_64 rng(20260813);
    const double menu[] = {-0.5, 0.0, 0.5, 1.0, 1.5};
    for (int trial = 0; trial < 1000; ++trial) {
        size_t g = 2 + rng() % 15;
        std::vector<double> rewards(g);
        for (double& r : rewards) r = menu[rng() % 5];

        std::vector<double> adv = group_advantages(rewards);
        bool degenerate =
            std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
        if (degenerate) {
            for (double a : adv) CHECK(a == 0.0);
            continue;
        }

        double mean = 0.0;
        for (double a : adv) mean += a;
        mean /= static_cast<double>(g);
        CHECK(std::abs(mean) < 1e-9);

        double var = 0.0;
        for (double a : adv) var += (a - mean) * (a - mean);
        double sd = std::sqrt(var / static_cast<double>(g));
        CHECK(sd >= 0.999);
        CHECK(sd <= 1.0);

        std::vector<double> shifted(rewards);
        for (double& r : shifted) r += 10.0;
        std::vector<double> adv2 = group_advantages(shifted);
        for (size_t i = 0; i < g; ++i) CHECK(std::abs(adv[i] - adv2[i]) < 1e-9);
    }
}

TEST_CASE("sft masks train solver turns only") {
    using testutil::make_trajectory;
    const Decimal gold = *Decimal::parse("72");
    dialogue::Trajectory t = make_trajectory(
        "q", QuestionStage::mc,
        {TurnKind::clarify_request, TurnKind::user_reply, TurnKind::final_answer}, gold, gold);
    CHECK(sft_mask(t) == std::vector<bool>{true, false, true});
    CHECK(sft_mask(make_trajectory("q", QuestionStage::gsm8k, {TurnKind::final_answer}, gold, gold)) ==
          std::vector<bool>{true});
}

TEST_CASE("sft export renders the prompt and reassembles thinking blocks") {
    using testutil::make_trajectory;
    const Decimal gold = *Decimal::parse("72");
    dialogue::Trajectory t = make_trajectory(
        "q-mc", QuestionStage::mc,
        {TurnKind::clarify_request, TurnKind::user_reply, TurnKind::final_answer}, gold, gold);
    t.turns[0].content = "\\boxed{\\text{How many in May?}}";
    t.turns[0].thinking = "the May count is missing";
    t.turns[1].content = "half as many as April";
    t.turns[2].content = "\\boxed{72}";

    std::vector<SftMessage> messages = sft_export(t, "THE QUESTION");
    REQUIRE(messages.size() == 4);
    CHECK(messages[0].role == "user");
    CHECK_FALSE(messages[0].train);
    CHECK(messages[0].content.find("Question:\nTHE QUESTION") != std::string::npos);
    CHECK(messages[0].content.find("If the question is answerable") != std::string::npos);

    CHECK(messages[1].role == "assistant");
    CHECK(messages[1].train);
    CHECK(messages[1].content ==
          "<think>the May count is missing</think>\\boxed{\\text{How many in May?}}");

    CHECK(messages[2].role == "user");
    CHECK_FALSE(messages[2].train);
    CHECK(messages[2].content == "half as many as April");

    CHECK(messages[3].role == "assistant");
    CHECK(messages[3].train);
    CHECK(messages[3].content == "\\boxed{72}");

    // heuristic-mode exports use the heuristic instruction
    t.mode = dialogue::SolverMode::heuristic;
    std::vector<SftMessage> h = sft_export(t, "THE QUESTION");
    CHECK(h[0].content.find("This question is unanswerable due to missing key information.") !=
          std::string::npos);

    nlohmann::json j = sft_messages_to_json(messages);
    std::vector<SftMessage> back = sft_messages_from_json(j);
    REQUIRE(back.size() == messages.size());
    for (size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].role == messages[i].role);
        CHECK(back[i].content == messages[i].content);
        CHECK(back[i].train == messages[i].train);
    }
    CHECK_THROWS_AS(sft_messages_from_json(nlohmann::json::parse(R"({"messages":[{"role":"user"}]})")),
                    RewardError);
}

TEST_CASE("sft loss sums negative log-probs over trainable positions") {
    CHECK(sft_loss_reference({-1.0, -2.0, -4.0}, {true, false, true}) == 5.0);
    CHECK(sft_loss_reference({-0.5}, {true}) == 0.5);
    CHECK_THROWS_AS(sft_loss_reference({-1.0}, {true, false}), RewardError);
    CHECK_THROWS_AS(sft_loss_reference({-1.0, -2.0}, {false, false}), RewardError);
}

TEST_CASE("grpo objective: unmoved policy with no kl pressure returns the advantage") {
    TokenLogProbs tok;
    tok.new_policy = {-1.5, -0.25, -3.0, -0.125};
    tok.old_policy = tok.new_policy;
    tok.reference = {-2.0, -2.0, -2.0, -2.0};
    tok.trainable_mask = {true, true, true, true};
    CHECK(grpo_objective_reference(tok, 0.5, GrpoConfig{}) == 0.5);

    tok.trainable_mask = {false, true, false, false};
    CHECK(grpo_objective_reference(tok, 0.7331, GrpoConfig{}) == 0.7331);
    CHECK(grpo_objective_reference(tok, -2.25, GrpoConfig{}) == -2.25);
}

TEST_CASE("grpo objective: doubled likelihood against a ln2-displaced reference") {
    // ratio exp(new-old) = 2, k3 at delta -ln2 = 0.5 + ln2 - 1
    TokenLogProbs tok;
    tok.new_policy = {std::log(2.0)};
    tok.old_policy = {0.0};
    tok.reference = {0.0};
    tok.trainable_mask = {true};
    GrpoConfig cfg;
    cfg.beta = 1.0;
    double value = grpo_objective_reference(tok, 1.0, cfg);
    CHECK(value == doctest::Approx(1.8068528194400546).epsilon(1e-12));
    CHECK(std::abs(value - 1.8069) < 1e-4);
}

TEST_CASE("the k3 estimator is nonnegative wherever we sample it") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> logp(-12.0, 0.0);
    GrpoConfig cfg;
    cfg.beta = 1.0;
    for (int i = 0; i < 1000; ++i) {
        TokenLogProbs tok;
        tok.new_policy = {logp(rng)};
        tok.old_policy = {tok.new_policy[0]};
        tok.reference = {logp(rng)};
        tok.trainable_mask = {true};
        // advantage 0: the objective is exactly -k3, so k3 >= 0 <=> value <= 0
        CHECK(grpo_objective_reference(tok, 0.0, cfg) <= 0.0);
    }

    TokenLogProbs tok;
    tok.new_policy = {-1.0, -2.0};
    tok.old_policy = {-1.0, -2.0};
    tok.reference = {-1.0, -2.0};
    tok.trainable_mask = {false, false};
    CHECK_THROWS_AS(grpo_objective_reference(tok, 1.0, cfg), RewardError);
    tok.old_policy = {-1.0};
    tok.trainable_mask = {true, true};
    CHECK_THROWS_AS(grpo_objective_reference(tok, 1.0, cfg), RewardError);
}

TEST_CASE("reward and advantage records round-trip and self-check on load") {
    RewardRecord r = shaped_reward("m1-mc#3", false, true, true);
    nlohmann::json j = reward_to_json(r);
    RewardRecord back = reward_from_json(j);
    CHECK(back.trajectory_id == "m1-mc#3");
    CHECK(back.answerable == r.answerable);
    CHECK(back.requested == r.requested);
    CHECK(back.correct == r.correct);
    CHECK(back.outcome == r.outcome);
    CHECK(back.shaping == r.shaping);
    CHECK(back.total == r.total);

    nlohmann::json bad = j;
    bad["total"] = 9.0;  // breaks total == outcome + shaping
    CHECK_THROWS_AS(reward_from_json(bad), RewardError);
    bad = j;
    bad.erase("requested");
    CHECK_THROWS_AS(reward_from_json(bad), RewardError);

    AdvantageGroup g;
    g.question_id = "m1-mc";
    g.rewards = {1.5, 0.5, 0.5, 0.0};
    g.advantages = group_advantages(g.rewards);
    nlohmann::json gj = advantage_group_to_json(g);
    AdvantageGroup gback = advantage_group_from_json(gj);
    CHECK(gback.question_id == g.question_id);
    CHECK(gback.rewards == g.rewards);
    CHECK(gback.advantages == g.advantages);

    nlohmann::json gbad = gj;
    gbad["advantages"] = std::vector<double>{1.0};
    CHECK_THROWS_AS(advantage_group_from_json(gbad), RewardError);
    gbad["rewards"] = std::vector<double>{};
    gbad["advantages"] = std::vector<double>{};
    CHECK_THROWS_AS(advantage_group_from_json(gbad), RewardError);

    testutil::TempDir dir;
    write_reward_file(dir / "rewards.jsonl", {r, shaped_reward("g0", true, false, true)});
    auto rewards_back = read_reward_file(dir / "rewards.jsonl");
    REQUIRE(rewards_back.size() == 2);
    CHECK(rewards_back[1].trajectory_id == "g0");

    write_advantage_file(dir / "advantages.jsonl", {g});
    auto groups_back = read_advantage_file(dir / "advantages.jsonl");
    REQUIRE(groups_back.size() == 1);
    CHECK(groups_back[0].rewards == g.rewards);
}
