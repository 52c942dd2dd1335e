#include "askbench/pipeline.hpp"

#include "askbench/corpus.hpp"
#include "askbench/evaluation.hpp"
#include "askbench/filtering.hpp"
#include "askbench/forge.hpp"
#include "askbench/rewards.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace askbench;
using namespace askbench::pipeline;
namespace fs = std::filesystem;

namespace {

const char* kAvaQ = "Ava bought 12 apples and ate 4 of them. How many apples does Ava have left?";
const char* kAvaGood = "Ava bought [12 apples] and ate [4 of them]. How many apples does Ava have left?";
const char* kAvaBad =
    "Ava bought [12 shiny apples] and ate [4 of them]. How many apples does Ava have left?";
const char* kAvaMc = "Ava bought some apples and ate some of them. How many apples does Ava have left?";
const char* kAvaMce =
    "Ava bought some apples and ate some of them, while her brother ate 2 pears. How many apples "
    "does Ava have left?";

const char* kBenQ = "Ben read 30 pages on Monday and 15 pages on Tuesday. How many pages did Ben "
                    "read in total?";
const char* kBenGood =
    "Ben read [30 pages] on Monday and [15 pages] on Tuesday. How many pages did Ben read in total?";
const char* kBenMc = "Ben read some pages on Monday and Tuesday. How many pages did Ben read in total?";
const char* kBenMce = "Ben read some pages on Monday and Tuesday, mostly about 7 dragons. How many "
                      "pages did Ben read in total?";

std::string forge_rules() {
    using testutil::rule_contains;
    return
        // ava's first annotation attempt mangles the text; retry fixes it
        rule_contains("annotate the following question:\nAva bought", {kAvaBad, kAvaGood}) +
        rule_contains("annotate the following question:\nBen read", {kBenGood}) +
        rule_contains("The question is: Ava bought", {kAvaMc}) +
        rule_contains("The question is: Ben read", {kBenMc}) +
        rule_contains("misleading detail in the following question:\nAva bought some apples",
                      {kAvaMce}) +
        rule_contains("misleading detail in the following question:\nBen read some pages", {kBenMce});
}

// Filter behavior (4 samples each): ava-mc mixes all four outcome classes
// and survives; ava-mce is answered directly every time; ben-mc never
// produces anything usable; ben-mce is clarified-and-solved every time.
std::string filter_solver_rules() {
    using testutil::rule_contains;
    return rule_contains("ate some of them. How",
                         {"\\boxed{\\text{How many did she eat?}}", "\\boxed{8}",
                          "\\boxed{\\text{How many did she eat?}}", "hmm"}) +
           rule_contains("her brother ate 2 pears", {"\\boxed{8}"}) +
           rule_contains("and Tuesday. How", {"nope"}) +
           rule_contains("mostly about 7 dragons", {"\\boxed{\\text{Which pages count?}}"}) +
           rule_contains("45 pages total", {"\\boxed{45}"}) +
           rule_contains("she ate 4 apples", {"\\boxed{8}", "\\boxed{3}"});
}

std::string filter_agent_rules() {
    return testutil::rule_contains("How many did she eat?", {"she ate 4 apples"}) +
           testutil::rule_contains("Which pages count?", {"45 pages total"});
}

// Scripts live beside the config; backends resolve by role name directly.
config::RunConfig make_cfg(const testutil::TempDir& dir, std::string_view solver_rules,
                           std::string_view agent_rules, std::string_view forge_rules_jsonl,
                           std::string_view extra_toml = {}) {
    fs::create_directories(dir / "in");
    testutil::write_text(dir / "solver.jsonl", solver_rules);
    testutil::write_text(dir / "agent.jsonl", agent_rules);
    testutil::write_text(dir / "forge.jsonl", forge_rules_jsonl);
    std::string toml = fmt::format(
        "[backends.solver]\nkind = \"mock\"\nscript = \"{}\"\nmax_concurrency = 1\n"
        "[backends.agent]\nkind = \"mock\"\nscript = \"{}\"\nmax_concurrency = 1\n"
        "[backends.forge]\nkind = \"mock\"\nscript = \"{}\"\nmax_concurrency = 1\n"
        "[paths]\ninput_dir = \"{}\"\noutput_dir = \"{}\"\n{}",
        (dir / "solver.jsonl").string(), (dir / "agent.jsonl").string(),
        (dir / "forge.jsonl").string(), (dir / "in").string(), (dir / "out").string(), extra_toml);
    return config::config_from_text(toml, {}, "test config");
}

void write_source_fixture(const testutil::TempDir& dir) {
    testutil::write_text(
        dir / "in" / "source.jsonl",
        nlohmann::json{{"id", "ava"}, {"question", kAvaQ}, {"answer", "12 - 4 = 8\n#### 8"}}.dump() +
            "\n" +
            nlohmann::json{{"id", "ben"}, {"question", kBenQ}, {"answer", "30 + 15 = 45\n#### 45"}}
                .dump() +
            "\n");
}

size_t line_count(const fs::path& path) {
    std::string text = testutil::read_text(path);
    return static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
}

forge::ModifiedQuestion ava_mc_record() {
    forge::ModifiedQuestion q;
    q.id = "ava-mc";
    q.source_id = "ava";
    q.stage = forge::Stage::mc;
    q.original_question = kAvaQ;
    q.annotated_question = kAvaGood;
    q.removed_variable = "12 apples";
    q.modified_question = kAvaMc;
    q.gold_answer = *Decimal::parse("8");
    return q;
}

}  // namespace

TEST_CASE("ingest normalizes raw problems, records bad lines, resumes by id") {
    testutil::TempDir dir;
    config::RunConfig cfg = make_cfg(dir, "", "", "");
    testutil::write_text(dir / "in" / "source.jsonl",
                         nlohmann::json{{"id", "ava"},
                                        {"question", kAvaQ},
                                        {"answer", "12 - 4 = 8\n#### 8"}}
                                 .dump() +
                             "\n" +
                             nlohmann::json{{"question", kBenQ}, {"answer", "#### 45"}}.dump() +
                             "\n"
                             "\n"           // third-party files pad with blanks
                             "{oops\n" +    // malformed json
                             nlohmann::json{{"question", "q"}, {"answer", "no marker"}}.dump() + "\n");

    StageResult r = run_ingest(cfg, {}, dir / "out");
    CHECK(r.produced == 2);
    CHECK(r.skipped == 0);
    CHECK(r.failed == 2);

    auto problems = corpus::read_source_file(dir / "out" / "source.jsonl");
    REQUIRE(problems.size() == 2);
    CHECK(problems[0].id == "ava");
    CHECK(problems[1].id == "000001");  // anonymous records take their line index
    CHECK(problems[1].gold_answer == *Decimal::parse("45"));

    auto failures = corpus::jsonl::read_file<nlohmann::json>(
        dir / "out" / "ingest_failures.jsonl", [](const nlohmann::json& j, size_t) { return j; });
    REQUIRE(failures.size() == 2);
    CHECK(failures[0]["id"] == "line-4");
    CHECK(failures[1]["id"] == "line-5");

    // resume: the good records are skipped, the bad lines complain again
    StageResult again = run_ingest(cfg, {}, dir / "out");
    CHECK(again.produced == 0);
    CHECK(again.skipped == 2);
    CHECK(again.failed == 2);
    CHECK(line_count(dir / "out" / "source.jsonl") == 2);
}

TEST_CASE("the forge chain: annotate with retry, perturb, inject, filter") {
    testutil::TempDir dir;
    config::RunConfig cfg =
        make_cfg(dir, filter_solver_rules(), filter_agent_rules(), forge_rules(),
                 "[filter]\nn_samples = 4\ndirect_threshold = 2\neasy_threshold = 2\n");
    write_source_fixture(dir);
    const fs::path out = dir / "out";

    CHECK(run_ingest(cfg, {}, out).produced == 2);

    StageResult ann = run_annotate(cfg, {}, out);
    CHECK(ann.produced == 2);  // ava needed a second model attempt; that's invisible here
    CHECK(ann.failed == 0);

    StageResult mc = run_perturb(cfg, {}, out);
    CHECK(mc.produced == 2);
    auto mc_records = forge::read_modified_file(out / "mc.jsonl");
    REQUIRE(mc_records.size() == 2);
    CHECK(mc_records[0].id == "ava-mc");
    CHECK(mc_records[0].source_id == "ava");
    CHECK(mc_records[0].stage == forge::Stage::mc);
    CHECK(mc_records[0].modified_question == kAvaMc);
    CHECK(mc_records[0].gold_answer == *Decimal::parse("8"));
    CHECK_FALSE(mc_records[0].distractor.has_value());
    // the removed variable is one of the two annotated spans, verbatim
    CHECK((mc_records[0].removed_variable == "12 apples" ||
           mc_records[0].removed_variable == "4 of them"));
    CHECK(mc_records[1].id == "ben-mc");
    CHECK(mc_records[1].gold_answer == *Decimal::parse("45"));

    StageResult mce = run_inject(cfg, {}, out);
    CHECK(mce.produced == 2);
    auto mce_records = forge::read_modified_file(out / "mce.jsonl");
    REQUIRE(mce_records.size() == 2);
    CHECK(mce_records[0].id == "ava-mce");
    CHECK(mce_records[0].stage == forge::Stage::mce);
    CHECK(mce_records[0].modified_question == kAvaMce);
    CHECK(mce_records[0].distractor == kAvaMce);
    CHECK(mce_records[1].id == "ben-mce");

    StageResult filt = run_filter_stage(cfg, {}, out);
    CHECK(filt.produced == 4);
    CHECK(filt.failed == 0);

    auto kept = forge::read_modified_file(out / "kept.jsonl");
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].id == "ava-mc");
    auto dropped = forge::read_modified_file(out / "dropped.jsonl");
    REQUIRE(dropped.size() == 3);
    CHECK(dropped[0].id == "ben-mc");
    CHECK(dropped[1].id == "ava-mce");
    CHECK(dropped[2].id == "ben-mce");

    auto reports = filtering::read_report_file(out / "filter_reports.jsonl");
    REQUIRE(reports.size() == 4);
    CHECK(reports[0].question_id == "ava-mc");
    CHECK(reports[0].decision == filtering::FilterDecision::Keep);
    CHECK(reports[0].counts.n_direct == 1);
    CHECK(reports[0].counts.n_clarified_solved == 1);
    CHECK(reports[0].counts.n_clarified_failed == 1);
    CHECK(reports[0].counts.n_unresolved == 1);
    CHECK(reports[1].question_id == "ben-mc");
    CHECK(reports[1].decision == filtering::FilterDecision::DropUnclarifiable);
    CHECK(reports[2].question_id == "ava-mce");
    CHECK(reports[2].decision == filtering::FilterDecision::DropAnswerable);
    CHECK(reports[3].question_id == "ben-mce");
    CHECK(reports[3].decision == filtering::FilterDecision::DropTooEasy);

    // rerunning any stage is a no-op that leaves the files byte-identical
    std::string mc_before = testutil::read_text(out / "mc.jsonl");
    std::string kept_before = testutil::read_text(out / "kept.jsonl");
    CHECK(run_annotate(cfg, {}, out).skipped == 2);
    StageResult mc2 = run_perturb(cfg, {}, out);
    CHECK(mc2.produced == 0);
    CHECK(mc2.skipped == 2);
    CHECK(run_inject(cfg, {}, out).skipped == 2);
    StageResult filt2 = run_filter_stage(cfg, {}, out);
    CHECK(filt2.produced == 0);
    CHECK(filt2.skipped == 4);
    CHECK(testutil::read_text(out / "mc.jsonl") == mc_before);
    CHECK(testutil::read_text(out / "kept.jsonl") == kept_before);
}

TEST_CASE("annotation that never passes scrutiny lands in the failure manifest") {
    testutil::TempDir dir;
    // the model parrots the question back with no brackets, every attempt
    std::string rules =
        testutil::rule_contains("annotate the following question:\nCleo", {"Cleo has a cat."});
    config::RunConfig cfg = make_cfg(dir, "", "", rules);
    testutil::write_text(dir / "in" / "source.jsonl",
                         nlohmann::json{{"id", "cleo"},
                                        {"question", "Cleo has a cat."},
                                        {"answer", "#### 1"}}
                                 .dump() +
                             "\n");
    run_ingest(cfg, {}, dir / "out");

    StageResult r = run_annotate(cfg, {}, dir / "out");
    CHECK(r.produced == 0);
    CHECK(r.failed == 1);
    auto failures = corpus::jsonl::read_file<nlohmann::json>(
        dir / "out" / "annotate_failures.jsonl", [](const nlohmann::json& j, size_t) { return j; });
    REQUIRE(failures.size() == 1);
    CHECK(failures[0]["id"] == "cleo");
    std::string error = failures[0]["error"].get<std::string>();
    CHECK(error.find("no usable model output after 3 attempts") != std::string::npos);

    // failures are not checkpointed: the next run tries again
    CHECK(run_annotate(cfg, {}, dir / "out").failed == 1);
}

TEST_CASE("build-bench chains the five stages and is deterministic") {
    testutil::TempDir dir;
    config::RunConfig cfg =
        make_cfg(dir, filter_solver_rules(), filter_agent_rules(), forge_rules(),
                 "[filter]\nn_samples = 4\ndirect_threshold = 2\neasy_threshold = 2\n");
    write_source_fixture(dir);

    StageResult first = run_build_bench(cfg, {}, dir / "out");
    CHECK(first.failed == 0);
    CHECK(first.produced == 2 + 2 + 2 + 2 + 4);  // ingest through filter

    StageResult second = run_build_bench(cfg, {}, dir / "out2");
    CHECK(second.produced == first.produced);

    for (const char* name : {"source.jsonl", "annotated.jsonl", "mc.jsonl", "mce.jsonl",
                             "kept.jsonl", "dropped.jsonl", "filter_reports.jsonl"}) {
        CHECK(testutil::read_text(dir / "out" / name) == testutil::read_text(dir / "out2" / name));
    }

    // and rerunning over an existing directory only skips
    StageResult resumed = run_build_bench(cfg, {}, dir / "out");
    CHECK(resumed.produced == 0);
    CHECK(resumed.skipped == first.produced);
}

TEST_CASE("rollouts, rewards, advantages, eval and report compose") {
    testutil::TempDir dir;
    std::string solver =
        testutil::rule_contains("ate some of them. How",
                                {"\\boxed{\\text{How many did she eat?}}", "\\boxed{8}",
                                 "\\boxed{3}", "no clue"}) +
        testutil::rule_contains("she ate 4 apples", {"\\boxed{8}"});
    config::RunConfig cfg = make_cfg(dir, solver, filter_agent_rules(), "",
                                     "[run]\nrollouts_per_question = 4\n");
    const fs::path out = dir / "out";
    fs::create_directories(out);
    forge::write_modified_file(out / "kept.jsonl", {ava_mc_record()});

    StageResult roll = run_rollout(cfg, {}, out);
    CHECK(roll.produced == 4);
    CHECK(roll.failed == 0);
    auto trajectories = dialogue::read_trajectory_file(out / "trajectories.jsonl");
    REQUIRE(trajectories.size() == 4);
    CHECK(trajectories[0].question_id == "ava-mc#0");
    CHECK(trajectories[3].question_id == "ava-mc#3");
    CHECK(trajectories[0].requested_first_turn);
    CHECK(trajectories[0].extracted_answer == Decimal::parse("8"));
    CHECK(trajectories[1].extracted_answer == Decimal::parse("8"));
    CHECK(trajectories[2].extracted_answer == Decimal::parse("3"));
    CHECK_FALSE(trajectories[3].extracted_answer.has_value());

    StageResult scored = run_score_rewards(cfg, {}, out);
    CHECK(scored.produced == 4);
    auto reward_records = rewards::read_reward_file(out / "rewards.jsonl");
    REQUIRE(reward_records.size() == 4);
    CHECK(reward_records[0].total == 1.5);  // asked on unanswerable, then correct
    CHECK(reward_records[1].total == 1.0);  // direct and correct
    CHECK(reward_records[2].total == 0.0);  // direct and wrong
    CHECK(reward_records[3].total == 0.0);  // unparseable

    StageResult adv = run_advantages(cfg, {}, out);
    CHECK(adv.produced == 1);
    auto groups = rewards::read_advantage_file(out / "advantages.jsonl");
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].question_id == "ava-mc");  // the #k suffix folds away
    CHECK(groups[0].rewards == std::vector<double>{1.5, 1.0, 0.0, 0.0});
    CHECK(groups[0].advantages[0] > groups[0].advantages[1]);
    CHECK(groups[0].advantages[1] > 0.0);
    CHECK(groups[0].advantages[2] == groups[0].advantages[3]);
    double mean = 0.0;
    for (double a : groups[0].advantages) mean += a;
    CHECK(std::abs(mean) < 1e-9);

    StageResult ev = run_evaluate(cfg, {}, out);
    CHECK(ev.produced == 4);
    CHECK(testutil::read_text(out / "metrics.json") ==
          "{\"acc\":\"50.00\",\"n\":4,\"req\":\"25.00\"}\n");
    CHECK(testutil::read_text(out / "metrics.txt").find("50.00") != std::string::npos);

    StageResult rep = run_report(cfg, {}, out);
    CHECK(rep.produced == 2);  // one benchmark stage plus the overall row
    nlohmann::json report = nlohmann::json::parse(testutil::read_text(out / "report.json"));
    CHECK(report.at("mc").at("acc") == "50.00");
    CHECK(report.at("overall").at("n") == 4);
    std::string table = testutil::read_text(out / "report.txt");
    CHECK(table.find("benchmark") != std::string::npos);
    CHECK(table.find("overall") != std::string::npos);

    // every stage resumes to a no-op with identical bytes
    std::string t_before = testutil::read_text(out / "trajectories.jsonl");
    CHECK(run_rollout(cfg, {}, out).skipped == 4);
    CHECK(run_score_rewards(cfg, {}, out).skipped == 4);
    CHECK(run_advantages(cfg, {}, out).skipped == 1);
    CHECK(run_evaluate(cfg, {}, out).skipped == 4);
    CHECK(testutil::read_text(out / "trajectories.jsonl") == t_before);
}

TEST_CASE("collect-sft keeps only correct rollouts and checkpoints per question") {
    testutil::TempDir dir;
    // rules are scoped to ava's question text, so ben-mc matches nothing
    // and errors out on every rollout
    std::string solver =
        testutil::rule_contains("How many apples does Ava have left",
                                {"\\boxed{\\text{How many did she eat?}}", "\\boxed{8}",
                                 "\\boxed{\\text{How many did she eat?}}", "junk"}) +
        testutil::rule_contains("she ate 4 apples", {"\\boxed{8}", "\\boxed{3}"});

    config::RunConfig cfg =
        make_cfg(dir, solver, filter_agent_rules(), "", "[sft]\nrollouts = 4\n");
    const fs::path out = dir / "out";
    fs::create_directories(out);

    forge::ModifiedQuestion ben = ava_mc_record();
    ben.id = "ben-mc";
    ben.source_id = "ben";
    ben.original_question = kBenQ;
    ben.annotated_question = kBenGood;
    ben.removed_variable = "30 pages";
    ben.modified_question = kBenMc;
    ben.gold_answer = *Decimal::parse("45");
    forge::write_modified_file(out / "kept.jsonl", {ava_mc_record(), ben});

    StageResult r = run_collect_sft(cfg, {}, out);
    CHECK(r.produced == 2);  // rollouts 1 (clarified, correct) and 2 (direct, correct)
    CHECK(r.failed == 1);    // ben: all rollouts failed

    std::vector<std::string> lines = corpus::jsonl::read_lines(out / "sft.jsonl");
    REQUIRE(lines.size() == 2);
    auto first = rewards::sft_messages_from_json(nlohmann::json::parse(lines[0]));
    REQUIRE(first.size() == 4);  // prompt, clarify, reply, final
    CHECK(first[0].role == "user");
    CHECK(first[0].content.find("unanswerable due to missing key information") != std::string::npos);
    CHECK_FALSE(first[0].train);
    CHECK(first[1].train);
    CHECK(first[2].role == "user");
    CHECK(first[3].content == "\\boxed{8}");
    auto second = rewards::sft_messages_from_json(nlohmann::json::parse(lines[1]));
    CHECK(second.size() == 2);  // prompt + direct answer

    auto ledger = corpus::jsonl::read_file<nlohmann::json>(
        out / "sft_done.jsonl", [](const nlohmann::json& j, size_t) { return j; });
    REQUIRE(ledger.size() == 1);
    CHECK(ledger[0]["question_id"] == "ava-mc");
    CHECK(ledger[0]["kept"] == 2);

    auto failures = corpus::jsonl::read_file<nlohmann::json>(
        out / "collect_sft_failures.jsonl", [](const nlohmann::json& j, size_t) { return j; });
    REQUIRE(failures.size() == 1);
    CHECK(failures[0]["id"] == "ben-mc");
    CHECK(failures[0]["error"].get<std::string>().find("all rollouts failed") != std::string::npos);

    // ava is checkpointed; ben is retried (and fails again)
    StageResult again = run_collect_sft(cfg, {}, out);
    CHECK(again.skipped == 1);
    CHECK(again.produced == 0);
    CHECK(again.failed == 1);
    CHECK(line_count(out / "sft.jsonl") == 2);
}

TEST_CASE("the sweep stage writes per-cap metrics next to the pooled ones") {
    testutil::TempDir dir;
    std::string solver = testutil::rule_contains("If the question is answerable",
                                                 {"\\boxed{\\text{Q1?}}"}) +
                         testutil::rule_contains("first hint", {"\\boxed{\\text{Q2?}}"}) +
                         testutil::rule_contains("second hint", {"\\boxed{\\text{Q3?}}"}) +
                         testutil::rule_contains("third hint", {"\\boxed{8}"});
    std::string agent = testutil::rule_contains("Q1?", {"first hint"}) +
                        testutil::rule_contains("Q2?", {"second hint"}) +
                        testutil::rule_contains("Q3?", {"third hint"});
    config::RunConfig cfg = make_cfg(dir, solver, agent, "", "[run]\nsweep_caps = \"2,4\"\n");
    const fs::path out = dir / "out";
    fs::create_directories(out);
    forge::write_modified_file(out / "kept.jsonl", {ava_mc_record()});

    StageResult r = run_sweep(cfg, {}, out);
    CHECK(r.produced == 2);
    CHECK(r.failed == 0);

    auto evals = evaluation::read_eval_file(out / "sweep_eval.jsonl");
    REQUIRE(evals.size() == 2);
    CHECK(evals[0].max_turns == 2);
    CHECK_FALSE(evals[0].correct);  // still interrogating at the cap
    CHECK(evals[1].max_turns == 4);
    CHECK(evals[1].correct);  // three hints suffice

    nlohmann::json metrics = nlohmann::json::parse(testutil::read_text(out / "sweep_metrics.json"));
    CHECK(metrics.at("n") == 2);
    CHECK(metrics.at("acc") == "50.00");
    CHECK(metrics.at("req") == "100.00");
    CHECK(metrics.at("by_turn_cap").at("2") == "0.00");
    CHECK(metrics.at("by_turn_cap").at("4") == "100.00");

    // the question@cap pairs are the resume key
    StageResult again = run_sweep(cfg, {}, out);
    CHECK(again.skipped == 2);
    CHECK(again.produced == 0);
}

TEST_CASE("pipeline error paths fail loudly, per-item failures do not") {
    testutil::TempDir dir;
    config::RunConfig cfg = make_cfg(dir, "", "", "");
    const fs::path out = dir / "out";
    fs::create_directories(out);

    // missing inputs name the stage input in the message
    CHECK_THROWS_AS(run_rollout(cfg, {}, out), PipelineError);
    CHECK_THROWS_AS(run_annotate(cfg, {}, out), PipelineError);
    CHECK_THROWS_AS(run_filter_stage(cfg, {}, out), PipelineError);
    CHECK_THROWS_AS(run_report(cfg, {}, out), PipelineError);
    CHECK_THROWS_AS(run_ingest(cfg, {}, out), PipelineError);  // no in/source.jsonl

    // an empty trajectory file has nothing to evaluate
    testutil::write_text(out / "trajectories.jsonl", "");
    CHECK_THROWS_AS(run_evaluate(cfg, {}, out), PipelineError);

    // a corrupted resume ledger stops the stage instead of double-writing
    forge::write_modified_file(out / "kept.jsonl", {ava_mc_record()});
    testutil::write_text(out / "trajectories.jsonl", "{\"question_id\": \"ava-mc\"\n");
    try {
        run_rollout(cfg, {}, out);
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(std::string(e.what()).find("not clean JSONL") != std::string::npos);
        CHECK(std::string(e.what()).find("move it aside") != std::string::npos);
    }
}
