#include "askbench/config.hpp"
#include "askbench/log.hpp"
#include "askbench/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace {

using askbench::config::RunConfig;
using askbench::pipeline::StageResult;

using StageFn = std::function<StageResult(const RunConfig&, const std::filesystem::path&,
                                          const std::filesystem::path&)>;

struct Stage {
    const char* name;
    const char* help;
    StageFn fn;
};

const std::vector<Stage>& stages() {
    using namespace askbench::pipeline;
    static const std::vector<Stage> kStages = {
        {"ingest", "validate raw problems and canonicalize them into the run directory", run_ingest},
        {"annotate", "mark every instantiated variable in each problem with [brackets]", run_annotate},
        {"perturb", "remove one bracketed variable per problem and rephrase (mc questions)", run_perturb},
        {"inject", "add a plausible-but-useless condition to each mc question (mce questions)",
         run_inject},
        {"filter", "run 16 clarification rollouts per question and keep/drop by the three rules",
         run_filter_stage},
        {"build-bench", "ingest + annotate + perturb + inject + filter in one go", run_build_bench},
        {"rollout", "run clarification episodes over a question set and record trajectories",
         run_rollout},
        {"collect-sft", "rejection-sample correct trajectories into a trainable chat export",
         run_collect_sft},
        {"score-rewards", "turn trajectories into shaped reward records", run_score_rewards},
        {"advantages", "group rewards per question and normalize into advantages", run_advantages},
        {"evaluate", "grade trajectories and aggregate ACC/REQ metrics", run_evaluate},
        {"sweep-turns", "rerun the same questions at several turn caps and compare accuracy",
         run_sweep},
        {"report", "render per-benchmark ACC/REQ tables from eval records", run_report},
    };
    return kStages;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"builds unanswerable math-question benchmarks and drives solver/user clarification "
                 "dialogues against scripted or HTTP chat backends"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    std::vector<std::string> backend_binds;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_turns;
    std::string out_dir;

    app.add_option("--config", config_path, "TOML config file (defaults apply without one)");
    app.add_option("--set", sets, "override a config key: dotted.key=value (repeatable)");
    app.add_option("--backend", backend_binds,
                   "bind a role to a configured backend: role=name (repeatable)");
    app.add_option("--seed", seed, "64-bit seed for variable removal (forge.seed)");
    app.add_option("--max-turns", max_turns, "solver turn cap per episode (run.max_turns)");
    app.add_option("--out", out_dir, "output directory (paths.output_dir)");

    struct Invocation {
        CLI::App* cmd = nullptr;
        std::string in;
        StageFn fn;
    };
    std::vector<Invocation> invocations;
    invocations.reserve(stages().size());
    for (const Stage& stage : stages()) {
        Invocation inv;
        inv.cmd = app.add_subcommand(stage.name, stage.help);
        inv.cmd->fallthrough();  // global flags may follow the subcommand
        inv.fn = stage.fn;
        invocations.push_back(std::move(inv));
        invocations.back().cmd->add_option("--in", invocations.back().in,
                                           "input file (defaults to the stage's usual artifact)");
    }

    CLI11_PARSE(app, argc, argv);

    std::vector<std::string> overrides = sets;
    for (const std::string& bind : backend_binds) {
        size_t eq = bind.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 >= bind.size()) {
            fmt::print(stderr, "error: --backend wants role=name, got '{}'\n", bind);
            return 2;
        }
        overrides.push_back(fmt::format("roles.{}", bind));
    }
    if (seed) overrides.push_back(fmt::format("forge.seed={}", *seed));
    if (max_turns) overrides.push_back(fmt::format("run.max_turns={}", *max_turns));
    if (!out_dir.empty()) overrides.push_back(fmt::format("paths.output_dir={}", out_dir));

    try {
        RunConfig cfg;
        if (config_path.empty()) {
            cfg = askbench::config::config_from_text("", overrides, "<defaults>");
        } else {
            cfg = askbench::config::load_config(config_path, overrides);
        }
        askbench::log::set_level(askbench::log::level_from_name(cfg.log_level));

        for (const Invocation& inv : invocations) {
            if (!inv.cmd->parsed()) continue;
            StageResult result = inv.fn(cfg, std::filesystem::path(inv.in), cfg.output_dir);
            fmt::print(stderr, "{}: {} produced, {} skipped, {} failed\n", inv.cmd->get_name(),
                       result.produced, result.skipped, result.failed);
            return result.ok() ? 0 : 1;
        }
        fmt::print(stderr, "error: no subcommand selected\n");
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
}
