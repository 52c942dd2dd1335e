#pragma once

#include "askbench/config.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace askbench::pipeline {

// Input problems, unreadable state files, empty required inputs: the
// caller's problem, mapped to exit code 2 by the CLI.
class PipelineError : public std::runtime_error {
public:
    explicit PipelineError(const std::string& message) : std::runtime_error(message) {}
};

struct StageResult {
    size_t produced = 0;  // records newly written this run
    size_t skipped = 0;   // records already present (resume)
    size_t failed = 0;    // per-item failures, recorded in the stage's failure manifest

    bool ok() const { return failed == 0; }
    StageResult& operator+=(const StageResult& other) {
        produced += other.produced;
        skipped += other.skipped;
        failed += other.failed;
        return *this;
    }
};

// Every stage appends to its output keyed by record id, skipping ids that
// are already there, so interrupted runs resume and completed runs are
// idempotent. Per-item failures go to <out_dir>/<stage>_failures.jsonl and
// never abort the stage. An empty `in` selects the stage's default input.

StageResult run_ingest(const config::RunConfig& cfg, const std::filesystem::path& in,
                       const std::filesystem::path& out_dir);
StageResult run_annotate(const config::RunConfig& cfg, const std::filesystem::path& in,
                         const std::filesystem::path& out_dir);
StageResult run_perturb(const config::RunConfig& cfg, const std::filesystem::path& in,
                        const std::filesystem::path& out_dir);
StageResult run_inject(const config::RunConfig& cfg, const std::filesystem::path& in,
                       const std::filesystem::path& out_dir);
StageResult run_filter_stage(const config::RunConfig& cfg, const std::filesystem::path& in,
                             const std::filesystem::path& out_dir);
StageResult run_build_bench(const config::RunConfig& cfg, const std::filesystem::path& in,
                            const std::filesystem::path& out_dir);
StageResult run_rollout(const config::RunConfig& cfg, const std::filesystem::path& in,
                        const std::filesystem::path& out_dir);
StageResult run_collect_sft(const config::RunConfig& cfg, const std::filesystem::path& in,
                            const std::filesystem::path& out_dir);
StageResult run_score_rewards(const config::RunConfig& cfg, const std::filesystem::path& in,
                              const std::filesystem::path& out_dir);
StageResult run_advantages(const config::RunConfig& cfg, const std::filesystem::path& in,
                           const std::filesystem::path& out_dir);
StageResult run_evaluate(const config::RunConfig& cfg, const std::filesystem::path& in,
                         const std::filesystem::path& out_dir);
StageResult run_sweep(const config::RunConfig& cfg, const std::filesystem::path& in,
                      const std::filesystem::path& out_dir);
StageResult run_report(const config::RunConfig& cfg, const std::filesystem::path& in,
                       const std::filesystem::path& out_dir);

}  // namespace askbench::pipeline
