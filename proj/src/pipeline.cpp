#include "askbench/pipeline.hpp"

#include "askbench/concurrency.hpp"
#include "askbench/corpus.hpp"
#include "askbench/dialogue.hpp"
#include "askbench/evaluation.hpp"
#include "askbench/filtering.hpp"
#include "askbench/forge.hpp"
#include "askbench/gateway.hpp"
#include "askbench/log.hpp"
#include "askbench/rewards.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <variant>

namespace askbench::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string trim_copy(std::string_view text) {
    size_t b = 0, e = text.size();
    while (b < e && is_ws(text[b])) ++b;
    while (e > b && is_ws(text[e - 1])) --e;
    return std::string(text.substr(b, e - b));
}

std::vector<json> read_json_lines_strict(const fs::path& path) {
    return corpus::jsonl::read_file<json>(path, [](const json& j, size_t) { return j; });
}

// Resume ledger: ids already present in an output file. A dirty file is a
// hard error; silently rewriting user data is worse than asking them to
// move it aside.
std::set<std::string> existing_ids(const fs::path& path, const char* id_field) {
    std::set<std::string> ids;
    if (!fs::exists(path)) return ids;
    std::vector<json> lines;
    try {
        lines = read_json_lines_strict(path);
    } catch (const std::exception& e) {
        throw PipelineError(fmt::format("output file '{}' is not clean JSONL ({}); move it aside to restart",
                                        path.string(), e.what()));
    }
    for (const json& j : lines) {
        auto it = j.find(id_field);
        if (it == j.end() || !it->is_string()) {
            throw PipelineError(fmt::format("output file '{}' has a record without '{}'", path.string(),
                                            id_field));
        }
        ids.insert(it->get<std::string>());
    }
    return ids;
}

// Line-buffered JSONL appender: every record is flushed whole, so an
// interrupted run leaves a valid prefix.
class Appender {
public:
    explicit Appender(const fs::path& path) : path_(path) {
        out_.open(path, std::ios::binary | std::ios::app);
        if (!out_) throw PipelineError(fmt::format("cannot open '{}' for append", path.string()));
    }
    void write(const json& j) {
        out_ << j.dump() << '\n';
        out_.flush();
        if (!out_) throw PipelineError(fmt::format("write to '{}' failed", path_.string()));
    }

private:
    fs::path path_;
    std::ofstream out_;
};

class FailureManifest {
public:
    FailureManifest(const fs::path& out_dir, std::string_view stage)
        : path_(out_dir / fmt::format("{}_failures.jsonl", stage)), stage_(stage) {
        std::error_code ec;
        fs::remove(path_, ec);  // the manifest describes this run only
    }
    void record(std::string_view id, std::string_view error) {
        if (!out_.is_open()) {
            out_.open(path_, std::ios::binary | std::ios::trunc);
            if (!out_) throw PipelineError(fmt::format("cannot open '{}'", path_.string()));
        }
        out_ << json{{"error", std::string(error)}, {"id", std::string(id)}}.dump() << '\n';
        out_.flush();
        ++count_;
        log::warn(fmt::format("{} failed on {}: {}", stage_, id, error));
    }
    size_t count() const { return count_; }

private:
    fs::path path_;
    std::string stage_;
    std::ofstream out_;
    size_t count_ = 0;
};

void require_exists(const fs::path& path, std::string_view what) {
    if (!fs::exists(path)) {
        throw PipelineError(fmt::format("{} '{}' does not exist", what, path.string()));
    }
}

void ensure_out_dir(const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw PipelineError(fmt::format("cannot create output directory '{}': {}", out_dir.string(),
                                        ec.message()));
    }
}

void write_text_file(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw PipelineError(fmt::format("write to '{}' failed", path.string()));
}

struct ItemResult {
    std::optional<json> record;
    std::string error;
};

std::string complete_text(gateway::Backend& backend, std::vector<gateway::ChatMessage> messages,
                          const config::RunConfig& cfg, std::string tag) {
    gateway::CompletionRequest req;
    req.messages = std::move(messages);
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    req.tag = std::move(tag);
    return backend.complete(req).texts.at(0);
}

// Re-asks the model while `build` rejects its output (mangled annotation,
// leaked brackets, ...), up to three attempts. Transport-level retries
// already live in the gateway, so its errors pass straight through.
template <typename Build>
auto forge_with_retries(gateway::Backend& backend, const std::vector<gateway::ChatMessage>& messages,
                        const config::RunConfig& cfg, const std::string& tag, Build&& build) {
    constexpr int kAttempts = 3;
    std::string last_error;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        std::string reply = complete_text(backend, messages, cfg, tag);
        try {
            return build(reply);
        } catch (const forge::ForgeError& e) {
            last_error = e.what();
        }
    }
    throw forge::ForgeError(
        forge::ForgeErrorKind::ContentMismatch,
        fmt::format("no usable model output after {} attempts (last problem: {})", kAttempts, last_error));
}

enum class InputKind { source, modified };

InputKind sniff_input(const fs::path& path) {
    for (const std::string& line : corpus::jsonl::read_lines(path)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded()) break;
        if (j.contains("modified_question")) return InputKind::modified;
        if (j.contains("question") && j.contains("answer")) return InputKind::source;
        break;
    }
    throw PipelineError(fmt::format("cannot tell whether '{}' holds source problems or forged questions",
                                    path.string()));
}

std::vector<dialogue::EpisodeSpec> load_episode_specs(const fs::path& path,
                                                      dialogue::SolverMode source_mode,
                                                      dialogue::SolverMode modified_mode, int max_turns,
                                                      const config::RunConfig& cfg) {
    std::vector<dialogue::EpisodeSpec> specs;
    if (sniff_input(path) == InputKind::modified) {
        for (const forge::ModifiedQuestion& q : forge::read_modified_file(path)) {
            dialogue::EpisodeSpec spec = dialogue::make_episode_spec(q, modified_mode, max_turns);
            spec.temperature = cfg.temperature;
            spec.max_tokens = cfg.max_tokens;
            specs.push_back(std::move(spec));
        }
    } else {
        for (const corpus::SourceProblem& p : corpus::read_source_file(path)) {
            dialogue::EpisodeSpec spec = dialogue::make_episode_spec(p, source_mode, max_turns);
            spec.temperature = cfg.temperature;
            spec.max_tokens = cfg.max_tokens;
            specs.push_back(std::move(spec));
        }
    }
    return specs;
}

}  // namespace

StageResult run_ingest(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    fs::path input = in.empty() ? fs::path(cfg.input_dir) / "source.jsonl" : in;
    require_exists(input, "ingest input");
    ensure_out_dir(out_dir);

    std::set<std::string> done = existing_ids(out_dir / "source.jsonl", "id");
    FailureManifest failures(out_dir, "ingest");
    Appender out(out_dir / "source.jsonl");

    StageResult result;
    std::vector<std::string> lines = corpus::jsonl::read_lines(input);
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim_copy(lines[i]).empty()) continue;  // raw third-party inputs may pad with blanks
        corpus::SourceProblem p;
        try {
            p = corpus::parse_source_record(lines[i], i);
        } catch (const std::exception& e) {
            failures.record(fmt::format("line-{}", i + 1), e.what());
            continue;
        }
        if (done.count(p.id)) {
            ++result.skipped;
            continue;
        }
        out.write(corpus::source_to_json(p));
        done.insert(p.id);
        ++result.produced;
    }
    result.failed = failures.count();
    return result;
}

StageResult run_annotate(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    fs::path input = in.empty() ? out_dir / "source.jsonl" : in;
    require_exists(input, "annotate input");
    ensure_out_dir(out_dir);
    fs::path output = out_dir / "annotated.jsonl";

    std::vector<corpus::SourceProblem> problems = corpus::read_source_file(input);
    std::set<std::string> done = existing_ids(output, "id");
    const gateway::BackendConfig& backend_cfg = cfg.backend_for("forge");
    std::unique_ptr<gateway::Backend> backend = gateway::make_backend(backend_cfg);

    std::vector<const corpus::SourceProblem*> todo;
    for (const corpus::SourceProblem& p : problems) {
        if (!done.count(p.id)) todo.push_back(&p);
    }

    auto results = parallel_map(todo.size(), backend_cfg.max_concurrency, [&](size_t k) {
        const corpus::SourceProblem& p = *todo[k];
        ItemResult r;
        try {
            forge::AnnotatedQuestion annotation = forge_with_retries(
                *backend, forge::build_forge_prompt(forge::ForgePromptStage::recognize, p.question), cfg,
                p.id, [&](const std::string& reply) {
                    return forge::parse_annotation(p.question, trim_copy(reply), p.id);
                });
            r.record = json{{"annotated", annotation.annotated},
                            {"answer", p.solution},
                            {"id", p.id},
                            {"question", p.question}};
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    });

    FailureManifest failures(out_dir, "annotate");
    Appender out(output);
    StageResult result;
    result.skipped = problems.size() - todo.size();
    for (size_t k = 0; k < results.size(); ++k) {
        if (results[k].record) {
            out.write(*results[k].record);
            ++result.produced;
        } else {
            failures.record(todo[k]->id, results[k].error);
        }
    }
    result.failed = failures.count();
    return result;
}

namespace {

struct AnnotatedRecord {
    std::string id, question, annotated, answer;
};

std::vector<AnnotatedRecord> read_annotated_file(const fs::path& path) {
    return corpus::jsonl::read_file<AnnotatedRecord>(path, [](const json& j, size_t) {
        AnnotatedRecord r;
        r.id = j.at("id").get<std::string>();
        r.question = j.at("question").get<std::string>();
        r.annotated = j.at("annotated").get<std::string>();
        r.answer = j.at("answer").get<std::string>();
        return r;
    });
}

}  // namespace

StageResult run_perturb(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    fs::path input = in.empty() ? out_dir / "annotated.jsonl" : in;
    require_exists(input, "perturb input");
    ensure_out_dir(out_dir);
    fs::path output = out_dir / "mc.jsonl";

    std::vector<AnnotatedRecord> records = read_annotated_file(input);
    std::set<std::string> done = existing_ids(output, "id");
    const gateway::BackendConfig& backend_cfg = cfg.backend_for("forge");
    std::unique_ptr<gateway::Backend> backend = gateway::make_backend(backend_cfg);

    std::vector<const AnnotatedRecord*> todo;
    for (const AnnotatedRecord& r : records) {
        if (!done.count(r.id + "-mc")) todo.push_back(&r);
    }

    auto results = parallel_map(todo.size(), backend_cfg.max_concurrency, [&](size_t k) {
        const AnnotatedRecord& rec = *todo[k];
        ItemResult r;
        try {
            forge::AnnotatedQuestion annotation =
                forge::parse_annotation(rec.question, rec.annotated, rec.id);
            Decimal gold = corpus::extract_gold_answer(rec.answer);
            forge::RemovalPick pick = forge::select_removal(annotation, cfg.seed);
            forge::ModifiedQuestion mq = forge_with_retries(
                *backend, forge::build_forge_prompt(forge::ForgePromptStage::rephrase, pick.gapped), cfg,
                rec.id, [&](const std::string& reply) {
                    return forge::assemble_modified(annotation, pick.removed, reply, std::nullopt, gold);
                });
            r.record = forge::modified_to_json(mq);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    });

    FailureManifest failures(out_dir, "perturb");
    Appender out(output);
    StageResult result;
    result.skipped = records.size() - todo.size();
    for (size_t k = 0; k < results.size(); ++k) {
        if (results[k].record) {
            out.write(*results[k].record);
            ++result.produced;
        } else {
            failures.record(todo[k]->id, results[k].error);
        }
    }
    result.failed = failures.count();
    return result;
}

StageResult run_inject(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    fs::path input = in.empty() ? out_dir / "mc.jsonl" : in;
    require_exists(input, "inject input");
    ensure_out_dir(out_dir);
    fs::path output = out_dir / "mce.jsonl";

    std::vector<forge::ModifiedQuestion> questions = forge::read_modified_file(input);
    std::set<std::string> done = existing_ids(output, "id");
    const gateway::BackendConfig& backend_cfg = cfg.backend_for("forge");
    std::unique_ptr<gateway::Backend> backend = gateway::make_backend(backend_cfg);

    std::vector<const forge::ModifiedQuestion*> todo;
    for (const forge::ModifiedQuestion& q : questions) {
        if (q.stage != forge::Stage::mc) continue;  // mixed inputs: only mc records seed mce
        if (!done.count(q.source_id + "-mce")) todo.push_back(&q);
    }

    auto results = parallel_map(todo.size(), backend_cfg.max_concurrency, [&](size_t k) {
        const forge::ModifiedQuestion& mc = *todo[k];
        ItemResult r;
        try {
            forge::ModifiedQuestion mce = forge_with_retries(
                *backend,
                forge::build_forge_prompt(forge::ForgePromptStage::inject, mc.modified_question), cfg,
                mc.id,
                [&](const std::string& reply) { return forge::with_distractor(mc, reply); });
            r.record = forge::modified_to_json(mce);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    });

    FailureManifest failures(out_dir, "inject");
    Appender out(output);
    StageResult result;
    result.skipped = questions.size() - todo.size();
    for (size_t k = 0; k < results.size(); ++k) {
        if (results[k].record) {
            out.write(*results[k].record);
            ++result.produced;
        } else {
            failures.record(todo[k]->id, results[k].error);
        }
    }
    result.failed = failures.count();
    return result;
}

StageResult run_filter_stage(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    ensure_out_dir(out_dir);
    std::vector<fs::path> inputs;
    if (!in.empty()) {
        require_exists(in, "filter input");
        inputs.push_back(in);
    } else {
        for (const char* name : {"mc.jsonl", "mce.jsonl"}) {
            if (fs::exists(out_dir / name)) inputs.push_back(out_dir / name);
        }
        if (inputs.empty()) {
            throw PipelineError(fmt::format(
                "filter found neither mc.jsonl nor mce.jsonl under '{}'; pass an input file",
                out_dir.string()));
        }
    }

    std::vector<forge::ModifiedQuestion> questions;
    for (const fs::path& path : inputs) {
        std::vector<forge::ModifiedQuestion> batch = forge::read_modified_file(path);
        questions.insert(questions.end(), std::make_move_iterator(batch.begin()),
                         std::make_move_iterator(batch.end()));
    }

    // The report file is the resume ledger; kept/dropped lines ride along
    // with it.
    std::set<std::string> done = existing_ids(out_dir / "filter_reports.jsonl", "question_id");
    const gateway::BackendConfig& solver_cfg = cfg.backend_for("solver");
    std::unique_ptr<gateway::Backend> solver = gateway::make_backend(solver_cfg);
    std::unique_ptr<gateway::Backend> agent = gateway::make_backend(cfg.backend_for("agent"));

    FailureManifest failures(out_dir, "filter");
    Appender kept(out_dir / "kept.jsonl");
    Appender dropped(out_dir / "dropped.jsonl");
    Appender reports(out_dir / "filter_reports.jsonl");

    StageResult result;
    for (const forge::ModifiedQuestion& q : questions) {
        if (done.count(q.id)) {
            ++result.skipped;
            continue;
        }
        try {
            filtering::FilterReport report =
                filtering::run_filter(q, *solver, *agent, cfg.filter, solver_cfg.max_concurrency);
            (report.decision == filtering::FilterDecision::Keep ? kept : dropped)
                .write(forge::modified_to_json(q));
            reports.write(filtering::report_to_json(report));
            done.insert(q.id);
            ++result.produced;
        } catch (const std::exception& e) {
            failures.record(q.id, e.what());
        }
    }
    result.failed = failures.count();
    return result;
}

StageResult run_build_bench(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    StageResult total;
    total += run_ingest(cfg, in, out_dir);
    total += run_annotate(cfg, {}, out_dir);
    total += run_perturb(cfg, {}, out_dir);
    total += run_inject(cfg, {}, out_dir);
    total += run_filter_stage(cfg, {}, out_dir);
    return total;
}

StageResult run_rollout(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    fs::path input = in.empty() ? out_dir / "kept.jsonl" : in;
    require_exists(input, "rollout input");
    ensure_out_dir(out_dir);
    fs::path output = out_dir / "trajectories.jsonl";

    std::vector<dialogue::EpisodeSpec> specs = load_episode_specs(
        input, dialogue::SolverMode::standard, dialogue::SolverMode::standard, cfg.max_turns, cfg);

    std::vector<dialogue::EpisodeSpec> runs;
    runs.reserve(specs.size() * static_cast<size_t>(cfg.rollouts_per_question));
    for (const dialogue::EpisodeSpec& spec : specs) {
        for (int k = 0; k < cfg.rollouts_per_question; ++k) {
            dialogue::EpisodeSpec run = spec;
            if (cfg.rollouts_per_question > 1) run.question_id = fmt::format("{}#{}", spec.question_id, k);
            runs.push_back(std::move(run));
        }
    }

    std::set<std::string> done = existing_ids(output, "question_id");
    const gateway::BackendConfig& solver_cfg = cfg.backend_for("solver");
    std::unique_ptr<gateway::Backend> solver = gateway::make_backend(solver_cfg);
    std::unique_ptr<gateway::Backend> agent = gateway::make_backend(cfg.backend_for("agent"));

    std::vector<const dialogue::EpisodeSpec*> todo;
    for (const dialogue::EpisodeSpec& run : runs) {
        if (!done.count(run.question_id)) todo.push_back(&run);
    }

    auto results = parallel_map(todo.size(), solver_cfg.max_concurrency, [&](size_t k) {
        ItemResult r;
        try {
            r.record = dialogue::trajectory_to_json(dialogue::run_episode(*todo[k], *solver, *agent));
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    });

    FailureManifest failures(out_dir, "rollout");
    Appender out(output);
    StageResult result;
    result.skipped = runs.size() - todo.size();
    for (size_t k = 0; k < results.size(); ++k) {
        if (results[k].record) {
            out.write(*results[k].record);
            ++result.produced;
        } else {
            failures.record(todo[k]->question_id, results[k].error);
        }
    }
    result.failed = failures.count();
    return result;
}

StageResult run_collect_sft(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    fs::path input = in.empty() ? out_dir / "kept.jsonl" : in;
    require_exists(input, "collect-sft input");
    ensure_out_dir(out_dir);
    fs::path output = out_dir / "sft.jsonl";
    fs::path ledger_path = out_dir / "sft_done.jsonl";

    // Forged questions use the heuristic instruction (the question is known
    // unanswerable); pristine source problems keep the standard one.
    std::vector<dialogue::EpisodeSpec> specs = load_episode_specs(
        input, dialogue::SolverMode::standard, dialogue::SolverMode::heuristic, cfg.max_turns, cfg);

    // SFT export records are bare message lists, so resumability lives in a
    // sidecar ledger keyed by question id.
    std::set<std::string> done = existing_ids(ledger_path, "question_id");
    const gateway::BackendConfig& solver_cfg = cfg.backend_for("solver");
    std::unique_ptr<gateway::Backend> solver = gateway::make_backend(solver_cfg);
    std::unique_ptr<gateway::Backend> agent = gateway::make_backend(cfg.backend_for("agent"));

    FailureManifest failures(out_dir, "collect_sft");
    Appender out(output);
    Appender ledger(ledger_path);

    StageResult result;
    for (const dialogue::EpisodeSpec& spec : specs) {
        if (done.count(spec.question_id)) {
            ++result.skipped;
            continue;
        }
        using Slot = std::variant<dialogue::Trajectory, std::string>;
        auto slots = parallel_map(static_cast<size_t>(cfg.sft_rollouts), solver_cfg.max_concurrency,
                                  [&](size_t) -> Slot {
                                      try {
                                          return dialogue::run_episode(spec, *solver, *agent);
                                      } catch (const std::exception& e) {
                                          return std::string(e.what());
                                      }
                                  });
        size_t errors = 0;
        std::string first_error;
        int kept = 0;
        for (const Slot& slot : slots) {
            if (const auto* err = std::get_if<std::string>(&slot)) {
                ++errors;
                if (first_error.empty()) first_error = *err;
                continue;
            }
            const auto& t = std::get<dialogue::Trajectory>(slot);
            if (!evaluation::grade(t).correct) continue;  // rejection sampling keeps correct runs only
            out.write(rewards::sft_messages_to_json(rewards::sft_export(t, spec.question)));
            ++kept;
            ++result.produced;
        }
        if (errors == slots.size()) {
            failures.record(spec.question_id, fmt::format("all rollouts failed: {}", first_error));
            continue;
        }
        ledger.write(json{{"kept", kept}, {"question_id", spec.question_id}});
    }
    result.failed = failures.count();
    return result;
}

StageResult run_score_rewards(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    fs::path input = in.empty() ? out_dir / "trajectories.jsonl" : in;
    require_exists(input, "score-rewards input");
    ensure_out_dir(out_dir);
    fs::path output = out_dir / "rewards.jsonl";

    std::vector<dialogue::Trajectory> trajectories = dialogue::read_trajectory_file(input);
    std::set<std::string> done = existing_ids(output, "trajectory_id");

    FailureManifest failures(out_dir, "score_rewards");
    Appender out(output);
    StageResult result;
    for (const dialogue::Trajectory& t : trajectories) {
        if (done.count(t.question_id)) {
            ++result.skipped;
            continue;
        }
        out.write(rewards::reward_to_json(rewards::reward_for(t, cfg.rewards)));
        done.insert(t.question_id);
        ++result.produced;
    }
    result.failed = failures.count();
    return result;
}

StageResult run_advantages(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    fs::path input = in.empty() ? out_dir / "rewards.jsonl" : in;
    require_exists(input, "advantages input");
    ensure_out_dir(out_dir);
    fs::path output = out_dir / "advantages.jsonl";

    std::vector<rewards::RewardRecord> records = rewards::read_reward_file(input);

    // Rollouts of one question share the id up to the '#k' suffix; groups
    // keep first-appearance order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> groups;
    for (const rewards::RewardRecord& r : records) {
        std::string qid = r.trajectory_id.substr(0, r.trajectory_id.find('#'));
        auto [it, inserted] = groups.try_emplace(qid);
        if (inserted) order.push_back(qid);
        it->second.push_back(r.total);
    }

    std::set<std::string> done = existing_ids(output, "question_id");
    FailureManifest failures(out_dir, "advantages");
    Appender out(output);
    StageResult result;
    for (const std::string& qid : order) {
        if (done.count(qid)) {
            ++result.skipped;
            continue;
        }
        rewards::AdvantageGroup group;
        group.question_id = qid;
        group.rewards = groups[qid];
        group.advantages = rewards::group_advantages(group.rewards, cfg.advantage_epsilon);
        out.write(rewards::advantage_group_to_json(group));
        ++result.produced;
    }
    result.failed = failures.count();
    return result;
}

StageResult run_evaluate(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    (void)cfg;
    fs::path input = in.empty() ? out_dir / "trajectories.jsonl" : in;
    require_exists(input, "evaluate input");
    ensure_out_dir(out_dir);
    fs::path output = out_dir / "eval.jsonl";

    std::vector<dialogue::Trajectory> trajectories = dialogue::read_trajectory_file(input);
    if (trajectories.empty()) {
        throw PipelineError(fmt::format("'{}' holds no trajectories to evaluate", input.string()));
    }

    std::set<std::string> done = existing_ids(output, "question_id");
    Appender out(output);
    StageResult result;
    for (const dialogue::Trajectory& t : trajectories) {
        if (done.count(t.question_id)) {
            ++result.skipped;
            continue;
        }
        out.write(evaluation::eval_to_json(evaluation::grade(t)));
        done.insert(t.question_id);
        ++result.produced;
    }

    std::vector<evaluation::EvalRecord> all = evaluation::read_eval_file(output);
    evaluation::MetricsReport report = evaluation::compute_metrics(all);
    write_text_file(out_dir / "metrics.json", evaluation::metrics_to_json(report).dump() + "\n");
    write_text_file(out_dir / "metrics.txt", evaluation::metrics_table(report));
    return result;
}

StageResult run_sweep(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    fs::path input = in.empty() ? out_dir / "kept.jsonl" : in;
    require_exists(input, "sweep-turns input");
    ensure_out_dir(out_dir);
    fs::path output = out_dir / "sweep_eval.jsonl";

    std::vector<dialogue::EpisodeSpec> specs = load_episode_specs(
        input, dialogue::SolverMode::standard, dialogue::SolverMode::standard, cfg.max_turns, cfg);
    if (specs.empty()) {
        throw PipelineError(fmt::format("'{}' holds no questions to sweep", input.string()));
    }

    std::vector<dialogue::EpisodeSpec> runs;
    for (int cap : cfg.sweep_caps) {
        for (const dialogue::EpisodeSpec& spec : specs) {
            dialogue::EpisodeSpec run = spec;
            run.max_turns = cap;
            runs.push_back(std::move(run));
        }
    }

    // Composite resume key: the same question reruns once per cap.
    std::set<std::string> done;
    if (fs::exists(output)) {
        for (const json& j : read_json_lines_strict(output)) {
            done.insert(fmt::format("{}@{}", j.at("question_id").get<std::string>(),
                                    j.at("max_turns").get<int>()));
        }
    }

    const gateway::BackendConfig& solver_cfg = cfg.backend_for("solver");
    std::unique_ptr<gateway::Backend> solver = gateway::make_backend(solver_cfg);
    std::unique_ptr<gateway::Backend> agent = gateway::make_backend(cfg.backend_for("agent"));

    std::vector<const dialogue::EpisodeSpec*> todo;
    for (const dialogue::EpisodeSpec& run : runs) {
        if (!done.count(fmt::format("{}@{}", run.question_id, run.max_turns))) todo.push_back(&run);
    }

    auto results = parallel_map(todo.size(), solver_cfg.max_concurrency, [&](size_t k) {
        ItemResult r;
        try {
            r.record = evaluation::eval_to_json(
                evaluation::grade(dialogue::run_episode(*todo[k], *solver, *agent)));
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    });

    FailureManifest failures(out_dir, "sweep_turns");
    Appender out(output);
    StageResult result;
    result.skipped = runs.size() - todo.size();
    for (size_t k = 0; k < results.size(); ++k) {
        if (results[k].record) {
            out.write(*results[k].record);
            ++result.produced;
        } else {
            failures.record(fmt::format("{}@{}", todo[k]->question_id, todo[k]->max_turns),
                            results[k].error);
        }
    }
    result.failed = failures.count();

    std::vector<evaluation::EvalRecord> all = evaluation::read_eval_file(output);
    if (!all.empty()) {
        evaluation::MetricsReport report = evaluation::compute_metrics(all);
        write_text_file(out_dir / "sweep_metrics.json", evaluation::metrics_to_json(report).dump() + "\n");
        write_text_file(out_dir / "sweep_metrics.txt", evaluation::metrics_table(report));
    }
    return result;
}

StageResult run_report(const config::RunConfig& cfg, const fs::path& in, const fs::path& out_dir) {
    (void)cfg;
    fs::path input = in.empty() ? out_dir / "eval.jsonl" : in;
    require_exists(input, "report input");
    ensure_out_dir(out_dir);

    std::vector<evaluation::EvalRecord> records = evaluation::read_eval_file(input);
    if (records.empty()) {
        throw PipelineError(fmt::format("'{}' holds no eval records to report on", input.string()));
    }

    std::map<std::string, std::vector<evaluation::EvalRecord>> by_stage;
    for (const evaluation::EvalRecord& r : records) {
        by_stage[std::string(evaluation::eval_stage_name(r.stage))].push_back(r);
    }

    json report = json::object();
    std::string table = fmt::format("{:<10} {:>6} {:>8} {:>8}\n", "benchmark", "n", "acc", "req");
    auto add_row = [&](const std::string& name, const std::vector<evaluation::EvalRecord>& rows) {
        evaluation::MetricsReport m = evaluation::compute_metrics(rows);
        report[name] = evaluation::metrics_to_json(m);
        table += fmt::format("{:<10} {:>6} {:>8} {:>8}\n", name, m.n,
                             evaluation::format_percent(m.acc_centi),
                             evaluation::format_percent(m.req_centi));
    };
    for (const auto& [stage, rows] : by_stage) add_row(stage, rows);
    add_row("overall", records);

    write_text_file(out_dir / "report.json", report.dump() + "\n");
    write_text_file(out_dir / "report.txt", table);
    fmt::print("{}", table);

    StageResult result;
    result.produced = by_stage.size() + 1;
    return result;
}

}  // namespace askbench::pipeline
