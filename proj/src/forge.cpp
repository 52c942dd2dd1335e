#include "askbench/forge.hpp"

#include "askbench/corpus.hpp"
#include "askbench/prompts.hpp"

#include <fmt/format.h>

#include <cctype>
#include <limits>

namespace askbench::forge {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool has_brackets(std::string_view text) {
    return text.find('[') != std::string_view::npos || text.find(']') != std::string_view::npos;
}

std::string trim(std::string_view text) {
    size_t b = 0, e = text.size();
    while (b < e && is_ws(text[b])) ++b;
    while (e > b && is_ws(text[e - 1])) --e;
    return std::string(text.substr(b, e - b));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string_view stage_name(Stage stage) { return stage == Stage::mc ? "mc" : "mce"; }

Stage stage_from_name(std::string_view name) {
    if (name == "mc") return Stage::mc;
    if (name == "mce") return Stage::mce;
    throw ForgeError(ForgeErrorKind::ContentMismatch, fmt::format("unknown stage '{}'", name));
}

std::vector<gateway::ChatMessage> build_forge_prompt(ForgePromptStage stage, std::string_view payload) {
    std::string content;
    switch (stage) {
        case ForgePromptStage::recognize:
            content = prompts::render_recognize(payload);
            break;
        case ForgePromptStage::rephrase:
            content = prompts::render_rephrase(payload);
            break;
        case ForgePromptStage::inject:
            content = prompts::render_inject(payload);
            break;
    }
    return {{gateway::Role::user, std::move(content)}};
}

AnnotatedQuestion parse_annotation(std::string_view original, std::string_view annotated,
                                   std::string source_id) {
    if (original.empty()) throw ForgeError(ForgeErrorKind::EmptyInput, "original question is empty");
    if (annotated.empty()) throw ForgeError(ForgeErrorKind::EmptyInput, "annotated question is empty");

    // Pass 1: strip brackets, record bracket intervals as index ranges over
    // the stripped text, enforce single-level balance.
    std::string stripped;
    stripped.reserve(annotated.size());
    struct Interval {
        size_t begin, end;  // over stripped
    };
    std::vector<Interval> intervals;
    int depth = 0;
    size_t open_at = 0;
    for (char c : annotated) {
        if (c == '[') {
            if (depth != 0) throw ForgeError(ForgeErrorKind::Unbalanced, "nested '[' in annotation");
            depth = 1;
            open_at = stripped.size();
        } else if (c == ']') {
            if (depth != 1) throw ForgeError(ForgeErrorKind::Unbalanced, "']' without matching '[' in annotation");
            depth = 0;
            intervals.push_back({open_at, stripped.size()});
        } else {
            stripped.push_back(c);
        }
    }
    if (depth != 0) throw ForgeError(ForgeErrorKind::Unbalanced, "'[' without matching ']' in annotation");
    if (intervals.empty()) throw ForgeError(ForgeErrorKind::NoVariables, "annotation marks no variables");

    // Pass 2: align stripped text to the original, tolerating whitespace-run
    // differences. Non-whitespace bytes must match one-for-one; a run of
    // whitespace on one side pairs with a run on the other.
    constexpr size_t kUnmapped = std::numeric_limits<size_t>::max();
    std::vector<size_t> to_original(stripped.size(), kUnmapped);
    size_t i = 0, j = 0;
    const size_t on = original.size(), sn = stripped.size();
    auto mismatch = [&]() -> ForgeError {
        return ForgeError(ForgeErrorKind::ContentMismatch,
                          fmt::format("annotation text diverges from the original near byte {}", i));
    };
    while (i < on && is_ws(original[i])) ++i;
    while (j < sn && is_ws(stripped[j])) ++j;
    while (i < on || j < sn) {
        if (i < on && j < sn && !is_ws(original[i]) && !is_ws(stripped[j])) {
            if (original[i] != stripped[j]) throw mismatch();
            to_original[j] = i;
            ++i;
            ++j;
            continue;
        }
        bool ws_i = i < on && is_ws(original[i]);
        bool ws_j = j < sn && is_ws(stripped[j]);
        if (ws_i && ws_j) {
            while (i < on && is_ws(original[i])) ++i;
            while (j < sn && is_ws(stripped[j])) ++j;
            if ((i == on) != (j == sn)) throw mismatch();
            continue;
        }
        // Trailing whitespace on exactly one side is fine; anything else is
        // a real divergence.
        if (ws_i && j == sn) {
            while (i < on && is_ws(original[i])) ++i;
            if (i != on) throw mismatch();
            continue;
        }
        if (ws_j && i == on) {
            while (j < sn && is_ws(stripped[j])) ++j;
            if (j != sn) throw mismatch();
            continue;
        }
        throw mismatch();
    }

    AnnotatedQuestion out;
    out.source_id = std::move(source_id);
    out.original = std::string(original);
    out.annotated = std::string(annotated);
    for (const auto& iv : intervals) {
        size_t first = iv.begin;
        while (first < iv.end && to_original[first] == kUnmapped) ++first;
        size_t last = iv.end;
        while (last > first && (last == iv.end || to_original[last] == kUnmapped)) --last;
        if (first >= iv.end || to_original[first] == kUnmapped) {
            throw ForgeError(ForgeErrorKind::ContentMismatch, "annotation marks an empty span");
        }
        VariableSpan span;
        span.start = to_original[first];
        span.end = to_original[last] + 1;
        span.text = out.original.substr(span.start, span.end - span.start);
        if (!out.variables.empty() && span.start < out.variables.back().end) {
            throw ForgeError(ForgeErrorKind::ContentMismatch, "annotation spans overlap");
        }
        out.variables.push_back(std::move(span));
    }
    return out;
}

RemovalPick select_removal(const AnnotatedQuestion& annotation, std::uint64_t seed) {
    if (annotation.variables.empty()) {
        throw ForgeError(ForgeErrorKind::NoVariables, "annotation has no variables to remove");
    }
    std::uint64_t mixed = splitmix64(seed ^ gateway::fnv1a64(annotation.source_id));
    size_t index = static_cast<size_t>(mixed % annotation.variables.size());

    RemovalPick pick;
    pick.removed = annotation.variables[index];
    const std::string& orig = annotation.original;
    std::string gapped = orig.substr(0, pick.removed.start) + orig.substr(pick.removed.end);
    // Collapse the whitespace run the deletion may have produced at the seam,
    // then trim. No grammatical repair beyond that.
    size_t seam = pick.removed.start;
    if (seam > 0 && seam < gapped.size() && is_ws(gapped[seam - 1]) && is_ws(gapped[seam])) {
        size_t run_end = seam;
        while (run_end < gapped.size() && is_ws(gapped[run_end])) ++run_end;
        gapped.erase(seam, run_end - seam);
    }
    pick.gapped = trim(gapped);
    if (pick.gapped.empty()) {
        throw ForgeError(ForgeErrorKind::EmptyInput, "removal left an empty question");
    }
    return pick;
}

ModifiedQuestion assemble_modified(const AnnotatedQuestion& annotation, const VariableSpan& removed,
                                   std::string_view rephrased, std::optional<std::string> distractor,
                                   const Decimal& gold) {
    if (annotation.source_id.empty()) {
        throw ForgeError(ForgeErrorKind::EmptyInput, "annotation has no source id");
    }
    std::string rephrased_clean = trim(rephrased);
    if (rephrased_clean.empty()) throw ForgeError(ForgeErrorKind::EmptyInput, "rephrased question is empty");
    if (has_brackets(rephrased_clean)) {
        throw ForgeError(ForgeErrorKind::BracketLeak, "rephrased question still contains brackets");
    }
    if (distractor) {
        *distractor = trim(*distractor);
        if (distractor->empty()) throw ForgeError(ForgeErrorKind::EmptyInput, "distractor question is empty");
        if (has_brackets(*distractor)) {
            throw ForgeError(ForgeErrorKind::BracketLeak, "distractor question still contains brackets");
        }
    }

    ModifiedQuestion q;
    q.stage = distractor ? Stage::mce : Stage::mc;
    q.source_id = annotation.source_id;
    q.id = fmt::format("{}-{}", annotation.source_id, stage_name(q.stage));
    q.original_question = annotation.original;
    q.annotated_question = annotation.annotated;
    q.removed_variable = removed.text;
    q.modified_question = distractor ? *distractor : rephrased_clean;
    q.distractor = std::move(distractor);
    q.gold_answer = gold;
    return q;
}

ModifiedQuestion with_distractor(const ModifiedQuestion& mc, std::string_view injected) {
    if (mc.stage != Stage::mc) {
        throw ForgeError(ForgeErrorKind::ContentMismatch, "distractors are injected into mc records");
    }
    std::string text = trim(injected);
    if (text.empty()) throw ForgeError(ForgeErrorKind::EmptyInput, "distractor question is empty");
    if (has_brackets(text)) {
        throw ForgeError(ForgeErrorKind::BracketLeak, "distractor question still contains brackets");
    }
    ModifiedQuestion q = mc;
    q.stage = Stage::mce;
    q.id = fmt::format("{}-{}", q.source_id, stage_name(Stage::mce));
    q.modified_question = text;
    q.distractor = std::move(text);
    return q;
}

nlohmann::json modified_to_json(const ModifiedQuestion& q) {
    nlohmann::json j{
        {"id", q.id},
        {"source_id", q.source_id},
        {"stage", std::string(stage_name(q.stage))},
        {"original_question", q.original_question},
        {"annotated_question", q.annotated_question},
        {"removed_variable", q.removed_variable},
        {"modified_question", q.modified_question},
        {"gold_answer", q.gold_answer.to_string()},
    };
    if (q.distractor) {
        j["distractor"] = *q.distractor;
    } else {
        j["distractor"] = nullptr;
    }
    return j;
}

ModifiedQuestion modified_from_json(const nlohmann::json& j) {
    ModifiedQuestion q;
    try {
        q.id = j.at("id").get<std::string>();
        q.source_id = j.at("source_id").get<std::string>();
        q.stage = stage_from_name(j.at("stage").get<std::string>());
        q.original_question = j.at("original_question").get<std::string>();
        q.annotated_question = j.at("annotated_question").get<std::string>();
        q.removed_variable = j.at("removed_variable").get<std::string>();
        q.modified_question = j.at("modified_question").get<std::string>();
        const auto& d = j.at("distractor");
        if (!d.is_null()) q.distractor = d.get<std::string>();
        auto gold = Decimal::parse(j.at("gold_answer").get<std::string>());
        if (!gold) throw ForgeError(ForgeErrorKind::ContentMismatch, "gold_answer is not a canonical decimal");
        q.gold_answer = *gold;
    } catch (const nlohmann::json::exception& e) {
        throw ForgeError(ForgeErrorKind::ContentMismatch, fmt::format("bad modified-question record: {}", e.what()));
    }
    if ((q.stage == Stage::mce) != q.distractor.has_value()) {
        throw ForgeError(ForgeErrorKind::ContentMismatch,
                         "stage and distractor disagree: mce records carry a distractor, mc records do not");
    }
    if (has_brackets(q.modified_question)) {
        throw ForgeError(ForgeErrorKind::BracketLeak, "modified_question contains annotation brackets");
    }
    return q;
}

std::vector<ModifiedQuestion> read_modified_file(const std::filesystem::path& path) {
    return corpus::jsonl::read_file<ModifiedQuestion>(
        path, [](const nlohmann::json& j, size_t) { return modified_from_json(j); });
}

size_t write_modified_file(const std::filesystem::path& path, const std::vector<ModifiedQuestion>& records) {
    return corpus::jsonl::write_file<ModifiedQuestion>(
        path, records, [](const ModifiedQuestion& q) { return modified_to_json(q); });
}

}  // namespace askbench::forge
