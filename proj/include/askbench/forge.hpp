#pragma once

#include "askbench/decimal.hpp"
#include "askbench/gateway.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace askbench::forge {

enum class ForgeErrorKind { ContentMismatch, Unbalanced, NoVariables, BracketLeak, EmptyInput };

class ForgeError : public std::runtime_error {
public:
    ForgeError(ForgeErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    ForgeErrorKind kind() const { return kind_; }

private:
    ForgeErrorKind kind_;
};

// Byte span into the *original* question text. text == original[start..end).
struct VariableSpan {
    size_t start = 0;
    size_t end = 0;
    std::string text;
};

struct AnnotatedQuestion {
    std::string source_id;
    std::string original;
    std::string annotated;
    std::vector<VariableSpan> variables;  // non-overlapping, ascending
};

enum class Stage { mc, mce };

std::string_view stage_name(Stage stage);
Stage stage_from_name(std::string_view name);

struct ModifiedQuestion {
    std::string id;
    std::string source_id;
    Stage stage = Stage::mc;
    std::string original_question;
    std::string annotated_question;
    std::string removed_variable;
    std::string modified_question;
    std::optional<std::string> distractor;  // present iff stage == mce
    Decimal gold_answer;
};

enum class ForgePromptStage { recognize, rephrase, inject };

// Verbatim stage template with the payload substituted; a single user
// message.
std::vector<gateway::ChatMessage> build_forge_prompt(ForgePromptStage stage, std::string_view payload);

// Extracts bracketed spans left to right and validates that stripping the
// brackets yields the original up to whitespace normalization (runs of
// whitespace collapse to one space, ends trimmed). Span offsets are exact
// against the original even when the annotation perturbed spacing.
AnnotatedQuestion parse_annotation(std::string_view original, std::string_view annotated,
                                   std::string source_id = {});

struct RemovalPick {
    VariableSpan removed;
    std::string gapped;  // original with the span deleted, seam whitespace collapsed
};

// Pinned, platform-independent pick: splitmix64(seed XOR fnv1a64(source_id))
// mod |variables|. Pure function of (annotation, seed).
RemovalPick select_removal(const AnnotatedQuestion& annotation, std::uint64_t seed);

// stage mc when distractor is absent, mce otherwise; id gets the matching
// "-mc"/"-mce" suffix. For mce the distractor argument is the injector's
// full output question and becomes modified_question.
ModifiedQuestion assemble_modified(const AnnotatedQuestion& annotation, const VariableSpan& removed,
                                   std::string_view rephrased, std::optional<std::string> distractor,
                                   const Decimal& gold);

// Upgrades an mc record to its mce sibling: the injector's full output
// question becomes modified_question and is kept as the distractor.
ModifiedQuestion with_distractor(const ModifiedQuestion& mc, std::string_view injected);

nlohmann::json modified_to_json(const ModifiedQuestion& q);
ModifiedQuestion modified_from_json(const nlohmann::json& j);

std::vector<ModifiedQuestion> read_modified_file(const std::filesystem::path& path);
size_t write_modified_file(const std::filesystem::path& path, const std::vector<ModifiedQuestion>& records);

}  // namespace askbench::forge
