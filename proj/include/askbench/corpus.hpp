#pragma once

#include "askbench/decimal.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace askbench::corpus {

enum class CorpusErrorKind {
    NoMarker,
    NotNumeric,
    MalformedJson,
    MissingField,
    Io,
    SchemaViolation,
};

class CorpusError : public std::runtime_error {
public:
    CorpusError(CorpusErrorKind kind, const std::string& message, int line = 0)
        : std::runtime_error(message), kind_(kind), line_(line) {}

    CorpusErrorKind kind() const { return kind_; }
    // 1-based line number for per-line failures, 0 otherwise.
    int line() const { return line_; }

private:
    CorpusErrorKind kind_;
    int line_;
};

// An original, answerable problem with its gold numeric answer. The JSONL
// field carrying the reference solution is named "answer" (GSM8K layout);
// gold_answer is the parsed "#### " marker payload.
struct SourceProblem {
    std::string id;
    std::string question;
    std::string solution;
    Decimal gold_answer;
};

// Numeric payload of the last line starting "#### ", after stripping commas,
// currency signs, percent signs and surrounding whitespace. The last marker
// wins: solutions may quote the marker mid-text.
Decimal extract_gold_answer(std::string_view solution);

// line: one JSON object {question, answer[, id]}. When id is absent it
// becomes the zero-padded (width 6) 0-based record index.
SourceProblem parse_source_record(std::string_view line, size_t line_index = 0);

nlohmann::json source_to_json(const SourceProblem& p);
SourceProblem source_from_json(const nlohmann::json& j, size_t line_index);

namespace jsonl {

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Byte-stable writer: one compact JSON object per line, keys in nlohmann's
// (alphabetical) order, '\n'-terminated, binary stream so output is
// identical across platforms. Returns the record count.
size_t write_json_lines(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);

// Per-line failures surface as SchemaViolation carrying the 1-based line
// number; ToRecord is json -> T and may throw anything.
template <typename T, typename ToRecord>
std::vector<T> read_file(const std::filesystem::path& path, ToRecord&& to_record) {
    std::vector<std::string> lines = read_lines(path);
    std::vector<T> out;
    out.reserve(lines.size());
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            throw CorpusError(CorpusErrorKind::SchemaViolation,
                              "line " + std::to_string(i + 1) + ": blank line",
                              static_cast<int>(i + 1));
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            throw CorpusError(CorpusErrorKind::SchemaViolation,
                              "line " + std::to_string(i + 1) + ": malformed JSON: " + e.what(),
                              static_cast<int>(i + 1));
        }
        try {
            out.push_back(to_record(j, i));
        } catch (const CorpusError&) {
            throw;
        } catch (const std::exception& e) {
            throw CorpusError(CorpusErrorKind::SchemaViolation,
                              "line " + std::to_string(i + 1) + ": " + e.what(),
                              static_cast<int>(i + 1));
        }
    }
    return out;
}

template <typename T, typename ToJson>
size_t write_file(const std::filesystem::path& path, const std::vector<T>& records, ToJson&& to_json) {
    std::vector<nlohmann::json> lines;
    lines.reserve(records.size());
    for (const T& r : records) lines.push_back(to_json(r));
    return write_json_lines(path, lines);
}

}  // namespace jsonl

std::vector<SourceProblem> read_source_file(const std::filesystem::path& path);
size_t write_source_file(const std::filesystem::path& path, const std::vector<SourceProblem>& records);

}  // namespace askbench::corpus
