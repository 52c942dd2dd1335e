#include "askbench/corpus.hpp"

#include <fmt/core.h>

namespace askbench::corpus {

Decimal extract_gold_answer(std::string_view solution) {
    constexpr std::string_view kMarker = "#### ";

    std::string_view payload;
    bool found = false;
    size_t pos = 0;
    while (pos <= solution.size()) {
        size_t eol = solution.find('\n', pos);
        std::string_view line = solution.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        if (line.substr(0, kMarker.size()) == kMarker) {
            payload = line.substr(kMarker.size());
            found = true;
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    if (!found) throw CorpusError(CorpusErrorKind::NoMarker, "no \"#### \" marker line in solution");

    auto parsed = Decimal::parse_loose(payload);
    if (!parsed) {
        throw CorpusError(CorpusErrorKind::NotNumeric,
                          fmt::format("marker payload \"{}\" is not a decimal", std::string(payload)));
    }
    return *parsed;
}

SourceProblem parse_source_record(std::string_view line, size_t line_index) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw CorpusError(CorpusErrorKind::MalformedJson, std::string("malformed JSON: ") + e.what());
    }
    return source_from_json(j, line_index);
}

SourceProblem source_from_json(const nlohmann::json& j, size_t line_index) {
    if (!j.is_object()) throw CorpusError(CorpusErrorKind::MalformedJson, "record is not a JSON object");
    for (const char* field : {"question", "answer"}) {
        if (!j.contains(field) || !j[field].is_string()) {
            throw CorpusError(CorpusErrorKind::MissingField, fmt::format("missing string field \"{}\"", field));
        }
    }
    SourceProblem p;
    p.question = j["question"].get<std::string>();
    p.solution = j["answer"].get<std::string>();
    p.gold_answer = extract_gold_answer(p.solution);
    if (j.contains("id") && j["id"].is_string() && !j["id"].get<std::string>().empty()) {
        p.id = j["id"].get<std::string>();
    } else {
        p.id = fmt::format("{:06}", line_index);
    }
    return p;
}

nlohmann::json source_to_json(const SourceProblem& p) {
    return nlohmann::json{{"answer", p.solution}, {"id", p.id}, {"question", p.question}};
}

namespace jsonl {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError(CorpusErrorKind::Io, "cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (in.bad()) throw CorpusError(CorpusErrorKind::Io, "read error on " + path.string());
    return lines;
}

size_t write_json_lines(const std::filesystem::path& path, const std::vector<nlohmann::json>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CorpusError(CorpusErrorKind::Io, "cannot open " + path.string() + " for writing");
    for (const nlohmann::json& j : records) {
        out << j.dump() << '\n';
    }
    out.flush();
    if (!out) throw CorpusError(CorpusErrorKind::Io, "write error on " + path.string());
    return records.size();
}

}  // namespace jsonl

std::vector<SourceProblem> read_source_file(const std::filesystem::path& path) {
    return jsonl::read_file<SourceProblem>(
        path, [](const nlohmann::json& j, size_t i) { return source_from_json(j, i); });
}

size_t write_source_file(const std::filesystem::path& path, const std::vector<SourceProblem>& records) {
    return jsonl::write_file(path, records, source_to_json);
}

}  // namespace askbench::corpus
