#include "qvqpp/corpus_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

namespace qvqpp {

void canonicalize(RankedList& list, std::size_t depth) {
    std::sort(list.entries.begin(), list.entries.end(), ranks_before);
    if (list.entries.size() > depth) list.entries.resize(depth);
}

namespace detail {

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\v\f";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view token, double& out) {
    if (token.empty()) return false;
    if (token.front() == '+') token.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
}

bool parse_int(std::string_view token, long long& out) {
    if (token.empty()) return false;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
}

}  // namespace detail

namespace {

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
}

template <typename Record>
std::vector<Record> parse_tsv_records(const fs::path& path) {
    auto in = open_input(path);
    std::vector<Record> records;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
        if (detail::trim(view).empty()) continue;
        auto tab = view.find('\t');
        if (tab == std::string_view::npos)
            throw ParseError(path.string(), lineno, "expected id<TAB>text");
        auto id = detail::trim(view.substr(0, tab));
        auto text = view.substr(tab + 1);
        if (id.empty()) throw ParseError(path.string(), lineno, "empty id");
        if (detail::trim(text).empty()) throw ParseError(path.string(), lineno, "empty text");
        if (!seen.emplace(id).second)
            throw ParseError(path.string(), lineno, "duplicate id '" + std::string(id) + "'");
        records.push_back(Record{std::string(id), std::string(text)});
    }
    return records;
}

}  // namespace

std::vector<Query> parse_queries(const fs::path& path) {
    return parse_tsv_records<Query>(path);
}

std::vector<Document> parse_collection(const fs::path& path) {
    return parse_tsv_records<Document>(path);
}

RunMap parse_run(const fs::path& path, std::size_t depth) {
    if (depth == 0) throw Error("run depth must be positive");
    auto in = open_input(path);
    RunMap runs;
    std::map<std::string, std::set<std::string>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_whitespace(line);
        if (fields.empty()) continue;
        if (fields.size() != 6)
            throw ParseError(path.string(), lineno, "expected 6 fields: qid Q0 docid rank score tag");
        double score = 0.0;
        if (!detail::parse_double(fields[4], score))
            throw ParseError(path.string(), lineno, "non-numeric score '" + std::string(fields[4]) + "'");
        std::string qid(fields[0]);
        std::string docid(fields[2]);
        if (!seen[qid].insert(docid).second)
            throw ParseError(path.string(), lineno, "duplicate document " + docid + " for query " + qid);
        auto& list = runs[qid];
        list.query_id = qid;
        list.entries.push_back({std::move(docid), score});
    }
    for (auto& [qid, list] : runs) canonicalize(list, depth);
    return runs;
}

void write_run(const RunMap& lists, std::string_view tag, const fs::path& path) {
    auto out = open_output(path);
    for (const auto& [qid, list] : lists) {
        std::size_t rank = 1;
        for (const auto& e : list.entries) {
            out << fmt::format("{} Q0 {} {} {:.6f} {}\n", qid, e.doc_id, rank++, e.score, tag);
        }
    }
    finish_output(out, path);
}

Qrels parse_qrels(const fs::path& path) {
    auto in = open_input(path);
    Qrels qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_whitespace(line);
        if (fields.empty()) continue;
        if (fields.size() != 4)
            throw ParseError(path.string(), lineno, "expected 4 fields: qid 0 docid grade");
        long long grade = 0;
        if (!detail::parse_int(fields[3], grade))
            throw ParseError(path.string(), lineno, "non-integer grade '" + std::string(fields[3]) + "'");
        if (grade < 0) throw ParseError(path.string(), lineno, "negative grade");
        auto& judged = qrels[std::string(fields[0])];
        auto [it, inserted] = judged.emplace(std::string(fields[2]), static_cast<int>(grade));
        if (!inserted && it->second != grade)
            throw ParseError(path.string(), lineno,
                             "conflicting grades for " + std::string(fields[0]) + "/" + std::string(fields[2]));
    }
    return qrels;
}

std::map<std::string, double> parse_scores(const fs::path& path) {
    auto in = open_input(path);
    std::map<std::string, double> scores;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_whitespace(line);
        if (fields.empty()) continue;
        if (fields.size() != 2) throw ParseError(path.string(), lineno, "expected qid<TAB>value");
        double value = 0.0;
        if (!detail::parse_double(fields[1], value))
            throw ParseError(path.string(), lineno, "non-numeric value '" + std::string(fields[1]) + "'");
        if (!scores.emplace(std::string(fields[0]), value).second)
            throw ParseError(path.string(), lineno, "duplicate id '" + std::string(fields[0]) + "'");
    }
    return scores;
}

void write_scores(const std::map<std::string, double>& scores, const fs::path& path) {
    auto out = open_output(path);
    for (const auto& [qid, value] : scores) out << fmt::format("{}\t{:.12g}\n", qid, value);
    finish_output(out, path);
}

}  // namespace qvqpp
