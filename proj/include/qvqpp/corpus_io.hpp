#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qvqpp/types.hpp"

namespace qvqpp {

namespace fs = std::filesystem;

// Tab-separated `id<TAB>text` files. Blank lines are skipped; any other
// malformed line is rejected with its line number.
std::vector<Query> parse_queries(const fs::path& path);
std::vector<Document> parse_collection(const fs::path& path);

/// Reads a TREC run (`qid Q0 docid rank score tag`). The rank column is
/// ignored: each list is re-sorted canonically and truncated to `depth`.
RunMap parse_run(const fs::path& path, std::size_t depth);

/// Writes a TREC run with 1-based ranks and six-decimal scores.
void write_run(const RunMap& lists, std::string_view tag, const fs::path& path);

/// Reads TREC qrels (`qid 0 docid grade`).
Qrels parse_qrels(const fs::path& path);

/// Two-column `qid<TAB>value` files used for predictions and ground-truth
/// metric values. Duplicate ids are rejected.
std::map<std::string, double> parse_scores(const fs::path& path);
void write_scores(const std::map<std::string, double>& scores, const fs::path& path);

namespace detail {

std::vector<std::string_view> split_whitespace(std::string_view line);
std::string_view trim(std::string_view s);
bool parse_double(std::string_view token, double& out);
bool parse_int(std::string_view token, long long& out);

}  // namespace detail

}  // namespace qvqpp
