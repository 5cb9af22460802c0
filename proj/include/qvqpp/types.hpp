#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qvqpp {

/// Raised for every malformed input, violated precondition and I/O failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parse failure that remembers the offending 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct Query {
    std::string id;
    std::string text;
};

struct Document {
    std::string id;
    std::string text;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Ordered retrieval output for one query. Canonical order is score
/// descending with doc_id ascending on ties.
struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> entries;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }

    friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Canonical ordering predicate: higher score first, then smaller id.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

/// Sorts entries into canonical order and truncates to depth.
void canonicalize(RankedList& list, std::size_t depth = static_cast<std::size_t>(-1));

using RunMap = std::map<std::string, RankedList>;

/// query_id -> doc_id -> grade
using Qrels = std::map<std::string, std::map<std::string, int>>;

}  // namespace qvqpp
