#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qvqpp/types.hpp"

namespace qvqpp {

/// Lowercases ASCII, splits on runs of non-alphanumeric bytes and drops
/// stopwords. Bytes >= 0x80 count as word characters so UTF-8 sequences
/// stay inside their token. No stemming.
std::vector<std::string> tokenize(std::string_view text);

/// The built-in English stopword list, sorted.
std::span<const std::string_view> stopwords();
bool is_stopword(std::string_view token);

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

/// ln(1 + (N - df + 0.5) / (df + 0.5)); always positive for df <= N.
double bm25_idf(std::uint64_t item_count, std::uint64_t df);

/// Contribution of one term occurrence profile to an item's BM25 score.
double bm25_term_weight(const Bm25Params& params, double idf, double tf, double length, double avgdl);

struct Posting {
    std::uint32_t item;
    std::uint32_t tf;
};

struct TermCount {
    std::uint32_t term;
    std::uint32_t tf;
};

struct IndexItem {
    std::string_view id;
    std::string_view text;
};

/// Immutable inverted index with a forward (per-item) term view. Item
/// ordinals follow input order.
class InvertedIndex {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    InvertedIndex() = default;

    static InvertedIndex build(std::span<const IndexItem> items, Bm25Params params = {});

    std::size_t item_count() const noexcept { return item_ids_.size(); }
    std::size_t term_count() const noexcept { return terms_.size(); }
    std::uint64_t total_tokens() const noexcept { return total_tokens_; }
    double avgdl() const noexcept;
    const Bm25Params& params() const noexcept { return params_; }

    const std::string& item_id(std::uint32_t ordinal) const { return item_ids_.at(ordinal); }
    std::optional<std::uint32_t> item_ordinal(std::string_view id) const;
    std::uint32_t item_length(std::uint32_t ordinal) const { return lengths_.at(ordinal); }
    std::span<const TermCount> item_terms(std::uint32_t ordinal) const { return forward_.at(ordinal); }

    const std::string& term(std::uint32_t term_id) const { return terms_.at(term_id); }
    std::optional<std::uint32_t> term_id(std::string_view term) const;
    std::span<const Posting> postings(std::uint32_t term_id) const { return postings_.at(term_id); }
    std::uint64_t df(std::uint32_t term_id) const { return postings_.at(term_id).size(); }
    std::uint64_t cf(std::uint32_t term_id) const { return cf_.at(term_id); }

    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

private:
    void rebuild_lookups();

    Bm25Params params_;
    std::vector<std::string> item_ids_;
    std::vector<std::uint32_t> lengths_;
    std::vector<std::vector<TermCount>> forward_;
    std::vector<std::string> terms_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::uint64_t> cf_;
    std::uint64_t total_tokens_ = 0;

    std::unordered_map<std::string, std::uint32_t> item_lookup_;
    std::unordered_map<std::string, std::uint32_t> term_lookup_;
};

/// Builds an index over anything exposing `id` and `text` members.
template <typename Record>
InvertedIndex build_index(const std::vector<Record>& records, Bm25Params params = {}) {
    std::vector<IndexItem> items;
    items.reserve(records.size());
    for (const auto& r : records) items.push_back({r.id, r.text});
    return InvertedIndex::build(items, params);
}

/// Top-`depth` items by BM25 for a bag of query terms. Repeated terms count
/// with their multiplicity. Zero-score items are never returned; ties go to
/// the smaller item id.
RankedList bm25_retrieve(const InvertedIndex& index, std::span<const std::string> terms, std::size_t depth);

struct PseudoQuery {
    std::string source_doc_id;
    std::vector<std::string> terms;

    bool empty() const noexcept { return terms.empty(); }
};

/// The `m` most frequent tokens of the document, ties alphabetical.
PseudoQuery make_pseudo_query(const Document& doc, std::size_t m);

}  // namespace qvqpp
