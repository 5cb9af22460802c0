#include "qvqpp/text_index.hpp"

#include <algorithm>
#include <iterator>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <unordered_set>

namespace qvqpp {

namespace {

// Part of the artifact's interface: changing it changes every index.
constexpr std::string_view kStopwords[] = {
    "a",        "about",   "above",      "after",    "again",   "against", "all",     "am",
    "an",       "and",     "any",        "are",      "as",      "at",      "be",      "because",
    "been",     "before",  "being",      "below",    "between", "both",    "but",     "by",
    "can",      "could",   "did",        "do",       "does",    "doing",   "down",    "during",
    "each",     "few",     "for",        "from",     "further", "had",     "has",     "have",
    "having",   "he",      "her",        "here",     "hers",    "herself", "him",     "himself",
    "his",      "how",     "i",          "if",       "in",      "into",    "is",      "it",
    "its",      "itself",  "me",         "more",     "most",    "my",      "myself",  "no",
    "nor",      "not",     "of",         "off",      "on",      "once",    "only",    "or",
    "other",    "our",     "ours",       "ourselves", "out",    "over",    "own",     "same",
    "she",      "should",  "so",         "some",     "such",    "than",    "that",    "the",
    "their",    "theirs",  "them",       "themselves", "then",  "there",   "these",   "they",
    "this",     "those",   "through",    "to",       "too",     "under",   "until",   "up",
    "very",     "was",     "we",         "were",     "what",    "when",    "where",   "which",
    "while",    "who",     "whom",       "why",      "will",    "with",    "would",   "you",
    "your",     "yours",   "yourself",   "yourselves", "also",  "just",
};

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char to_lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

const std::vector<std::string_view>& sorted_stopwords() {
    static const std::vector<std::string_view> sorted = [] {
        std::vector<std::string_view> v(std::begin(kStopwords), std::end(kStopwords));
        std::sort(v.begin(), v.end());
        return v;
    }();
    return sorted;
}

}  // namespace

std::span<const std::string_view> stopwords() { return sorted_stopwords(); }

bool is_stopword(std::string_view token) {
    const auto& words = sorted_stopwords();
    return std::binary_search(words.begin(), words.end(), token);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !is_stopword(current)) tokens.push_back(current);
        current.clear();
    };
    for (char c : text) {
        if (is_word_byte(static_cast<unsigned char>(c))) {
            current.push_back(to_lower_ascii(c));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

double bm25_idf(std::uint64_t item_count, std::uint64_t df) {
    auto n = static_cast<double>(item_count);
    auto d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double bm25_term_weight(const Bm25Params& params, double idf, double tf, double length, double avgdl) {
    double norm = avgdl > 0.0 ? length / avgdl : 0.0;
    return idf * tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * norm));
}

double InvertedIndex::avgdl() const noexcept {
    if (item_ids_.empty()) return 0.0;
    return static_cast<double>(total_tokens_) / static_cast<double>(item_ids_.size());
}

InvertedIndex InvertedIndex::build(std::span<const IndexItem> items, Bm25Params params) {
    InvertedIndex index;
    index.params_ = params;
    index.item_ids_.reserve(items.size());
    index.lengths_.reserve(items.size());
    index.forward_.reserve(items.size());

    for (const auto& item : items) {
        if (item.id.empty()) throw Error("index item with empty id");
        auto ordinal = static_cast<std::uint32_t>(index.item_ids_.size());
        if (!index.item_lookup_.emplace(std::string(item.id), ordinal).second)
            throw Error("duplicate item id '" + std::string(item.id) + "'");
        index.item_ids_.emplace_back(item.id);

        auto tokens = tokenize(item.text);
        std::map<std::uint32_t, std::uint32_t> counts;
        for (auto& tok : tokens) {
            auto [it, inserted] = index.term_lookup_.try_emplace(tok, static_cast<std::uint32_t>(index.terms_.size()));
            if (inserted) {
                index.terms_.push_back(tok);
                index.postings_.emplace_back();
                index.cf_.push_back(0);
            }
            ++counts[it->second];
        }
        std::vector<TermCount> forward;
        forward.reserve(counts.size());
        for (auto [term, tf] : counts) {
            forward.push_back({term, tf});
            index.postings_[term].push_back({ordinal, tf});
            index.cf_[term] += tf;
        }
        index.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        index.total_tokens_ += tokens.size();
        index.forward_.push_back(std::move(forward));
    }
    return index;
}

std::optional<std::uint32_t> InvertedIndex::item_ordinal(std::string_view id) const {
    auto it = item_lookup_.find(std::string(id));
    if (it == item_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> InvertedIndex::term_id(std::string_view term) const {
    auto it = term_lookup_.find(std::string(term));
    if (it == term_lookup_.end()) return std::nullopt;
    return it->second;
}

void InvertedIndex::rebuild_lookups() {
    item_lookup_.clear();
    term_lookup_.clear();
    for (std::uint32_t i = 0; i < item_ids_.size(); ++i) item_lookup_.emplace(item_ids_[i], i);
    for (std::uint32_t t = 0; t < terms_.size(); ++t) term_lookup_.emplace(terms_[t], t);
}

// Binary layout: magic, version, k1, b, items (id, length, terms), vocabulary.
// Postings and collection frequencies are rebuilt from the forward view.
namespace {

constexpr char kMagic[8] = {'Q', 'V', 'Q', 'P', 'P', 'I', 'D', 'X'};

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw Error("truncated index file");
    return value;
}

std::string get_string(std::istream& in) {
    auto size = get<std::uint32_t>(in);
    std::string s(size, '\0');
    in.read(s.data(), size);
    if (!in) throw Error("truncated index file");
    return s;
}

}  // namespace

void InvertedIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kFormatVersion);
    put<double>(out, params_.k1);
    put<double>(out, params_.b);
    put<std::uint64_t>(out, terms_.size());
    for (const auto& t : terms_) put_string(out, t);
    put<std::uint64_t>(out, item_ids_.size());
    for (std::size_t i = 0; i < item_ids_.size(); ++i) {
        put_string(out, item_ids_[i]);
        put<std::uint32_t>(out, lengths_[i]);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(forward_[i].size()));
        for (auto tc : forward_[i]) {
            put<std::uint32_t>(out, tc.term);
            put<std::uint32_t>(out, tc.tf);
        }
    }
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error(path.string() + ": not an index file");
    auto version = get<std::uint32_t>(in);
    if (version != kFormatVersion)
        throw Error(path.string() + ": unsupported index version " + std::to_string(version));

    InvertedIndex index;
    index.params_.k1 = get<double>(in);
    index.params_.b = get<double>(in);
    auto term_count = get<std::uint64_t>(in);
    index.terms_.reserve(term_count);
    for (std::uint64_t t = 0; t < term_count; ++t) index.terms_.push_back(get_string(in));
    index.postings_.resize(term_count);
    index.cf_.assign(term_count, 0);

    auto item_count = get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < item_count; ++i) {
        index.item_ids_.push_back(get_string(in));
        index.lengths_.push_back(get<std::uint32_t>(in));
        auto n = get<std::uint32_t>(in);
        std::vector<TermCount> forward(n);
        for (auto& tc : forward) {
            tc.term = get<std::uint32_t>(in);
            tc.tf = get<std::uint32_t>(in);
            if (tc.term >= term_count) throw Error(path.string() + ": corrupt term id");
            index.postings_[tc.term].push_back({static_cast<std::uint32_t>(i), tc.tf});
            index.cf_[tc.term] += tc.tf;
        }
        index.total_tokens_ += index.lengths_.back();
        index.forward_.push_back(std::move(forward));
    }
    index.rebuild_lookups();
    return index;
}

RankedList bm25_retrieve(const InvertedIndex& index, std::span<const std::string> terms, std::size_t depth) {
    if (depth == 0) throw Error("retrieval depth must be positive");
    RankedList result;
    if (terms.empty() || index.item_count() == 0) return result;

    // Distinct terms in lexicographic order fix the per-item summation order.
    std::map<std::string_view, std::uint32_t> query_tf;
    for (const auto& t : terms) ++query_tf[t];

    const double avgdl = index.avgdl();
    std::unordered_map<std::uint32_t, double> acc;
    for (auto [term, qtf] : query_tf) {
        auto id = index.term_id(term);
        if (!id) continue;
        double idf = bm25_idf(index.item_count(), index.df(*id));
        for (auto p : index.postings(*id)) {
            double w = bm25_term_weight(index.params(), idf, p.tf, index.item_length(p.item), avgdl);
            acc[p.item] += qtf * w;
        }
    }

    result.entries.reserve(acc.size());
    for (auto [item, score] : acc) {
        if (score > 0.0) result.entries.push_back({index.item_id(item), score});
    }
    auto keep = std::min(depth, result.entries.size());
    std::partial_sort(result.entries.begin(), result.entries.begin() + static_cast<std::ptrdiff_t>(keep),
                      result.entries.end(), ranks_before);
    result.entries.resize(keep);
    return result;
}

PseudoQuery make_pseudo_query(const Document& doc, std::size_t m) {
    std::map<std::string, std::size_t> counts;
    for (auto& tok : tokenize(doc.text)) ++counts[tok];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    // counts is alphabetical already; stable sort keeps that order within equal frequencies
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    PseudoQuery pq;
    pq.source_doc_id = doc.id;
    for (std::size_t i = 0; i < ranked.size() && i < m; ++i) pq.terms.push_back(ranked[i].first);
    return pq;
}

}  // namespace qvqpp
