#include "qvqpp/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace qvqpp {

double nqc(const PredictorInput& input) {
    const auto& entries = input.ranked_list.entries;
    if (entries.empty()) throw Error("nqc: empty ranked list");
    if (!(input.collection_score > 0.0)) throw Error("nqc: collection score must be positive");
    if (input.top_k == 0) throw Error("nqc: top_k must be positive");
    const std::size_t k = std::min(input.top_k, entries.size());

    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += entries[i].score;
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double d = entries[i].score - mean;
        var += d * d;
    }
    var /= static_cast<double>(k);
    return std::sqrt(var) / input.collection_score;
}

double collection_score(const InvertedIndex& index, std::span<const std::string> terms, double floor) {
    if (index.item_count() == 0) throw Error("collection_score: empty index");
    std::map<std::string_view, std::uint32_t> query_tf;
    for (const auto& t : terms) ++query_tf[t];

    const auto corpus_length = static_cast<double>(index.total_tokens());
    double score = 0.0;
    bool matched = false;
    for (auto [term, qtf] : query_tf) {
        auto id = index.term_id(term);
        if (!id) continue;
        matched = true;
        double idf = bm25_idf(index.item_count(), index.df(*id));
        score += qtf * bm25_term_weight(index.params(), idf, static_cast<double>(index.cf(*id)), corpus_length,
                                        index.avgdl());
    }
    if (!matched || !(score > 0.0)) return floor;
    return score;
}

double RelevanceModel::weight(const InvertedIndex& index, std::string_view term) const {
    auto id = index.term_id(term);
    if (!id) return 0.0;
    auto it = std::lower_bound(weights.begin(), weights.end(), *id,
                               [](const TermWeight& tw, std::uint32_t t) { return tw.term_id < t; });
    return (it != weights.end() && it->term_id == *id) ? it->weight : 0.0;
}

double dirichlet_prob(const InvertedIndex& index, std::uint32_t item, std::uint32_t term_id, double mu) {
    auto terms = index.item_terms(item);
    auto it = std::lower_bound(terms.begin(), terms.end(), term_id,
                               [](const TermCount& tc, std::uint32_t t) { return tc.term < t; });
    double tf = (it != terms.end() && it->term == term_id) ? it->tf : 0.0;
    double background = static_cast<double>(index.cf(term_id)) / static_cast<double>(index.total_tokens());
    return (tf + mu * background) / (static_cast<double>(index.item_length(item)) + mu);
}

namespace {

std::uint32_t require_item(const InvertedIndex& index, const std::string& doc_id) {
    auto ordinal = index.item_ordinal(doc_id);
    if (!ordinal) throw Error("document '" + doc_id + "' is not in the index");
    return *ordinal;
}

}  // namespace

RelevanceModel build_relevance_model(const InvertedIndex& index, const RankedList& sample, double mu) {
    if (sample.empty()) throw Error("relevance model: empty sample");
    std::vector<std::uint32_t> items;
    items.reserve(sample.size());
    for (const auto& e : sample.entries) items.push_back(require_item(index, e.doc_id));

    double max_score = sample.entries.front().score;
    for (const auto& e : sample.entries) max_score = std::max(max_score, e.score);
    std::vector<double> doc_weight(sample.size());
    double z = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        doc_weight[i] = std::exp(sample.entries[i].score - max_score);
        z += doc_weight[i];
    }
    for (auto& w : doc_weight) w /= z;

    std::vector<std::uint32_t> vocabulary;
    for (auto item : items) {
        for (auto tc : index.item_terms(item)) vocabulary.push_back(tc.term);
    }
    std::sort(vocabulary.begin(), vocabulary.end());
    vocabulary.erase(std::unique(vocabulary.begin(), vocabulary.end()), vocabulary.end());
    if (vocabulary.empty()) throw Error("relevance model: every sampled document is empty");

    RelevanceModel model;
    model.weights.reserve(vocabulary.size());
    double total = 0.0;
    for (auto term : vocabulary) {
        double w = 0.0;
        for (std::size_t i = 0; i < items.size(); ++i) w += doc_weight[i] * dirichlet_prob(index, items[i], term, mu);
        model.weights.push_back({term, w});
        total += w;
    }
    for (auto& tw : model.weights) tw.weight /= total;
    return model;
}

RankedList rm_rerank(const InvertedIndex& index, const RelevanceModel& model, const RankedList& list,
                     std::size_t depth, double mu) {
    RankedList out;
    out.query_id = list.query_id;
    const std::size_t n = std::min(depth, list.size());
    out.entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto item = require_item(index, list.entries[i].doc_id);
        double score = 0.0;
        for (auto tw : model.weights) score += tw.weight * std::log(dirichlet_prob(index, item, tw.term_id, mu));
        out.entries.push_back({list.entries[i].doc_id, score});
    }
    std::sort(out.entries.begin(), out.entries.end(), ranks_before);
    return out;
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view query_id) {
    // FNV-1a over the id, then a splitmix64 finalizer over (seed ^ hash).
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : query_id) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = global_seed ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<std::vector<std::size_t>> draw_subsets(std::uint64_t seed, std::size_t pool, std::size_t samples,
                                                   std::size_t sample_size) {
    if (sample_size > pool)
        throw Error("cannot draw " + std::to_string(sample_size) + " items from a pool of " + std::to_string(pool));
    // mt19937_64 output is fixed by the standard; bounded draws are done by
    // hand because std distributions are implementation-defined.
    std::mt19937_64 rng(seed);
    auto bounded = [&rng](std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v = 0;
        do {
            v = rng();
        } while (v >= limit);
        return v % bound;
    };

    std::vector<std::vector<std::size_t>> subsets;
    subsets.reserve(samples);
    std::vector<std::size_t> perm(pool);
    for (std::size_t s = 0; s < samples; ++s) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = 0; i < sample_size; ++i) {
            auto j = i + static_cast<std::size_t>(bounded(pool - i));
            std::swap(perm[i], perm[j]);
        }
        std::vector<std::size_t> subset(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(sample_size));
        std::sort(subset.begin(), subset.end());
        subsets.push_back(std::move(subset));
    }
    return subsets;
}

double uef(const PredictorInput& input, const InvertedIndex& index, std::uint64_t global_seed,
           const UefParams& params) {
    const auto& list = input.ranked_list;
    if (list.empty()) throw Error("uef: empty ranked list");
    if (params.samples == 0 || params.sample_size == 0) throw Error("uef: samples and sample_size must be positive");
    const std::size_t top_k = std::min(input.top_k, list.size());
    const std::size_t pool = std::min(list.size(), std::max(input.top_k, params.pool_floor));
    if (params.sample_size > pool)
        throw Error("uef: sample_size " + std::to_string(params.sample_size) + " exceeds the " +
                    std::to_string(pool) + " available documents");

    RankedList head;
    head.query_id = list.query_id;
    head.entries.assign(list.entries.begin(), list.entries.begin() + static_cast<std::ptrdiff_t>(top_k));

    auto subsets = draw_subsets(derive_seed(global_seed, list.query_id), pool, params.samples, params.sample_size);
    double total = 0.0;
    for (const auto& subset : subsets) {
        PredictorInput sample{RankedList{list.query_id, {}}, input.collection_score, input.top_k};
        for (auto i : subset) sample.ranked_list.entries.push_back(list.entries[i]);
        double spread = nqc(sample);
        if (spread == 0.0) continue;
        auto model = build_relevance_model(index, sample.ranked_list, params.mu);
        auto reranked = rm_rerank(index, model, list, top_k, params.mu);
        total += rbo_ext(head, reranked, params.rbo) * spread;
    }
    return total / static_cast<double>(params.samples);
}

PredictorKind parse_predictor_kind(std::string_view name) {
    if (name == "nqc") return PredictorKind::nqc;
    if (name == "uef") return PredictorKind::uef;
    throw Error("unknown base predictor '" + std::string(name) + "' (expected nqc or uef)");
}

std::string_view to_string(PredictorKind kind) {
    return kind == PredictorKind::nqc ? "nqc" : "uef";
}

double BasePredictor::operator()(const InvertedIndex& doc_index, const RankedList& list,
                                 std::span<const std::string> query_terms) const {
    PredictorInput input{list, collection_score(doc_index, query_terms), top_k};
    if (kind == PredictorKind::nqc) return nqc(input);
    UefParams capped = uef;
    const std::size_t pool = std::min(list.size(), std::max(top_k, uef.pool_floor));
    capped.sample_size = std::min(uef.sample_size, pool);
    return qvqpp::uef(input, doc_index, seed, capped);
}

}  // namespace qvqpp
