#include "qvqpp/qv_qpp.hpp"

#include <algorithm>
#include <iostream>

namespace qvqpp {

QueryRetriever parse_query_retriever(std::string_view name) {
    if (name == "bm25") return QueryRetriever::bm25;
    if (name == "dense") return QueryRetriever::dense;
    throw Error("unknown query retriever '" + std::string(name) + "' (expected bm25 or dense)");
}

std::string_view to_string(QueryRetriever retriever) {
    return retriever == QueryRetriever::bm25 ? "bm25" : "dense";
}

void QppConfig::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda must lie in [0,1]");
    if (k < 1) throw Error("k must be at least 1");
    if (n <= k) throw Error("candidate pool n must exceed k");
    if (pseudo_query_m < 1) throw Error("pseudo_query_m must be positive");
    if (internal_depth < 1) throw Error("internal_depth must be positive");
    if (predictor.top_k < 1) throw Error("top_k must be positive");
    rbo.validate();
}

std::set<std::string> QVSet::ids() const {
    std::set<std::string> out;
    for (const auto& c : candidates) out.insert(c.query.id);
    return out;
}

namespace {

std::string token_key(std::span<const std::string> tokens) {
    std::string key;
    for (const auto& t : tokens) {
        key += t;
        key += '\x1f';
    }
    return key;
}

}  // namespace

QueryIndex::QueryIndex(std::vector<Query> queries, Bm25Params params)
    : queries_(std::move(queries)), index_(build_index(queries_, params)) {
    build_lookups();
}

QueryIndex::QueryIndex(std::vector<Query> queries, InvertedIndex index)
    : queries_(std::move(queries)), index_(std::move(index)) {
    if (index_.item_count() != queries_.size()) throw Error("query index does not match the training queries");
    for (std::uint32_t i = 0; i < queries_.size(); ++i) {
        if (index_.item_id(i) != queries_[i].id) throw Error("query index does not match the training queries");
    }
    build_lookups();
}

void QueryIndex::build_lookups() {
    for (std::size_t i = 0; i < queries_.size(); ++i) {
        by_id_.emplace(queries_[i].id, i);
        by_tokens_[token_key(tokenize(queries_[i].text))].push_back(queries_[i].id);
    }
}

const Query& QueryIndex::query(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) throw Error("unknown training query '" + std::string(id) + "'");
    return queries_[it->second];
}

std::set<std::string> QueryIndex::with_tokens(std::span<const std::string> tokens) const {
    auto it = by_tokens_.find(token_key(tokens));
    if (it == by_tokens_.end()) return {};
    return {it->second.begin(), it->second.end()};
}

DocumentMap to_document_map(std::vector<Document> docs) {
    DocumentMap map;
    map.reserve(docs.size());
    for (auto& d : docs) {
        std::string id = d.id;
        map.emplace(std::move(id), std::move(d));
    }
    return map;
}

namespace {

// Top-n of a BM25 query-index retrieval after dropping excluded ids.
RankedList retrieve_queries(const QueryIndex& query_index, std::span<const std::string> terms, std::size_t n,
                            const std::set<std::string>& excluded) {
    auto run = bm25_retrieve(query_index.index(), terms, n + excluded.size());
    std::erase_if(run.entries, [&](const ScoredDoc& e) { return excluded.count(e.doc_id) > 0; });
    if (run.entries.size() > n) run.entries.resize(n);
    return run;
}

}  // namespace

QVSet retrieve_1hop(const Query& target, const QppConfig& config, const QueryIndex& query_index,
                    const EmbeddingStore::Vector* target_embedding) {
    QVSet set;
    set.target_query_id = target.id;
    set.stage = QvStage::one_hop;
    auto tokens = tokenize(target.text);
    set.excluded = query_index.with_tokens(tokens);
    set.excluded.insert(target.id);

    RankedList hits;
    if (config.query_retriever == QueryRetriever::bm25) {
        hits = retrieve_queries(query_index, tokens, config.n, set.excluded);
    } else {
        if (!query_index.embeddings()) throw Error("dense query retrieval needs training-query embeddings");
        if (target_embedding == nullptr) throw Error("no embedding for target query '" + target.id + "'");
        hits = query_index.embeddings()->knn_cosine(*target_embedding, config.n, set.excluded);
    }
    for (auto& hit : hits.entries) {
        set.candidates.push_back(QVCandidate{query_index.query(hit.doc_id), 1, hit.score, std::nullopt, {}});
    }
    return set;
}

QVSet expand_2hop(QVSet one_hop, const Qrels& qrels, const QppConfig& config, const QueryIndex& query_index,
                  const DocumentMap& collection) {
    if (one_hop.stage != QvStage::one_hop) throw Error("expand_2hop expects a one-hop set");
    QVSet merged = std::move(one_hop);
    merged.stage = QvStage::merged;
    auto seen = merged.ids();
    const std::size_t first_hop_count = merged.candidates.size();

    for (std::size_t i = 0; i < first_hop_count; ++i) {
        auto judged = qrels.find(merged.candidates[i].query.id);
        if (judged == qrels.end()) continue;
        for (const auto& [doc_id, grade] : judged->second) {
            if (grade < 1) continue;
            auto doc = collection.find(doc_id);
            if (doc == collection.end()) {
                std::cerr << "warning: relevant document '" << doc_id << "' of training query '"
                          << merged.candidates[i].query.id << "' is not in the collection; skipped\n";
                continue;
            }
            auto pseudo = make_pseudo_query(doc->second, config.pseudo_query_m);
            if (pseudo.empty()) continue;
            auto hits = retrieve_queries(query_index, pseudo.terms, config.n, merged.excluded);
            for (auto& hit : hits.entries) {
                if (!seen.insert(hit.doc_id).second) continue;
                merged.candidates.push_back(
                    QVCandidate{query_index.query(hit.doc_id), 2, hit.score, std::nullopt, {}});
            }
        }
    }
    return merged;
}

QVSet rerank_by_rbo(QVSet merged, const RankedList& target_internal_run, const InvertedIndex& doc_index,
                    const QppConfig& config) {
    QVSet out = std::move(merged);
    out.stage = QvStage::reranked;
    for (auto& c : out.candidates) {
        auto terms = tokenize(c.query.text);
        c.internal_run = bm25_retrieve(doc_index, terms, config.internal_depth);
        c.internal_run.query_id = c.query.id;
        c.rbo = c.internal_run.empty() ? 0.0 : rbo_ext(target_internal_run, c.internal_run, config.rbo);
    }
    std::stable_sort(out.candidates.begin(), out.candidates.end(), [](const QVCandidate& a, const QVCandidate& b) {
        if (*a.rbo != *b.rbo) return *a.rbo > *b.rbo;
        if (a.hop != b.hop) return a.hop < b.hop;
        return a.query.id < b.query.id;
    });
    if (out.candidates.size() > config.k) out.candidates.resize(config.k);
    return out;
}

double smooth_estimate(double base, std::span<const WeightedEstimate> variants, double lambda) {
    double total_weight = 0.0;
    for (auto v : variants) total_weight += v.weight;
    if (variants.empty() || !(total_weight > 0.0)) return base;
    double smoothed = 0.0;
    for (auto v : variants) {
        if (v.weight > 0.0) smoothed += v.weight / total_weight * v.estimate;
    }
    return (1.0 - lambda) * base + lambda * smoothed;
}

namespace {

std::vector<WeightedEstimate> variant_estimates(const QVSet& qv_set, const BasePredictor& predictor,
                                                const InvertedIndex& doc_index) {
    if (qv_set.stage != QvStage::reranked) throw Error("variants must be re-ranked before smoothing");
    std::vector<WeightedEstimate> out;
    out.reserve(qv_set.candidates.size());
    for (const auto& c : qv_set.candidates) {
        double weight = c.rbo.value_or(0.0);
        // zero-weight variants contribute nothing, so their lists are never scored
        double estimate = 0.0;
        if (weight > 0.0) estimate = predictor(doc_index, c.internal_run, tokenize(c.query.text));
        out.push_back({weight, estimate});
    }
    return out;
}

}  // namespace

double smooth_qpp(const RankedList& target_run, std::span<const std::string> target_terms, const QVSet& qv_set,
                  const QppConfig& config, const InvertedIndex& doc_index) {
    double base = config.predictor(doc_index, target_run, target_terms);
    if (config.lambda == 0.0) return base;
    auto variants = variant_estimates(qv_set, config.predictor, doc_index);
    return smooth_estimate(base, variants, config.lambda);
}

double QvEstimates::estimate(double lambda, std::size_t k) const {
    auto used = std::span<const WeightedEstimate>(variants).first(std::min(k, variants.size()));
    return smooth_estimate(base, used, lambda);
}

QvPipeline::QvPipeline(const InvertedIndex& doc_index, const QueryIndex& query_index, const Qrels& train_qrels,
                       const DocumentMap& collection, QppConfig config, const EmbeddingStore* target_embeddings)
    : doc_index_(doc_index),
      query_index_(query_index),
      train_qrels_(train_qrels),
      collection_(collection),
      config_(std::move(config)),
      target_embeddings_(target_embeddings) {
    config_.validate();
}

QVSet QvPipeline::select_variants(const Query& target) const {
    std::optional<EmbeddingStore::Vector> embedding;
    if (config_.query_retriever == QueryRetriever::dense) {
        if (target_embeddings_ == nullptr) throw Error("dense query retrieval needs target-query embeddings");
        embedding = target_embeddings_->find(target.id);
        if (!embedding) throw Error("no embedding for target query '" + target.id + "'");
    }
    auto set = retrieve_1hop(target, config_, query_index_, embedding ? &*embedding : nullptr);
    if (config_.use_2hop) {
        set = expand_2hop(std::move(set), train_qrels_, config_, query_index_, collection_);
    } else {
        set.stage = QvStage::merged;
    }
    auto target_internal = bm25_retrieve(doc_index_, tokenize(target.text), config_.internal_depth);
    target_internal.query_id = target.id;
    return rerank_by_rbo(std::move(set), target_internal, doc_index_, config_);
}

QvEstimates QvPipeline::estimates(const Query& target, const RankedList& target_run) const {
    QvEstimates out;
    out.query_id = target.id;
    out.base = config_.predictor(doc_index_, target_run, tokenize(target.text));
    out.variants = variant_estimates(select_variants(target), config_.predictor, doc_index_);
    return out;
}

double QvPipeline::predict(const Query& target, const RankedList& target_run) const {
    return estimates(target, target_run).estimate(config_.lambda, config_.k);
}

}  // namespace qvqpp
