#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qvqpp/dense_index.hpp"
#include "qvqpp/predictors.hpp"
#include "qvqpp/rank_sim.hpp"
#include "qvqpp/text_index.hpp"
#include "qvqpp/types.hpp"

namespace qvqpp {

enum class QueryRetriever { bm25, dense };

QueryRetriever parse_query_retriever(std::string_view name);
std::string_view to_string(QueryRetriever retriever);

struct QppConfig {
    double lambda = 0.5;
    /// Number of variants kept after RBO re-ranking.
    std::size_t k = 1;
    /// Candidate pool per retrieval (1-hop, and each 2-hop pseudo-query).
    std::size_t n = 100;
    QueryRetriever query_retriever = QueryRetriever::bm25;
    bool use_2hop = true;
    std::size_t pseudo_query_m = 20;
    RboParams rbo;
    BasePredictor predictor;
    /// Depth of internal (BM25) document runs for the target and variants.
    std::size_t internal_depth = 100;

    void validate() const;
};

enum class QvStage { one_hop, merged, reranked };

struct QVCandidate {
    Query query;
    int hop = 1;
    double retrieval_score = 0.0;
    std::optional<double> rbo;
    RankedList internal_run;
};

struct QVSet {
    std::string target_query_id;
    /// Ids never admitted at any stage: the target itself and training
    /// queries whose token sequence equals the target's.
    std::set<std::string> excluded;
    std::vector<QVCandidate> candidates;
    QvStage stage = QvStage::one_hop;

    std::set<std::string> ids() const;
};

/// Training queries with a BM25 index over them, plus optional dense
/// embeddings for the same ids.
class QueryIndex {
public:
    QueryIndex() = default;
    explicit QueryIndex(std::vector<Query> queries, Bm25Params params = {});
    /// Uses an already built (e.g. reloaded) index; its items must be the queries, in order.
    QueryIndex(std::vector<Query> queries, InvertedIndex index);

    const InvertedIndex& index() const noexcept { return index_; }
    const std::vector<Query>& queries() const noexcept { return queries_; }
    const Query& query(std::string_view id) const;

    /// Ids of training queries whose tokenized text equals `tokens`.
    std::set<std::string> with_tokens(std::span<const std::string> tokens) const;

    void attach_embeddings(EmbeddingStore store) { embeddings_ = std::move(store); }
    const std::optional<EmbeddingStore>& embeddings() const noexcept { return embeddings_; }

private:
    void build_lookups();

    std::vector<Query> queries_;
    InvertedIndex index_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::unordered_map<std::string, std::vector<std::string>> by_tokens_;
    std::optional<EmbeddingStore> embeddings_;
};

using DocumentMap = std::unordered_map<std::string, Document>;
DocumentMap to_document_map(std::vector<Document> docs);

/// Top-n training queries for the target by the configured query retriever.
/// Dense mode needs `target_embedding`.
QVSet retrieve_1hop(const Query& target, const QppConfig& config, const QueryIndex& query_index,
                    const EmbeddingStore::Vector* target_embedding = nullptr);

/// Adds 2-hop variants: for every 1-hop candidate, each training-relevant
/// document (grade >= 1) becomes a pseudo-query against the BM25 query
/// index. Duplicates keep their lowest hop. Missing documents are skipped
/// with a warning on stderr.
QVSet expand_2hop(QVSet one_hop, const Qrels& qrels, const QppConfig& config, const QueryIndex& query_index,
                  const DocumentMap& collection);

/// Scores each candidate by RBO between its internal BM25 run and the
/// target's, then keeps the top k ordered by (rbo desc, hop asc, id asc).
QVSet rerank_by_rbo(QVSet merged, const RankedList& target_internal_run, const InvertedIndex& doc_index,
                    const QppConfig& config);

struct WeightedEstimate {
    double weight;
    double estimate;
};

/// (1 - lambda) * base + lambda * sum_i (w_i / sum w) * estimate_i. Falls
/// back to `base` when there are no variants or the weights sum to zero.
double smooth_estimate(double base, std::span<const WeightedEstimate> variants, double lambda);

/// Applies the base predictor to the target run (from the target
/// retriever) and to each variant's internal run, then smooths.
double smooth_qpp(const RankedList& target_run, std::span<const std::string> target_terms, const QVSet& qv_set,
                  const QppConfig& config, const InvertedIndex& doc_index);

/// Per-target ingredients for any (lambda, k <= kept variants) estimate.
struct QvEstimates {
    std::string query_id;
    double base = 0.0;
    std::vector<WeightedEstimate> variants;

    double estimate(double lambda, std::size_t k) const;
};

/// The whole per-target pipeline over shared read-only resources.
class QvPipeline {
public:
    QvPipeline(const InvertedIndex& doc_index, const QueryIndex& query_index, const Qrels& train_qrels,
               const DocumentMap& collection, QppConfig config,
               const EmbeddingStore* target_embeddings = nullptr);

    const QppConfig& config() const noexcept { return config_; }

    /// 1-hop, optional 2-hop, RBO re-rank down to config().k.
    QVSet select_variants(const Query& target) const;

    /// Base estimate plus per-variant estimates for the reranked set.
    QvEstimates estimates(const Query& target, const RankedList& target_run) const;

    double predict(const Query& target, const RankedList& target_run) const;

private:
    const InvertedIndex& doc_index_;
    const QueryIndex& query_index_;
    const Qrels& train_qrels_;
    const DocumentMap& collection_;
    QppConfig config_;
    const EmbeddingStore* target_embeddings_;
};

}  // namespace qvqpp
