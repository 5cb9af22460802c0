#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qvqpp/rank_sim.hpp"
#include "qvqpp/text_index.hpp"
#include "qvqpp/types.hpp"

namespace qvqpp {

inline constexpr double kCollectionScoreFloor = 1e-6;
inline constexpr double kDefaultDirichletMu = 1000.0;

struct PredictorInput {
    RankedList ranked_list;
    double collection_score = 0.0;
    std::size_t top_k = 100;
};

/// Population standard deviation of the top_k scores over the collection
/// score.
double nqc(const PredictorInput& input);

/// BM25 score of a virtual document holding the whole corpus: term counts
/// are collection frequencies, length is the corpus token count, avgdl is
/// the real one. Returns `floor` when no query term is indexed.
double collection_score(const InvertedIndex& index, std::span<const std::string> terms,
                        double floor = kCollectionScoreFloor);

struct TermWeight {
    std::uint32_t term_id;
    double weight;
};

/// RM1 term distribution. Sorted by term id; weights sum to one.
struct RelevanceModel {
    std::vector<TermWeight> weights;

    double weight(const InvertedIndex& index, std::string_view term) const;
};

/// Dirichlet-smoothed p(w|D) for an indexed item.
double dirichlet_prob(const InvertedIndex& index, std::uint32_t item, std::uint32_t term_id, double mu);

/// Weights p(w|D) by the softmax of retrieval scores across the sample,
/// over the vocabulary of the sampled documents.
RelevanceModel build_relevance_model(const InvertedIndex& index, const RankedList& sample,
                                     double mu = kDefaultDirichletMu);

/// Re-scores the first `depth` entries of `list` by sum_w P(w|RM) ln p(w|D).
RankedList rm_rerank(const InvertedIndex& index, const RelevanceModel& model, const RankedList& list,
                     std::size_t depth, double mu = kDefaultDirichletMu);

struct UefParams {
    std::size_t samples = 20;
    std::size_t sample_size = 25;
    /// Subsets are drawn from the top max(top_k, pool_floor) entries.
    std::size_t pool_floor = 50;
    double mu = kDefaultDirichletMu;
    RboParams rbo;
};

/// Per-call generator seed derived from the global seed and a query id, so
/// scheduling order never changes the draws.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view query_id);

/// Indices (ascending) of `samples` uniform subsets of size `sample_size`
/// drawn without replacement from [0, pool).
std::vector<std::vector<std::size_t>> draw_subsets(std::uint64_t seed, std::size_t pool, std::size_t samples,
                                                   std::size_t sample_size);

/// UEF with NQC as base: mean over sampled subsets of
/// rbo(top_k, RM-reranked list) * nqc(subset).
double uef(const PredictorInput& input, const InvertedIndex& index, std::uint64_t global_seed,
           const UefParams& params = {});

enum class PredictorKind { nqc, uef };

PredictorKind parse_predictor_kind(std::string_view name);
std::string_view to_string(PredictorKind kind);

/// Everything needed to apply a base predictor to any list in the pipeline.
struct BasePredictor {
    PredictorKind kind = PredictorKind::nqc;
    std::size_t top_k = 100;
    UefParams uef;
    std::uint64_t seed = 0;

    /// The collection score comes from `doc_index` for `query_terms`. For UEF
    /// the sample size is capped at the list's sampling pool so that short
    /// lists still get a prediction.
    double operator()(const InvertedIndex& doc_index, const RankedList& list,
                      std::span<const std::string> query_terms) const;
};

}  // namespace qvqpp
