#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qvqpp/config.hpp"
#include "qvqpp/dense_index.hpp"
#include "qvqpp/evaluation.hpp"
#include "qvqpp/qv_qpp.hpp"

namespace qvqpp {

inline constexpr const char* kDocIndexFile = "documents.idx";
inline constexpr const char* kQueryIndexFile = "queries.idx";

/// Read-only inputs shared by every target query.
struct Resources {
    InvertedIndex doc_index;
    QueryIndex query_index;
    Qrels train_qrels;
    DocumentMap collection;
    std::optional<EmbeddingStore> test_embeddings;
    std::map<std::string, Query> test_queries;

    static Resources load(const PipelineConfig& config);
};

/// Builds and persists the document and training-query indexes.
void cmd_index(const PipelineConfig& config);

/// One row per selected variant: qid, variant_qid, hop, rbo, variant_text.
void cmd_qv(const PipelineConfig& config, const std::filesystem::path& out);

/// One `qid<TAB>score` line per query in the target run.
void cmd_predict(const PipelineConfig& config, const std::filesystem::path& out);

struct EvaluationReport {
    std::size_t queries = 0;
    double tau = 0.0;
    std::optional<double> baseline_tau;
    std::optional<FisherZResult> significance;
};

/// Kendall tau of a predictions file against the target metric of the run.
/// Optionally writes the per-query ground truth to `metric_out`.
EvaluationReport cmd_evaluate(const PipelineConfig& config, const std::filesystem::path& predictions,
                              const std::filesystem::path& out,
                              const std::filesystem::path& metric_out = {});

TuningResult cmd_tune(const PipelineConfig& config, const std::filesystem::path& out);

std::vector<SweepCell> cmd_sweep(const PipelineConfig& config, const std::filesystem::path& out);

/// Ground-truth target metric per query of a run.
std::map<std::string, double> ground_truth(TargetMetric metric, const RunMap& runs, const Qrels& qrels);

/// Per-query estimates with k = max(k_grid) variants, keyed by query id.
std::map<std::string, QvEstimates> compute_estimates(const PipelineConfig& config, const Resources& resources,
                                                     const RunMap& runs);

}  // namespace qvqpp
