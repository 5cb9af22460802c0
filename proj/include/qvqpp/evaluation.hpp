#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qvqpp/types.hpp"

namespace qvqpp {

struct EvalPair {
    std::string query_id;
    double predicted = 0.0;
    double actual = 0.0;
};

/// AP over the top k with grades >= rel_threshold counted relevant. The
/// denominator is the number of relevant documents capped at k. Unjudged
/// documents are non-relevant. The list is canonicalized first.
double ap_at_k(const RankedList& run, const Qrels& qrels, std::size_t k, int rel_threshold);

/// nDCG@k with gain 2^g - 1 and log2(rank + 1) discount.
double ndcg_at_k(const RankedList& run, const Qrels& qrels, std::size_t k);

enum class TargetMetric { ap_at_100, ndcg_at_10 };

TargetMetric parse_target_metric(std::string_view name);
std::string_view to_string(TargetMetric metric);

/// AP@100 (threshold 2) or nDCG@10 for a single run.
double target_metric_value(TargetMetric metric, const RankedList& run, const Qrels& qrels);

/// Thrown when a correlation has no defined value.
class UndefinedCorrelation : public Error {
public:
    using Error::Error;
};

/// Tie-aware Kendall tau-b. Throws when fewer than two pairs are given or
/// when both sides are entirely tied (UndefinedCorrelation). Returns 0 when only one side is
/// constant.
double kendall_tau(std::span<const EvalPair> pairs);

struct FisherZResult {
    double z = 0.0;
    double critical = 0.0;
    bool significant = false;
};

/// Independent-samples Fisher r-to-z comparison applied to two tau values
/// over n queries; two-sided at `confidence`.
FisherZResult fisher_z_compare(double tau_a, double tau_b, std::size_t n, double confidence = 0.99);

struct FoldSpec {
    std::set<std::string> train_ids;
    std::set<std::string> test_ids;
};

struct GridPoint {
    double lambda = 0.0;
    std::size_t k = 1;
};

struct ParamGrid {
    std::vector<double> lambdas;
    std::vector<std::size_t> ks;
};

/// The lambda grid {0, 0.1, ..., 1.0}.
std::vector<double> default_lambda_grid();

/// Supplies predictions for a parameter setting; `actual` holds the
/// ground-truth metric per query id.
struct GridContext {
    std::function<double(const GridPoint&, const std::string& query_id)> predict;
    std::map<std::string, double> actual;
};

/// Kendall tau of predictions at `point` over `query_ids`.
double tau_for(const GridContext& context, const GridPoint& point, const std::set<std::string>& query_ids);

struct FoldOutcome {
    GridPoint chosen;
    double train_tau = 0.0;
    double test_tau = 0.0;
};

struct TuningResult {
    FoldOutcome folds[2];
    double mean_test_tau = 0.0;
};

/// Picks (lambda, k) maximizing train tau per fold (ties: smaller k, then
/// smaller lambda) and reports the test tau of each choice.
TuningResult tune_2fold(const FoldSpec (&folds)[2], const ParamGrid& grid, const GridContext& context);

struct SweepCell {
    double lambda;
    std::size_t k;
    double tau;
};

/// Every grid cell over `query_ids`, sorted by (lambda, k).
std::vector<SweepCell> sweep_grid(const ParamGrid& grid, const GridContext& context,
                                  const std::set<std::string>& query_ids);

/// CSV with header `lambda,k,tau`.
void write_sweep_csv(std::span<const SweepCell> cells, const std::filesystem::path& path);

}  // namespace qvqpp
