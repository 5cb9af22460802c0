#include "qvqpp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

namespace qvqpp {

namespace {

const std::map<std::string, int>* judgments_for(const Qrels& qrels, const std::string& query_id) {
    auto it = qrels.find(query_id);
    if (it == qrels.end()) {
        std::cerr << "warning: no judgments for query '" << query_id << "'; metric is 0\n";
        return nullptr;
    }
    return &it->second;
}

int grade_of(const std::map<std::string, int>& judged, const std::string& doc_id) {
    auto it = judged.find(doc_id);
    return it == judged.end() ? 0 : it->second;
}

}  // namespace

double ap_at_k(const RankedList& run, const Qrels& qrels, std::size_t k, int rel_threshold) {
    const auto* judged = judgments_for(qrels, run.query_id);
    if (judged == nullptr) return 0.0;
    std::size_t relevant = 0;
    for (const auto& [doc, grade] : *judged) {
        if (grade >= rel_threshold) ++relevant;
    }
    if (relevant == 0 || k == 0) return 0.0;

    RankedList ordered = run;
    canonicalize(ordered, k);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (grade_of(*judged, ordered.entries[i].doc_id) >= rel_threshold) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(std::min(relevant, k));
}

double ndcg_at_k(const RankedList& run, const Qrels& qrels, std::size_t k) {
    const auto* judged = judgments_for(qrels, run.query_id);
    if (judged == nullptr || k == 0) return 0.0;
    auto gain = [](int g) { return std::pow(2.0, g) - 1.0; };

    RankedList ordered = run;
    canonicalize(ordered, k);
    double dcg = 0.0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        dcg += gain(grade_of(*judged, ordered.entries[i].doc_id)) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> grades;
    for (const auto& [doc, g] : *judged) grades.push_back(g);
    std::sort(grades.begin(), grades.end(), std::greater<>());
    double ideal = 0.0;
    for (std::size_t i = 0; i < grades.size() && i < k; ++i) {
        ideal += gain(grades[i]) / std::log2(static_cast<double>(i) + 2.0);
    }
    return ideal > 0.0 ? dcg / ideal : 0.0;
}

TargetMetric parse_target_metric(std::string_view name) {
    if (name == "ap@100") return TargetMetric::ap_at_100;
    if (name == "ndcg@10") return TargetMetric::ndcg_at_10;
    throw Error("unknown target metric '" + std::string(name) + "' (expected ap@100 or ndcg@10)");
}

std::string_view to_string(TargetMetric metric) {
    return metric == TargetMetric::ap_at_100 ? "ap@100" : "ndcg@10";
}

double target_metric_value(TargetMetric metric, const RankedList& run, const Qrels& qrels) {
    return metric == TargetMetric::ap_at_100 ? ap_at_k(run, qrels, 100, 2) : ndcg_at_k(run, qrels, 10);
}

double kendall_tau(std::span<const EvalPair> pairs) {
    if (pairs.size() < 2) throw Error("kendall_tau needs at least two pairs");
    long long concordant = 0;
    long long discordant = 0;
    long long tied_predicted = 0;
    long long tied_actual = 0;
    long long tied_both = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        for (std::size_t j = i + 1; j < pairs.size(); ++j) {
            double dp = pairs[i].predicted - pairs[j].predicted;
            double da = pairs[i].actual - pairs[j].actual;
            if (dp == 0.0 && da == 0.0) {
                ++tied_both;
            } else if (dp == 0.0) {
                ++tied_predicted;
            } else if (da == 0.0) {
                ++tied_actual;
            } else if ((dp > 0.0) == (da > 0.0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const auto cd = static_cast<double>(concordant + discordant);
    const double denom = (cd + static_cast<double>(tied_predicted)) * (cd + static_cast<double>(tied_actual));
    if (denom == 0.0) {
        if (tied_both == static_cast<long long>(pairs.size() * (pairs.size() - 1) / 2))
            throw UndefinedCorrelation("kendall_tau undefined: predictions and actual values are all tied");
        return 0.0;
    }
    return static_cast<double>(concordant - discordant) / std::sqrt(denom);
}

FisherZResult fisher_z_compare(double tau_a, double tau_b, std::size_t n, double confidence) {
    if (n < 4) throw Error("fisher_z_compare needs n >= 4");
    if (!(std::abs(tau_a) < 1.0) || !(std::abs(tau_b) < 1.0))
        throw Error("fisher_z_compare: |tau| must be below 1");
    if (!(confidence > 0.0 && confidence < 1.0)) throw Error("confidence must lie in (0,1)");
    FisherZResult r;
    r.z = (std::atanh(tau_a) - std::atanh(tau_b)) / std::sqrt(2.0 / static_cast<double>(n - 3));
    r.critical = boost::math::quantile(boost::math::normal(), 1.0 - (1.0 - confidence) / 2.0);
    r.significant = std::abs(r.z) > r.critical;
    return r;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
    return grid;
}

double tau_for(const GridContext& context, const GridPoint& point, const std::set<std::string>& query_ids) {
    std::vector<EvalPair> pairs;
    pairs.reserve(query_ids.size());
    for (const auto& qid : query_ids) {
        auto actual = context.actual.find(qid);
        if (actual == context.actual.end()) throw Error("no ground-truth metric for query '" + qid + "'");
        pairs.push_back({qid, context.predict(point, qid), actual->second});
    }
    return kendall_tau(pairs);
}

namespace {

std::vector<GridPoint> ordered_points(const ParamGrid& grid) {
    if (grid.lambdas.empty() || grid.ks.empty()) throw Error("empty parameter grid");
    std::vector<GridPoint> points;
    for (double lambda : grid.lambdas) {
        for (auto k : grid.ks) points.push_back({lambda, k});
    }
    std::sort(points.begin(), points.end(), [](const GridPoint& a, const GridPoint& b) {
        if (a.lambda != b.lambda) return a.lambda < b.lambda;
        return a.k < b.k;
    });
    return points;
}

}  // namespace

TuningResult tune_2fold(const FoldSpec (&folds)[2], const ParamGrid& grid, const GridContext& context) {
    auto points = ordered_points(grid);
    TuningResult result;
    for (int f = 0; f < 2; ++f) {
        const auto& fold = folds[f];
        for (const auto& id : fold.train_ids) {
            if (fold.test_ids.count(id)) throw Error("query '" + id + "' is in both train and test folds");
        }
        bool found = false;
        FoldOutcome best;
        for (const auto& point : points) {
            double tau = 0.0;
            try {
                tau = tau_for(context, point, fold.train_ids);
            } catch (const UndefinedCorrelation&) {
                continue;
            }
            bool better = !found || tau > best.train_tau ||
                          (tau == best.train_tau &&
                           (point.k < best.chosen.k || (point.k == best.chosen.k && point.lambda < best.chosen.lambda)));
            if (better) {
                best.chosen = point;
                best.train_tau = tau;
                found = true;
            }
        }
        if (!found) throw Error("no grid point yields a defined tau on the training fold");
        best.test_tau = tau_for(context, best.chosen, fold.test_ids);
        result.folds[f] = best;
    }
    result.mean_test_tau = (result.folds[0].test_tau + result.folds[1].test_tau) / 2.0;
    return result;
}

std::vector<SweepCell> sweep_grid(const ParamGrid& grid, const GridContext& context,
                                  const std::set<std::string>& query_ids) {
    std::vector<SweepCell> cells;
    for (const auto& point : ordered_points(grid)) {
        double tau = std::numeric_limits<double>::quiet_NaN();
        try {
            tau = tau_for(context, point, query_ids);
        } catch (const UndefinedCorrelation&) {
            // undefined cells are reported as nan
        }
        cells.push_back({point.lambda, point.k, tau});
    }
    return cells;
}

void write_sweep_csv(std::span<const SweepCell> cells, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << "lambda,k,tau\n";
    for (const auto& c : cells) out << fmt::format("{},{},{:.6f}\n", c.lambda, c.k, c.tau);
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace qvqpp
