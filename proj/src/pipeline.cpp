#include "qvqpp/pipeline.hpp"

#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "qvqpp/corpus_io.hpp"
#include "qvqpp/parallel.hpp"

namespace qvqpp {

namespace {

std::ofstream open_report(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void close_report(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
}

const Query& target_query(const Resources& resources, const std::string& qid) {
    auto it = resources.test_queries.find(qid);
    if (it == resources.test_queries.end()) throw Error("query '" + qid + "' of the target run has no text in test_queries");
    return it->second;
}

std::string format_tau(double tau) { return fmt::format("{:.6f}", tau); }

// qid -> fold label, exactly two labels.
std::pair<std::string, std::string> read_folds(const fs::path& path, FoldSpec (&folds)[2]) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::map<std::string, std::set<std::string>> by_label;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto fields = detail::split_whitespace(line);
        if (fields.empty()) continue;
        if (fields.size() != 2) throw ParseError(path.string(), lineno, "expected qid<TAB>fold");
        if (!seen.emplace(fields[0]).second)
            throw ParseError(path.string(), lineno, "query '" + std::string(fields[0]) + "' assigned twice");
        by_label[std::string(fields[1])].emplace(fields[0]);
    }
    if (by_label.size() != 2) throw Error(path.string() + ": expected exactly two fold labels");
    auto first = by_label.begin();
    auto second = std::next(first);
    folds[0] = {first->second, second->second};
    folds[1] = {second->second, first->second};
    return {first->first, second->first};
}

}  // namespace

Resources Resources::load(const PipelineConfig& config) {
    Resources r;
    r.doc_index = InvertedIndex::load(config.index_dir / kDocIndexFile);
    r.query_index = QueryIndex(parse_queries(config.train_queries), InvertedIndex::load(config.index_dir / kQueryIndexFile));
    if (!config.train_qrels.empty()) r.train_qrels = parse_qrels(config.train_qrels);
    r.collection = to_document_map(parse_collection(config.collection));
    for (auto& q : parse_queries(config.test_queries)) {
        std::string id = q.id;
        r.test_queries.emplace(std::move(id), std::move(q));
    }
    if (config.qpp.query_retriever == QueryRetriever::dense) {
        auto train = load_vectors(config.train_embeddings);
        auto test = load_vectors(config.test_embeddings);
        if (train.dim() != test.dim()) throw Error("training and test embeddings differ in dimension");
        r.query_index.attach_embeddings(std::move(train));
        r.test_embeddings = std::move(test);
    }
    return r;
}

void cmd_index(const PipelineConfig& config) {
    config.validate(Command::index);
    auto docs = parse_collection(config.collection);
    auto queries = parse_queries(config.train_queries);
    auto doc_index = build_index(docs, config.bm25);
    auto query_index = build_index(queries, config.bm25);
    fs::create_directories(config.index_dir);
    doc_index.save(config.index_dir / kDocIndexFile);
    query_index.save(config.index_dir / kQueryIndexFile);
}

void cmd_qv(const PipelineConfig& config, const fs::path& out) {
    config.validate(Command::qv);
    auto resources = Resources::load(config);
    QvPipeline pipeline(resources.doc_index, resources.query_index, resources.train_qrels, resources.collection,
                        config.qpp, resources.test_embeddings ? &*resources.test_embeddings : nullptr);

    std::vector<const Query*> targets;
    for (const auto& [qid, q] : resources.test_queries) targets.push_back(&q);
    std::vector<QVSet> sets(targets.size());
    parallel_for(targets.size(), config.workers, [&](std::size_t i) { sets[i] = pipeline.select_variants(*targets[i]); });

    auto file = open_report(out);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (sets[i].candidates.empty()) std::cerr << "note: no query variants for '" << targets[i]->id << "'\n";
        for (const auto& c : sets[i].candidates) {
            file << fmt::format("{}\t{}\t{}\t{:.6f}\t{}\n", targets[i]->id, c.query.id, c.hop, c.rbo.value_or(0.0),
                                c.query.text);
        }
    }
    close_report(file, out);
}

void cmd_predict(const PipelineConfig& config, const fs::path& out) {
    config.validate(Command::predict);
    auto resources = Resources::load(config);
    auto runs = parse_run(config.target_run, config.run_depth);
    QvPipeline pipeline(resources.doc_index, resources.query_index, resources.train_qrels, resources.collection,
                        config.qpp, resources.test_embeddings ? &*resources.test_embeddings : nullptr);

    std::vector<const RankedList*> lists;
    for (const auto& [qid, list] : runs) lists.push_back(&list);
    std::vector<double> predictions(lists.size());
    parallel_for(lists.size(), config.workers, [&](std::size_t i) {
        predictions[i] = pipeline.predict(target_query(resources, lists[i]->query_id), *lists[i]);
    });

    std::map<std::string, double> scores;
    for (std::size_t i = 0; i < lists.size(); ++i) scores.emplace(lists[i]->query_id, predictions[i]);
    write_scores(scores, out);
}

std::map<std::string, double> ground_truth(TargetMetric metric, const RunMap& runs, const Qrels& qrels) {
    std::map<std::string, double> actual;
    for (const auto& [qid, list] : runs) actual.emplace(qid, target_metric_value(metric, list, qrels));
    return actual;
}

EvaluationReport cmd_evaluate(const PipelineConfig& config, const fs::path& predictions, const fs::path& out,
                              const fs::path& metric_out) {
    config.validate(Command::evaluate);
    if (!fs::exists(predictions)) throw Error("predictions: no such file " + predictions.string());
    auto runs = parse_run(config.target_run, config.run_depth);
    auto qrels = parse_qrels(config.test_qrels);
    auto actual = ground_truth(config.target_metric, runs, qrels);
    auto predicted = parse_scores(predictions);

    auto pairs_for = [&](const std::map<std::string, double>& scores) {
        std::vector<EvalPair> pairs;
        for (const auto& [qid, value] : predicted) {
            auto it = scores.find(qid);
            if (it == scores.end()) throw Error("no prediction for query '" + qid + "'");
            auto truth = actual.find(qid);
            if (truth == actual.end()) throw Error("query '" + qid + "' is not in the target run");
            pairs.push_back({qid, it->second, truth->second});
        }
        return pairs;
    };

    EvaluationReport report;
    report.queries = predicted.size();
    report.tau = kendall_tau(pairs_for(predicted));
    if (!config.baseline_predictions.empty()) {
        report.baseline_tau = kendall_tau(pairs_for(parse_scores(config.baseline_predictions)));
        if (std::abs(report.tau) < 1.0 && std::abs(*report.baseline_tau) < 1.0 && report.queries >= 4)
            report.significance = fisher_z_compare(report.tau, *report.baseline_tau, report.queries, config.confidence);
    }

    auto file = open_report(out);
    file << "metric = " << to_string(config.target_metric) << "\n";
    file << "queries = " << report.queries << "\n";
    file << "kendall_tau = " << format_tau(report.tau) << "\n";
    if (report.baseline_tau) {
        file << "baseline_kendall_tau = " << format_tau(*report.baseline_tau) << "\n";
        if (report.significance) {
            file << fmt::format("fisher_z = {:.6f}\nfisher_critical = {:.6f}\nsignificant = {}\n",
                                report.significance->z, report.significance->critical,
                                report.significance->significant ? "true" : "false");
        } else {
            file << "fisher_z = undefined\n";
        }
        file << fmt::format("fisher_test = independent-samples r-to-z approximation on tau, confidence {}\n",
                            config.confidence);
    }
    close_report(file, out);
    if (!metric_out.empty()) write_scores(actual, metric_out);
    return report;
}

std::map<std::string, QvEstimates> compute_estimates(const PipelineConfig& config, const Resources& resources,
                                                     const RunMap& runs) {
    QppConfig qpp = config.qpp;
    qpp.k = config.max_k();
    QvPipeline pipeline(resources.doc_index, resources.query_index, resources.train_qrels, resources.collection, qpp,
                        resources.test_embeddings ? &*resources.test_embeddings : nullptr);
    std::vector<const RankedList*> lists;
    for (const auto& [qid, list] : runs) lists.push_back(&list);
    std::vector<QvEstimates> rows(lists.size());
    parallel_for(lists.size(), config.workers, [&](std::size_t i) {
        rows[i] = pipeline.estimates(target_query(resources, lists[i]->query_id), *lists[i]);
    });
    std::map<std::string, QvEstimates> out;
    for (auto& row : rows) {
        std::string id = row.query_id;
        out.emplace(std::move(id), std::move(row));
    }
    return out;
}

namespace {

GridContext make_context(const std::map<std::string, QvEstimates>& estimates, std::map<std::string, double> actual) {
    GridContext context;
    context.actual = std::move(actual);
    context.predict = [&estimates](const GridPoint& point, const std::string& qid) {
        auto it = estimates.find(qid);
        if (it == estimates.end()) throw Error("no estimates for query '" + qid + "'");
        return it->second.estimate(point.lambda, point.k);
    };
    return context;
}

ParamGrid grid_of(const PipelineConfig& config) { return {config.lambda_grid, config.k_grid}; }

}  // namespace

TuningResult cmd_tune(const PipelineConfig& config, const fs::path& out) {
    config.validate(Command::tune);
    FoldSpec folds[2];
    auto labels = read_folds(config.fold_assignment, folds);
    auto resources = Resources::load(config);
    auto runs = parse_run(config.target_run, config.run_depth);
    auto actual = ground_truth(config.target_metric, runs, parse_qrels(config.test_qrels));
    auto estimates = compute_estimates(config, resources, runs);
    auto context = make_context(estimates, actual);
    auto result = tune_2fold(folds, grid_of(config), context);

    std::optional<std::map<std::string, double>> baseline;
    if (!config.baseline_predictions.empty()) baseline = parse_scores(config.baseline_predictions);
    auto baseline_tau = [&](const std::set<std::string>& ids) {
        std::vector<EvalPair> pairs;
        for (const auto& qid : ids) {
            double value = 0.0;
            if (baseline) {
                auto it = baseline->find(qid);
                if (it == baseline->end()) throw Error("baseline has no prediction for '" + qid + "'");
                value = it->second;
            } else {
                value = estimates.at(qid).base;
            }
            pairs.push_back({qid, value, context.actual.at(qid)});
        }
        return kendall_tau(pairs);
    };

    auto file = open_report(out);
    file << "metric = " << to_string(config.target_metric) << "\n";
    file << "base = " << to_string(config.qpp.predictor.kind) << "\n";
    file << "query_retriever = " << to_string(config.qpp.query_retriever) << "\n";
    file << "use_2hop = " << (config.qpp.use_2hop ? "true" : "false") << "\n";
    file << "baseline = " << (baseline ? config.baseline_predictions.string() : std::string("base predictor")) << "\n";
    const std::string train_labels[2] = {labels.first, labels.second};
    const std::string test_labels[2] = {labels.second, labels.first};
    for (int f = 0; f < 2; ++f) {
        const auto& fold = result.folds[f];
        auto prefix = fmt::format("fold{}.", f + 1);
        file << prefix << "train = " << train_labels[f] << "\n";
        file << prefix << "test = " << test_labels[f] << "\n";
        file << prefix << fmt::format("lambda = {}\n", fold.chosen.lambda);
        file << prefix << "k = " << fold.chosen.k << "\n";
        file << prefix << "train_tau = " << format_tau(fold.train_tau) << "\n";
        file << prefix << "test_tau = " << format_tau(fold.test_tau) << "\n";
        double base_tau = baseline_tau(folds[f].test_ids);
        file << prefix << "baseline_test_tau = " << format_tau(base_tau) << "\n";
        std::size_t n = folds[f].test_ids.size();
        if (n >= 4 && std::abs(fold.test_tau) < 1.0 && std::abs(base_tau) < 1.0) {
            auto z = fisher_z_compare(fold.test_tau, base_tau, n, config.confidence);
            file << prefix << fmt::format("fisher_z = {:.6f}\n", z.z);
            file << prefix << "significant = " << (z.significant ? "true" : "false") << "\n";
        } else {
            file << prefix << "fisher_z = undefined\n";
        }
    }
    file << "mean_test_tau = " << format_tau(result.mean_test_tau) << "\n";
    file << fmt::format("fisher_test = independent-samples r-to-z approximation on tau, confidence {}\n",
                        config.confidence);
    close_report(file, out);
    return result;
}

std::vector<SweepCell> cmd_sweep(const PipelineConfig& config, const fs::path& out) {
    config.validate(Command::sweep);
    auto resources = Resources::load(config);
    auto runs = parse_run(config.target_run, config.run_depth);
    auto actual = ground_truth(config.target_metric, runs, parse_qrels(config.test_qrels));
    auto estimates = compute_estimates(config, resources, runs);
    auto context = make_context(estimates, actual);
    std::set<std::string> ids;
    for (const auto& [qid, v] : actual) ids.insert(qid);
    auto cells = sweep_grid(grid_of(config), context, ids);
    write_sweep_csv(cells, out);
    return cells;
}

}  // namespace qvqpp
