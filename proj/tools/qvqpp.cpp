#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qvqpp/config.hpp"
#include "qvqpp/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Query performance prediction with retrieved query variants"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_path;
    std::string predictions_path;
    std::string metric_out;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "pipeline config file (key = value)")->required();
        cmd->add_option("-s,--set", overrides, "override a config key, key=value (repeatable)");
    };

    auto* index = app.add_subcommand("index", "build and persist the document and training-query indexes");
    add_common(index);

    auto* qv = app.add_subcommand("qv", "report the selected query variants of every test query");
    add_common(qv);
    qv->add_option("-o,--out", out_path, "QV report TSV")->required();

    auto* predict = app.add_subcommand("predict", "predict performance for every query of the target run");
    add_common(predict);
    predict->add_option("-o,--out", out_path, "predictions TSV")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Kendall tau of predictions against the target metric");
    add_common(evaluate);
    evaluate->add_option("-p,--predictions", predictions_path, "predictions TSV")->required();
    evaluate->add_option("-o,--out", out_path, "report file")->required();
    evaluate->add_option("--metric-out", metric_out, "write per-query ground truth TSV");

    auto* tune = app.add_subcommand("tune", "2-fold tuning of lambda and k");
    add_common(tune);
    tune->add_option("-o,--out", out_path, "tuning report")->required();

    auto* sweep = app.add_subcommand("sweep", "tau over the full lambda x k grid");
    add_common(sweep);
    sweep->add_option("-o,--out", out_path, "sweep CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        auto config = qvqpp::PipelineConfig::from_file(config_path, qvqpp::parse_overrides(overrides));
        if (index->parsed()) {
            qvqpp::cmd_index(config);
        } else if (qv->parsed()) {
            qvqpp::cmd_qv(config, out_path);
        } else if (predict->parsed()) {
            qvqpp::cmd_predict(config, out_path);
        } else if (evaluate->parsed()) {
            auto report = qvqpp::cmd_evaluate(config, predictions_path, out_path, metric_out);
            std::cout << fmt::format("kendall_tau = {:.6f} over {} queries\n", report.tau, report.queries);
        } else if (tune->parsed()) {
            auto result = qvqpp::cmd_tune(config, out_path);
            std::cout << fmt::format("mean_test_tau = {:.6f}\n", result.mean_test_tau);
        } else if (sweep->parsed()) {
            qvqpp::cmd_sweep(config, out_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
