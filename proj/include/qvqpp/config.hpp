#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qvqpp/evaluation.hpp"
#include "qvqpp/qv_qpp.hpp"
#include "qvqpp/text_index.hpp"

namespace qvqpp {

namespace fs = std::filesystem;

enum class Command { index, qv, predict, evaluate, tune, sweep };

/// Settings for every subcommand, read from a `key = value` file (`#`
/// starts a comment) with optional overrides. Relative paths resolve
/// against the config file's directory.
struct PipelineConfig {
    fs::path collection;
    fs::path train_queries;
    fs::path train_qrels;
    fs::path test_queries;
    fs::path test_qrels;
    fs::path target_run;
    fs::path train_embeddings;
    fs::path test_embeddings;
    fs::path index_dir;
    fs::path fold_assignment;
    fs::path baseline_predictions;

    QppConfig qpp;
    Bm25Params bm25;
    TargetMetric target_metric = TargetMetric::ap_at_100;
    std::vector<double> lambda_grid = default_lambda_grid();
    std::vector<std::size_t> k_grid = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::size_t run_depth = 100;
    double confidence = 0.99;
    std::uint64_t seed = 42;
    unsigned workers = 1;

    static PipelineConfig from_file(const fs::path& path, const std::map<std::string, std::string>& overrides = {});
    static PipelineConfig from_pairs(const std::map<std::string, std::string>& pairs, const fs::path& base_dir = {});

    /// Checks the settings and input paths needed by `command`. Never touches
    /// the filesystem beyond existence checks.
    void validate(Command command) const;

    std::size_t max_k() const;
};

/// Parses `key=value` override strings from the command line.
std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& assignments);

}  // namespace qvqpp
