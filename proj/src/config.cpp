#include "qvqpp/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>

#include "qvqpp/corpus_io.hpp"

namespace qvqpp {

namespace {

double to_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    if (!detail::parse_double(value, v)) throw Error("config key '" + key + "': expected a number, got '" + value + "'");
    return v;
}

long long to_integer(const std::string& key, const std::string& value, long long min) {
    long long v = 0;
    if (!detail::parse_int(value, v)) throw Error("config key '" + key + "': expected an integer, got '" + value + "'");
    if (v < min) throw Error("config key '" + key + "': must be at least " + std::to_string(min));
    return v;
}

std::size_t to_count(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(to_integer(key, value, 1));
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw Error("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::string current;
    for (char c : value + ",") {
        if (c == ',') {
            auto item = detail::trim(current);
            if (!item.empty()) items.emplace_back(item);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    return items;
}

}  // namespace

PipelineConfig PipelineConfig::from_pairs(const std::map<std::string, std::string>& pairs, const fs::path& base_dir) {
    PipelineConfig cfg;
    auto as_path = [&](const std::string& value) {
        fs::path p(value);
        return (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
    };

    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"collection", [&](auto&, auto& v) { cfg.collection = as_path(v); }},
        {"train_queries", [&](auto&, auto& v) { cfg.train_queries = as_path(v); }},
        {"train_qrels", [&](auto&, auto& v) { cfg.train_qrels = as_path(v); }},
        {"test_queries", [&](auto&, auto& v) { cfg.test_queries = as_path(v); }},
        {"test_qrels", [&](auto&, auto& v) { cfg.test_qrels = as_path(v); }},
        {"target_run", [&](auto&, auto& v) { cfg.target_run = as_path(v); }},
        {"train_embeddings", [&](auto&, auto& v) { cfg.train_embeddings = as_path(v); }},
        {"test_embeddings", [&](auto&, auto& v) { cfg.test_embeddings = as_path(v); }},
        {"index_dir", [&](auto&, auto& v) { cfg.index_dir = as_path(v); }},
        {"fold_assignment", [&](auto&, auto& v) { cfg.fold_assignment = as_path(v); }},
        {"baseline_predictions", [&](auto&, auto& v) { cfg.baseline_predictions = as_path(v); }},
        {"lambda", [&](auto& k, auto& v) { cfg.qpp.lambda = to_double(k, v); }},
        {"k", [&](auto& k, auto& v) { cfg.qpp.k = to_count(k, v); }},
        {"n", [&](auto& k, auto& v) { cfg.qpp.n = to_count(k, v); }},
        {"query_retriever", [&](auto&, auto& v) { cfg.qpp.query_retriever = parse_query_retriever(v); }},
        {"use_2hop", [&](auto& k, auto& v) { cfg.qpp.use_2hop = to_bool(k, v); }},
        {"pseudo_query_m", [&](auto& k, auto& v) { cfg.qpp.pseudo_query_m = to_count(k, v); }},
        {"rbo_p", [&](auto& k, auto& v) { cfg.qpp.rbo.p = to_double(k, v); }},
        {"rbo_depth", [&](auto& k, auto& v) { cfg.qpp.rbo.eval_depth = to_count(k, v); }},
        {"base", [&](auto&, auto& v) { cfg.qpp.predictor.kind = parse_predictor_kind(v); }},
        {"internal_depth", [&](auto& k, auto& v) { cfg.qpp.internal_depth = to_count(k, v); }},
        {"top_k", [&](auto& k, auto& v) { cfg.qpp.predictor.top_k = to_count(k, v); }},
        {"uef_samples", [&](auto& k, auto& v) { cfg.qpp.predictor.uef.samples = to_count(k, v); }},
        {"uef_sample_size", [&](auto& k, auto& v) { cfg.qpp.predictor.uef.sample_size = to_count(k, v); }},
        {"uef_pool", [&](auto& k, auto& v) { cfg.qpp.predictor.uef.pool_floor = to_count(k, v); }},
        {"dirichlet_mu", [&](auto& k, auto& v) { cfg.qpp.predictor.uef.mu = to_double(k, v); }},
        {"bm25_k1", [&](auto& k, auto& v) { cfg.bm25.k1 = to_double(k, v); }},
        {"bm25_b", [&](auto& k, auto& v) { cfg.bm25.b = to_double(k, v); }},
        {"target_metric", [&](auto&, auto& v) { cfg.target_metric = parse_target_metric(v); }},
        {"lambda_grid",
         [&](auto& k, auto& v) {
             cfg.lambda_grid.clear();
             for (auto& item : split_list(v)) cfg.lambda_grid.push_back(to_double(k, item));
         }},
        {"k_grid",
         [&](auto& k, auto& v) {
             cfg.k_grid.clear();
             for (auto& item : split_list(v)) cfg.k_grid.push_back(to_count(k, item));
         }},
        {"run_depth", [&](auto& k, auto& v) { cfg.run_depth = to_count(k, v); }},
        {"confidence", [&](auto& k, auto& v) { cfg.confidence = to_double(k, v); }},
        {"seed", [&](auto& k, auto& v) { cfg.seed = static_cast<std::uint64_t>(to_integer(k, v, 0)); }},
        {"workers", [&](auto& k, auto& v) { cfg.workers = static_cast<unsigned>(to_count(k, v)); }},
    };

    for (const auto& [key, value] : pairs) {
        auto it = setters.find(key);
        if (it == setters.end()) throw Error("unknown config key '" + key + "'");
        it->second(key, value);
    }
    cfg.qpp.predictor.seed = cfg.seed;
    return cfg;
}

PipelineConfig PipelineConfig::from_file(const fs::path& path, const std::map<std::string, std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::map<std::string, std::string> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = detail::trim(view);
        if (view.empty()) continue;
        auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ParseError(path.string(), lineno, "expected key = value");
        auto key = std::string(detail::trim(view.substr(0, eq)));
        auto value = std::string(detail::trim(view.substr(eq + 1)));
        if (key.empty()) throw ParseError(path.string(), lineno, "empty key");
        if (!pairs.emplace(key, value).second) throw ParseError(path.string(), lineno, "duplicate key '" + key + "'");
    }
    for (const auto& [key, value] : overrides) pairs[key] = value;
    return from_pairs(pairs, path.parent_path());
}

std::size_t PipelineConfig::max_k() const {
    if (k_grid.empty()) throw Error("k_grid is empty");
    return *std::max_element(k_grid.begin(), k_grid.end());
}

void PipelineConfig::validate(Command command) const {
    auto require = [](const fs::path& p, const char* key) {
        if (p.empty()) throw Error(std::string("config key '") + key + "' is required for this command");
    };

    switch (command) {
        case Command::index:
            require(collection, "collection");
            require(train_queries, "train_queries");
            require(index_dir, "index_dir");
            break;
        case Command::tune:
            require(fold_assignment, "fold_assignment");
            [[fallthrough]];
        case Command::sweep:
            require(test_qrels, "test_qrels");
            [[fallthrough]];
        case Command::predict:
            require(target_run, "target_run");
            [[fallthrough]];
        case Command::qv:
            require(index_dir, "index_dir");
            require(collection, "collection");
            require(train_queries, "train_queries");
            require(test_queries, "test_queries");
            if (qpp.use_2hop) require(train_qrels, "train_qrels");
            if (qpp.query_retriever == QueryRetriever::dense) {
                require(train_embeddings, "train_embeddings");
                require(test_embeddings, "test_embeddings");
            }
            break;
        case Command::evaluate:
            require(target_run, "target_run");
            require(test_qrels, "test_qrels");
            break;
    }

    const std::pair<const fs::path*, const char*> inputs[] = {
        {&collection, "collection"},
        {&train_queries, "train_queries"},
        {&train_qrels, "train_qrels"},
        {&test_queries, "test_queries"},
        {&test_qrels, "test_qrels"},
        {&target_run, "target_run"},
        {&train_embeddings, "train_embeddings"},
        {&test_embeddings, "test_embeddings"},
        {&fold_assignment, "fold_assignment"},
        {&baseline_predictions, "baseline_predictions"},
    };
    for (auto [p, key] : inputs) {
        if (!p->empty() && !fs::exists(*p)) throw Error(std::string(key) + ": no such file " + p->string());
    }
    if (command != Command::index && command != Command::evaluate && !fs::is_directory(index_dir))
        throw Error("index_dir " + index_dir.string() + " does not exist; run `index` first");

    qpp.validate();
    if (bm25.k1 < 0.0 || bm25.b < 0.0 || bm25.b > 1.0) throw Error("invalid BM25 parameters");
    if (command == Command::tune || command == Command::sweep) {
        if (lambda_grid.empty()) throw Error("lambda_grid is empty");
        for (double l : lambda_grid) {
            if (!(l >= 0.0 && l <= 1.0)) throw Error("lambda_grid values must lie in [0,1]");
        }
        if (qpp.n <= max_k()) throw Error("candidate pool n must exceed every k in k_grid");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) throw Error("confidence must lie in (0,1)");
}

std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& assignments) {
    std::map<std::string, std::string> out;
    for (const auto& a : assignments) {
        auto eq = a.find('=');
        if (eq == std::string::npos) throw Error("override '" + a + "' is not key=value");
        out[std::string(detail::trim(std::string_view(a).substr(0, eq)))] =
            std::string(detail::trim(std::string_view(a).substr(eq + 1)));
    }
    return out;
}

}  // namespace qvqpp
