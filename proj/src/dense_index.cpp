#include "qvqpp/dense_index.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "qvqpp/corpus_io.hpp"

namespace qvqpp {

template <typename Scalar>
BasicEmbeddingStore<Scalar>::BasicEmbeddingStore(std::vector<std::string> ids, Matrix vectors)
    : ids_(std::move(ids)), vectors_(std::move(vectors)) {
    if (static_cast<Eigen::Index>(ids_.size()) != vectors_.rows())
        throw Error("embedding ids and rows disagree");
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(ids_.size()); ++r) {
        if (!lookup_.emplace(ids_[r], r).second) throw Error("duplicate embedding id '" + ids_[r] + "'");
    }
    norms_ = vectors_.rowwise().norm();
}

template <typename Scalar>
std::optional<typename BasicEmbeddingStore<Scalar>::Vector> BasicEmbeddingStore<Scalar>::find(
    const std::string& id) const {
    auto it = lookup_.find(id);
    if (it == lookup_.end()) return std::nullopt;
    return Vector(vectors_.row(it->second).transpose());
}

template <typename Scalar>
RankedList BasicEmbeddingStore<Scalar>::knn_cosine(const Vector& query, std::size_t depth,
                                                   const std::set<std::string>& exclude) const {
    if (depth == 0) throw Error("retrieval depth must be positive");
    if (query.size() != dim())
        throw Error("query vector has dimension " + std::to_string(query.size()) + ", store has " +
                    std::to_string(dim()));
    const Scalar qnorm = query.norm();
    if (!(qnorm > Scalar(0))) throw Error("zero-norm query vector");

    const Vector dots = vectors_ * query;
    RankedList result;
    for (Eigen::Index r = 0; r < dots.size(); ++r) {
        if (!(norms_[r] > Scalar(0))) continue;
        if (exclude.count(ids_[r])) continue;
        double sim = static_cast<double>(dots[r]) / (static_cast<double>(norms_[r]) * static_cast<double>(qnorm));
        result.entries.push_back({ids_[r], sim});
    }
    auto keep = std::min(depth, result.entries.size());
    std::partial_sort(result.entries.begin(), result.entries.begin() + static_cast<std::ptrdiff_t>(keep),
                      result.entries.end(), ranks_before);
    result.entries.resize(keep);
    return result;
}

template class BasicEmbeddingStore<double>;
template class BasicEmbeddingStore<float>;

EmbeddingStore load_vectors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;

    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            if (!detail::trim(line).empty()) return true;
        }
        return false;
    };

    if (!next_line()) throw ParseError(path.string(), 1, "missing `count dim` header");
    auto header = detail::split_whitespace(line);
    long long count = 0;
    long long dim = 0;
    if (header.size() != 2 || !detail::parse_int(header[0], count) || !detail::parse_int(header[1], dim) ||
        count < 0 || dim <= 0)
        throw ParseError(path.string(), lineno, "bad header, expected `count dim`");

    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(count));
    EmbeddingStore::Matrix vectors(count, dim);
    while (next_line()) {
        auto fields = detail::split_whitespace(line);
        std::string id(fields[0]);
        if (static_cast<long long>(fields.size()) - 1 != dim)
            throw ParseError(path.string(), lineno,
                             "row '" + id + "' has " + std::to_string(fields.size() - 1) + " values, expected " +
                                 std::to_string(dim));
        if (static_cast<long long>(ids.size()) >= count)
            throw ParseError(path.string(), lineno, "more rows than the declared count " + std::to_string(count));
        auto row = static_cast<Eigen::Index>(ids.size());
        for (long long c = 0; c < dim; ++c) {
            double v = 0.0;
            if (!detail::parse_double(fields[static_cast<std::size_t>(c) + 1], v))
                throw ParseError(path.string(), lineno, "row '" + id + "' has a non-numeric value");
            vectors(row, c) = v;
        }
        ids.push_back(std::move(id));
    }
    if (static_cast<long long>(ids.size()) != count)
        throw Error(path.string() + ": header declares " + std::to_string(count) + " rows, found " +
                    std::to_string(ids.size()));
    return EmbeddingStore(std::move(ids), std::move(vectors));
}

}  // namespace qvqpp
