#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "qvqpp/types.hpp"

namespace qvqpp {

/// Row-major matrix of externally computed embeddings, one row per id.
template <typename Scalar>
class BasicEmbeddingStore {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BasicEmbeddingStore() = default;
    BasicEmbeddingStore(std::vector<std::string> ids, Matrix vectors);

    Eigen::Index dim() const noexcept { return vectors_.cols(); }
    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const Matrix& vectors() const noexcept { return vectors_; }

    /// Row view for `id`, or nullopt when absent.
    std::optional<Vector> find(const std::string& id) const;

    /// Exhaustive cosine scan. Zero-norm rows never match; ties go to the
    /// smaller id; `exclude` ids are skipped.
    RankedList knn_cosine(const Vector& query, std::size_t depth, const std::set<std::string>& exclude = {}) const;

private:
    std::vector<std::string> ids_;
    Matrix vectors_;
    Vector norms_;
    std::unordered_map<std::string, Eigen::Index> lookup_;
};

using EmbeddingStore = BasicEmbeddingStore<double>;

/// Reads `count dim` then `id v1 .. vdim` per line.
EmbeddingStore load_vectors(const std::filesystem::path& path);

template <typename Scalar>
RankedList knn_cosine(const BasicEmbeddingStore<Scalar>& store,
                      const typename BasicEmbeddingStore<Scalar>::Vector& query, std::size_t depth,
                      const std::set<std::string>& exclude = {}) {
    return store.knn_cosine(query, depth, exclude);
}

extern template class BasicEmbeddingStore<double>;
extern template class BasicEmbeddingStore<float>;

}  // namespace qvqpp
