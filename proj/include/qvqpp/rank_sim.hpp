#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "qvqpp/types.hpp"

namespace qvqpp {

struct RboParams {
    double p = 0.9;
    std::size_t eval_depth = 100;

    void validate() const;
};

/// Extrapolated rank-biased overlap (RBO_EXT) over id sequences, including
/// the uneven-length extrapolation. Both inputs are truncated to
/// `params.eval_depth` first. Returns 0 when either list is empty. Only
/// ranks are used, never scores.
double rbo_ext(std::span<const std::string> a, std::span<const std::string> b, const RboParams& params = {});

double rbo_ext(const RankedList& a, const RankedList& b, const RboParams& params = {});

}  // namespace qvqpp
