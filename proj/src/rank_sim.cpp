#include "qvqpp/rank_sim.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <vector>

namespace qvqpp {

void RboParams::validate() const {
    if (!(p > 0.0 && p < 1.0)) throw Error("RBO persistence p must lie in (0,1)");
    if (eval_depth == 0) throw Error("RBO eval_depth must be positive");
}

namespace {

void require_distinct(std::span<const std::string> ids) {
    std::unordered_set<std::string_view> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) throw Error("duplicate id '" + id + "' in ranked list");
    }
}

}  // namespace

double rbo_ext(std::span<const std::string> a, std::span<const std::string> b, const RboParams& params) {
    params.validate();
    require_distinct(a);
    require_distinct(b);
    a = a.first(std::min(a.size(), params.eval_depth));
    b = b.first(std::min(b.size(), params.eval_depth));
    if (a.empty() || b.empty()) return 0.0;

    auto shorter = a.size() <= b.size() ? a : b;
    auto longer = a.size() <= b.size() ? b : a;
    const std::size_t s = shorter.size();
    const std::size_t l = longer.size();
    const double p = params.p;

    // overlap[d-1] = |shorter[:min(d,s)] ∩ longer[:d]|
    std::vector<double> overlap(l);
    std::unordered_set<std::string_view> seen_short;
    std::unordered_set<std::string_view> seen_long;
    std::size_t x = 0;
    for (std::size_t d = 0; d < l; ++d) {
        const std::string& from_long = longer[d];
        if (d < s) {
            const std::string& from_short = shorter[d];
            if (from_short == from_long) {
                ++x;
            } else {
                if (seen_long.count(from_short)) ++x;
                if (seen_short.count(from_long)) ++x;
            }
            seen_short.insert(from_short);
        } else if (seen_short.count(from_long)) {
            ++x;
        }
        seen_long.insert(from_long);
        overlap[d] = static_cast<double>(x);
    }

    const double x_s = overlap[s - 1];
    const double x_l = overlap[l - 1];
    double sum = 0.0;
    double pd = 1.0;
    for (std::size_t d = 1; d <= l; ++d) {
        pd *= p;
        const auto dd = static_cast<double>(d);
        sum += overlap[d - 1] / dd * pd;
        if (d > s) sum += x_s * (dd - static_cast<double>(s)) / (static_cast<double>(s) * dd) * pd;
    }
    const double tail = ((x_l - x_s) / static_cast<double>(l) + x_s / static_cast<double>(s)) * pd;
    const double rbo = (1.0 - p) / p * sum + tail;
    return std::clamp(rbo, 0.0, 1.0);
}

double rbo_ext(const RankedList& a, const RankedList& b, const RboParams& params) {
    std::vector<std::string> ia;
    std::vector<std::string> ib;
    ia.reserve(a.size());
    ib.reserve(b.size());
    for (const auto& e : a.entries) ia.push_back(e.doc_id);
    for (const auto& e : b.entries) ib.push_back(e.doc_id);
    return rbo_ext(ia, ib, params);
}

}  // namespace qvqpp
