#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <trackuq/costs.hpp>
#include <trackuq/model.hpp>
#include <trackuq/solver.hpp>

namespace trackuq {

inline double log_sum_exp(const std::vector<double>& xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : xs) mx = std::max(mx, x);
    if (std::isinf(mx)) return mx;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

namespace detail {

inline void accumulate_assignment(EdgeProbabilityMatrix& p, const Assignment& a, double weight) {
    for (const auto& e : a.edges) {
        const int i = e.mother == kBottom ? p.bottom_row() : e.mother;
        const int j = e.daughter == kBottom ? p.bottom_col() : e.daughter;
        p.at(i, j) += weight;
    }
}

}  // namespace detail

/// Exact posterior edge probabilities by enumerating the feasible set under
/// the uniform prior. Oracle-scale inputs only.
inline EdgeProbabilityMatrix exact_edge_probabilities(const Frame& src, const Frame& tgt,
                                                      const CostModel& cm,
                                                      int limit = kDefaultOracleLimit) {
    const auto all = enumerate_feasible(src.size(), tgt.size(), limit);
    std::vector<double> scores;
    scores.reserve(all.size());
    for (const auto& a : all) scores.push_back(joint_log_likelihood(src, tgt, a, cm));
    const double lse = log_sum_exp(scores);
    EdgeProbabilityMatrix p(src.size(), tgt.size(), MatrixKind::Joint);
    for (std::size_t k = 0; k < all.size(); ++k)
        detail::accumulate_assignment(p, all[k], std::exp(scores[k] - lse));
    return p;
}

/// Self-normalized importance-weighted edge probabilities over a ranked
/// solution set: p_k proportional to exp(log_score_k), the uniform prior
/// cancelling.
inline EdgeProbabilityMatrix sni_edge_probabilities(const std::vector<RankedSolution>& solutions,
                                                    const Frame& src, const Frame& tgt) {
    if (solutions.empty()) throw ContractViolation("sni estimator needs at least one solution");
    std::vector<double> scores;
    scores.reserve(solutions.size());
    for (const auto& s : solutions) scores.push_back(s.log_score);
    const double lse = log_sum_exp(scores);
    EdgeProbabilityMatrix p(src.size(), tgt.size(), MatrixKind::Joint);
    for (std::size_t k = 0; k < solutions.size(); ++k)
        detail::accumulate_assignment(p, solutions[k].assignment, std::exp(scores[k] - lse));
    return p;
}

/// Unweighted edge frequencies across a sample of assignments.
inline EdgeProbabilityMatrix mc_edge_probabilities(const std::vector<Assignment>& samples) {
    if (samples.empty()) throw ContractViolation("monte carlo estimator needs at least one sample");
    const int m = samples.front().source_size;
    const int n = samples.front().target_size;
    EdgeProbabilityMatrix p(m, n, MatrixKind::Joint);
    for (const auto& a : samples) {
        if (a.source_size != m || a.target_size != n)
            throw ContractViolation("samples span different frame sizes");
        detail::accumulate_assignment(p, a, 1.0);
    }
    // Counts first, one division at the end: an edge present in every sample
    // comes out as exactly 1.0.
    const double count = static_cast<double>(samples.size());
    for (int i = 0; i <= p.mothers(); ++i)
        for (int j = 0; j <= p.daughters(); ++j) p.at(i, j) /= count;
    return p;
}

}  // namespace trackuq
