#pragma once

#include <cmath>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <trackuq/costs.hpp>
#include <trackuq/lap.hpp>
#include <trackuq/model.hpp>

namespace trackuq {

/// Stand-in for +infinity inside the LAP matrix; selecting such a cell marks
/// the matching infeasible on decode.
inline constexpr double kBigCost = 1e15;

/// Square LAP encoding of the division-aware assignment problem.
///
/// Each mother appears as two row copies so she can take up to two daughters.
/// Copy one may instead take a dedicated disappearance slot (cost w_d); copy
/// two has a free slot (cost 0), so a disappearing mother is charged w_d
/// exactly once. One appearance row per daughter offers w_a; appearance rows
/// absorb unused slots at no cost, which keeps the matrix square.
struct LapEncoding {
    int m = 0;  // mothers
    int n = 0;  // daughters
    std::vector<std::vector<double>> cost;  // (2m+n) x (2m+n)

    [[nodiscard]] int size() const { return 2 * m + n; }
    [[nodiscard]] int mother_row(int i, int copy) const { return 2 * i + copy; }
    [[nodiscard]] int appear_row(int j) const { return 2 * m + j; }
    [[nodiscard]] int disappear_col(int i) const { return n + 2 * i; }
    [[nodiscard]] int free_col(int i) const { return n + 2 * i + 1; }

    /// Canonical assignment for a perfect matching; edges are read off the
    /// daughter columns only, so copy-symmetric matchings decode identically.
    /// Returns false if the matching uses a forbidden cell.
    bool decode(const std::vector<int>& row_to_col, Assignment& out) const {
        for (int r = 0; r < size(); ++r)
            if (cost[r][row_to_col[r]] >= kBigCost / 2) return false;
        out = Assignment{};
        out.source_size = m;
        out.target_size = n;
        std::vector<int> col_to_row(size(), -1);
        for (int r = 0; r < size(); ++r) col_to_row[row_to_col[r]] = r;
        std::vector<int> mother_load(m, 0);
        for (int j = 0; j < n; ++j) {
            const int r = col_to_row[j];
            if (r < 2 * m) {
                out.edges.push_back({r / 2, j});
                ++mother_load[r / 2];
            } else {
                out.edges.push_back({kBottom, j});
            }
        }
        for (int i = 0; i < m; ++i)
            if (mother_load[i] == 0) out.edges.push_back({i, kBottom});
        out.canonicalize();
        return true;
    }
};

inline LapEncoding encode_lap(const Frame& src, const Frame& tgt, const CostModel& cm) {
    LapEncoding enc;
    enc.m = src.size();
    enc.n = tgt.size();
    const int N = enc.size();
    enc.cost.assign(N, std::vector<double>(N, kBigCost));
    for (int i = 0; i < enc.m; ++i) {
        for (int j = 0; j < enc.n; ++j) {
            double w = cm.link_cost(src.detections[i], tgt.detections[j]);
            if (std::isinf(w)) w = kBigCost;
            enc.cost[enc.mother_row(i, 0)][j] = w;
            enc.cost[enc.mother_row(i, 1)][j] = w;
        }
        enc.cost[enc.mother_row(i, 0)][enc.disappear_col(i)] = cm.disappear_cost;
        enc.cost[enc.mother_row(i, 1)][enc.free_col(i)] = 0.0;
    }
    for (int j = 0; j < enc.n; ++j) {
        enc.cost[enc.appear_row(j)][j] = cm.appear_cost;
        for (int c = enc.n; c < N; ++c) enc.cost[enc.appear_row(j)][c] = 0.0;
    }
    return enc;
}

struct RankedSolution {
    Assignment assignment;
    double log_score = 0.0;
    int rank = 1;
};

namespace detail {

/// Forces/forbids assignment-level edges inside an encoding's matrix.
inline void constrain(LapEncoding& enc, const std::vector<Edge>& includes,
                      const std::vector<Edge>& excludes) {
    const int N = enc.size();
    for (const auto& e : includes) {
        if (e.daughter == kBottom) {
            // Mother must disappear: her copies may not take any daughter.
            for (int j = 0; j < enc.n; ++j) {
                enc.cost[enc.mother_row(e.mother, 0)][j] = kBigCost;
                enc.cost[enc.mother_row(e.mother, 1)][j] = kBigCost;
            }
        } else {
            // Daughter column reachable only by the forced mother (or only
            // by her appearance row when the mother is bottom).
            for (int r = 0; r < N; ++r) {
                const bool allowed = e.mother == kBottom
                                         ? r == enc.appear_row(e.daughter)
                                         : (r == enc.mother_row(e.mother, 0) ||
                                            r == enc.mother_row(e.mother, 1));
                if (!allowed) enc.cost[r][e.daughter] = kBigCost;
            }
        }
    }
    for (const auto& e : excludes) {
        if (e.daughter == kBottom) {
            // Mother must keep at least one daughter: block her w_d slot.
            enc.cost[enc.mother_row(e.mother, 0)][enc.disappear_col(e.mother)] = kBigCost;
        } else if (e.mother == kBottom) {
            enc.cost[enc.appear_row(e.daughter)][e.daughter] = kBigCost;
        } else {
            enc.cost[enc.mother_row(e.mother, 0)][e.daughter] = kBigCost;
            enc.cost[enc.mother_row(e.mother, 1)][e.daughter] = kBigCost;
        }
    }
}

inline bool solve_constrained(const LapEncoding& base, const std::vector<Edge>& includes,
                              const std::vector<Edge>& excludes, Assignment& out) {
    LapEncoding enc = base;
    constrain(enc, includes, excludes);
    if (enc.size() == 0) {
        out = Assignment{};
        return true;
    }
    double total = 0.0;
    const auto row_to_col = solve_lap(enc.cost, total);
    return enc.decode(row_to_col, out);
}

}  // namespace detail

/// MAP assignment maximizing the joint log likelihood over the feasible set.
inline RankedSolution solve_map(const Frame& src, const Frame& tgt, const CostModel& cm) {
    const auto enc = encode_lap(src, tgt, cm);
    Assignment a;
    if (!detail::solve_constrained(enc, {}, {}, a))
        throw StructuralError("assignment problem unexpectedly infeasible");
    return {a, joint_log_likelihood(src, tgt, a, cm), 1};
}

/// Top-k assignments by log score (non-increasing), deduplicated, ties broken
/// by canonical text. Murty partitioning on decoded edges keeps the search
/// over assignments rather than raw matchings.
inline std::vector<RankedSolution> top_k(const Frame& src, const Frame& tgt, const CostModel& cm,
                                         int k) {
    if (k < 1) throw ContractViolation("top_k requires k >= 1");
    const auto enc = encode_lap(src, tgt, cm);

    struct Node {
        std::vector<Edge> includes;
        std::vector<Edge> excludes;
        Assignment solution;
        double score = 0.0;
        std::string text;
    };
    auto better = [](const Node& a, const Node& b) {
        if (a.score != b.score) return a.score < b.score;  // max-heap on score
        return a.text > b.text;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(better)> queue(better);

    auto push = [&](std::vector<Edge> inc, std::vector<Edge> exc) {
        Assignment a;
        if (!detail::solve_constrained(enc, inc, exc, a)) return;
        Node node{std::move(inc), std::move(exc), a, joint_log_likelihood(src, tgt, a, cm),
                  a.canonical_text()};
        queue.push(std::move(node));
    };
    push({}, {});

    std::vector<RankedSolution> out;
    std::set<std::string> seen;
    while (!queue.empty() && static_cast<int>(out.size()) < k) {
        Node node = queue.top();
        queue.pop();
        if (seen.insert(node.text).second)
            out.push_back({node.solution, node.score, static_cast<int>(out.size()) + 1});

        // Partition the remaining assignments of this subproblem.
        std::vector<Edge> branchable;
        for (const auto& e : node.solution.edges) {
            if (std::find(node.includes.begin(), node.includes.end(), e) == node.includes.end())
                branchable.push_back(e);
        }
        auto inc = node.includes;
        for (const auto& e : branchable) {
            auto exc = node.excludes;
            exc.push_back(e);
            push(inc, exc);
            inc.push_back(e);
        }
    }
    return out;
}

}  // namespace trackuq
