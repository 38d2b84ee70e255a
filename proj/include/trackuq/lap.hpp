#pragma once

#include <limits>
#include <vector>

#include <trackuq/errors.hpp>

namespace trackuq {

/// Minimum-cost perfect matching on a square cost matrix via shortest
/// augmenting paths (Jonker-Volgenant style duals). Returns the column
/// matched to each row; `total_cost` gets the matching cost.
inline std::vector<int> solve_lap(const std::vector<std::vector<double>>& cost,
                                  double& total_cost) {
    const int n = static_cast<int>(cost.size());
    for (const auto& row : cost)
        if (static_cast<int>(row.size()) != n) throw StructuralError("LAP matrix must be square");

    // 1-based internal indexing.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match_col(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match_col[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match_col[j0];
            int j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match_col[j0] != 0);
        do {
            const int j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(n, -1);
    total_cost = 0.0;
    for (int j = 1; j <= n; ++j) {
        if (match_col[j] > 0) {
            row_to_col[match_col[j] - 1] = j - 1;
            total_cost += cost[match_col[j] - 1][j - 1];
        }
    }
    return row_to_col;
}

}  // namespace trackuq
