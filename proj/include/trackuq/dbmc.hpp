#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <trackuq/bayes.hpp>
#include <trackuq/model.hpp>

namespace trackuq {

struct Temperature {
    double tau = 1.0;

    void validate() const {
        if (!(tau > 0.0) || !std::isfinite(std::log(tau)))
            throw ConfigError("temperature must be positive and finite");
    }
};

/// One daughter's labeled prediction: the full conditional column (bottom
/// class last), the true mother class, and the evaluated MAP decision.
struct LabeledColumn {
    std::vector<double> probs;  // size mothers + 1; last entry is the bottom class
    int true_class = 0;         // index into probs
    int predicted = 0;
    double confidence = 0.0;

    [[nodiscard]] bool correct() const { return predicted == true_class; }
};

using LabeledEdges = std::vector<LabeledColumn>;

/// Daughter-wise softmax of a cost matrix. The parental variant adds a unit
/// term to the denominator, which becomes the bottom class; the plain variant
/// leaves the bottom row at zero.
inline EdgeProbabilityMatrix softmax_columns(const std::vector<std::vector<double>>& costs,
                                             bool parental) {
    const int m = static_cast<int>(costs.size());
    const int n = m == 0 ? 0 : static_cast<int>(costs.front().size());
    for (const auto& row : costs)
        if (static_cast<int>(row.size()) != n) throw StructuralError("ragged cost matrix");
    EdgeProbabilityMatrix p(m, n, MatrixKind::ColumnNormalized);
    for (int j = 0; j < n; ++j) {
        std::vector<double> logits;
        logits.reserve(m + 1);
        for (int i = 0; i < m; ++i) logits.push_back(-costs[i][j]);
        if (parental) logits.push_back(0.0);  // unnormalized bottom-class weight
        const double lse = log_sum_exp(logits);
        if (std::isinf(lse))
            throw DegenerateColumnError("all-forbidden column " + std::to_string(j));
        for (int i = 0; i < m; ++i)
            p.at(i, j) = std::isinf(costs[i][j]) ? 0.0 : std::exp(logits[i] - lse);
        if (parental) p.at(p.bottom_row(), j) = std::exp(-lse);
    }
    return p;
}

/// Joint edge probabilities divided by their column sums (bottom row
/// included). The disappearance column is carried through unchanged.
inline EdgeProbabilityMatrix column_normalize(const EdgeProbabilityMatrix& p) {
    if (p.kind() != MatrixKind::ColumnNormalized && p.kind() != MatrixKind::Joint)
        throw StructuralError("unknown matrix kind");
    EdgeProbabilityMatrix out = p;
    out.set_kind(MatrixKind::ColumnNormalized);
    for (int j = 0; j < p.daughters(); ++j) {
        const double s = p.column_sum(j);
        if (s <= 0.0)
            throw DegenerateColumnError("column " + std::to_string(j) + " has no mass");
        for (int i = 0; i <= p.mothers(); ++i) out.at(i, j) = p.at(i, j) / s;
    }
    return out;
}

/// Entrywise power tau followed by column renormalization; zeros stay zero.
inline EdgeProbabilityMatrix apply_temperature(const EdgeProbabilityMatrix& p,
                                               const Temperature& t) {
    t.validate();
    EdgeProbabilityMatrix out = p;
    out.set_kind(MatrixKind::ColumnNormalized);
    for (int j = 0; j < p.daughters(); ++j) {
        std::vector<double> logs;
        logs.reserve(p.mothers() + 1);
        for (int i = 0; i <= p.mothers(); ++i) {
            const double v = p.at(i, j);
            logs.push_back(v > 0.0 ? t.tau * std::log(v)
                                   : -std::numeric_limits<double>::infinity());
        }
        const double lse = log_sum_exp(logs);
        if (std::isinf(lse))
            throw DegenerateColumnError("column " + std::to_string(j) + " has no mass");
        for (int i = 0; i <= p.mothers(); ++i)
            out.at(i, j) = std::isinf(logs[i]) ? 0.0 : std::exp(logs[i] - lse);
    }
    return out;
}

namespace detail {

inline double temperature_nll(const LabeledEdges& data, double tau) {
    double total = 0.0;
    for (const auto& col : data) {
        const double pt = col.probs[col.true_class];
        if (pt <= 0.0) continue;  // unusable column, constant w.r.t. tau
        std::vector<double> logs;
        logs.reserve(col.probs.size());
        for (double v : col.probs)
            if (v > 0.0) logs.push_back(tau * std::log(v));
        total += -tau * std::log(pt) + log_sum_exp(logs);
    }
    return total;
}

}  // namespace detail

/// Cross-entropy-optimal temperature, found by golden-section search over
/// log tau in [-10, 10].
inline Temperature fit_temperature(const LabeledEdges& data) {
    bool usable = false;
    for (const auto& col : data) {
        if (col.true_class < 0 || col.true_class >= static_cast<int>(col.probs.size()))
            throw StructuralError("true class out of range");
        if (col.probs[col.true_class] > 0.0) usable = true;
    }
    if (!usable) throw UnfittableError("no labeled column gives its true class nonzero mass");

    double lo = -10.0, hi = 10.0;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = detail::temperature_nll(data, std::exp(x1));
    double f2 = detail::temperature_nll(data, std::exp(x2));
    while (hi - lo > 1e-6) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = detail::temperature_nll(data, std::exp(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = detail::temperature_nll(data, std::exp(x2));
        }
    }
    return Temperature{std::exp(0.5 * (lo + hi))};
}

/// Shannon entropy (nats) of each daughter's conditional column, bottom class
/// included.
inline std::vector<double> daughter_entropy(const EdgeProbabilityMatrix& p) {
    if (p.kind() != MatrixKind::ColumnNormalized)
        throw ContractViolation("entropy needs a column-normalized matrix");
    std::vector<double> h(p.daughters(), 0.0);
    for (int j = 0; j < p.daughters(); ++j) {
        double s = 0.0;
        for (int i = 0; i <= p.mothers(); ++i) {
            const double v = p.at(i, j);
            if (v > 0.0) s -= v * std::log(v);
        }
        h[j] = s;
    }
    return h;
}

}  // namespace trackuq
