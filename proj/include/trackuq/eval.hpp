#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <trackuq/dbmc.hpp>
#include <trackuq/model.hpp>

namespace trackuq {

struct ReliabilityBin {
    double lower = 0.0;
    double upper = 0.0;
    int count = 0;
    double mean_confidence = 0.0;
    double empirical_accuracy = 0.0;
};

enum class SparsificationCriterion { EdgeProbability, DaughterEntropy };

struct SparsificationCurve {
    SparsificationCriterion criterion = SparsificationCriterion::EdgeProbability;
    std::vector<double> thresholds;  // removal quantiles, ascending
    std::vector<std::optional<double>> retained_accuracy;
    double baseline_accuracy = 0.0;
};

/// Per-daughter MAP decisions scored against ground truth; the bottom class
/// stands in for appearing daughters on both sides.
inline LabeledEdges evaluate_predictions(const Assignment& map_assignment,
                                         const EdgeProbabilityMatrix& probs,
                                         const Assignment& truth) {
    if (probs.kind() != MatrixKind::ColumnNormalized)
        throw ContractViolation("evaluation needs column-normalized probabilities");
    if (map_assignment.source_size != truth.source_size ||
        map_assignment.target_size != truth.target_size ||
        probs.mothers() != map_assignment.source_size ||
        probs.daughters() != map_assignment.target_size)
        throw StructuralError("prediction, probabilities and truth span different frames");

    const int n = map_assignment.target_size;
    std::vector<int> predicted(n, probs.bottom_row());
    std::vector<int> actual(n, probs.bottom_row());
    for (const auto& e : map_assignment.edges)
        if (e.daughter != kBottom)
            predicted[e.daughter] = e.mother == kBottom ? probs.bottom_row() : e.mother;
    for (const auto& e : truth.edges)
        if (e.daughter != kBottom)
            actual[e.daughter] = e.mother == kBottom ? probs.bottom_row() : e.mother;

    LabeledEdges out;
    out.reserve(n);
    for (int j = 0; j < n; ++j) {
        LabeledColumn col;
        col.probs.resize(probs.mothers() + 1);
        for (int i = 0; i <= probs.mothers(); ++i) col.probs[i] = probs.at(i, j);
        col.true_class = actual[j];
        col.predicted = predicted[j];
        col.confidence = probs.at(predicted[j], j);
        out.push_back(std::move(col));
    }
    return out;
}

inline double accuracy(const LabeledEdges& data) {
    if (data.empty()) throw ContractViolation("accuracy of empty prediction set");
    int correct = 0;
    for (const auto& c : data) correct += c.correct() ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

/// Equal-width-binned expected calibration error plus the reliability bins.
inline std::pair<double, std::vector<ReliabilityBin>> expected_calibration_error(
    const LabeledEdges& data, int bins) {
    if (bins < 1) throw ConfigError("bins must be >= 1");
    if (data.empty()) throw ContractViolation("calibration of empty prediction set");
    std::vector<ReliabilityBin> out(bins);
    std::vector<double> conf_sum(bins, 0.0);
    std::vector<int> correct(bins, 0);
    for (int b = 0; b < bins; ++b) {
        out[b].lower = static_cast<double>(b) / bins;
        out[b].upper = static_cast<double>(b + 1) / bins;
    }
    for (const auto& c : data) {
        int b = static_cast<int>(c.confidence * bins);
        b = std::clamp(b, 0, bins - 1);
        ++out[b].count;
        conf_sum[b] += c.confidence;
        correct[b] += c.correct() ? 1 : 0;
    }
    double ece = 0.0;
    const double total = static_cast<double>(data.size());
    for (int b = 0; b < bins; ++b) {
        if (out[b].count == 0) continue;
        out[b].mean_confidence = conf_sum[b] / out[b].count;
        out[b].empirical_accuracy = static_cast<double>(correct[b]) / out[b].count;
        ece += (out[b].count / total) * std::abs(out[b].empirical_accuracy - out[b].mean_confidence);
    }
    return {ece, out};
}

/// Accuracy of the retained set after removing the most uncertain fraction q
/// of predictions, for each q in the quantile grid.
inline SparsificationCurve sparsification(const LabeledEdges& data,
                                          const std::vector<double>& entropies,
                                          SparsificationCriterion criterion,
                                          const std::vector<double>& quantiles) {
    if (data.empty()) throw ContractViolation("sparsification of empty prediction set");
    if (criterion == SparsificationCriterion::DaughterEntropy && entropies.size() != data.size())
        throw StructuralError("entropies not aligned with predictions");

    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Most certain first; index breaks ties deterministically.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ua = criterion == SparsificationCriterion::DaughterEntropy
                              ? entropies[a]
                              : -data[a].confidence;
        const double ub = criterion == SparsificationCriterion::DaughterEntropy
                              ? entropies[b]
                              : -data[b].confidence;
        return ua < ub;
    });

    SparsificationCurve curve;
    curve.criterion = criterion;
    curve.thresholds = quantiles;
    curve.baseline_accuracy = accuracy(data);
    for (double q : quantiles) {
        if (q < 0.0 || q > 1.0) throw ConfigError("quantile outside [0,1]");
        const auto keep =
            n - static_cast<std::size_t>(std::llround(q * static_cast<double>(n)));
        if (keep == 0) {
            curve.retained_accuracy.emplace_back(std::nullopt);
            continue;
        }
        int correct = 0;
        for (std::size_t k = 0; k < keep; ++k) correct += data[order[k]].correct() ? 1 : 0;
        curve.retained_accuracy.emplace_back(static_cast<double>(correct) /
                                             static_cast<double>(keep));
    }
    return curve;
}

/// Mean gain of retained accuracy over the unsparsified baseline.
inline double accuracy_improvement(const SparsificationCurve& curve) {
    double total = 0.0;
    int defined = 0;
    for (const auto& r : curve.retained_accuracy) {
        if (!r) continue;
        total += *r - curve.baseline_accuracy;
        ++defined;
    }
    if (defined == 0) throw ContractViolation("sparsification curve has no defined points");
    return total / defined;
}

}  // namespace trackuq
