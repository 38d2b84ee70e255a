#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <trackuq/bayes.hpp>
#include <trackuq/dbmc.hpp>
#include <trackuq/eval.hpp>
#include <trackuq/io.hpp>
#include <trackuq/perturb.hpp>
#include <trackuq/solver.hpp>

namespace trackuq {

enum class MethodFamily { SM, FP, FPA, AS };

inline std::string family_name(MethodFamily f) {
    switch (f) {
        case MethodFamily::SM: return "sm";
        case MethodFamily::FP: return "fp";
        case MethodFamily::FPA: return "fp_a";
        case MethodFamily::AS: return "as";
    }
    throw ConfigError("unknown method family");
}

inline MethodFamily parse_family(const std::string& s) {
    if (s == "sm" || s == "SM") return MethodFamily::SM;
    if (s == "fp" || s == "FP") return MethodFamily::FP;
    if (s == "fp_a" || s == "fp+a" || s == "FP+A") return MethodFamily::FPA;
    if (s == "as" || s == "AS") return MethodFamily::AS;
    throw ConfigError("unknown method '" + s + "' (expected sm, fp, fp+a or as)");
}

/// One row of the method matrix: how to turn a frame pair into edge
/// probabilities, optionally temperature scaled.
struct MethodSpec {
    MethodFamily family = MethodFamily::SM;
    bool tempered = false;
    std::string cost_model = "l2";
    std::optional<NoiseSpec> noise;      // FP and FP+A
    int k = 10;                          // AS
    std::optional<Temperature> tau;      // required when tempered
    bool parental = true;                // softmax variant for SM and FP

    [[nodiscard]] std::string label() const {
        return family_name(family) + (tempered ? "_ts" : "");
    }

    void validate() const {
        if ((family == MethodFamily::FP || family == MethodFamily::FPA) && !noise)
            throw ConfigError(label() + " requires a noise spec");
        if (family == MethodFamily::AS && k < 1)
            throw ConfigError("as requires k >= 1");
        if (tempered) {
            if (!tau) throw ConfigError(label() + " requires a fitted or supplied temperature");
            tau->validate();
        }
    }
};

struct PairPrediction {
    Assignment map_assignment;
    std::optional<EdgeProbabilityMatrix> joint;  // FP+A and AS only
    EdgeProbabilityMatrix conditional;
};

namespace detail {

inline std::vector<std::vector<double>> cost_matrix(const Frame& src, const Frame& tgt,
                                                    const CostModel& cm) {
    std::vector<std::vector<double>> w(src.size(), std::vector<double>(tgt.size(), 0.0));
    for (int i = 0; i < src.size(); ++i)
        for (int j = 0; j < tgt.size(); ++j)
            w[i][j] = cm.link_cost(src.detections[i], tgt.detections[j]);
    return w;
}

}  // namespace detail

/// Edge probabilities and MAP assignment for one frame pair under one method.
/// Temperature is applied here when the spec carries one.
inline PairPrediction predict_pair(const Frame& src, const Frame& tgt, const CostModel& cm,
                                   const MethodSpec& spec) {
    spec.validate();
    PairPrediction out;
    switch (spec.family) {
        case MethodFamily::SM: {
            out.map_assignment = solve_map(src, tgt, cm).assignment;
            out.conditional = softmax_columns(detail::cost_matrix(src, tgt, cm), spec.parental);
            break;
        }
        case MethodFamily::FP: {
            const CostModel mean = fp_mean_cost(src, tgt, cm, *spec.noise);
            out.map_assignment = solve_map(src, tgt, mean).assignment;
            out.conditional = softmax_columns(detail::cost_matrix(src, tgt, mean), spec.parental);
            break;
        }
        case MethodFamily::FPA: {
            out.map_assignment = solve_map(src, tgt, cm).assignment;
            out.joint = fp_assignment_ensemble(src, tgt, cm, *spec.noise);
            out.conditional = column_normalize(*out.joint);
            break;
        }
        case MethodFamily::AS: {
            const auto solutions = top_k(src, tgt, cm, spec.k);
            out.map_assignment = solutions.front().assignment;
            out.joint = sni_edge_probabilities(solutions, src, tgt);
            out.conditional = column_normalize(*out.joint);
            break;
        }
    }
    if (spec.tempered) out.conditional = apply_temperature(out.conditional, *spec.tau);
    return out;
}

/// Pooled labeled edges over all consecutive pairs of a sequence, plus the
/// per-daughter entropies aligned with them.
inline std::pair<LabeledEdges, std::vector<double>> label_sequence(const Sequence& seq,
                                                                  const CostModel& cm,
                                                                  const MethodSpec& spec) {
    if (!seq.ground_truth) throw ConfigError("evaluation requires ground truth");
    LabeledEdges pooled;
    std::vector<double> entropies;
    for (std::size_t p = 0; p + 1 < seq.frames.size(); ++p) {
        const auto pred = predict_pair(seq.frames[p], seq.frames[p + 1], cm, spec);
        auto labeled =
            evaluate_predictions(pred.map_assignment, pred.conditional, (*seq.ground_truth)[p]);
        const auto h = daughter_entropy(pred.conditional);
        pooled.insert(pooled.end(), labeled.begin(), labeled.end());
        entropies.insert(entropies.end(), h.begin(), h.end());
    }
    return {std::move(pooled), std::move(entropies)};
}

/// Temperature fitted on a calibration sequence for one (un-tempered) method.
inline Temperature fit_temperature_on(const Sequence& seq, const CostModel& cm, MethodSpec spec) {
    spec.tempered = false;
    spec.tau.reset();
    return fit_temperature(label_sequence(seq, cm, spec).first);
}

struct ExperimentConfig {
    int bins = 10;
    std::vector<double> quantiles = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int subsample_factor = 1;
    std::filesystem::path out_dir;
};

/// Runs the method matrix over a sequence: per-pair edge tables, pooled
/// reliability and sparsification reports, fitted-temperature sidecar and a
/// manifest. Partial results survive a failing method.
inline nlohmann::json run_experiment(const Sequence& seq,
                                     const std::vector<MethodSpec>& methods, const CostModel& cm,
                                     const ExperimentConfig& config) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    nlohmann::json manifest;
    manifest["source"] = seq.source;
    manifest["cost_model"] = cm.name;
    manifest["subsample_factor"] = config.subsample_factor;
    manifest["bins"] = config.bins;
    manifest["methods"] = nlohmann::json::array();
    nlohmann::json temperatures = nlohmann::json::array();

    for (const auto& spec : methods) {
        nlohmann::json entry;
        entry["method"] = spec.label();
        try {
            spec.validate();

            std::ofstream edges(config.out_dir / ("edges_" + spec.label() + ".csv"));
            edges << "frame_pair,mother,daughter,p_joint,p_cond\n";
            LabeledEdges pooled;
            std::vector<double> entropies;
            for (std::size_t p = 0; p + 1 < seq.frames.size(); ++p) {
                const auto pred = predict_pair(seq.frames[p], seq.frames[p + 1], cm, spec);
                const auto& cond = pred.conditional;
                for (int i = 0; i <= cond.mothers(); ++i) {
                    for (int j = 0; j <= cond.daughters(); ++j) {
                        if (i == cond.bottom_row() && j == cond.bottom_col()) continue;
                        edges << p << ','
                              << (i == cond.bottom_row() ? "_" : std::to_string(i)) << ','
                              << (j == cond.bottom_col() ? "_" : std::to_string(j)) << ','
                              << (pred.joint ? format_double(pred.joint->at(i, j)) : "") << ','
                              << format_double(cond.at(i, j)) << '\n';
                    }
                }
                if (seq.ground_truth) {
                    auto labeled = evaluate_predictions(pred.map_assignment, cond,
                                                        (*seq.ground_truth)[p]);
                    const auto h = daughter_entropy(cond);
                    pooled.insert(pooled.end(), labeled.begin(), labeled.end());
                    entropies.insert(entropies.end(), h.begin(), h.end());
                }
            }
            entry["edges"] = "edges_" + spec.label() + ".csv";

            if (seq.ground_truth && !pooled.empty()) {
                const auto [ece, bins] = expected_calibration_error(pooled, config.bins);
                std::ofstream rel(config.out_dir / ("reliability_" + spec.label() + ".csv"));
                rel << "lower,upper,count,mean_confidence,empirical_accuracy\n";
                for (const auto& b : bins)
                    rel << format_double(b.lower) << ',' << format_double(b.upper) << ','
                        << b.count << ',' << format_double(b.mean_confidence) << ','
                        << format_double(b.empirical_accuracy) << '\n';
                entry["ece"] = ece;
                entry["accuracy"] = accuracy(pooled);

                std::ofstream sp(config.out_dir / ("sparsification_" + spec.label() + ".csv"));
                sp << "criterion,quantile,retained_accuracy,baseline_accuracy\n";
                for (const auto crit : {SparsificationCriterion::EdgeProbability,
                                        SparsificationCriterion::DaughterEntropy}) {
                    const auto curve = sparsification(pooled, entropies, crit, config.quantiles);
                    const std::string name =
                        crit == SparsificationCriterion::EdgeProbability ? "edge_probability"
                                                                         : "daughter_entropy";
                    for (std::size_t q = 0; q < curve.thresholds.size(); ++q)
                        sp << name << ',' << format_double(curve.thresholds[q]) << ','
                           << (curve.retained_accuracy[q]
                                   ? format_double(*curve.retained_accuracy[q])
                                   : "")
                           << ',' << format_double(curve.baseline_accuracy) << '\n';
                    entry["improvement_" + name] = accuracy_improvement(curve);
                }
            }

            if (spec.tempered && spec.tau)
                temperatures.push_back({{"method", spec.label()},
                                        {"cost_model", cm.name},
                                        {"subsample_factor", config.subsample_factor},
                                        {"tau", spec.tau->tau}});
            entry["status"] = "ok";
        } catch (const std::exception& e) {
            entry["status"] = "failed";
            entry["error"] = e.what();
        }
        manifest["methods"].push_back(std::move(entry));
    }

    if (!temperatures.empty()) {
        std::ofstream tf(config.out_dir / "temperature.json");
        tf << temperatures.dump(2) << '\n';
    }
    std::ofstream mf(config.out_dir / "manifest.json");
    mf << manifest.dump(2) << '\n';
    return manifest;
}

}  // namespace trackuq
