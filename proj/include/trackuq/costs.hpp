#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <trackuq/model.hpp>

namespace trackuq {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

struct BrownianParams {
    double lambda = 1.0;  // motion precision, 1/px^2

    void validate() const {
        if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
    }
};

/// Link cost w plus the appearance/disappearance log-costs w_a, w_d.
struct CostModel {
    std::function<double(const Detection&, const Detection&)> link_cost;
    double appear_cost = 10.0;
    double disappear_cost = 10.0;
    std::string name = "l2";
};

inline double squared_distance(const Detection& a, const Detection& b) {
    if (a.centroid.size() != b.centroid.size())
        throw StructuralError("centroid dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.centroid.size(); ++k) {
        const double d = a.centroid[k] - b.centroid[k];
        s += d * d;
    }
    return s;
}

/// (lambda/2) * ||a - b||^2, the Brownian-motion link cost.
inline double l2_cost(const Detection& a, const Detection& b, const BrownianParams& p) {
    return 0.5 * p.lambda * squared_distance(a, b);
}

/// L2 cost with the mother's activity scaling the motion variance.
inline double activity_cost(const Detection& a, const Detection& b, const BrownianParams& p) {
    if (!a.activity || *a.activity <= 0.0)
        throw ConfigError("activity cost requires a positive activity on the mother");
    return 0.5 * p.lambda / *a.activity * squared_distance(a, b);
}

/// Negative pixel-overlap of the two segmentation masks.
inline double overlap_cost(const Detection& a, const Detection& b) {
    if (!a.mask || !b.mask) throw ConfigError("overlap cost requires masks on both detections");
    return -static_cast<double>(mask_intersection_count(*a.mask, *b.mask));
}

inline CostModel make_l2_cost(BrownianParams p, double appear = 10.0, double disappear = 10.0) {
    p.validate();
    return {[p](const Detection& a, const Detection& b) { return l2_cost(a, b, p); },
            appear, disappear, "l2"};
}

inline CostModel make_activity_cost(BrownianParams p, double appear = 10.0, double disappear = 10.0) {
    p.validate();
    return {[p](const Detection& a, const Detection& b) { return activity_cost(a, b, p); },
            appear, disappear, "activity"};
}

inline CostModel make_overlap_cost(double appear = 10.0, double disappear = 10.0) {
    return {[](const Detection& a, const Detection& b) { return overlap_cost(a, b); },
            appear, disappear, "overlap"};
}

/// Log joint likelihood of the target detections given the source frame and
/// an assignment: sum of -w over real links, minus w_a per appearance and
/// w_d per disappearance (up to the dropped normalization constant).
inline double joint_log_likelihood(const Frame& src, const Frame& tgt, const Assignment& a,
                                   const CostModel& cm) {
    if (a.source_size != src.size() || a.target_size != tgt.size())
        throw StructuralError("assignment sizes do not match frames");
    if (!is_feasible(a)) throw ContractViolation("joint_log_likelihood on infeasible assignment");
    double total = 0.0;
    for (const auto& e : a.edges) {
        if (e.mother == kBottom) {
            total -= cm.appear_cost;
        } else if (e.daughter == kBottom) {
            total -= cm.disappear_cost;
        } else {
            total -= cm.link_cost(src.detections[e.mother], tgt.detections[e.daughter]);
        }
    }
    return total;
}

}  // namespace trackuq
