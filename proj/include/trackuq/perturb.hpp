#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <set>
#include <vector>

#include <trackuq/bayes.hpp>
#include <trackuq/costs.hpp>
#include <trackuq/model.hpp>
#include <trackuq/solver.hpp>

namespace trackuq {

enum class NoiseKind { GaussianCentroid, MaskInflateDeflate };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::GaussianCentroid;
    double gamma = 0.1;       // centroid noise variance, px^2
    int radius = 1;           // mask morphology radius, px
    std::uint64_t seed = 0;
    int samples = 10;         // ensemble size K

    void validate() const {
        if (kind == NoiseKind::GaussianCentroid && !(gamma > 0.0))
            throw ConfigError("gamma must be > 0");
        if (kind == NoiseKind::MaskInflateDeflate && radius < 1)
            throw ConfigError("radius must be >= 1");
        if (samples < 1) throw ConfigError("samples must be >= 1");
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent substream per (seed, sample, frame, detection) so members can
/// be generated in any order.
inline std::mt19937_64 substream(std::uint64_t seed, int sample_index, int time_index, int id) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(sample_index));
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(time_index)));
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(id)));
    return std::mt19937_64(h);
}

inline Mask dilate(const Mask& m) {
    std::set<Pixel> out(m.begin(), m.end());
    for (const auto& p : m) {
        out.insert({p[0] + 1, p[1]});
        out.insert({p[0] - 1, p[1]});
        out.insert({p[0], p[1] + 1});
        out.insert({p[0], p[1] - 1});
    }
    return Mask(out.begin(), out.end());
}

inline Mask erode(const Mask& m) {
    std::set<Pixel> in(m.begin(), m.end());
    Mask out;
    for (const auto& p : m) {
        if (in.count({p[0] + 1, p[1]}) && in.count({p[0] - 1, p[1]}) &&
            in.count({p[0], p[1] + 1}) && in.count({p[0], p[1] - 1}))
            out.push_back(p);
    }
    return out;
}

}  // namespace detail

/// One resampled version of a frame under the noise distribution.
/// Deterministic in (spec.seed, sample_index, frame time, detection ids).
inline Frame perturb_frame(const Frame& f, const NoiseSpec& spec, int sample_index) {
    spec.validate();
    Frame out = f;
    for (auto& d : out.detections) {
        auto rng = detail::substream(spec.seed, sample_index, f.time_index, d.id);
        if (spec.kind == NoiseKind::GaussianCentroid) {
            std::normal_distribution<double> noise(0.0, std::sqrt(spec.gamma));
            for (auto& c : d.centroid) c += noise(rng);
        } else {
            if (!d.mask) throw ConfigError("mask perturbation requires masks");
            std::bernoulli_distribution coin(0.5);
            Mask m = *d.mask;
            const bool inflate = coin(rng);
            for (int r = 0; r < spec.radius; ++r)
                m = inflate ? detail::dilate(m) : detail::erode(m);
            if (m.empty()) continue;  // erosion degeneracy: keep original
            d.mask = m;
            d.area = static_cast<std::int64_t>(m.size());
            d.centroid = mask_centroid(m);
        }
    }
    return out;
}

/// Monte Carlo edge probabilities from the MAP solutions of K independently
/// perturbed frame pairs.
inline EdgeProbabilityMatrix fp_assignment_ensemble(const Frame& src, const Frame& tgt,
                                                    const CostModel& cm, const NoiseSpec& spec) {
    spec.validate();
    std::vector<Assignment> samples;
    samples.reserve(spec.samples);
    for (int k = 0; k < spec.samples; ++k) {
        const Frame ps = perturb_frame(src, spec, k);
        const Frame pt = perturb_frame(tgt, spec, k);
        samples.push_back(solve_map(ps, pt, cm).assignment);
    }
    return mc_edge_probabilities(samples);
}

/// Cost model whose link cost is the mean of the base cost over K perturbed
/// copies of the frame pair. Appear/disappear costs pass through.
inline CostModel fp_mean_cost(const Frame& src, const Frame& tgt, const CostModel& cm,
                              const NoiseSpec& spec) {
    spec.validate();
    auto perturbed = std::make_shared<std::vector<std::pair<Frame, Frame>>>();
    perturbed->reserve(spec.samples);
    for (int k = 0; k < spec.samples; ++k)
        perturbed->emplace_back(perturb_frame(src, spec, k), perturb_frame(tgt, spec, k));

    auto index_of = [](const Frame& f, int id) {
        for (int i = 0; i < f.size(); ++i)
            if (f.detections[i].id == id) return i;
        throw StructuralError("detection not part of the perturbed frame pair");
    };
    const Frame src_copy = src;
    const Frame tgt_copy = tgt;
    CostModel mean = cm;
    mean.name = cm.name + "+fp";
    mean.link_cost = [base = cm.link_cost, perturbed, src_copy, tgt_copy,
                      index_of](const Detection& a, const Detection& b) {
        const int i = index_of(src_copy, a.id);
        const int j = index_of(tgt_copy, b.id);
        double s = 0.0;
        for (const auto& [ps, pt] : *perturbed) s += base(ps.detections[i], pt.detections[j]);
        return s / static_cast<double>(perturbed->size());
    };
    return mean;
}

}  // namespace trackuq
