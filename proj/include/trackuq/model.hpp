#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <trackuq/errors.hpp>

namespace trackuq {

/// Sentinel index for the fallback class: an appearing daughter has mother
/// kBottom, a disappearing mother has daughter kBottom.
inline constexpr int kBottom = -1;

using Pixel = std::array<int, 2>;

/// Sorted, duplicate-free pixel set.
using Mask = std::vector<Pixel>;

inline Mask make_mask(std::vector<Pixel> pixels) {
    std::sort(pixels.begin(), pixels.end());
    pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
    return pixels;
}

inline std::size_t mask_intersection_count(const Mask& a, const Mask& b) {
    std::size_t count = 0;
    auto it = a.begin();
    auto jt = b.begin();
    while (it != a.end() && jt != b.end()) {
        if (*it < *jt) {
            ++it;
        } else if (*jt < *it) {
            ++jt;
        } else {
            ++count;
            ++it;
            ++jt;
        }
    }
    return count;
}

inline std::vector<double> mask_centroid(const Mask& m) {
    std::vector<double> c(2, 0.0);
    for (const auto& p : m) {
        c[0] += p[0];
        c[1] += p[1];
    }
    if (!m.empty()) {
        c[0] /= static_cast<double>(m.size());
        c[1] /= static_cast<double>(m.size());
    }
    return c;
}

/// One segmented cell in one frame.
struct Detection {
    int id = 0;
    std::vector<double> centroid;  // d = 2 or 3, pixels
    std::int64_t area = 0;         // pixel count
    std::optional<Mask> mask;
    std::optional<double> activity;  // strictly positive when present

    void validate() const {
        if (centroid.size() != 2 && centroid.size() != 3)
            throw StructuralError("detection " + std::to_string(id) + ": centroid must be 2D or 3D");
        if (area < 0) throw StructuralError("detection " + std::to_string(id) + ": negative area");
        if (activity && *activity <= 0.0)
            throw StructuralError("detection " + std::to_string(id) + ": activity must be > 0");
        if (mask) {
            if (static_cast<std::int64_t>(mask->size()) != area)
                throw StructuralError("detection " + std::to_string(id) +
                                      ": area does not match mask size");
            const auto mc = mask_centroid(*mask);
            for (std::size_t k = 0; k < mc.size() && k < centroid.size(); ++k)
                if (std::abs(mc[k] - centroid[k]) > 0.5)
                    throw StructuralError("detection " + std::to_string(id) +
                                          ": centroid disagrees with mask centroid");
        }
    }
};

struct Frame {
    int time_index = 0;
    std::vector<Detection> detections;  // index i here is the i of P_ij

    void validate() const {
        if (time_index < 0) throw StructuralError("negative frame time index");
        std::vector<int> ids;
        ids.reserve(detections.size());
        for (const auto& d : detections) {
            d.validate();
            ids.push_back(d.id);
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw StructuralError("duplicate detection id in frame " + std::to_string(time_index));
    }

    [[nodiscard]] int size() const { return static_cast<int>(detections.size()); }
};

/// A mother-daughter edge; either side may be kBottom, but not both.
struct Edge {
    int mother = kBottom;
    int daughter = kBottom;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// A set of edges between one frame pair, allowing appearances and
/// disappearances. Feasible when every mother has 1-2 real daughters or a
/// single disappearance edge, and every daughter has exactly one edge.
struct Assignment {
    std::vector<Edge> edges;
    int source_size = 0;
    int target_size = 0;

    void canonicalize() { std::sort(edges.begin(), edges.end()); }

    [[nodiscard]] int appear_count() const {
        return static_cast<int>(
            std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return e.mother == kBottom; }));
    }

    [[nodiscard]] int disappear_count() const {
        return static_cast<int>(
            std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return e.daughter == kBottom; }));
    }

    /// Sorted "i->j" / "i->_" / "_->j" token list, the golden-test text form.
    [[nodiscard]] std::string canonical_text() const {
        std::vector<std::string> tokens;
        tokens.reserve(edges.size());
        for (const auto& e : edges) {
            std::string t = e.mother == kBottom ? "_" : std::to_string(e.mother);
            t += "->";
            t += e.daughter == kBottom ? "_" : std::to_string(e.daughter);
            tokens.push_back(std::move(t));
        }
        std::sort(tokens.begin(), tokens.end());
        std::string out;
        for (std::size_t k = 0; k < tokens.size(); ++k) {
            if (k) out += ' ';
            out += tokens[k];
        }
        return out;
    }

    friend bool operator==(const Assignment& a, const Assignment& b) {
        auto ae = a.edges;
        auto be = b.edges;
        std::sort(ae.begin(), ae.end());
        std::sort(be.begin(), be.end());
        return a.source_size == b.source_size && a.target_size == b.target_size && ae == be;
    }
};

/// True iff `a` is in the biologically feasible set: each mother at most
/// twice, each daughter exactly once, no mother unaccounted for.
inline bool is_feasible(const Assignment& a) {
    std::vector<int> mother_links(a.source_size, 0);
    std::vector<int> mother_bottom(a.source_size, 0);
    std::vector<int> daughter_edges(a.target_size, 0);
    for (const auto& e : a.edges) {
        if (e.mother == kBottom && e.daughter == kBottom)
            throw StructuralError("edge with both sides bottom");
        if (e.mother != kBottom) {
            if (e.mother < 0 || e.mother >= a.source_size)
                throw StructuralError("mother index out of range");
            if (e.daughter == kBottom)
                ++mother_bottom[e.mother];
            else
                ++mother_links[e.mother];
        }
        if (e.daughter != kBottom) {
            if (e.daughter < 0 || e.daughter >= a.target_size)
                throw StructuralError("daughter index out of range");
            ++daughter_edges[e.daughter];
        }
    }
    for (int j = 0; j < a.target_size; ++j)
        if (daughter_edges[j] != 1) return false;
    for (int i = 0; i < a.source_size; ++i) {
        if (mother_links[i] > 2) return false;
        // A mother either disappears (exactly one bottom edge) or has real daughters.
        if (mother_links[i] == 0 && mother_bottom[i] != 1) return false;
        if (mother_links[i] > 0 && mother_bottom[i] != 0) return false;
    }
    return true;
}

inline constexpr int kDefaultOracleLimit = 6;

/// Every feasible assignment between m mothers and n daughters, in canonical
/// (lexicographic) order. Exact enumeration only; guarded against blow-up.
inline std::vector<Assignment> enumerate_feasible(int m, int n, int limit = kDefaultOracleLimit) {
    if (m < 0 || n < 0) throw StructuralError("negative frame size");
    if (m > limit || n > limit)
        throw RefusalError("enumeration limited to " + std::to_string(limit) + "x" +
                           std::to_string(limit) + " (got " + std::to_string(m) + "x" +
                           std::to_string(n) + ")");
    std::vector<Assignment> out;
    std::vector<int> choice(n, kBottom);  // mother per daughter
    std::vector<int> load(m, 0);
    std::function<void(int)> recurse = [&](int j) {
        if (j == n) {
            Assignment a;
            a.source_size = m;
            a.target_size = n;
            for (int jj = 0; jj < n; ++jj) a.edges.push_back({choice[jj], jj});
            for (int i = 0; i < m; ++i)
                if (load[i] == 0) a.edges.push_back({i, kBottom});
            a.canonicalize();
            out.push_back(std::move(a));
            return;
        }
        choice[j] = kBottom;
        recurse(j + 1);
        for (int i = 0; i < m; ++i) {
            if (load[i] == 2) continue;
            choice[j] = i;
            ++load[i];
            recurse(j + 1);
            --load[i];
            choice[j] = kBottom;
        }
    };
    recurse(0);
    std::sort(out.begin(), out.end(), [](const Assignment& a, const Assignment& b) {
        return a.edges < b.edges;
    });
    return out;
}

enum class MatrixKind { Joint, ColumnNormalized };

/// Edge-probability matrix over (mothers + bottom row) x (daughters + bottom
/// column). Row index == mothers() is the bottom row (appearance mass per
/// daughter); column index == daughters() is the bottom column (disappearance
/// mass per mother).
class EdgeProbabilityMatrix {
public:
    EdgeProbabilityMatrix() = default;
    EdgeProbabilityMatrix(int mothers, int daughters, MatrixKind kind)
        : mothers_(mothers),
          daughters_(daughters),
          kind_(kind),
          values_(static_cast<std::size_t>(mothers + 1) * (daughters + 1), 0.0) {}

    [[nodiscard]] int mothers() const { return mothers_; }
    [[nodiscard]] int daughters() const { return daughters_; }
    [[nodiscard]] int bottom_row() const { return mothers_; }
    [[nodiscard]] int bottom_col() const { return daughters_; }
    [[nodiscard]] MatrixKind kind() const { return kind_; }
    void set_kind(MatrixKind k) { kind_ = k; }

    double& at(int i, int j) { return values_[idx(i, j)]; }
    [[nodiscard]] double at(int i, int j) const { return values_[idx(i, j)]; }

    /// Accepts kBottom for either index.
    [[nodiscard]] double prob(int mother, int daughter) const {
        return at(mother == kBottom ? bottom_row() : mother,
                  daughter == kBottom ? bottom_col() : daughter);
    }

    [[nodiscard]] double column_sum(int j) const {
        double s = 0.0;
        for (int i = 0; i <= mothers_; ++i) s += at(i, j);
        return s;
    }

    [[nodiscard]] double row_sum(int i) const {
        double s = 0.0;
        for (int j = 0; j <= daughters_; ++j) s += at(i, j);
        return s;
    }

    void validate() const {
        for (int i = 0; i <= mothers_; ++i)
            for (int j = 0; j <= daughters_; ++j)
                if (at(i, j) < -1e-12 || at(i, j) > 1.0 + 1e-12)
                    throw StructuralError("probability entry outside [0,1]");
        if (kind_ == MatrixKind::ColumnNormalized) {
            for (int j = 0; j < daughters_; ++j)
                if (std::abs(column_sum(j) - 1.0) > 1e-9)
                    throw StructuralError("column " + std::to_string(j) + " does not sum to 1");
        }
    }

private:
    [[nodiscard]] std::size_t idx(int i, int j) const {
        if (i < 0 || i > mothers_ || j < 0 || j > daughters_)
            throw StructuralError("probability matrix index out of range");
        return static_cast<std::size_t>(i) * (daughters_ + 1) + j;
    }

    int mothers_ = 0;
    int daughters_ = 0;
    MatrixKind kind_ = MatrixKind::Joint;
    std::vector<double> values_;
};

}  // namespace trackuq
