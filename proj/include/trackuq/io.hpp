#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <trackuq/model.hpp>

namespace trackuq {

/// Shortest round-trip decimal form; keeps output byte-stable across runs.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct Sequence {
    std::vector<Frame> frames;
    std::optional<std::vector<Assignment>> ground_truth;  // one per consecutive pair
    std::string source;

    void validate() const {
        for (const auto& f : frames) f.validate();
        if (ground_truth) {
            if (ground_truth->size() + 1 != frames.size())
                throw StructuralError("ground truth length does not match frame count");
            for (std::size_t p = 0; p < ground_truth->size(); ++p) {
                const auto& a = (*ground_truth)[p];
                if (a.source_size != frames[p].size() || a.target_size != frames[p + 1].size())
                    throw StructuralError("ground truth sizes do not match frames");
                if (!is_feasible(a))
                    throw StructuralError("infeasible ground truth at pair " + std::to_string(p));
            }
        }
    }
};

enum class SequenceFormat { DetectionsJsonl, Ctc };

namespace detail {

inline Mask decode_rle(const nlohmann::json& runs) {
    std::vector<Pixel> pixels;
    for (const auto& run : runs) {
        if (!run.is_array() || run.size() != 3)
            throw ParseError("mask run must be [row, col_start, length]");
        const int row = run[0].get<int>();
        const int col = run[1].get<int>();
        const int len = run[2].get<int>();
        for (int c = 0; c < len; ++c) pixels.push_back({row, col + c});
    }
    return make_mask(std::move(pixels));
}

inline Sequence load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    // frame index -> (detection, optional mother id)
    std::map<int, std::vector<std::pair<Detection, std::optional<int>>>> by_frame;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            Detection d;
            d.id = obj.at("id").get<int>();
            d.centroid = obj.at("centroid").get<std::vector<double>>();
            d.area = obj.at("area").get<std::int64_t>();
            if (obj.contains("mask")) d.mask = decode_rle(obj["mask"]);
            if (obj.contains("activity")) d.activity = obj["activity"].get<double>();
            std::optional<int> mother;
            if (obj.contains("mother")) mother = obj["mother"].get<int>();
            by_frame[obj.at("frame").get<int>()].emplace_back(std::move(d), mother);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }

    Sequence seq;
    seq.source = path.string();
    std::vector<std::vector<std::optional<int>>> mothers_per_frame;
    for (const auto& [time, dets] : by_frame) {
        Frame f;
        f.time_index = time;
        std::vector<std::optional<int>> mothers;
        for (const auto& [d, mother] : dets) {
            f.detections.push_back(d);
            mothers.push_back(mother);
        }
        seq.frames.push_back(std::move(f));
        mothers_per_frame.push_back(std::move(mothers));
    }

    // Ground truth present iff every detection after the first frame names a mother.
    bool have_gt = seq.frames.size() > 1;
    for (std::size_t p = 1; p < mothers_per_frame.size() && have_gt; ++p)
        for (const auto& m : mothers_per_frame[p])
            if (!m) have_gt = false;
    if (have_gt) {
        std::vector<Assignment> gt;
        for (std::size_t p = 1; p < seq.frames.size(); ++p) {
            const Frame& prev = seq.frames[p - 1];
            std::map<int, int> id_to_index;
            for (int i = 0; i < prev.size(); ++i) id_to_index[prev.detections[i].id] = i;
            Assignment a;
            a.source_size = prev.size();
            a.target_size = seq.frames[p].size();
            std::vector<int> load(prev.size(), 0);
            for (int j = 0; j < seq.frames[p].size(); ++j) {
                const int mid = *mothers_per_frame[p][j];
                if (mid < 0) {
                    a.edges.push_back({kBottom, j});
                } else {
                    const auto it = id_to_index.find(mid);
                    if (it == id_to_index.end())
                        throw IntegrityError(path.string() + ": mother id " + std::to_string(mid) +
                                             " not present in previous frame");
                    a.edges.push_back({it->second, j});
                    ++load[it->second];
                }
            }
            for (int i = 0; i < prev.size(); ++i)
                if (load[i] == 0) a.edges.push_back({i, kBottom});
            a.canonicalize();
            gt.push_back(std::move(a));
        }
        seq.ground_truth = std::move(gt);
    }
    seq.validate();
    return seq;
}

/// P2/P5 portable graymap; label images use the pixel value as cell label.
inline std::vector<std::vector<int>> read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    auto next_token = [&]() -> std::string {
        std::string tok;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                while (in.get(c) && c != '\n') {}
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok += c;
        }
        if (tok.empty()) throw ParseError(path.string() + ": truncated header");
        return tok;
    };
    const std::string magic = next_token();
    if (magic != "P2" && magic != "P5") throw ParseError(path.string() + ": not a PGM file");
    const int width = std::stoi(next_token());
    const int height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        throw ParseError(path.string() + ": bad PGM dimensions");
    std::vector<std::vector<int>> grid(height, std::vector<int>(width, 0));
    if (magic == "P2") {
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                int v;
                if (!(in >> v)) throw ParseError(path.string() + ": truncated pixel data");
                grid[r][c] = v;
            }
    } else {
        const int bytes = maxval > 255 ? 2 : 1;
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                unsigned char b[2];
                in.read(reinterpret_cast<char*>(b), bytes);
                if (!in) throw ParseError(path.string() + ": truncated pixel data");
                grid[r][c] = bytes == 2 ? (b[0] << 8) | b[1] : b[0];
            }
    }
    return grid;
}

struct TrackRecord {
    int label = 0;
    int begin = 0;
    int end = 0;
    int parent = 0;
};

inline Sequence load_ctc(const std::filesystem::path& dir) {
    const auto table_path = dir / "man_track.txt";
    std::ifstream table(table_path);
    if (!table) throw ParseError("cannot open " + table_path.string());
    std::map<int, TrackRecord> tracks;
    std::string line;
    int lineno = 0;
    while (std::getline(table, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        TrackRecord rec;
        if (!(ls >> rec.label >> rec.begin >> rec.end >> rec.parent))
            throw ParseError(table_path.string() + ":" + std::to_string(lineno) +
                             ": expected 'label begin end parent'");
        tracks[rec.label] = rec;
    }

    std::vector<std::filesystem::path> grids;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".pgm") grids.push_back(entry.path());
    std::sort(grids.begin(), grids.end());
    if (grids.empty()) throw ParseError(dir.string() + ": no .pgm label grids");

    Sequence seq;
    seq.source = dir.string();
    std::vector<std::map<int, int>> label_to_index;  // per frame
    for (std::size_t t = 0; t < grids.size(); ++t) {
        const auto grid = read_pgm(grids[t]);
        std::map<int, Mask> masks;
        for (int r = 0; r < static_cast<int>(grid.size()); ++r)
            for (int c = 0; c < static_cast<int>(grid[r].size()); ++c)
                if (grid[r][c] > 0) masks[grid[r][c]].push_back({r, c});
        Frame f;
        f.time_index = static_cast<int>(t);
        std::map<int, int> index;
        for (auto& [label, pixels] : masks) {
            const auto it = tracks.find(label);
            if (it == tracks.end())
                throw IntegrityError(grids[t].string() + ": label " + std::to_string(label) +
                                     " missing from track table");
            if (static_cast<int>(t) < it->second.begin || static_cast<int>(t) > it->second.end)
                throw IntegrityError(grids[t].string() + ": label " + std::to_string(label) +
                                     " outside its track span");
            Detection d;
            d.id = label;
            d.mask = make_mask(std::move(pixels));
            d.area = static_cast<std::int64_t>(d.mask->size());
            d.centroid = mask_centroid(*d.mask);
            index[label] = f.size();
            f.detections.push_back(std::move(d));
        }
        label_to_index.push_back(std::move(index));
        seq.frames.push_back(std::move(f));
    }

    std::vector<Assignment> gt;
    for (std::size_t t = 1; t < seq.frames.size(); ++t) {
        const auto& prev = label_to_index[t - 1];
        Assignment a;
        a.source_size = seq.frames[t - 1].size();
        a.target_size = seq.frames[t].size();
        std::vector<int> load(a.source_size, 0);
        for (const auto& [label, j] : label_to_index[t]) {
            int mother = kBottom;
            if (auto it = prev.find(label); it != prev.end()) {
                mother = it->second;  // same track continues
            } else {
                const auto& rec = tracks.at(label);
                if (rec.begin == static_cast<int>(t) && rec.parent > 0) {
                    if (auto pit = prev.find(rec.parent); pit != prev.end())
                        mother = pit->second;  // division edge
                }
            }
            a.edges.push_back({mother, j});
            if (mother != kBottom) ++load[mother];
        }
        for (int i = 0; i < a.source_size; ++i)
            if (load[i] == 0) a.edges.push_back({i, kBottom});
        a.canonicalize();
        gt.push_back(std::move(a));
    }
    if (seq.frames.size() > 1) seq.ground_truth = std::move(gt);
    seq.validate();
    return seq;
}

}  // namespace detail

inline Sequence load_sequence(const std::filesystem::path& path, SequenceFormat format) {
    return format == SequenceFormat::DetectionsJsonl ? detail::load_jsonl(path)
                                                     : detail::load_ctc(path);
}

/// Keeps frames 0, f, 2f, ...; ground truth between retained frames is the
/// lineage-ancestor relation composed across the gap.
inline Sequence subsample(const Sequence& seq, int factor) {
    if (factor < 1) throw ConfigError("subsample factor must be >= 1");
    if (factor == 1) return seq;
    Sequence out;
    out.source = seq.source;
    std::vector<std::size_t> kept;
    for (std::size_t p = 0; p < seq.frames.size(); p += factor) {
        kept.push_back(p);
        out.frames.push_back(seq.frames[p]);
    }
    if (seq.ground_truth && kept.size() > 1) {
        std::vector<Assignment> gt;
        for (std::size_t k = 1; k < kept.size(); ++k) {
            const std::size_t a = kept[k - 1];
            const std::size_t b = kept[k];
            Assignment comp;
            comp.source_size = seq.frames[a].size();
            comp.target_size = seq.frames[b].size();
            std::vector<int> load(comp.source_size, 0);
            for (int j = 0; j < seq.frames[b].size(); ++j) {
                int cur = j;
                for (std::size_t step = b; step > a && cur != kBottom; --step) {
                    const Assignment& stepgt = (*seq.ground_truth)[step - 1];
                    int mother = kBottom;
                    for (const auto& e : stepgt.edges)
                        if (e.daughter == cur) mother = e.mother;
                    cur = mother;
                }
                comp.edges.push_back({cur, j});
                if (cur != kBottom) ++load[cur];
            }
            for (int i = 0; i < comp.source_size; ++i)
                if (load[i] == 0) comp.edges.push_back({i, kBottom});
            comp.canonicalize();
            if (!is_feasible(comp))
                throw IntegrityError("composed ground truth infeasible between frames " +
                                     std::to_string(seq.frames[a].time_index) + " and " +
                                     std::to_string(seq.frames[b].time_index));
            gt.push_back(std::move(comp));
        }
        out.ground_truth = std::move(gt);
    }
    out.validate();
    return out;
}

/// CSV form of an edge-probability matrix with explicit bottom labels.
inline std::string matrix_to_csv(const EdgeProbabilityMatrix& p) {
    std::string out = "mother";
    for (int j = 0; j < p.daughters(); ++j) out += ",d" + std::to_string(j);
    out += ",_\n";
    for (int i = 0; i <= p.mothers(); ++i) {
        out += i == p.bottom_row() ? "_" : "m" + std::to_string(i);
        for (int j = 0; j <= p.daughters(); ++j) out += "," + format_double(p.at(i, j));
        out += "\n";
    }
    return out;
}

inline nlohmann::json matrix_to_json(const EdgeProbabilityMatrix& p) {
    nlohmann::json rows = nlohmann::json::array();
    nlohmann::json row_labels = nlohmann::json::array();
    nlohmann::json col_labels = nlohmann::json::array();
    for (int i = 0; i <= p.mothers(); ++i)
        row_labels.push_back(i == p.bottom_row() ? "_" : "m" + std::to_string(i));
    for (int j = 0; j <= p.daughters(); ++j)
        col_labels.push_back(j == p.bottom_col() ? "_" : "d" + std::to_string(j));
    for (int i = 0; i <= p.mothers(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j <= p.daughters(); ++j) row.push_back(p.at(i, j));
        rows.push_back(std::move(row));
    }
    return {{"kind", p.kind() == MatrixKind::Joint ? "joint" : "column-normalized"},
            {"rows", row_labels},
            {"cols", col_labels},
            {"values", rows}};
}

}  // namespace trackuq
