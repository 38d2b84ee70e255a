// Command line front end: tracking, uncertainty estimation, temperature
// fitting, calibration/sparsification evaluation and the exhaustive oracle.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <trackuq/trackuq.hpp>

namespace {

using namespace trackuq;

struct CommonOpts {
    std::string input;
    std::string format = "jsonl";
    std::string cost = "l2";
    double lambda = 1.0;
    double wa = 10.0;
    double wd = 10.0;
    int subsample_factor = 1;
    std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--input", o.input, "sequence file (jsonl) or directory (ctc)")->required();
    cmd->add_option("--format", o.format, "input format: jsonl | ctc")
        ->check(CLI::IsMember({"jsonl", "ctc"}));
    cmd->add_option("--cost", o.cost, "cost model: l2 | activity | overlap")
        ->check(CLI::IsMember({"l2", "activity", "overlap"}));
    cmd->add_option("--lambda", o.lambda, "motion precision for l2/activity costs");
    cmd->add_option("--wa", o.wa, "appearance cost");
    cmd->add_option("--wd", o.wd, "disappearance cost");
    cmd->add_option("--subsample", o.subsample_factor, "keep every n-th frame");
    cmd->add_option("--out-dir", o.out_dir, "output directory");
}

Sequence load(const CommonOpts& o) {
    const auto fmt = o.format == "ctc" ? SequenceFormat::Ctc : SequenceFormat::DetectionsJsonl;
    Sequence seq = load_sequence(o.input, fmt);
    return subsample(seq, o.subsample_factor);
}

CostModel make_cost(const CommonOpts& o) {
    if (o.cost == "l2") return make_l2_cost({o.lambda}, o.wa, o.wd);
    if (o.cost == "activity") return make_activity_cost({o.lambda}, o.wa, o.wd);
    return make_overlap_cost(o.wa, o.wd);
}

struct MethodOpts {
    std::vector<std::string> methods = {"sm"};
    int k = 10;
    std::string noise = "gaussian";
    double gamma = 0.1;
    int radius = 1;
    int samples = 10;
    std::uint64_t seed = 0;
    std::optional<double> tau;
    std::string calibrate;  // sequence used to fit temperatures
    bool parental = true;
};

void add_method(CLI::App* cmd, MethodOpts& o) {
    cmd->add_option("--method", o.methods,
                    "methods: sm | fp | fp+a | as, optionally with +ts suffix");
    cmd->add_option("--k", o.k, "top-k solutions for as");
    cmd->add_option("--noise", o.noise, "noise kind: gaussian | mask")
        ->check(CLI::IsMember({"gaussian", "mask"}));
    cmd->add_option("--gamma", o.gamma, "gaussian centroid noise variance");
    cmd->add_option("--radius", o.radius, "mask inflate/deflate radius");
    cmd->add_option("--samples", o.samples, "perturbation ensemble size");
    cmd->add_option("--seed", o.seed, "perturbation seed");
    cmd->add_option("--tau", o.tau, "temperature for +ts methods");
    cmd->add_option("--calibrate", o.calibrate,
                    "jsonl sequence used to fit temperatures for +ts methods");
    cmd->add_flag("--parental,!--no-parental", o.parental,
                  "parental softmax for sm/fp (bottom class in the denominator)");
}

NoiseSpec make_noise(const MethodOpts& o) {
    NoiseSpec spec;
    spec.kind = o.noise == "mask" ? NoiseKind::MaskInflateDeflate : NoiseKind::GaussianCentroid;
    spec.gamma = o.gamma;
    spec.radius = o.radius;
    spec.seed = o.seed;
    spec.samples = o.samples;
    return spec;
}

std::vector<MethodSpec> make_methods(const MethodOpts& o, const CommonOpts& common,
                                     const CostModel& cm) {
    std::vector<MethodSpec> out;
    std::optional<Sequence> calib;
    for (const auto& name : o.methods) {
        MethodSpec spec;
        std::string base = name;
        if (base.size() > 3 && base.substr(base.size() - 3) == "+ts") {
            spec.tempered = true;
            base = base.substr(0, base.size() - 3);
        } else if (base.size() > 3 && base.substr(base.size() - 3) == "_ts") {
            spec.tempered = true;
            base = base.substr(0, base.size() - 3);
        }
        spec.family = parse_family(base);
        spec.cost_model = cm.name;
        spec.k = o.k;
        spec.parental = o.parental;
        if (spec.family == MethodFamily::FP || spec.family == MethodFamily::FPA)
            spec.noise = make_noise(o);
        if (spec.tempered) {
            if (o.tau) {
                spec.tau = Temperature{*o.tau};
            } else if (!o.calibrate.empty()) {
                if (!calib) {
                    calib = load_sequence(o.calibrate, SequenceFormat::DetectionsJsonl);
                    calib = subsample(*calib, common.subsample_factor);
                }
                spec.tau = fit_temperature_on(*calib, cm, spec);
            } else {
                throw ConfigError(name + " needs --tau or --calibrate");
            }
        }
        out.push_back(std::move(spec));
    }
    return out;
}

int run_track(const CommonOpts& common) {
    const Sequence seq = load(common);
    const CostModel cm = make_cost(common);
    std::filesystem::create_directories(common.out_dir);
    std::ofstream out(std::filesystem::path(common.out_dir) / "tracks.csv");
    out << "frame_pair,mother,daughter\n";
    for (std::size_t p = 0; p + 1 < seq.frames.size(); ++p) {
        const auto sol = solve_map(seq.frames[p], seq.frames[p + 1], cm);
        for (const auto& e : sol.assignment.edges)
            out << p << ',' << (e.mother == kBottom ? "_" : std::to_string(e.mother)) << ','
                << (e.daughter == kBottom ? "_" : std::to_string(e.daughter)) << '\n';
    }
    std::cout << "wrote " << (std::filesystem::path(common.out_dir) / "tracks.csv").string()
              << "\n";
    return 0;
}

int run_experiment_cmd(const CommonOpts& common, const MethodOpts& method, int bins,
                       const std::vector<double>& quantiles) {
    const Sequence seq = load(common);
    const CostModel cm = make_cost(common);
    const auto methods = make_methods(method, common, cm);
    ExperimentConfig config;
    config.bins = bins;
    config.quantiles = quantiles;
    config.subsample_factor = common.subsample_factor;
    config.out_dir = common.out_dir;
    const auto manifest = run_experiment(seq, methods, cm, config);
    for (const auto& entry : manifest["methods"])
        std::cout << entry["method"].get<std::string>() << ": "
                  << entry["status"].get<std::string>() << "\n";
    bool ok = true;
    for (const auto& entry : manifest["methods"]) ok &= entry["status"] == "ok";
    return ok ? 0 : 1;
}

int run_fit_temp(const CommonOpts& common, const MethodOpts& method) {
    const Sequence seq = load(common);
    const CostModel cm = make_cost(common);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& name : method.methods) {
        MethodOpts single = method;
        single.methods = {name};
        single.tau.reset();
        MethodSpec spec = make_methods(single, common, cm).front();
        const Temperature tau = fit_temperature_on(seq, cm, spec);
        out.push_back({{"method", spec.label()},
                       {"cost_model", cm.name},
                       {"subsample_factor", common.subsample_factor},
                       {"tau", tau.tau}});
        std::cout << spec.label() << ": tau = " << format_double(tau.tau) << "\n";
    }
    std::filesystem::create_directories(common.out_dir);
    std::ofstream tf(std::filesystem::path(common.out_dir) / "temperature.json");
    tf << out.dump(2) << '\n';
    return 0;
}

int run_oracle(const CommonOpts& common, int pair, int limit) {
    const Sequence seq = load(common);
    const CostModel cm = make_cost(common);
    if (pair < 0 || pair + 1 >= static_cast<int>(seq.frames.size()))
        throw ConfigError("pair index out of range");
    const Frame& src = seq.frames[pair];
    const Frame& tgt = seq.frames[pair + 1];
    const auto all = enumerate_feasible(src.size(), tgt.size(), limit);
    const auto exact = exact_edge_probabilities(src, tgt, cm, limit);
    const auto map = solve_map(src, tgt, cm);
    std::cout << "feasible assignments: " << all.size() << "\n";
    std::cout << "map: " << map.assignment.canonical_text()
              << " (log score " << format_double(map.log_score) << ")\n";
    std::cout << matrix_to_csv(exact);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uncertainty-aware frame-to-frame cell tracking"};
    app.require_subcommand(1);
    app.set_config("--config");

    CommonOpts common;
    MethodOpts method;
    int bins = 10;
    std::vector<double> quantiles = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int pair = 0;
    int oracle_limit = kDefaultOracleLimit;

    auto* track = app.add_subcommand("track", "MAP assignment per frame pair");
    add_common(track, common);

    auto* uncertainty =
        app.add_subcommand("uncertainty", "edge probabilities per method (no ground truth needed)");
    add_common(uncertainty, common);
    add_method(uncertainty, method);

    auto* fit = app.add_subcommand("fit-temp", "fit temperatures on an annotated sequence");
    add_common(fit, common);
    add_method(fit, method);

    auto* evaluate = app.add_subcommand("evaluate", "calibration and sparsification reports");
    add_common(evaluate, common);
    add_method(evaluate, method);
    evaluate->add_option("--bins", bins, "reliability bins");
    evaluate->add_option("--quantiles", quantiles, "sparsification removal quantiles");

    auto* oracle = app.add_subcommand("oracle", "exhaustive enumeration check on small inputs");
    add_common(oracle, common);
    oracle->add_option("--pair", pair, "frame pair index");
    oracle->add_option("--limit", oracle_limit, "enumeration size guard");

    CLI11_PARSE(app, argc, argv);

    try {
        if (track->parsed()) return run_track(common);
        if (uncertainty->parsed() || evaluate->parsed())
            return run_experiment_cmd(common, method, bins, quantiles);
        if (fit->parsed()) return run_fit_temp(common, method);
        if (oracle->parsed()) return run_oracle(common, pair, oracle_limit);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
