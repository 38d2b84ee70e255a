#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <trackuq/experiment.hpp>

#include "test_support.hpp"

using namespace trackuq;
using testsupport::point;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "trackuq_experiment_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

Sequence toy_sequence() {
    // Two mothers, one ambiguous daughter plus one clear continuation.
    Sequence seq;
    seq.frames = {Frame{0, {point(0, 0.0, 0.0), point(1, 2.0, 0.0)}},
                  Frame{1, {point(0, 0.9, 0.0), point(1, 2.1, 0.0)}}};
    seq.ground_truth = {{Assignment{{{0, 0}, {1, 1}}, 2, 2}}};
    seq.source = "toy";
    return seq;
}

}  // namespace

TEST_CASE("softmax method reproduces a hand-computed column") {
    const Frame src{0, {point(0, 0.0, 0.0), point(1, 2.0, 0.0)}};
    const Frame tgt{1, {point(0, 0.5, 0.0)}};
    const auto cm = make_l2_cost({2.0}, 6.0, 6.0);
    MethodSpec spec;
    spec.family = MethodFamily::SM;

    const auto pred = predict_pair(src, tgt, cm, spec);
    // Costs: (2/2)*0.25 = 0.25 and (2/2)*2.25 = 2.25; parental denominator
    // adds a unit term for the bottom class.
    const double e0 = std::exp(-0.25);
    const double e1 = std::exp(-2.25);
    const double z = e0 + e1 + 1.0;
    CHECK(pred.conditional.at(0, 0) == Catch::Approx(e0 / z).margin(1e-12));
    CHECK(pred.conditional.at(1, 0) == Catch::Approx(e1 / z).margin(1e-12));
    CHECK(pred.conditional.prob(kBottom, 0) == Catch::Approx(1.0 / z).margin(1e-12));
    CHECK_FALSE(pred.joint.has_value());

    spec.parental = false;
    const auto plain = predict_pair(src, tgt, cm, spec);
    CHECK(plain.conditional.at(0, 0) == Catch::Approx(e0 / (e0 + e1)).margin(1e-12));
}

TEST_CASE("ranked-solution method with exhaustive k matches the exact posterior") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        auto inst = testsupport::random_instance(rng, 3, 3);
        MethodSpec spec;
        spec.family = MethodFamily::AS;
        spec.k = 5000;  // beyond the full support of any 3x3 instance
        const auto pred = predict_pair(inst.src, inst.tgt, inst.cm, spec);
        REQUIRE(pred.joint.has_value());
        const auto exact = exact_edge_probabilities(inst.src, inst.tgt, inst.cm);
        for (int i = 0; i <= exact.mothers(); ++i)
            for (int j = 0; j <= exact.daughters(); ++j)
                CHECK(pred.joint->at(i, j) == Catch::Approx(exact.at(i, j)).margin(1e-9));
    }
}

TEST_CASE("perturbation-ensemble method is deterministic for a fixed seed") {
    const auto seq = toy_sequence();
    const auto cm = make_l2_cost({1.0}, 5.0, 5.0);
    MethodSpec spec;
    spec.family = MethodFamily::FPA;
    spec.noise = NoiseSpec{NoiseKind::GaussianCentroid, 0.1, 1, 99, 25};

    const auto a_dir = scratch_dir("det_a");
    const auto b_dir = scratch_dir("det_b");
    run_experiment(seq, {spec}, cm, {.out_dir = a_dir});
    run_experiment(seq, {spec}, cm, {.out_dir = b_dir});
    const auto a = slurp(a_dir / "edges_fp_a.csv");
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(b_dir / "edges_fp_a.csv"));
}

TEST_CASE("experiment writes per-method reports and a manifest") {
    const auto seq = toy_sequence();
    const auto cm = make_l2_cost({1.0}, 5.0, 5.0);
    MethodSpec sm;
    MethodSpec as;
    as.family = MethodFamily::AS;
    as.k = 4;
    MethodSpec sm_ts = sm;
    sm_ts.tempered = true;
    sm_ts.tau = Temperature{2.0};

    const auto dir = scratch_dir("reports");
    const auto manifest = run_experiment(seq, {sm, as, sm_ts}, cm, {.out_dir = dir});
    REQUIRE(manifest["methods"].size() == 3);
    for (const auto& entry : manifest["methods"]) CHECK(entry["status"] == "ok");
    CHECK(fs::exists(dir / "edges_sm.csv"));
    CHECK(fs::exists(dir / "reliability_as.csv"));
    CHECK(fs::exists(dir / "sparsification_sm_ts.csv"));
    CHECK(fs::exists(dir / "manifest.json"));

    const auto temps = nlohmann::json::parse(slurp(dir / "temperature.json"));
    REQUIRE(temps.size() == 1);
    CHECK(temps[0]["method"] == "sm_ts");
    CHECK(temps[0]["tau"] == 2.0);

    const auto edges = slurp(dir / "edges_sm.csv");
    CHECK(edges.rfind("frame_pair,mother,daughter,p_joint,p_cond\n", 0) == 0);
}

TEST_CASE("a misconfigured method fails without harming the others") {
    const auto seq = toy_sequence();
    const auto cm = make_l2_cost({1.0}, 5.0, 5.0);
    MethodSpec broken;
    broken.family = MethodFamily::FP;  // no noise spec supplied
    MethodSpec sm;

    const auto dir = scratch_dir("partial");
    const auto manifest = run_experiment(seq, {broken, sm}, cm, {.out_dir = dir});
    CHECK(manifest["methods"][0]["status"] == "failed");
    CHECK(manifest["methods"][1]["status"] == "ok");
    CHECK(fs::exists(dir / "edges_sm.csv"));
}

TEST_CASE("temperature fitted on self-consistent predictions is near one") {
    // Long synthetic sequence whose truth is sampled from the model's own
    // softmax columns, so no rescaling should be needed.
    std::mt19937_64 rng(7);
    const auto cm = make_l2_cost({1.0}, 4.0, 4.0);
    MethodSpec spec;  // plain softmax method
    Sequence seq;
    std::uniform_real_distribution<double> pos(0.0, 6.0);
    std::vector<Assignment> gt;
    Frame prev{0, {point(0, pos(rng), pos(rng)), point(1, pos(rng), pos(rng))}};
    seq.frames.push_back(prev);
    for (int t = 1; t <= 400; ++t) {
        Frame next{t, {point(0, pos(rng), pos(rng)), point(1, pos(rng), pos(rng))}};
        const auto cond = softmax_columns(detail::cost_matrix(prev, next, cm), true);
        Assignment a;
        a.source_size = 2;
        a.target_size = 2;
        std::vector<int> load(2, 0);
        bool ok = true;
        for (int j = 0; j < 2; ++j) {
            std::vector<double> col;
            for (int i = 0; i <= 2; ++i) col.push_back(cond.at(i, j));
            std::discrete_distribution<int> pick(col.begin(), col.end());
            const int mother = pick(rng);
            if (mother == 2) {
                a.edges.push_back({kBottom, j});
            } else {
                a.edges.push_back({mother, j});
                if (++load[mother] > 2) ok = false;
            }
        }
        if (!ok) continue;  // resample pairs that drew an infeasible truth
        for (int i = 0; i < 2; ++i)
            if (load[i] == 0) a.edges.push_back({i, kBottom});
        a.canonicalize();
        gt.push_back(std::move(a));
        seq.frames.push_back(next);
        prev = next;
    }
    seq.ground_truth = std::move(gt);
    seq.validate();
    const auto tau = fit_temperature_on(seq, cm, spec);
    CHECK(tau.tau == Catch::Approx(1.0).margin(0.25));
}
