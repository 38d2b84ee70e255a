#include <catch_amalgamated.hpp>

#include <random>

#include <trackuq/costs.hpp>

#include "test_support.hpp"

using namespace trackuq;
using testsupport::point;

TEST_CASE("l2 cost evaluates the Brownian quadratic") {
    const BrownianParams p{1.0};
    CHECK(l2_cost(point(0, 3, 4), point(1, 3, 4), p) == 0.0);
    CHECK(l2_cost(point(0, 0, 0), point(1, 1, 0), p) == Catch::Approx(0.5));
    CHECK(l2_cost(point(0, 0, 0), point(1, 3, 4), BrownianParams{2.0}) == Catch::Approx(25.0));
}

TEST_CASE("l2 cost dimension mismatch") {
    Detection a = point(0, 0, 0);
    Detection b{1, {0.0, 0.0, 0.0}, 1, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(l2_cost(a, b, BrownianParams{1.0}), StructuralError);
}

TEST_CASE("l2 cost symmetry and positivity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pos(-5.0, 5.0);
    const BrownianParams p{0.7};
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = point(0, pos(rng), pos(rng));
        const auto b = point(1, pos(rng), pos(rng));
        const double ab = l2_cost(a, b, p);
        CHECK(ab == l2_cost(b, a, p));
        CHECK(ab >= 0.0);
        CHECK((ab == 0.0) == (a.centroid == b.centroid));
    }
}

TEST_CASE("activity cost scales the variance") {
    Detection a = point(0, 0, 0);
    a.activity = 2.0;
    CHECK(activity_cost(a, point(1, 1, 0), BrownianParams{1.0}) == Catch::Approx(0.25));
    a.activity = 1.0;
    CHECK(activity_cost(a, point(1, 1, 0), BrownianParams{1.0}) ==
          l2_cost(a, point(1, 1, 0), BrownianParams{1.0}));
    a.activity = 0.5;
    CHECK(activity_cost(a, point(1, 1, 0), BrownianParams{1.0}) ==
          Catch::Approx(2.0 * l2_cost(a, point(1, 1, 0), BrownianParams{1.0})));
    a.activity.reset();
    CHECK_THROWS_AS(activity_cost(a, point(1, 1, 0), BrownianParams{1.0}), ConfigError);
}

TEST_CASE("overlap cost counts shared pixels negatively") {
    Detection a{0, {0.5, 0.5}, 4, make_mask({{0, 0}, {0, 1}, {1, 0}, {1, 1}}), std::nullopt};
    Detection b{1, {0.5, 1.5}, 4, make_mask({{0, 1}, {0, 2}, {1, 1}, {1, 2}}), std::nullopt};
    Detection far{2, {10.0, 10.0}, 1, make_mask({{10, 10}}), std::nullopt};
    CHECK(overlap_cost(a, far) == 0.0);
    CHECK(overlap_cost(a, a) == -4.0);
    CHECK(overlap_cost(a, b) == -2.0);
    Detection nomask = point(3, 0, 0);
    CHECK_THROWS_AS(overlap_cost(a, nomask), ConfigError);

    Detection ten{4, {0.0, 4.5}, 10,
                  make_mask({{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 6}, {0, 7},
                             {0, 8}, {0, 9}}),
                  std::nullopt};
    CHECK(overlap_cost(ten, ten) == -10.0);
    Detection three{5, {0.0, 8.0}, 3, make_mask({{0, 7}, {0, 8}, {0, 9}}), std::nullopt};
    CHECK(overlap_cost(ten, three) == -3.0);
}

TEST_CASE("joint log likelihood of hand-built assignments") {
    const Frame empty_src{0, {}};
    const Frame empty_tgt{1, {}};
    const Assignment empty{{}, 0, 0};
    const auto cm = make_l2_cost({1.0}, 3.0, 3.0);
    CHECK(joint_log_likelihood(empty_src, empty_tgt, empty, cm) == 0.0);

    const Frame src{0, {point(0, 0, 0)}};
    const Frame tgt{1, {point(0, 1, 0)}};
    Assignment linked{{{0, 0}}, 1, 1};
    CHECK(joint_log_likelihood(src, tgt, linked, cm) == Catch::Approx(-0.5));

    Assignment swap{{{0, kBottom}, {kBottom, 0}}, 1, 1};
    CHECK(joint_log_likelihood(src, tgt, swap, cm) == Catch::Approx(-6.0));

    Assignment infeasible{{{0, 0}, {kBottom, 0}}, 1, 1};
    CHECK_THROWS_AS(joint_log_likelihood(src, tgt, infeasible, cm), ContractViolation);
}

TEST_CASE("joint log likelihood decomposes additively") {
    const auto cm = make_l2_cost({1.0}, 5.0, 5.0);
    const Frame src{0, {point(0, 0, 0), point(1, 20, 0)}};
    const Frame tgt{1, {point(0, 1, 0), point(1, 21, 0)}};
    const Assignment one{{{0, 0}, {1, kBottom}, {kBottom, 1}}, 2, 2};
    const Assignment both{{{0, 0}, {1, 1}}, 2, 2};
    const double link_cost = l2_cost(src.detections[1], tgt.detections[1], BrownianParams{1.0});
    CHECK(joint_log_likelihood(src, tgt, both, cm) ==
          Catch::Approx(joint_log_likelihood(src, tgt, one, cm) + 10.0 - link_cost));
}

TEST_CASE("exp of negative l2 cost is an unnormalized Gaussian") {
    // exp(-w(a,b)) / N(b; a, I/lambda) must not depend on b.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(-3.0, 3.0);
    const double lambda = 1.7;
    const auto a = point(0, pos(rng), pos(rng));
    double ratio0 = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto b = point(1, pos(rng), pos(rng));
        const double w = l2_cost(a, b, BrownianParams{lambda});
        const double density =
            lambda / (2.0 * std::acos(-1.0)) *
            std::exp(-0.5 * lambda * squared_distance(a, b));
        const double ratio = std::exp(-w) / density;
        if (trial == 0)
            ratio0 = ratio;
        else
            CHECK(ratio == Catch::Approx(ratio0));
    }
}
