#include <catch_amalgamated.hpp>

#include <set>

#include <trackuq/model.hpp>

#include "test_support.hpp"

using namespace trackuq;

namespace {

Assignment make(int m, int n, std::vector<Edge> edges) {
    Assignment a;
    a.source_size = m;
    a.target_size = n;
    a.edges = std::move(edges);
    a.canonicalize();
    return a;
}

}  // namespace

TEST_CASE("feasibility accepts divisions and full coverage") {
    // 3 mothers, 5 daughters: mother 0 divides, mother 1 divides, mother 2 links.
    const auto a = make(3, 5, {{0, 0}, {0, 1}, {1, 2}, {1, 3}, {2, 4}});
    CHECK(is_feasible(a));
}

TEST_CASE("feasibility rejects a mother with three daughters") {
    const auto a = make(1, 3, {{0, 0}, {0, 1}, {0, 2}});
    CHECK_FALSE(is_feasible(a));
}

TEST_CASE("feasibility rejects a daughter with two mothers") {
    const auto a = make(2, 1, {{0, 0}, {1, 0}});
    CHECK_FALSE(is_feasible(a));
}

TEST_CASE("feasibility requires every mother to be accounted for") {
    // Mother 1 has neither a daughter nor a disappearance edge.
    const auto a = make(2, 1, {{0, 0}});
    CHECK_FALSE(is_feasible(a));
    // A mother may not both disappear and keep a daughter.
    const auto b = make(1, 1, {{0, 0}, {0, kBottom}});
    CHECK_FALSE(is_feasible(b));
}

TEST_CASE("feasibility rejects out-of-range indices") {
    CHECK_THROWS_AS(is_feasible(make(1, 1, {{5, 0}})), StructuralError);
    CHECK_THROWS_AS(is_feasible(make(1, 1, {{kBottom, kBottom}})), StructuralError);
}

TEST_CASE("forced enumerations") {
    CHECK(enumerate_feasible(1, 0).size() == 1);  // mother disappears
    CHECK(enumerate_feasible(0, 1).size() == 1);  // daughter appears
    CHECK(enumerate_feasible(1, 1).size() == 2);  // link, or appear+disappear
    CHECK(enumerate_feasible(0, 0).size() == 1);  // empty assignment
}

TEST_CASE("enumeration agrees with the closed-form counter") {
    for (int m = 0; m <= 4; ++m)
        for (int n = 0; n <= 5; ++n) {
            CAPTURE(m, n);
            CHECK(static_cast<std::int64_t>(enumerate_feasible(m, n).size()) ==
                  testsupport::feasible_count(m, n));
        }
}

TEST_CASE("enumeration refuses sizes above the oracle limit") {
    CHECK_THROWS_AS(enumerate_feasible(7, 2), RefusalError);
    CHECK_THROWS_AS(enumerate_feasible(2, 7), RefusalError);
    CHECK_NOTHROW(enumerate_feasible(7, 2, 8));
}

TEST_CASE("every enumerated assignment is feasible and unique") {
    for (int m = 0; m <= 3; ++m)
        for (int n = 0; n <= 4; ++n) {
            std::set<std::string> seen;
            for (const auto& a : enumerate_feasible(m, n)) {
                CHECK(is_feasible(a));
                CHECK(seen.insert(a.canonical_text()).second);
            }
        }
}

TEST_CASE("feasible set grows at least factorially") {
    for (int n = 1; n <= 5; ++n)
        CHECK(static_cast<double>(enumerate_feasible(n, n).size()) >=
              testsupport::factorial(n));
}

TEST_CASE("canonical text is order independent") {
    auto a = make(2, 2, {{0, 0}, {1, 1}});
    auto b = make(2, 2, {{1, 1}, {0, 0}});
    CHECK(a.canonical_text() == b.canonical_text());
    CHECK(a.canonical_text() == "0->0 1->1");
    CHECK(make(1, 1, {{0, kBottom}, {kBottom, 0}}).canonical_text() == "0->_ _->0");
}

TEST_CASE("detection invariants") {
    Detection d{0, {1.0, 0.8}, 2, make_mask({{1, 1}, {1, 2}}), std::nullopt};
    CHECK_THROWS_AS(d.validate(), StructuralError);  // centroid off the mask centroid
    d.centroid = {1.0, 1.5};
    CHECK_NOTHROW(d.validate());
    d.area = 3;
    CHECK_THROWS_AS(d.validate(), StructuralError);  // area != mask size
    Detection act{1, {0.0, 0.0}, 1, std::nullopt, 0.0};
    CHECK_THROWS_AS(act.validate(), StructuralError);  // activity must be positive
}

TEST_CASE("frame rejects duplicate ids") {
    Frame f{0, {testsupport::point(1, 0, 0), testsupport::point(1, 1, 1)}};
    CHECK_THROWS_AS(f.validate(), StructuralError);
}

TEST_CASE("column-normalized matrices validate their column sums") {
    EdgeProbabilityMatrix p(1, 1, MatrixKind::ColumnNormalized);
    p.at(0, 0) = 0.7;
    CHECK_THROWS_AS(p.validate(), StructuralError);
    p.at(1, 0) = 0.3;  // bottom row participates
    CHECK_NOTHROW(p.validate());
    CHECK(p.prob(kBottom, 0) == Catch::Approx(0.3));
}
