#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sts/morse.hpp"
#include "sts/systems.hpp"

using namespace sts;

namespace {

const CriticalPoint* find_at(const CriticalPointSearch& search, double x1, double x2,
                             int dim) {
    for (const auto& cp : search.points) {
        double d = 0.0;
        const double dx1 = std::remainder(cp.position(0) - x1, 2.0 * M_PI);
        d += dx1 * dx1;
        if (dim > 1) {
            const double dx2 = std::remainder(cp.position(1) - x2, 2.0 * M_PI);
            d += dx2 * dx2;
        }
        if (std::sqrt(d) < 1e-8) return &cp;
    }
    return nullptr;
}

}  // namespace

TEST_CASE("gradient check accepts gradients and rejects shear") {
    CHECK(check_gradient(builtin("grad2d").flow));
    CHECK(check_gradient(builtin("grad2d", {{"eps", 0.2}}).flow));
    CHECK_FALSE(check_gradient(builtin("shear2d").flow));
    const ModeLattice lat(2, 4);
    CHECK(check_gradient(TrigVectorField(lat)));  // zero flow
}

TEST_CASE("critical points of the product potential") {
    const SystemSpec sys = builtin("grad2d");
    const CriticalPointSearch search = find_critical_points(sys.flow, 12);
    REQUIRE(search.points.size() == 4);
    CHECK(search.degenerate.empty());

    const CriticalPoint* origin = find_at(search, 0.0, 0.0, 2);
    REQUIRE(origin != nullptr);
    CHECK(origin->morse_index == 2);
    CHECK(origin->vf_index == 1);

    const CriticalPoint* saddle_a = find_at(search, M_PI, 0.0, 2);
    const CriticalPoint* saddle_b = find_at(search, 0.0, M_PI, 2);
    REQUIRE(saddle_a != nullptr);
    REQUIRE(saddle_b != nullptr);
    CHECK(saddle_a->morse_index == 1);
    CHECK(saddle_b->morse_index == 1);
    CHECK(saddle_a->vf_index == -1);

    const CriticalPoint* sink = find_at(search, M_PI, M_PI, 2);
    REQUIRE(sink != nullptr);
    CHECK(sink->morse_index == 0);
    CHECK(sink->vf_index == 1);

    // F = -sin x on the circle: sink at 0, source at pi
    const SystemSpec grad1 = builtin("grad1d");
    const CriticalPointSearch circle = find_critical_points(grad1.flow, 16);
    REQUIRE(circle.points.size() == 2);
    const CriticalPoint* zero = find_at(circle, 0.0, 0.0, 1);
    const CriticalPoint* pi = find_at(circle, M_PI, 0.0, 1);
    REQUIRE(zero != nullptr);
    REQUIRE(pi != nullptr);
    CHECK(zero->morse_index == 0);
    CHECK(pi->morse_index == 1);

    // constant flow: no zeros
    const ModeLattice lat(1, 4);
    TrigVectorField constant(lat);
    constant.comps[0] = TrigField::constant(lat, 0.7);
    CHECK(find_critical_points(constant, 16).points.empty());

    CHECK_THROWS_AS(find_critical_points(constant, 4), ConfigError);
}

TEST_CASE("Poincare-Hopf sums") {
    const CriticalPointSearch grad2 = find_critical_points(builtin("grad2d").flow, 12);
    const PoincareHopfResult r2 = poincare_hopf(grad2);
    CHECK(r2.sum == 0);
    CHECK(r2.reliable);

    const CriticalPointSearch grad1 = find_critical_points(builtin("grad1d").flow, 16);
    CHECK(poincare_hopf(grad1).sum == 0);

    // an incomplete inventory is a valid input; the sum is inventory-bound
    std::vector<CriticalPoint> only_sink = {grad2.points.front()};
    only_sink[0].vf_index = 1;
    CHECK(poincare_hopf(only_sink) == 1);
}

TEST_CASE("boundary operator on the circle and the product torus") {
    const SystemSpec grad1 = builtin("grad1d");
    const CriticalPointSearch c1 = find_critical_points(grad1.flow, 16);
    const MorseComplexData m1 = boundary_operator(grad1.flow, c1);
    REQUIRE(m1.boundary.size() == 1);
    CHECK(m1.boundary[0].rows() == 1);
    CHECK(m1.boundary[0].cols() == 1);
    CHECK(m1.boundary[0](0, 0) == 0);  // the two branches cancel
    CHECK(m1.homology_ranks == std::vector<int>{1, 1});

    const SystemSpec grad2 = builtin("grad2d");
    const CriticalPointSearch c2 = find_critical_points(grad2.flow, 12);
    const MorseComplexData m2 = boundary_operator(grad2.flow, c2);
    REQUIRE(m2.boundary.size() == 2);
    CHECK(m2.boundary[0].cwiseAbs().maxCoeff() == 0);  // D1 = 0
    CHECK(m2.boundary[1].cwiseAbs().maxCoeff() == 0);  // D2 = 0
    CHECK(m2.homology_ranks == std::vector<int>{1, 2, 1});
}

TEST_CASE("perturbed potential keeps D.D = 0 and the torus homology") {
    const SystemSpec sys = builtin("grad2d", {{"eps", 0.2}});
    const CriticalPointSearch search = find_critical_points(sys.flow, 12);
    REQUIRE(search.points.size() == 4);
    const MorseComplexData data = boundary_operator(sys.flow, search);
    CHECK(data.homology_ranks == std::vector<int>{1, 2, 1});
    const PoincareHopfResult ph = poincare_hopf(search);
    CHECK(ph.sum == 0);
}

TEST_CASE("richer potential: eight critical points, nonzero boundaries, same homology") {
    // U = cos x1 + cos 2x2: 2 maxima, 4 saddles, 2 minima; the boundary
    // matrices are nonzero and the sign bookkeeping must still square to zero
    const ModeLattice lat(2, 4);
    TrigVectorField flow(lat);
    flow.comps[0] = parse_to_field("sin(1*x1)", lat);
    flow.comps[1] = parse_to_field("2*sin(2*x2)", lat);
    REQUIRE(check_gradient(flow));

    const CriticalPointSearch search = find_critical_points(flow, 16);
    REQUIRE(search.points.size() == 8);
    int counts[3] = {0, 0, 0};
    for (const auto& cp : search.points) ++counts[cp.morse_index];
    CHECK(counts[0] == 2);
    CHECK(counts[1] == 4);
    CHECK(counts[2] == 2);
    CHECK(poincare_hopf(search).sum == 0);

    const MorseComplexData data = boundary_operator(flow, search);
    CHECK(data.boundary[0].cwiseAbs().maxCoeff() > 0);
    CHECK(data.boundary[1].cwiseAbs().maxCoeff() > 0);
    CHECK(data.homology_ranks == std::vector<int>{1, 2, 1});
    // Morse inventory alternating sum agrees with Poincare-Hopf
    CHECK(counts[0] - counts[1] + counts[2] == poincare_hopf(search).sum);
}

TEST_CASE("invalid complexes are rejected") {
    MorseComplexData bad;
    bad.dimension = 2;
    bad.by_index.assign(3, {});
    bad.by_index[0].resize(1);
    bad.by_index[1].resize(2);
    bad.by_index[2].resize(1);
    bad.boundary.push_back(Eigen::MatrixXi::Constant(1, 2, 1));
    bad.boundary.push_back(Eigen::MatrixXi::Constant(2, 1, 1));
    CHECK_THROWS_AS(homology_ranks(bad), InvariantViolation);

    // non-gradient flow rejected up front
    const SystemSpec shear = builtin("shear2d");
    const CriticalPointSearch s = find_critical_points(shear.flow, 12);
    CHECK_THROWS_AS(boundary_operator(shear.flow, s), ConfigError);
}
