#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sts/gto.hpp"
#include "sts/systems.hpp"
#include "test_helpers.hpp"

using namespace sts;
using sts::testing::random_real_form;
using sts::testing::random_real_vector_field;

namespace {

double rel_max_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    const double scale = std::max({1e-300, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

SystemSpec random_system_2d(int m, double theta, std::mt19937_64& rng) {
    const ModeLattice lat(2, m);
    return SystemSpec(lat, random_real_vector_field(lat, 2, rng),
                      NoiseModel(constant_frame(lat), theta), "random2d");
}

}  // namespace

TEST_CASE("noise nondegeneracy certificate") {
    const ModeLattice lat2(2, 4);
    CHECK(check_nondegenerate(NoiseModel(constant_frame(lat2), 1.0), lat2, 16) ==
          doctest::Approx(1.0));

    const ModeLattice lat1(1, 16);
    TrigVectorField g(lat1);
    g.comps[0] = parse_to_field("1 + 0.5*cos(1*x1)", lat1);
    CHECK(check_nondegenerate(NoiseModel({g}, 1.0), lat1, 64) == doctest::Approx(0.25));

    TrigVectorField gcos(lat1);
    gcos.comps[0] = parse_to_field("cos(1*x1)", lat1);
    CHECK(check_nondegenerate(NoiseModel({gcos}, 1.0), lat1, 64) <= 1e-12);

    CHECK_THROWS_AS(check_nondegenerate(NoiseModel({g}, 1.0), lat1, 8), ConfigError);
}

TEST_CASE("d matrix: Fourier diagonal in 1D, nilpotent products, zero constant column") {
    const ModeLattice lat(1, 4);
    const DegreeBlockOperator d0 = build_d_matrix(lat, 0);
    for (long i = 0; i < lat.num_modes(); ++i) {
        const int n = lat.mode_of(i)[0];
        CHECK(d0.matrix(i, i) == Complex(0.0, n));
    }
    CHECK(d0.matrix.col(lat.index_of({0, 0, 0})).norm() == doctest::Approx(0.0));

    const ModeLattice lat3(3, 2);
    const DegreeBlockOperator a = build_d_matrix(lat3, 0);
    const DegreeBlockOperator b = build_d_matrix(lat3, 1);
    const DegreeBlockOperator c = build_d_matrix(lat3, 2);
    CHECK((b.matrix * a.matrix).cwiseAbs().maxCoeff() == 0.0);
    CHECK((c.matrix * b.matrix).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(build_d_matrix(lat, 1), ConfigError);
}

TEST_CASE("pure diffusion and advection-diffusion are Fourier diagonal") {
    const SystemSpec diffusion = builtin("diffusion", {{"M", 6.0}, {"theta", 1.0}});
    const DegreeBlockOperator h0 = build_gto_block(diffusion, 0);
    const ModeLattice& lat = diffusion.lattice;
    for (long i = 0; i < lat.num_modes(); ++i) {
        const int n = lat.mode_of(i)[0];
        CHECK(std::abs(h0.matrix(i, i) - Complex(n * n, 0.0)) <= 1e-13);
    }
    CHECK(std::abs(h0.matrix(lat.index_of({2, 0, 0}), lat.index_of({2, 0, 0})) -
                   Complex(4.0, 0.0)) <= 1e-13);
    // off-diagonal must vanish
    Eigen::MatrixXcd off = h0.matrix;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() <= 1e-14);

    // constant drift c = 0.7: diagonal theta n^2 + i c n
    const ModeLattice lat1(1, 6);
    TrigVectorField flow(lat1);
    flow.comps[0] = TrigField::constant(lat1, 0.7);
    const SystemSpec advect(lat1, flow, NoiseModel(constant_frame(lat1), 0.3), "advect");
    const DegreeBlockOperator ha = build_gto_block(advect, 0);
    for (long i = 0; i < lat1.num_modes(); ++i) {
        const int n = lat1.mode_of(i)[0];
        CHECK(std::abs(ha.matrix(i, i) - Complex(0.3 * n * n, 0.7 * n)) <= 1e-13);
    }
}

TEST_CASE("supersymmetry identities: H = d dbar + dbar d and [d, H] = 0") {
    std::mt19937_64 rng(23);
    const SystemSpec sys = random_system_2d(3, 0.4, rng);
    std::vector<DegreeBlockOperator> h, dmat, dbar;
    for (int k = 0; k <= 2; ++k) h.push_back(build_gto_block(sys, k));
    for (int k = 0; k < 2; ++k) dmat.push_back(build_d_matrix(sys.lattice, k));
    for (int k = 0; k <= 2; ++k) dbar.push_back(build_dbar_block(sys, k));

    for (int k = 0; k <= 2; ++k) {
        Eigen::MatrixXcd anticom =
            Eigen::MatrixXcd::Zero(h[k].matrix.rows(), h[k].matrix.cols());
        if (k > 0) anticom += dmat[k - 1].matrix * dbar[k].matrix;
        if (k < 2) anticom += dbar[k + 1].matrix * dmat[k].matrix;
        CHECK(rel_max_diff(anticom, h[k].matrix) <= 1e-13);
    }
    for (int k = 0; k < 2; ++k) {
        const Eigen::MatrixXcd commutator =
            dmat[k].matrix * h[k].matrix - h[k + 1].matrix * dmat[k].matrix;
        const double scale = h[k].matrix.cwiseAbs().maxCoeff() *
                             dmat[k].matrix.cwiseAbs().maxCoeff();
        CHECK(commutator.cwiseAbs().maxCoeff() <= 1e-13 * scale);
    }
}

TEST_CASE("dbar limits: vanishing and contraction") {
    // F = 0, theta -> 0: dbar -> 0
    const ModeLattice lat(1, 4);
    const SystemSpec null_sys(lat, TrigVectorField(lat),
                              NoiseModel(constant_frame(lat), 1e-30), "null");
    CHECK(build_dbar_block(null_sys, 1).matrix.cwiseAbs().maxCoeff() <= 1e-29);

    // F = d/dx, theta -> 0: dbar on dx-forms evaluates the dx component
    TrigVectorField flow(lat);
    flow.comps[0] = TrigField::constant(lat, 1.0);
    const SystemSpec unit_flow(lat, flow, NoiseModel(constant_frame(lat), 1e-30),
                               "unit");
    const DegreeBlockOperator dbar1 = build_dbar_block(unit_flow, 1);
    CHECK(rel_max_diff(dbar1.matrix,
                       Eigen::MatrixXcd::Identity(lat.num_modes(), lat.num_modes())) <=
          1e-15);

    // k = 0 is the zero map to the empty degree
    CHECK(build_dbar_block(unit_flow, 0).matrix.rows() == 0);
}

TEST_CASE("GTO maps real forms to real forms and conserves probability") {
    std::mt19937_64 rng(29);
    const SystemSpec sys = random_system_2d(3, 0.5, rng);
    const GtoApplier applier(sys);
    for (int k = 0; k <= 2; ++k) {
        const FormField psi = random_real_form(sys.lattice, k, 3, rng);
        CHECK(applier.apply(psi).reality_defect() <= 1e-12 * psi.norm());
    }

    FormField one(sys.lattice, 0);
    one.set_coeff(0, {0, 0, 0}, 1.0);
    for (int rep = 0; rep < 3; ++rep) {
        const FormField top = random_real_form(sys.lattice, 2, 3, rng);
        const FormField htop = applier.apply(top);
        CHECK(std::abs(pair_forms(one, htop)) <= 1e-12 * htop.norm());
    }
}

TEST_CASE("SEO: alpha = 1/2 degeneracy, additive-noise degeneracy, sign conventions") {
    const SystemSpec mult = builtin("mult1d", {{"M", 8.0}});
    const DegreeBlockOperator gto = build_gto_block(mult, 1);

    const DegreeBlockOperator seo_half = build_seo_block(mult, 1, 0.5);
    CHECK((seo_half.matrix - gto.matrix).cwiseAbs().maxCoeff() == 0.0);

    // additive noise: the shift term (G.grad)G vanishes for every alpha
    const SystemSpec grad = builtin("grad1d", {{"M", 8.0}});
    const DegreeBlockOperator g_gto = build_gto_block(grad, 1);
    for (double alpha : {0.0, 0.3, 1.0}) {
        const DegreeBlockOperator seo = build_seo_block(grad, 1, alpha);
        CHECK(rel_max_diff(seo.matrix, g_gto.matrix) <= 1e-15);
    }

    // multiplicative noise: alpha = 0 and alpha = 1 shifts differ by sign
    const SystemSpec s0 = shifted_system(mult, 0.0);
    const SystemSpec s1 = shifted_system(mult, 1.0);
    const Eigen::VectorXcd base = mult.flow.comps[0].coeffs();
    const Eigen::VectorXcd shift0 = s0.flow.comps[0].coeffs() - base;
    const Eigen::VectorXcd shift1 = s1.flow.comps[0].coeffs() - base;
    CHECK(shift0.norm() > 1e-3);
    CHECK((shift0 + shift1).norm() <= 1e-15);

    // the two sign conventions mirror each other
    const SystemSpec alt = shifted_system(mult, 0.0, DriftShiftSign::Alternate);
    CHECK((alt.flow.comps[0].coeffs() - s1.flow.comps[0].coeffs()).norm() <= 1e-15);

    CHECK_THROWS_AS(build_seo_block(mult, 1, 1.5), ConfigError);
}

TEST_CASE("propagator: small-time identity, semigroup, diffusion decay") {
    const SystemSpec diffusion = builtin("diffusion", {{"M", 4.0}, {"theta", 1.0}});
    const DegreeBlockOperator h0 = build_gto_block(diffusion, 0);

    const DegreeBlockOperator tiny = propagator(h0, 1e-12);
    CHECK(rel_max_diff(tiny.matrix,
                       Eigen::MatrixXcd::Identity(h0.rows(), h0.cols())) <= 1e-10);

    const DegreeBlockOperator p1 = propagator(h0, 0.4);
    const DegreeBlockOperator p2 = propagator(h0, 0.7);
    const DegreeBlockOperator p3 = propagator(h0, 1.1);
    CHECK(rel_max_diff(p1.matrix * p2.matrix, p3.matrix) <= 1e-10);

    const long idx = diffusion.lattice.index_of({1, 0, 0});
    CHECK(std::abs(propagator(h0, 1.0).matrix(idx, idx) - std::exp(-1.0)) <= 1e-10);

    CHECK_THROWS_AS(propagator(h0, 0.0), ConfigError);
    CHECK_THROWS_AS(propagator(build_d_matrix(diffusion.lattice, 0), 1.0), ConfigError);
}

TEST_CASE("matrix-free application agrees with the assembled matrix") {
    std::mt19937_64 rng(31);
    const SystemSpec sys = random_system_2d(4, 0.6, rng);
    for (int k = 0; k <= 2; ++k) {
        const DegreeBlockOperator h = build_gto_block(sys, k);
        const FormField psi = random_real_form(sys.lattice, k, 4, rng);
        const Eigen::VectorXcd direct = matrix_free_apply(sys, k, psi).flatten();
        const Eigen::VectorXcd assembled = h.matrix * psi.flatten();
        CHECK((direct - assembled).norm() <= 1e-12 * assembled.norm());
    }

    // pure diffusion acts as theta |n|^2 per mode
    const SystemSpec diffusion = builtin("diffusion", {{"D", 2.0}, {"theta", 0.7}});
    const FormField psi = random_real_form(diffusion.lattice, 1, 4, rng);
    const FormField hpsi = matrix_free_apply(diffusion, 1, psi);
    for (int ci = 0; ci < psi.component_count(); ++ci)
        for (long i = 0; i < diffusion.lattice.num_modes(); ++i) {
            const auto n = diffusion.lattice.mode_of(i);
            const double n2 = n[0] * n[0] + n[1] * n[1];
            CHECK(std::abs(hpsi.coeffs()(ci, i) - 0.7 * n2 * psi.coeffs()(ci, i)) <=
                  1e-12);
        }
}
