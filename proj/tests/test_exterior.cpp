#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sts/exterior.hpp"
#include "test_helpers.hpp"

using namespace sts;
using sts::testing::random_real_field;
using sts::testing::random_real_form;
using sts::testing::random_real_vector_field;

namespace {

// Brute-force truncated convolution, independent of ConvKernel.
TrigField conv_oracle(const TrigField& f, const TrigField& g) {
    const ModeLattice& lat = f.lattice();
    TrigField out(lat);
    for (long i = 0; i < lat.num_modes(); ++i) {
        if (f.coeffs()(i) == Complex(0.0, 0.0)) continue;
        for (long j = 0; j < lat.num_modes(); ++j) {
            auto n = lat.mode_of(i);
            const auto m = lat.mode_of(j);
            for (int a = 0; a < lat.dimension(); ++a) n[a] += m[a];
            if (!lat.contains(n)) continue;
            out.coeffs()(lat.index_of(n)) += f.coeffs()(i) * g.coeffs()(j);
        }
    }
    return out;
}

// Sign of the permutation that sorts `labels`, 0 when labels repeat.
int sort_sign(std::vector<int>& labels) {
    int sign = 1;
    for (size_t a = 0; a < labels.size(); ++a)
        for (size_t b = a + 1; b < labels.size(); ++b) {
            if (labels[a] == labels[b]) return 0;
            if (labels[a] > labels[b]) {
                std::swap(labels[a], labels[b]);
                sign = -sign;
            }
        }
    return sign;
}

// Coordinate-formula Lie derivative
//   (L_V psi)_I = V^j d_j psi_I + sum_m (d_{i_m} V^j) psi_{i_1..j..i_k},
// evaluated with brute-force convolutions. Exact when all product modes fit
// inside the cutoff.
FormField lie_oracle(const TrigVectorField& v, const FormField& psi) {
    const ModeLattice& lat = psi.lattice();
    const int d = lat.dimension();
    const int k = psi.degree();
    FormField out(lat, k);
    const MultiIndexSet& comps = psi.components();
    for (int ci = 0; ci < comps.count(); ++ci) {
        TrigField acc(lat);
        for (int j = 0; j < d; ++j)
            acc.coeffs() += conv_oracle(v.comps[j], psi.component(ci).derivative(j)).coeffs();
        for (int slot = 0; slot < k; ++slot) {
            for (int j = 0; j < d; ++j) {
                std::vector<int> labels;
                for (int mm = 0; mm < k; ++mm)
                    labels.push_back(mm == slot ? j : comps.labels(ci)[mm]);
                const int sign = sort_sign(labels);
                if (sign == 0) continue;
                std::array<int, 3> sorted{0, 0, 0};
                for (int mm = 0; mm < k; ++mm) sorted[mm] = labels[mm];
                const int cj = comps.rank_of(sorted);
                const TrigField dv = v.comps[j].derivative(comps.labels(ci)[slot]);
                acc.coeffs() +=
                    static_cast<double>(sign) * conv_oracle(dv, psi.component(cj)).coeffs();
            }
        }
        out.set_component(ci, acc);
    }
    return out;
}

}  // namespace

TEST_CASE("lattice enumeration and bounds") {
    const ModeLattice l1 = build_lattice(1, 2);
    CHECK(l1.num_modes() == 5);
    for (int n = -2; n <= 2; ++n)
        CHECK(l1.mode_of(l1.index_of({n, 0, 0}))[0] == n);

    const ModeLattice l2 = build_lattice(2, 1);
    CHECK(l2.num_modes() == 9);
    for (long i = 0; i < l2.num_modes(); ++i)
        CHECK(l2.index_of(l2.mode_of(i)) == i);
    CHECK(l2.contains({0, 0, 0}));

    CHECK_THROWS_AS(build_lattice(3, 0), ConfigError);
    CHECK_THROWS_AS(build_lattice(4, 2), ConfigError);
    CHECK_THROWS_AS(build_lattice(0, 2), ConfigError);
}

TEST_CASE("multi-index insertion/removal signs") {
    const MultiIndexSet pairs(3, 2);
    const MultiIndexSet singles(3, 1);
    // removing slot m carries (-1)^m (0-based); insert-then-remove is +1
    for (int ci = 0; ci < pairs.count(); ++ci)
        for (int slot = 0; slot < 2; ++slot) {
            const auto rem = pairs.remove_slot(singles, ci, slot);
            CHECK(rem.sign == (slot == 0 ? 1 : -1));
            const auto ins = singles.insert_label(pairs, rem.down_index, rem.label);
            REQUIRE(ins.has_value());
            CHECK(ins->first * rem.sign == 1);
            CHECK(ins->second == ci);
        }
}

TEST_CASE("d of a constant is zero and d matches analytic differentiation") {
    const ModeLattice lat(2, 3);
    FormField constant(lat, 0);
    constant.set_coeff(0, {0, 0, 0}, 2.5);
    CHECK(d_apply(constant).norm() == doctest::Approx(0.0));

    // e^{i x1} as a 0-form on T^2 -> i e^{i x1} dx1
    FormField wave(lat, 0);
    wave.set_coeff(0, {1, 0, 0}, 1.0);
    const FormField dw = d_apply(wave);
    CHECK(dw.coeff(0, {1, 0, 0}) == Complex(0.0, 1.0));  // dx1 component
    CHECK(std::abs(dw.coeff(1, {1, 0, 0})) == 0.0);      // dx2 component
    CHECK(dw.norm() == doctest::Approx(1.0));
}

TEST_CASE("nilpotency d(d psi) = 0 to machine precision") {
    std::mt19937_64 rng(7);
    for (int d = 2; d <= 3; ++d) {
        const ModeLattice lat(d, 3);
        for (int k = 0; k + 2 <= d; ++k) {
            const FormField psi = random_real_form(lat, k, 3, rng);
            const FormField dd = d_apply(d_apply(psi));
            CHECK(dd.coeffs().cwiseAbs().maxCoeff() <= 1e-14 * psi.norm());
        }
    }
}

TEST_CASE("d rejects top forms") {
    const ModeLattice lat(2, 2);
    CHECK_THROWS_AS(d_apply(FormField(lat, 2)), ConfigError);
}

TEST_CASE("interior product basis contractions") {
    const ModeLattice lat(2, 2);
    TrigVectorField e1(lat);
    e1.comps[0] = TrigField::constant(lat, 1.0);

    FormField vol(lat, 2);  // dx1 ^ dx2
    vol.set_coeff(0, {0, 0, 0}, 1.0);
    const FormField contracted = interior_apply(e1, vol);
    // i_{e1} (dx1^dx2) = dx2
    CHECK(contracted.coeff(1, {0, 0, 0}) == Complex(1.0, 0.0));
    CHECK(std::abs(contracted.coeff(0, {0, 0, 0})) == 0.0);

    FormField dx2(lat, 1);
    dx2.set_coeff(1, {0, 0, 0}, 1.0);
    CHECK(interior_apply(e1, dx2).norm() == doctest::Approx(0.0));

    CHECK_THROWS_AS(interior_apply(e1, FormField(lat, 0)), ConfigError);
}

TEST_CASE("Lie derivative: constants, directional derivative, coordinate oracle") {
    std::mt19937_64 rng(11);
    const ModeLattice lat(1, 4);
    TrigVectorField e1(lat);
    e1.comps[0] = TrigField::constant(lat, 1.0);

    FormField constant(lat, 0);
    constant.set_coeff(0, {0, 0, 0}, 3.0);
    CHECK(lie_apply(e1, constant).norm() == doctest::Approx(0.0));

    FormField wave(lat, 0);
    wave.set_coeff(0, {1, 0, 0}, 1.0);
    const FormField lw = lie_apply(e1, wave);
    CHECK(lw.coeff(0, {1, 0, 0}) == Complex(0.0, 1.0));

    // Cartan composition vs coordinate formula on band-limited inputs.
    for (int d = 1; d <= 3; ++d) {
        const int m = 4;
        const ModeLattice l(d, m);
        const TrigVectorField v = random_real_vector_field(l, m / 2, rng);
        for (int k = 0; k <= d; ++k) {
            const FormField psi = random_real_form(l, k, m / 2, rng);
            const FormField via_cartan = lie_apply(v, psi);
            const FormField via_coords = lie_oracle(v, psi);
            const double rel =
                (via_cartan - via_coords).norm() / std::max(1.0, via_coords.norm());
            CHECK(rel <= 1e-12);
        }
    }
}

TEST_CASE("galerkin products: unit, shift, truncation") {
    const ModeLattice lat(2, 3);
    std::mt19937_64 rng(3);
    const FormField psi = random_real_form(lat, 1, 3, rng);

    const TrigField one = TrigField::constant(lat, 1.0);
    CHECK((galerkin_multiply(one, psi) - psi).norm() == doctest::Approx(0.0));

    TrigField wave(lat);
    wave.set_coeff({1, 0, 0}, 1.0);  // e^{i x1}

    FormField edge(lat, 1);
    edge.set_coeff(0, {3, 0, 0}, 1.0);  // at the cutoff
    CHECK(galerkin_multiply(wave, edge).norm() == doctest::Approx(0.0));

    FormField center(lat, 1);
    center.set_coeff(0, {0, 0, 0}, 1.0);
    const FormField shifted = galerkin_multiply(wave, center);
    CHECK(shifted.coeff(0, {1, 0, 0}) == Complex(1.0, 0.0));
    CHECK(shifted.norm() == doctest::Approx(1.0));

    // matches the brute-force convolution on random data
    const TrigField f = random_real_field(lat, 3, rng);
    const TrigField g = random_real_field(lat, 3, rng);
    CHECK((trig_multiply(f, g).coeffs() - conv_oracle(f, g).coeffs()).norm() <= 1e-13);
}

TEST_CASE("pairing: volume normalization, antisymmetry, bilinearity") {
    const double two_pi_sq = 4.0 * M_PI * M_PI;
    const ModeLattice lat(2, 2);

    FormField one(lat, 0);
    one.set_coeff(0, {0, 0, 0}, 1.0);
    FormField vol(lat, 2);
    vol.set_coeff(0, {0, 0, 0}, 1.0);
    CHECK(pair_forms(one, vol).real() == doctest::Approx(two_pi_sq));

    FormField dx1(lat, 1), dx2(lat, 1);
    dx1.set_coeff(0, {0, 0, 0}, 1.0);
    dx2.set_coeff(1, {0, 0, 0}, 1.0);
    CHECK(std::abs(pair_forms(dx1, dx1)) == doctest::Approx(0.0));
    CHECK(pair_forms(dx1, dx2).real() == doctest::Approx(two_pi_sq));
    CHECK(pair_forms(dx2, dx1).real() == doctest::Approx(-two_pi_sq));

    CHECK_THROWS_AS(pair_forms(dx1, vol), ConfigError);

    std::mt19937_64 rng(5);
    for (int d = 1; d <= 3; ++d) {
        const ModeLattice l(d, 2);
        for (int k = 0; k <= d; ++k) {
            const FormField phi = random_real_form(l, d - k, 2, rng);
            const FormField psi = random_real_form(l, k, 2, rng);
            const Complex ab = pair_forms(phi, psi);
            const Complex ba = pair_forms(psi, phi);
            const double sign = (k * (d - k)) % 2 == 0 ? 1.0 : -1.0;
            CHECK(std::abs(ab - sign * ba) <= 1e-10 * (1.0 + std::abs(ab)));

            // bilinearity
            const FormField psi2 = random_real_form(l, k, 2, rng);
            const Complex lhs = pair_forms(phi, psi + psi2 * Complex(2.0, 0.0));
            const Complex rhs = pair_forms(phi, psi) + 2.0 * pair_forms(phi, psi2);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
        }
    }
}

TEST_CASE("grid evaluation: constants, cosine, reality") {
    const ModeLattice lat(1, 4);
    FormField constant(lat, 0);
    constant.set_coeff(0, {0, 0, 0}, 1.5);
    const GridValues grid = evaluate_on_grid(constant, 16);
    for (long i = 0; i < grid.values[0].size(); ++i)
        CHECK(grid.values[0](i).real() == doctest::Approx(1.5));

    FormField cosx(lat, 0);  // e^{ix} + e^{-ix}
    cosx.set_coeff(0, {1, 0, 0}, 1.0);
    cosx.set_coeff(0, {-1, 0, 0}, 1.0);
    const GridValues cg = evaluate_on_grid(cosx, 16);
    CHECK(cg.values[0](0).real() == doctest::Approx(2.0));

    std::mt19937_64 rng(13);
    const FormField psi = random_real_form(ModeLattice(2, 3), 1, 3, rng);
    CHECK(evaluate_on_grid(psi, 9).max_imag_abs() <= 1e-12);

    CHECK_THROWS_AS(evaluate_on_grid(psi, 5), ConfigError);  // undersampled
}

TEST_CASE("linearity of the exterior operations") {
    std::mt19937_64 rng(17);
    const ModeLattice lat(2, 3);
    const TrigVectorField v = random_real_vector_field(lat, 3, rng);
    const FormField a = random_real_form(lat, 1, 3, rng);
    const FormField b = random_real_form(lat, 1, 3, rng);
    const Complex ca(1.25, 0.0), cb(-0.5, 0.0);

    const FormField combo = a * ca + b * cb;
    CHECK((d_apply(combo) - (d_apply(a) * ca + d_apply(b) * cb)).norm() <= 1e-12);
    CHECK((interior_apply(v, combo) -
           (interior_apply(v, a) * ca + interior_apply(v, b) * cb))
              .norm() <= 1e-12);
    CHECK((lie_apply(v, combo) - (lie_apply(v, a) * ca + lie_apply(v, b) * cb)).norm() <=
          1e-11);
}

TEST_CASE("truncation projector commutes with d") {
    // d acts mode-diagonally, so forms supported inside the lattice are
    // differentiated without truncation error: check against per-mode values.
    const ModeLattice lat(2, 3);
    std::mt19937_64 rng(19);
    const FormField psi = random_real_form(lat, 0, 3, rng);
    const FormField dpsi = d_apply(psi);
    for (long i = 0; i < lat.num_modes(); ++i) {
        const auto n = lat.mode_of(i);
        CHECK(std::abs(dpsi.coeffs()(0, i) -
                       Complex(0.0, n[0]) * psi.coeffs()(0, i)) <= 1e-15);
        CHECK(std::abs(dpsi.coeffs()(1, i) -
                       Complex(0.0, n[1]) * psi.coeffs()(0, i)) <= 1e-15);
    }
}
