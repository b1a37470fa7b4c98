#include "sts/selfcheck.hpp"

#include <cstring>
#include <random>
#include <sstream>

#include "sts/gto.hpp"
#include "sts/morse.hpp"
#include "sts/sde.hpp"
#include "sts/spectral.hpp"

namespace sts {

namespace {

class Recorder {
public:
    Recorder(SelfCheckResult& result, std::ostream* log) : result_(result), log_(log) {}

    void check(const std::string& name, bool ok, const std::string& detail = "") {
        std::string line = std::string(ok ? "[ok]   " : "[FAIL] ") + name;
        if (!detail.empty()) line += " (" + detail + ")";
        emit(line);
        if (ok)
            ++result_.passed;
        else
            ++result_.failed;
    }

    void skip(const std::string& name, const std::string& why) {
        emit("[skip] " + name + " (" + why + ")");
        ++result_.skipped;
    }

    void info(const std::string& name, const std::string& detail) {
        emit("[info] " + name + " (" + detail + ")");
    }

private:
    void emit(const std::string& line) {
        result_.lines.push_back(line);
        if (log_) (*log_) << line << "\n";
    }

    SelfCheckResult& result_;
    std::ostream* log_;
};

FormField random_real_form(const ModeLattice& lat, int degree, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    FormField psi(lat, degree);
    const int max_mode = std::max(1, lat.cutoff() / 2);
    for (int ci = 0; ci < psi.component_count(); ++ci) {
        for (long i = 0; i < lat.num_modes(); ++i) {
            const auto n = lat.mode_of(i);
            bool inside = true;
            for (int a = 0; a < lat.dimension(); ++a)
                if (std::abs(n[a]) > max_mode) inside = false;
            if (!inside) continue;
            const Complex c(gauss(rng), gauss(rng));
            psi.coeffs()(ci, i) += 0.5 * c;
            psi.coeffs()(ci, lat.negated_index(i)) += 0.5 * std::conj(c);
        }
    }
    return psi;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

}  // namespace

SelfCheckResult run_selfcheck(const SystemSpec& system, std::ostream* log) {
    SelfCheckResult result;
    Recorder rec(result, log);
    const ModeLattice& lat = system.lattice;
    const int d = lat.dimension();
    std::mt19937_64 rng(0x5e1fc);

    // --- exterior algebra ---------------------------------------------------
    {
        double worst = 0.0;
        for (int k = 0; k + 2 <= d; ++k) {
            const FormField psi = random_real_form(lat, k, rng);
            worst = std::max(worst, d_apply(d_apply(psi)).norm() / psi.norm());
        }
        rec.check("exterior.nilpotency", worst <= 1e-14, "max " + fmt(worst));
    }
    {
        double worst = 0.0;
        for (int k = 0; k <= d; ++k) {
            const FormField phi = random_real_form(lat, d - k, rng);
            const FormField psi = random_real_form(lat, k, rng);
            const Complex ab = pair_forms(phi, psi);
            const Complex ba = pair_forms(psi, phi);
            const double sign = (k * (d - k)) % 2 == 0 ? 1.0 : -1.0;
            worst = std::max(worst, std::abs(ab - sign * ba) / (1.0 + std::abs(ab)));
        }
        rec.check("exterior.pair_antisymmetry", worst <= 1e-10, "max " + fmt(worst));
    }
    {
        const FormField psi = random_real_form(lat, d, rng);
        const double residue = evaluate_on_grid(psi, lat.side()).max_imag_abs();
        rec.check("exterior.evaluate_reality", residue <= 1e-10,
                  "imag residue " + fmt(residue));
    }

    // --- transfer operator ---------------------------------------------------
    const GtoApplier applier(system);
    {
        const double g_min = check_nondegenerate(system.noise, lat, lat.side());
        rec.check("gto.nondegenerate_noise", g_min > 0.0, "min eig " + fmt(g_min));
    }
    {
        double worst = 0.0;
        for (int k = 0; k <= d; ++k) {
            const FormField psi = random_real_form(lat, k, rng);
            const FormField h = applier.apply(psi);
            FormField anticom(lat, k);
            if (k >= 1) anticom = anticom + d_apply(applier.apply_dbar(psi));
            if (k < d) anticom = anticom + applier.apply_dbar(d_apply(psi));
            worst = std::max(worst, (h - anticom).norm() / std::max(1.0, h.norm()));
        }
        rec.check("gto.h_equals_ddbar_plus_dbard", worst <= 1e-12, "rel " + fmt(worst));
    }
    {
        double worst = 0.0;
        for (int k = 0; k < d; ++k) {
            const FormField psi = random_real_form(lat, k, rng);
            const FormField a = d_apply(applier.apply(psi));
            const FormField b = applier.apply(d_apply(psi));
            worst = std::max(worst, (a - b).norm() / std::max(1.0, a.norm()));
        }
        rec.check("gto.commutes_with_d", worst <= 1e-12, "rel " + fmt(worst));
    }
    {
        double worst = 0.0;
        for (int k = 0; k <= d; ++k)
            worst = std::max(worst,
                             applier.apply(random_real_form(lat, k, rng)).reality_defect());
        rec.check("gto.preserves_reality", worst <= 1e-10, "imag " + fmt(worst));
    }
    {
        const FormField top = random_real_form(lat, d, rng);
        FormField one(lat, 0);
        one.set_coeff(0, {0, 0, 0}, 1.0);
        const double leak = std::abs(pair_forms(one, applier.apply(top)));
        rec.check("gto.conserves_probability", leak <= 1e-10 * top.norm(),
                  "leak " + fmt(leak));
    }
    {
        const GtoApplier half(shifted_system(system, 0.5));
        const FormField psi = random_real_form(lat, d, rng);
        const double diff = (half.apply(psi) - applier.apply(psi)).norm();
        rec.check("gto.seo_half_equals_gto", diff == 0.0, "diff " + fmt(diff));
    }

    // --- spectral diagnostics (dense, desk scale) -----------------------------
    const bool divergence_free =
        divergence(system.flow).coeffs().cwiseAbs().maxCoeff() <= 1e-12;
    if (d <= 2) {
        std::vector<DegreeBlockOperator> blocks, dmats;
        for (int k = 0; k <= d; ++k) blocks.push_back(build_gto_block(system, k));
        for (int k = 0; k < d; ++k) dmats.push_back(build_d_matrix(lat, k));
        SpectrumReport report = full_spectrum(blocks);

        {
            const auto counts = detect_singlets(report, 1e-7);
            bool ok = true;
            for (int k = 0; k <= d; ++k)
                if (counts[k] != binomial(d, k)) ok = false;
            std::string detail;
            for (int c : counts) detail += std::to_string(c) + " ";
            rec.check("spectral.singlet_census", ok, detail + "vs Betti");
        }
        try {
            const auto pairings = pair_doublets(report, dmats, 1e-7);
            double worst = 0.0;
            for (const auto& p : pairings) worst = std::max(worst, p.residual);
            rec.check("spectral.doublet_pairing", true,
                      std::to_string(pairings.size()) + " doublets, max residual " +
                          fmt(worst));
        } catch (const InvariantViolation& e) {
            rec.check("spectral.doublet_pairing", false, e.what());
        }
        {
            const double delta = pressure(report);
            rec.check("spectral.poincare_bendixson",
                      poincare_bendixson_assert(report, d), "delta " + fmt(delta));
        }
        try {
            const FormField zero_mode = ergodic_zero(blocks[d], 1e-7);
            const double low = evaluate_on_grid(zero_mode, 4 * lat.side()).min_real();
            rec.check("spectral.ergodic_zero_positive", low >= -1e-8,
                      "grid min " + fmt(low));
        } catch (const std::exception& e) {
            rec.check("spectral.ergodic_zero_positive", false, e.what());
        }
        {
            double w_max = 0.0;
            for (double t : {0.1, 0.5, 1.0, 2.0, 5.0})
                w_max = std::max(w_max, std::abs(witten_index(report, t).value));
            rec.check("spectral.witten_index_zero", w_max <= 1e-8, "max " + fmt(w_max));
        }
        {
            const MatchReport ph = check_pseudo_hermiticity(report, 1e-8);
            rec.check("spectral.pseudo_hermitian", ph.ok,
                      "max mismatch " + fmt(ph.max_mismatch));
        }
        {
            const MatchReport iso = check_isospectral(report, 1e-7);
            if (d == 1 || divergence_free)
                rec.check("spectral.isospectral_0_D", iso.ok,
                          "max mismatch " + fmt(iso.max_mismatch));
            else if (iso.ok)
                rec.check("spectral.isospectral_0_D", true,
                          "max mismatch " + fmt(iso.max_mismatch));
            else
                rec.info("spectral.isospectral_0_D",
                         "mismatch " + fmt(iso.max_mismatch) +
                             "; expected only for divergence-free or symmetric flows");
        }
    } else {
        rec.skip("spectral.dense_suite", "dense spectra limited to D <= 2");
    }

    // --- simulator (1D) --------------------------------------------------------
    if (d == 1) {
        const EnsembleSpec ens(8, 4000, 500, 20240607, 32);
        const SdeScheme scheme(0.5, 1e-3);
        const EmpiricalDensity one = run_ensemble(system, scheme, ens, 1);
        const EmpiricalDensity two = run_ensemble(system, scheme, ens, 4);
        const bool same = one.mass.size() == two.mass.size() &&
                          std::memcmp(one.mass.data(), two.mass.data(),
                                      sizeof(double) * one.mass.size()) == 0;
        rec.check("sde.thread_reproducible", same);

        GaussianStream stream(99);
        double sum_sq = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double x = sample_noise(stream, 0.01, 1)(0);
            sum_sq += x * x;
        }
        const double var = sum_sq / n;
        rec.check("sde.noise_variance", std::abs(var - 100.0) <= 2.0,
                  "var " + fmt(var));
    } else {
        rec.skip("sde.suite", "density comparisons are desk-scale 1D");
    }

    // --- Morse complex (gradient flows) ----------------------------------------
    if (d <= 2 && check_gradient(system.flow, 1e-10)) {
        try {
            const CriticalPointSearch search = find_critical_points(system.flow, 16);
            if (search.points.empty()) {
                rec.skip("morse.complex", "no critical points");
            } else {
                const MorseComplexData data = boundary_operator(system.flow, search);
                bool ok = true;
                for (int k = 0; k <= d; ++k)
                    if (data.homology_ranks[k] != binomial(d, k)) ok = false;
                rec.check("morse.homology_equals_betti", ok);
                rec.check("morse.poincare_hopf_zero", poincare_hopf(search).sum == 0);
            }
        } catch (const std::exception& e) {
            rec.check("morse.complex", false, e.what());
        }
    } else {
        rec.skip("morse.complex", "gradient flows on D <= 2 only");
    }

    return result;
}

}  // namespace sts
