#include "sts/cli.hpp"

#include <CLI11.hpp>

#include <sstream>

#include "sts/induction_oracle.hpp"
#include "sts/report_json.hpp"
#include "sts/selfcheck.hpp"
#include "sts/systems.hpp"
#include "sts/version.hpp"

namespace sts {

namespace {

using nlohmann::json;

constexpr long kDenseLimit = 5000;

struct SystemFlags {
    std::string system;
    int modes = -1;
    double theta = -1.0;
    std::vector<std::string> params;

    void attach(CLI::App* cmd) {
        cmd->add_option("--system", system, "builtin name or JSON config path")
            ->required();
        cmd->add_option("--modes", modes, "Fourier cutoff M override");
        cmd->add_option("--theta", theta, "noise intensity override");
        cmd->add_option("--param", params, "extra system parameter key=value");
    }

    SystemSpec resolve() const {
        BuiltinParams bp;
        for (const auto& kv : params) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--param expects key=value, got \"" + kv + "\"");
            bp.values[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        }
        if (modes > 0) bp.values["M"] = modes;
        if (theta > 0.0) bp.values["theta"] = theta;
        return resolve_system(system, bp);
    }
};

long degree_block_size(const SystemSpec& sys, int k) {
    return binomial(sys.dimension(), k) * sys.lattice.num_modes();
}

void require_dense(const SystemSpec& sys) {
    for (int k = 0; k <= sys.dimension(); ++k)
        if (degree_block_size(sys, k) > kDenseLimit)
            throw ConfigError(
                "degree-" + std::to_string(k) + " block has " +
                std::to_string(degree_block_size(sys, k)) +
                " basis forms; the dense path is limited to ~" +
                std::to_string(kDenseLimit) + ". Reduce --modes.");
}

std::vector<double> parse_grid(const std::string& spec) {
    // "a:b:n" -> n points from a to b inclusive
    double a = 0.0, b = 0.0;
    long n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(spec);
    if (!(is >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1)
        throw ConfigError("grid spec must be a:b:n, got \"" + spec + "\"");
    std::vector<double> out;
    for (long i = 0; i < n; ++i)
        out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1));
    return out;
}

std::vector<double> parse_list(const std::string& spec) {
    std::vector<double> out;
    std::istringstream is(spec);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw ConfigError("empty list \"" + spec + "\"");
    return out;
}

// Dense analysis shared by `spectrum` and `classify`.
struct DenseAnalysis {
    SpectrumReport report;
    std::vector<DegreeBlockOperator> blocks;
};

DenseAnalysis analyze_dense(const SystemSpec& sys) {
    require_dense(sys);
    std::vector<DegreeBlockOperator> blocks, dmats;
    for (int k = 0; k <= sys.dimension(); ++k)
        blocks.push_back(build_gto_block(sys, k));
    for (int k = 0; k < sys.dimension(); ++k)
        dmats.push_back(build_d_matrix(sys.lattice, k));
    SpectrumReport report = full_spectrum(blocks);
    report.singlet_counts = detect_singlets(report, report.tolerance);
    report.pairings = pair_doublets(report, dmats, report.tolerance);
    report.delta = pressure(report);
    report.type_label = classify(report);
    for (double t : {0.1, 0.5, 1.0, 2.0, 3.5, 5.0})
        report.witten_samples.push_back(witten_index(report, t));
    return DenseAnalysis{std::move(report), std::move(blocks)};
}

json report_envelope(const SystemSpec& sys) {
    return json{{"version", kVersion}, {"config", system_config_json(sys)}};
}

// --- subcommand bodies -------------------------------------------------------

int cmd_spectrum(const SystemFlags& flags, const std::string& out_path,
                 const std::string& csv_path, int degree, std::ostream& out) {
    const SystemSpec sys = flags.resolve();
    DenseAnalysis analysis = analyze_dense(sys);

    json doc = report_envelope(sys);
    json payload = spectrum_report_json(analysis.report);
    if (degree >= 0) {
        if (degree > sys.dimension())
            throw ConfigError("--degree exceeds the phase-space dimension");
        json filtered = json::array();
        for (int k = 0; k <= sys.dimension(); ++k)
            filtered.push_back(k == degree ? payload["degrees"][k] : json::array());
        payload["degrees"] = filtered;
    }
    doc["spectrum"] = payload;
    if (!out_path.empty()) write_file_atomic(out_path, doc.dump(2) + "\n");

    if (!csv_path.empty()) {
        std::string csv = "degree,re,im\n";
        char buf[96];
        for (int k = 0; k <= sys.dimension(); ++k) {
            if (degree >= 0 && k != degree) continue;
            const auto& vals = analysis.report.degrees[k].values;
            for (long i = 0; i < vals.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", k, vals(i).real(),
                              vals(i).imag());
                csv += buf;
            }
        }
        write_file_atomic(csv_path, csv);
    }

    out << sys.name << ": delta = " << analysis.report.delta << ", type "
        << analysis.report.type_label << ", singlets";
    for (int c : analysis.report.singlet_counts) out << " " << c;
    out << ", " << analysis.report.pairings.size() << " doublets\n";
    return 0;
}

int cmd_classify(const SystemFlags& flags, const std::string& out_path, int eigs,
                 double tau, std::ostream& out) {
    const SystemSpec sys = flags.resolve();
    json doc = report_envelope(sys);
    double delta = 0.0;
    char label = 'T';
    if (sys.dimension() <= 2) {
        const DenseAnalysis analysis = analyze_dense(sys);
        delta = analysis.report.delta;
        label = analysis.report.type_label;
        doc["sector"] = "dense_all_degrees";
    } else {
        // D = 3: the minimum over all degrees reduces to the d-closed sector
        // of degree 2 (top and bottom blocks are pinned at zero, the rest
        // pairs into degree 2 or the top block).
        LeadingOptions opts;
        opts.project_ker_d = true;
        const LeadingResult lead =
            leading_spectrum(sys, 2, eigs, tau, opts);
        double min_re = 0.0;
        double extremal_im = 0.0;
        for (int i = 0; i < lead.values.size(); ++i)
            if (lead.values(i).real() < min_re) {
                min_re = lead.values(i).real();
                extremal_im = std::abs(lead.values(i).imag());
            }
        delta = -min_re;
        if (delta <= 1e-6)
            label = 'T';
        else
            label = extremal_im > 1e-6 ? 'c' : 'b';
        doc["sector"] = "ker_d_degree_2_iterative";
        json vals = json::array();
        for (int i = 0; i < lead.values.size(); ++i)
            vals.push_back({{"re", lead.values(i).real()},
                            {"im", lead.values(i).imag()}});
        doc["leading_eigenvalues"] = vals;
    }
    doc["delta"] = delta;
    doc["type"] = std::string(1, label);
    if (!out_path.empty()) write_file_atomic(out_path, doc.dump(2) + "\n");
    out << label << "\n";
    out << "delta = " << delta << "\n";
    return 0;
}

int cmd_witten(const SystemFlags& flags, const std::string& grid_spec,
               const std::string& out_path, std::ostream& out) {
    const SystemSpec sys = flags.resolve();
    const std::vector<double> grid = parse_grid(grid_spec);
    const DenseAnalysis analysis = analyze_dense(sys);

    double w_min = std::numeric_limits<double>::infinity();
    double w_max = -w_min;
    double max_abs = 0.0;
    json samples = json::array();
    for (double t : grid) {
        const WittenSample w = witten_index(analysis.report, t);
        samples.push_back({{"t", w.t}, {"value", w.value}});
        w_min = std::min(w_min, w.value);
        w_max = std::max(w_max, w.value);
        max_abs = std::max(max_abs, std::abs(w.value));
    }
    json doc = report_envelope(sys);
    doc["witten"] = samples;
    doc["max_abs"] = max_abs;
    doc["t_variation"] = w_max - w_min;
    if (!out_path.empty()) write_file_atomic(out_path, doc.dump(2) + "\n");
    out << "max |W(t)| = " << max_abs << ", variation = " << (w_max - w_min) << "\n";
    return 0;
}

int cmd_simulate(const SystemFlags& flags, double alpha, double dt, long steps,
                 long traj, std::uint64_t seed, int bins, long burnin, long stride,
                 const std::string& out_path, const std::string& json_path,
                 std::ostream& out) {
    const SystemSpec sys = flags.resolve();
    if (burnin < 0) burnin = steps / 5;
    const EnsembleSpec ens(traj, steps, burnin, seed, bins, stride);
    const EmpiricalDensity density = run_ensemble(sys, SdeScheme(alpha, dt), ens);
    write_file_atomic(out_path, density_to_csv(density));
    if (!json_path.empty()) {
        json doc = report_envelope(sys);
        doc["ensemble"] = {{"alpha", alpha},      {"dt", dt},
                           {"steps", steps},      {"trajectories", traj},
                           {"burn_in", burnin},   {"seed", seed},
                           {"bins", bins},        {"stride", stride}};
        doc["density"] = density_json(density);
        write_file_atomic(json_path, doc.dump(2) + "\n");
    }
    out << "wrote " << out_path << " (" << density.samples << " samples)\n";
    return 0;
}

int cmd_compare(const SystemFlags& flags, const std::string& alphas_spec, double dt,
                long steps, long traj, std::uint64_t seed, int bins, long stride,
                const std::string& out_path, std::ostream& out) {
    const SystemSpec sys = flags.resolve();
    const std::vector<double> alphas = parse_list(alphas_spec);
    const EnsembleSpec ens(traj, steps, steps / 5, seed, bins, stride);

    json entries = json::array();
    for (double alpha : alphas) {
        const InterpretationComparison cmp =
            compare_to_gto(sys, SdeScheme(alpha, dt), ens);
        entries.push_back({{"alpha", cmp.alpha},
                           {"l1_empirical_seo", cmp.l1_empirical_seo},
                           {"l1_empirical_gto", cmp.l1_empirical_gto},
                           {"l1_empirical_analytic", cmp.l1_empirical_analytic}});
        out << "alpha = " << alpha << ": L1(emp, SEO) = " << cmp.l1_empirical_seo
            << ", L1(emp, GTO) = " << cmp.l1_empirical_gto
            << ", L1(emp, analytic) = " << cmp.l1_empirical_analytic << "\n";
    }
    json doc = report_envelope(sys);
    doc["ensemble"] = {{"dt", dt},   {"steps", steps},   {"trajectories", traj},
                       {"seed", seed}, {"bins", bins},   {"stride", stride}};
    doc["drift_shift_sign"] = "fokker-planck (+)";
    doc["interpretations"] = entries;
    if (!out_path.empty()) write_file_atomic(out_path, doc.dump(2) + "\n");
    return 0;
}

int cmd_morse(const SystemFlags& flags, int seeds, const std::string& out_path,
              std::ostream& out) {
    const SystemSpec sys = flags.resolve();
    const CriticalPointSearch search = find_critical_points(sys.flow, seeds);
    const MorseComplexData data = boundary_operator(sys.flow, search);
    const PoincareHopfResult ph = poincare_hopf(search);

    json doc = report_envelope(sys);
    doc["morse"] = morse_complex_json(data, ph);
    if (!out_path.empty()) write_file_atomic(out_path, doc.dump(2) + "\n");

    out << search.points.size() << " critical points, Poincare-Hopf sum " << ph.sum
        << ", boundary^2 = 0, ranks";
    for (int r : data.homology_ranks) out << " " << r;
    out << "\n";
    return 0;
}

int cmd_dynamo_scan(const SystemFlags& flags, const std::string& theta_list, int eigs,
                    double tau, const std::string& out_path,
                    const std::string& csv_path, std::ostream& out) {
    const std::vector<double> thetas = parse_list(theta_list);
    json rows = json::array();
    std::string csv = "theta,delta,type,re,im,oracle_re,oracle_im,agreement\n";

    json doc;
    for (double theta : thetas) {
        SystemFlags per_theta = flags;
        per_theta.theta = theta;
        const SystemSpec sys = per_theta.resolve();
        if (sys.dimension() != 3)
            throw ConfigError("dynamo-scan requires a 3D system");
        if (doc.empty()) doc = report_envelope(sys);

        double a = 1.0, b = 1.0, c = 1.0;
        for (const auto& kv : per_theta.params) {
            const auto eq = kv.find('=');
            const std::string key = kv.substr(0, eq);
            const double value = std::stod(kv.substr(eq + 1));
            if (key == "A") a = value;
            if (key == "B") b = value;
            if (key == "C") c = value;
        }

        LeadingOptions opts;
        opts.project_ker_d = true;
        const LeadingResult lead = leading_spectrum(sys, 2, eigs, tau, opts);
        const induction::GrowthResult oracle = induction::abc_growth_spectrum(
            a, b, c, theta, sys.lattice.cutoff(), eigs, tau);

        double min_re = 0.0, extremal_im = 0.0;
        for (int i = 0; i < lead.values.size(); ++i)
            if (lead.values(i).real() < min_re) {
                min_re = lead.values(i).real();
                extremal_im = std::abs(lead.values(i).imag());
            }
        const double delta = std::max(0.0, -min_re);
        const char label = delta <= 1e-6 ? 'T' : (extremal_im > 1e-6 ? 'c' : 'b');

        // leading eigenvalue of H^(2)|ker d vs the negated oracle growth
        // rate, conjugate pairs canonicalized to Im >= 0; both at zero
        // (topologically protected modes) counts as exact
        const Complex h_lead = lead.values(0);
        const Complex oracle_lead = oracle.eigenvalues(0);
        const Complex h_canon(h_lead.real(), std::abs(h_lead.imag()));
        const Complex oracle_canon(-oracle_lead.real(), std::abs(oracle_lead.imag()));
        const double scale = std::max(std::abs(h_canon), std::abs(oracle_canon));
        const double agreement =
            (scale <= 1e-5) ? 0.0 : std::abs(h_canon - oracle_canon) / scale;

        json lead_vals = json::array(), oracle_vals = json::array();
        for (int i = 0; i < lead.values.size(); ++i)
            lead_vals.push_back({{"re", lead.values(i).real()},
                                 {"im", lead.values(i).imag()}});
        for (int i = 0; i < oracle.eigenvalues.size(); ++i)
            oracle_vals.push_back({{"re", oracle.eigenvalues(i).real()},
                                   {"im", oracle.eigenvalues(i).imag()}});
        rows.push_back({{"theta", theta},
                        {"delta", delta},
                        {"type", std::string(1, label)},
                        {"leading", lead_vals},
                        {"oracle", oracle_vals},
                        {"agreement", agreement}});

        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%c,%.17g,%.17g,%.17g,%.17g,%.6g\n",
                      theta, delta, label, h_lead.real(), h_lead.imag(),
                      oracle_lead.real(), oracle_lead.imag(), agreement);
        csv += buf;
        out << "theta = " << theta << ": delta = " << delta << ", type " << label
            << ", H lead = (" << h_lead.real() << ", " << h_lead.imag()
            << "), oracle growth = (" << oracle_lead.real() << ", "
            << oracle_lead.imag() << "), agreement = " << agreement << "\n";
    }

    doc["scan"] = rows;
    if (!out_path.empty()) write_file_atomic(out_path, doc.dump(2) + "\n");
    if (!csv_path.empty()) write_file_atomic(csv_path, csv);
    return 0;
}

int cmd_selfcheck(const SystemFlags& flags, const std::string& out_path,
                  std::ostream& out) {
    const SystemSpec sys = flags.resolve();
    out << "selfcheck: " << sys.name << " (D = " << sys.dimension()
        << ", M = " << sys.lattice.cutoff() << ", theta = " << sys.noise.theta
        << ")\n";
    const SelfCheckResult result = run_selfcheck(sys, &out);
    out << result.passed << " passed, " << result.failed << " failed, "
        << result.skipped << " skipped\n";
    if (!out_path.empty()) {
        json doc = report_envelope(sys);
        doc["passed"] = result.passed;
        doc["failed"] = result.failed;
        doc["skipped"] = result.skipped;
        doc["lines"] = result.lines;
        write_file_atomic(out_path, doc.dump(2) + "\n");
    }
    if (result.failed > 0)
        throw InvariantViolation(std::to_string(result.failed) +
                                 " selfcheck invariants failed");
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"spectral toolkit for stochastic flows on tori"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "dense spectra and diagnostics");
    SystemFlags spectrum_flags;
    spectrum_flags.attach(spectrum);
    std::string spectrum_out, spectrum_csv;
    int spectrum_degree = -1;
    spectrum->add_option("--out", spectrum_out, "JSON report path");
    spectrum->add_option("--csv", spectrum_csv, "eigenvalue CSV path");
    spectrum->add_option("--degree", spectrum_degree, "restrict emitted degree");

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "spectrum type T/b/c");
    SystemFlags classify_flags;
    classify_flags.attach(classify_cmd);
    std::string classify_out;
    int classify_eigs = 6;
    double classify_tau = 0.5;
    classify_cmd->add_option("--out", classify_out, "JSON report path");
    classify_cmd->add_option("--eigs", classify_eigs, "iterative eigenvalue count (D=3)");
    classify_cmd->add_option("--tau", classify_tau, "propagator filter time (D=3)");

    // witten
    auto* witten_cmd = app.add_subcommand("witten", "sharp trace over a t grid");
    SystemFlags witten_flags;
    witten_flags.attach(witten_cmd);
    std::string witten_grid = "0.1:5:10", witten_out;
    witten_cmd->add_option("--t-grid", witten_grid, "a:b:n");
    witten_cmd->add_option("--out", witten_out, "JSON report path");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "alpha-scheme ensemble density");
    SystemFlags simulate_flags;
    simulate_flags.attach(simulate);
    double sim_alpha = 0.5, sim_dt = 1e-3;
    long sim_steps = 60000, sim_traj = 20, sim_burnin = -1, sim_stride = 1;
    std::uint64_t sim_seed = 1;
    int sim_bins = 64;
    std::string sim_out, sim_json;
    simulate->add_option("--alpha", sim_alpha, "interpretation parameter in [0,1]");
    simulate->add_option("--dt", sim_dt, "time step");
    simulate->add_option("--steps", sim_steps, "steps per trajectory");
    simulate->add_option("--traj", sim_traj, "trajectory count");
    simulate->add_option("--seed", sim_seed, "master seed");
    simulate->add_option("--bins", sim_bins, "histogram bins per dimension");
    simulate->add_option("--burnin", sim_burnin, "burn-in steps (default steps/5)");
    simulate->add_option("--stride", sim_stride, "record every stride-th state");
    simulate->add_option("--out", sim_out, "density CSV path")->required();
    simulate->add_option("--json", sim_json, "optional JSON artifact");

    // compare-interpretations
    auto* compare = app.add_subcommand("compare-interpretations",
                                       "ensemble vs SEO/GTO kernels vs closed form");
    SystemFlags compare_flags;
    compare_flags.attach(compare);
    std::string cmp_alphas = "0,0.5,1", cmp_out;
    double cmp_dt = 1e-3;
    long cmp_steps = 1275000, cmp_traj = 20, cmp_stride = 25;
    std::uint64_t cmp_seed = 1;
    int cmp_bins = 64;
    compare->add_option("--alphas", cmp_alphas, "comma list of alphas");
    compare->add_option("--dt", cmp_dt, "time step");
    compare->add_option("--steps", cmp_steps, "steps per trajectory");
    compare->add_option("--traj", cmp_traj, "trajectory count");
    compare->add_option("--seed", cmp_seed, "master seed");
    compare->add_option("--bins", cmp_bins, "histogram bins");
    compare->add_option("--stride", cmp_stride, "record every stride-th state");
    compare->add_option("--out", cmp_out, "JSON report path");

    // morse
    auto* morse_cmd = app.add_subcommand("morse", "Morse complex of a gradient flow");
    SystemFlags morse_flags;
    morse_flags.attach(morse_cmd);
    int morse_seeds = 24;
    std::string morse_out;
    morse_cmd->add_option("--seeds", morse_seeds, "Newton seeds per dimension");
    morse_cmd->add_option("--out", morse_out, "JSON report path");

    // dynamo-scan
    auto* scan = app.add_subcommand("dynamo-scan",
                                    "leading eigenvalues vs induction oracle");
    SystemFlags scan_flags;
    scan_flags.attach(scan);
    std::string scan_thetas = "0.2,0.125,0.0833333", scan_out, scan_csv;
    int scan_eigs = 6;
    double scan_tau = 0.5;
    scan->add_option("--theta-list", scan_thetas, "comma list of noise intensities");
    scan->add_option("--eigs", scan_eigs, "eigenvalues per theta");
    scan->add_option("--tau", scan_tau, "propagator filter time");
    scan->add_option("--out", scan_out, "JSON report path");
    scan->add_option("--csv", scan_csv, "CSV path");

    // selfcheck
    auto* selfcheck = app.add_subcommand("selfcheck", "run the invariant battery");
    SystemFlags selfcheck_flags;
    selfcheck_flags.attach(selfcheck);
    std::string selfcheck_out;
    selfcheck->add_option("--out", selfcheck_out, "JSON summary path");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (spectrum->parsed())
            return cmd_spectrum(spectrum_flags, spectrum_out, spectrum_csv,
                                spectrum_degree, out);
        if (classify_cmd->parsed())
            return cmd_classify(classify_flags, classify_out, classify_eigs,
                                classify_tau, out);
        if (witten_cmd->parsed())
            return cmd_witten(witten_flags, witten_grid, witten_out, out);
        if (simulate->parsed())
            return cmd_simulate(simulate_flags, sim_alpha, sim_dt, sim_steps, sim_traj,
                                sim_seed, sim_bins, sim_burnin, sim_stride, sim_out,
                                sim_json, out);
        if (compare->parsed())
            return cmd_compare(compare_flags, cmp_alphas, cmp_dt, cmp_steps, cmp_traj,
                               cmp_seed, cmp_bins, cmp_stride, cmp_out, out);
        if (morse_cmd->parsed())
            return cmd_morse(morse_flags, morse_seeds, morse_out, out);
        if (scan->parsed())
            return cmd_dynamo_scan(scan_flags, scan_thetas, scan_eigs, scan_tau,
                                   scan_out, scan_csv, out);
        if (selfcheck->parsed())
            return cmd_selfcheck(selfcheck_flags, selfcheck_out, out);
        err << "no subcommand\n";
        return 2;
    } catch (const InvariantViolation& e) {
        err << "invariant violation: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const NumericsError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace sts
