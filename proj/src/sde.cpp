#include "sts/sde.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

#include "sts/threading.hpp"

namespace sts {

double EmpiricalDensity::bin_center(long i, int axis) const {
    long stride = 1;
    for (int a = dimension - 1; a > axis; --a) stride *= bins;
    const long idx = (i / stride) % bins;
    return (idx + 0.5) * bin_width();
}

std::string density_to_csv(const EmpiricalDensity& d) {
    std::string out;
    for (int a = 0; a < d.dimension; ++a)
        out += "bin_center_x" + std::to_string(a + 1) + ",";
    out += "mass\n";
    char buf[64];
    for (long i = 0; i < d.mass.size(); ++i) {
        for (int a = 0; a < d.dimension; ++a) {
            std::snprintf(buf, sizeof(buf), "%.17g,", d.bin_center(i, a));
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g\n", d.mass(i));
        out += buf;
    }
    return out;
}

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t state = master;
    std::uint64_t out = 0;
    for (std::uint64_t i = 0; i <= index; ++i) out = splitmix64(state);
    return out;
}

double GaussianStream::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double GaussianStream::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller on uniforms shifted into (0, 1).
    const double u1 = (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
}

Eigen::VectorXd sample_noise(GaussianStream& stream, double dt, int count) {
    if (!(dt > 0.0)) throw ConfigError("sample_noise: dt must be > 0");
    const double scale = 1.0 / std::sqrt(dt);
    Eigen::VectorXd xi(count);
    for (int a = 0; a < count; ++a) xi(a) = stream.normal() * scale;
    return xi;
}

double SdeStepper::SparseEval::eval(const std::array<double, 3>& x) const {
    double acc = 0.0;
    for (const auto& e : entries) {
        const double phase = e.n[0] * x[0] + e.n[1] * x[1] + e.n[2] * x[2];
        acc += e.c.real() * std::cos(phase) - e.c.imag() * std::sin(phase);
    }
    return acc;
}

SdeStepper::SdeStepper(const SystemSpec& system, const SdeScheme& scheme)
    : scheme_(scheme),
      dim_(system.dimension()),
      sqrt_2theta_(std::sqrt(2.0 * system.noise.theta)) {
    auto sparsify = [](const TrigField& f) {
        SparseEval out;
        for (const auto& e : f.nonzero_modes()) out.entries.push_back({e.shift, e.coeff});
        return out;
    };
    for (const auto& c : system.flow.comps) flow_.push_back(sparsify(c));
    for (const auto& g : system.noise.fields) {
        std::vector<SparseEval> comps;
        for (const auto& c : g.comps) comps.push_back(sparsify(c));
        noise_.push_back(std::move(comps));
    }
}

std::array<double, 3> SdeStepper::drift(const std::array<double, 3>& x,
                                        const Eigen::VectorXd& xi) const {
    std::array<double, 3> f{0.0, 0.0, 0.0};
    for (int i = 0; i < dim_; ++i) f[i] = flow_[i].eval(x);
    for (size_t a = 0; a < noise_.size(); ++a) {
        const double amp = sqrt_2theta_ * xi(static_cast<long>(a));
        for (int i = 0; i < dim_; ++i) f[i] += amp * noise_[a][i].eval(x);
    }
    return f;
}

std::array<double, 3> SdeStepper::step(const std::array<double, 3>& x,
                                       const Eigen::VectorXd& xi) const {
    if (xi.size() != static_cast<long>(noise_.size()))
        throw ConfigError("SdeStepper: noise draw count mismatch");
    const double dt = scheme_.dt;
    const double alpha = scheme_.alpha;
    std::array<double, 3> next{0.0, 0.0, 0.0};
    if (alpha == 0.0) {
        const auto f = drift(x, xi);
        for (int i = 0; i < dim_; ++i) next[i] = x[i] + dt * f[i];
    } else {
        // Fixed-point iteration on the implicit update, seeded at x. The
        // iteration runs in unwrapped coordinates; trig evaluation is
        // periodic so no wrap is needed mid-step.
        std::array<double, 3> cur = x;
        bool converged = false;
        for (int it = 0; it < scheme_.implicit_max_iter; ++it) {
            std::array<double, 3> mid{0.0, 0.0, 0.0};
            for (int i = 0; i < dim_; ++i)
                mid[i] = alpha * cur[i] + (1.0 - alpha) * x[i];
            const auto f = drift(mid, xi);
            std::array<double, 3> candidate{0.0, 0.0, 0.0};
            double move = 0.0;
            for (int i = 0; i < dim_; ++i) {
                candidate[i] = x[i] + dt * f[i];
                move = std::max(move, std::abs(candidate[i] - cur[i]));
            }
            cur = candidate;
            if (move <= scheme_.implicit_tol) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NumericsError(
                "implicit step did not converge; reduce the time step dt");
        next = cur;
    }
    for (int i = 0; i < dim_; ++i) {
        next[i] = std::fmod(next[i], 2.0 * M_PI);
        if (next[i] < 0.0) next[i] += 2.0 * M_PI;
    }
    return next;
}

std::array<double, 3> step(const SystemSpec& system, const SdeScheme& scheme,
                           const std::array<double, 3>& x, const Eigen::VectorXd& xi) {
    return SdeStepper(system, scheme).step(x, xi);
}

EmpiricalDensity run_ensemble(const SystemSpec& system, const SdeScheme& scheme,
                              const EnsembleSpec& ensemble, int threads) {
    const int d = system.dimension();
    const int bins = ensemble.bins;
    long n_bins = 1;
    for (int a = 0; a < d; ++a) n_bins *= bins;

    const SdeStepper stepper(system, scheme);
    const int n_noise = system.noise.count();
    const double bin_scale = bins / (2.0 * M_PI);

    if (threads <= 0) threads = thread_budget();
    threads = static_cast<int>(std::min<long>(threads, ensemble.trajectories));

    std::vector<std::vector<std::uint64_t>> partial(
        threads, std::vector<std::uint64_t>(n_bins, 0));
    std::vector<std::string> failures(threads);

    auto worker = [&](int tid) {
        auto& counts = partial[tid];
        for (long traj = tid; traj < ensemble.trajectories; traj += threads) {
            try {
                GaussianStream stream(child_seed(ensemble.master_seed,
                                                 static_cast<std::uint64_t>(traj)));
                std::array<double, 3> x{0.0, 0.0, 0.0};
                for (int a = 0; a < d; ++a) x[a] = stream.uniform() * 2.0 * M_PI;
                for (long s = 0; s < ensemble.steps; ++s) {
                    const Eigen::VectorXd xi = sample_noise(stream, scheme.dt, n_noise);
                    x = stepper.step(x, xi);
                    if (s < ensemble.burn_in) continue;
                    if ((s - ensemble.burn_in) % ensemble.stride != 0) continue;
                    long flat = 0;
                    for (int a = 0; a < d; ++a) {
                        long b = static_cast<long>(x[a] * bin_scale);
                        if (b >= bins) b = bins - 1;
                        if (b < 0) b = 0;
                        flat = flat * bins + b;
                    }
                    ++counts[flat];
                }
            } catch (const std::exception& e) {
                if (failures[tid].empty())
                    failures[tid] = "trajectory " + std::to_string(traj) + ": " + e.what();
                return;
            }
        }
    };

    if (threads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }
    for (const auto& f : failures)
        if (!f.empty()) throw NumericsError("run_ensemble aborted at " + f);

    // Integer merge in fixed order: identical totals for any schedule.
    std::vector<std::uint64_t> counts(n_bins, 0);
    for (const auto& p : partial)
        for (long i = 0; i < n_bins; ++i) counts[i] += p[i];

    std::uint64_t total = 0;
    for (auto c : counts) total += c;

    EmpiricalDensity out;
    out.dimension = d;
    out.bins = bins;
    out.samples = total;
    out.mass.resize(n_bins);
    for (long i = 0; i < n_bins; ++i)
        out.mass(i) = static_cast<double>(counts[i]) / static_cast<double>(total);
    return out;
}

GridDensity analytic_stationary_1d(const SystemSpec& system, double alpha,
                                   int grid_points) {
    if (system.dimension() != 1)
        throw ConfigError("analytic_stationary_1d: closed form is 1D only");
    if (system.noise.count() != 1)
        throw ConfigError("analytic_stationary_1d: needs a single noise field");
    if (alpha < 0.0 || alpha > 1.0)
        throw ConfigError("analytic_stationary_1d: alpha must lie in [0, 1]");
    const int n = grid_points;
    const double theta = system.noise.theta;

    Eigen::VectorXd f(n), g(n), h(n);
    for (int j = 0; j < n; ++j) {
        const std::array<double, 3> x{2.0 * M_PI * j / n, 0.0, 0.0};
        f(j) = system.flow.comps[0].evaluate(x).real();
        g(j) = system.noise.fields[0].comps[0].evaluate(x).real();
    }
    if (g.minCoeff() <= 0.0)
        throw ConfigError("analytic_stationary_1d: noise field must be positive");
    for (int j = 0; j < n; ++j) h(j) = f(j) / (g(j) * g(j));

    // Spectral antiderivative of h: Fourier coefficients on the fine grid,
    // then term-wise integration. h is analytic and periodic, so the
    // coefficients decay geometrically.
    const int k_max = std::min(384, n / 2 - 1);
    Eigen::VectorXcd coeff(2 * k_max + 1);
    for (int m = -k_max; m <= k_max; ++m) {
        Complex acc = 0.0;
        for (int j = 0; j < n; ++j)
            acc += h(j) * std::polar(1.0, -2.0 * M_PI * m * j / n);
        coeff(m + k_max) = acc / static_cast<double>(n);
    }
    const double winding = 2.0 * M_PI * std::abs(coeff(k_max));
    if (winding > 1e-10)
        throw ConfigError(
            "analytic_stationary_1d: winding integral of F/G^2 is nonzero (" +
            std::to_string(winding) +
            "); the closed form is invalid, use the operator kernel instead");

    GridDensity out;
    out.values.resize(n);
    for (int j = 0; j < n; ++j) {
        const double x = 2.0 * M_PI * j / n;
        Complex integral = 0.0;
        for (int m = -k_max; m <= k_max; ++m) {
            if (m == 0) continue;
            const Complex im(0.0, static_cast<double>(m));
            integral += coeff(m + k_max) * (std::polar(1.0, m * x) - 1.0) / im;
        }
        out.values(j) = std::pow(g(j), 2.0 * alpha - 2.0) *
                        std::exp(integral.real() / theta);
    }
    const double total = out.values.sum() * (2.0 * M_PI / n);
    out.values /= total;
    return out;
}

Eigen::VectorXd grid_to_bin_masses(const GridDensity& density, int bins) {
    const long n = density.values.size();
    if (n % bins != 0)
        throw ConfigError("grid_to_bin_masses: grid size must be a multiple of bins");
    const long per = n / bins;
    Eigen::VectorXd mass(bins);
    // trapezoid per bin; the right edge wraps periodically
    for (int b = 0; b < bins; ++b) {
        double acc = 0.5 * (density.values(b * per) +
                            density.values((b * per + per) % n));
        for (long j = 1; j < per; ++j) acc += density.values(b * per + j);
        mass(b) = acc * (2.0 * M_PI / n);
    }
    mass /= mass.sum();
    return mass;
}

Eigen::VectorXd top_form_bin_masses(const FormField& density, int bins, int oversample) {
    if (density.lattice().dimension() != 1 || density.degree() != 1)
        throw ConfigError("top_form_bin_masses: expects a 1D top form");
    const int p = bins * oversample;
    if (p < density.lattice().side())
        throw ConfigError("top_form_bin_masses: oversampled grid too coarse");
    const GridValues grid = evaluate_on_grid(density, p);
    GridDensity gd;
    gd.values = grid.values[0].real();
    return grid_to_bin_masses(gd, bins);
}

double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw ConfigError("l1_distance: binning mismatch");
    return (a - b).cwiseAbs().sum();
}

double l1_distance(const EmpiricalDensity& a, const EmpiricalDensity& b) {
    if (a.dimension != b.dimension || a.bins != b.bins)
        throw ConfigError("l1_distance: binning mismatch");
    return l1_distance(a.mass, b.mass);
}

InterpretationComparison compare_to_gto(const SystemSpec& system, const SdeScheme& scheme,
                                        const EnsembleSpec& ensemble,
                                        DriftShiftSign sign) {
    if (system.dimension() != 1)
        throw ConfigError("compare_to_gto: desk-scale comparison is 1D only");
    const EmpiricalDensity emp = run_ensemble(system, scheme, ensemble);

    const FormField gto_kernel = ergodic_zero(build_gto_block(system, 1));
    const FormField seo_kernel =
        ergodic_zero(build_seo_block(system, 1, scheme.alpha, sign));
    const GridDensity analytic = analytic_stationary_1d(system, scheme.alpha);

    InterpretationComparison out;
    out.alpha = scheme.alpha;
    out.l1_empirical_gto =
        l1_distance(emp.mass, top_form_bin_masses(gto_kernel, ensemble.bins));
    out.l1_empirical_seo =
        l1_distance(emp.mass, top_form_bin_masses(seo_kernel, ensemble.bins));
    out.l1_empirical_analytic =
        l1_distance(emp.mass, grid_to_bin_masses(analytic, ensemble.bins));
    return out;
}

}  // namespace sts
