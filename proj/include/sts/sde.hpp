#pragma once

#include <cstdint>
#include <random>

#include "sts/spectral.hpp"
#include "sts/system.hpp"

namespace sts {

// Discrete-time alpha-family scheme:
//   x_k - x_{k-1} = drift(alpha*x_k + (1-alpha)*x_{k-1}, xi_k) * dt
// alpha = 0, 1/2, 1 are the explicit, midpoint and fully implicit members.
struct SdeScheme {
    double alpha = 0.5;
    double dt = 1e-3;
    double implicit_tol = 1e-12;
    int implicit_max_iter = 20;

    SdeScheme(double a, double step) : alpha(a), dt(step) {
        if (alpha < 0.0 || alpha > 1.0)
            throw ConfigError("SdeScheme: alpha must lie in [0, 1]");
        if (!(dt > 0.0)) throw ConfigError("SdeScheme: dt must be > 0");
    }
};

struct EnsembleSpec {
    long trajectories = 0;
    long steps = 0;
    long burn_in = 0;
    std::uint64_t master_seed = 0;
    int bins = 64;
    // Record every stride-th post-burn-in state. Consecutive states are
    // correlated over the relaxation time, so thinning trades storage-free
    // steps for nearly independent samples.
    long stride = 1;

    EnsembleSpec(long traj, long n_steps, long burn, std::uint64_t seed, int n_bins,
                 long sample_stride = 1)
        : trajectories(traj), steps(n_steps), burn_in(burn),
          master_seed(seed), bins(n_bins), stride(sample_stride) {
        if (trajectories < 1 || steps < 1)
            throw ConfigError("EnsembleSpec: counts must be positive");
        if (burn_in < 0 || burn_in >= steps)
            throw ConfigError("EnsembleSpec: need 0 <= burn-in < steps");
        if (bins < 8) throw ConfigError("EnsembleSpec: need >= 8 bins per dimension");
        if (stride < 1) throw ConfigError("EnsembleSpec: stride must be >= 1");
    }
};

// Normalized histogram over [0, 2pi)^D with uniform bins.
struct EmpiricalDensity {
    int dimension = 1;
    int bins = 0;
    Eigen::VectorXd mass;  // size bins^D, sums to 1
    std::uint64_t samples = 0;

    double bin_width() const { return 2.0 * M_PI / bins; }
    // Center coordinate of flat bin `i` along `axis` (row-major flattening).
    double bin_center(long i, int axis) const;
};

std::string density_to_csv(const EmpiricalDensity& d);

// k-th child seed of a master seed (splitmix64 output stream); trajectory
// RNGs derive from this, making ensembles schedule-independent.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t index);

// Deterministic Gaussian stream: mt19937_64 raw bits -> uniforms in (0,1)
// -> Box-Muller pairs. Fixed transform, identical across thread counts.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}
    double uniform();  // in [0, 1)
    double normal();

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// A draws of the discrete-time noise: independent N(0, 1/dt).
Eigen::VectorXd sample_noise(GaussianStream& stream, double dt, int count);

// Point-evaluation stepper; trig fields are evaluated through their sparse
// nonzero-mode lists.
class SdeStepper {
public:
    SdeStepper(const SystemSpec& system, const SdeScheme& scheme);

    std::array<double, 3> step(const std::array<double, 3>& x,
                               const Eigen::VectorXd& xi) const;
    const SdeScheme& scheme() const { return scheme_; }
    int dimension() const { return dim_; }

private:
    struct SparseEval {
        struct Entry {
            std::array<int, 3> n;
            Complex c;
        };
        std::vector<Entry> entries;
        double eval(const std::array<double, 3>& x) const;
    };

    std::array<double, 3> drift(const std::array<double, 3>& x,
                                const Eigen::VectorXd& xi) const;

    SdeScheme scheme_;
    int dim_;
    double sqrt_2theta_;
    std::vector<SparseEval> flow_;                   // per component
    std::vector<std::vector<SparseEval>> noise_;     // per field, per component
};

// One scheme step (convenience wrapper building a stepper).
std::array<double, 3> step(const SystemSpec& system, const SdeScheme& scheme,
                           const std::array<double, 3>& x, const Eigen::VectorXd& xi);

// Pooled post-burn-in histogram. Bitwise reproducible for a fixed master
// seed regardless of `threads` (0 = thread budget).
EmpiricalDensity run_ensemble(const SystemSpec& system, const SdeScheme& scheme,
                              const EnsembleSpec& ensemble, int threads = 0);

// Closed-form stationary density of the 1D alpha-scheme:
//   p_a(x) = N * G(x)^(2a-2) * exp((1/Theta) * int_0^x F/G^2),
// valid when the winding integral of F/G^2 vanishes.
struct GridDensity {
    Eigen::VectorXd values;  // on the uniform grid x_j = 2 pi j / n
};
GridDensity analytic_stationary_1d(const SystemSpec& system, double alpha,
                                   int grid_points = 8192);

// Integrate a sampled density into `bins` masses (grid size must be a
// multiple of bins); masses renormalized to sum 1.
Eigen::VectorXd grid_to_bin_masses(const GridDensity& density, int bins);

// Bin masses of a (1D) top-form density, e.g. an operator kernel.
Eigen::VectorXd top_form_bin_masses(const FormField& density, int bins,
                                    int oversample = 128);

double l1_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
double l1_distance(const EmpiricalDensity& a, const EmpiricalDensity& b);

// Ensemble vs operator kernels vs closed form, realizing the
// interpretation dilemma numerically (1D).
struct InterpretationComparison {
    double alpha = 0.0;
    double l1_empirical_seo = 0.0;
    double l1_empirical_gto = 0.0;
    double l1_empirical_analytic = 0.0;
};
InterpretationComparison compare_to_gto(const SystemSpec& system, const SdeScheme& scheme,
                                        const EnsembleSpec& ensemble,
                                        DriftShiftSign sign = kDefaultDriftShiftSign);

}  // namespace sts
