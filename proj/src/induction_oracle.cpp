#include "sts/induction_oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace sts::induction {

namespace {

using Complex = std::complex<double>;

// Self-contained mode bookkeeping (kept separate from ModeLattice on
// purpose; the oracle must not share the operator stack).
struct Grid {
    int m;
    int side;
    long n;

    explicit Grid(int modes) : m(modes), side(2 * modes + 1) {
        n = static_cast<long>(side) * side * side;
    }
    long index(int nx, int ny, int nz) const {
        return (static_cast<long>(nx + m) * side + (ny + m)) * side + (nz + m);
    }
    void mode(long i, int& nx, int& ny, int& nz) const {
        nz = static_cast<int>(i % side) - m;
        i /= side;
        ny = static_cast<int>(i % side) - m;
        i /= side;
        nx = static_cast<int>(i) - m;
    }
};

struct FourierEntry {
    int n[3];
    Complex c;
};

// Magnetic field as three stacked complex component vectors.
using Field = Eigen::VectorXcd;  // size 3 * grid.n, component-major

class InductionOperator {
public:
    InductionOperator(double a, double b, double c, double theta, int modes)
        : grid_(modes), theta_(theta) {
        // F1 = A sin x3 + C cos x2, F2 = B sin x1 + A cos x3,
        // F3 = C sin x2 + B cos x1 as Fourier stencils.
        const Complex half(0.5, 0.0);
        const Complex mihalf(0.0, -0.5);
        const Complex pihalf(0.0, 0.5);
        flow_[0] = {{{0, 0, 1}, a * mihalf},
                    {{0, 0, -1}, a * pihalf},
                    {{0, 1, 0}, c * half},
                    {{0, -1, 0}, c * half}};
        flow_[1] = {{{1, 0, 0}, b * mihalf},
                    {{-1, 0, 0}, b * pihalf},
                    {{0, 0, 1}, a * half},
                    {{0, 0, -1}, a * half}};
        flow_[2] = {{{0, 1, 0}, c * mihalf},
                    {{0, -1, 0}, c * pihalf},
                    {{1, 0, 0}, b * half},
                    {{-1, 0, 0}, b * half}};
    }

    const Grid& grid() const { return grid_; }

    // L b = curl(F x b) - theta |n|^2 b, projected onto div b = 0.
    Field apply(const Field& in) const {
        const long n = grid_.n;
        // E = F x b by convolution of the sparse flow stencils.
        Field e = Field::Zero(3 * n);
        convolve_cross(in, e);
        // curl in Fourier components: (curl E)_i(n) = i eps_{ijk} n_j E_k(n).
        Field out = Field::Zero(3 * n);
        for (long i = 0; i < n; ++i) {
            int nx, ny, nz;
            grid_.mode(i, nx, ny, nz);
            const Complex ex = e(0 * n + i), ey = e(1 * n + i), ez = e(2 * n + i);
            const Complex im(0.0, 1.0);
            out(0 * n + i) = im * (static_cast<double>(ny) * ez - static_cast<double>(nz) * ey);
            out(1 * n + i) = im * (static_cast<double>(nz) * ex - static_cast<double>(nx) * ez);
            out(2 * n + i) = im * (static_cast<double>(nx) * ey - static_cast<double>(ny) * ex);
            const double lap = theta_ * (nx * nx + ny * ny + nz * nz);
            out(0 * n + i) -= lap * in(0 * n + i);
            out(1 * n + i) -= lap * in(1 * n + i);
            out(2 * n + i) -= lap * in(2 * n + i);
        }
        project_divfree(out);
        return out;
    }

    void project_divfree(Field& v) const {
        const long n = grid_.n;
        for (long i = 0; i < n; ++i) {
            int nx, ny, nz;
            grid_.mode(i, nx, ny, nz);
            const double n2 = nx * nx + ny * ny + nz * nz;
            if (n2 == 0.0) continue;
            const Complex dot = static_cast<double>(nx) * v(0 * n + i) +
                                static_cast<double>(ny) * v(1 * n + i) +
                                static_cast<double>(nz) * v(2 * n + i);
            const Complex scale = dot / n2;
            v(0 * n + i) -= scale * static_cast<double>(nx);
            v(1 * n + i) -= scale * static_cast<double>(ny);
            v(2 * n + i) -= scale * static_cast<double>(nz);
        }
    }

private:
    void convolve_cross(const Field& b, Field& e) const {
        // (F x b)_i = eps_{ijk} F_j b_k (0-based component pairs below)
        static const int eps[3][2][2] = {{{1, 2}, {2, 1}},
                                         {{2, 0}, {0, 2}},
                                         {{0, 1}, {1, 0}}};
        for (int i = 0; i < 3; ++i) {
            const int jp = eps[i][0][0], kp = eps[i][0][1];  // +F_jp b_kp
            const int jm = eps[i][1][0], km = eps[i][1][1];  // -F_jm b_km
            accumulate_product(flow_[jp], b, kp, e, i, Complex(1.0, 0.0));
            accumulate_product(flow_[jm], b, km, e, i, Complex(-1.0, 0.0));
        }
    }

    void accumulate_product(const std::vector<FourierEntry>& stencil, const Field& b,
                            int b_comp, Field& e, int e_comp, Complex sign) const {
        const long n = grid_.n;
        for (const auto& s : stencil) {
            const Complex c = sign * s.c;
            for (long i = 0; i < n; ++i) {
                int nx, ny, nz;
                grid_.mode(i, nx, ny, nz);
                const int tx = nx + s.n[0], ty = ny + s.n[1], tz = nz + s.n[2];
                if (tx < -grid_.m || tx > grid_.m || ty < -grid_.m || ty > grid_.m ||
                    tz < -grid_.m || tz > grid_.m)
                    continue;
                e(e_comp * n + grid_.index(tx, ty, tz)) += c * b(b_comp * n + i);
            }
        }
    }

    Grid grid_;
    double theta_;
    std::vector<FourierEntry> flow_[3];
};

}  // namespace

GrowthResult abc_growth_spectrum(double a, double b, double c, double theta, int modes,
                                 int count, double tau, double tol, int max_iterations,
                                 std::uint64_t seed) {
    if (modes < 1) throw std::invalid_argument("abc_growth_spectrum: modes >= 1");
    if (!(tau > 0.0)) throw std::invalid_argument("abc_growth_spectrum: tau > 0");
    const InductionOperator op(a, b, c, theta, modes);
    const long dim = 3 * op.grid().n;
    if (count < 1 || count > dim)
        throw std::invalid_argument("abc_growth_spectrum: bad count");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_field = [&]() {
        Field v(dim);
        for (long i = 0; i < dim; ++i) v(i) = Complex(gauss(rng), gauss(rng));
        op.project_divfree(v);
        return v;
    };

    // Norm estimate for the RK4 step of the e^{tau L} filter.
    Field probe = random_field();
    probe /= probe.norm();
    double rho = 1.0;
    for (int it = 0; it < 12; ++it) {
        probe = op.apply(probe);
        rho = probe.norm();
        if (rho < 1e-14) break;
        probe /= rho;
    }
    rho = std::max(rho * 1.3, 1e-6);
    const int steps = std::max(1, static_cast<int>(std::ceil(tau * rho / 2.0)));
    const double dt = tau / steps;

    auto filter = [&](Field v) {
        for (int s = 0; s < steps; ++s) {
            const Field k1 = op.apply(v);
            const Field k2 = op.apply(v + 0.5 * dt * k1);
            const Field k3 = op.apply(v + 0.5 * dt * k2);
            const Field k4 = op.apply(v + dt * k3);
            v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        op.project_divfree(v);
        return v;
    };

    const int p = static_cast<int>(std::min<long>(dim, count + 8));
    Eigen::MatrixXcd q(dim, p);
    for (int col = 0; col < p; ++col) q.col(col) = random_field();
    {
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(q);
        q = qr.householderQ() * Eigen::MatrixXcd::Identity(dim, p);
    }

    // Independent columns; schedule cannot change the result.
    int threads = 1;
    if (const char* env = std::getenv("STS_THREADS")) {
        threads = std::max(1, std::atoi(env));
    } else {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, p);
    auto parallel_columns = [&](const std::function<void(int)>& body) {
        if (threads <= 1) {
            for (int col = 0; col < p; ++col) body(col);
            return;
        }
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t]() {
                for (int col = t; col < p; col += threads) body(col);
            });
        for (auto& th : pool) th.join();
    };

    GrowthResult result;
    for (int iter = 1; iter <= max_iterations; ++iter) {
        parallel_columns([&](int col) { q.col(col) = filter(q.col(col)); });
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(q);
        q = qr.householderQ() * Eigen::MatrixXcd::Identity(dim, p);

        Eigen::MatrixXcd lq(dim, p);
        parallel_columns([&](int col) { lq.col(col) = op.apply(q.col(col)); });
        const Eigen::MatrixXcd s = q.adjoint() * lq;
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> small(s, true);
        if (small.info() != Eigen::Success)
            throw std::runtime_error("abc_growth_spectrum: Ritz solve failed");

        std::vector<int> order(p);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
            if (small.eigenvalues()(x).real() != small.eigenvalues()(y).real())
                return small.eigenvalues()(x).real() > small.eigenvalues()(y).real();
            return small.eigenvalues()(x).imag() < small.eigenvalues()(y).imag();
        });

        result.eigenvalues.resize(count);
        result.residuals.resize(count);
        bool converged = true;
        for (int i = 0; i < count; ++i) {
            const Complex lam = small.eigenvalues()(order[i]);
            const Eigen::VectorXcd y = small.eigenvectors().col(order[i]);
            const Field ritz = q * y;
            const double res =
                (lq * y - lam * ritz).norm() / (ritz.norm() * std::max(1.0, std::abs(lam)));
            result.eigenvalues(i) = lam;
            result.residuals(i) = res;
            if (res > tol) converged = false;
        }
        result.iterations = iter;
        if (converged) return result;
    }
    throw std::runtime_error("abc_growth_spectrum: not converged");
}

}  // namespace sts::induction
