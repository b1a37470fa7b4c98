#include "sts/morse.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace sts {

namespace {

constexpr double kDegenerateTol = 1e-8;
constexpr double kDedupeRadius = 1e-6;

double torus_delta(double a, double b) {
    double d = std::fmod(a - b, 2.0 * M_PI);
    if (d > M_PI) d -= 2.0 * M_PI;
    if (d < -M_PI) d += 2.0 * M_PI;
    return d;
}

double torus_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = torus_delta(a(i), b(i));
        acc += d * d;
    }
    return std::sqrt(acc);
}

Eigen::VectorXd eval_flow(const TrigVectorField& flow, const Eigen::Vector3d& x) {
    const int dim = flow.dimension();
    const std::array<double, 3> p{x(0), x(1), x(2)};
    Eigen::VectorXd f(dim);
    for (int i = 0; i < dim; ++i) f(i) = flow.comps[i].evaluate(p).real();
    return f;
}

Eigen::MatrixXd eval_jacobian(const TrigVectorField& flow, const Eigen::Vector3d& x) {
    const int dim = flow.dimension();
    const std::array<double, 3> p{x(0), x(1), x(2)};
    Eigen::MatrixXd j(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int a = 0; a < dim; ++a)
            j(i, a) = flow.comps[i].derivative(a).evaluate(p).real();
    return j;
}

}  // namespace

bool check_gradient(const TrigVectorField& flow, double tol) {
    const int dim = flow.dimension();
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) {
            const Eigen::VectorXcd defect = flow.comps[j].derivative(i).coeffs() -
                                            flow.comps[i].derivative(j).coeffs();
            if (defect.cwiseAbs().maxCoeff() > tol) return false;
        }
    return true;
}

CriticalPointSearch find_critical_points(const TrigVectorField& flow,
                                         int seeds_per_dim, double tol) {
    if (seeds_per_dim < 8)
        throw ConfigError("find_critical_points: need >= 8 seeds per dimension");
    const int dim = flow.dimension();
    long n_seeds = 1;
    for (int a = 0; a < dim; ++a) n_seeds *= seeds_per_dim;

    CriticalPointSearch out;
    for (long si = 0; si < n_seeds; ++si) {
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        long rest = si;
        for (int a = dim - 1; a >= 0; --a) {
            x(a) = 2.0 * M_PI * static_cast<double>(rest % seeds_per_dim) / seeds_per_dim;
            rest /= seeds_per_dim;
        }

        bool converged = false;
        for (int it = 0; it < 60; ++it) {
            const Eigen::VectorXd f = eval_flow(flow, x);
            if (f.cwiseAbs().maxCoeff() <= tol) {
                converged = true;
                break;
            }
            const Eigen::MatrixXd j = eval_jacobian(flow, x);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
            if (!lu.isInvertible()) break;  // Newton stalls; skip this seed
            const Eigen::VectorXd delta = lu.solve(-f);
            if (!delta.allFinite() || delta.cwiseAbs().maxCoeff() > M_PI) break;
            for (int a = 0; a < dim; ++a) {
                x(a) = std::fmod(x(a) + delta(a), 2.0 * M_PI);
                if (x(a) < 0.0) x(a) += 2.0 * M_PI;
            }
        }
        if (!converged) continue;

        bool duplicate = false;
        for (const auto& cp : out.points)
            if (torus_distance(cp.position, x, dim) < kDedupeRadius) duplicate = true;
        for (const auto& cp : out.degenerate)
            if (torus_distance(cp.position, x, dim) < kDedupeRadius) duplicate = true;
        if (duplicate) continue;

        CriticalPoint cp;
        cp.position = x;
        cp.jacobian = eval_jacobian(flow, x);
        Eigen::EigenSolver<Eigen::MatrixXd> es(cp.jacobian);
        int unstable = 0;
        double min_re = std::numeric_limits<double>::infinity();
        for (int a = 0; a < dim; ++a) {
            const double re = es.eigenvalues()(a).real();
            min_re = std::min(min_re, std::abs(re));
            if (re > 0.0) ++unstable;
        }
        cp.morse_index = unstable;
        cp.vf_index = (cp.jacobian.determinant() > 0.0) ? 1 : -1;
        cp.degenerate = (min_re <= kDegenerateTol);
        if (cp.degenerate)
            out.degenerate.push_back(std::move(cp));
        else
            out.points.push_back(std::move(cp));
    }
    return out;
}

int poincare_hopf(const std::vector<CriticalPoint>& points) {
    int sum = 0;
    for (const auto& cp : points)
        if (!cp.degenerate) sum += cp.vf_index;
    return sum;
}

PoincareHopfResult poincare_hopf(const CriticalPointSearch& search) {
    return PoincareHopfResult{poincare_hopf(search.points), search.degenerate.empty()};
}

namespace {

// Dormand-Prince 5(4) with PI-free step control; returns the index of the
// captured critical point.
struct Shooter {
    const TrigVectorField& flow;
    const std::vector<CriticalPoint>& points;
    const ShootParams& params;
    int dim;
    double direction;  // +1 forward flow, -1 reversed

    int integrate(const Eigen::Vector3d& launch_point, int launch_index,
                  int target_morse_index) const {
        Eigen::Vector3d x = launch_point;
        double dt = 1e-3;
        double time = 0.0;
        long steps = 0;
        bool escaped = false;

        while (time < params.max_time && steps < params.max_steps) {
            Eigen::Vector3d x_new;
            double err;
            rkdp_step(x, dt, x_new, err);
            const double tol = params.rel_tol * (1.0 + x.cwiseAbs().maxCoeff());
            if (err <= tol) {
                time += dt;
                ++steps;
                x = x_new;
                for (int a = 0; a < dim; ++a) {
                    x(a) = std::fmod(x(a), 2.0 * M_PI);
                    if (x(a) < 0.0) x(a) += 2.0 * M_PI;
                }

                if (!escaped) {
                    if (torus_distance(x, points[launch_index].position, dim) >
                        params.escape_radius)
                        escaped = true;
                } else {
                    for (int p = 0; p < static_cast<int>(points.size()); ++p) {
                        if (torus_distance(x, points[p].position, dim) >=
                            params.capture_radius)
                            continue;
                        if (points[p].morse_index == target_morse_index) return p;
                        if (points[p].morse_index == 1)
                            throw NumericsError(
                                "boundary_operator: separatrix captured by a saddle "
                                "(Morse-Smale violation)");
                        throw NumericsError(
                            "boundary_operator: separatrix captured by a point of "
                            "unexpected index " +
                            std::to_string(points[p].morse_index));
                    }
                }
            }
            const double shrink =
                (err > 0.0) ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
            dt *= std::min(5.0, std::max(0.2, shrink));
            dt = std::min(dt, 1.0);
        }
        throw NumericsError(
            "boundary_operator: separatrix failed to converge to a target "
            "(last position [" + std::to_string(x(0)) + ", " +
            std::to_string(dim > 1 ? x(1) : 0.0) + "], t = " + std::to_string(time) +
            ", steps = " + std::to_string(steps) + ")");
    }

    Eigen::Vector3d rhs(const Eigen::Vector3d& x) const {
        Eigen::Vector3d f = Eigen::Vector3d::Zero();
        const Eigen::VectorXd v = eval_flow(flow, x);
        for (int a = 0; a < dim; ++a) f(a) = direction * v(a);
        return f;
    }

    void rkdp_step(const Eigen::Vector3d& x, double dt, Eigen::Vector3d& out,
                   double& err) const {
        const Eigen::Vector3d k1 = rhs(x);
        const Eigen::Vector3d k2 = rhs(x + dt * (k1 / 5.0));
        const Eigen::Vector3d k3 = rhs(x + dt * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
        const Eigen::Vector3d k4 =
            rhs(x + dt * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
        const Eigen::Vector3d k5 =
            rhs(x + dt * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                          64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4));
        const Eigen::Vector3d k6 =
            rhs(x + dt * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 +
                          46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4 -
                          5103.0 / 18656.0 * k5));
        const Eigen::Vector3d y5 =
            x + dt * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 -
                      2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6);
        const Eigen::Vector3d k7 = rhs(y5);
        const Eigen::Vector3d y4 =
            x + dt * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 +
                      393.0 / 640.0 * k4 - 92097.0 / 339200.0 * k5 +
                      187.0 / 2100.0 * k6 + 1.0 / 40.0 * k7);
        out = y5;
        err = (y5 - y4).cwiseAbs().maxCoeff();
    }
};

// Unit eigenvector of the (symmetric) gradient-flow Jacobian with the
// requested eigenvalue sign, canonically oriented (first sizable component
// positive) so branch signs are reproducible.
Eigen::Vector3d jacobian_direction(const CriticalPoint& cp, int dim, bool unstable) {
    const Eigen::MatrixXd sym = 0.5 * (cp.jacobian + cp.jacobian.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    int pick = -1;
    for (int a = 0; a < dim; ++a) {
        const double lam = es.eigenvalues()(a);
        if ((unstable && lam > 0.0) || (!unstable && lam < 0.0)) pick = a;
    }
    if (pick < 0)
        throw NumericsError("boundary_operator: saddle lacks the requested direction");
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    for (int a = 0; a < dim; ++a) v(a) = es.eigenvectors()(a, pick);
    for (int a = 0; a < dim; ++a) {
        if (std::abs(v(a)) > 1e-10) {
            if (v(a) < 0.0) v = -v;
            break;
        }
    }
    return v;
}

}  // namespace

MorseComplexData boundary_operator(const TrigVectorField& flow,
                                   const CriticalPointSearch& search,
                                   const ShootParams& params) {
    const int dim = flow.dimension();
    if (dim > 2)
        throw ConfigError("boundary_operator: separatrix counting is limited to D <= 2");
    if (!check_gradient(flow, 1e-10))
        throw ConfigError("boundary_operator: flow is not a verified gradient flow");
    if (!search.degenerate.empty())
        throw ConfigError("boundary_operator: degenerate critical points present");

    MorseComplexData data;
    data.dimension = dim;
    data.by_index.assign(dim + 1, {});
    // member_of[p] = position of flat point p inside its index group
    std::vector<int> member_of(search.points.size(), 0);
    for (size_t p = 0; p < search.points.size(); ++p) {
        const auto& cp = search.points[p];
        member_of[p] = static_cast<int>(data.by_index[cp.morse_index].size());
        data.by_index[cp.morse_index].push_back(cp);
    }

    data.boundary.clear();
    for (int k = 1; k <= dim; ++k)
        data.boundary.push_back(Eigen::MatrixXi::Zero(
            static_cast<int>(data.by_index[k - 1].size()),
            static_cast<int>(data.by_index[k].size())));

    const Shooter forward{flow, search.points, params, dim, +1.0};
    const Shooter reversed{flow, search.points, params, dim, -1.0};

    for (size_t p = 0; p < search.points.size(); ++p) {
        const auto& saddle = search.points[p];
        if (saddle.morse_index != 1) continue;
        const int col = member_of[p];

        // Unstable branches flow down to index-0 points: entries of D_1.
        const Eigen::Vector3d v =
            (dim == 1) ? Eigen::Vector3d(1.0, 0.0, 0.0)
                       : jacobian_direction(saddle, dim, true);
        for (int s : {+1, -1}) {
            const Eigen::Vector3d start =
                saddle.position + s * params.launch_offset * v;
            const int hit = forward.integrate(start, static_cast<int>(p), 0);
            data.boundary[0](member_of[hit], col) += s;
        }

        // Stable branches, integrated against the flow, climb to index-2
        // points: entries of D_2. The branch sign is composed with the
        // orientation of (approach direction, unstable direction).
        if (dim == 2) {
            const Eigen::Vector3d w = jacobian_direction(saddle, dim, false);
            const double orient = w(0) * v(1) - w(1) * v(0);
            const int orient_sign = (orient > 0.0) ? 1 : -1;
            for (int s : {+1, -1}) {
                const Eigen::Vector3d start =
                    saddle.position + s * params.launch_offset * w;
                const int hit = reversed.integrate(start, static_cast<int>(p), 2);
                data.boundary[1](col, member_of[hit]) += -s * orient_sign;
            }
        }
    }

    data.homology_ranks = homology_ranks(data);
    return data;
}

namespace {

// Exact integer rank by fraction-free (Bareiss) elimination.
int integer_rank(const Eigen::MatrixXi& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> a =
        m.cast<long long>();
    const int rows = static_cast<int>(a.rows());
    const int cols = static_cast<int>(a.cols());
    int rank = 0;
    long long prev = 1;
    for (int c = 0; c < cols && rank < rows; ++c) {
        int pivot = -1;
        for (int r = rank; r < rows; ++r)
            if (a(r, c) != 0) {
                pivot = r;
                break;
            }
        if (pivot < 0) continue;
        a.row(pivot).swap(a.row(rank));
        for (int r = rank + 1; r < rows; ++r) {
            for (int cc = c + 1; cc < cols; ++cc)
                a(r, cc) = (a(rank, c) * a(r, cc) - a(r, c) * a(rank, cc)) / prev;
            a(r, c) = 0;
        }
        prev = a(rank, c);
        ++rank;
    }
    return rank;
}

}  // namespace

std::vector<int> homology_ranks(const MorseComplexData& complex_data) {
    const int dim = complex_data.dimension;
    for (int k = 1; k < dim; ++k) {
        const Eigen::MatrixXi product =
            complex_data.boundary[k - 1] * complex_data.boundary[k];
        if (product.cwiseAbs().maxCoeff() != 0)
            throw InvariantViolation(
                "homology_ranks: boundary composition D_" + std::to_string(k) +
                " D_" + std::to_string(k + 1) + " is nonzero (invalid complex)");
    }
    std::vector<int> ranks;
    for (int k = 0; k <= dim; ++k) {
        const int ck = static_cast<int>(complex_data.by_index[k].size());
        const int rank_in = (k >= 1) ? integer_rank(complex_data.boundary[k - 1]) : 0;
        const int rank_out = (k < dim) ? integer_rank(complex_data.boundary[k]) : 0;
        ranks.push_back(ck - rank_in - rank_out);
    }
    return ranks;
}

}  // namespace sts
