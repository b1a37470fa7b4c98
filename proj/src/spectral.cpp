#include "sts/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <thread>

#include "sts/threading.hpp"

namespace sts {

namespace {

constexpr double kDefectThreshold = 1e8;

std::vector<int> sorted_order(const Eigen::VectorXcd& values) {
    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (values(a).real() != values(b).real())
            return values(a).real() < values(b).real();
        return values(a).imag() < values(b).imag();
    });
    return order;
}

DegreeEigenData decompose(const Eigen::MatrixXcd& mat, const std::string& label) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(mat, true);
    if (solver.info() != Eigen::Success)
        throw NumericsError("eigensolver failed on " + label);

    const auto order = sorted_order(solver.eigenvalues());
    DegreeEigenData data;
    const long n = mat.rows();
    data.values.resize(n);
    data.right.resize(n, n);
    for (long i = 0; i < n; ++i) {
        data.values(i) = solver.eigenvalues()(order[i]);
        Eigen::VectorXcd col = solver.eigenvectors().col(order[i]);
        data.right.col(i) = col / col.norm();
    }
    data.left = data.right.inverse();
    data.near_defective.assign(n, false);
    for (long i = 0; i < n; ++i)
        if (data.left.row(i).norm() > kDefectThreshold) data.near_defective[i] = true;
    return data;
}

}  // namespace

SpectrumReport full_spectrum(const std::vector<DegreeBlockOperator>& blocks) {
    if (blocks.empty()) throw ConfigError("full_spectrum: no blocks");
    const ModeLattice& lat = blocks.front().lattice;
    const int d = lat.dimension();
    if (static_cast<int>(blocks.size()) != d + 1)
        throw ConfigError("full_spectrum: need one block per degree 0..D");
    SpectrumReport report(lat);
    for (int k = 0; k <= d; ++k) {
        const auto& blk = blocks[k];
        if (blk.degree != k || blk.lattice != lat)
            throw ConfigError("full_spectrum: block order/lattice mismatch");
        if (blk.kind != BlockKind::Gto && blk.kind != BlockKind::Seo)
            throw ConfigError("full_spectrum: blocks must be GTO/SEO");
        report.degrees.push_back(decompose(blk.matrix, blk.label()));
    }
    return report;
}

std::vector<int> detect_singlets(const SpectrumReport& report, double tol) {
    std::vector<int> counts;
    for (const auto& deg : report.degrees) {
        int c = 0;
        for (long i = 0; i < deg.values.size(); ++i)
            if (std::abs(deg.values(i)) <= tol) ++c;
        counts.push_back(c);
    }
    return counts;
}

namespace {

// Eigenvalues of one degree grouped by proximity. Exact degeneracies are the
// norm here: every nonzero eigenvalue of a middle degree may carry one
// d-exact and one non-closed eigenvector with identical eigenvalues, and the
// eigensolver returns an arbitrary mixed basis of that plane. Pairing is
// therefore done cluster-wise through the rank of d on the cluster.
struct Cluster {
    Complex center;
    std::vector<long> members;
};

std::vector<Cluster> cluster_nonzero(const Eigen::VectorXcd& values, double tol) {
    const double radius = 200.0 * tol;
    std::vector<Cluster> clusters;
    for (long i = 0; i < values.size(); ++i) {
        if (std::abs(values(i)) <= tol) continue;
        bool placed = false;
        for (auto& c : clusters) {
            if (std::abs(values(i) - c.center) <=
                radius * std::max(1.0, std::abs(c.center))) {
                c.members.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) clusters.push_back(Cluster{values(i), {i}});
    }
    return clusters;
}

}  // namespace

std::vector<DoubletPairing> pair_doublets(
    const SpectrumReport& report, const std::vector<DegreeBlockOperator>& d_matrices,
    double tol) {
    const int d = report.dimension();
    if (static_cast<int>(d_matrices.size()) != d)
        throw ConfigError("pair_doublets: need d matrices for degrees 0..D-1");

    std::vector<std::vector<Cluster>> clusters(d + 1);
    for (int k = 0; k <= d; ++k)
        clusters[k] = cluster_nonzero(report.degrees[k].values, tol);

    // Per cluster: how many members pair up (rank of d on the cluster) and
    // how many are claimed from below; sizes must balance at the end.
    std::vector<std::vector<int>> lower_count(d + 1), upper_claimed(d + 1);
    std::vector<std::vector<std::vector<long>>> table_free(d + 1);
    for (int k = 0; k <= d; ++k) {
        lower_count[k].assign(clusters[k].size(), 0);
        upper_claimed[k].assign(clusters[k].size(), 0);
        table_free[k].resize(clusters[k].size());
        for (size_t c = 0; c < clusters[k].size(); ++c)
            table_free[k][c] = clusters[k][c].members;
    }

    std::vector<DoubletPairing> pairings;
    for (int k = 0; k < d; ++k) {
        const auto& lower = report.degrees[k];
        const auto& upper = report.degrees[k + 1];
        for (size_t c = 0; c < clusters[k].size(); ++c) {
            const Cluster& cluster = clusters[k][c];
            const long m = static_cast<long>(cluster.members.size());

            // members whose d-image is non-negligible (the others are
            // d-closed and belong upstairs-claimed bookkeeping)
            std::vector<long> open_members;
            for (long t = 0; t < m; ++t) {
                const Eigen::VectorXcd psi = lower.right.col(cluster.members[t]);
                if ((d_matrices[k].matrix * psi).norm() > tol * psi.norm())
                    open_members.push_back(cluster.members[t]);
            }
            if (open_members.empty()) continue;

            Eigen::MatrixXcd images(d_matrices[k].matrix.rows(),
                                    static_cast<long>(open_members.size()));
            for (size_t t = 0; t < open_members.size(); ++t) {
                const Eigen::VectorXcd psi = lower.right.col(open_members[t]);
                images.col(static_cast<long>(t)) = d_matrices[k].matrix * psi / psi.norm();
            }
            Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(images);
            qr.setThreshold(tol);
            const long rank = qr.rank();
            lower_count[k][c] = static_cast<int>(rank);
            if (rank == 0) continue;

            // matching eigenvalue cluster one degree up
            long uc = -1;
            for (size_t j = 0; j < clusters[k + 1].size(); ++j)
                if (std::abs(clusters[k + 1][j].center - cluster.center) <=
                    400.0 * tol * std::max(1.0, std::abs(cluster.center)))
                    uc = static_cast<long>(j);
            if (uc < 0)
                throw InvariantViolation(
                    "pair_doublets: eigenvalue (" + std::to_string(cluster.center.real()) +
                    ", " + std::to_string(cluster.center.imag()) + ") of degree " +
                    std::to_string(k) + " has no matching eigenvalue in degree " +
                    std::to_string(k + 1));

            const auto pivots = qr.colsPermutation().indices();
            for (long t = 0; t < rank; ++t) {
                const long i = open_members[pivots(t)];
                const Complex h = lower.values(i);
                const Eigen::VectorXcd psi = lower.right.col(i);
                const Eigen::VectorXcd dpsi = d_matrices[k].matrix * psi;

                // d psi must be an eigenvector of the (k+1)-block with the
                // same eigenvalue; the action is reconstructed from the
                // eigensystem of that block.
                const Eigen::VectorXcd h_dpsi =
                    upper.right * (upper.values.asDiagonal() * (upper.left * dpsi));
                const double residual = (h_dpsi - h * dpsi).norm() / dpsi.norm();
                if (residual > tol)
                    throw InvariantViolation(
                        "pair_doublets: d psi fails the eigenvector test at degree " +
                        std::to_string(k) + ", index " + std::to_string(i) +
                        " (residual " + std::to_string(residual) + ")");

                auto& free_uppers = table_free[k + 1][uc];
                if (free_uppers.empty())
                    throw InvariantViolation(
                        "pair_doublets: more paired states than eigenvalue "
                        "multiplicity in degree " + std::to_string(k + 1));
                long best_slot = 0;
                double best_dist = std::numeric_limits<double>::infinity();
                for (size_t s = 0; s < free_uppers.size(); ++s) {
                    const double dist = std::abs(upper.values(free_uppers[s]) - h);
                    if (dist < best_dist) {
                        best_dist = dist;
                        best_slot = static_cast<long>(s);
                    }
                }
                const long j = free_uppers[best_slot];
                free_uppers.erase(free_uppers.begin() + best_slot);
                ++upper_claimed[k + 1][uc];
                pairings.push_back(DoubletPairing{k, static_cast<int>(i),
                                                  static_cast<int>(j), h, residual});
            }
        }
    }

    // Count balance: every nonzero eigenvalue instance is consumed exactly
    // once, as the lower or the upper member of a doublet.
    for (int k = 0; k <= d; ++k) {
        for (size_t c = 0; c < clusters[k].size(); ++c) {
            const int size = static_cast<int>(clusters[k][c].members.size());
            if (lower_count[k][c] + upper_claimed[k][c] != size)
                throw InvariantViolation(
                    "pair_doublets: eigenvalue (" +
                    std::to_string(clusters[k][c].center.real()) + ", " +
                    std::to_string(clusters[k][c].center.imag()) + ") of degree " +
                    std::to_string(k) + " has multiplicity " + std::to_string(size) +
                    " but " + std::to_string(lower_count[k][c]) + " lower and " +
                    std::to_string(upper_claimed[k][c]) + " upper members");
        }
    }

    // Cleanly d-closed nonzero states must be d-exact: least-squares
    // preimage verification (skipped for mixed bases inside degenerate
    // clusters, where the rank bookkeeping above already decides).
    for (int k = 1; k <= d; ++k) {
        const auto& deg = report.degrees[k];
        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> preimage;
        bool factored = false;
        for (const auto& cluster : clusters[k]) {
            for (long i : cluster.members) {
                const Eigen::VectorXcd psi = deg.right.col(i);
                if (k < d) {
                    const double dnorm = (d_matrices[k].matrix * psi).norm();
                    if (dnorm > tol * psi.norm()) continue;  // not closed
                }
                if (!factored) {
                    preimage.compute(d_matrices[k - 1].matrix);
                    factored = true;
                }
                const Eigen::VectorXcd phi = preimage.solve(psi);
                const double residual =
                    (d_matrices[k - 1].matrix * phi - psi).norm() / psi.norm();
                if (residual > tol)
                    throw InvariantViolation(
                        "pair_doublets: d-closed nonzero-eigenvalue eigenstate is "
                        "not d-exact (degree " + std::to_string(k) + ", index " +
                        std::to_string(i) + ", exactness residual " +
                        std::to_string(residual) + ")");
            }
        }
    }
    return pairings;
}

FormField ergodic_zero(const DegreeBlockOperator& top_block, double tol) {
    const ModeLattice& lat = top_block.lattice;
    const int d = lat.dimension();
    if (top_block.degree != d)
        throw ConfigError("ergodic_zero: block must act on top forms");
    const DegreeEigenData data = decompose(top_block.matrix, top_block.label());
    long best = 0;
    for (long i = 1; i < data.values.size(); ++i)
        if (std::abs(data.values(i)) < std::abs(data.values(best))) best = i;
    if (std::abs(data.values(best)) > tol)
        throw InvariantViolation(
            "ergodic_zero: smallest |H| in the top block is " +
            std::to_string(std::abs(data.values(best))) +
            ", expected 0 (ground-state condition violated)");
    FormField psi = FormField::unflatten(lat, d, data.right.col(best));
    FormField one(lat, 0);
    one.coeffs()(0, lat.index_of({0, 0, 0})) = 1.0;
    const Complex mass = pair_forms(one, psi);
    if (std::abs(mass) < 1e-12)
        throw NumericsError("ergodic_zero: zero-mode has vanishing total mass");
    return psi * (1.0 / mass);
}

double pressure(const SpectrumReport& report) {
    double min_re = std::numeric_limits<double>::infinity();
    for (const auto& deg : report.degrees)
        for (long i = 0; i < deg.values.size(); ++i)
            min_re = std::min(min_re, deg.values(i).real());
    return -min_re;
}

char classify(const SpectrumReport& report, double delta_tol, double im_tol) {
    const double delta = pressure(report);
    if (delta <= delta_tol) return 'T';
    bool complex_extremal = false;
    for (const auto& deg : report.degrees)
        for (long i = 0; i < deg.values.size(); ++i) {
            const Complex h = deg.values(i);
            if (std::abs(h.real() + delta) <= delta_tol && std::abs(h.imag()) > im_tol)
                complex_extremal = true;
        }
    return complex_extremal ? 'c' : 'b';
}

WittenSample witten_index(const SpectrumReport& report, double t) {
    Complex acc = 0.0;
    for (int k = 0; k < static_cast<int>(report.degrees.size()); ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        const auto& vals = report.degrees[k].values;
        for (long i = 0; i < vals.size(); ++i) acc += sign * std::exp(-t * vals(i));
    }
    return WittenSample{t, acc.real(), std::abs(acc.imag())};
}

double partition_function(const SpectrumReport& report, double t) {
    Complex acc = 0.0;
    for (const auto& deg : report.degrees)
        for (long i = 0; i < deg.values.size(); ++i)
            acc += std::exp(-t * deg.values(i));
    return acc.real();
}

namespace {

// Greedy nearest-neighbor multiset matching; returns the largest matched
// distance.
double greedy_match(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    if (a.size() != b.size())
        return std::numeric_limits<double>::infinity();
    std::vector<bool> used(b.size(), false);
    double worst = 0.0;
    for (long i = 0; i < a.size(); ++i) {
        long best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (long j = 0; j < b.size(); ++j) {
            if (used[j]) continue;
            const double dist = std::abs(a(i) - b(j));
            if (dist < best_dist) {
                best_dist = dist;
                best = j;
            }
        }
        used[best] = true;
        worst = std::max(worst, best_dist);
    }
    return worst;
}

}  // namespace

MatchReport check_pseudo_hermiticity(const SpectrumReport& report, double tol) {
    double worst = 0.0;
    for (const auto& deg : report.degrees)
        worst = std::max(worst, greedy_match(deg.values, deg.values.conjugate()));
    return MatchReport{worst <= tol, worst};
}

MatchReport check_isospectral(const SpectrumReport& report, double tol) {
    const double worst =
        greedy_match(report.degrees.front().values, report.degrees.back().values);
    return MatchReport{worst <= tol, worst};
}

FormField evolve(const DegreeBlockOperator& block, const FormField& psi, double t) {
    if (psi.degree() != block.degree || psi.lattice() != block.lattice)
        throw ConfigError("evolve: block/form mismatch");
    const DegreeBlockOperator prop = propagator(block, t);
    return FormField::unflatten(block.lattice, block.degree,
                                prop.matrix * psi.flatten());
}

bool poincare_bendixson_assert(const SpectrumReport& report, int dimension,
                               double tol) {
    return dimension >= 3 || pressure(report) <= tol;
}

FormField left_eigenform(const SpectrumReport& report, int degree, int index) {
    const ModeLattice& lat = report.lattice;
    const int d = lat.dimension();
    const auto& deg = report.degrees.at(degree);
    const Eigen::VectorXcd u = deg.left.row(index).transpose();
    double two_pi_pow = 1.0;
    for (int a = 0; a < d; ++a) two_pi_pow *= 2.0 * M_PI;

    // phi_J(m) = eps_{J, comp(J)} * u_{(comp(J), -m)} / (2 pi)^D makes
    // pair_forms(phi, psi_beta) = u^T psi_beta.
    FormField phi(lat, d - degree);
    const MultiIndexSet& left_set = phi.components();
    const MultiIndexSet right_set(d, degree);
    const long n_modes = lat.num_modes();
    for (int cj = 0; cj < left_set.count(); ++cj) {
        const auto [comp, sign] = left_set.complement(cj);
        const long ci = right_set.rank_of(comp);
        for (long m = 0; m < n_modes; ++m)
            phi.coeffs()(cj, m) = static_cast<double>(sign) *
                                  u(ci * n_modes + lat.negated_index(m)) / two_pi_pow;
    }
    return phi;
}

// ---------------------------------------------------------------------------
// Iterative leading spectrum
// ---------------------------------------------------------------------------

namespace {

// Orthogonal projector onto ker(d) per mode, for sector-restricted
// iteration; d is mode-diagonal so the kernel splits mode by mode.
class KerDProjector {
public:
    KerDProjector(const ModeLattice& lat, int k) : lat_(lat), comps_(lat.dimension(), k) {
        const MultiIndexSet up(lat.dimension(), k + 1);
        const int bk = comps_.count();
        const int bk1 = up.count();
        proj_.reserve(lat.num_modes());
        for (long i = 0; i < lat.num_modes(); ++i) {
            const auto n = lat.mode_of(i);
            Eigen::MatrixXcd dn = Eigen::MatrixXcd::Zero(bk1, bk);
            for (int cj = 0; cj < bk1; ++cj)
                for (int slot = 0; slot <= k; ++slot) {
                    const auto rem = up.remove_slot(comps_, cj, slot);
                    dn(cj, rem.down_index) +=
                        Complex(0.0, static_cast<double>(rem.sign * n[rem.label]));
                }
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(dn, Eigen::ComputeFullV);
            const auto& sv = svd.singularValues();
            const double cutoff = 1e-12 * std::max(1.0, sv.size() ? sv(0) : 0.0);
            int rank = 0;
            for (long s = 0; s < sv.size(); ++s)
                if (sv(s) > cutoff) ++rank;
            Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(bk, bk);
            if (rank > 0) {
                const Eigen::MatrixXcd vr = svd.matrixV().leftCols(rank);
                p -= vr * vr.adjoint();
            }
            proj_.push_back(std::move(p));
        }
    }

    void apply(Eigen::VectorXcd& v) const {
        const long n_modes = lat_.num_modes();
        const int b = comps_.count();
        Eigen::VectorXcd slice(b);
        for (long m = 0; m < n_modes; ++m) {
            for (int c = 0; c < b; ++c) slice(c) = v(c * n_modes + m);
            slice = proj_[m] * slice;
            for (int c = 0; c < b; ++c) v(c * n_modes + m) = slice(c);
        }
    }

private:
    ModeLattice lat_;
    MultiIndexSet comps_;
    std::vector<Eigen::MatrixXcd> proj_;
};

}  // namespace

LeadingResult leading_spectrum(const SystemSpec& system, int k, int count, double tau,
                               const LeadingOptions& opts) {
    if (!(tau > 0.0)) throw ConfigError("leading_spectrum: tau must be > 0");
    const ModeLattice& lat = system.lattice;
    const int d = lat.dimension();
    if (k < 0 || k > d) throw ConfigError("leading_spectrum: degree out of range");
    const long n = binomial(d, k) * lat.num_modes();
    if (count < 1 || count > n) throw ConfigError("leading_spectrum: bad count");

    const GtoApplier applier(system);
    auto apply_flat = [&](const Eigen::VectorXcd& v) {
        return applier.apply(FormField::unflatten(lat, k, v)).flatten();
    };

    std::unique_ptr<KerDProjector> projector;
    if (opts.project_ker_d && k < d) projector = std::make_unique<KerDProjector>(lat, k);
    auto project = [&](Eigen::VectorXcd& v) {
        if (projector) projector->apply(v);
    };

    // Spectral-norm estimate for the RK4 step of the e^{-tau H} filter.
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_vector = [&]() {
        Eigen::VectorXcd v(n);
        for (long i = 0; i < n; ++i) v(i) = Complex(gauss(rng), gauss(rng));
        return v;
    };
    Eigen::VectorXcd probe = random_vector();
    probe /= probe.norm();
    double rho = 1.0;
    for (int it = 0; it < 12; ++it) {
        probe = apply_flat(probe);
        rho = probe.norm();
        if (rho < 1e-14) break;
        probe /= rho;
    }
    rho = std::max(rho * 1.3, 1e-6);
    const int filter_steps = std::max(1, static_cast<int>(std::ceil(tau * rho / 2.0)));
    const double dt = tau / filter_steps;

    auto filter = [&](Eigen::VectorXcd v) {
        for (int s = 0; s < filter_steps; ++s) {
            const Eigen::VectorXcd k1 = -apply_flat(v);
            const Eigen::VectorXcd k2 = -apply_flat(v + 0.5 * dt * k1);
            const Eigen::VectorXcd k3 = -apply_flat(v + 0.5 * dt * k2);
            const Eigen::VectorXcd k4 = -apply_flat(v + dt * k3);
            v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        project(v);
        return v;
    };

    const int p = static_cast<int>(std::min<long>(n, count + opts.block_extra));
    Eigen::MatrixXcd q(n, p);
    for (int c = 0; c < p; ++c) {
        Eigen::VectorXcd v = random_vector();
        project(v);
        q.col(c) = v;
    }
    {
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(q);
        q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, p);
    }

    // Columns are independent work items; the result is schedule-independent.
    const int threads = std::min(thread_budget(), p);
    auto parallel_columns = [&](const std::function<void(int)>& body) {
        if (threads <= 1) {
            for (int c = 0; c < p; ++c) body(c);
            return;
        }
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t]() {
                for (int c = t; c < p; c += threads) body(c);
            });
        for (auto& th : pool) th.join();
    };

    LeadingResult result;
    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        parallel_columns([&](int c) { q.col(c) = filter(q.col(c)); });
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(q);
        q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, p);

        // Rayleigh-Ritz with the operator itself; the filter only steers the
        // subspace, so Ritz values are exact H data.
        Eigen::MatrixXcd aq(n, p);
        parallel_columns([&](int c) {
            Eigen::VectorXcd av = apply_flat(q.col(c));
            project(av);
            aq.col(c) = av;
        });
        const Eigen::MatrixXcd s = q.adjoint() * aq;
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> small(s, true);
        if (small.info() != Eigen::Success)
            throw NumericsError("leading_spectrum: Ritz eigensolver failed");
        const auto order = sorted_order(small.eigenvalues());

        result.values.resize(count);
        result.residuals.resize(count);
        bool converged = true;
        for (int i = 0; i < count; ++i) {
            const Complex theta = small.eigenvalues()(order[i]);
            const Eigen::VectorXcd y = small.eigenvectors().col(order[i]);
            const Eigen::VectorXcd ritz = q * y;
            const double res = (aq * y - theta * ritz).norm() / ritz.norm();
            result.values(i) = theta;
            result.residuals(i) = res / std::max(1.0, std::abs(theta));
            if (result.residuals(i) > opts.tol) converged = false;
        }
        result.iterations = iter;
        if (converged) return result;
    }
    throw NumericsError("leading_spectrum: not converged after " +
                        std::to_string(opts.max_iterations) + " iterations (best residual " +
                        std::to_string(result.residuals.maxCoeff()) + ")");
}

}  // namespace sts
