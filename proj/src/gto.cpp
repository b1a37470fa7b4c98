#include "sts/gto.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <thread>

#include "sts/threading.hpp"

namespace sts {

std::string DegreeBlockOperator::label() const {
    switch (kind) {
        case BlockKind::Gto: return "GTO(k=" + std::to_string(degree) + ")";
        case BlockKind::Seo:
            return "SEO(k=" + std::to_string(degree) + ",alpha=" + std::to_string(alpha) + ")";
        case BlockKind::ExteriorD: return "d(k=" + std::to_string(degree) + ")";
        case BlockKind::ExteriorDbar: return "dbar(k=" + std::to_string(degree) + ")";
        case BlockKind::Propagator:
            return "propagator(k=" + std::to_string(degree) + ",t=" + std::to_string(time) + ")";
    }
    return "?";
}

double check_nondegenerate(const NoiseModel& noise, const ModeLattice& lattice,
                           int grid_points) {
    if (grid_points < lattice.side())
        throw ConfigError("check_nondegenerate: grid must have >= 2M+1 points per dim");
    const int d = lattice.dimension();
    long grid_size = 1;
    for (int a = 0; a < d; ++a) grid_size *= grid_points;

    double worst = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd g(d, d);
    for (long gi = 0; gi < grid_size; ++gi) {
        std::array<double, 3> x{0.0, 0.0, 0.0};
        long rest = gi;
        for (int a = d - 1; a >= 0; --a) {
            x[a] = 2.0 * M_PI * static_cast<double>(rest % grid_points) / grid_points;
            rest /= grid_points;
        }
        g.setZero();
        for (const auto& field : noise.fields) {
            std::array<double, 3> v{0.0, 0.0, 0.0};
            for (int i = 0; i < d; ++i) v[i] = field.comps[i].evaluate(x).real();
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) g(i, j) += v[i] * v[j];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
        worst = std::min(worst, es.eigenvalues().minCoeff());
    }
    return worst;
}

namespace {

// A field is "constant" when every component has a single real coefficient
// at mode zero; its Lie derivative is then mode-diagonal.
bool constant_coefficients(const TrigVectorField& field, Eigen::Vector3d& coeffs) {
    const ModeLattice& lat = field.lattice();
    coeffs.setZero();
    const long zero = lat.index_of({0, 0, 0});
    for (int j = 0; j < field.dimension(); ++j) {
        for (long i = 0; i < lat.num_modes(); ++i) {
            const Complex c = field.comps[j].coeffs()(i);
            if (i == zero) {
                if (std::abs(c.imag()) != 0.0) return false;
                coeffs(j) = c.real();
            } else if (c != Complex(0.0, 0.0)) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace

GtoApplier::GtoApplier(const SystemSpec& system) : system_(system) {
    const ModeLattice& lat = system_.lattice;
    ideriv_.resize(lat.dimension());
    for (int a = 0; a < lat.dimension(); ++a) {
        Eigen::VectorXcd v(lat.num_modes());
        for (long i = 0; i < lat.num_modes(); ++i)
            v(i) = Complex(0.0, static_cast<double>(lat.mode_of(i)[a]));
        ideriv_[a] = std::move(v);
    }
    for (const auto& c : system_.flow.comps) flow_.comps.emplace_back(lat, c);

    const_noise_diag_ = Eigen::VectorXcd::Zero(lat.num_modes());
    for (int a = 0; a < system_.noise.count(); ++a) {
        Eigen::Vector3d coeffs;
        if (constant_coefficients(system_.noise.fields[a], coeffs)) {
            Eigen::VectorXcd lie_diag(lat.num_modes());
            for (long i = 0; i < lat.num_modes(); ++i) {
                const auto n = lat.mode_of(i);
                double dot = 0.0;
                for (int j = 0; j < lat.dimension(); ++j) dot += coeffs(j) * n[j];
                lie_diag(i) = Complex(0.0, dot);
                const_noise_diag_(i) += dot * dot;
            }
            noise_const_.push_back(coeffs);
            noise_const_lie_.push_back(std::move(lie_diag));
        } else {
            FieldKernels fk;
            for (const auto& c : system_.noise.fields[a].comps)
                fk.comps.emplace_back(lat, c);
            noise_.push_back(std::move(fk));
        }
    }
}

FormField GtoApplier::d(const FormField& psi) const {
    const ModeLattice& lat = system_.lattice;
    const int k = psi.degree();
    FormField out(lat, k + 1);
    const MultiIndexSet& up = out.components();
    const MultiIndexSet& lo = psi.components();
    for (int cj = 0; cj < up.count(); ++cj) {
        for (int slot = 0; slot <= k; ++slot) {
            const auto rem = up.remove_slot(lo, cj, slot);
            const double s = static_cast<double>(rem.sign);
            out.coeffs().row(cj) +=
                s * (ideriv_[rem.label].transpose().array() *
                     psi.coeffs().row(rem.down_index).array()).matrix();
        }
    }
    return out;
}

FormField GtoApplier::interior(const FieldKernels& v, const FormField& psi) const {
    const ModeLattice& lat = system_.lattice;
    const int k = psi.degree();
    FormField out(lat, k - 1);
    const MultiIndexSet& lo = out.components();
    const MultiIndexSet& hi = psi.components();
    Eigen::VectorXcd acc(lat.num_modes());
    for (int ci = 0; ci < lo.count(); ++ci) {
        acc.setZero();
        for (int j = 0; j < lat.dimension(); ++j) {
            if (v.comps[j].empty()) continue;
            const auto ins = lo.insert_label(hi, ci, j);
            if (!ins) continue;
            const auto [sign, up_index] = *ins;
            const Eigen::VectorXcd row = psi.coeffs().row(up_index).transpose();
            v.comps[j].accumulate(row, acc, Complex(static_cast<double>(sign), 0.0));
        }
        out.coeffs().row(ci) = acc.transpose();
    }
    return out;
}

FormField GtoApplier::lie(const FieldKernels& v, const FormField& psi) const {
    const int k = psi.degree();
    const int dim = system_.lattice.dimension();
    if (k == 0) return interior(v, d(psi));
    if (k == dim) return d(interior(v, psi));
    return d(interior(v, psi)) + interior(v, d(psi));
}

FormField GtoApplier::interior_const(const Eigen::Vector3d& coeffs,
                                     const FormField& psi) const {
    const ModeLattice& lat = system_.lattice;
    FormField out(lat, psi.degree() - 1);
    const MultiIndexSet& lo = out.components();
    const MultiIndexSet& hi = psi.components();
    for (int ci = 0; ci < lo.count(); ++ci) {
        for (int j = 0; j < lat.dimension(); ++j) {
            if (coeffs(j) == 0.0) continue;
            const auto ins = lo.insert_label(hi, ci, j);
            if (!ins) continue;
            const auto [sign, up_index] = *ins;
            out.coeffs().row(ci) += (sign * coeffs(j)) * psi.coeffs().row(up_index);
        }
    }
    return out;
}

FormField GtoApplier::apply(const FormField& psi) const {
    FormField out = lie(flow_, psi);
    const double theta = system_.noise.theta;
    // constant fields: -Theta sum_a L_Ga L_Ga = +Theta diag(sum_a (c_a.n)^2)
    if (!noise_const_.empty()) {
        for (int ci = 0; ci < psi.component_count(); ++ci)
            out.coeffs().row(ci).array() +=
                theta * const_noise_diag_.transpose().array() *
                psi.coeffs().row(ci).array();
    }
    for (const auto& g : noise_) {
        const FormField once = lie(g, psi);
        out = out - lie(g, once) * Complex(theta, 0.0);
    }
    return out;
}

FormField GtoApplier::apply_dbar(const FormField& psi) const {
    if (psi.degree() == 0)
        throw ConfigError("apply_dbar: undefined on 0-forms");
    FormField out = interior(flow_, psi);
    const double theta = system_.noise.theta;
    for (size_t a = 0; a < noise_const_.size(); ++a) {
        FormField lie_psi(psi.lattice(), psi.degree());
        for (int ci = 0; ci < psi.component_count(); ++ci)
            lie_psi.coeffs().row(ci).array() =
                noise_const_lie_[a].transpose().array() * psi.coeffs().row(ci).array();
        out = out - interior_const(noise_const_[a], lie_psi) * Complex(theta, 0.0);
    }
    for (const auto& g : noise_) {
        const FormField once = lie(g, psi);
        out = out - interior(g, once) * Complex(theta, 0.0);
    }
    return out;
}

FormField matrix_free_apply(const SystemSpec& system, int k, const FormField& psi) {
    if (psi.degree() != k)
        throw ConfigError("matrix_free_apply: degree mismatch");
    if (psi.lattice() != system.lattice)
        throw ConfigError("matrix_free_apply: lattice mismatch");
    return GtoApplier(system).apply(psi);
}

namespace {

// Assemble the matrix of a linear map by applying it to basis forms,
// parallel over columns. Each column is computed independently, so the
// result is bitwise independent of the thread schedule.
Eigen::MatrixXcd assemble_columns(
    const ModeLattice& lat, int domain_degree, long codomain_size,
    const std::function<FormField(const FormField&)>& op) {
    const MultiIndexSet domain(lat.dimension(), domain_degree);
    const long n_modes = lat.num_modes();
    const long cols = domain.count() * n_modes;
    Eigen::MatrixXcd mat(codomain_size, cols);

    const int threads = std::min<long>(thread_budget(), cols);
    auto worker = [&](long col_begin, long col_end) {
        for (long col = col_begin; col < col_end; ++col) {
            FormField basis(lat, domain_degree);
            basis.coeffs()(static_cast<int>(col / n_modes), col % n_modes) = 1.0;
            mat.col(col) = op(basis).flatten();
        }
    };
    if (threads <= 1) {
        worker(0, cols);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (cols + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const long b = t * chunk;
            const long e = std::min(cols, b + chunk);
            if (b >= e) break;
            pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return mat;
}

long block_size(const ModeLattice& lat, int degree) {
    return binomial(lat.dimension(), degree) * lat.num_modes();
}

}  // namespace

DegreeBlockOperator build_d_matrix(const ModeLattice& lattice, int k) {
    if (k < 0 || k >= lattice.dimension())
        throw ConfigError("build_d_matrix: need 0 <= k < D");
    DegreeBlockOperator out;
    out.kind = BlockKind::ExteriorD;
    out.degree = k;
    out.codomain_degree = k + 1;
    out.lattice = lattice;
    out.matrix = assemble_columns(lattice, k, block_size(lattice, k + 1),
                                  [](const FormField& psi) { return d_apply(psi); });
    return out;
}

DegreeBlockOperator build_dbar_block(const SystemSpec& system, int k) {
    if (k < 0 || k > system.dimension())
        throw ConfigError("build_dbar_block: degree out of range");
    DegreeBlockOperator out;
    out.kind = BlockKind::ExteriorDbar;
    out.degree = k;
    out.codomain_degree = k - 1;
    out.lattice = system.lattice;
    if (k == 0) {
        out.matrix = Eigen::MatrixXcd::Zero(0, block_size(system.lattice, 0));
        return out;
    }
    const GtoApplier applier(system);
    out.matrix = assemble_columns(
        system.lattice, k, block_size(system.lattice, k - 1),
        [&](const FormField& psi) { return applier.apply_dbar(psi); });
    return out;
}

DegreeBlockOperator build_gto_block(const SystemSpec& system, int k) {
    if (k < 0 || k > system.dimension())
        throw ConfigError("build_gto_block: degree out of range");
    DegreeBlockOperator out;
    out.kind = BlockKind::Gto;
    out.degree = k;
    out.codomain_degree = k;
    out.lattice = system.lattice;
    const GtoApplier applier(system);
    out.matrix = assemble_columns(system.lattice, k, block_size(system.lattice, k),
                                  [&](const FormField& psi) { return applier.apply(psi); });
    return out;
}

SystemSpec shifted_system(const SystemSpec& system, double alpha, DriftShiftSign sign) {
    if (alpha < 0.0 || alpha > 1.0)
        throw ConfigError("shifted_system: alpha must lie in [0, 1]");
    if (alpha == 0.5) return system;  // shift vanishes identically
    const double s = (sign == DriftShiftSign::FokkerPlanck) ? 1.0 : -1.0;
    const double factor = s * system.noise.theta * (2.0 * alpha - 1.0);
    TrigVectorField shifted = system.flow;
    for (const auto& g : system.noise.fields) {
        // (G.grad)G^j = sum_i G^i d_i G^j
        for (int j = 0; j < system.dimension(); ++j) {
            TrigField adv(system.lattice);
            for (int i = 0; i < system.dimension(); ++i) {
                adv.coeffs() +=
                    trig_multiply(g.comps[i], g.comps[j].derivative(i)).coeffs();
            }
            shifted.comps[j].coeffs() += factor * adv.coeffs();
        }
    }
    return SystemSpec(system.lattice, std::move(shifted), system.noise,
                      system.name + "+shift");
}

DegreeBlockOperator build_seo_block(const SystemSpec& system, int k, double alpha,
                                    DriftShiftSign sign) {
    if (alpha < 0.0 || alpha > 1.0)
        throw ConfigError("build_seo_block: alpha must lie in [0, 1]");
    DegreeBlockOperator out = build_gto_block(shifted_system(system, alpha, sign), k);
    out.kind = BlockKind::Seo;
    out.alpha = alpha;
    return out;
}

DegreeBlockOperator propagator(const DegreeBlockOperator& block, double t) {
    if (!(t > 0.0)) throw ConfigError("propagator: t must be > 0");
    if (block.kind != BlockKind::Gto && block.kind != BlockKind::Seo)
        throw ConfigError("propagator: block must be a GTO/SEO degree block");
    DegreeBlockOperator out;
    out.kind = BlockKind::Propagator;
    out.degree = block.degree;
    out.codomain_degree = block.degree;
    out.time = t;
    out.lattice = block.lattice;
    out.matrix = (-t * block.matrix).exp();
    return out;
}

}  // namespace sts
