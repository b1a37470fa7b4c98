#include "sts/exterior.hpp"

#include <cmath>

namespace sts {

ConvKernel::ConvKernel(const ModeLattice& lat, const TrigField& multiplier) {
    if (multiplier.lattice() != lat)
        throw ConfigError("ConvKernel: lattice mismatch");
    for (const auto& entry : multiplier.nonzero_modes()) {
        Shift sh;
        sh.coeff = entry.coeff;
        int run_src = -1, run_dst = -1, run_len = 0;
        for (long i = 0; i < lat.num_modes(); ++i) {
            auto n = lat.mode_of(i);
            for (int a = 0; a < lat.dimension(); ++a) n[a] += entry.shift[a];
            if (!lat.contains(n)) continue;
            const int dst = static_cast<int>(lat.index_of(n));
            if (run_len > 0 && i == run_src + run_len && dst == run_dst + run_len) {
                ++run_len;
            } else {
                if (run_len > 0) sh.runs.push_back({run_src, run_dst, run_len});
                run_src = static_cast<int>(i);
                run_dst = dst;
                run_len = 1;
            }
        }
        if (run_len > 0) sh.runs.push_back({run_src, run_dst, run_len});
        shifts_.push_back(std::move(sh));
    }
}

void ConvKernel::accumulate(const Eigen::VectorXcd& in, Eigen::VectorXcd& out,
                            Complex scale) const {
    for (const auto& sh : shifts_) {
        const Complex c = scale * sh.coeff;
        for (const auto& run : sh.runs)
            out.segment(run.dst_begin, run.length) +=
                c * in.segment(run.src_begin, run.length);
    }
}

FormField galerkin_multiply(const TrigField& f, const FormField& psi) {
    if (f.lattice() != psi.lattice())
        throw ConfigError("galerkin_multiply: lattice mismatch");
    const ConvKernel kernel(psi.lattice(), f);
    FormField out(psi.lattice(), psi.degree());
    Eigen::VectorXcd acc(psi.lattice().num_modes());
    for (int ci = 0; ci < psi.component_count(); ++ci) {
        acc.setZero();
        const Eigen::VectorXcd row = psi.coeffs().row(ci).transpose();
        kernel.accumulate(row, acc);
        out.coeffs().row(ci) = acc.transpose();
    }
    return out;
}

TrigField trig_multiply(const TrigField& f, const TrigField& g) {
    if (f.lattice() != g.lattice())
        throw ConfigError("trig_multiply: lattice mismatch");
    const ConvKernel kernel(f.lattice(), f);
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(f.lattice().num_modes());
    kernel.accumulate(g.coeffs(), acc);
    return TrigField(f.lattice(), std::move(acc));
}

FormField d_apply(const FormField& psi) {
    const ModeLattice& lat = psi.lattice();
    const int k = psi.degree();
    if (k >= lat.dimension())
        throw ConfigError("d_apply: top forms are closed by degree count (k = D)");
    FormField out(lat, k + 1);
    const MultiIndexSet& up = out.components();
    const MultiIndexSet& lo = psi.components();
    // (d psi)_J = sum over slots m of (-1)^(m-1) * (i n_{j_m}) * psi_{J minus j_m}
    for (int cj = 0; cj < up.count(); ++cj) {
        for (int slot = 0; slot <= k; ++slot) {
            const auto rem = up.remove_slot(lo, cj, slot);
            const double s = static_cast<double>(rem.sign);
            for (long i = 0; i < lat.num_modes(); ++i) {
                const auto n = lat.mode_of(i);
                const Complex deriv(0.0, s * n[rem.label]);
                out.coeffs()(cj, i) += deriv * psi.coeffs()(rem.down_index, i);
            }
        }
    }
    return out;
}

FormField interior_apply(const TrigVectorField& V, const FormField& psi) {
    const ModeLattice& lat = psi.lattice();
    if (V.lattice() != lat) throw ConfigError("interior_apply: lattice mismatch");
    const int k = psi.degree();
    if (k < 1) throw ConfigError("interior_apply: undefined on 0-forms");
    FormField out(lat, k - 1);
    const MultiIndexSet& lo = out.components();
    const MultiIndexSet& hi = psi.components();
    // (i_V psi)_{I'} = sum over labels j not in I' of
    //   insertion_sign(j, I') * Galerkin(V^j * psi_{I' + j})
    std::vector<ConvKernel> kernels;
    kernels.reserve(V.comps.size());
    for (const auto& c : V.comps) kernels.emplace_back(lat, c);
    Eigen::VectorXcd acc(lat.num_modes());
    for (int ci = 0; ci < lo.count(); ++ci) {
        acc.setZero();
        for (int j = 0; j < lat.dimension(); ++j) {
            const auto ins = lo.insert_label(hi, ci, j);
            if (!ins) continue;
            const auto [sign, up_index] = *ins;
            const Eigen::VectorXcd row = psi.coeffs().row(up_index).transpose();
            kernels[j].accumulate(row, acc, Complex(static_cast<double>(sign), 0.0));
        }
        out.coeffs().row(ci) = acc.transpose();
    }
    return out;
}

FormField lie_apply(const TrigVectorField& V, const FormField& psi) {
    const ModeLattice& lat = psi.lattice();
    if (V.lattice() != lat) throw ConfigError("lie_apply: lattice mismatch");
    const int k = psi.degree();
    const int d = lat.dimension();
    if (k == 0) return interior_apply(V, d_apply(psi));
    if (k == d) return d_apply(interior_apply(V, psi));
    return d_apply(interior_apply(V, psi)) + interior_apply(V, d_apply(psi));
}

Complex pair_forms(const FormField& phi, const FormField& psi) {
    const ModeLattice& lat = psi.lattice();
    if (phi.lattice() != lat) throw ConfigError("pair_forms: lattice mismatch");
    if (phi.degree() + psi.degree() != lat.dimension())
        throw ConfigError("pair_forms: degrees must be complementary");
    const MultiIndexSet& left = phi.components();
    const MultiIndexSet& right = psi.components();
    double two_pi_pow = 1.0;
    for (int a = 0; a < lat.dimension(); ++a) two_pi_pow *= 2.0 * M_PI;
    Complex total = 0.0;
    for (int cj = 0; cj < left.count(); ++cj) {
        const auto [comp, sign] = left.complement(cj);
        const int ci = right.rank_of(comp);
        Complex dot = 0.0;
        for (long i = 0; i < lat.num_modes(); ++i)
            dot += phi.coeffs()(cj, lat.negated_index(i)) * psi.coeffs()(ci, i);
        total += static_cast<double>(sign) * dot;
    }
    return two_pi_pow * total;
}

TrigField divergence(const TrigVectorField& V) {
    TrigField out(V.lattice());
    for (int j = 0; j < V.dimension(); ++j)
        out.coeffs() += V.comps[j].derivative(j).coeffs();
    return out;
}

double GridValues::max_imag_abs() const {
    double worst = 0.0;
    for (const auto& v : values)
        for (long i = 0; i < v.size(); ++i)
            worst = std::max(worst, std::abs(v(i).imag()));
    return worst;
}

double GridValues::min_real() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& v : values)
        for (long i = 0; i < v.size(); ++i) lo = std::min(lo, v(i).real());
    return lo;
}

GridValues evaluate_on_grid(const FormField& psi, int points_per_dim) {
    const ModeLattice& lat = psi.lattice();
    const int d = lat.dimension();
    const int side = lat.side();
    if (points_per_dim < side)
        throw ConfigError("evaluate_on_grid: grid must have >= 2M+1 points per dim");
    const int p = points_per_dim;
    long grid_size = 1;
    for (int a = 0; a < d; ++a) grid_size *= p;

    // Per-axis phase table e^{i n x_g}, n = -M..M, x_g = 2 pi g / p.
    const int m = lat.cutoff();
    Eigen::MatrixXcd w(side, p);
    for (int nn = -m; nn <= m; ++nn)
        for (int g = 0; g < p; ++g)
            w(nn + m, g) = std::polar(1.0, 2.0 * M_PI * nn * g / p);

    GridValues out;
    out.dimension = d;
    out.points_per_dim = p;
    out.values.resize(psi.component_count());
    for (int ci = 0; ci < psi.component_count(); ++ci) {
        Eigen::VectorXcd vals = Eigen::VectorXcd::Zero(grid_size);
        for (long gi = 0; gi < grid_size; ++gi) {
            std::array<int, 3> g{0, 0, 0};
            long rest = gi;
            for (int a = d - 1; a >= 0; --a) {
                g[a] = static_cast<int>(rest % p);
                rest /= p;
            }
            Complex acc = 0.0;
            for (long i = 0; i < lat.num_modes(); ++i) {
                const Complex c = psi.coeffs()(ci, i);
                if (c == Complex(0.0, 0.0)) continue;
                const auto n = lat.mode_of(i);
                Complex phase = w(n[0] + m, g[0]);
                for (int a = 1; a < d; ++a) phase *= w(n[a] + m, g[a]);
                acc += c * phase;
            }
            vals(gi) = acc;
        }
        out.values[ci] = std::move(vals);
    }
    return out;
}

}  // namespace sts
