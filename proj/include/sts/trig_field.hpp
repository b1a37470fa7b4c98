#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "sts/mode_lattice.hpp"

namespace sts {

using Complex = std::complex<double>;

// Scalar trigonometric polynomial f(x) = sum_n c_n e^{i n.x} on a mode
// lattice. Real-valued fields satisfy c_{-n} = conj(c_n); that is enforced
// where fields are constructed from real data and testable via
// reality_defect().
class TrigField {
public:
    explicit TrigField(const ModeLattice& lat)
        : lat_(lat), c_(Eigen::VectorXcd::Zero(lat.num_modes())) {}

    TrigField(const ModeLattice& lat, Eigen::VectorXcd coeffs)
        : lat_(lat), c_(std::move(coeffs)) {
        if (c_.size() != lat_.num_modes())
            throw ConfigError("TrigField: coefficient count does not match lattice");
    }

    static TrigField constant(const ModeLattice& lat, double value) {
        TrigField f(lat);
        std::array<int, 3> zero{0, 0, 0};
        f.c_(lat.index_of(zero)) = value;
        return f;
    }

    const ModeLattice& lattice() const { return lat_; }
    const Eigen::VectorXcd& coeffs() const { return c_; }
    Eigen::VectorXcd& coeffs() { return c_; }

    Complex coeff(const std::array<int, 3>& n) const { return c_(lat_.index_of(n)); }
    void set_coeff(const std::array<int, 3>& n, Complex v) { c_(lat_.index_of(n)) = v; }

    // max |c(-n) - conj(c(n))| over the lattice.
    double reality_defect() const {
        double worst = 0.0;
        for (long i = 0; i < c_.size(); ++i) {
            const Complex d = c_(lat_.negated_index(i)) - std::conj(c_(i));
            worst = std::max(worst, std::abs(d));
        }
        return worst;
    }

    // d/dx_axis: multiply mode n by i*n_axis. Exact on the lattice.
    TrigField derivative(int axis) const {
        TrigField out(lat_);
        for (long i = 0; i < c_.size(); ++i) {
            const auto n = lat_.mode_of(i);
            out.c_(i) = Complex(0.0, static_cast<double>(n[axis])) * c_(i);
        }
        return out;
    }

    Complex evaluate(const std::array<double, 3>& x) const {
        Complex acc = 0.0;
        for (long i = 0; i < c_.size(); ++i) {
            if (c_(i) == Complex(0.0, 0.0)) continue;
            const auto n = lat_.mode_of(i);
            double phase = 0.0;
            for (int a = 0; a < lat_.dimension(); ++a) phase += n[a] * x[a];
            acc += c_(i) * std::polar(1.0, phase);
        }
        return acc;
    }

    // Sparse view used by convolution kernels and fast point evaluation.
    struct KernelEntry {
        std::array<int, 3> shift;
        Complex coeff;
    };
    std::vector<KernelEntry> nonzero_modes() const {
        std::vector<KernelEntry> out;
        for (long i = 0; i < c_.size(); ++i)
            if (c_(i) != Complex(0.0, 0.0)) out.push_back({lat_.mode_of(i), c_(i)});
        return out;
    }

private:
    ModeLattice lat_;
    Eigen::VectorXcd c_;
};

// D scalar components V^j of a vector field on T^D.
struct TrigVectorField {
    std::vector<TrigField> comps;

    explicit TrigVectorField(const ModeLattice& lat)
        : comps(static_cast<size_t>(lat.dimension()), TrigField(lat)) {}

    const ModeLattice& lattice() const { return comps.front().lattice(); }
    int dimension() const { return static_cast<int>(comps.size()); }

    double reality_defect() const {
        double worst = 0.0;
        for (const auto& c : comps) worst = std::max(worst, c.reality_defect());
        return worst;
    }
};

}  // namespace sts
