#pragma once

#include <Eigen/Dense>

#include "sts/multi_index.hpp"
#include "sts/trig_field.hpp"

namespace sts {

// Degree-k differential form on T^D in the truncated Fourier basis.
// Coefficients are stored as a (components x modes) complex matrix, the
// component rows following the MultiIndexSet enumeration. The flattened
// layout (component-major) is shared with DegreeBlockOperator.
class FormField {
public:
    FormField(const ModeLattice& lat, int degree)
        : lat_(lat),
          degree_(degree),
          idx_(lat.dimension(), degree),
          c_(Eigen::MatrixXcd::Zero(idx_.count(), lat.num_modes())) {}

    const ModeLattice& lattice() const { return lat_; }
    int degree() const { return degree_; }
    const MultiIndexSet& components() const { return idx_; }
    int component_count() const { return idx_.count(); }

    const Eigen::MatrixXcd& coeffs() const { return c_; }
    Eigen::MatrixXcd& coeffs() { return c_; }

    Complex coeff(int ci, const std::array<int, 3>& n) const {
        return c_(ci, lat_.index_of(n));
    }
    void set_coeff(int ci, const std::array<int, 3>& n, Complex v) {
        c_(ci, lat_.index_of(n)) = v;
    }

    TrigField component(int ci) const {
        return TrigField(lat_, c_.row(ci).transpose());
    }
    void set_component(int ci, const TrigField& f) {
        if (f.lattice() != lat_) throw ConfigError("FormField: lattice mismatch");
        c_.row(ci) = f.coeffs().transpose();
    }

    long flat_size() const { return c_.rows() * c_.cols(); }

    Eigen::VectorXcd flatten() const {
        Eigen::VectorXcd v(flat_size());
        for (int ci = 0; ci < c_.rows(); ++ci)
            v.segment(ci * c_.cols(), c_.cols()) = c_.row(ci).transpose();
        return v;
    }

    static FormField unflatten(const ModeLattice& lat, int degree,
                               const Eigen::VectorXcd& v) {
        FormField out(lat, degree);
        if (v.size() != out.flat_size())
            throw ConfigError("FormField: flat vector size mismatch");
        for (int ci = 0; ci < out.c_.rows(); ++ci)
            out.c_.row(ci) = v.segment(ci * out.c_.cols(), out.c_.cols()).transpose();
        return out;
    }

    double norm() const { return c_.norm(); }

    double reality_defect() const {
        double worst = 0.0;
        for (int ci = 0; ci < c_.rows(); ++ci)
            worst = std::max(worst, component(ci).reality_defect());
        return worst;
    }

    FormField operator+(const FormField& o) const {
        require_compatible(o);
        FormField out = *this;
        out.c_ += o.c_;
        return out;
    }
    FormField operator-(const FormField& o) const {
        require_compatible(o);
        FormField out = *this;
        out.c_ -= o.c_;
        return out;
    }
    FormField operator*(Complex s) const {
        FormField out = *this;
        out.c_ *= s;
        return out;
    }

private:
    void require_compatible(const FormField& o) const {
        if (lat_ != o.lat_ || degree_ != o.degree_)
            throw ConfigError("FormField: incompatible operands");
    }

    ModeLattice lat_;
    int degree_;
    MultiIndexSet idx_;
    Eigen::MatrixXcd c_;
};

}  // namespace sts
