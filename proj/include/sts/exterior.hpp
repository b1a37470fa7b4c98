#pragma once

#include <vector>

#include "sts/form_field.hpp"

namespace sts {

// Precomputed convolution kernel for repeated Galerkin products with one
// trig polynomial: per nonzero mode of the multiplier, the list of
// (source, target) flat mode indices whose sum stays inside the lattice.
// Products are convolved exactly, then truncated back to |n_i| <= M.
class ConvKernel {
public:
    ConvKernel(const ModeLattice& lat, const TrigField& multiplier);

    // out += scale * (multiplier * in), truncated to the lattice.
    void accumulate(const Eigen::VectorXcd& in, Eigen::VectorXcd& out,
                    Complex scale = Complex(1.0, 0.0)) const;

    bool empty() const { return shifts_.empty(); }

private:
    // One multiplier mode: the flat-index map src -> src+offset restricted
    // to in-range modes decomposes into contiguous runs.
    struct Run {
        int src_begin;
        int dst_begin;
        int length;
    };
    struct Shift {
        Complex coeff;
        std::vector<Run> runs;
    };
    std::vector<Shift> shifts_;
};

// Componentwise Galerkin product f * psi (exact convolution + truncation).
FormField galerkin_multiply(const TrigField& f, const FormField& psi);

// Scalar Galerkin product of two trig polynomials.
TrigField trig_multiply(const TrigField& f, const TrigField& g);

// Exterior derivative, exact on the lattice. Rejects top forms.
FormField d_apply(const FormField& psi);

// Interior product (contraction with V). Rejects 0-forms.
FormField interior_apply(const TrigVectorField& V, const FormField& psi);

// Lie derivative via the Cartan formula d i_V + i_V d, with the
// degree-boundary term dropped where the operator is undefined.
FormField lie_apply(const TrigVectorField& V, const FormField& psi);

// Wedge-integration pairing of complementary-degree forms:
// integral over T^D of phi ^ psi.
Complex pair_forms(const FormField& phi, const FormField& psi);

// Divergence sum_j d(V^j)/dx_j as a trig polynomial (exact).
TrigField divergence(const TrigVectorField& V);

// Uniform-grid samples of every component (inverse discrete Fourier
// evaluation). Grid must resolve the lattice: points_per_dim >= 2M+1.
struct GridValues {
    int dimension = 0;
    int points_per_dim = 0;
    std::vector<Eigen::VectorXcd> values;  // one flat grid per component

    double max_imag_abs() const;
    double min_real() const;
};
GridValues evaluate_on_grid(const FormField& psi, int points_per_dim);

}  // namespace sts
