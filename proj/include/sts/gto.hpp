#pragma once

#include <memory>
#include <string>

#include "sts/exterior.hpp"
#include "sts/system.hpp"

namespace sts {

enum class BlockKind { Gto, Seo, ExteriorD, ExteriorDbar, Propagator };

// Sign convention for the drift shift F_alpha = F + s*Theta*(2a-1)*(G.grad)G
// relating the alpha-scheme evolution operator to the transfer operator.
// FokkerPlanck (s = +1) is the default; it is the convention that survives
// the Monte-Carlo cross-check in the sde module (compare_to_gto).
enum class DriftShiftSign { FokkerPlanck, Alternate };

inline constexpr DriftShiftSign kDefaultDriftShiftSign = DriftShiftSign::FokkerPlanck;

// The matrix of one operator restricted to one form degree, in the
// flattened (component-major) basis of FormField.
struct DegreeBlockOperator {
    BlockKind kind = BlockKind::Gto;
    int degree = 0;
    int codomain_degree = 0;     // equals degree for H/propagator, degree+-1 for d/dbar
    double alpha = 0.5;          // SEO only
    double time = 0.0;           // propagator only
    ModeLattice lattice;
    Eigen::MatrixXcd matrix;

    std::string label() const;
    long rows() const { return matrix.rows(); }
    long cols() const { return matrix.cols(); }
};

// Minimum over a sampled grid of the smallest eigenvalue of the
// noise-induced metric g^{ij}(x) = sum_a G_a^i(x) G_a^j(x).
// A result <= 0 means the model is degenerate (value, not error).
double check_nondegenerate(const NoiseModel& noise, const ModeLattice& lattice,
                           int grid_points);

// Matrix-free application machinery shared by assembly and the iterative
// eigensolver. Kernels for F and each G_a are precomputed once.
class GtoApplier {
public:
    explicit GtoApplier(const SystemSpec& system);

    const SystemSpec& system() const { return system_; }

    // H psi = L_F psi - Theta sum_a L_{G_a} L_{G_a} psi
    FormField apply(const FormField& psi) const;
    // dbar psi = i_F psi - Theta sum_a i_{G_a} L_{G_a} psi
    FormField apply_dbar(const FormField& psi) const;

    FormField lie_flow(const FormField& psi) const { return lie(flow_, psi); }

private:
    struct FieldKernels {
        std::vector<ConvKernel> comps;
    };

    FormField d(const FormField& psi) const;
    FormField interior(const FieldKernels& v, const FormField& psi) const;
    FormField lie(const FieldKernels& v, const FormField& psi) const;

    FormField interior_const(const Eigen::Vector3d& coeffs, const FormField& psi) const;

    SystemSpec system_;
    std::vector<Eigen::VectorXcd> ideriv_;  // per axis: i*n_axis per mode
    FieldKernels flow_;
    // Non-constant noise fields go through the Cartan kernels; constant
    // fields act mode-diagonally (L_G = i c.n) and are folded into one
    // elementwise factor sum_a (c_a.n)^2.
    std::vector<FieldKernels> noise_;
    std::vector<Eigen::Vector3d> noise_const_;     // constant fields' coefficients
    std::vector<Eigen::VectorXcd> noise_const_lie_;  // per field: i c.n per mode
    Eigen::VectorXcd const_noise_diag_;            // sum_a (c_a.n)^2 per mode
};

// One-shot matrix-free H^(k) psi (same operator as the assembled block).
FormField matrix_free_apply(const SystemSpec& system, int k, const FormField& psi);

// Matrix of the exterior derivative d_k : degree k -> k+1.
DegreeBlockOperator build_d_matrix(const ModeLattice& lattice, int k);

// Matrix of dbar_k : degree k -> k-1 (k = 0 yields the empty-codomain map).
DegreeBlockOperator build_dbar_block(const SystemSpec& system, int k);

// Matrix of the transfer operator H^(k) = L_F - Theta sum_a L_Ga L_Ga.
DegreeBlockOperator build_gto_block(const SystemSpec& system, int k);

// Matrix of the alpha-family evolution operator: the transfer operator of
// the shifted flow F_alpha. At alpha = 1/2 the shift vanishes identically
// and the output equals build_gto_block bit for bit.
DegreeBlockOperator build_seo_block(const SystemSpec& system, int k, double alpha,
                                    DriftShiftSign sign = kDefaultDriftShiftSign);

// The system with flow F_alpha = F + s*Theta*(2a-1)*(G.grad)G.
SystemSpec shifted_system(const SystemSpec& system, double alpha,
                          DriftShiftSign sign = kDefaultDriftShiftSign);

// Finite-time propagator e^{-t H^(k)} of a GTO/SEO block.
DegreeBlockOperator propagator(const DegreeBlockOperator& block, double t);

}  // namespace sts
