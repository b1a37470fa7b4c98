#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sts/gto.hpp"

namespace sts {

// One paired (psi, d psi) eigenstate couple across adjacent degrees.
struct DoubletPairing {
    int degree = 0;       // degree of the lower member
    int lower_index = 0;  // eigenstate index within that degree
    int upper_index = 0;  // partner index within degree+1
    Complex eigenvalue;
    double residual = 0.0;  // ||H(d psi) - H_a d psi|| / ||d psi||
};

// Eigen data of one degree block. `left` rows are bi-orthonormal to `right`
// columns (left.row(a) * right.col(b) = delta_ab) wherever the block is
// numerically diagonalizable; near-defective pairs are flagged instead of
// force-normalized.
struct DegreeEigenData {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
    std::vector<bool> near_defective;
};

struct WittenSample {
    double t = 0.0;
    double value = 0.0;
    double imag_residue = 0.0;
};

struct SpectrumReport {
    ModeLattice lattice;
    double tolerance = 1e-7;
    std::vector<DegreeEigenData> degrees;  // index = form degree, size D+1
    std::vector<int> singlet_counts;
    std::vector<DoubletPairing> pairings;
    double delta = 0.0;
    char type_label = 'T';
    std::vector<WittenSample> witten_samples;

    explicit SpectrumReport(const ModeLattice& lat) : lattice(lat) {}
    int dimension() const { return lattice.dimension(); }
};

// Dense bi-orthogonal eigensystem of all degree blocks (eigen data only;
// census/pairing/pressure fields are filled by the operations below).
SpectrumReport full_spectrum(const std::vector<DegreeBlockOperator>& blocks);

// Count of |H| <= tol eigenvalues per degree (compare against the Betti
// numbers binomial(D, k) of the torus).
std::vector<int> detect_singlets(const SpectrumReport& report, double tol);

// Pair every nonzero eigenvalue across adjacent degrees. Lower members are
// verified by pushing the eigenvector through d; d-closed nonzero states
// are verified d-exact by a least-squares preimage. An unpaired nonzero
// eigenvalue above tolerance throws InvariantViolation.
std::vector<DoubletPairing> pair_doublets(const SpectrumReport& report,
                                          const std::vector<DegreeBlockOperator>& d_matrices,
                                          double tol);

// Zero-mode of the top block, normalized to unit total mass
// (pairing with the constant 0-form equals 1).
FormField ergodic_zero(const DegreeBlockOperator& top_block, double tol = 1e-7);

// Delta = -min over all degrees of Re H.
double pressure(const SpectrumReport& report);

// 'T' (unbroken), 'b' (broken, real extremal eigenvalues), or
// 'c' (broken, complex extremal pair).
char classify(const SpectrumReport& report, double delta_tol = 1e-6,
              double im_tol = 1e-6);

WittenSample witten_index(const SpectrumReport& report, double t);
double partition_function(const SpectrumReport& report, double t);

struct MatchReport {
    bool ok = false;
    double max_mismatch = 0.0;
};
// Eigenvalue multiset equals its conjugate multiset, per degree.
MatchReport check_pseudo_hermiticity(const SpectrumReport& report, double tol);
// Degree-0 and degree-D eigenvalue multisets agree.
MatchReport check_isospectral(const SpectrumReport& report, double tol);

// e^{-t H} psi through the dense propagator.
FormField evolve(const DegreeBlockOperator& block, const FormField& psi, double t);

// True when dim >= 3 or pressure is zero within tolerance; false flags an
// invariant violation worth investigating before any physics claim.
bool poincare_bendixson_assert(const SpectrumReport& report, int dimension,
                               double tol = 1e-8);

// Left eigen-form (degree D-k) of eigenstate `index` in degree k; satisfies
// pair_forms(left_eigenform(..), right eigenvector form) = delta.
FormField left_eigenform(const SpectrumReport& report, int degree, int index);

// Iterative eigensolver: subspace iteration filtered by the propagator
// e^{-tau H} (matrix-free), Rayleigh-Ritz values of H itself. Returns the
// `count` eigenvalues of smallest real part.
struct LeadingOptions {
    double tol = 1e-8;
    int max_iterations = 800;
    int block_extra = 8;
    bool project_ker_d = false;  // restrict to the d-closed sector
    std::uint64_t seed = 0x5eedULL;
};
struct LeadingResult {
    Eigen::VectorXcd values;
    Eigen::VectorXd residuals;
    int iterations = 0;
};
LeadingResult leading_spectrum(const SystemSpec& system, int k, int count, double tau,
                               const LeadingOptions& opts = {});

}  // namespace sts
