#pragma once

#include <vector>

#include "sts/exterior.hpp"

namespace sts {

struct CriticalPoint {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // first D entries used
    Eigen::MatrixXd jacobian;   // D x D flow Jacobian at the point
    int morse_index = 0;        // eigenvalues with positive real part
    int vf_index = 0;           // sign of det(jacobian)
    bool degenerate = false;    // some eigenvalue has |Re| <= 1e-8
};

struct CriticalPointSearch {
    std::vector<CriticalPoint> points;       // nondegenerate, deduplicated
    std::vector<CriticalPoint> degenerate;   // flagged and excluded
};

struct PoincareHopfResult {
    int sum = 0;
    bool reliable = true;  // false when degenerate points were present
};

// Integer chain complex of a gradient flow: critical points grouped by
// Morse index, boundary matrices D_k : C_k -> C_{k-1}.
struct MorseComplexData {
    int dimension = 0;
    std::vector<std::vector<CriticalPoint>> by_index;  // size D+1
    std::vector<Eigen::MatrixXi> boundary;  // boundary[k] = D_{k+1}: C_{k+1} -> C_k
    std::vector<int> homology_ranks;
};

struct ShootParams {
    double launch_offset = 1e-6;   // epsilon along the unstable eigenvector
    double capture_radius = 1e-4;  // delta around a target point
    double rel_tol = 1e-10;        // adaptive integrator tolerance
    double escape_radius = 1e-2;   // leave this ball before capture checks
    double max_time = 1e4;
    long max_steps = 200000;
};

// Symmetry of the Jacobian d_i F_j = d_j F_i as a trig-coefficient identity.
bool check_gradient(const TrigVectorField& flow, double tol = 1e-12);

// Newton iteration from a uniform seed grid, deduplicated by torus distance.
CriticalPointSearch find_critical_points(const TrigVectorField& flow,
                                         int seeds_per_dim, double tol = 1e-12);

PoincareHopfResult poincare_hopf(const CriticalPointSearch& search);
int poincare_hopf(const std::vector<CriticalPoint>& points);

// Signed separatrix counting between critical points of adjacent index
// (D <= 2, verified gradient flows, Morse-Smale transversality assumed;
// saddle-saddle connections raise NumericsError).
MorseComplexData boundary_operator(const TrigVectorField& flow,
                                   const CriticalPointSearch& search,
                                   const ShootParams& params = {});

// rank H_k = dim C_k - rank D_k - rank D_{k+1} over the rationals.
// Throws InvariantViolation when the complex fails D.D = 0.
std::vector<int> homology_ranks(const MorseComplexData& complex_data);

}  // namespace sts
