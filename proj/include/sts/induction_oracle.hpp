#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace sts::induction {

// Independent eigensolver for the magnetic induction operator
//   L b = curl(F x b) + Theta * laplacian(b),  div b = 0,
// with F the A,B,C cellular flow, assembled directly in vector components
// on a Fourier grid. Used as a cross-check oracle for the degree-2 transfer
// operator spectrum; it intentionally shares no code with the
// exterior-calculus stack.
struct GrowthResult {
    Eigen::VectorXcd eigenvalues;  // sorted by descending real part
    Eigen::VectorXd residuals;
    int iterations = 0;
};

GrowthResult abc_growth_spectrum(double a, double b, double c, double theta, int modes,
                                 int count, double tau, double tol = 1e-8,
                                 int max_iterations = 800,
                                 std::uint64_t seed = 0x0'acce55ULL);

}  // namespace sts::induction
