#pragma once

#include "polyflow/types.hpp"

namespace polyflow {

struct DareSolution {
  MatrixXd P;  // stabilizing solution, symmetric PSD
  MatrixXd K;  // feedback gain, u = K xtilde
  int iterations = 0;
  // Relative DARE equation defect at the returned P,
  // ||Ric(P) - P||_inf / (1 + ||P||_inf).
  double residual = 0.0;
  bool observable = true; // numerical (A, C) observability, diagnostic only
};

/// Fixed-point iteration for
///   P = A'PA - (A'PB)(R + B'PB)^{-1}(B'PA) + Qlift
/// started at P0 = Qlift and accelerated by doubling (each step reaches the
/// squared iterate index); K = -(R + B'PB)^{-1} B'PA from the converged P.
/// Convergence is measured relative to ||P||. Throws on non-convergence
/// (non-stabilizable pair).
DareSolution solve_dare(const MatrixXd& A, const MatrixXd& B,
                        const MatrixXd& Qlift, const MatrixXd& R,
                        double tol = 1e-10, int maxIter = 10000);

double spectral_radius(const MatrixXd& M);

/// Numerical rank test of the observability matrix of (A, C).
bool is_observable(const MatrixXd& A, const MatrixXd& C, double tol = 1e-8);

}  // namespace polyflow
