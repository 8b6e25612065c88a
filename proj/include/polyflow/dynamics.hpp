#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "polyflow/types.hpp"

namespace polyflow {

/// Discrete-time nonlinear system x(t+1) = f(x(t), u(t)).
///
/// step must be pure and deterministic; all evaluation helpers below rely on
/// that. Instances are immutable after construction and safe to share across
/// threads.
struct DiscreteSystem {
  int n = 0;  // state dimension
  int m = 0;  // input dimension
  std::function<VectorXd(const VectorXd&, const VectorXd&)> step;
  std::string name;
};

/// Polynomial map R^{n2} -> R^{n1} stored as dense (exponent, coefficient)
/// term pairs: value(x) = sum_t coeffs.col(t) * prod_j x_j^exponents(t, j).
struct PolynomialMap {
  MatrixXi exponents;  // terms x n2
  MatrixXd coeffs;     // n1 x terms

  VectorXd eval(const VectorXd& x) const;
  int inputDim() const { return static_cast<int>(exponents.cols()); }
  int outputDim() const { return static_cast<int>(coeffs.rows()); }
};

/// Pest-control benchmark in shifted coordinates x1 = v - 1, x2 = p - 0.2,
/// u = a - 0.2, so that the target equilibrium sits at the origin.
DiscreteSystem pest_model(double r = 0.5, double c = 0.2, double kappa = 2.0,
                          double d = 0.2);

/// Block-triangular system
///   x1+ = A1 x1 + phi(x2) + B1 u,
///   x2+ = A2 x2,
/// which admits an exact finite-dimensional linear embedding when phi is
/// polynomial.
DiscreteSystem immersible_block_system(const MatrixXd& A1, const MatrixXd& A2,
                                       const MatrixXd& B1,
                                       const PolynomialMap& phi);

/// Linear system x+ = A x + B u.
DiscreteSystem linear_system(const MatrixXd& A, const MatrixXd& B,
                             const std::string& name = "linear");

/// Iterated map: l = 0 gives x, l = 1 gives f(x, u), and each further step
/// applies f(., 0).
VectorXd iterate_map(const DiscreteSystem& sys, const VectorXd& x,
                     const VectorXd& u, int ell);

/// All iterates [f^0, f^1, ..., f^L] in one forward pass.
std::vector<VectorXd> iterate_sequence(const DiscreteSystem& sys,
                                       const VectorXd& x, const VectorXd& u,
                                       int L);

/// Polyflow basis of degree k: the stacked vector
/// [x; f^1(x,0); ...; f^k(x,0)] of length n(k+1).
VectorXd stacked_basis(const DiscreteSystem& sys, const VectorXd& x, int k);

/// Central finite-difference Jacobians (df/dx, df/du) at (x0, u0).
std::pair<MatrixXd, MatrixXd> jacobian_linearization(const DiscreteSystem& sys,
                                                     const VectorXd& x0,
                                                     const VectorXd& u0,
                                                     double h = 1e-5);

}  // namespace polyflow
