#pragma once

#include "polyflow/polytope.hpp"
#include "polyflow/types.hpp"

namespace polyflow {

struct InvariantSet {
  Polytope polytope;       // over R^{ntilde}
  int determinedness = 0;  // index k* at which constraint growth stopped
};

struct LpResult {
  double value = 0.0;
  VectorXd argmax;
};

/// Maximizes c'x over a bounded polytope. Solved as a QP with vanishing
/// quadratic regularization eps*||x||^2 through the ADMM solver; the value is
/// corrected for the regularization and checked against the LP dual.
/// Throws on infeasible or unbounded problems.
LpResult lp_max(const VectorXd& c, const Polytope& P, double eps = 1e-9);

/// Maximal constraint-admissible invariant set of xtilde+ = (A + BK) xtilde
/// under C xtilde in X and K xtilde in U (Gilbert-Tan constraint
/// accumulation). Requires spectral radius of A + BK below one and bounded
/// X, U with the origin in their interior.
InvariantSet max_invariant_set(const MatrixXd& A, const MatrixXd& B,
                               const MatrixXd& K, const MatrixXd& C,
                               const Polytope& X, const Polytope& U,
                               int kMax = 3000);

}  // namespace polyflow
