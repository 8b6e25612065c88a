#pragma once

#include "polyflow/types.hpp"

namespace polyflow {

/// Convex polytope in H-representation, {x : H x <= h}.
struct Polytope {
  MatrixXd H;
  VectorXd h;

  Polytope() = default;
  Polytope(MatrixXd H_in, VectorXd h_in);

  /// Axis-aligned box {lo <= x <= hi}. Rows are unit infinity-norm by
  /// construction. Box bounds are kept for direct sampling.
  static Polytope box(const VectorXd& lo, const VectorXd& hi);

  int dim() const { return static_cast<int>(H.cols()); }
  int rows() const { return static_cast<int>(H.rows()); }

  bool contains(const VectorXd& x, double tol = 1e-9) const;

  /// Appends extra halfspaces in place.
  void append(const MatrixXd& Hextra, const VectorXd& hextra);

  /// Returns a copy with every row scaled to unit 2-norm. Rows of
  /// numerically zero norm are dropped when their bound is nonnegative.
  Polytope normalized(double tol = 1e-14) const;

  /// True when constructed by box(); lo/hi are then valid.
  bool is_box = false;
  VectorXd lo, hi;
};

/// State and input constraint sets of a controlled system.
struct ConstraintSpec {
  Polytope stateSet;  // X, over R^n
  Polytope inputSet;  // U, over R^m
};

}  // namespace polyflow
