#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "polyflow/dynamics.hpp"
#include "polyflow/polytope.hpp"
#include "polyflow/types.hpp"

namespace polyflow {

struct ResidualStats {
  double rms = 0.0;
  double max = 0.0;
};

/// Coefficients of the fitted nilpotency relation
///   f^{k+1}(x,0) ~ sum_l alpha_l f^l(x,0)
/// together with the constant input-direction derivatives b_l at the origin.
struct PolyflowFit {
  int k = 0;
  std::vector<MatrixXd> alphas;  // k+1 matrices, n x n, alpha_0 ... alpha_k
  std::vector<MatrixXd> bVecs;   // k+1 matrices, n x m, b_1 ... b_{k+1}
  ResidualStats residual;        // training residual of the relation
  int rank = 0;                  // numerical rank of the regressor
  bool rankDeficient = false;    // minimum-norm solution was used
};

enum class BasisKind { Polyflow, Monomials, ThinPlateRbf, Identity };

/// Lifting dictionary. The raw state always occupies the first n components
/// so that C = [I 0] recovers x exactly; an optional reduction matrix V maps
/// the full dictionary to a smaller, linearly independent one.
struct Basis {
  BasisKind kind = BasisKind::Identity;
  int degree = 0;       // polyflow degree k, or monomial max degree
  MatrixXd centers;     // n x count (thin-plate RBF only)
  bool includeState = true;
  MatrixXd reduction;   // ntilde x fullDim, empty when no reduction applies

  static Basis polyflow(int k);
  static Basis monomials(int maxDegree);
  static Basis thinPlateRbf(const MatrixXd& centers, bool includeState = true);
  static Basis identity();

  int fullDim(int n) const;
  int dim(int n) const;
  VectorXd eval(const DiscreteSystem& sys, const VectorXd& x) const;

  /// Monomial exponent table over R^n, ordered by total degree then by
  /// decreasing leading exponents, so the n degree-one monomials come first.
  static MatrixXi monomialExponents(int n, int maxDegree);

  /// Returns a copy with reduction V applied on top of the full dictionary.
  Basis reduced(const MatrixXd& V) const;
};

/// Sampled data: states for the polyflow fit, snapshot triples for EDMD.
struct SampleSet {
  MatrixXd points;      // n x M
  MatrixXd inputs;      // m x M (empty when unused)
  MatrixXd nextStates;  // n x M (empty when unused)
  std::uint64_t rngSeed = 0;

  int size() const { return static_cast<int>(points.cols()); }
};

SampleSet sample_states(const Polytope& X, int M, std::uint64_t seed);
SampleSet sample_snapshots(const DiscreteSystem& sys, const Polytope& X,
                           const Polytope& U, int M, std::uint64_t seed);

/// Linear embedding xtilde+ = A xtilde + B u with x = C xtilde.
struct LiftedModel {
  MatrixXd A, B, C;
  std::function<VectorXd(const VectorXd&)> lift;
  int nLift = 0, n = 0, m = 0;
  Basis basis;
  ResidualStats residual;
  std::string tag;
};

/// Least-squares fit of the nilpotency relation over sampled states, solved
/// by a rank-revealing orthogonal factorization (minimum-norm solution when
/// the regressor is rank deficient).
PolyflowFit fit_polyflow(const DiscreteSystem& sys, const SampleSet& samples,
                         int k);

/// Block-companion lifted model from a polyflow fit: identity super-diagonal
/// blocks, alpha row at the bottom, B from finite differences at the origin,
/// C = [I 0], lift = stacked polyflow basis.
LiftedModel assemble_polyflow_model(const DiscreteSystem& sys,
                                    const PolyflowFit& fit);

/// EDMD: min_{A,B} sum_i ||T(x_i+) - A T(x_i) - B u_i||^2 over snapshots.
LiftedModel fit_edmd(const Basis& basis, const DiscreteSystem& sys,
                     const SampleSet& snapshots);

/// Selects a maximal linearly independent subset of dictionary components
/// from their sampled values (columns of basisValues), always keeping the
/// first nKeep components verbatim. Returns the selection matrix V and the
/// reduced dimension.
std::pair<MatrixXd, int> remove_redundancy(const MatrixXd& basisValues,
                                           double tol, int nKeep);

struct NilpotencyDiagnostics {
  ResidualStats nilpotency;       // defect of the k+1 relation, out of sample
  ResidualStats inputAffineness;  // || f^l(x,u) - f^l(x,0) - b_l u ||
};

NilpotencyDiagnostics nilpotency_residual(const DiscreteSystem& sys,
                                          const PolyflowFit& fit,
                                          const SampleSet& testPoints);

}  // namespace polyflow
