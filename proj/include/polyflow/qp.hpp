#pragma once

#include <optional>

#include <Eigen/Cholesky>

#include "polyflow/types.hpp"

namespace polyflow {

/// Dense convex QP
///   min 1/2 z' Hq z + g' z
///   s.t. G z <= bound,  E z = e (optional).
struct QpProblem {
  MatrixXd Hq;     // p x p, symmetrized on construction
  VectorXd g;      // p
  MatrixXd G;      // q x p
  VectorXd bound;  // q
  MatrixXd E;      // qe x p (may be empty)
  VectorXd e;      // qe

  QpProblem() = default;
  QpProblem(MatrixXd Hq_in, VectorXd g_in, MatrixXd G_in, VectorXd bound_in,
            MatrixXd E_in = MatrixXd(), VectorXd e_in = VectorXd());

  int numVars() const { return static_cast<int>(g.size()); }
};

enum class QpStatus { Optimal, Infeasible, MaxIter };

struct QpSolution {
  VectorXd z;
  QpStatus status = QpStatus::MaxIter;
  double objective = 0.0;
  double primalResidual = 0.0;  // scaled by 1 + magnitude of the iterates
  double dualResidual = 0.0;
  int iterations = 0;
  VectorXd ineqMultipliers;  // lambda >= 0 for G z <= bound
  VectorXd eqMultipliers;    // nu for E z = e
  bool earlyExit = false;    // true when returned by the feasibility-only mode
};

struct QpSettings {
  double epsPrimal = 1e-8;
  double epsDual = 1e-8;
  double rho = 1.0;
  double sigma = 1e-6;
  double alpha = 1.6;  // over-relaxation
  int maxIter = 20000;
  // Return as soon as a primal-feasible iterate is found (the objective is
  // then not optimized); used by the feasible-domain scan.
  bool feasibilityOnly = false;
};

/// ADMM solver state reusable across solves that share (Hq, G, E): the Ruiz
/// scaling and the reduced-KKT factorization are computed once.
class QpWorkspace {
 public:
  QpWorkspace(MatrixXd Hq, MatrixXd G, MatrixXd E, QpSettings cfg = {});

  QpSolution solve(const VectorXd& g, const VectorXd& bound,
                   const VectorXd& e = VectorXd(),
                   const VectorXd* warmZ = nullptr,
                   const VectorXd* warmY = nullptr);

  const QpSettings& settings() const { return cfg_; }

 private:
  void factorize();

  QpSettings cfg_;
  int p_ = 0, qIneq_ = 0, qEq_ = 0, nc_ = 0;
  MatrixXd H_;    // scaled
  MatrixXd A_;    // scaled stacked [G; E]
  MatrixXd Graw_; // unscaled, for feasibility checks and residuals
  MatrixXd Eraw_;
  MatrixXd Hraw_;
  VectorXd D_, Erow_;  // Ruiz scalings
  double costScale_ = 1.0;
  double rho_ = 1.0;
  VectorXd rhoVec_;
  Eigen::LLT<MatrixXd> llt_;
};

QpSolution solve_qp(const QpProblem& prob, const QpSettings& cfg = {},
                    const VectorXd* warmZ = nullptr,
                    const VectorXd* warmY = nullptr);

struct KktReport {
  bool pass = false;
  double stationarity = 0.0;
  double complementarity = 0.0;
  double primalFeasibility = 0.0;
  double multiplierNegativity = 0.0;
};

/// Reconstructs multipliers on the active set by least squares and verifies
/// stationarity, complementary slackness, primal feasibility, and multiplier
/// sign. Requires sol.status == Optimal.
KktReport kkt_check(const QpProblem& prob, const QpSolution& sol, double tol);

}  // namespace polyflow
