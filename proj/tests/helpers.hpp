#pragma once

// Shared fixtures and independent oracles for the test suite.

#include <cmath>
#include <optional>
#include <vector>

#include "polyflow/dynamics.hpp"
#include "polyflow/qp.hpp"
#include "polyflow/types.hpp"

namespace testutil {

using polyflow::MatrixXd;
using polyflow::MatrixXi;
using polyflow::Rng;
using polyflow::VectorXd;

/// Block-triangular benchmark system
///   x1+ = 0.5 x1 + 0.4 x2^2 + u,  x2+ = 0.8 x2,
/// which admits the exact linear embedding (x1, x2, x2^2).
inline polyflow::DiscreteSystem make_immersible() {
  MatrixXd A1(1, 1), A2(1, 1), B1(1, 1);
  A1 << 0.5;
  A2 << 0.8;
  B1 << 1.0;
  polyflow::PolynomialMap phi;
  phi.exponents = MatrixXi(1, 1);
  phi.exponents << 2;
  phi.coeffs = MatrixXd(1, 1);
  phi.coeffs << 0.4;
  return polyflow::immersible_block_system(A1, A2, B1, phi);
}

inline VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

inline VectorXd vec1(double a) {
  VectorXd v(1);
  v << a;
  return v;
}

/// Random strictly convex QP with a guaranteed-feasible inequality set
/// (bounds offset from a random interior point).
inline polyflow::QpProblem random_qp(Rng& rng, int pMax = 4, int qMax = 6) {
  const int p = 1 + static_cast<int>(rng.uniform() * pMax) % pMax;
  const int q = 1 + static_cast<int>(rng.uniform() * qMax) % qMax;
  MatrixXd Asq(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) Asq(i, j) = rng.uniform(-1.0, 1.0);
  MatrixXd Hq = Asq.transpose() * Asq + 0.1 * MatrixXd::Identity(p, p);
  VectorXd g(p);
  for (int i = 0; i < p; ++i) g[i] = rng.uniform(-2.0, 2.0);
  MatrixXd G(q, p);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < p; ++j) G(i, j) = rng.uniform(-1.0, 1.0);
  VectorXd z0(p);
  for (int i = 0; i < p; ++i) z0[i] = rng.uniform(-1.0, 1.0);
  VectorXd bound = G * z0;
  for (int i = 0; i < q; ++i) bound[i] += rng.uniform(0.05, 1.5);
  return polyflow::QpProblem(Hq, g, G, bound);
}

/// Brute-force active-set enumeration for small strictly convex QPs:
/// every subset of inequality rows is treated as equalities, the KKT system
/// is solved, and the best primal-dual feasible candidate wins.
inline std::optional<VectorXd> active_set_solve(const polyflow::QpProblem& qp) {
  const int p = qp.numVars();
  const int q = static_cast<int>(qp.G.rows());
  double best = std::numeric_limits<double>::infinity();
  std::optional<VectorXd> bestZ;
  for (unsigned mask = 0; mask < (1u << q); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < q; ++i)
      if (mask & (1u << i)) act.push_back(i);
    const int na = static_cast<int>(act.size());
    if (na > p) continue;
    MatrixXd K(p + na, p + na);
    K.setZero();
    K.topLeftCorner(p, p) = qp.Hq;
    for (int a = 0; a < na; ++a) {
      K.block(p + a, 0, 1, p) = qp.G.row(act[a]);
      K.block(0, p + a, p, 1) = qp.G.row(act[a]).transpose();
    }
    VectorXd rhs(p + na);
    rhs.head(p) = -qp.g;
    for (int a = 0; a < na; ++a) rhs[p + a] = qp.bound[act[a]];
    Eigen::FullPivLU<MatrixXd> lu(K);
    if (!lu.isInvertible()) continue;
    const VectorXd sol = lu.solve(rhs);
    const VectorXd z = sol.head(p);
    bool ok = true;
    for (int a = 0; a < na && ok; ++a)
      if (sol[p + a] < -1e-9) ok = false;  // lambda >= 0
    if (ok && q > 0) {
      const VectorXd slack = qp.bound - qp.G * z;
      if (slack.minCoeff() < -1e-8) ok = false;
    }
    if (!ok) continue;
    const double obj = 0.5 * z.dot(qp.Hq * z) + qp.g.dot(z);
    if (obj < best - 1e-12) {
      best = obj;
      bestZ = z;
    }
  }
  return bestZ;
}

}  // namespace testutil
