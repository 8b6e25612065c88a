#include "polyflow/invariant_set.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "polyflow/dare.hpp"
#include "polyflow/qp.hpp"

namespace polyflow {

namespace {

constexpr double kRedundancySlack = 1e-8;
constexpr double kRegEps = 1e-9;
constexpr double kUnboundedValue = 1e6;

// Exact active-set LP oracle: maximize c.x over {x : Hx <= h}, started from
// the origin, which is strictly feasible for every polytope built inside
// max_invariant_set (all rows are normalized with positive right-hand side).
// Gradient projection onto the null space of the active rows; a blocking
// constraint is added per step (smallest index on ties), a constraint with
// negative multiplier is dropped at stationary points (smallest index first).
struct LpOracle {
  enum class Status { Optimal, Unbounded, IterLimit, AboveThreshold };
  Status status = Status::IterLimit;
  double value = 0.0;
  VectorXd argmax;
};

// The objective is nondecreasing along the projection path, so a caller that
// only needs to compare the maximum against a threshold can stop as soon as
// the iterate's value exceeds it; the verdict is identical to a full solve.
LpOracle lp_active_set(const MatrixXd& H, const VectorXd& h, const VectorXd& c,
                       double threshold =
                           std::numeric_limits<double>::infinity()) {
  const int d = static_cast<int>(H.cols());
  const int m = static_cast<int>(H.rows());
  const double tol = 1e-11;
  const int iterCap = 20 * m + 200;

  LpOracle out;
  VectorXd x = VectorXd::Zero(d);
  std::vector<int> active;
  std::vector<char> isActive(m, 0);
  active.reserve(d + 1);

  for (int it = 0; it < iterCap; ++it) {
    VectorXd dir = c;
    VectorXd mu;
    MatrixXd At;  // d x a, transposed active rows
    if (!active.empty()) {
      At.resize(d, static_cast<int>(active.size()));
      for (int j = 0; j < At.cols(); ++j)
        At.col(j) = H.row(active[j]).transpose();
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(At);
      mu = cod.solve(c);  // min-norm least squares, c ~ At * mu
      dir = c - At * mu;
    }

    if (dir.norm() <= tol * (1.0 + c.norm())) {
      // Stationary: optimal iff all multipliers are nonnegative.
      int dropPos = -1;
      for (int j = 0; j < static_cast<int>(active.size()); ++j)
        if (mu.size() > 0 && mu[j] < -1e-9 &&
            (dropPos < 0 || active[j] < active[dropPos]))
          dropPos = j;
      if (dropPos < 0) {
        out.status = LpOracle::Status::Optimal;
        out.value = c.dot(x);
        out.argmax = x;
        return out;
      }
      isActive[active[dropPos]] = 0;
      active.erase(active.begin() + dropPos);
      continue;
    }

    // Ratio test over the inactive rows.
    double alpha = std::numeric_limits<double>::infinity();
    int blocking = -1;
    for (int i = 0; i < m; ++i) {
      if (isActive[i]) continue;
      const double s = H.row(i).dot(dir);
      if (s <= tol) continue;
      const double slack = h[i] - H.row(i).dot(x);
      const double a = std::max(0.0, slack) / s;
      if (a < alpha - 1e-15 || (a < alpha + 1e-15 && i < blocking)) {
        alpha = a;
        blocking = i;
      }
    }
    if (blocking < 0) {
      out.status = LpOracle::Status::Unbounded;
      out.value = std::numeric_limits<double>::infinity();
      out.argmax = x;
      return out;
    }
    x += alpha * dir;
    active.push_back(blocking);
    isActive[blocking] = 1;
    if (c.dot(x) > threshold) {
      out.status = LpOracle::Status::AboveThreshold;
      out.value = c.dot(x);
      out.argmax = x;
      return out;
    }
  }
  out.value = c.dot(x);
  out.argmax = x;
  return out;  // IterLimit; caller treats the verdict as inconclusive
}

// Certified redundancy of (r, b) w.r.t. {Hx <= h}: the LP maximum of r.x is
// no larger than b + slack. Inconclusive or unbounded solves report false.
bool certified_redundant(const MatrixXd& H, const VectorXd& h,
                         const Eigen::RowVectorXd& r, double b) {
  const LpOracle lp =
      lp_active_set(H, h, r.transpose(), b + kRedundancySlack);
  return lp.status == LpOracle::Status::Optimal &&
         lp.value <= b + kRedundancySlack;
}

}  // namespace

LpResult lp_max(const VectorXd& c, const Polytope& P, double eps) {
  const int d = P.dim();
  if (c.size() != d) throw std::invalid_argument("lp_max: dimension mismatch");
  QpWorkspace ws(2.0 * eps * MatrixXd::Identity(d, d), P.H, MatrixXd());
  const QpSolution sol = ws.solve(-c, P.h);
  if (sol.status == QpStatus::Infeasible)
    throw std::runtime_error("lp_max: polytope is empty");
  if (sol.status == QpStatus::MaxIter)
    throw std::runtime_error("lp_max: no convergence (unbounded polytope?)");
  if (sol.z.lpNorm<Eigen::Infinity>() > kUnboundedValue)
    throw std::runtime_error("lp_max: unbounded direction detected");
  LpResult out;
  out.argmax = sol.z;
  out.value = c.dot(sol.z);
  // At the regularized optimum c.z - h.mu equals the regularization gap
  // 2*eps*||z||^2 exactly; the duality check is applied after removing it.
  const double dualValue = P.h.dot(sol.ineqMultipliers);
  const double regGap = 2.0 * eps * sol.z.squaredNorm();
  if (std::abs(out.value - dualValue - regGap) >
      1e-7 * (1.0 + std::abs(out.value)))
    throw std::runtime_error("lp_max: duality gap check failed");
  return out;
}

InvariantSet max_invariant_set(const MatrixXd& A, const MatrixXd& B,
                               const MatrixXd& K, const MatrixXd& C,
                               const Polytope& X, const Polytope& U, int kMax) {
  const int nt = static_cast<int>(A.rows());
  if (A.cols() != nt || B.rows() != nt || K.cols() != nt || C.cols() != nt)
    throw std::invalid_argument("max_invariant_set: inconsistent dimensions");
  const MatrixXd Acl = A + B * K;
  if (spectral_radius(Acl) >= 1.0)
    throw std::invalid_argument(
        "max_invariant_set: A + BK is not strictly stable");

  const Polytope Xn = X.normalized();
  const Polytope Un = U.normalized();
  if ((Xn.h.size() > 0 && Xn.h.minCoeff() <= 0.0) ||
      (Un.h.size() > 0 && Un.h.minCoeff() <= 0.0))
    throw std::invalid_argument(
        "max_invariant_set: X and U must contain the origin in its interior");

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  auto appendRow = [&](const Eigen::RowVectorXd& r, double b) {
    rows.push_back(r);
    rhs.push_back(b);
  };
  auto currentH = [&]() {
    MatrixXd H(static_cast<int>(rows.size()), nt);
    for (int i = 0; i < H.rows(); ++i) H.row(i) = rows[i];
    return H;
  };
  auto currentRhs = [&]() {
    VectorXd h(static_cast<int>(rhs.size()));
    for (int i = 0; i < h.size(); ++i) h[i] = rhs[i];
    return h;
  };

  // Candidate constraint rows at step k, unit 2-norm; vacuous rows dropped.
  // Right-hand sides stay positive, so the origin is strictly interior to
  // every accumulated polytope and the LP oracle can start there.
  auto candidates = [&](const MatrixXd& Mk) {
    std::vector<std::pair<Eigen::RowVectorXd, double>> out;
    const MatrixXd CM = Xn.H * C * Mk;
    for (int i = 0; i < CM.rows(); ++i) {
      const double nrm = CM.row(i).norm();
      if (nrm <= 1e-12) continue;
      out.emplace_back(CM.row(i) / nrm, Xn.h[i] / nrm);
    }
    const MatrixXd KM = Un.H * K * Mk;
    for (int i = 0; i < KM.rows(); ++i) {
      const double nrm = KM.row(i).norm();
      if (nrm <= 1e-12) continue;
      out.emplace_back(KM.row(i) / nrm, Un.h[i] / nrm);
    }
    return out;
  };

  for (auto& [r, b] : candidates(MatrixXd::Identity(nt, nt))) appendRow(r, b);

  int kstar = -1;
  MatrixXd Mk = MatrixXd::Identity(nt, nt);
  for (int k = 1; k <= kMax; ++k) {
    Mk = (Mk * Acl).eval();
    const auto cand = candidates(Mk);
    const MatrixXd H = currentH();
    const VectorXd h = currentRhs();
    bool allRedundant = true;
    std::vector<int> toAdd;
    for (int i = 0; i < static_cast<int>(cand.size()); ++i) {
      if (!certified_redundant(H, h, cand[i].first, cand[i].second)) {
        allRedundant = false;
        toAdd.push_back(i);
      }
    }
    if (allRedundant) {
      kstar = k - 1;
      break;
    }
    for (int i : toAdd) appendRow(cand[i].first, cand[i].second);
  }
  if (kstar < 0)
    throw std::runtime_error(
        "max_invariant_set: kMax exceeded without finite determination");

  // Prune rows made redundant by later additions.
  std::vector<bool> alive(rows.size(), true);
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    std::vector<int> others;
    for (int j = 0; j < static_cast<int>(rows.size()); ++j)
      if (alive[j] && j != i) others.push_back(j);
    if (others.size() < static_cast<size_t>(nt)) continue;
    MatrixXd H(static_cast<int>(others.size()), nt);
    VectorXd h(static_cast<int>(others.size()));
    for (int j = 0; j < static_cast<int>(others.size()); ++j) {
      H.row(j) = rows[others[j]];
      h[j] = rhs[others[j]];
    }
    if (certified_redundant(H, h, rows[i], rhs[i])) alive[i] = false;
  }

  std::vector<int> kept;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i)
    if (alive[i]) kept.push_back(i);
  MatrixXd H(static_cast<int>(kept.size()), nt);
  VectorXd h(static_cast<int>(kept.size()));
  for (int j = 0; j < static_cast<int>(kept.size()); ++j) {
    H.row(j) = rows[kept[j]];
    h[j] = rhs[kept[j]];
  }

  InvariantSet out;
  out.polytope = Polytope(std::move(H), std::move(h));
  out.determinedness = kstar;
  return out;
}

}  // namespace polyflow
