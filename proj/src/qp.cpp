#include "polyflow/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace polyflow {

namespace {

constexpr double kInfeasTol = 1e-8;
constexpr double kZeroRowTol = 1e-14;

bool has_nan(const MatrixXd& M) { return !M.allFinite() && M.size() > 0; }

}  // namespace

QpProblem::QpProblem(MatrixXd Hq_in, VectorXd g_in, MatrixXd G_in,
                     VectorXd bound_in, MatrixXd E_in, VectorXd e_in)
    : Hq(std::move(Hq_in)),
      g(std::move(g_in)),
      G(std::move(G_in)),
      bound(std::move(bound_in)),
      E(std::move(E_in)),
      e(std::move(e_in)) {
  const int p = numVars();
  if (Hq.rows() != p || Hq.cols() != p)
    throw std::invalid_argument("QpProblem: Hq size inconsistent with g");
  if (G.size() > 0 && (G.cols() != p || G.rows() != bound.size()))
    throw std::invalid_argument("QpProblem: G/bound dimensions inconsistent");
  if (E.size() > 0 && (E.cols() != p || E.rows() != e.size()))
    throw std::invalid_argument("QpProblem: E/e dimensions inconsistent");
  Hq = 0.5 * (Hq + Hq.transpose()).eval();
}

QpWorkspace::QpWorkspace(MatrixXd Hq, MatrixXd G, MatrixXd E, QpSettings cfg)
    : cfg_(cfg) {
  if (has_nan(Hq) || has_nan(G) || has_nan(E))
    throw std::invalid_argument("QpWorkspace: NaN in problem data");
  p_ = static_cast<int>(Hq.rows());
  Hraw_ = 0.5 * (Hq + Hq.transpose());
  Graw_ = G.size() > 0 ? G : MatrixXd(0, p_);
  Eraw_ = E.size() > 0 ? E : MatrixXd(0, p_);
  qIneq_ = static_cast<int>(Graw_.rows());
  qEq_ = static_cast<int>(Eraw_.rows());
  nc_ = qIneq_ + qEq_;

  // Stack constraint rows; structurally zero rows never enter the ADMM
  // iteration (they are vacuous or certify infeasibility, decided per solve).
  A_.resize(nc_, p_);
  if (qIneq_ > 0) A_.topRows(qIneq_) = Graw_;
  if (qEq_ > 0) A_.bottomRows(qEq_) = Eraw_;
  for (int i = 0; i < nc_; ++i)
    if (A_.row(i).lpNorm<Eigen::Infinity>() <= kZeroRowTol) A_.row(i).setZero();

  // Modified Ruiz equilibration on [H A'; A 0]; the cost scaling uses H only
  // so the scaling is independent of the per-solve linear term.
  D_ = VectorXd::Ones(p_);
  Erow_ = VectorXd::Ones(nc_);
  costScale_ = 1.0;
  H_ = Hraw_;
  for (int pass = 0; pass < 10; ++pass) {
    VectorXd dx(p_), dr(nc_);
    for (int j = 0; j < p_; ++j) {
      double nrm = H_.col(j).lpNorm<Eigen::Infinity>();
      if (nc_ > 0) nrm = std::max(nrm, A_.col(j).lpNorm<Eigen::Infinity>());
      dx[j] = nrm > 1e-12 ? 1.0 / std::sqrt(nrm) : 1.0;
    }
    for (int i = 0; i < nc_; ++i) {
      const double nrm = A_.row(i).lpNorm<Eigen::Infinity>();
      dr[i] = nrm > 1e-12 ? 1.0 / std::sqrt(nrm) : 1.0;
    }
    H_ = dx.asDiagonal() * H_ * dx.asDiagonal();
    A_ = dr.asDiagonal() * A_ * dx.asDiagonal();
    D_ = D_.cwiseProduct(dx);
    Erow_ = Erow_.cwiseProduct(dr);
    double meanColNorm = 0.0;
    for (int j = 0; j < p_; ++j) meanColNorm += H_.col(j).lpNorm<Eigen::Infinity>();
    meanColNorm /= std::max(p_, 1);
    const double gamma = meanColNorm > 1e-12 ? 1.0 / meanColNorm : 1.0;
    H_ *= gamma;
    costScale_ *= gamma;
  }

  rho_ = cfg_.rho;
  factorize();
}

void QpWorkspace::factorize() {
  rhoVec_ = VectorXd::Constant(nc_, rho_);
  // Stiffer penalty on equality rows.
  for (int i = qIneq_; i < nc_; ++i) rhoVec_[i] = 1e3 * rho_;
  MatrixXd M = H_ + cfg_.sigma * MatrixXd::Identity(p_, p_);
  if (nc_ > 0) M.noalias() += A_.transpose() * rhoVec_.asDiagonal() * A_;
  llt_.compute(M);
  if (llt_.info() != Eigen::Success)
    throw std::runtime_error("QpWorkspace: reduced KKT factorization failed");
}

QpSolution QpWorkspace::solve(const VectorXd& g, const VectorXd& bound,
                              const VectorXd& e, const VectorXd* warmZ,
                              const VectorXd* warmY) {
  if (g.size() != p_ || bound.size() != qIneq_ ||
      static_cast<int>(e.size()) != qEq_)
    throw std::invalid_argument("QpWorkspace::solve: dimension mismatch");
  if (has_nan(g) || has_nan(bound) || has_nan(e))
    throw std::invalid_argument("QpWorkspace::solve: NaN in problem data");

  QpSolution sol;
  auto finish = [&](const VectorXd& x, const VectorXd& yUnscaled) {
    sol.z = x;
    sol.objective = 0.5 * x.dot(Hraw_ * x) + g.dot(x);
    sol.ineqMultipliers = yUnscaled.head(qIneq_).cwiseMax(0.0);
    sol.eqMultipliers = yUnscaled.tail(qEq_);
  };

  // Structurally zero rows: vacuous, or an immediate infeasibility proof.
  for (int i = 0; i < qIneq_; ++i)
    if (Graw_.row(i).lpNorm<Eigen::Infinity>() <= kZeroRowTol && bound[i] < -1e-12) {
      sol.status = QpStatus::Infeasible;
      sol.z = VectorXd::Zero(p_);
      sol.ineqMultipliers = VectorXd::Zero(qIneq_);
      sol.eqMultipliers = VectorXd::Zero(qEq_);
      return sol;
    }
  for (int i = 0; i < qEq_; ++i)
    if (Eraw_.row(i).lpNorm<Eigen::Infinity>() <= kZeroRowTol && std::abs(e[i]) > 1e-12) {
      sol.status = QpStatus::Infeasible;
      sol.z = VectorXd::Zero(p_);
      sol.ineqMultipliers = VectorXd::Zero(qIneq_);
      sol.eqMultipliers = VectorXd::Zero(qEq_);
      return sol;
    }

  // Unconstrained problem: direct solve.
  if (nc_ == 0) {
    Eigen::LDLT<MatrixXd> ldlt(Hraw_);
    VectorXd x;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive())
      x = ldlt.solve(-g);
    else
      x = Hraw_.completeOrthogonalDecomposition().solve(-g);
    finish(x, VectorXd::Zero(0));
    sol.status = QpStatus::Optimal;
    return sol;
  }

  const VectorXd q = costScale_ * D_.cwiseProduct(g);  // scaled linear term
  // Scaled bounds: l_i = -inf for inequality rows, l = u = e for equalities.
  constexpr double kNegInf = -1e30;
  VectorXd lb(nc_), ub(nc_);
  for (int i = 0; i < qIneq_; ++i) {
    ub[i] = Erow_[i] * bound[i];
    lb[i] = kNegInf;
  }
  for (int i = 0; i < qEq_; ++i) {
    ub[qIneq_ + i] = Erow_[qIneq_ + i] * e[i];
    lb[qIneq_ + i] = ub[qIneq_ + i];
  }

  VectorXd x = VectorXd::Zero(p_);
  VectorXd y = VectorXd::Zero(nc_);
  if (warmZ && warmZ->size() == p_) x = D_.cwiseInverse().cwiseProduct(*warmZ);
  if (warmY && warmY->size() == nc_)
    y = costScale_ * warmY->cwiseQuotient(Erow_);
  VectorXd z = (A_ * x).cwiseMax(lb).cwiseMin(ub);

  VectorXd yPrevCheck = y;
  const int rhoInterval = 25;
  const int infeasInterval = 25;
  const VectorXd bnd = bound;

  for (int iter = 1; iter <= cfg_.maxIter; ++iter) {
    // x-update through the reduced (SPD) KKT system.
    VectorXd rhs = cfg_.sigma * x - q;
    rhs.noalias() += A_.transpose() * (rhoVec_.cwiseProduct(z) - y);
    const VectorXd xt = llt_.solve(rhs);
    const VectorXd zt = A_ * xt;

    const VectorXd xNew = cfg_.alpha * xt + (1.0 - cfg_.alpha) * x;
    const VectorXd v =
        cfg_.alpha * zt + (1.0 - cfg_.alpha) * z + y.cwiseQuotient(rhoVec_);
    const VectorXd zNew = v.cwiseMax(lb).cwiseMin(ub);
    const VectorXd yNew = rhoVec_.cwiseProduct(v - zNew);

    x = xNew;
    z = zNew;
    y = yNew;
    sol.iterations = iter;

    // Unscaled iterates.
    const VectorXd xu = D_.cwiseProduct(x);
    const VectorXd yu = Erow_.cwiseProduct(y) / costScale_;
    const VectorXd Axu = (qIneq_ > 0 ? (Graw_ * xu).eval() : VectorXd(0));
    const VectorXd Exu = (qEq_ > 0 ? (Eraw_ * xu).eval() : VectorXd(0));

    if (cfg_.feasibilityOnly) {
      bool feas = true;
      for (int i = 0; i < qIneq_ && feas; ++i)
        if (Axu[i] > bnd[i] + 1e-9) feas = false;
      for (int i = 0; i < qEq_ && feas; ++i)
        if (std::abs(Exu[i] - e[i]) > 1e-9) feas = false;
      if (feas) {
        finish(xu, yu);
        sol.status = QpStatus::Optimal;
        sol.earlyExit = true;
        return sol;
      }
    }

    // Residuals in the original problem scaling.
    const VectorXd zu = z.cwiseQuotient(Erow_);
    VectorXd Ax(nc_);
    if (qIneq_ > 0) Ax.head(qIneq_) = Axu;
    if (qEq_ > 0) Ax.tail(qEq_) = Exu;
    const double rp = (Ax - zu).lpNorm<Eigen::Infinity>();
    const double scaleP =
        std::max(Ax.lpNorm<Eigen::Infinity>(), zu.lpNorm<Eigen::Infinity>());
    const VectorXd Hx = Hraw_ * xu;
    VectorXd Aty = VectorXd::Zero(p_);
    if (qIneq_ > 0) Aty.noalias() += Graw_.transpose() * yu.head(qIneq_);
    if (qEq_ > 0) Aty.noalias() += Eraw_.transpose() * yu.tail(qEq_);
    const double rd = (Hx + g + Aty).lpNorm<Eigen::Infinity>();
    const double scaleD = std::max({Hx.lpNorm<Eigen::Infinity>(),
                                    Aty.lpNorm<Eigen::Infinity>(),
                                    g.lpNorm<Eigen::Infinity>()});
    const double rpRel = rp / (1.0 + scaleP);
    const double rdRel = rd / (1.0 + scaleD);

    sol.primalResidual = rpRel;
    sol.dualResidual = rdRel;

    if (rp <= cfg_.epsPrimal * (1.0 + scaleP) &&
        rd <= cfg_.epsDual * (1.0 + scaleD)) {
      finish(xu, yu);
      sol.status = QpStatus::Optimal;
      return sol;
    }

    if (iter % infeasInterval == 0) {
      const VectorXd dyu = Erow_.cwiseProduct(y - yPrevCheck) / costScale_;
      yPrevCheck = y;
      const double dyNorm = dyu.lpNorm<Eigen::Infinity>();
      if (dyNorm > 1e-12) {
        VectorXd Atdy = VectorXd::Zero(p_);
        if (qIneq_ > 0) Atdy.noalias() += Graw_.transpose() * dyu.head(qIneq_);
        if (qEq_ > 0) Atdy.noalias() += Eraw_.transpose() * dyu.tail(qEq_);
        bool oneSidedOk = true;
        double support = 0.0;
        for (int i = 0; i < qIneq_; ++i) {
          if (dyu[i] < -kInfeasTol * dyNorm) {
            oneSidedOk = false;
            break;
          }
          support += bnd[i] * std::max(dyu[i], 0.0);
        }
        for (int i = 0; i < qEq_; ++i) support += e[i] * dyu[qIneq_ + i];
        if (oneSidedOk &&
            Atdy.lpNorm<Eigen::Infinity>() <= kInfeasTol * dyNorm &&
            support <= -kInfeasTol * dyNorm) {
          finish(D_.cwiseProduct(x), Erow_.cwiseProduct(y) / costScale_);
          sol.status = QpStatus::Infeasible;
          return sol;
        }
      }
    }

    if (iter % rhoInterval == 0) {
      const double ratio = (rpRel + 1e-30) / (rdRel + 1e-30);
      double cand = rho_ * std::sqrt(ratio);
      cand = std::clamp(cand, 1e-6, 1e6);
      if (cand > 5.0 * rho_ || cand < rho_ / 5.0) {
        rho_ = cand;
        factorize();
      }
    }
  }

  finish(D_.cwiseProduct(x), Erow_.cwiseProduct(y) / costScale_);
  sol.status = QpStatus::MaxIter;
  return sol;
}

QpSolution solve_qp(const QpProblem& prob, const QpSettings& cfg,
                    const VectorXd* warmZ, const VectorXd* warmY) {
  if (has_nan(prob.Hq) || has_nan(prob.g) || has_nan(prob.G) ||
      has_nan(prob.bound) || has_nan(prob.E) || has_nan(prob.e))
    throw std::invalid_argument("solve_qp: NaN in problem data");
  QpWorkspace ws(prob.Hq, prob.G, prob.E, cfg);
  return ws.solve(prob.g, prob.bound, prob.e, warmZ, warmY);
}

KktReport kkt_check(const QpProblem& prob, const QpSolution& sol, double tol) {
  if (sol.status != QpStatus::Optimal)
    throw std::invalid_argument("kkt_check: solution is not Optimal");
  KktReport rep;
  const VectorXd& z = sol.z;
  const int qIneq = static_cast<int>(prob.G.rows());
  const int qEq = static_cast<int>(prob.E.rows());

  VectorXd slack(qIneq);
  if (qIneq > 0) slack = prob.bound - prob.G * z;
  rep.primalFeasibility = qIneq > 0 ? std::max(0.0, -slack.minCoeff()) : 0.0;
  if (qEq > 0)
    rep.primalFeasibility = std::max(
        rep.primalFeasibility,
        (prob.E * z - prob.e).lpNorm<Eigen::Infinity>());

  std::vector<int> active;
  for (int i = 0; i < qIneq; ++i)
    if (slack[i] <= tol) active.push_back(i);
  const int na = static_cast<int>(active.size());

  // Stationarity: Hq z + g + G_A' lambda + E' nu = 0, least squares in
  // (lambda, nu).
  MatrixXd J(prob.numVars(), na + qEq);
  for (int a = 0; a < na; ++a) J.col(a) = prob.G.row(active[a]).transpose();
  for (int i = 0; i < qEq; ++i) J.col(na + i) = prob.E.row(i).transpose();
  const VectorXd r0 = prob.Hq * z + prob.g;
  VectorXd mult(na + qEq);
  if (na + qEq > 0)
    mult = J.completeOrthogonalDecomposition().solve(-r0);
  rep.stationarity =
      (na + qEq > 0 ? (r0 + J * mult).lpNorm<Eigen::Infinity>()
                    : r0.lpNorm<Eigen::Infinity>());

  rep.multiplierNegativity = 0.0;
  for (int a = 0; a < na; ++a)
    rep.multiplierNegativity = std::max(rep.multiplierNegativity, -mult[a]);

  rep.complementarity = 0.0;
  for (int a = 0; a < na; ++a)
    rep.complementarity =
        std::max(rep.complementarity, std::abs(mult[a] * slack[active[a]]));

  rep.pass = rep.stationarity <= tol && rep.complementarity <= tol &&
             rep.primalFeasibility <= tol && rep.multiplierNegativity <= tol;
  return rep;
}

}  // namespace polyflow
