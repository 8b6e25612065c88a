#include "polyflow/dare.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace polyflow {

namespace {

// Relative defect of the Riccati equation at P.
double dare_defect(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Qlift,
                   const MatrixXd& R, const MatrixXd& P) {
  const MatrixXd BtPA = B.transpose() * P * A;
  const MatrixXd S = R + B.transpose() * P * B;
  const MatrixXd next =
      A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA) + Qlift;
  return (next - P).lpNorm<Eigen::Infinity>() /
         (1.0 + P.lpNorm<Eigen::Infinity>());
}

}  // namespace

DareSolution solve_dare(const MatrixXd& A, const MatrixXd& B,
                        const MatrixXd& Qlift, const MatrixXd& R, double tol,
                        int maxIter) {
  const int nt = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (A.cols() != nt || B.rows() != nt || Qlift.rows() != nt ||
      Qlift.cols() != nt || R.rows() != m || R.cols() != m)
    throw std::invalid_argument("solve_dare: inconsistent dimensions");
  Eigen::LLT<MatrixXd> rllt(R);
  if (rllt.info() != Eigen::Success)
    throw std::invalid_argument("solve_dare: R must be positive definite");

  // Fixed-point iteration of the Riccati map
  //   P <- Q + A'P(I + GP)^{-1}A,  G = B R^{-1} B',
  // accelerated by doubling: after j doubling steps Hj equals the 2^j-th
  // plain iterate exactly, so the ill-conditioned transient of strongly
  // non-normal lifts is traversed in ~30 steps instead of ~10^6, keeping the
  // accumulated roundoff at the representation floor.
  const MatrixXd I = MatrixXd::Identity(nt, nt);
  MatrixXd Ak = A;
  MatrixXd Gk = B * rllt.solve(B.transpose());
  MatrixXd Hk = 0.5 * (Qlift + Qlift.transpose());

  DareSolution sol;
  double diff = std::numeric_limits<double>::infinity();
  double best = diff;
  for (int it = 1; it <= maxIter; ++it) {
    const Eigen::PartialPivLU<MatrixXd> W(I + Gk * Hk);
    const MatrixXd WiA = W.solve(Ak);
    const MatrixXd WiG = W.solve(Gk);
    const MatrixXd Anext = Ak * WiA;
    const MatrixXd Gnext = Gk + Ak * WiG * Ak.transpose();
    MatrixXd Hnext = Hk + WiA.transpose() * Hk * Ak;
    Hnext = 0.5 * (Hnext + Hnext.transpose()).eval();
    diff = (Hnext - Hk).lpNorm<Eigen::Infinity>() /
           (1.0 + Hnext.lpNorm<Eigen::Infinity>());
    Ak = Anext;
    Gk = Gnext;
    Hk = Hnext;
    sol.iterations = it;
    if (!Hk.allFinite() || !Ak.allFinite()) break;
    // Once within tolerance, keep polishing to the roundoff floor as long as
    // the steps still shrink; the final defect reflects the floor, not tol.
    if (diff <= tol && diff >= 0.5 * best) break;
    best = std::min(best, diff);
  }
  if (!(diff <= tol) || !Hk.allFinite()) {
    std::ostringstream msg;
    msg << "solve_dare: no convergence after " << sol.iterations
        << " iterations (last relative step " << diff
        << "); the pair (A, B) may not be stabilizable";
    throw std::runtime_error(msg.str());
  }
  sol.P = Hk;
  // Newton (Kleinman) refinement: the doubling iterate carries roundoff
  // amplified by the transient of non-normal lifts; each Newton step solves
  // the closed-loop Stein equation P = Acl'P Acl + Q + K'RK exactly through
  // its Kronecker form and converges quadratically to the attainable floor.
  double bestDefect = dare_defect(A, B, Qlift, R, sol.P);
  for (int it = 0; it < 5 && bestDefect > 1e-14; ++it) {
    const MatrixXd Sk = R + B.transpose() * sol.P * B;
    const MatrixXd Kk = -Sk.ldlt().solve(B.transpose() * sol.P * A);
    const MatrixXd Acl = A + B * Kk;
    MatrixXd M = Qlift + Kk.transpose() * R * Kk;
    M = 0.5 * (M + M.transpose()).eval();
    MatrixXd T = MatrixXd::Identity(nt * nt, nt * nt);
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nt; ++j)
        T.block(i * nt, j * nt, nt, nt) -= Acl(j, i) * Acl.transpose();
    const VectorXd vecM = Eigen::Map<const VectorXd>(M.data(), nt * nt);
    const VectorXd vecP = T.partialPivLu().solve(vecM);
    MatrixXd Pn = Eigen::Map<const MatrixXd>(vecP.data(), nt, nt);
    Pn = 0.5 * (Pn + Pn.transpose()).eval();
    const double d = dare_defect(A, B, Qlift, R, Pn);
    if (!Pn.allFinite() || d >= bestDefect) break;
    sol.P = Pn;
    bestDefect = d;
  }
  const MatrixXd S = R + B.transpose() * sol.P * B;
  sol.K = -S.ldlt().solve(B.transpose() * sol.P * A);
  sol.residual = bestDefect;
  return sol;
}

double spectral_radius(const MatrixXd& M) {
  if (M.rows() != M.cols())
    throw std::invalid_argument("spectral_radius: matrix must be square");
  Eigen::EigenSolver<MatrixXd> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_observable(const MatrixXd& A, const MatrixXd& C, double tol) {
  const int nt = static_cast<int>(A.rows());
  const int n = static_cast<int>(C.rows());
  MatrixXd O(n * nt, nt);
  MatrixXd CAk = C;
  for (int k = 0; k < nt; ++k) {
    O.middleRows(k * n, n) = CAk;
    CAk = CAk * A;
  }
  Eigen::JacobiSVD<MatrixXd> svd(O);
  const VectorXd s = svd.singularValues();
  return s.size() == nt && s[s.size() - 1] > tol * s[0];
}

}  // namespace polyflow
