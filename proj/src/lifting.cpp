#include "polyflow/lifting.hpp"

#include <cmath>
#include <stdexcept>

namespace polyflow {

namespace {

constexpr double kFdStep = 1e-5;

// Central-difference derivatives of the iterated maps with respect to u at
// the origin: b_l = D_u f^l(0,0) for l = 1 ... L.
std::vector<MatrixXd> input_derivatives(const DiscreteSystem& sys, int L) {
  const VectorXd x0 = VectorXd::Zero(sys.n);
  std::vector<MatrixXd> b(L, MatrixXd(sys.n, sys.m));
  for (int j = 0; j < sys.m; ++j) {
    VectorXd up = VectorXd::Zero(sys.m), um = VectorXd::Zero(sys.m);
    up[j] = kFdStep;
    um[j] = -kFdStep;
    const auto seqP = iterate_sequence(sys, x0, up, L);
    const auto seqM = iterate_sequence(sys, x0, um, L);
    for (int l = 1; l <= L; ++l)
      b[l - 1].col(j) = (seqP[l] - seqM[l]) / (2.0 * kFdStep);
  }
  return b;
}

void accumulate(ResidualStats& stats, double r, int M) {
  stats.rms += r * r / M;
  stats.max = std::max(stats.max, r);
}

}  // namespace

Basis Basis::polyflow(int k) {
  if (k < 0) throw std::invalid_argument("Basis::polyflow: k must be >= 0");
  Basis b;
  b.kind = BasisKind::Polyflow;
  b.degree = k;
  return b;
}

Basis Basis::monomials(int maxDegree) {
  if (maxDegree < 1)
    throw std::invalid_argument("Basis::monomials: maxDegree must be >= 1");
  Basis b;
  b.kind = BasisKind::Monomials;
  b.degree = maxDegree;
  return b;
}

Basis Basis::thinPlateRbf(const MatrixXd& centers, bool includeState) {
  Basis b;
  b.kind = BasisKind::ThinPlateRbf;
  b.centers = centers;
  b.includeState = includeState;
  return b;
}

Basis Basis::identity() {
  Basis b;
  b.kind = BasisKind::Identity;
  return b;
}

MatrixXi Basis::monomialExponents(int n, int maxDegree) {
  std::vector<VectorXi> rows;
  VectorXi e = VectorXi::Zero(n);
  // Enumerate compositions of each total degree t, leading exponents first.
  std::function<void(int, int)> rec = [&](int pos, int remaining) {
    if (pos == n - 1) {
      e[pos] = remaining;
      rows.push_back(e);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      e[pos] = v;
      rec(pos + 1, remaining - v);
    }
  };
  for (int t = 1; t <= maxDegree; ++t) rec(0, t);
  MatrixXi out(static_cast<int>(rows.size()), n);
  for (int i = 0; i < out.rows(); ++i) out.row(i) = rows[i].transpose();
  return out;
}

int Basis::fullDim(int n) const {
  switch (kind) {
    case BasisKind::Identity:
      return n;
    case BasisKind::Polyflow:
      return n * (degree + 1);
    case BasisKind::Monomials:
      return static_cast<int>(monomialExponents(n, degree).rows());
    case BasisKind::ThinPlateRbf:
      return (includeState ? n : 0) + static_cast<int>(centers.cols());
  }
  return 0;
}

int Basis::dim(int n) const {
  if (reduction.size() > 0) return static_cast<int>(reduction.rows());
  return fullDim(n);
}

VectorXd Basis::eval(const DiscreteSystem& sys, const VectorXd& x) const {
  VectorXd full;
  switch (kind) {
    case BasisKind::Identity:
      full = x;
      break;
    case BasisKind::Polyflow:
      full = stacked_basis(sys, x, degree);
      break;
    case BasisKind::Monomials: {
      const MatrixXi exps = monomialExponents(static_cast<int>(x.size()), degree);
      full.resize(exps.rows());
      for (int i = 0; i < exps.rows(); ++i) {
        double v = 1.0;
        for (int j = 0; j < exps.cols(); ++j)
          for (int r = 0; r < exps(i, j); ++r) v *= x[j];
        full[i] = v;
      }
      break;
    }
    case BasisKind::ThinPlateRbf: {
      const int n = static_cast<int>(x.size());
      const int nc = static_cast<int>(centers.cols());
      full.resize((includeState ? n : 0) + nc);
      int off = 0;
      if (includeState) {
        full.head(n) = x;
        off = n;
      }
      for (int i = 0; i < nc; ++i) {
        const double r = (x - centers.col(i)).norm();
        // r^2 log r, continuously extended by 0 at the center.
        full[off + i] = r > 0.0 ? r * r * std::log(r) : 0.0;
      }
      break;
    }
  }
  if (reduction.size() > 0) return reduction * full;
  return full;
}

Basis Basis::reduced(const MatrixXd& V) const {
  Basis b = *this;
  b.reduction = V;
  return b;
}

SampleSet sample_states(const Polytope& X, int M, std::uint64_t seed) {
  if (!X.is_box)
    throw std::invalid_argument("sample_states: only box sets are supported");
  Rng rng(seed);
  SampleSet s;
  s.rngSeed = seed;
  s.points.resize(X.dim(), M);
  for (int i = 0; i < M; ++i) s.points.col(i) = rng.uniform_vec(X.lo, X.hi);
  return s;
}

SampleSet sample_snapshots(const DiscreteSystem& sys, const Polytope& X,
                           const Polytope& U, int M, std::uint64_t seed) {
  if (!X.is_box || !U.is_box)
    throw std::invalid_argument("sample_snapshots: only box sets are supported");
  Rng rng(seed);
  SampleSet s;
  s.rngSeed = seed;
  s.points.resize(sys.n, M);
  s.inputs.resize(sys.m, M);
  s.nextStates.resize(sys.n, M);
  for (int i = 0; i < M; ++i) {
    s.points.col(i) = rng.uniform_vec(X.lo, X.hi);
    s.inputs.col(i) = rng.uniform_vec(U.lo, U.hi);
    s.nextStates.col(i) = sys.step(s.points.col(i), s.inputs.col(i));
  }
  return s;
}

PolyflowFit fit_polyflow(const DiscreteSystem& sys, const SampleSet& samples,
                         int k) {
  if (k < 0) throw std::invalid_argument("fit_polyflow: k must be >= 0");
  const int M = samples.size();
  const int p = sys.n * (k + 1);
  if (M < p)
    throw std::invalid_argument(
        "fit_polyflow: need at least n(k+1) samples for a well-posed fit");

  MatrixXd Phi(M, p);
  MatrixXd Y(M, sys.n);
  const VectorXd zeroU = VectorXd::Zero(sys.m);
  for (int i = 0; i < M; ++i) {
    const auto seq = iterate_sequence(sys, samples.points.col(i), zeroU, k + 1);
    for (int l = 0; l <= k; ++l)
      Phi.block(i, l * sys.n, 1, sys.n) = seq[l].transpose();
    Y.row(i) = seq[k + 1].transpose();
  }

  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(Phi);
  const MatrixXd W = cod.solve(Y);  // minimum-norm least squares

  PolyflowFit fit;
  fit.k = k;
  fit.rank = static_cast<int>(cod.rank());
  fit.rankDeficient = fit.rank < p;
  fit.alphas.reserve(k + 1);
  for (int l = 0; l <= k; ++l)
    fit.alphas.push_back(W.middleRows(l * sys.n, sys.n).transpose());
  const MatrixXd R = Y - Phi * W;
  for (int i = 0; i < M; ++i) accumulate(fit.residual, R.row(i).norm(), M);
  fit.residual.rms = std::sqrt(fit.residual.rms);
  fit.bVecs = input_derivatives(sys, k + 1);
  return fit;
}

LiftedModel assemble_polyflow_model(const DiscreteSystem& sys,
                                    const PolyflowFit& fit) {
  const int k = fit.k;
  const int nt = sys.n * (k + 1);
  LiftedModel model;
  model.n = sys.n;
  model.m = sys.m;
  model.nLift = nt;
  model.A = MatrixXd::Zero(nt, nt);
  for (int l = 0; l < k; ++l)
    model.A.block(l * sys.n, (l + 1) * sys.n, sys.n, sys.n) =
        MatrixXd::Identity(sys.n, sys.n);
  for (int l = 0; l <= k; ++l)
    model.A.block(k * sys.n, l * sys.n, sys.n, sys.n) = fit.alphas[l];
  model.B.resize(nt, sys.m);
  for (int l = 0; l <= k; ++l)
    model.B.middleRows(l * sys.n, sys.n) = fit.bVecs[l];
  model.C = MatrixXd::Zero(sys.n, nt);
  model.C.leftCols(sys.n) = MatrixXd::Identity(sys.n, sys.n);
  model.basis = Basis::polyflow(k);
  DiscreteSystem sysCopy = sys;
  model.lift = [sysCopy, k](const VectorXd& x) {
    return stacked_basis(sysCopy, x, k);
  };
  model.residual = fit.residual;
  model.tag = sys.name + "_polyflow_k" + std::to_string(k);
  return model;
}

LiftedModel fit_edmd(const Basis& basis, const DiscreteSystem& sys,
                     const SampleSet& snapshots) {
  if (basis.kind == BasisKind::ThinPlateRbf && !basis.includeState)
    throw std::invalid_argument(
        "fit_edmd: RBF basis must include the state so C can recover x");
  const int M = snapshots.size();
  const int nt = basis.dim(sys.n);
  if (snapshots.inputs.cols() != M || snapshots.nextStates.cols() != M)
    throw std::invalid_argument("fit_edmd: snapshot triples required");
  if (M < nt + sys.m)
    throw std::invalid_argument("fit_edmd: need at least ntilde + m snapshots");

  MatrixXd Phi(M, nt + sys.m);
  MatrixXd Y(M, nt);
  for (int i = 0; i < M; ++i) {
    Phi.block(i, 0, 1, nt) = basis.eval(sys, snapshots.points.col(i)).transpose();
    Phi.block(i, nt, 1, sys.m) = snapshots.inputs.col(i).transpose();
    Y.row(i) = basis.eval(sys, snapshots.nextStates.col(i)).transpose();
  }

  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(Phi);
  const MatrixXd W = cod.solve(Y);

  LiftedModel model;
  model.n = sys.n;
  model.m = sys.m;
  model.nLift = nt;
  model.A = W.topRows(nt).transpose();
  model.B = W.bottomRows(sys.m).transpose();
  model.C = MatrixXd::Zero(sys.n, nt);
  model.C.leftCols(sys.n) = MatrixXd::Identity(sys.n, sys.n);
  model.basis = basis;
  DiscreteSystem sysCopy = sys;
  Basis basisCopy = basis;
  model.lift = [sysCopy, basisCopy](const VectorXd& x) {
    return basisCopy.eval(sysCopy, x);
  };
  const MatrixXd R = Y - Phi * W;
  for (int i = 0; i < M; ++i) accumulate(model.residual, R.row(i).norm(), M);
  model.residual.rms = std::sqrt(model.residual.rms);
  model.tag = sys.name + "_edmd";
  return model;
}

std::pair<MatrixXd, int> remove_redundancy(const MatrixXd& basisValues,
                                           double tol, int nKeep) {
  if (!(tol > 0.0))
    throw std::invalid_argument("remove_redundancy: tol must be > 0");
  const int p = static_cast<int>(basisValues.cols());
  if (nKeep > p)
    throw std::invalid_argument("remove_redundancy: nKeep exceeds components");

  Eigen::JacobiSVD<MatrixXd> svd(basisValues);
  const double sigmaMax = svd.singularValues()[0];
  const double thr = tol * sigmaMax;

  // Greedy modified Gram-Schmidt column selection; the raw-state block (the
  // first nKeep components) is always kept so x = C T(x) stays exact.
  std::vector<int> selected;
  MatrixXd Q(basisValues.rows(), p);
  int nq = 0;
  auto tryAdd = [&](int j, bool force) {
    VectorXd v = basisValues.col(j);
    for (int r = 0; r < nq; ++r) v -= Q.col(r).dot(v) * Q.col(r);
    // second pass for numerical orthogonality
    for (int r = 0; r < nq; ++r) v -= Q.col(r).dot(v) * Q.col(r);
    const double nrm = v.norm();
    if (!force && nrm <= thr) return false;
    if (force && nrm <= thr)
      throw std::runtime_error(
          "remove_redundancy: state block is itself rank deficient");
    Q.col(nq++) = v / nrm;
    selected.push_back(j);
    return true;
  };
  for (int j = 0; j < nKeep; ++j) tryAdd(j, /*force=*/true);
  for (int j = nKeep; j < p; ++j) tryAdd(j, /*force=*/false);

  const int nt = static_cast<int>(selected.size());
  MatrixXd V = MatrixXd::Zero(nt, p);
  for (int i = 0; i < nt; ++i) V(i, selected[i]) = 1.0;
  return {V, nt};
}

NilpotencyDiagnostics nilpotency_residual(const DiscreteSystem& sys,
                                          const PolyflowFit& fit,
                                          const SampleSet& testPoints) {
  NilpotencyDiagnostics diag;
  const int M = testPoints.size();
  const int k = fit.k;
  const VectorXd zeroU = VectorXd::Zero(sys.m);
  const bool haveInputs = testPoints.inputs.cols() == M && sys.m > 0;
  for (int i = 0; i < M; ++i) {
    const VectorXd x = testPoints.points.col(i);
    const auto seq0 = iterate_sequence(sys, x, zeroU, k + 1);
    VectorXd r = seq0[k + 1];
    for (int l = 0; l <= k; ++l) r -= fit.alphas[l] * seq0[l];
    accumulate(diag.nilpotency, r.norm(), M);

    if (haveInputs) {
      const VectorXd u = testPoints.inputs.col(i);
      const auto sequ = iterate_sequence(sys, x, u, k + 1);
      double worst = 0.0;
      for (int l = 1; l <= k + 1; ++l) {
        const VectorXd d = sequ[l] - seq0[l] - fit.bVecs[l - 1] * u;
        worst = std::max(worst, d.norm());
      }
      accumulate(diag.inputAffineness, worst, M);
    }
  }
  diag.nilpotency.rms = std::sqrt(diag.nilpotency.rms);
  diag.inputAffineness.rms = std::sqrt(diag.inputAffineness.rms);
  return diag;
}

}  // namespace polyflow
