#include "polyflow/mpc.hpp"

#include <atomic>
#include <stdexcept>
#include <thread>

namespace polyflow {

MpcCondenser::MpcCondenser(const MpcSpec& spec) {
  N_ = spec.horizon;
  n_ = spec.model.n;
  m_ = spec.model.m;
  nt_ = spec.model.nLift;
  if (N_ < 1) throw std::invalid_argument("MpcCondenser: horizon must be >= 1");
  if (spec.Q.rows() != n_ || spec.Q.cols() != n_ || spec.R.rows() != m_ ||
      spec.R.cols() != m_ || spec.P.rows() != nt_ || spec.P.cols() != nt_)
    throw std::invalid_argument("MpcCondenser: weight dimensions inconsistent");

  lift_ = spec.model.lift;
  const MatrixXd& A = spec.model.A;
  const MatrixXd& B = spec.model.B;
  const MatrixXd& C = spec.model.C;

  // Prediction matrices over the stacked lifted trajectory
  // (xt_0; ...; xt_N) = Sx * xt_0 + Su * z.
  std::vector<MatrixXd> Apow(N_ + 1);
  Apow[0] = MatrixXd::Identity(nt_, nt_);
  for (int i = 1; i <= N_; ++i) Apow[i] = A * Apow[i - 1];

  MatrixXd Sx((N_ + 1) * nt_, nt_);
  MatrixXd Su = MatrixXd::Zero((N_ + 1) * nt_, N_ * m_);
  for (int i = 0; i <= N_; ++i) {
    Sx.middleRows(i * nt_, nt_) = Apow[i];
    for (int j = 0; j < i; ++j)
      Su.block(i * nt_, j * m_, nt_, m_) = Apow[i - 1 - j] * B;
  }

  // Stage cost on lifted states is ||C xt||_Q^2; terminal is ||xt_N||_P^2.
  MatrixXd Qbar = MatrixXd::Zero((N_ + 1) * nt_, (N_ + 1) * nt_);
  const MatrixXd CtQC = C.transpose() * spec.Q * C;
  for (int i = 0; i < N_; ++i)
    Qbar.block(i * nt_, i * nt_, nt_, nt_) = CtQC;
  Qbar.block(N_ * nt_, N_ * nt_, nt_, nt_) = spec.P;

  MatrixXd Rbar = MatrixXd::Zero(N_ * m_, N_ * m_);
  for (int i = 0; i < N_; ++i) Rbar.block(i * m_, i * m_, m_, m_) = spec.R;

  Hq_ = 2.0 * (Su.transpose() * Qbar * Su + Rbar);
  Hq_ = 0.5 * (Hq_ + Hq_.transpose()).eval();
  gMat_ = 2.0 * Su.transpose() * Qbar * Sx;
  constMat_ = Sx.transpose() * Qbar * Sx;

  // Inequalities: state constraints for i = 0..N-1, input constraints,
  // terminal-set membership of xt_N.
  const Polytope& X = spec.constraints.stateSet;
  const Polytope& U = spec.constraints.inputSet;
  const Polytope& F = spec.terminalSet.polytope;
  if (X.dim() != n_ || U.dim() != m_)
    throw std::invalid_argument("MpcCondenser: constraint set dimensions");
  if (F.dim() != nt_)
    throw std::invalid_argument("MpcCondenser: terminal set must live in the lifted space");

  const int qx = X.rows(), qu = U.rows(), qf = F.rows();
  stateRows_ = N_ * qx;
  const int rowsTotal = N_ * qx + N_ * qu + qf;
  G_ = MatrixXd::Zero(rowsTotal, N_ * m_);
  hConst_.resize(rowsTotal);
  boundMat_ = MatrixXd::Zero(rowsTotal, nt_);

  int r = 0;
  for (int i = 0; i < N_; ++i) {
    const MatrixXd HXC = X.H * C;
    G_.middleRows(r, qx) = HXC * Su.middleRows(i * nt_, nt_);
    boundMat_.middleRows(r, qx) = HXC * Apow[i];
    hConst_.segment(r, qx) = X.h;
    r += qx;
  }
  for (int i = 0; i < N_; ++i) {
    G_.block(r, i * m_, qu, m_) = U.H;
    hConst_.segment(r, qu) = U.h;
    r += qu;
  }
  G_.middleRows(r, qf) = F.H * Su.middleRows(N_ * nt_, nt_);
  boundMat_.middleRows(r, qf) = F.H * Apow[N_];
  hConst_.segment(r, qf) = F.h;
}

VectorXd MpcCondenser::bounds(const VectorXd& /*x*/,
                              const VectorXd& xlift) const {
  return hConst_ - boundMat_ * xlift;
}

QpProblem MpcCondenser::build(const VectorXd& x) const {
  if (x.size() != n_)
    throw std::invalid_argument("MpcCondenser::build: state dimension mismatch");
  const VectorXd xlift = lift_(x);
  return QpProblem(Hq_, linearTerm(xlift), G_, bounds(x, xlift));
}

MpcSolution MpcCondenser::assembleSolution(const MpcSpec& spec,
                                           const VectorXd& xlift,
                                           const QpSolution& qp) const {
  MpcSolution sol;
  sol.status = qp.status;
  sol.iterations = qp.iterations;
  sol.z = qp.z;
  if (qp.status != QpStatus::Optimal) return sol;
  sol.uSeq.resize(m_, N_);
  for (int i = 0; i < N_; ++i) sol.uSeq.col(i) = qp.z.segment(i * m_, m_);
  // Predicted lifted states from the step-by-step recursion.
  sol.predictedLiftedStates.resize(nt_, N_ + 1);
  sol.predictedLiftedStates.col(0) = xlift;
  for (int i = 0; i < N_; ++i)
    sol.predictedLiftedStates.col(i + 1) =
        spec.model.A * sol.predictedLiftedStates.col(i) +
        spec.model.B * sol.uSeq.col(i);
  sol.cost = qp.objective + costConstant(xlift);
  return sol;
}

QpProblem build_condensed_qp(const MpcSpec& spec, const VectorXd& x) {
  return MpcCondenser(spec).build(x);
}

MpcSolution mpc_step(const MpcSpec& spec, const VectorXd& x,
                     const VectorXd* warmStart) {
  const MpcCondenser cond(spec);
  const VectorXd xlift = spec.model.lift(x);
  QpWorkspace ws(cond.quadraticTerm(), cond.inequalityMatrix(), MatrixXd());
  const QpSolution qp = ws.solve(cond.linearTerm(xlift), cond.bounds(x, xlift),
                                 VectorXd(), warmStart);
  return cond.assembleSolution(spec, xlift, qp);
}

ClosedLoopRun run_closed_loop(const DiscreteSystem& plant, const MpcSpec& spec,
                              const VectorXd& x0, int T) {
  if (T < 1) throw std::invalid_argument("run_closed_loop: T must be >= 1");
  const MpcCondenser cond(spec);
  QpWorkspace ws(cond.quadraticTerm(), cond.inequalityMatrix(), MatrixXd());

  const int n = plant.n, m = plant.m;
  MatrixXd states(n, T + 1);
  MatrixXd inputs(m, T);
  ClosedLoopRun run;
  states.col(0) = x0;

  VectorXd warm;
  bool haveWarm = false;
  int executed = 0;
  for (int t = 0; t < T; ++t) {
    const VectorXd x = states.col(t);
    const VectorXd xlift = spec.model.lift(x);
    const QpSolution qp =
        ws.solve(cond.linearTerm(xlift), cond.bounds(x, xlift), VectorXd(),
                 haveWarm ? &warm : nullptr);
    run.feasibleFlags.push_back(qp.status);
    if (qp.status != QpStatus::Optimal) {
      run.terminated = RunTermination::LostFeasibility;
      run.lostFeasibilityStep = t;
      break;
    }
    const VectorXd u = qp.z.head(m);
    inputs.col(t) = u;
    VectorXd xNext = plant.step(x, u);
    if (!xNext.allFinite())
      throw std::runtime_error("run_closed_loop: plant produced NaN");
    states.col(t + 1) = xNext;
    // Warm start: shift by one step, repeat the last input.
    warm.resize(qp.z.size());
    warm.head((spec.horizon - 1) * m) = qp.z.tail((spec.horizon - 1) * m);
    warm.tail(m) = qp.z.tail(m);
    haveWarm = true;
    ++executed;
  }

  run.states = states.leftCols(executed + 1);
  run.inputs = inputs.leftCols(executed);
  run.lqCost = 0.0;
  for (int t = 0; t < executed; ++t)
    run.lqCost += states.col(t).dot(spec.Q * states.col(t)) +
                  inputs.col(t).dot(spec.R * inputs.col(t));
  if (run.terminated == RunTermination::Completed) {
    // Terminal term of the t = 0..T sum: x(T) plus u(T) from one extra solve.
    const VectorXd xT = states.col(T);
    const VectorXd xlift = spec.model.lift(xT);
    const QpSolution qp =
        ws.solve(cond.linearTerm(xlift), cond.bounds(xT, xlift), VectorXd(),
                 haveWarm ? &warm : nullptr);
    run.lqCost += xT.dot(spec.Q * xT);
    if (qp.status == QpStatus::Optimal) {
      run.terminalInput = qp.z.head(m);
      run.lqCost += run.terminalInput.dot(spec.R * run.terminalInput);
    }
  }
  return run;
}

int FeasibleDomainScan::feasibleCount() const {
  int c = 0;
  for (auto v : mask) c += v != 0;
  return c;
}

FeasibleDomainScan scan_feasible_domain(const MpcSpec& spec,
                                        const GridSpec& grid, int jobs) {
  if (spec.model.n != 2)
    throw std::invalid_argument("scan_feasible_domain: only n = 2 is supported");
  if (grid.axis1.count < 1 || grid.axis2.count < 1)
    throw std::invalid_argument("scan_feasible_domain: empty grid");
  const MpcCondenser cond(spec);

  FeasibleDomainScan scan;
  scan.grid = grid;
  scan.modelTag = spec.model.tag;
  const int n1 = grid.axis1.count, n2 = grid.axis2.count;
  scan.mask.assign(static_cast<size_t>(n1) * n2, 0);

  auto gridValue = [](const GridAxis& ax, int i) {
    return ax.count == 1 ? ax.min
                         : ax.min + (ax.max - ax.min) * i / (ax.count - 1);
  };

  QpSettings cfg;
  cfg.feasibilityOnly = true;
  const int total = n1 * n2;
  std::atomic<int> next{0};
  auto worker = [&]() {
    QpWorkspace ws(cond.quadraticTerm(), cond.inequalityMatrix(), MatrixXd(),
                   cfg);
    for (;;) {
      const int cell = next.fetch_add(1);
      if (cell >= total) break;
      const int i = cell / n2, j = cell % n2;
      VectorXd x(2);
      x[0] = gridValue(grid.axis1, i);
      x[1] = gridValue(grid.axis2, j);
      const VectorXd xlift = spec.model.lift(x);
      const QpSolution qp =
          ws.solve(cond.linearTerm(xlift), cond.bounds(x, xlift));
      scan.mask[cell] = qp.status == QpStatus::Optimal ? 1 : 0;
    }
  };

  jobs = std::max(1, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return scan;
}

std::function<VectorXd(const VectorXd&)> lqr_controller(
    const LiftedModel& model, const DareSolution& dare) {
  const MatrixXd K = dare.K;
  auto lift = model.lift;
  return [K, lift](const VectorXd& x) -> VectorXd { return K * lift(x); };
}

}  // namespace polyflow
