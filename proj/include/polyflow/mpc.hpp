#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polyflow/dare.hpp"
#include "polyflow/invariant_set.hpp"
#include "polyflow/lifting.hpp"
#include "polyflow/qp.hpp"

namespace polyflow {

/// Lifted MPC problem data: regulate the true state to the origin through
/// the linear embedding, with terminal weight P and terminal set from the
/// unconstrained LQR design.
struct MpcSpec {
  LiftedModel model;
  int horizon = 10;
  MatrixXd Q;  // n x n PSD
  MatrixXd R;  // m x m PD
  MatrixXd P;  // ntilde x ntilde terminal weight
  InvariantSet terminalSet;
  ConstraintSpec constraints;
};

struct MpcSolution {
  MatrixXd uSeq;                  // m x N
  MatrixXd predictedLiftedStates; // ntilde x (N+1)
  double cost = 0.0;              // full objective including the constant term
  QpStatus status = QpStatus::MaxIter;
  VectorXd z;                     // raw stacked input decision variable
  int iterations = 0;
};

/// Condensed form of the lifted MPC problem: predicted states eliminated,
/// decision variable z = (u_0, ..., u_{N-1}). Everything except the linear
/// term and the constraint bounds is independent of the initial state, so one
/// condenser serves a whole closed-loop run or grid scan.
class MpcCondenser {
 public:
  explicit MpcCondenser(const MpcSpec& spec);

  QpProblem build(const VectorXd& x) const;

  VectorXd linearTerm(const VectorXd& xlift) const { return gMat_ * xlift; }
  VectorXd bounds(const VectorXd& x, const VectorXd& xlift) const;
  double costConstant(const VectorXd& xlift) const {
    return xlift.dot(constMat_ * xlift);
  }
  const MatrixXd& quadraticTerm() const { return Hq_; }
  const MatrixXd& inequalityMatrix() const { return G_; }

  MpcSolution assembleSolution(const MpcSpec& spec, const VectorXd& xlift,
                               const QpSolution& qp) const;

 private:
  int N_, n_, m_, nt_;
  std::function<VectorXd(const VectorXd&)> lift_;
  MatrixXd Hq_;        // 2 (Su' Qbar Su + I_N (x) R)
  MatrixXd gMat_;      // 2 Su' Qbar Sx
  MatrixXd constMat_;  // Sx' Qbar Sx
  MatrixXd G_;
  VectorXd hConst_;
  MatrixXd boundMat_;  // bounds = hConst - boundMat * xlift
  int stateRows_ = 0;  // leading rows of G that depend on x through xlift
};

/// Condensed QP for the lifted MPC problem at state x.
QpProblem build_condensed_qp(const MpcSpec& spec, const VectorXd& x);

/// One receding-horizon step: build, solve (optionally warm started), return
/// the full solution. Infeasibility is reported in the status, not thrown.
MpcSolution mpc_step(const MpcSpec& spec, const VectorXd& x,
                     const VectorXd* warmStart = nullptr);

enum class RunTermination { Completed, LostFeasibility };

struct ClosedLoopRun {
  MatrixXd states;  // n x (steps executed + 1)
  MatrixXd inputs;  // m x steps executed
  std::vector<QpStatus> feasibleFlags;
  double lqCost = 0.0;
  RunTermination terminated = RunTermination::Completed;
  int lostFeasibilityStep = -1;
  VectorXd terminalInput;  // u(T) from one extra solve, cost accounting only
};

/// Closed-loop simulation on the true plant: the MPC model may mismatch the
/// plant, that mismatch is the object of study. Terminates early when a step
/// is infeasible. The LQ cost sums t = 0 ... T inclusive, with u(T) taken
/// from one extra solve at the final state.
ClosedLoopRun run_closed_loop(const DiscreteSystem& plant, const MpcSpec& spec,
                              const VectorXd& x0, int T);

struct GridAxis {
  double min = 0.0, max = 0.0;
  int count = 0;
};

struct GridSpec {
  GridAxis axis1, axis2;
};

struct FeasibleDomainScan {
  GridSpec grid;
  std::vector<std::uint8_t> mask;  // row-major, axis1 outer, axis2 inner
  std::string modelTag;

  int feasibleCount() const;
  bool at(int i, int j) const { return mask[i * grid.axis2.count + j] != 0; }
};

/// Feasibility mask of the MPC problem over a 2-D grid (benchmark systems
/// have n = 2). Cells are independent QPs and are solved with the
/// feasibility-only early-exit mode, fanned out over `jobs` threads.
FeasibleDomainScan scan_feasible_domain(const MpcSpec& spec,
                                        const GridSpec& grid, int jobs = 1);

/// Unconstrained lifted LQR law x -> K lift(x).
std::function<VectorXd(const VectorXd&)> lqr_controller(
    const LiftedModel& model, const DareSolution& dare);

}  // namespace polyflow
