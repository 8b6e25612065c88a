#include <doctest.h>

#include "helpers.hpp"
#include "polyflow/qp.hpp"

using namespace polyflow;

namespace {

QpProblem scalar_lower_bound() {
  // min z^2 subject to z >= 1.
  MatrixXd H(1, 1), G(1, 1);
  H << 2.0;
  G << -1.0;
  VectorXd g(1), b(1);
  g << 0.0;
  b << -1.0;
  return QpProblem(H, g, G, b);
}

}  // namespace

TEST_CASE("solve_qp basics") {
  SUBCASE("scalar bound-constrained") {
    const QpSolution sol = solve_qp(scalar_lower_bound());
    REQUIRE(sol.status == QpStatus::Optimal);
    CHECK(sol.z[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("unconstrained closed form") {
    MatrixXd H = MatrixXd::Identity(2, 2);
    VectorXd g(2);
    g << -2.0, -4.0;
    const QpSolution sol =
        solve_qp(QpProblem(H, g, MatrixXd(), VectorXd()));
    REQUIRE(sol.status == QpStatus::Optimal);
    CHECK((sol.z - testutil::vec2(2.0, 4.0)).lpNorm<Eigen::Infinity>() <= 1e-8);
  }

  SUBCASE("box projection oracle") {
    // min ||z - (2, 0)||^2 over the unit box: the projection is (1, 0).
    MatrixXd H = 2.0 * MatrixXd::Identity(2, 2);
    VectorXd g = -2.0 * testutil::vec2(2.0, 0.0);
    MatrixXd G(4, 2);
    G << 1, 0, -1, 0, 0, 1, 0, -1;
    VectorXd b = VectorXd::Ones(4);
    const QpSolution sol = solve_qp(QpProblem(H, g, G, b));
    REQUIRE(sol.status == QpStatus::Optimal);
    const VectorXd target = testutil::vec2(2.0, 0.0);
    const VectorXd proj = target.cwiseMax(-VectorXd::Ones(2)).cwiseMin(VectorXd::Ones(2));
    CHECK((sol.z - proj).lpNorm<Eigen::Infinity>() <= 1e-6);
  }

  SUBCASE("contradictory bounds are infeasible") {
    // z <= 0 and z >= 1.
    MatrixXd H(1, 1), G(2, 1);
    H << 2.0;
    G << 1.0, -1.0;
    VectorXd g(1), b(2);
    g << 0.0;
    b << 0.0, -1.0;
    const QpSolution sol = solve_qp(QpProblem(H, g, G, b));
    CHECK(sol.status == QpStatus::Infeasible);
  }

  SUBCASE("NaN data is an input error") {
    MatrixXd H(1, 1);
    H << std::nan("");
    VectorXd g(1);
    g << 0.0;
    CHECK_THROWS_AS(solve_qp(QpProblem(H, g, MatrixXd(), VectorXd())),
                    std::invalid_argument);
  }
}

TEST_CASE("kkt_check") {
  SUBCASE("optimal solutions pass at 1e-6") {
    const QpProblem qp = scalar_lower_bound();
    const QpSolution sol = solve_qp(qp);
    REQUIRE(sol.status == QpStatus::Optimal);
    CHECK(kkt_check(qp, sol, 1e-6).pass);
  }

  SUBCASE("perturbed solutions fail") {
    const QpProblem qp = scalar_lower_bound();
    QpSolution sol = solve_qp(qp);
    sol.z[0] += 1e-2;
    CHECK_FALSE(kkt_check(qp, sol, 1e-6).pass);
  }

  SUBCASE("equality-only simplex barycenter") {
    // min 1/2 ||z||^2 subject to sum z = 1 has the closed form (1/3, 1/3, 1/3).
    MatrixXd H = MatrixXd::Identity(3, 3);
    MatrixXd E = MatrixXd::Ones(1, 3);
    VectorXd e = VectorXd::Ones(1);
    const QpProblem qp(H, VectorXd::Zero(3), MatrixXd(), VectorXd(), E, e);
    const QpSolution sol = solve_qp(qp);
    REQUIRE(sol.status == QpStatus::Optimal);
    CHECK((sol.z - VectorXd::Constant(3, 1.0 / 3.0)).lpNorm<Eigen::Infinity>() <=
          1e-6);
    CHECK(kkt_check(qp, sol, 1e-6).pass);
  }
}

TEST_CASE("best-iterate envelope is non-increasing") {
  Rng rng(41);
  const QpProblem qp = testutil::random_qp(rng);
  double envelope = std::numeric_limits<double>::infinity();
  double first = 0.0;
  bool haveFirst = false;
  for (int iters = 50; iters <= 600; iters += 50) {
    QpSettings cfg;
    cfg.maxIter = iters;
    cfg.epsPrimal = cfg.epsDual = 1e-14;  // force the full iteration budget
    const QpSolution sol = solve_qp(qp, cfg);
    envelope = std::min(envelope, sol.objective);
    if (!haveFirst) {
      first = envelope;
      haveFirst = true;
    }
    CHECK(envelope <= first + 1e-12);
  }
  // The envelope must have made progress toward the true optimum.
  const QpSolution tight = solve_qp(qp);
  CHECK(envelope <= tight.objective + 1e-5);
}

TEST_CASE("scaling invariance of the argmin") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const QpProblem qp = testutil::random_qp(rng);
    const double gamma = rng.uniform(0.1, 50.0);
    const QpSolution a = solve_qp(qp);
    const QpProblem scaled(gamma * qp.Hq, gamma * qp.g, qp.G, qp.bound);
    const QpSolution b = solve_qp(scaled);
    REQUIRE(a.status == QpStatus::Optimal);
    REQUIRE(b.status == QpStatus::Optimal);
    CHECK((a.z - b.z).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}

TEST_CASE("agreement with active-set enumeration on random instances") {
  Rng rng(100);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const QpProblem qp = testutil::random_qp(rng);
    const auto oracle = testutil::active_set_solve(qp);
    REQUIRE(oracle.has_value());  // feasible by construction
    const QpSolution sol = solve_qp(qp);
    REQUIRE(sol.status == QpStatus::Optimal);
    CHECK((sol.z - *oracle).lpNorm<Eigen::Infinity>() <= 1e-5);
    CHECK(kkt_check(qp, sol, 1e-6).pass);
    ++solved;
  }
  CHECK(solved == 200);
}

TEST_CASE("workspace reuse and warm starting") {
  Rng rng(55);
  const QpProblem qp = testutil::random_qp(rng);
  QpWorkspace ws(qp.Hq, qp.G, qp.E, QpSettings{});

  const QpSolution cold = ws.solve(qp.g, qp.bound, qp.e);
  REQUIRE(cold.status == QpStatus::Optimal);

  // A slightly different linear term, warm started from the previous solve.
  VectorXd g2 = qp.g;
  g2[0] += 0.01;
  VectorXd warmY(qp.G.rows() + qp.E.rows());
  warmY.head(qp.G.rows()) = cold.ineqMultipliers;
  if (qp.E.rows() > 0) warmY.tail(qp.E.rows()) = cold.eqMultipliers;
  const QpSolution warm = ws.solve(g2, qp.bound, qp.e, &cold.z, &warmY);
  const QpSolution reference = solve_qp(QpProblem(qp.Hq, g2, qp.G, qp.bound));
  REQUIRE(warm.status == QpStatus::Optimal);
  REQUIRE(reference.status == QpStatus::Optimal);
  CHECK(std::abs(warm.objective - reference.objective) <= 1e-6);
}

TEST_CASE("feasibility-only mode certifies membership") {
  Rng rng(66);
  for (int trial = 0; trial < 20; ++trial) {
    const QpProblem qp = testutil::random_qp(rng);
    QpSettings cfg;
    cfg.feasibilityOnly = true;
    const QpSolution fast = solve_qp(qp, cfg);
    REQUIRE(fast.status == QpStatus::Optimal);
    // The returned point genuinely satisfies the constraints.
    CHECK((qp.G * fast.z - qp.bound).maxCoeff() <= 1e-8);
  }
}
