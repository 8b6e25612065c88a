#include <doctest.h>

#include "helpers.hpp"
#include "polyflow/dare.hpp"
#include "polyflow/invariant_set.hpp"
#include "polyflow/lifting.hpp"
#include "polyflow/polytope.hpp"

using namespace polyflow;
using testutil::vec1;
using testutil::vec2;

TEST_CASE("polytope representation") {
  SUBCASE("box rows have unit infinity norm") {
    const Polytope X = Polytope::box(vec2(-0.5, -0.2), vec2(0.5, 0.8));
    for (int i = 0; i < X.rows(); ++i)
      CHECK(X.H.row(i).lpNorm<Eigen::Infinity>() == doctest::Approx(1.0));
    CHECK(X.contains(vec2(0.49, 0.79)));
    CHECK(X.contains(vec2(0.5, 0.8)));
    CHECK_FALSE(X.contains(vec2(0.51, 0.0)));
    // Membership tolerance is 1e-9.
    CHECK(X.contains(vec2(0.5 + 5e-10, 0.0)));
  }

  SUBCASE("normalized drops vacuous rows and rejects empty certificates") {
    MatrixXd H(2, 2);
    H << 1, 0, 0, 0;
    VectorXd h(2);
    h << 1.0, 0.5;
    const Polytope P(H, h);
    const Polytope N = P.normalized();
    CHECK(N.rows() == 1);
    h[1] = -0.5;
    CHECK_THROWS(Polytope(H, h).normalized());
  }
}

TEST_CASE("solve_dare") {
  SUBCASE("scalar closed form: golden ratio") {
    MatrixXd A(1, 1), B(1, 1), Q(1, 1), R(1, 1);
    A << 1.0;
    B << 1.0;
    Q << 1.0;
    R << 1.0;
    const DareSolution sol = solve_dare(A, B, Q, R, 1e-14, 100000);
    CHECK(std::abs(sol.P(0, 0) - (1.0 + std::sqrt(5.0)) / 2.0) <= 1e-9);
    CHECK(sol.K(0, 0) == doctest::Approx(-(std::sqrt(5.0) - 1.0) / 2.0)
                             .epsilon(1e-8));
  }

  SUBCASE("deadbeat plant: P = Qlift, K = 0") {
    MatrixXd A = MatrixXd::Zero(2, 2);
    MatrixXd B(2, 1);
    B << 1.0, 0.5;
    MatrixXd Q(2, 2);
    Q << 2.0, 0.3, 0.3, 1.0;
    const DareSolution sol = solve_dare(A, B, Q, MatrixXd::Identity(1, 1));
    CHECK((sol.P - Q).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(sol.K.lpNorm<Eigen::Infinity>() <= 1e-9);
  }

  SUBCASE("B = 0 reduces to the Lyapunov equation (series oracle)") {
    MatrixXd A(2, 2);
    A << 0.5, 0.2, -0.1, 0.6;
    MatrixXd B = MatrixXd::Zero(2, 1);
    MatrixXd Q(2, 2);
    Q << 1.0, 0.1, 0.1, 2.0;
    const DareSolution sol = solve_dare(A, B, Q, MatrixXd::Identity(1, 1));
    MatrixXd series = MatrixXd::Zero(2, 2);
    MatrixXd Aj = MatrixXd::Identity(2, 2);
    for (int j = 0; j <= 200; ++j) {
      series += Aj.transpose() * Q * Aj;
      Aj = (A * Aj).eval();
    }
    CHECK((sol.P - series).lpNorm<Eigen::Infinity>() <= 1e-8);
  }

  SUBCASE("defect bound and closed-loop stability") {
    MatrixXd A(2, 2), B(2, 1), Q(2, 2), R(1, 1);
    A << 1.1, 0.3, 0.0, 0.9;
    B << 0.0, 1.0;
    Q = MatrixXd::Identity(2, 2);
    R << 0.1;
    const double tol = 1e-10;
    const DareSolution sol = solve_dare(A, B, Q, R, tol);
    CHECK(sol.residual <= 10.0 * tol);
    const MatrixXd D = R + B.transpose() * sol.P * B;
    const MatrixXd Kexact = -D.ldlt().solve(B.transpose() * sol.P * A);
    CHECK((sol.K - Kexact).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(spectral_radius(A + B * sol.K) < 1.0 - 1e-8);
    // P symmetric PSD.
    CHECK((sol.P - sol.P.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sol.P);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }

  SUBCASE("non-stabilizable pair does not converge") {
    MatrixXd A(1, 1), B(1, 1), Q(1, 1), R(1, 1);
    A << 2.0;
    B << 0.0;
    Q << 1.0;
    R << 1.0;
    CHECK_THROWS_AS(solve_dare(A, B, Q, R, 1e-10, 500), std::runtime_error);
  }

  SUBCASE("observability rank test") {
    MatrixXd A(2, 2);
    A << 0.5, 0.0, 0.0, 0.7;
    MatrixXd Cfull = MatrixXd::Identity(2, 2);
    CHECK(is_observable(A, Cfull));
    MatrixXd Cpart(1, 2);
    Cpart << 1.0, 0.0;  // decoupled diagonal: second mode invisible
    CHECK_FALSE(is_observable(A, Cpart));
  }
}

TEST_CASE("lp_max") {
  const Polytope box = Polytope::box(vec2(-1.0, -1.0), vec2(1.0, 1.0));

  SUBCASE("axis direction over the unit box") {
    const LpResult r = lp_max(vec2(1.0, 0.0), box);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("diagonal direction over the unit box") {
    const LpResult r = lp_max(vec2(1.0, 1.0), box);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-6));
    CHECK((r.argmax - vec2(1.0, 1.0)).lpNorm<Eigen::Infinity>() <= 1e-5);
  }

  SUBCASE("random directions over the standard simplex vs vertex enumeration") {
    // {x >= 0, sum x <= 1} in R^3 has vertices 0, e1, e2, e3.
    MatrixXd H(4, 3);
    H << -1, 0, 0, 0, -1, 0, 0, 0, -1, 1, 1, 1;
    VectorXd h(4);
    h << 0, 0, 0, 1;
    const Polytope simplex(H, h);
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
      VectorXd c(3);
      for (int i = 0; i < 3; ++i) c[i] = rng.uniform(-1.0, 1.0);
      const double expected = std::max(0.0, c.maxCoeff());
      const LpResult r = lp_max(c, simplex);
      CHECK(std::abs(r.value - expected) <= 1e-6);
    }
  }
}

TEST_CASE("max_invariant_set") {
  SUBCASE("scalar contraction keeps the whole box") {
    MatrixXd A(1, 1), B(1, 1), K(1, 1), C(1, 1);
    A << 0.5;
    B << 0.0;
    K << 0.0;
    C << 1.0;
    const Polytope X = Polytope::box(vec1(-1.0), vec1(1.0));
    const Polytope U = Polytope::box(vec1(-10.0), vec1(10.0));
    const InvariantSet s = max_invariant_set(A, B, K, C, X, U);
    CHECK(s.determinedness == 0);
    CHECK(s.polytope.contains(vec1(0.999)));
    CHECK_FALSE(s.polytope.contains(vec1(1.01)));
  }

  SUBCASE("scalar input system with zero gain, hand enumeration") {
    // x+ = 0.5 x + u with u = 0: every |x| <= 1 stays admissible.
    MatrixXd A(1, 1), B(1, 1), K(1, 1), C(1, 1);
    A << 0.5;
    B << 1.0;
    K << 0.0;
    C << 1.0;
    const Polytope X = Polytope::box(vec1(-1.0), vec1(1.0));
    const Polytope U = Polytope::box(vec1(-1.0), vec1(1.0));
    const InvariantSet s = max_invariant_set(A, B, K, C, X, U);
    CHECK(s.polytope.contains(vec1(0.999)));
    CHECK_FALSE(s.polytope.contains(vec1(1.01)));
    CHECK(s.determinedness == 0);
  }

  SUBCASE("unstable closed loop violates the precondition") {
    MatrixXd A(1, 1), B(1, 1), K(1, 1), C(1, 1);
    A << 1.5;
    B << 0.0;
    K << 0.0;
    C << 1.0;
    const Polytope X = Polytope::box(vec1(-1.0), vec1(1.0));
    CHECK_THROWS(max_invariant_set(A, B, K, C, X, X));
  }

  SUBCASE("2-D LQR loop: sampled invariance and admissibility") {
    MatrixXd A(2, 2), B(2, 1);
    A << 1.0, 0.2, 0.0, 1.0;
    B << 0.0, 0.2;
    const MatrixXd Q = MatrixXd::Identity(2, 2);
    MatrixXd R(1, 1);
    R << 0.5;
    const DareSolution d = solve_dare(A, B, Q, R);
    const Polytope X = Polytope::box(vec2(-1.0, -1.0), vec2(1.0, 1.0));
    const Polytope U = Polytope::box(vec1(-0.5), vec1(0.5));
    const InvariantSet s =
        max_invariant_set(A, B, d.K, MatrixXd::Identity(2, 2), X, U);
    CHECK(s.determinedness >= 0);
    CHECK(s.polytope.contains(VectorXd::Zero(2)));

    const MatrixXd Acl = A + B * d.K;
    Rng rng(19);
    int tested = 0;
    for (int i = 0; i < 5000 && tested < 1000; ++i) {
      const VectorXd x = rng.uniform_vec(X.lo, X.hi);
      if (!s.polytope.contains(x, 0.0)) continue;
      ++tested;
      CHECK(s.polytope.contains(Acl * x, 1e-9));
      CHECK(X.contains(x));
      CHECK(U.contains(d.K * x));
    }
    CHECK(tested > 100);
  }
}
