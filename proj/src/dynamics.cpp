#include "polyflow/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace polyflow {

namespace {

void check_dims(const DiscreteSystem& sys, const VectorXd& x,
                const VectorXd& u, const char* where) {
  if (x.size() != sys.n || u.size() != sys.m)
    throw std::invalid_argument(std::string(where) + ": dimension mismatch");
}

}  // namespace

VectorXd PolynomialMap::eval(const VectorXd& x) const {
  if (x.size() != exponents.cols())
    throw std::invalid_argument("PolynomialMap::eval: dimension mismatch");
  VectorXd out = VectorXd::Zero(coeffs.rows());
  for (int t = 0; t < exponents.rows(); ++t) {
    double mono = 1.0;
    for (int j = 0; j < exponents.cols(); ++j) {
      for (int e = 0; e < exponents(t, j); ++e) mono *= x[j];
    }
    out += coeffs.col(t) * mono;
  }
  return out;
}

DiscreteSystem pest_model(double r, double c, double kappa, double d) {
  DiscreteSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.name = "pest";
  sys.step = [r, c, kappa, d](const VectorXd& x, const VectorXd& u) {
    const double v = x[0] + 1.0;
    const double p = x[1] + 0.2;
    const double a = u[0] + 0.2;
    VectorXd xn(2);
    xn[0] = v + c * v * (1.0 - v / kappa) - r * v * p - 1.0;
    xn[1] = d * p + v * p - a * p - 0.2;
    return xn;
  };
  return sys;
}

DiscreteSystem immersible_block_system(const MatrixXd& A1, const MatrixXd& A2,
                                       const MatrixXd& B1,
                                       const PolynomialMap& phi) {
  const int n1 = static_cast<int>(A1.rows());
  const int n2 = static_cast<int>(A2.rows());
  if (A1.cols() != n1 || A2.cols() != n2 || B1.rows() != n1 ||
      phi.outputDim() != n1 || phi.inputDim() != n2)
    throw std::invalid_argument("immersible_block_system: inconsistent dimensions");
  DiscreteSystem sys;
  sys.n = n1 + n2;
  sys.m = static_cast<int>(B1.cols());
  sys.name = "immersible_block";
  sys.step = [A1, A2, B1, phi, n1, n2](const VectorXd& x, const VectorXd& u) {
    VectorXd xn(n1 + n2);
    xn.head(n1) = A1 * x.head(n1) + phi.eval(x.tail(n2)) + B1 * u;
    xn.tail(n2) = A2 * x.tail(n2);
    return xn;
  };
  return sys;
}

DiscreteSystem linear_system(const MatrixXd& A, const MatrixXd& B,
                             const std::string& name) {
  if (A.rows() != A.cols() || B.rows() != A.rows())
    throw std::invalid_argument("linear_system: inconsistent dimensions");
  DiscreteSystem sys;
  sys.n = static_cast<int>(A.rows());
  sys.m = static_cast<int>(B.cols());
  sys.name = name;
  sys.step = [A, B](const VectorXd& x, const VectorXd& u) -> VectorXd {
    return A * x + B * u;
  };
  return sys;
}

VectorXd iterate_map(const DiscreteSystem& sys, const VectorXd& x,
                     const VectorXd& u, int ell) {
  if (ell < 0) throw std::invalid_argument("iterate_map: ell must be >= 0");
  check_dims(sys, x, u, "iterate_map");
  if (ell == 0) return x;
  const VectorXd zero = VectorXd::Zero(sys.m);
  VectorXd y = sys.step(x, u);
  for (int i = 1; i < ell; ++i) y = sys.step(y, zero);
  return y;
}

std::vector<VectorXd> iterate_sequence(const DiscreteSystem& sys,
                                       const VectorXd& x, const VectorXd& u,
                                       int L) {
  if (L < 0) throw std::invalid_argument("iterate_sequence: L must be >= 0");
  check_dims(sys, x, u, "iterate_sequence");
  std::vector<VectorXd> out;
  out.reserve(L + 1);
  out.push_back(x);
  if (L == 0) return out;
  const VectorXd zero = VectorXd::Zero(sys.m);
  out.push_back(sys.step(x, u));
  for (int i = 2; i <= L; ++i) out.push_back(sys.step(out.back(), zero));
  return out;
}

VectorXd stacked_basis(const DiscreteSystem& sys, const VectorXd& x, int k) {
  const auto iter = iterate_sequence(sys, x, VectorXd::Zero(sys.m), k);
  VectorXd out(sys.n * (k + 1));
  for (int l = 0; l <= k; ++l) out.segment(l * sys.n, sys.n) = iter[l];
  return out;
}

std::pair<MatrixXd, MatrixXd> jacobian_linearization(const DiscreteSystem& sys,
                                                     const VectorXd& x0,
                                                     const VectorXd& u0,
                                                     double h) {
  if (!(h > 0.0)) throw std::invalid_argument("jacobian_linearization: h must be > 0");
  check_dims(sys, x0, u0, "jacobian_linearization");
  MatrixXd A(sys.n, sys.n), B(sys.n, sys.m);
  VectorXd xp = x0, xm = x0;
  for (int j = 0; j < sys.n; ++j) {
    xp[j] += h;
    xm[j] -= h;
    A.col(j) = (sys.step(xp, u0) - sys.step(xm, u0)) / (2.0 * h);
    xp[j] = x0[j];
    xm[j] = x0[j];
  }
  VectorXd up = u0, um = u0;
  for (int j = 0; j < sys.m; ++j) {
    up[j] += h;
    um[j] -= h;
    B.col(j) = (sys.step(x0, up) - sys.step(x0, um)) / (2.0 * h);
    up[j] = u0[j];
    um[j] = u0[j];
  }
  return {A, B};
}

}  // namespace polyflow
