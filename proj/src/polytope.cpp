#include "polyflow/polytope.hpp"

#include <stdexcept>
#include <vector>

namespace polyflow {

Polytope::Polytope(MatrixXd H_in, VectorXd h_in)
    : H(std::move(H_in)), h(std::move(h_in)) {
  if (H.rows() != h.size())
    throw std::invalid_argument("Polytope: H and h row counts differ");
}

Polytope Polytope::box(const VectorXd& lo, const VectorXd& hi) {
  if (lo.size() != hi.size())
    throw std::invalid_argument("Polytope::box: bound sizes differ");
  const int d = static_cast<int>(lo.size());
  for (int i = 0; i < d; ++i)
    if (!(lo[i] < hi[i]))
      throw std::invalid_argument("Polytope::box: lo must be < hi");
  Polytope p;
  p.H.setZero(2 * d, d);
  p.h.resize(2 * d);
  for (int i = 0; i < d; ++i) {
    p.H(i, i) = 1.0;
    p.h[i] = hi[i];
    p.H(d + i, i) = -1.0;
    p.h[d + i] = -lo[i];
  }
  p.is_box = true;
  p.lo = lo;
  p.hi = hi;
  return p;
}

bool Polytope::contains(const VectorXd& x, double tol) const {
  if (x.size() != H.cols())
    throw std::invalid_argument("Polytope::contains: dimension mismatch");
  return ((H * x - h).array() <= tol).all();
}

void Polytope::append(const MatrixXd& Hextra, const VectorXd& hextra) {
  if (Hextra.cols() != H.cols() || Hextra.rows() != hextra.size())
    throw std::invalid_argument("Polytope::append: dimension mismatch");
  MatrixXd Hnew(H.rows() + Hextra.rows(), H.cols());
  Hnew << H, Hextra;
  VectorXd hnew(h.size() + hextra.size());
  hnew << h, hextra;
  H = std::move(Hnew);
  h = std::move(hnew);
  is_box = false;
}

Polytope Polytope::normalized(double tol) const {
  std::vector<int> keep;
  keep.reserve(H.rows());
  for (int i = 0; i < H.rows(); ++i) {
    const double nrm = H.row(i).norm();
    if (nrm <= tol) {
      if (h[i] < -tol)
        throw std::invalid_argument("Polytope::normalized: zero row with negative bound (empty set)");
      continue;  // 0 <= h, vacuous
    }
    keep.push_back(i);
  }
  Polytope out;
  out.H.resize(static_cast<int>(keep.size()), H.cols());
  out.h.resize(static_cast<int>(keep.size()));
  for (int j = 0; j < static_cast<int>(keep.size()); ++j) {
    const int i = keep[j];
    const double nrm = H.row(i).norm();
    out.H.row(j) = H.row(i) / nrm;
    out.h[j] = h[i] / nrm;
  }
  return out;
}

}  // namespace polyflow
