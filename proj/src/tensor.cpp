#include "srapf/tensor.hpp"

#include <cmath>

namespace srapf {

namespace {
constexpr double kDegenerateNorm = 1e-12;
}

Matrix normalize_rows(const Matrix& z) {
  Matrix x(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double norm = z.row(i).norm();
    if (norm < kDegenerateNorm) {
      x.row(i).setZero();
      if (z.cols() > 0) x(i, 0) = 1.0;
    } else {
      x.row(i) = z.row(i) / norm;
    }
  }
  return x;
}

Matrix normalize_rows_backward(const Matrix& z, const Matrix& x,
                               const Matrix& grad_x) {
  Matrix grad_z(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double norm = z.row(i).norm();
    if (norm < kDegenerateNorm) {
      grad_z.row(i).setZero();
      continue;
    }
    const double proj = x.row(i).dot(grad_x.row(i));
    grad_z.row(i) = (grad_x.row(i) - proj * x.row(i)) / norm;
  }
  return grad_z;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Vector logsumexp_rows(const Matrix& logits) {
  Vector out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    out(i) = mx + std::log((logits.row(i).array() - mx).exp().sum());
  }
  return out;
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) =
        m.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace srapf
