#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace srapf {

// Row-per-sample dense matrix. All numerics run in 64-bit.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Labels = std::vector<int>;

// Scales each row to unit L2 norm. A row whose norm is below 1e-12 maps to
// the first basis vector so the output is always on the unit sphere.
Matrix normalize_rows(const Matrix& z);

// Backward pass of normalize_rows: given the input z, the normalized output x
// and dL/dx, returns dL/dz. Degenerate rows get a zero gradient.
Matrix normalize_rows_backward(const Matrix& z, const Matrix& x,
                               const Matrix& grad_x);

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

// Row-wise log-sum-exp.
Vector logsumexp_rows(const Matrix& logits);

// Gathers rows by index.
Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows);

bool all_finite(const Matrix& m);

// a * b with each output row independent of the other rows of `a`, so an
// input embeds identically at any batch position.
inline Matrix row_stable_product(const Matrix& a, const Matrix& b) { return a.lazyProduct(b); }

}  // namespace srapf
