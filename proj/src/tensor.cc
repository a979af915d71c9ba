#include "parsel/tensor.h"

#include <Eigen/Dense>

namespace parsel {

namespace {

using EMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

CMap map(const Tensor& t) { return CMap(t.data(), t.rows(), t.cols()); }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul: shape mismatch");
  Tensor y(a.rows(), b.cols());
  MMap(y.data(), y.rows(), y.cols()).noalias() = map(a) * map(b);
  return y;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows(), "matmul_tn: shape mismatch");
  Tensor y(a.cols(), b.cols());
  MMap(y.data(), y.rows(), y.cols()).noalias() = map(a).transpose() * map(b);
  return y;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.cols(), "matmul_nt: shape mismatch");
  Tensor y(a.rows(), b.rows());
  MMap(y.data(), y.rows(), y.cols()).noalias() = map(a) * map(b).transpose();
  return y;
}

void add_inplace(Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "add_inplace: shape mismatch");
  double* pa = a.data();
  const double* pb = b.data();
  for (size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

Tensor hconcat(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows(), "hconcat: row mismatch");
  Tensor y(a.rows(), a.cols() + b.cols());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) y(r, c) = a(r, c);
    for (int c = 0; c < b.cols(); ++c) y(r, a.cols() + c) = b(r, c);
  }
  return y;
}

std::pair<Tensor, Tensor> hsplit(const Tensor& a, int k) {
  require(k >= 0 && k <= a.cols(), "hsplit: bad split point");
  Tensor left(a.rows(), k);
  Tensor right(a.rows(), a.cols() - k);
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < k; ++c) left(r, c) = a(r, c);
    for (int c = k; c < a.cols(); ++c) right(r, c - k) = a(r, c);
  }
  return {std::move(left), std::move(right)};
}

}  // namespace parsel
