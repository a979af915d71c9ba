#ifndef PARSEL_TENSOR_H
#define PARSEL_TENSOR_H

#include <algorithm>
#include <utility>
#include <vector>

#include "parsel/io_util.h"

namespace parsel {

// Dense row-major matrix of doubles. Vectors are 1 x n or n x 1 as needed.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols)
      : rows_(rows), cols_(cols),
        data_(static_cast<size_t>(rows) * cols, 0.0) {
    require(rows >= 0 && cols >= 0, "Tensor: negative shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) {
    return data_[static_cast<size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return data_[static_cast<size_t>(r) * cols_ + c];
  }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0); }

  bool same_shape(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// y = a * b, a is (r x k), b is (k x c).
Tensor matmul(const Tensor& a, const Tensor& b);
// y = a^T * b.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// y = a * b^T.
Tensor matmul_nt(const Tensor& a, const Tensor& b);

void add_inplace(Tensor& a, const Tensor& b);
Tensor hconcat(const Tensor& a, const Tensor& b);
// Splits columns [0, k) and [k, cols) of a.
std::pair<Tensor, Tensor> hsplit(const Tensor& a, int k);

}  // namespace parsel

#endif
