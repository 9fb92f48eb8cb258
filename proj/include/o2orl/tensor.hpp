#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace o2orl {

// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 matrices.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> d;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), d(static_cast<size_t>(r) * c, 0.0) {}
  Mat(int r, int c, std::vector<double> data) : rows(r), cols(c), d(std::move(data)) {
    if (d.size() != static_cast<size_t>(r) * c) throw std::invalid_argument("Mat: size mismatch");
  }

  double& operator()(int r, int c) { return d[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return d[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return d.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

namespace kernels {

// Global switch between the OpenMP kernels and the serial reference. Both
// produce bit-identical results (disjoint output rows, serial inner
// accumulation); tests assert equality and the bench target compares timing.
bool& parallel_enabled();

// out = a * b
void matmul_serial(const Mat& a, const Mat& b, Mat& out);
void matmul_omp(const Mat& a, const Mat& b, Mat& out);
// out += a^T * b
void matmul_tn_acc_serial(const Mat& a, const Mat& b, Mat& out);
void matmul_tn_acc_omp(const Mat& a, const Mat& b, Mat& out);
// out += a * b^T
void matmul_nt_acc_serial(const Mat& a, const Mat& b, Mat& out);
void matmul_nt_acc_omp(const Mat& a, const Mat& b, Mat& out);

// Dispatching entry points used by the autodiff layer.
void matmul(const Mat& a, const Mat& b, Mat& out);
void matmul_tn_acc(const Mat& a, const Mat& b, Mat& out);
void matmul_nt_acc(const Mat& a, const Mat& b, Mat& out);

}  // namespace kernels

}  // namespace o2orl
