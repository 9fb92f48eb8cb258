#include "o2orl/tensor.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace o2orl {
namespace kernels {

bool& parallel_enabled() {
  static bool enabled = true;
  return enabled;
}

static void check_mm(const Mat& a, const Mat& b, Mat& out, int ar, int ac, int br, int bc) {
  if (ac != br) throw std::invalid_argument("matmul: inner dimension mismatch");
  if (out.rows != ar || out.cols != bc) out = Mat(ar, bc);
}

void matmul_serial(const Mat& a, const Mat& b, Mat& out) {
  check_mm(a, b, out, a.rows, a.cols, b.rows, b.cols);
  const int M = a.rows, K = a.cols, N = b.cols;
  for (int i = 0; i < M; ++i) {
    double* orow = &out.d[static_cast<size_t>(i) * N];
    for (int j = 0; j < N; ++j) orow[j] = 0.0;
    const double* arow = &a.d[static_cast<size_t>(i) * K];
    for (int k = 0; k < K; ++k) {
      const double aik = arow[k];
      const double* brow = &b.d[static_cast<size_t>(k) * N];
      for (int j = 0; j < N; ++j) orow[j] += aik * brow[j];
    }
  }
}

void matmul_omp(const Mat& a, const Mat& b, Mat& out) {
  check_mm(a, b, out, a.rows, a.cols, b.rows, b.cols);
  const int M = a.rows, K = a.cols, N = b.cols;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < M; ++i) {
    double* orow = &out.d[static_cast<size_t>(i) * N];
    for (int j = 0; j < N; ++j) orow[j] = 0.0;
    const double* arow = &a.d[static_cast<size_t>(i) * K];
    for (int k = 0; k < K; ++k) {
      const double aik = arow[k];
      const double* brow = &b.d[static_cast<size_t>(k) * N];
      for (int j = 0; j < N; ++j) orow[j] += aik * brow[j];
    }
  }
}

// out(K,N) += a(M,K)^T * b(M,N); rows of out are independent.
void matmul_tn_acc_serial(const Mat& a, const Mat& b, Mat& out) {
  if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: row mismatch");
  if (out.rows != a.cols || out.cols != b.cols) throw std::invalid_argument("matmul_tn: out shape");
  const int M = a.rows, K = a.cols, N = b.cols;
  for (int k = 0; k < K; ++k) {
    double* orow = &out.d[static_cast<size_t>(k) * N];
    for (int i = 0; i < M; ++i) {
      const double aik = a.d[static_cast<size_t>(i) * K + k];
      if (aik == 0.0) continue;
      const double* brow = &b.d[static_cast<size_t>(i) * N];
      for (int j = 0; j < N; ++j) orow[j] += aik * brow[j];
    }
  }
}

void matmul_tn_acc_omp(const Mat& a, const Mat& b, Mat& out) {
  if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: row mismatch");
  if (out.rows != a.cols || out.cols != b.cols) throw std::invalid_argument("matmul_tn: out shape");
  const int M = a.rows, K = a.cols, N = b.cols;
#pragma omp parallel for schedule(static)
  for (int k = 0; k < K; ++k) {
    double* orow = &out.d[static_cast<size_t>(k) * N];
    for (int i = 0; i < M; ++i) {
      const double aik = a.d[static_cast<size_t>(i) * K + k];
      if (aik == 0.0) continue;
      const double* brow = &b.d[static_cast<size_t>(i) * N];
      for (int j = 0; j < N; ++j) orow[j] += aik * brow[j];
    }
  }
}

// out(M,K) += a(M,N) * b(K,N)^T; rows of out are independent.
void matmul_nt_acc_serial(const Mat& a, const Mat& b, Mat& out) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: col mismatch");
  if (out.rows != a.rows || out.cols != b.rows) throw std::invalid_argument("matmul_nt: out shape");
  const int M = a.rows, N = a.cols, K = b.rows;
  for (int i = 0; i < M; ++i) {
    double* orow = &out.d[static_cast<size_t>(i) * K];
    const double* arow = &a.d[static_cast<size_t>(i) * N];
    for (int k = 0; k < K; ++k) {
      const double* brow = &b.d[static_cast<size_t>(k) * N];
      double acc = 0.0;
      for (int j = 0; j < N; ++j) acc += arow[j] * brow[j];
      orow[k] += acc;
    }
  }
}

void matmul_nt_acc_omp(const Mat& a, const Mat& b, Mat& out) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: col mismatch");
  if (out.rows != a.rows || out.cols != b.rows) throw std::invalid_argument("matmul_nt: out shape");
  const int M = a.rows, N = a.cols, K = b.rows;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < M; ++i) {
    double* orow = &out.d[static_cast<size_t>(i) * K];
    const double* arow = &a.d[static_cast<size_t>(i) * N];
    for (int k = 0; k < K; ++k) {
      const double* brow = &b.d[static_cast<size_t>(k) * N];
      double acc = 0.0;
      for (int j = 0; j < N; ++j) acc += arow[j] * brow[j];
      orow[k] += acc;
    }
  }
}

void matmul(const Mat& a, const Mat& b, Mat& out) {
  if (parallel_enabled()) matmul_omp(a, b, out);
  else matmul_serial(a, b, out);
}

void matmul_tn_acc(const Mat& a, const Mat& b, Mat& out) {
  if (parallel_enabled()) matmul_tn_acc_omp(a, b, out);
  else matmul_tn_acc_serial(a, b, out);
}

void matmul_nt_acc(const Mat& a, const Mat& b, Mat& out) {
  if (parallel_enabled()) matmul_nt_acc_omp(a, b, out);
  else matmul_nt_acc_serial(a, b, out);
}

}  // namespace kernels
}  // namespace o2orl
