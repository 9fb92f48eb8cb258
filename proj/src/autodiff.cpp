#include "o2orl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace o2orl {

Tape::Var Tape::push(Mat v, bool needs_grad, std::function<void(Tape&)> back) {
  Node n;
  n.grad = Mat(v.rows, v.cols);
  n.value = std::move(v);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::leaf(Mat v, bool needs_grad) {
  return push(std::move(v), needs_grad, nullptr);
}

Tape::Var Tape::matmul(Var a, Var b) {
  Mat out;
  kernels::matmul(value(a), value(b), out);
  bool need = ng(a) || ng(b);
  Var self;
  auto back = [a, b, &self](Tape& t) {
    if (t.ng(a)) kernels::matmul_nt_acc(t.g(self), t.value(b), t.g(a));
    if (t.ng(b)) kernels::matmul_tn_acc(t.value(a), t.g(self), t.g(b));
  };
  // capture self by value via a wrapper
  self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, b, s](Tape& t) {
      if (t.ng(a)) kernels::matmul_nt_acc(t.g(s), t.value(b), t.g(a));
      if (t.ng(b)) kernels::matmul_tn_acc(t.value(a), t.g(s), t.g(b));
    };
  }
  (void)back;
  return self;
}

Tape::Var Tape::add(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  if (!A.same_shape(B)) throw std::invalid_argument("add: shape mismatch");
  Mat out = A;
  for (size_t i = 0; i < out.size(); ++i) out.d[i] += B.d[i];
  bool need = ng(a) || ng(b);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, b, s](Tape& t) {
      const Mat& go = t.g(s);
      if (t.ng(a)) for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i];
      if (t.ng(b)) for (size_t i = 0; i < go.size(); ++i) t.g(b).d[i] += go.d[i];
    };
  }
  return self;
}

Tape::Var Tape::sub(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  if (!A.same_shape(B)) throw std::invalid_argument("sub: shape mismatch");
  Mat out = A;
  for (size_t i = 0; i < out.size(); ++i) out.d[i] -= B.d[i];
  bool need = ng(a) || ng(b);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, b, s](Tape& t) {
      const Mat& go = t.g(s);
      if (t.ng(a)) for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i];
      if (t.ng(b)) for (size_t i = 0; i < go.size(); ++i) t.g(b).d[i] -= go.d[i];
    };
  }
  return self;
}

Tape::Var Tape::mul(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  if (!A.same_shape(B)) throw std::invalid_argument("mul: shape mismatch");
  Mat out = A;
  for (size_t i = 0; i < out.size(); ++i) out.d[i] *= B.d[i];
  bool need = ng(a) || ng(b);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, b, s](Tape& t) {
      const Mat& go = t.g(s);
      if (t.ng(a)) for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i] * t.value(b).d[i];
      if (t.ng(b)) for (size_t i = 0; i < go.size(); ++i) t.g(b).d[i] += go.d[i] * t.value(a).d[i];
    };
  }
  return self;
}

Tape::Var Tape::add_rowvec(Var a, Var bias) {
  const Mat& A = value(a);
  const Mat& B = value(bias);
  if (B.rows != 1 || B.cols != A.cols) throw std::invalid_argument("add_rowvec: shape");
  Mat out = A;
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out(i, j) += B(0, j);
  bool need = ng(a) || ng(bias);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, bias, s](Tape& t) {
      const Mat& go = t.g(s);
      if (t.ng(a)) for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i];
      if (t.ng(bias)) {
        Mat& gb = t.g(bias);
        for (int i = 0; i < go.rows; ++i)
          for (int j = 0; j < go.cols; ++j) gb(0, j) += go(i, j);
      }
    };
  }
  return self;
}

Tape::Var Tape::sub_colvec(Var a, Var c) {
  const Mat& A = value(a);
  const Mat& C = value(c);
  if (C.cols != 1 || C.rows != A.rows) throw std::invalid_argument("sub_colvec: shape");
  Mat out = A;
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out(i, j) -= C(i, 0);
  bool need = ng(a) || ng(c);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, c, s](Tape& t) {
      const Mat& go = t.g(s);
      if (t.ng(a)) for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i];
      if (t.ng(c)) {
        Mat& gc = t.g(c);
        for (int i = 0; i < go.rows; ++i)
          for (int j = 0; j < go.cols; ++j) gc(i, 0) -= go(i, j);
      }
    };
  }
  return self;
}

Tape::Var Tape::mul_colvec(Var a, Var c) {
  const Mat& A = value(a);
  const Mat& C = value(c);
  if (C.cols != 1 || C.rows != A.rows) throw std::invalid_argument("mul_colvec: shape");
  Mat out = A;
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out(i, j) *= C(i, 0);
  bool need = ng(a) || ng(c);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, c, s](Tape& t) {
      const Mat& go = t.g(s);
      if (t.ng(a))
        for (int i = 0; i < go.rows; ++i)
          for (int j = 0; j < go.cols; ++j) t.g(a)(i, j) += go(i, j) * t.value(c)(i, 0);
      if (t.ng(c)) {
        Mat& gc = t.g(c);
        for (int i = 0; i < go.rows; ++i)
          for (int j = 0; j < go.cols; ++j) gc(i, 0) += go(i, j) * t.value(a)(i, j);
      }
    };
  }
  return self;
}

Tape::Var Tape::scale(Var a, double sfac) {
  Mat out = value(a);
  for (auto& x : out.d) x *= sfac;
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s, sfac](Tape& t) {
      const Mat& go = t.g(s);
      for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i] * sfac;
    };
  }
  return self;
}

Tape::Var Tape::shift(Var a, double sft) {
  Mat out = value(a);
  for (auto& x : out.d) x += sft;
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s](Tape& t) {
      const Mat& go = t.g(s);
      for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i];
    };
  }
  return self;
}

Tape::Var Tape::mul_const(Var a, const Mat& c) {
  const Mat& A = value(a);
  if (!A.same_shape(c)) throw std::invalid_argument("mul_const: shape mismatch");
  Mat out = A;
  for (size_t i = 0; i < out.size(); ++i) out.d[i] *= c.d[i];
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    Mat cc = c;
    nodes_[self].back = [a, s, cc](Tape& t) {
      const Mat& go = t.g(s);
      for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i] * cc.d[i];
    };
  }
  return self;
}

Tape::Var Tape::relu(Var a) {
  Mat out = value(a);
  for (auto& x : out.d) x = x > 0.0 ? x : 0.0;
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s](Tape& t) {
      const Mat& go = t.g(s);
      const Mat& av = t.value(a);
      for (size_t i = 0; i < go.size(); ++i)
        if (av.d[i] > 0.0) t.g(a).d[i] += go.d[i];
    };
  }
  return self;
}

Tape::Var Tape::tanh_(Var a) {
  Mat out = value(a);
  for (auto& x : out.d) x = std::tanh(x);
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s](Tape& t) {
      const Mat& go = t.g(s);
      const Mat& ov = t.value(s);
      for (size_t i = 0; i < go.size(); ++i)
        t.g(a).d[i] += go.d[i] * (1.0 - ov.d[i] * ov.d[i]);
    };
  }
  return self;
}

Tape::Var Tape::exp_(Var a) {
  Mat out = value(a);
  for (auto& x : out.d) x = std::exp(x);
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s](Tape& t) {
      const Mat& go = t.g(s);
      const Mat& ov = t.value(s);
      for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i] * ov.d[i];
    };
  }
  return self;
}

Tape::Var Tape::log_(Var a) {
  Mat out = value(a);
  for (auto& x : out.d) x = std::log(x);
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s](Tape& t) {
      const Mat& go = t.g(s);
      const Mat& av = t.value(a);
      for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i] / av.d[i];
    };
  }
  return self;
}

Tape::Var Tape::square(Var a) {
  Mat out = value(a);
  for (auto& x : out.d) x = x * x;
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s](Tape& t) {
      const Mat& go = t.g(s);
      const Mat& av = t.value(a);
      for (size_t i = 0; i < go.size(); ++i) t.g(a).d[i] += go.d[i] * 2.0 * av.d[i];
    };
  }
  return self;
}

Tape::Var Tape::clamp(Var a, double lo, double hi) {
  Mat out = value(a);
  for (auto& x : out.d) x = std::min(hi, std::max(lo, x));
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s, lo, hi](Tape& t) {
      const Mat& go = t.g(s);
      const Mat& av = t.value(a);
      for (size_t i = 0; i < go.size(); ++i)
        if (av.d[i] > lo && av.d[i] < hi) t.g(a).d[i] += go.d[i];
    };
  }
  return self;
}

Tape::Var Tape::slice_cols(Var a, int c0, int n) {
  const Mat& A = value(a);
  if (c0 < 0 || c0 + n > A.cols) throw std::invalid_argument("slice_cols: range");
  Mat out(A.rows, n);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = A(i, c0 + j);
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s, c0, n](Tape& t) {
      const Mat& go = t.g(s);
      Mat& ga = t.g(a);
      for (int i = 0; i < go.rows; ++i)
        for (int j = 0; j < n; ++j) ga(i, c0 + j) += go(i, j);
    };
  }
  return self;
}

Tape::Var Tape::concat_cols(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  if (A.rows != B.rows) throw std::invalid_argument("concat_cols: rows");
  Mat out(A.rows, A.cols + B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) out(i, j) = A(i, j);
    for (int j = 0; j < B.cols; ++j) out(i, A.cols + j) = B(i, j);
  }
  bool need = ng(a) || ng(b);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    int ac = A.cols;
    nodes_[self].back = [a, b, s, ac](Tape& t) {
      const Mat& go = t.g(s);
      if (t.ng(a)) {
        Mat& ga = t.g(a);
        for (int i = 0; i < go.rows; ++i)
          for (int j = 0; j < ac; ++j) ga(i, j) += go(i, j);
      }
      if (t.ng(b)) {
        Mat& gb = t.g(b);
        for (int i = 0; i < go.rows; ++i)
          for (int j = ac; j < go.cols; ++j) gb(i, j - ac) += go(i, j);
      }
    };
  }
  return self;
}

Tape::Var Tape::row_sum(Var a) {
  const Mat& A = value(a);
  Mat out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < A.cols; ++j) acc += A(i, j);
    out(i, 0) = acc;
  }
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s](Tape& t) {
      const Mat& go = t.g(s);
      Mat& ga = t.g(a);
      for (int i = 0; i < ga.rows; ++i)
        for (int j = 0; j < ga.cols; ++j) ga(i, j) += go(i, 0);
    };
  }
  return self;
}

Tape::Var Tape::sum_all(Var a) {
  const Mat& A = value(a);
  double acc = 0.0;
  for (double x : A.d) acc += x;
  Mat out(1, 1);
  out(0, 0) = acc;
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s](Tape& t) {
      double go = t.g(s)(0, 0);
      for (auto& x : t.g(a).d) x += go;
    };
  }
  return self;
}

Tape::Var Tape::mean_all(Var a) {
  const Mat& A = value(a);
  double n = static_cast<double>(A.size());
  double acc = 0.0;
  for (double x : A.d) acc += x;
  Mat out(1, 1);
  out(0, 0) = acc / n;
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s, n](Tape& t) {
      double go = t.g(s)(0, 0) / n;
      for (auto& x : t.g(a).d) x += go;
    };
  }
  return self;
}

Tape::Var Tape::logsumexp_rows(Var a) {
  const Mat& A = value(a);
  Mat out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    double m = A(i, 0);
    for (int j = 1; j < A.cols; ++j) m = std::max(m, A(i, j));
    double acc = 0.0;
    for (int j = 0; j < A.cols; ++j) acc += std::exp(A(i, j) - m);
    out(i, 0) = m + std::log(acc);
  }
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [a, s](Tape& t) {
      const Mat& go = t.g(s);
      const Mat& av = t.value(a);
      const Mat& ov = t.value(s);
      Mat& ga = t.g(a);
      for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < av.cols; ++j)
          ga(i, j) += go(i, 0) * std::exp(av(i, j) - ov(i, 0));
    };
  }
  return self;
}

Tape::Var Tape::gather_cols(Var a, const std::vector<int>& idx) {
  const Mat& A = value(a);
  if (static_cast<int>(idx.size()) != A.rows) throw std::invalid_argument("gather_cols: idx size");
  Mat out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    int j = idx[static_cast<size_t>(i)];
    if (j < 0 || j >= A.cols) throw std::invalid_argument("gather_cols: index out of range");
    out(i, 0) = A(i, j);
  }
  bool need = ng(a);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    std::vector<int> ix = idx;
    nodes_[self].back = [a, s, ix](Tape& t) {
      const Mat& go = t.g(s);
      Mat& ga = t.g(a);
      for (int i = 0; i < go.rows; ++i) ga(i, ix[static_cast<size_t>(i)]) += go(i, 0);
    };
  }
  return self;
}

Tape::Var Tape::expectile_sq(Var u, double rho) {
  const Mat& U = value(u);
  Mat out = U;
  for (auto& x : out.d) {
    double w = (x < 0.0) ? std::abs(rho - 1.0) : rho;
    x = w * x * x;
  }
  bool need = ng(u);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    nodes_[self].back = [u, s, rho](Tape& t) {
      const Mat& go = t.g(s);
      const Mat& uv = t.value(u);
      for (size_t i = 0; i < go.size(); ++i) {
        double w = (uv.d[i] < 0.0) ? std::abs(rho - 1.0) : rho;
        t.g(u).d[i] += go.d[i] * 2.0 * w * uv.d[i];
      }
    };
  }
  return self;
}

Tape::Var Tape::select_reduce(const std::vector<Var>& xs, int mode) {
  if (xs.empty()) throw std::invalid_argument("select_reduce: empty input");
  const Mat& first = value(xs[0]);
  for (Var v : xs)
    if (!value(v).same_shape(first)) throw std::invalid_argument("select_reduce: shape mismatch");
  const int K = static_cast<int>(xs.size());
  Mat out = first;
  std::vector<int> chosen(out.size());
  std::vector<std::pair<double, int>> vals(static_cast<size_t>(K));
  for (size_t i = 0; i < out.size(); ++i) {
    for (int k = 0; k < K; ++k) vals[static_cast<size_t>(k)] = {value(xs[static_cast<size_t>(k)]).d[i], k};
    std::sort(vals.begin(), vals.end());
    int pick = (mode == 0) ? 0 : (K - 1) / 2;  // min or lower median
    out.d[i] = vals[static_cast<size_t>(pick)].first;
    chosen[i] = vals[static_cast<size_t>(pick)].second;
  }
  bool need = false;
  for (Var v : xs) need = need || ng(v);
  Var self = push(std::move(out), need, nullptr);
  if (need) {
    Var s = self;
    std::vector<Var> parents = xs;
    nodes_[self].back = [parents, s, chosen](Tape& t) {
      const Mat& go = t.g(s);
      for (size_t i = 0; i < go.size(); ++i) {
        Var p = parents[static_cast<size_t>(chosen[i])];
        if (t.ng(p)) t.g(p).d[i] += go.d[i];
      }
    };
  }
  return self;
}

Tape::Var Tape::detach(Var a) { return leaf(value(a), false); }

void Tape::backward(Var scalar_loss) {
  const Mat& L = value(scalar_loss);
  if (L.rows != 1 || L.cols != 1) throw std::invalid_argument("backward: loss must be 1x1");
  if (!std::isfinite(L(0, 0))) throw std::runtime_error("backward: non-finite loss");
  nodes_[scalar_loss].grad(0, 0) = 1.0;
  for (Var v = scalar_loss; v >= 0; --v) {
    if (nodes_[v].needs_grad && nodes_[v].back) nodes_[v].back(*this);
  }
}

}  // namespace o2orl
