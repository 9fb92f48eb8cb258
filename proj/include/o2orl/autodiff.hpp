#pragma once

#include <functional>
#include <vector>

#include "o2orl/tensor.hpp"

namespace o2orl {

// Reverse-mode tape over Mat-valued nodes. One tape per loss evaluation; build
// the loss forward, call backward() on the final 1x1 node, then read gradients
// of the leaves that were created with needs_grad=true.
class Tape {
 public:
  using Var = int;

  Var leaf(Mat v, bool needs_grad = false);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);            // elementwise, same shape
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var add_rowvec(Var a, Var bias);  // bias 1xC broadcast over rows
  Var sub_colvec(Var a, Var c);     // c Bx1 broadcast over cols
  Var mul_colvec(Var a, Var c);
  Var scale(Var a, double s);
  Var shift(Var a, double s);
  Var mul_const(Var a, const Mat& c);  // elementwise by constant matrix
  Var relu(Var a);
  Var tanh_(Var a);
  Var exp_(Var a);
  Var log_(Var a);
  Var square(Var a);
  Var clamp(Var a, double lo, double hi);  // zero grad outside [lo, hi]
  Var slice_cols(Var a, int c0, int n);
  Var concat_cols(Var a, Var b);
  Var row_sum(Var a);      // BxC -> Bx1
  Var mean_all(Var a);     // -> 1x1
  Var sum_all(Var a);      // -> 1x1
  Var logsumexp_rows(Var a);              // BxC -> Bx1
  Var gather_cols(Var a, const std::vector<int>& idx);  // Bx1, a(i, idx[i])
  // |rho - 1(u<0)| * u^2 elementwise; the weight is piecewise constant and
  // treated as constant in the backward pass.
  Var expectile_sq(Var u, double rho);
  // Elementwise order-statistic over K same-shape inputs; gradient flows to
  // the selected element only. mode: 0 = min, 1 = lower median.
  Var select_reduce(const std::vector<Var>& xs, int mode);
  Var detach(Var a);

  const Mat& value(Var v) const { return nodes_[v].value; }
  const Mat& grad(Var v) const { return nodes_[v].grad; }

  void backward(Var scalar_loss);

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    std::function<void(Tape&)> back;  // accumulates into parents' grads
  };
  std::vector<Node> nodes_;

  Var push(Mat v, bool needs_grad, std::function<void(Tape&)> back);
  Mat& g(Var v) { return nodes_[v].grad; }
  bool ng(Var v) const { return nodes_[v].needs_grad; }
};

}  // namespace o2orl
