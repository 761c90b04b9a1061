#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gdn/error.hpp"

namespace gdn {

// Dense row-major double tensor. Copies are aliasing handles (shared buffer);
// clone() makes a deep, detached copy. Gradients accumulate into grad() when
// the tensor takes part in ops recorded on the active Tape.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor eye(int n);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }

  // 2-D accessors; ops in this project are matrix-shaped. Tensor is a shared
  // handle, so mutating accessors are const-qualified (shared_ptr semantics).
  int rows() const { return impl_->shape[0]; }
  int cols() const { return impl_->shape.size() > 1 ? impl_->shape[1] : 1; }
  double& at(int r, int c) const { return impl_->data[static_cast<size_t>(r) * cols() + c]; }
  double item() const;

  std::vector<double>& data() const { return impl_->data; }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool v) const { impl_->requires_grad = v; }
  // Allocated (zero-filled) on first access.
  std::vector<double>& grad() const;
  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  void zero_grad() const;

  int tape_node() const { return impl_ ? impl_->tape_node : -1; }
  void set_tape_node(int n) const { impl_->tape_node = n; }

  Tensor clone() const;  // deep copy, detached from any tape

  bool same_buffer(const Tensor& o) const { return impl_ == o.impl_; }

 private:
  struct Impl {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    int tape_node = -1;
  };
  std::shared_ptr<Impl> impl_;
};

// Reverse-mode tape. Constructing a Tape makes it the active recorder for the
// current thread (stack discipline, restored on destruction). Recording and
// backward are single-threaded per tape.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  // Registers a backward rule; returns the node id.
  int record(std::function<void()> backward_rule);

  // Seeds d(loss)/d(loss)=1 and runs every recorded rule once, newest first.
  // loss must be a scalar recorded on this tape.
  void backward(const Tensor& loss);

  std::size_t size() const { return entries_.size(); }
  long backward_visits() const { return backward_visits_; }

 private:
  std::vector<std::function<void()>> entries_;
  long backward_visits_ = 0;
  Tape* prev_ = nullptr;
};

enum class Reduce { sum, mean, max };

// ---- elementwise / linear algebra (all record on the active tape) ----
// Binary ops broadcast b when it is a [1 x c] row, [r x 1] column, or
// [1 x 1] scalar against a's shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& a, std::vector<int> shape);

// ---- activations ----
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.2);
Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor sqrt_op(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
// Applies one of: identity | relu | leaky_relu | sigmoid | tanh
Tensor activation(const std::string& name, const Tensor& a);

// ---- gather / segment ops ----
Tensor gather_rows(const Tensor& m, const std::vector<int>& ids);
Tensor segment_reduce(const Tensor& m, const std::vector<int>& segment_ids,
                      int num_segments, Reduce mode,
                      std::vector<char>* empty_flags = nullptr);
Tensor segment_softmax(const Tensor& values, const std::vector<int>& segment_ids,
                       int num_segments);

// ---- reductions ----
Tensor sum_all(const Tensor& a);
Tensor row_sum(const Tensor& a);  // [r x c] -> [r x 1]

// ---- fused losses (numerically stabilized) ----
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);
Tensor bce_with_logits_sum(const Tensor& logits, const Tensor& targets);
// -sum [t ln p + (1-t) ln(1-p)] over all entries; probs in [0,1], logs
// guarded so a zero-weight term never produces NaN.
Tensor bernoulli_nll_sum(const Tensor& probs, const Tensor& targets);
Tensor row_entropy_mean(const Tensor& s);  // mean over rows of -sum p ln p

// Per-row matrix-vector product: e[i] reshaped row-major [out x in] applied
// to x[i] (in), giving [m x out]. Used by edge-conditioned aggregation.
Tensor rowwise_matvec(const Tensor& e, const Tensor& x, int out_dim);

// Runs reverse accumulation from a scalar loss on its tape.
void backward(const Tensor& loss);

// Central finite differences for every parameter entry against the analytic
// grads of f(); returns the max relative error. f must rebuild the loss from
// scratch on each call (it is evaluated off-tape for the perturbed passes).
double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                  double eps = 1e-4);

}  // namespace gdn
