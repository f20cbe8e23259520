// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace dds {

class Tape;

namespace detail {

// Node of the computation graph. Owns the values; when an op is recorded
// on a tape it also carries the parents and the rule that scatters the
// node's gradient into theirs.
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;
  bool reachable = false;  // scratch flag used by Tape::backward

  std::size_t size() const { return values.size(); }
  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

}  // namespace detail

// Dense row-major f64 array, rank 1 or 2, with optional participation in
// reverse-mode differentiation. Copying a Tensor copies the handle, not
// the storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double v,
                     bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->values.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return node_->values; }
  std::span<double> values_mut() { return node_->values; }
  double at(std::size_t i) const { return node_->values[i]; }
  double at(std::size_t r, std::size_t c) const {
    return node_->values[r * cols() + c];
  }
  double item() const;  // scalar access, throws NotScalar otherwise

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad() {
    if (node_) node_->grad.assign(node_->values.size(), 0.0);
  }

  detail::TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }

  static Tensor wrap(std::shared_ptr<detail::TensorNode> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// Records ops executed while it is the active tape for the current thread.
// Tapes nest (the innermost wins) and are strictly single-threaded; distinct
// threads use distinct tapes. Ops run with no active tape compute values
// only, which keeps inference reentrant.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Reverse sweep from a scalar loss recorded on this tape. Populates
  // grad on every requires_grad tensor reachable from the loss;
  // gradients accumulate additively across uses.
  void backward(const Tensor& loss);

  std::size_t recorded() const { return nodes_.size(); }

  static Tape* current();
  void record(std::shared_ptr<detail::TensorNode> node);

 private:
  std::vector<std::shared_ptr<detail::TensorNode>> nodes_;
  Tape* prev_ = nullptr;
};

// Masks the active tape for its lifetime; used for eval passes inside a
// training loop.
class NoGrad {
 public:
  NoGrad();
  ~NoGrad();
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;

 private:
  Tape* saved_;
};

// --- operations ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

// add/sub/mul accept identical shapes, or [m x n] combined with a rank-1
// [n] vector broadcast across rows. No other broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& x);
Tensor elu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor scale(const Tensor& x, double c);

// Each row mapped through a max-subtracted softmax.
Tensor softmax_rows(const Tensor& x);
// Softmax restricted to entries where mask is nonzero; masked-out entries
// are 0 in the result. Every row of the mask must have at least one
// nonzero entry. The mask itself never receives gradient.
Tensor masked_softmax_rows(const Tensor& x, const Tensor& mask);

// Reductions run over rows: a rank-1 vector collapses to a scalar while
// a matrix [m x n] becomes the per-column result [1 x n].
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Per-column max across rows -> [1 x n]. Gradient routes to the argmax
// row, first index on ties.
Tensor max_over_rows(const Tensor& x);
// Full reduction to a scalar regardless of rank.
Tensor sum_all(const Tensor& x);

Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t len);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
// out row i = x row indices[i]; backward scatter-adds into source rows.
Tensor gather_rows(const Tensor& x, std::vector<std::size_t> indices);
// out[i] = x[i, cols[i]] -> rank-1 [m].
Tensor pick(const Tensor& x, std::vector<std::size_t> cols);
Tensor reshape(const Tensor& x, std::vector<std::size_t> shape);

// Multiplies each graph block [n_g x n_g] with the matching row range of
// x; blocks are constants (never differentiated through).
Tensor block_diag_matmul(const std::vector<Tensor>& blocks,
                         const std::vector<std::pair<std::size_t, std::size_t>>& offsets,
                         const Tensor& x);

void backward(const Tensor& loss);  // forwards to the active tape

}  // namespace dds
