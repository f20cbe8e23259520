// SPDX-License-Identifier: Apache-2.0

#include "dds/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "dds/error.hpp"

namespace dds {

namespace {

thread_local Tape* g_active_tape = nullptr;

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw Error(ErrorCode::ShapeMismatch, "zero extent in shape");
    n *= e;
  }
  return n;
}

NodePtr make_node(std::vector<std::size_t> shape, std::vector<double> values,
                  bool requires_grad) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

// Records `node` as the result of an op over `parents` iff a tape is
// active and some parent participates in grad flow. Otherwise the result
// is a detached constant.
Tensor finish(NodePtr node, std::vector<NodePtr> parents,
              std::function<void(TensorNode&)> backward_fn) {
  Tape* tape = Tape::current();
  const bool any_grad =
      std::any_of(parents.begin(), parents.end(),
                  [](const NodePtr& p) { return p->requires_grad; });
  if (tape != nullptr && any_grad) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
    tape->record(node);
  }
  return Tensor::wrap(std::move(node));
}

[[noreturn]] void shape_error(const char* what) {
  throw Error(ErrorCode::ShapeMismatch, what);
}

void require_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) shape_error(what);
}

// out[m x n] += a[m x k] * b[k x n]
void mm_acc(const double* a, const double* b, double* out, std::size_t m,
            std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* orow = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out[k x n] += a^T[k x m] * g[m x n], a given as [m x k]
void mm_at_acc(const double* a, const double* g, double* out, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* grow = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* orow = out + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * grow[j];
    }
  }
}

// out[m x k] += g[m x n] * b^T[n x k], b given as [k x n]
void mm_bt_acc(const double* g, const double* b, double* out, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * n;
    double* orow = out + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
      orow[p] += s;
    }
  }
}

enum class Broadcast { same, row_vector_rhs, row_vector_lhs };

Broadcast broadcast_mode(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (a.rank() == 2 && b.rank() == 1 && b.shape()[0] == a.cols())
    return Broadcast::row_vector_rhs;
  if (b.rank() == 2 && a.rank() == 1 && a.shape()[0] == b.cols())
    return Broadcast::row_vector_lhs;
  shape_error("elementwise op needs equal shapes or a per-row vector");
}

Tensor binary_ew(const Tensor& a, const Tensor& b, double sign_b,
                 bool multiply) {
  const Broadcast mode = broadcast_mode(a, b);
  const Tensor& big = (mode == Broadcast::row_vector_lhs) ? b : a;
  std::vector<double> out(big.size());
  const auto av = a.values();
  const auto bv = b.values();
  const std::size_t n = big.size();
  const std::size_t w = (mode == Broadcast::same) ? 0 : big.cols();

  for (std::size_t i = 0; i < n; ++i) {
    double x = (mode == Broadcast::row_vector_lhs) ? av[i % w] : av[i];
    double y = (mode == Broadcast::row_vector_rhs) ? bv[i % w] : bv[i];
    out[i] = multiply ? x * y : x + sign_b * y;
  }

  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  auto node = make_node(big.shape(), std::move(out), false);
  return finish(
      node, {an, bn}, [an, bn, mode, sign_b, multiply, w](TensorNode& self) {
        const std::size_t n = self.size();
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            const double g =
                multiply
                    ? self.grad[i] * ((mode == Broadcast::row_vector_rhs)
                                          ? bn->values[i % w]
                                          : bn->values[i])
                    : self.grad[i];
            an->grad[(mode == Broadcast::row_vector_lhs) ? i % w : i] += g;
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            const double g =
                multiply
                    ? self.grad[i] * ((mode == Broadcast::row_vector_lhs)
                                          ? an->values[i % w]
                                          : an->values[i])
                    : sign_b * self.grad[i];
            bn->grad[(mode == Broadcast::row_vector_rhs) ? i % w : i] += g;
          }
        }
      });
}

template <typename Fwd, typename Dfn>
Tensor unary_ew(const Tensor& x, Fwd f, Dfn dfdx_from_xy) {
  std::vector<double> out(x.size());
  const auto xv = x.values();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(xv[i]);
  auto xn = x.node_ptr();
  auto node = make_node(x.shape(), std::move(out), false);
  return finish(node, {xn}, [xn, dfdx_from_xy](TensorNode& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i) {
      xn->grad[i] += self.grad[i] * dfdx_from_xy(xn->values[i], self.values[i]);
    }
  });
}

}  // namespace

// --- Tensor ---------------------------------------------------------------

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::size_t n = shape_product(shape);
  return wrap(make_node(std::move(shape), std::vector<double>(n, 0.0),
                        requires_grad));
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values,
                    bool requires_grad) {
  if (shape_product(shape) != values.size())
    shape_error("value count does not match shape");
  return wrap(make_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  std::size_t n = values.size();
  return from({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values, bool requires_grad) {
  return from({rows, cols}, std::move(values), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v,
                    bool requires_grad) {
  std::size_t n = shape_product(shape);
  return wrap(
      make_node(std::move(shape), std::vector<double>(n, v), requires_grad));
}

std::size_t Tensor::rows() const {
  return node_->shape.empty() ? 1 : node_->shape[0];
}

std::size_t Tensor::cols() const {
  return node_->shape.size() == 2 ? node_->shape[1] : 1;
}

double Tensor::item() const {
  if (size() != 1) throw Error(ErrorCode::NotScalar, "tensor is not scalar");
  return node_->values[0];
}

// --- Tape -----------------------------------------------------------------

Tape::Tape() : prev_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::current() { return g_active_tape; }

void Tape::record(std::shared_ptr<detail::TensorNode> node) {
  nodes_.push_back(std::move(node));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw Error(ErrorCode::NotScalar, "backward needs a scalar loss");
  TensorNode* ln = loss.node();
  const bool on_tape =
      std::any_of(nodes_.begin(), nodes_.end(),
                  [ln](const NodePtr& n) { return n.get() == ln; });
  if (!on_tape)
    throw std::logic_error("backward: loss was not recorded on this tape");

  for (auto& n : nodes_) n->reachable = false;
  ln->reachable = true;
  ln->ensure_grad();
  ln->grad[0] += 1.0;

  // Creation order is a topological order, so one reverse sweep suffices.
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    TensorNode& n = **it;
    if (!n.reachable) continue;
    for (auto& p : n.parents) p->reachable = true;
    if (n.backward_fn) n.backward_fn(n);
  }
}

void backward(const Tensor& loss) {
  Tape* tape = Tape::current();
  if (tape == nullptr)
    throw std::logic_error("backward: no active tape on this thread");
  tape->backward(loss);
}

NoGrad::NoGrad() : saved_(g_active_tape) { g_active_tape = nullptr; }

NoGrad::~NoGrad() { g_active_tape = saved_; }

// --- ops ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul expects rank-2 operands");
  require_rank2(b, "matmul expects rank-2 operands");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_error("matmul inner dimensions disagree");

  std::vector<double> out(m * n, 0.0);
  mm_acc(a.values().data(), b.values().data(), out.data(), m, k, n);

  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  auto node = make_node({m, n}, std::move(out), false);
  return finish(node, {an, bn}, [an, bn, m, k, n](TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      mm_bt_acc(self.grad.data(), bn->values.data(), an->grad.data(), m, k, n);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      mm_at_acc(an->values.data(), self.grad.data(), bn->grad.data(), m, k, n);
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary_ew(a, b, 1.0, false); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_ew(a, b, -1.0, false); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_ew(a, b, 1.0, true); }

Tensor relu(const Tensor& x) {
  return unary_ew(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor elu(const Tensor& x) {
  return unary_ew(
      x, [](double v) { return v > 0.0 ? v : std::expm1(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : std::exp(v); });
}

Tensor exp(const Tensor& x) {
  return unary_ew(
      x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary_ew(
      x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_ew(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor scale(const Tensor& x, double c) {
  return unary_ew(
      x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Tensor softmax_rows(const Tensor& x) {
  require_rank2(x, "softmax_rows expects a matrix");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  const auto xv = x.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      z += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  auto xn = x.node_ptr();
  auto node = make_node({m, n}, std::move(out), false);
  return finish(node, {xn}, [xn, m, n](TensorNode& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = self.values.data() + i * n;
      const double* g = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < n; ++j)
        xn->grad[i * n + j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor masked_softmax_rows(const Tensor& x, const Tensor& mask) {
  require_rank2(x, "masked_softmax_rows expects a matrix");
  if (x.shape() != mask.shape())
    shape_error("mask shape must match input shape");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n, 0.0);
  const auto xv = x.values();
  const auto mv = mask.values();
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (mv[i * n + j] != 0.0) mx = std::max(mx, xv[i * n + j]);
    if (mx == -std::numeric_limits<double>::infinity())
      throw Error(ErrorCode::ShapeMismatch,
                  "masked_softmax_rows: row with empty mask");
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mv[i * n + j] != 0.0) {
        out[i * n + j] = std::exp(xv[i * n + j] - mx);
        z += out[i * n + j];
      }
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  auto xn = x.node_ptr();
  auto node = make_node({m, n}, std::move(out), false);
  return finish(node, {xn, mask.node_ptr()}, [xn, m, n](TensorNode& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    // Masked-out entries have y = 0, so the softmax Jacobian handles
    // them without a separate branch.
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = self.values.data() + i * n;
      const double* g = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < n; ++j)
        xn->grad[i * n + j] += y[j] * (g[j] - dot);
    }
  });
}

namespace {

// Reduction over rows: rank-1 [n] -> scalar, rank-2 [m x n] -> [1 x n].
Tensor reduce_rows(const Tensor& x, bool take_mean) {
  const std::size_t m = x.rank() == 2 ? x.rows() : x.size();
  const std::size_t n = x.rank() == 2 ? x.cols() : 1;
  const double inv = take_mean ? 1.0 / static_cast<double>(m) : 1.0;
  std::vector<double> out(n, 0.0);
  const auto xv = x.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += xv[i * n + j];
  for (double& v : out) v *= inv;
  auto xn = x.node_ptr();
  auto node = make_node(x.rank() == 2 ? std::vector<std::size_t>{1, n}
                                      : std::vector<std::size_t>{1},
                        std::move(out), false);
  return finish(node, {xn}, [xn, m, n, inv](TensorNode& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        xn->grad[i * n + j] += self.grad[j] * inv;
  });
}

}  // namespace

Tensor sum(const Tensor& x) { return reduce_rows(x, false); }

Tensor mean(const Tensor& x) { return reduce_rows(x, true); }

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  auto xn = x.node_ptr();
  auto node = make_node({1}, {s}, false);
  return finish(node, {xn}, [xn](TensorNode& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (double& g : xn->grad) g += self.grad[0];
  });
}

Tensor max_over_rows(const Tensor& x) {
  require_rank2(x, "max_over_rows expects a matrix");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(n);
  auto argmax = std::make_shared<std::vector<std::size_t>>(n, 0);
  const auto xv = x.values();
  for (std::size_t j = 0; j < n; ++j) {
    double best = xv[j];
    std::size_t arg = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (xv[i * n + j] > best) {  // strict: first index wins ties
        best = xv[i * n + j];
        arg = i;
      }
    }
    out[j] = best;
    (*argmax)[j] = arg;
  }
  auto xn = x.node_ptr();
  auto node = make_node({1, n}, std::move(out), false);
  return finish(node, {xn}, [xn, argmax, n](TensorNode& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t j = 0; j < n; ++j)
      xn->grad[(*argmax)[j] * n + j] += self.grad[j];
  });
}

Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t len) {
  require_rank2(x, "slice_rows expects a matrix");
  if (len == 0 || start + len > x.rows())
    shape_error("slice_rows range out of bounds");
  const std::size_t n = x.cols();
  std::vector<double> out(x.values().begin() + start * n,
                          x.values().begin() + (start + len) * n);
  auto xn = x.node_ptr();
  auto node = make_node({len, n}, std::move(out), false);
  return finish(node, {xn}, [xn, start, n](TensorNode& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i)
      xn->grad[start * n + i] += self.grad[i];
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw Error(ErrorCode::EmptyBatch, "concat_rows of nothing");
  const std::size_t n = parts[0].cols();
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_rows expects matrices");
    if (p.cols() != n) shape_error("concat_rows column widths disagree");
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(total * n);
  std::vector<NodePtr> parents;
  parents.reserve(parts.size());
  for (const Tensor& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
    parents.push_back(p.node_ptr());
  }
  auto node = make_node({total, n}, std::move(out), false);
  auto parents_copy = parents;
  return finish(node, std::move(parents), [parents_copy](TensorNode& self) {
    std::size_t at = 0;
    for (const NodePtr& p : parents_copy) {
      const std::size_t len = p->values.size();
      if (p->requires_grad) {
        p->ensure_grad();
        for (std::size_t i = 0; i < len; ++i) p->grad[i] += self.grad[at + i];
      }
      at += len;
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw Error(ErrorCode::EmptyBatch, "concat_cols of nothing");
  const std::size_t m = parts[0].rows();
  std::size_t width = 0;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_cols expects matrices");
    if (p.rows() != m) shape_error("concat_cols row counts disagree");
    width += p.cols();
  }
  std::vector<double> out(m * width);
  std::vector<NodePtr> parents;
  std::vector<std::size_t> col_offsets;
  std::size_t at = 0;
  for (const Tensor& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j)
        out[i * width + at + j] = p.values()[i * w + j];
    parents.push_back(p.node_ptr());
    col_offsets.push_back(at);
    at += w;
  }
  auto node = make_node({m, width}, std::move(out), false);
  auto parents_copy = parents;
  return finish(node, std::move(parents),
                [parents_copy, col_offsets, m, width](TensorNode& self) {
                  for (std::size_t k = 0; k < parents_copy.size(); ++k) {
                    const NodePtr& p = parents_copy[k];
                    if (!p->requires_grad) continue;
                    p->ensure_grad();
                    const std::size_t w = p->shape[1];
                    const std::size_t off = col_offsets[k];
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t j = 0; j < w; ++j)
                        p->grad[i * w + j] += self.grad[i * width + off + j];
                  }
                });
}

Tensor gather_rows(const Tensor& x, std::vector<std::size_t> indices) {
  require_rank2(x, "gather_rows expects a matrix");
  if (indices.empty()) throw Error(ErrorCode::EmptyBatch, "gather_rows of nothing");
  const std::size_t n = x.cols();
  std::vector<double> out(indices.size() * n);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= x.rows()) shape_error("gather_rows index out of range");
    std::copy_n(x.values().data() + indices[i] * n, n, out.data() + i * n);
  }
  auto xn = x.node_ptr();
  auto idx = std::make_shared<std::vector<std::size_t>>(std::move(indices));
  auto node = make_node({idx->size(), n}, std::move(out), false);
  return finish(node, {xn}, [xn, idx, n](TensorNode& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < idx->size(); ++i)
      for (std::size_t j = 0; j < n; ++j)
        xn->grad[(*idx)[i] * n + j] += self.grad[i * n + j];
  });
}

Tensor pick(const Tensor& x, std::vector<std::size_t> cols) {
  require_rank2(x, "pick expects a matrix");
  if (cols.size() != x.rows())
    shape_error("pick needs one column index per row");
  const std::size_t n = x.cols();
  std::vector<double> out(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] >= n) shape_error("pick column index out of range");
    out[i] = x.values()[i * n + cols[i]];
  }
  auto xn = x.node_ptr();
  auto idx = std::make_shared<std::vector<std::size_t>>(std::move(cols));
  auto node = make_node({idx->size()}, std::move(out), false);
  return finish(node, {xn}, [xn, idx, n](TensorNode& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < idx->size(); ++i)
      xn->grad[i * n + (*idx)[i]] += self.grad[i];
  });
}

Tensor reshape(const Tensor& x, std::vector<std::size_t> shape) {
  if (shape_product(shape) != x.size())
    shape_error("reshape must preserve element count");
  auto xn = x.node_ptr();
  auto node = make_node(std::move(shape),
                        std::vector<double>(x.values().begin(), x.values().end()),
                        false);
  return finish(node, {xn}, [xn](TensorNode& self) {
    if (!xn->requires_grad) return;
    xn->ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i)
      xn->grad[i] += self.grad[i];
  });
}

Tensor block_diag_matmul(
    const std::vector<Tensor>& blocks,
    const std::vector<std::pair<std::size_t, std::size_t>>& offsets,
    const Tensor& x) {
  require_rank2(x, "block_diag_matmul expects a matrix");
  if (blocks.size() != offsets.size())
    shape_error("one block per row range required");
  std::size_t covered = 0;
  for (std::size_t g = 0; g < blocks.size(); ++g) {
    const auto [start, len] = offsets[g];
    if (start != covered) shape_error("offsets must partition the rows");
    if (blocks[g].rank() != 2 || blocks[g].rows() != len ||
        blocks[g].cols() != len)
      shape_error("block extent does not match its row range");
    covered += len;
  }
  if (covered != x.rows()) shape_error("offsets do not cover all rows");

  const std::size_t n = x.cols();
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t g = 0; g < blocks.size(); ++g) {
    const auto [start, len] = offsets[g];
    mm_acc(blocks[g].values().data(), x.values().data() + start * n,
           out.data() + start * n, len, len, n);
  }

  auto xn = x.node_ptr();
  std::vector<NodePtr> parents{xn};
  auto block_nodes = std::make_shared<std::vector<NodePtr>>();
  for (const Tensor& b : blocks) block_nodes->push_back(b.node_ptr());
  auto offs = std::make_shared<
      std::vector<std::pair<std::size_t, std::size_t>>>(offsets);
  auto node = make_node(x.shape(), std::move(out), false);
  return finish(node, std::move(parents),
                [xn, block_nodes, offs, n](TensorNode& self) {
                  if (!xn->requires_grad) return;
                  xn->ensure_grad();
                  for (std::size_t g = 0; g < block_nodes->size(); ++g) {
                    const auto [start, len] = (*offs)[g];
                    // dX = B^T * G per block
                    mm_at_acc((*block_nodes)[g]->values.data(),
                              self.grad.data() + start * n,
                              xn->grad.data() + start * n, len, len, n);
                  }
                });
}

}  // namespace dds
