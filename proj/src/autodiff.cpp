#include "b2m/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "b2m/error.hpp"

namespace b2m::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

thread_local bool g_grad_enabled = true;

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                   shape_str(b));
}

void require_2d(const char* op, const Tensor& t) {
  if (t.shape().size() != 2) {
    throw ShapeError(std::string(op) + ": expected a 2-D tensor, got " +
                     shape_str(t.shape()));
  }
}

bool any_tracked(std::initializer_list<const Tensor*> ts) {
  if (!g_grad_enabled) return false;
  for (const Tensor* t : ts) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<std::shared_ptr<Node>> inputs,
                   std::function<void(Node&)> backward_fn, bool tracked) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  node->is_leaf = false;
  if (tracked) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

// Applies f elementwise; df(x, y) is the local derivative given input x and
// output y.
template <typename F, typename DF>
Tensor unary(const char* op, const Tensor& x, F f, DF df) {
  std::vector<double> out(x.size());
  auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  const bool tracked = any_tracked({&x});
  auto xn = x.node();
  return make_result(
      op, x.shape(), std::move(out), {xn},
      [xn, df](Node& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          xn->grad[i] += self.grad[i] * df(xn->value[i], self.value[i]);
        }
      },
      tracked);
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (shape.empty() || numel(shape) != values.size()) {
    throw ShapeError("constant: shape " + shape_str(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::constant(Shape shape, double fill) {
  const std::size_t n = numel(shape);
  return constant(std::move(shape), std::vector<double>(n, fill));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

std::size_t Tensor::rows() const { return shape().size() == 2 ? shape()[0] : 1; }
std::size_t Tensor::cols() const { return shape().back(); }

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  }
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->value.at(r * cols() + c);
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return constant(shape(), node_->value); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_mismatch("add", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  auto an = a.node(), bn = b.node();
  return make_result(
      "add", a.shape(), std::move(out), {an, bn},
      [an, bn](Node& self) {
        for (Node* in : {an.get(), bn.get()}) {
          if (!in->requires_grad) continue;
          in->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
        }
      },
      any_tracked({&a, &b}));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_mismatch("sub", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  auto an = a.node(), bn = b.node();
  return make_result(
      "sub", a.shape(), std::move(out), {an, bn},
      [an, bn](Node& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
        }
      },
      any_tracked({&a, &b}));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_mismatch("mul", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  auto an = a.node(), bn = b.node();
  return make_result(
      "mul", a.shape(), std::move(out), {an, bn},
      [an, bn](Node& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            bn->grad[i] += self.grad[i] * an->value[i];
        }
      },
      any_tracked({&a, &b}));
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Tensor add_rowwise(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.cols();
  const bool b_ok = b.size() == n && (b.shape().size() == 1 || b.rows() == 1);
  if (!b_ok) shape_mismatch("add_rowwise", a.shape(), b.shape());
  const std::size_t rows = a.size() / n;
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += b.values()[c];
  auto an = a.node(), bn = b.node();
  return make_result(
      "add_rowwise", a.shape(), std::move(out), {an, bn},
      [an, bn, rows, n](Node& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < n; ++c) bn->grad[c] += self.grad[r * n + c];
        }
      },
      any_tracked({&a, &b}));
}

Tensor mul_constant(const Tensor& a, std::span<const double> mask) {
  if (mask.size() != a.size()) {
    shape_mismatch("mul_constant", a.shape(), Shape{mask.size()});
  }
  std::vector<double> m(mask.begin(), mask.end());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * m[i];
  auto an = a.node();
  return make_result(
      "mul_constant", a.shape(), std::move(out), {an},
      [an, m = std::move(m)](Node& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * m[i];
      },
      any_tracked({&a}));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d("matmul", a);
  require_2d("matmul", b);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) shape_mismatch("matmul", a.shape(), b.shape());
  std::vector<double> out(m * n);
  Map(out.data(), m, n).noalias() =
      MapC(a.values().data(), m, k) * MapC(b.values().data(), k, n);
  auto an = a.node(), bn = b.node();
  return make_result(
      "matmul", {m, n}, std::move(out), {an, bn},
      [an, bn, m, k, n](Node& self) {
        MapC g(self.grad.data(), m, n);
        if (an->requires_grad) {
          an->ensure_grad();
          Map(an->grad.data(), m, k).noalias() += g * MapC(bn->value.data(), k, n).transpose();
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          Map(bn->grad.data(), k, n).noalias() += MapC(an->value.data(), m, k).transpose() * g;
        }
      },
      any_tracked({&a, &b}));
}

Tensor transpose(const Tensor& a) {
  require_2d("transpose", a);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  Map(out.data(), n, m) = MapC(a.values().data(), m, n).transpose();
  auto an = a.node();
  return make_result(
      "transpose", {n, m}, std::move(out), {an},
      [an, m, n](Node& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        Map(an->grad.data(), m, n) += MapC(self.grad.data(), n, m).transpose();
      },
      any_tracked({&a}));
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_2d("concat", p);
  const Shape& first = parts.front().shape();
  const std::size_t fixed = first[1 - axis];
  std::size_t total = 0;
  bool tracked = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::vector<std::size_t> extents;
  for (const auto& p : parts) {
    if (p.shape()[1 - axis] != fixed) shape_mismatch("concat", first, p.shape());
    total += p.shape()[axis];
    extents.push_back(p.shape()[axis]);
    tracked = tracked || any_tracked({&p});
    inputs.push_back(p.node());
  }
  const std::size_t rows = axis == 0 ? total : fixed;
  const std::size_t cols = axis == 0 ? fixed : total;
  std::vector<double> out(rows * cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t pr = p.shape()[0], pc = p.shape()[1];
    for (std::size_t r = 0; r < pr; ++r)
      for (std::size_t c = 0; c < pc; ++c) {
        const std::size_t orow = axis == 0 ? r + offset : r;
        const std::size_t ocol = axis == 0 ? c : c + offset;
        out[orow * cols + ocol] = p.values()[r * pc + c];
      }
    offset += p.shape()[axis];
  }
  return make_result(
      "concat", {rows, cols}, std::move(out), inputs,
      [inputs, extents, axis, cols](Node& self) {
        std::size_t off = 0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          Node* in = inputs[i].get();
          if (in->requires_grad) {
            in->ensure_grad();
            const std::size_t pr = in->shape[0], pc = in->shape[1];
            for (std::size_t r = 0; r < pr; ++r)
              for (std::size_t c = 0; c < pc; ++c) {
                const std::size_t orow = axis == 0 ? r + off : r;
                const std::size_t ocol = axis == 0 ? c : c + off;
                in->grad[r * pc + c] += self.grad[orow * cols + ocol];
              }
          }
          off += extents[i];
        }
      },
      tracked);
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  require_2d("slice", a);
  if (axis > 1) throw ShapeError("slice: axis must be 0 or 1");
  if (begin >= end || end > a.shape()[axis]) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of bounds for shape " + shape_str(a.shape()));
  }
  const std::size_t in_cols = a.shape()[1];
  const std::size_t rows = axis == 0 ? end - begin : a.shape()[0];
  const std::size_t cols = axis == 0 ? in_cols : end - begin;
  const std::size_t r0 = axis == 0 ? begin : 0, c0 = axis == 0 ? 0 : begin;
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] = a.values()[(r + r0) * in_cols + c + c0];
  auto an = a.node();
  return make_result(
      "slice", {rows, cols}, std::move(out), {an},
      [an, rows, cols, r0, c0, in_cols](Node& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c)
            an->grad[(r + r0) * in_cols + c + c0] += self.grad[r * cols + c];
      },
      any_tracked({&a}));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape.empty() || numel(shape) != a.size()) shape_mismatch("reshape", a.shape(), shape);
  std::vector<double> out(a.values().begin(), a.values().end());
  auto an = a.node();
  return make_result(
      "reshape", std::move(shape), std::move(out), {an},
      [an](Node& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
      },
      any_tracked({&a}));
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x.values()[i] > 0.0)) {
      throw DomainError("log: non-positive input " + std::to_string(x.values()[i]) +
                        " at index " + std::to_string(i));
    }
  }
  return unary(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary(
      "leaky_relu", x, [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  auto xn = x.node();
  return make_result(
      "sum", {1}, {s}, {xn},
      [xn](Node& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (double& g : xn->grad) g += self.grad[0];
      },
      any_tracked({&x}));
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor logsumexp_rows(const Tensor& x) {
  require_2d("logsumexp_rows", x);
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = x.values().data() + r * cols;
    const double mx = *std::max_element(row, row + cols);
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += std::exp(row[c] - mx);
    out[r] = mx + std::log(acc);
  }
  auto xn = x.node();
  return make_result(
      "logsumexp_rows", {rows, 1}, std::move(out), {xn},
      [xn, rows, cols](Node& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            xn->grad[i] += self.grad[r] * std::exp(xn->value[i] - self.value[r]);
          }
      },
      any_tracked({&x}));
}

Tensor diagonal(const Tensor& x) {
  require_2d("diagonal", x);
  const std::size_t n = x.shape()[0];
  if (x.shape()[1] != n) shape_mismatch("diagonal", x.shape(), Shape{n, n});
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x.values()[i * n + i];
  auto xn = x.node();
  return make_result(
      "diagonal", {n, 1}, std::move(out), {xn},
      [xn, n](Node& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) xn->grad[i * n + i] += self.grad[i];
      },
      any_tracked({&x}));
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

std::vector<Node*> topological_order(const Tensor& root) {
  std::vector<Node*> order;
  if (!root.defined()) return order;
  std::unordered_set<Node*> visited;
  // Iterative post-order DFS; recursion depth would grow with sequence length.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;
  auto order = topological_order(loss);
  for (Node* n : order) {
    if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
  }
  Node* root = loss.node().get();
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
  for (Node* n : order) {
    if (!n->is_leaf) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

}  // namespace b2m::ad
