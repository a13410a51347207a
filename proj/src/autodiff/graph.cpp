#include "feie/autodiff/graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <utility>

#include "feie/error.hpp"

namespace feie::autodiff {

namespace {

std::atomic<int> g_faulty_op{-1};

bool is_faulty(Op op) { return g_faulty_op.load(std::memory_order_relaxed) == static_cast<int>(op); }

struct Broadcast {
  std::size_t rows, cols;
  std::size_t a_rows, a_cols, b_rows, b_cols;
  std::size_t a_index(std::size_t r, std::size_t c) const {
    return (a_rows == 1 ? 0 : r) * a_cols + (a_cols == 1 ? 0 : c);
  }
  std::size_t b_index(std::size_t r, std::size_t c) const {
    return (b_rows == 1 ? 0 : r) * b_cols + (b_cols == 1 ? 0 : c);
  }
};

bool extent_compatible(std::size_t x, std::size_t y) { return x == y || x == 1 || y == 1; }

struct Groups {
  std::size_t count;   // number of independent reductions
  std::size_t length;  // elements per reduction
  std::size_t stride;  // distance between consecutive elements of one reduction
  std::size_t index(std::size_t g, std::size_t k) const {
    return stride == 1 ? g * length + k : k * stride + g;
  }
};

Groups groups_for(const Tensor& t, Axis axis) {
  if (axis == Axis::kAll) return {1, t.size(), 1};
  return {t.cols(), t.rows(), t.cols()};
}

Shape reduced_shape(const Tensor& t, Axis axis) {
  if (axis == Axis::kAll) return {1};
  return {1, t.cols()};
}

}  // namespace

void inject_backward_fault(std::optional<Op> op) {
  g_faulty_op.store(op ? static_cast<int>(*op) : -1, std::memory_order_relaxed);
}

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kParameter: return "parameter";
    case Op::kConstant: return "constant";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kDivOrZero: return "div_or_zero";
    case Op::kScale: return "scale";
    case Op::kMatmul: return "matmul";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSoftmax: return "softmax";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kVariance: return "variance";
    case Op::kCovariance: return "covariance";
    case Op::kConcat: return "concat";
    case Op::kMask: return "mask";
    case Op::kSelectRows: return "select_rows";
  }
  return "unknown";
}

Var Graph::push(Node node) {
  for (int in : node.inputs) {
    if (nodes_[static_cast<std::size_t>(in)].requires_grad) node.requires_grad = true;
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Graph::check_owner(Var v) const {
  if (v.graph_ != this || v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size()) {
    throw Error("variable does not belong to this graph");
  }
}

Var Graph::parameter(const std::string& name) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op == Op::kParameter && nodes_[i].label == name) {
      return Var(this, static_cast<int>(i));
    }
  }
  Node n{Op::kParameter, {}, name, Tensor(), {}, 0.0, Axis::kAll, false, true};
  return push(std::move(n));
}

Var Graph::constant(Tensor value, std::string label) {
  Node n{Op::kConstant, {}, std::move(label), std::move(value), {}, 0.0, Axis::kAll, false, false};
  return push(std::move(n));
}

Var Graph::constant(double value) { return constant(Tensor::scalar(value)); }

#define FEIE_UNARY(method, op)                      \
  Var Graph::method(Var a) {                        \
    check_owner(a);                                 \
    Node n{op, {a.id_}, {}, Tensor(), {}, 0.0, Axis::kAll, false, false}; \
    return push(std::move(n));                      \
  }

#define FEIE_BINARY(method, op)                     \
  Var Graph::method(Var a, Var b) {                 \
    check_owner(a);                                 \
    check_owner(b);                                 \
    Node n{op, {a.id_, b.id_}, {}, Tensor(), {}, 0.0, Axis::kAll, false, false}; \
    return push(std::move(n));                      \
  }

FEIE_BINARY(add, Op::kAdd)
FEIE_BINARY(sub, Op::kSub)
FEIE_BINARY(mul, Op::kMul)
FEIE_BINARY(div, Op::kDiv)
FEIE_BINARY(div_or_zero, Op::kDivOrZero)
FEIE_UNARY(tanh, Op::kTanh)
FEIE_UNARY(sigmoid, Op::kSigmoid)
FEIE_UNARY(softmax, Op::kSoftmax)
FEIE_UNARY(log, Op::kLog)
FEIE_UNARY(sqrt, Op::kSqrt)

#undef FEIE_UNARY
#undef FEIE_BINARY

Var Graph::scale(Var a, double factor) {
  check_owner(a);
  Node n{Op::kScale, {a.id_}, {}, Tensor(), {}, factor, Axis::kAll, false, false};
  return push(std::move(n));
}

Var Graph::matmul(Var a, Var b, bool transpose_rhs) {
  check_owner(a);
  check_owner(b);
  Node n{Op::kMatmul, {a.id_, b.id_}, {}, Tensor(), {}, 0.0, Axis::kAll, transpose_rhs, false};
  return push(std::move(n));
}

Var Graph::sum(Var a, Axis axis) {
  check_owner(a);
  Node n{Op::kSum, {a.id_}, {}, Tensor(), {}, 0.0, axis, false, false};
  return push(std::move(n));
}

Var Graph::mean(Var a, Axis axis) {
  check_owner(a);
  Node n{Op::kMean, {a.id_}, {}, Tensor(), {}, 0.0, axis, false, false};
  return push(std::move(n));
}

Var Graph::variance(Var a, Axis axis) {
  check_owner(a);
  Node n{Op::kVariance, {a.id_}, {}, Tensor(), {}, 0.0, axis, false, false};
  return push(std::move(n));
}

Var Graph::covariance(Var a, Var b, Axis axis) {
  check_owner(a);
  check_owner(b);
  Node n{Op::kCovariance, {a.id_, b.id_}, {}, Tensor(), {}, 0.0, axis, false, false};
  return push(std::move(n));
}

Var Graph::concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat of zero operands");
  Node n{Op::kConcat, {}, {}, Tensor(), {}, 0.0, Axis::kAll, false, false};
  for (Var p : parts) {
    check_owner(p);
    n.inputs.push_back(p.id_);
  }
  return push(std::move(n));
}

Var Graph::mask(Var a, Tensor mask) {
  check_owner(a);
  Node n{Op::kMask, {a.id_}, {}, std::move(mask), {}, 0.0, Axis::kAll, false, false};
  return push(std::move(n));
}

Var Graph::select_rows(Var a, std::vector<std::size_t> rows) {
  check_owner(a);
  if (rows.empty()) throw ShapeError("select_rows with no rows");
  Node n{Op::kSelectRows, {a.id_}, {}, Tensor(), std::move(rows), 0.0, Axis::kAll, false, false};
  return push(std::move(n));
}

Var Graph::label(Var v, std::string text) {
  check_owner(v);
  auto& node = nodes_[static_cast<std::size_t>(v.id_)];
  if (node.op != Op::kParameter) node.label = std::move(text);
  return v;
}

std::string Graph::describe(int id) const {
  const auto& n = nodes_.at(static_cast<std::size_t>(id));
  std::string s = "node " + std::to_string(id) + " (" + std::string(op_name(n.op));
  if (!n.label.empty()) s += " '" + n.label + "'";
  return s + ")";
}

std::vector<std::string> Graph::parameter_names() const {
  std::vector<std::string> names;
  for (const auto& n : nodes_) {
    if (n.op == Op::kParameter) names.push_back(n.label);
  }
  std::sort(names.begin(), names.end());
  return names;
}

const Tensor& Graph::value(Var v) const {
  check_owner(v);
  return values_.at(static_cast<std::size_t>(v.id_));
}

const Tensor& Graph::evaluate(Var root, const Bindings& bindings) {
  check_owner(root);
  if (cached_root_ != root.id_ || values_.size() != nodes_.size()) {
    std::vector<char> reach(nodes_.size(), 0);
    std::vector<int> stack{root.id_};
    reach[static_cast<std::size_t>(root.id_)] = 1;
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      for (int in : nodes_[static_cast<std::size_t>(id)].inputs) {
        if (!reach[static_cast<std::size_t>(in)]) {
          reach[static_cast<std::size_t>(in)] = 1;
          stack.push_back(in);
        }
      }
    }
    order_.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (reach[i]) order_.push_back(static_cast<int>(i));
    }
    values_.assign(nodes_.size(), Tensor());
    cached_root_ = root.id_;
  }
  root_ = root.id_;
  bindings_ = &bindings;
  for (int id : order_) forward_node(id);
  bindings_ = nullptr;
  grads_.clear();
  param_shapes_.clear();
  for (const auto& n : nodes_) {
    if (n.op != Op::kParameter) continue;
    if (auto it = bindings.find(n.label); it != bindings.end()) {
      param_shapes_[n.label] = it->second.shape();
    }
  }
  return values_[static_cast<std::size_t>(root_)];
}

void Graph::forward_node(int id) {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  Tensor& out = values_[static_cast<std::size_t>(id)];
  auto in = [&](std::size_t k) -> const Tensor& {
    return values_[static_cast<std::size_t>(n.inputs[k])];
  };
  auto fail = [&](const std::string& what) {
    throw ShapeError(describe(id) + ": " + what);
  };

  switch (n.op) {
    case Op::kParameter: {
      auto it = bindings_->find(n.label);
      if (it == bindings_->end()) fail("no binding for parameter");
      out = it->second;
      break;
    }
    case Op::kConstant:
      out = n.payload;
      break;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
    case Op::kDivOrZero: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (!extent_compatible(a.rows(), b.rows()) || !extent_compatible(a.cols(), b.cols())) {
        fail("cannot broadcast " + a.shape_string() + " with " + b.shape_string());
      }
      Broadcast bc{std::max(a.rows(), b.rows()), std::max(a.cols(), b.cols()),
                   a.rows(), a.cols(), b.rows(), b.cols()};
      Shape shape;
      if (a.same_shape(b)) {
        shape = a.shape();
      } else if (a.rows() == bc.rows && a.cols() == bc.cols) {
        shape = a.shape();
      } else if (b.rows() == bc.rows && b.cols() == bc.cols) {
        shape = b.shape();
      } else {
        shape = {bc.rows, bc.cols};
      }
      out = Tensor(shape);
      for (std::size_t r = 0; r < bc.rows; ++r) {
        for (std::size_t c = 0; c < bc.cols; ++c) {
          const double x = a[bc.a_index(r, c)];
          const double y = b[bc.b_index(r, c)];
          double v = 0.0;
          switch (n.op) {
            case Op::kAdd: v = x + y; break;
            case Op::kSub: v = x - y; break;
            case Op::kMul: v = x * y; break;
            case Op::kDiv: v = x / y; break;
            default: v = (y == 0.0) ? 0.0 : x / y; break;
          }
          out[r * bc.cols + c] = v;
        }
      }
      break;
    }
    case Op::kScale: {
      out = in(0);
      for (double& v : out.values()) v *= n.factor;
      break;
    }
    case Op::kMatmul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const std::size_t m = a.rows(), k = a.cols();
      const std::size_t bk = n.transpose_rhs ? b.cols() : b.rows();
      const std::size_t nn = n.transpose_rhs ? b.rows() : b.cols();
      if (k != bk) {
        fail("inner extents differ: " + a.shape_string() + " x " + b.shape_string() +
             (n.transpose_rhs ? "^T" : ""));
      }
      out = Tensor({m, nn});
      double* o = out.values().data();
      const double* pa = a.values().data();
      const double* pb = b.values().data();
      if (n.transpose_rhs) {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < nn; ++j) {
            double s = 0.0;
            for (std::size_t q = 0; q < k; ++q) s += pa[i * k + q] * pb[j * k + q];
            o[i * nn + j] = s;
          }
        }
      } else {
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t q = 0; q < k; ++q) {
            const double av = pa[i * k + q];
            const double* brow = pb + q * nn;
            double* orow = o + i * nn;
            for (std::size_t j = 0; j < nn; ++j) orow[j] += av * brow[j];
          }
        }
      }
      break;
    }
    case Op::kTanh:
      out = in(0);
      for (double& v : out.values()) v = std::tanh(v);
      break;
    case Op::kSigmoid:
      out = in(0);
      for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Op::kSoftmax: {
      out = in(0);
      const std::size_t rows = out.rows(), cols = out.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.values().data() + r * cols;
        const double mx = *std::max_element(row, row + cols);
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          row[c] = std::exp(row[c] - mx);
          total += row[c];
        }
        for (std::size_t c = 0; c < cols; ++c) row[c] /= total;
      }
      break;
    }
    case Op::kLog:
      out = in(0);
      for (double& v : out.values()) v = std::log(std::max(v, kLogFloor));
      break;
    case Op::kSqrt:
      out = in(0);
      for (double& v : out.values()) v = std::sqrt(v);
      break;
    case Op::kSum:
    case Op::kMean: {
      const Tensor& a = in(0);
      const Groups g = groups_for(a, n.axis);
      out = Tensor(reduced_shape(a, n.axis));
      for (std::size_t gi = 0; gi < g.count; ++gi) {
        double s = 0.0;
        for (std::size_t k = 0; k < g.length; ++k) s += a[g.index(gi, k)];
        out[gi] = n.op == Op::kMean ? s / static_cast<double>(g.length) : s;
      }
      break;
    }
    case Op::kVariance: {
      const Tensor& a = in(0);
      const Groups g = groups_for(a, n.axis);
      out = Tensor(reduced_shape(a, n.axis));
      const double len = static_cast<double>(g.length);
      for (std::size_t gi = 0; gi < g.count; ++gi) {
        double m = 0.0;
        for (std::size_t k = 0; k < g.length; ++k) m += a[g.index(gi, k)];
        m /= len;
        double s = 0.0;
        for (std::size_t k = 0; k < g.length; ++k) {
          const double d = a[g.index(gi, k)] - m;
          s += d * d;
        }
        out[gi] = s / len;
      }
      break;
    }
    case Op::kCovariance: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail("covariance operands differ: " + a.shape_string() + " vs " + b.shape_string());
      }
      const Groups g = groups_for(a, n.axis);
      out = Tensor(reduced_shape(a, n.axis));
      const double len = static_cast<double>(g.length);
      for (std::size_t gi = 0; gi < g.count; ++gi) {
        double ma = 0.0, mb = 0.0;
        for (std::size_t k = 0; k < g.length; ++k) {
          ma += a[g.index(gi, k)];
          mb += b[g.index(gi, k)];
        }
        ma /= len;
        mb /= len;
        double s = 0.0;
        for (std::size_t k = 0; k < g.length; ++k) {
          s += (a[g.index(gi, k)] - ma) * (b[g.index(gi, k)] - mb);
        }
        out[gi] = s / len;
      }
      break;
    }
    case Op::kConcat: {
      const std::size_t rows = in(0).rows();
      std::size_t cols = 0;
      for (std::size_t p = 0; p < n.inputs.size(); ++p) {
        if (in(p).rows() != rows) {
          fail("row count mismatch in operand " + std::to_string(p) + ": " +
               in(p).shape_string());
        }
        cols += in(p).cols();
      }
      out = Tensor({rows, cols});
      std::size_t offset = 0;
      for (std::size_t p = 0; p < n.inputs.size(); ++p) {
        const Tensor& part = in(p);
        const std::size_t pc = part.cols();
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(part.values().data() + r * pc, pc, out.values().data() + r * cols + offset);
        }
        offset += pc;
      }
      break;
    }
    case Op::kMask: {
      const Tensor& a = in(0);
      if (a.size() != n.payload.size() || a.cols() != n.payload.cols()) {
        fail("mask shape " + n.payload.shape_string() + " does not match " + a.shape_string());
      }
      out = a;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= n.payload[i];
      break;
    }
    case Op::kSelectRows: {
      const Tensor& a = in(0);
      const std::size_t cols = a.cols();
      out = Tensor({n.indices.size(), cols});
      for (std::size_t i = 0; i < n.indices.size(); ++i) {
        if (n.indices[i] >= a.rows()) {
          fail("row index " + std::to_string(n.indices[i]) + " out of range for " +
               a.shape_string());
        }
        std::copy_n(a.values().data() + n.indices[i] * cols, cols, out.values().data() + i * cols);
      }
      break;
    }
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) {
      throw NumericError(describe(id) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

void Graph::accumulate(int id, const Tensor& contribution) {
  auto& slot = grads_[static_cast<std::size_t>(id)];
  if (!slot) {
    slot = contribution;
    return;
  }
  for (std::size_t i = 0; i < contribution.size(); ++i) (*slot)[i] += contribution[i];
}

Gradients Graph::backward() {
  if (root_ < 0 || values_.size() != nodes_.size()) {
    throw Error("backward() called before evaluate()");
  }
  const Tensor& root_value = values_[static_cast<std::size_t>(root_)];
  if (root_value.size() != 1) {
    throw ShapeError("backward() needs a scalar root, got " + root_value.shape_string());
  }
  grads_.assign(nodes_.size(), std::nullopt);
  grads_[static_cast<std::size_t>(root_)] = Tensor(root_value.shape(), 1.0);
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    const int id = *it;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.op == Op::kParameter || n.op == Op::kConstant) continue;
    auto& g = grads_[static_cast<std::size_t>(id)];
    if (!g) continue;
    Tensor upstream = std::move(*g);
    g.reset();
    if (is_faulty(n.op)) {
      for (double& v : upstream.values()) v *= 1.01;
    }
    backward_node(id, upstream);
  }

  Gradients result;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.op != Op::kParameter) continue;
    if (grads_[i]) {
      result[n.label] = *grads_[i];
    } else if (auto s = param_shapes_.find(n.label); s != param_shapes_.end()) {
      result[n.label] = Tensor(s->second, 0.0);
    }
  }
  return result;
}

void Graph::backward_node(int id, const Tensor& g) {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  const Tensor& out = values_[static_cast<std::size_t>(id)];
  auto in_id = [&](std::size_t k) { return n.inputs[k]; };
  auto in = [&](std::size_t k) -> const Tensor& {
    return values_[static_cast<std::size_t>(n.inputs[k])];
  };
  auto wants = [&](std::size_t k) {
    return nodes_[static_cast<std::size_t>(n.inputs[k])].requires_grad;
  };

  switch (n.op) {
    case Op::kParameter:
    case Op::kConstant:
      return;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
    case Op::kDivOrZero: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      Broadcast bc{std::max(a.rows(), b.rows()), std::max(a.cols(), b.cols()),
                   a.rows(), a.cols(), b.rows(), b.cols()};
      Tensor ga(a.shape(), 0.0), gb(b.shape(), 0.0);
      for (std::size_t r = 0; r < bc.rows; ++r) {
        for (std::size_t c = 0; c < bc.cols; ++c) {
          const std::size_t ia = bc.a_index(r, c), ib = bc.b_index(r, c);
          const double up = g[r * bc.cols + c];
          const double x = a[ia], y = b[ib];
          switch (n.op) {
            case Op::kAdd: ga[ia] += up; gb[ib] += up; break;
            case Op::kSub: ga[ia] += up; gb[ib] -= up; break;
            case Op::kMul: ga[ia] += up * y; gb[ib] += up * x; break;
            default:
              if (n.op == Op::kDivOrZero && y == 0.0) break;
              ga[ia] += up / y;
              gb[ib] -= up * x / (y * y);
              break;
          }
        }
      }
      if (wants(0)) accumulate(in_id(0), ga);
      if (wants(1)) accumulate(in_id(1), gb);
      return;
    }
    case Op::kScale: {
      Tensor ga = g;
      for (double& v : ga.values()) v *= n.factor;
      accumulate(in_id(0), ga);
      return;
    }
    case Op::kMatmul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const std::size_t m = a.rows(), k = a.cols();
      const std::size_t nn = out.cols();
      const double* pa = a.values().data();
      const double* pb = b.values().data();
      const double* pg = g.values().data();
      if (wants(0)) {
        Tensor ga(a.shape(), 0.0);
        double* o = ga.values().data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < nn; ++j) {
            const double gv = pg[i * nn + j];
            if (gv == 0.0) continue;
            for (std::size_t q = 0; q < k; ++q) {
              o[i * k + q] += gv * (n.transpose_rhs ? pb[j * k + q] : pb[q * nn + j]);
            }
          }
        }
        accumulate(in_id(0), ga);
      }
      if (wants(1)) {
        Tensor gb(b.shape(), 0.0);
        double* o = gb.values().data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t q = 0; q < k; ++q) {
            const double av = pa[i * k + q];
            for (std::size_t j = 0; j < nn; ++j) {
              if (n.transpose_rhs) {
                o[j * k + q] += pg[i * nn + j] * av;
              } else {
                o[q * nn + j] += av * pg[i * nn + j];
              }
            }
          }
        }
        accumulate(in_id(1), gb);
      }
      return;
    }
    case Op::kTanh: {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= 1.0 - out[i] * out[i];
      accumulate(in_id(0), ga);
      return;
    }
    case Op::kSigmoid: {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= out[i] * (1.0 - out[i]);
      accumulate(in_id(0), ga);
      return;
    }
    case Op::kSoftmax: {
      Tensor ga = g;
      const std::size_t rows = out.rows(), cols = out.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * out[r * cols + c];
        for (std::size_t c = 0; c < cols; ++c) {
          ga[r * cols + c] = out[r * cols + c] * (g[r * cols + c] - dot);
        }
      }
      accumulate(in_id(0), ga);
      return;
    }
    case Op::kLog: {
      const Tensor& a = in(0);
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = a[i] > kLogFloor ? ga[i] / a[i] : 0.0;
      accumulate(in_id(0), ga);
      return;
    }
    case Op::kSqrt: {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = out[i] > 0.0 ? ga[i] * 0.5 / out[i] : 0.0;
      accumulate(in_id(0), ga);
      return;
    }
    case Op::kSum:
    case Op::kMean: {
      const Tensor& a = in(0);
      const Groups gr = groups_for(a, n.axis);
      Tensor ga(a.shape(), 0.0);
      const double f = n.op == Op::kMean ? 1.0 / static_cast<double>(gr.length) : 1.0;
      for (std::size_t gi = 0; gi < gr.count; ++gi) {
        for (std::size_t k = 0; k < gr.length; ++k) ga[gr.index(gi, k)] = g[gi] * f;
      }
      accumulate(in_id(0), ga);
      return;
    }
    case Op::kVariance: {
      const Tensor& a = in(0);
      const Groups gr = groups_for(a, n.axis);
      Tensor ga(a.shape(), 0.0);
      const double len = static_cast<double>(gr.length);
      for (std::size_t gi = 0; gi < gr.count; ++gi) {
        double m = 0.0;
        for (std::size_t k = 0; k < gr.length; ++k) m += a[gr.index(gi, k)];
        m /= len;
        for (std::size_t k = 0; k < gr.length; ++k) {
          const std::size_t idx = gr.index(gi, k);
          ga[idx] = g[gi] * 2.0 * (a[idx] - m) / len;
        }
      }
      accumulate(in_id(0), ga);
      return;
    }
    case Op::kCovariance: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const Groups gr = groups_for(a, n.axis);
      Tensor ga(a.shape(), 0.0), gb(b.shape(), 0.0);
      const double len = static_cast<double>(gr.length);
      for (std::size_t gi = 0; gi < gr.count; ++gi) {
        double ma = 0.0, mb = 0.0;
        for (std::size_t k = 0; k < gr.length; ++k) {
          ma += a[gr.index(gi, k)];
          mb += b[gr.index(gi, k)];
        }
        ma /= len;
        mb /= len;
        for (std::size_t k = 0; k < gr.length; ++k) {
          const std::size_t idx = gr.index(gi, k);
          ga[idx] = g[gi] * (b[idx] - mb) / len;
          gb[idx] = g[gi] * (a[idx] - ma) / len;
        }
      }
      if (wants(0)) accumulate(in_id(0), ga);
      if (wants(1)) accumulate(in_id(1), gb);
      return;
    }
    case Op::kConcat: {
      const std::size_t rows = out.rows(), cols = out.cols();
      std::size_t offset = 0;
      for (std::size_t p = 0; p < n.inputs.size(); ++p) {
        const Tensor& part = in(p);
        const std::size_t pc = part.cols();
        if (wants(p)) {
          Tensor gp(part.shape(), 0.0);
          for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(g.values().data() + r * cols + offset, pc, gp.values().data() + r * pc);
          }
          accumulate(in_id(p), gp);
        }
        offset += pc;
      }
      return;
    }
    case Op::kMask: {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= n.payload[i];
      accumulate(in_id(0), ga);
      return;
    }
    case Op::kSelectRows: {
      const Tensor& a = in(0);
      const std::size_t cols = a.cols();
      Tensor ga(a.shape(), 0.0);
      for (std::size_t i = 0; i < n.indices.size(); ++i) {
        for (std::size_t c = 0; c < cols; ++c) ga[n.indices[i] * cols + c] += g[i * cols + c];
      }
      accumulate(in_id(0), ga);
      return;
    }
  }
}

}  // namespace feie::autodiff
