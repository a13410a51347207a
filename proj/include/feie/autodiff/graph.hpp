#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "feie/tensor.hpp"

namespace feie::autodiff {

/// The closed set of primitives. Layers and losses are compositions of these.
enum class Op {
  kParameter,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kDivOrZero,
  kScale,
  kMatmul,
  kTanh,
  kSigmoid,
  kSoftmax,
  kLog,
  kSqrt,
  kSum,
  kMean,
  kVariance,
  kCovariance,
  kConcat,
  kMask,
  kSelectRows,
};

std::string_view op_name(Op op);

/// Reduction extent: everything, or down each column (producing one row).
enum class Axis { kAll, kRows };

/// Floor applied to probabilities before taking a logarithm.
inline constexpr double kLogFloor = 1e-12;

using Bindings = TensorMap;
using Gradients = TensorMap;

class Graph;

/// Handle to a node of a Graph.
class Var {
 public:
  Var() = default;
  int id() const { return id_; }
  Graph& graph() const { return *graph_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}
  Graph* graph_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode differentiation over dense arrays.
///
/// Nodes are appended in construction order, which is therefore a valid
/// topological order; the graph cannot contain cycles. Parameter leaves are
/// looked up by name in the bindings passed to evaluate(); constants carry
/// their own value. Binary elementwise ops broadcast operands of extent 1
/// along rows and/or columns.
///
/// One graph is single-writer: evaluate() and backward() must not run
/// concurrently on the same instance.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var parameter(const std::string& name);
  Var constant(Tensor value, std::string label = {});
  Var constant(double value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  /// Elementwise a / b, with x / 0 defined as 0 (and zero gradient).
  Var div_or_zero(Var a, Var b);
  Var scale(Var a, double factor);
  /// a · b, or a · bᵀ when transpose_rhs is set.
  Var matmul(Var a, Var b, bool transpose_rhs = false);
  Var tanh(Var a);
  Var sigmoid(Var a);
  /// Row-wise softmax with max subtraction.
  Var softmax(Var a);
  /// log(max(a, kLogFloor)).
  Var log(Var a);
  Var sqrt(Var a);
  Var sum(Var a, Axis axis = Axis::kAll);
  Var mean(Var a, Axis axis = Axis::kAll);
  /// Population variance.
  Var variance(Var a, Axis axis = Axis::kRows);
  /// Population covariance of two same-shape operands.
  Var covariance(Var a, Var b, Axis axis = Axis::kRows);
  /// Column-wise concatenation of operands with equal row counts.
  Var concat(const std::vector<Var>& parts);
  /// Elementwise product with a fixed 0/1 (or real) array.
  Var mask(Var a, Tensor mask);
  Var select_rows(Var a, std::vector<std::size_t> rows);

  /// Attach a diagnostic label used in error messages.
  Var label(Var v, std::string text);

  /// Forward pass over every node reachable from root. Intermediate values
  /// are cached for backward().
  const Tensor& evaluate(Var root, const Bindings& bindings);

  /// Gradient of the (scalar) root of the last evaluate() with respect to
  /// every parameter leaf. Parameters that do not influence the root get
  /// exactly-zero arrays.
  Gradients backward();

  const Tensor& value(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::vector<std::string> parameter_names() const;
  std::string describe(int id) const;

 private:
  struct Node {
    Op op;
    std::vector<int> inputs;
    std::string label;
    Tensor payload;
    std::vector<std::size_t> indices;
    double factor = 0.0;
    Axis axis = Axis::kAll;
    bool transpose_rhs = false;
    bool requires_grad = false;
  };

  Var push(Node node);
  void check_owner(Var v) const;
  void forward_node(int id);
  void backward_node(int id, const Tensor& upstream);
  void accumulate(int id, const Tensor& contribution);

  std::vector<Node> nodes_;
  std::vector<Tensor> values_;
  std::vector<std::optional<Tensor>> grads_;
  std::vector<int> order_;
  std::map<std::string, Shape> param_shapes_;
  const Bindings* bindings_ = nullptr;
  int root_ = -1;
  int cached_root_ = -1;
};

inline Var operator+(Var a, Var b) { return a.graph().add(a, b); }
inline Var operator-(Var a, Var b) { return a.graph().sub(a, b); }
inline Var operator*(Var a, Var b) { return a.graph().mul(a, b); }
inline Var operator/(Var a, Var b) { return a.graph().div(a, b); }

/// Backward-rule corruption hook for exercising the gradient checker. Passing
/// an op makes its backward rule return a slightly wrong gradient; passing
/// nullopt restores correct behaviour. Process-wide; test use only.
void inject_backward_fault(std::optional<Op> op);

}  // namespace feie::autodiff
