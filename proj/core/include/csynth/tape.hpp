#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csynth/params.hpp"
#include "csynth/tensor.hpp"

namespace csynth::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;

  [[nodiscard]] const Tensor& value() const;
  [[nodiscard]] std::size_t rows() const { return value().rows(); }
  [[nodiscard]] std::size_t cols() const { return value().cols(); }
  [[nodiscard]] double item() const;
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }
  [[nodiscard]] std::size_t id() const noexcept { return id_; }
  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// The fixed op vocabulary. Every op has a hand-written backward rule in tape.cpp.
enum class Op {
  kConstant,
  kInput,
  kParam,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddScalar,
  kTanh,
  kSigmoid,
  kRelu,
  kSoftplus,
  kExp,
  kLog,
  kSqrt,
  kSum,
  kMean,
  kSumRows,
  kSumCols,
  kSliceCols,
  kGatherRows,
  kConcatCols,
  kTranspose,
  kRowOuter,
};

[[nodiscard]] std::string_view op_name(Op op) noexcept;

/// Parameter gradients keyed by parameter name.
class Gradients {
 public:
  void set(const std::string& name, Tensor grad) { grads_[name] = std::move(grad); }
  [[nodiscard]] const Tensor& at(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const { return grads_.count(name) != 0; }
  [[nodiscard]] std::size_t size() const noexcept { return grads_.size(); }
  [[nodiscard]] double squared_norm() const;
  void scale(double factor);

  /// Only the entries whose name starts with one of the prefixes.
  [[nodiscard]] Gradients filtered(std::initializer_list<std::string_view> prefixes) const;
  /// Zero-filled entry for every parameter in `params` that has no gradient yet.
  [[nodiscard]] Gradients dense(const ParamSet& params) const;

  [[nodiscard]] auto begin() const { return grads_.begin(); }
  [[nodiscard]] auto end() const { return grads_.end(); }

 private:
  std::map<std::string, Tensor> grads_;
};

/// Reverse-mode trace. Building expressions runs the forward pass eagerly;
/// backward() may run exactly once per tape.
///
/// Element-wise binary ops broadcast rank-2 operands whose extents are either
/// equal or 1 (row vectors, column vectors and 1x1 scalars).
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf without gradient tracking.
  Var constant(Tensor value);
  /// Leaf whose gradient is available through grad() after backward().
  Var input(Tensor value);
  /// Leaf bound to a named parameter. Repeated calls with one name return the same node.
  Var param(const ParamSet& params, const std::string& name);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var add_scalar(Var a, double offset);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var softplus(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sqrt(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var sum_rows(Var a);
  Var sum_cols(Var a);
  Var slice_cols(Var a, std::size_t begin, std::size_t end);
  Var gather_rows(Var a, std::vector<std::size_t> rows);
  Var concat_cols(std::span<const Var> parts);
  Var transpose(Var a);
  /// Per-row outer product: (n x p), (n x q) -> (n x p*q), entry [r, i*q + j] = a[r,i] * b[r,j].
  Var row_outer(Var a, Var b);

  /// Backpropagate from a 1x1 output with seed 1.
  Gradients backward(Var output);
  Gradients backward(Var output, const Tensor& seed);

  /// Gradient of an input() or param() leaf; valid after backward().
  [[nodiscard]] Tensor grad(Var v) const;
  [[nodiscard]] const Tensor& value(Var v) const;
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] bool backward_done() const noexcept { return backward_done_; }

 private:
  struct Node {
    Op op = Op::kConstant;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    double scalar = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::vector<std::size_t> index;
    std::string name;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void check_owned(Var v, std::string_view op) const;
  void backprop_node(std::size_t id);
  static void accumulate(Node& target, const Tensor& contribution);

  std::vector<Node> nodes_;
  std::map<std::string, std::pair<const ParamSet*, std::size_t>> param_nodes_;
  bool backward_done_ = false;
};

// Expression sugar forwarding to the owning tape.
Var matmul(Var a, Var b);
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator*(double s, Var a);
Var operator*(Var a, double s);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator-(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var sum(Var a);
Var mean(Var a);
Var sum_rows(Var a);
Var sum_cols(Var a);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var gather_rows(Var a, std::vector<std::size_t> rows);
Var concat_cols(std::span<const Var> parts);
Var transpose(Var a);
Var row_outer(Var a, Var b);
Var square(Var a);

}  // namespace csynth::ad
