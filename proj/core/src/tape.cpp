#include "csynth/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "csynth/errors.hpp"

namespace csynth::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

Tensor as_rank2(Tensor t) {
  if (t.rank() == 2) return t;
  if (t.rank() == 1) return t.reshaped({1, t.size()});
  throw ShapeError("tape: leaves must have rank <= 2, got " + shape_string(t.shape()));
}

std::string pair_string(const Tensor& a, const Tensor& b) {
  return shape_string(a.shape()) + " and " + shape_string(b.shape());
}

std::pair<std::size_t, std::size_t> broadcast_shape(const Tensor& a, const Tensor& b, Op op) {
  auto pick = [&](std::size_t x, std::size_t y) -> std::size_t {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw ShapeError(std::string("tape: ") + std::string(op_name(op)) +
                     " cannot broadcast shapes " + pair_string(a, b));
  };
  return {pick(a.rows(), b.rows()), pick(a.cols(), b.cols())};
}

template <typename F>
Tensor map_unary(const Tensor& x, F&& f) {
  Tensor out(x.shape());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

// Sum a full-size gradient down to a (possibly broadcast) operand shape.
Tensor reduce_to(const Tensor& g, const Tensor& like) {
  if (g.rows() == like.rows() && g.cols() == like.cols()) return g;
  Tensor out(like.shape(), 0.0);
  const bool br = like.rows() == 1;
  const bool bc = like.cols() == 1;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      out(br ? 0 : r, bc ? 0 : c) += g(r, c);
    }
  }
  return out;
}

double sigmoid_scalar(double x) {
  if (x >= 0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

}  // namespace

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kInput: return "input";
    case Op::kParam: return "param";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kScale: return "scale";
    case Op::kAddScalar: return "add_scalar";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kSoftplus: return "softplus";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kSumRows: return "sum_rows";
    case Op::kSumCols: return "sum_cols";
    case Op::kSliceCols: return "slice_cols";
    case Op::kGatherRows: return "gather_rows";
    case Op::kConcatCols: return "concat_cols";
    case Op::kTranspose: return "transpose";
    case Op::kRowOuter: return "row_outer";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Var / Gradients

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("Var: uninitialised handle");
  return tape_->value(*this);
}

double Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ShapeError("Var::item: expected 1x1, got " + shape_string(v.shape()));
  return v[0];
}

const Tensor& Gradients::at(const std::string& name) const {
  auto it = grads_.find(name);
  if (it == grads_.end()) throw std::out_of_range("gradients: no entry '" + name + "'");
  return it->second;
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& [_, g] : grads_) {
    for (double v : g.data()) s += v * v;
  }
  return s;
}

void Gradients::scale(double factor) {
  for (auto& [_, g] : grads_) {
    for (double& v : g.data()) v *= factor;
  }
}

Gradients Gradients::filtered(std::initializer_list<std::string_view> prefixes) const {
  Gradients out;
  for (const auto& [name, g] : grads_) {
    for (auto p : prefixes) {
      if (name.starts_with(p)) {
        out.grads_.emplace(name, g);
        break;
      }
    }
  }
  return out;
}

Gradients Gradients::dense(const ParamSet& params) const {
  Gradients out = *this;
  for (const auto& [name, value] : params) {
    if (!out.contains(name)) out.grads_.emplace(name, Tensor(value.shape(), 0.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tape: leaves

Var Tape::push(Node node) {
  if (!node.value.all_finite()) {
    throw NumericError(std::string("numeric overflow: non-finite result in op '") +
                       std::string(op_name(node.op)) + "' with output shape " +
                       shape_string(node.value.shape()));
  }
  if (node.op != Op::kInput && node.op != Op::kParam) {
    node.requires_grad = std::any_of(node.inputs.begin(), node.inputs.end(),
                                     [&](std::size_t i) { return nodes_[i].requires_grad; });
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tape::Node& Tape::node(Var v) const {
  check_owned(v, "access");
  return nodes_[v.id()];
}

void Tape::check_owned(Var v, std::string_view op) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw std::logic_error(std::string("tape: operand of '") + std::string(op) +
                           "' belongs to a different tape");
  }
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.value = as_rank2(std::move(value));
  if (!n.value.all_finite()) throw NumericError("tape: non-finite constant input rejected");
  return push(std::move(n));
}

Var Tape::input(Tensor value) {
  Node n;
  n.op = Op::kInput;
  n.value = as_rank2(std::move(value));
  n.requires_grad = true;
  if (!n.value.all_finite()) throw NumericError("tape: non-finite input rejected");
  return push(std::move(n));
}

Var Tape::param(const ParamSet& params, const std::string& name) {
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) {
    if (it->second.first != &params) {
      throw std::logic_error("tape: parameter '" + name + "' bound from two parameter sets");
    }
    return Var(this, it->second.second);
  }
  Node n;
  n.op = Op::kParam;
  n.value = as_rank2(params.at(name));
  n.requires_grad = true;
  n.name = name;
  if (!n.value.all_finite()) throw NumericError("tape: parameter '" + name + "' is not finite");
  Var v = push(std::move(n));
  param_nodes_.emplace(name, std::make_pair(&params, v.id()));
  return v;
}

// ---------------------------------------------------------------------------
// Tape: forward ops

Var Tape::matmul(Var a, Var b) {
  check_owned(a, "matmul");
  check_owned(b, "matmul");
  const Tensor& x = nodes_[a.id()].value;
  const Tensor& y = nodes_[b.id()].value;
  if (x.cols() != y.rows()) {
    throw ShapeError("tape: matmul inner extents differ for shapes " + pair_string(x, y));
  }
  Node n;
  n.op = Op::kMatMul;
  n.inputs = {a.id(), b.id()};
  n.value = Tensor::matrix(x.rows(), y.cols());
  // Coefficient-wise product; row i of the result depends only on row i of x.
  as_matrix(n.value).noalias() = as_matrix(x).lazyProduct(as_matrix(y));
  return push(std::move(n));
}

#define CSYNTH_BINARY_OP(method, OPCODE, EXPR)                                 \
  Var Tape::method(Var a, Var b) {                                             \
    check_owned(a, op_name(OPCODE));                                           \
    check_owned(b, op_name(OPCODE));                                           \
    const Tensor& x = nodes_[a.id()].value;                                    \
    const Tensor& y = nodes_[b.id()].value;                                    \
    auto [r, c] = broadcast_shape(x, y, OPCODE);                               \
    Node n;                                                                    \
    n.op = OPCODE;                                                             \
    n.inputs = {a.id(), b.id()};                                               \
    n.value = Tensor::matrix(r, c);                                            \
    const bool xr = x.rows() == 1, xc = x.cols() == 1;                         \
    const bool yr = y.rows() == 1, yc = y.cols() == 1;                         \
    for (std::size_t i = 0; i < r; ++i) {                                      \
      for (std::size_t j = 0; j < c; ++j) {                                    \
        const double u = x(xr ? 0 : i, xc ? 0 : j);                            \
        const double v = y(yr ? 0 : i, yc ? 0 : j);                            \
        n.value(i, j) = (EXPR);                                                \
      }                                                                        \
    }                                                                          \
    return push(std::move(n));                                                 \
  }

CSYNTH_BINARY_OP(add, Op::kAdd, u + v)
CSYNTH_BINARY_OP(sub, Op::kSub, u - v)
CSYNTH_BINARY_OP(mul, Op::kMul, u* v)

#undef CSYNTH_BINARY_OP

Var Tape::scale(Var a, double factor) {
  check_owned(a, "scale");
  Node n;
  n.op = Op::kScale;
  n.inputs = {a.id()};
  n.scalar = factor;
  n.value = map_unary(nodes_[a.id()].value, [factor](double v) { return v * factor; });
  return push(std::move(n));
}

Var Tape::add_scalar(Var a, double offset) {
  check_owned(a, "add_scalar");
  Node n;
  n.op = Op::kAddScalar;
  n.inputs = {a.id()};
  n.scalar = offset;
  n.value = map_unary(nodes_[a.id()].value, [offset](double v) { return v + offset; });
  return push(std::move(n));
}

#define CSYNTH_UNARY_OP(method, OPCODE, EXPR)                 \
  Var Tape::method(Var a) {                                   \
    check_owned(a, op_name(OPCODE));                          \
    Node n;                                                   \
    n.op = OPCODE;                                            \
    n.inputs = {a.id()};                                      \
    n.value = map_unary(nodes_[a.id()].value, [](double x) { return (EXPR); }); \
    return push(std::move(n));                                \
  }

CSYNTH_UNARY_OP(tanh, Op::kTanh, std::tanh(x))
CSYNTH_UNARY_OP(sigmoid, Op::kSigmoid, sigmoid_scalar(x))
CSYNTH_UNARY_OP(relu, Op::kRelu, x > 0.0 ? x : 0.0)
CSYNTH_UNARY_OP(softplus, Op::kSoftplus, std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))))
CSYNTH_UNARY_OP(exp, Op::kExp, std::exp(x))
CSYNTH_UNARY_OP(log, Op::kLog, std::log(x))
CSYNTH_UNARY_OP(sqrt, Op::kSqrt, std::sqrt(x))

#undef CSYNTH_UNARY_OP

Var Tape::sum(Var a) {
  check_owned(a, "sum");
  Node n;
  n.op = Op::kSum;
  n.inputs = {a.id()};
  double s = 0.0;
  for (double v : nodes_[a.id()].value.data()) s += v;
  n.value = Tensor::scalar(s);
  return push(std::move(n));
}

Var Tape::mean(Var a) {
  check_owned(a, "mean");
  Node n;
  n.op = Op::kMean;
  n.inputs = {a.id()};
  const Tensor& x = nodes_[a.id()].value;
  double s = 0.0;
  for (double v : x.data()) s += v;
  n.value = Tensor::scalar(s / static_cast<double>(x.size()));
  return push(std::move(n));
}

Var Tape::sum_rows(Var a) {
  check_owned(a, "sum_rows");
  const Tensor& x = nodes_[a.id()].value;
  Node n;
  n.op = Op::kSumRows;
  n.inputs = {a.id()};
  n.value = Tensor::matrix(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) n.value(0, j) += x(i, j);
  }
  return push(std::move(n));
}

Var Tape::sum_cols(Var a) {
  check_owned(a, "sum_cols");
  const Tensor& x = nodes_[a.id()].value;
  Node n;
  n.op = Op::kSumCols;
  n.inputs = {a.id()};
  n.value = Tensor::matrix(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += x(i, j);
    n.value(i, 0) = s;
  }
  return push(std::move(n));
}

Var Tape::slice_cols(Var a, std::size_t begin, std::size_t end) {
  check_owned(a, "slice_cols");
  const Tensor& x = nodes_[a.id()].value;
  if (begin >= end || end > x.cols()) {
    throw ShapeError("tape: slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for shape " + shape_string(x.shape()));
  }
  Node n;
  n.op = Op::kSliceCols;
  n.inputs = {a.id()};
  n.begin = begin;
  n.end = end;
  n.value = Tensor::matrix(x.rows(), end - begin);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = begin; j < end; ++j) n.value(i, j - begin) = x(i, j);
  }
  return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<std::size_t> rows) {
  check_owned(a, "gather_rows");
  const Tensor& x = nodes_[a.id()].value;
  if (rows.empty()) throw ShapeError("tape: gather_rows with empty index list");
  for (auto r : rows) {
    if (r >= x.rows()) {
      throw ShapeError("tape: gather_rows index " + std::to_string(r) + " out of range for shape " +
                       shape_string(x.shape()));
    }
  }
  Node n;
  n.op = Op::kGatherRows;
  n.inputs = {a.id()};
  n.value = Tensor::matrix(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) n.value(i, j) = x(rows[i], j);
  }
  n.index = std::move(rows);
  return push(std::move(n));
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("tape: concat_cols with no operands");
  std::size_t r = 0;
  std::size_t total = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    check_owned(parts[k], "concat_cols");
    const Tensor& x = nodes_[parts[k].id()].value;
    if (k == 0) r = x.rows();
    if (x.rows() != r) {
      throw ShapeError("tape: concat_cols row mismatch, shapes " +
                       pair_string(nodes_[parts[0].id()].value, x));
    }
    total += x.cols();
  }
  Node n;
  n.op = Op::kConcatCols;
  n.value = Tensor::matrix(r, total);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    n.inputs.push_back(p.id());
    const Tensor& x = nodes_[p.id()].value;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) n.value(i, offset + j) = x(i, j);
    }
    offset += x.cols();
  }
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  check_owned(a, "transpose");
  const Tensor& x = nodes_[a.id()].value;
  Node n;
  n.op = Op::kTranspose;
  n.inputs = {a.id()};
  n.value = Tensor::matrix(x.cols(), x.rows());
  as_matrix(n.value) = as_matrix(x).transpose();
  return push(std::move(n));
}

Var Tape::row_outer(Var a, Var b) {
  check_owned(a, "row_outer");
  check_owned(b, "row_outer");
  const Tensor& x = nodes_[a.id()].value;
  const Tensor& y = nodes_[b.id()].value;
  if (x.rows() != y.rows()) {
    throw ShapeError("tape: row_outer row mismatch for shapes " + pair_string(x, y));
  }
  const std::size_t p = x.cols();
  const std::size_t q = y.cols();
  Node n;
  n.op = Op::kRowOuter;
  n.inputs = {a.id(), b.id()};
  n.value = Tensor::matrix(x.rows(), p * q);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t i = 0; i < p; ++i) {
      const double u = x(r, i);
      for (std::size_t j = 0; j < q; ++j) n.value(r, i * q + j) = u * y(r, j);
    }
  }
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// Tape: backward

void Tape::accumulate(Node& target, const Tensor& contribution) {
  if (!target.requires_grad) return;
  if (target.grad.empty()) {
    target.grad = contribution;
    return;
  }
  auto dst = target.grad.data();
  auto src = contribution.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Gradients Tape::backward(Var output) {
  check_owned(output, "backward");
  if (nodes_[output.id()].value.size() != 1) {
    throw ShapeError("tape: backward without seed needs a 1x1 output, got " +
                     shape_string(nodes_[output.id()].value.shape()));
  }
  return backward(output, Tensor::scalar(1.0));
}

Gradients Tape::backward(Var output, const Tensor& seed) {
  check_owned(output, "backward");
  if (backward_done_) {
    throw std::logic_error("tape: backward already ran on this trace; re-run forward first");
  }
  Node& out = nodes_[output.id()];
  Tensor s = as_rank2(seed);
  if (s.rows() != out.value.rows() || s.cols() != out.value.cols()) {
    throw ShapeError("tape: seed shape " + shape_string(s.shape()) + " does not match output " +
                     shape_string(out.value.shape()));
  }
  backward_done_ = true;
  out.grad = Tensor(out.value.shape(), 0.0);
  accumulate(out, s);
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    if (!nodes_[id].requires_grad || nodes_[id].grad.empty()) continue;
    backprop_node(id);
  }
  Gradients grads;
  for (const auto& [name, entry] : param_nodes_) {
    const Node& n = nodes_[entry.second];
    grads.set(name, n.grad.empty() ? Tensor(n.value.shape(), 0.0) : n.grad);
  }
  return grads;
}

void Tape::backprop_node(std::size_t id) {
  // Copy the gradient: inputs may alias into nodes_ which we mutate below.
  const Tensor g = nodes_[id].grad;
  const Node& n = nodes_[id];
  auto in = [&](std::size_t k) -> Node& { return nodes_[n.inputs[k]]; };

  switch (n.op) {
    case Op::kConstant:
    case Op::kInput:
    case Op::kParam:
      return;
    case Op::kMatMul: {
      Node& a = in(0);
      Node& b = in(1);
      if (a.requires_grad) {
        Tensor ga = Tensor::matrix(a.value.rows(), a.value.cols());
        as_matrix(ga).noalias() = as_matrix(g) * as_matrix(b.value).transpose();
        accumulate(a, ga);
      }
      if (b.requires_grad) {
        Tensor gb = Tensor::matrix(b.value.rows(), b.value.cols());
        as_matrix(gb).noalias() = as_matrix(a.value).transpose() * as_matrix(g);
        accumulate(b, gb);
      }
      return;
    }
    case Op::kAdd:
      accumulate(in(0), reduce_to(g, in(0).value));
      accumulate(in(1), reduce_to(g, in(1).value));
      return;
    case Op::kSub: {
      accumulate(in(0), reduce_to(g, in(0).value));
      Tensor neg = map_unary(g, [](double v) { return -v; });
      accumulate(in(1), reduce_to(neg, in(1).value));
      return;
    }
    case Op::kMul: {
      const Tensor& x = in(0).value;
      const Tensor& y = in(1).value;
      const bool xr = x.rows() == 1, xc = x.cols() == 1;
      const bool yr = y.rows() == 1, yc = y.cols() == 1;
      Tensor gx(g.shape());
      Tensor gy(g.shape());
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
          gx(i, j) = g(i, j) * y(yr ? 0 : i, yc ? 0 : j);
          gy(i, j) = g(i, j) * x(xr ? 0 : i, xc ? 0 : j);
        }
      }
      accumulate(in(0), reduce_to(gx, x));
      accumulate(in(1), reduce_to(gy, y));
      return;
    }
    case Op::kScale: {
      const double f = n.scalar;
      accumulate(in(0), map_unary(g, [f](double v) { return v * f; }));
      return;
    }
    case Op::kAddScalar:
      accumulate(in(0), g);
      return;
    case Op::kTanh:
    case Op::kSigmoid:
    case Op::kExp:
    case Op::kSqrt: {
      Tensor gx(g.shape());
      auto y = n.value.data();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        double d = 0.0;
        switch (n.op) {
          case Op::kTanh: d = 1.0 - y[i] * y[i]; break;
          case Op::kSigmoid: d = y[i] * (1.0 - y[i]); break;
          case Op::kExp: d = y[i]; break;
          default: d = 0.5 / y[i]; break;
        }
        gx[i] = g[i] * d;
      }
      accumulate(in(0), gx);
      return;
    }
    case Op::kRelu:
    case Op::kSoftplus:
    case Op::kLog: {
      Tensor gx(g.shape());
      auto x = in(0).value.data();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        double d = 0.0;
        switch (n.op) {
          case Op::kRelu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
          case Op::kSoftplus: d = sigmoid_scalar(x[i]); break;
          default: d = 1.0 / x[i]; break;
        }
        gx[i] = g[i] * d;
      }
      accumulate(in(0), gx);
      return;
    }
    case Op::kSum:
    case Op::kMean: {
      const Tensor& x = in(0).value;
      double v = g[0];
      if (n.op == Op::kMean) v /= static_cast<double>(x.size());
      accumulate(in(0), Tensor(x.shape(), v));
      return;
    }
    case Op::kSumRows: {
      const Tensor& x = in(0).value;
      Tensor gx(x.shape());
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) gx(i, j) = g(0, j);
      }
      accumulate(in(0), gx);
      return;
    }
    case Op::kSumCols: {
      const Tensor& x = in(0).value;
      Tensor gx(x.shape());
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) gx(i, j) = g(i, 0);
      }
      accumulate(in(0), gx);
      return;
    }
    case Op::kSliceCols: {
      const Tensor& x = in(0).value;
      Tensor gx(x.shape(), 0.0);
      for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = n.begin; j < n.end; ++j) gx(i, j) = g(i, j - n.begin);
      }
      accumulate(in(0), gx);
      return;
    }
    case Op::kGatherRows: {
      const Tensor& x = in(0).value;
      Tensor gx(x.shape(), 0.0);
      for (std::size_t i = 0; i < n.index.size(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) gx(n.index[i], j) += g(i, j);
      }
      accumulate(in(0), gx);
      return;
    }
    case Op::kConcatCols: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        Node& part = in(k);
        const std::size_t c = part.value.cols();
        if (part.requires_grad) {
          Tensor gp(part.value.shape());
          for (std::size_t i = 0; i < gp.rows(); ++i) {
            for (std::size_t j = 0; j < c; ++j) gp(i, j) = g(i, offset + j);
          }
          accumulate(part, gp);
        }
        offset += c;
      }
      return;
    }
    case Op::kTranspose: {
      Tensor gx = Tensor::matrix(g.cols(), g.rows());
      as_matrix(gx) = as_matrix(g).transpose();
      accumulate(in(0), gx);
      return;
    }
    case Op::kRowOuter: {
      const Tensor& x = in(0).value;
      const Tensor& y = in(1).value;
      const std::size_t p = x.cols();
      const std::size_t q = y.cols();
      Tensor gx(x.shape(), 0.0);
      Tensor gy(y.shape(), 0.0);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t i = 0; i < p; ++i) {
          for (std::size_t j = 0; j < q; ++j) {
            const double gij = g(r, i * q + j);
            gx(r, i) += gij * y(r, j);
            gy(r, j) += gij * x(r, i);
          }
        }
      }
      accumulate(in(0), gx);
      accumulate(in(1), gy);
      return;
    }
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!backward_done_) throw std::logic_error("tape: grad() requested before backward()");
  // Leaves never reached by the backward pass have a zero gradient.
  return n.grad.empty() ? Tensor(n.value.shape(), 0.0) : n.grad;
}

// ---------------------------------------------------------------------------
// Free-function sugar

namespace {

Tape& owner(Var a) {
  if (!a.tape()) throw std::logic_error("Var: uninitialised handle");
  return *a.tape();
}

}  // namespace

Var matmul(Var a, Var b) { return owner(a).matmul(a, b); }
Var operator+(Var a, Var b) { return owner(a).add(a, b); }
Var operator-(Var a, Var b) { return owner(a).sub(a, b); }
Var operator*(Var a, Var b) { return owner(a).mul(a, b); }
Var operator*(double s, Var a) { return owner(a).scale(a, s); }
Var operator*(Var a, double s) { return owner(a).scale(a, s); }
Var operator+(Var a, double c) { return owner(a).add_scalar(a, c); }
Var operator+(double c, Var a) { return owner(a).add_scalar(a, c); }
Var operator-(Var a, double c) { return owner(a).add_scalar(a, -c); }
Var operator-(double c, Var a) { return owner(a).add_scalar(owner(a).scale(a, -1.0), c); }
Var operator-(Var a) { return owner(a).scale(a, -1.0); }
Var tanh(Var a) { return owner(a).tanh(a); }
Var sigmoid(Var a) { return owner(a).sigmoid(a); }
Var relu(Var a) { return owner(a).relu(a); }
Var softplus(Var a) { return owner(a).softplus(a); }
Var exp(Var a) { return owner(a).exp(a); }
Var log(Var a) { return owner(a).log(a); }
Var sqrt(Var a) { return owner(a).sqrt(a); }
Var sum(Var a) { return owner(a).sum(a); }
Var mean(Var a) { return owner(a).mean(a); }
Var sum_rows(Var a) { return owner(a).sum_rows(a); }
Var sum_cols(Var a) { return owner(a).sum_cols(a); }
Var slice_cols(Var a, std::size_t begin, std::size_t end) { return owner(a).slice_cols(a, begin, end); }
Var gather_rows(Var a, std::vector<std::size_t> rows) { return owner(a).gather_rows(a, std::move(rows)); }
Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("tape: concat_cols with no operands");
  return owner(parts[0]).concat_cols(parts);
}
Var transpose(Var a) { return owner(a).transpose(a); }
Var row_outer(Var a, Var b) { return owner(a).row_outer(a, b); }
Var square(Var a) { return owner(a).mul(a, a); }

}  // namespace csynth::ad
