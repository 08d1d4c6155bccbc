#include "plastigraph/numcore/tape.hpp"

#include <sstream>

#include "plastigraph/error.hpp"

namespace plastigraph::num {

Adjacency Adjacency::from_edges(int num_nodes, std::span<const std::array<int, 2>> edges,
                                double eps) {
  Adjacency adj;
  adj.num_nodes = num_nodes;
  adj.self_weight = 1.0 + eps;
  std::vector<int> degree(num_nodes, 0);
  for (const auto& e : edges) {
    if (e[0] < 0 || e[1] < 0 || e[0] >= num_nodes || e[1] >= num_nodes || e[0] == e[1]) {
      throw StructuralError("adjacency: invalid edge");
    }
    ++degree[e[0]];
    ++degree[e[1]];
  }
  adj.offsets.assign(num_nodes + 1, 0);
  for (int i = 0; i < num_nodes; ++i) adj.offsets[i + 1] = adj.offsets[i] + degree[i];
  adj.neighbors.assign(adj.offsets.back(), 0);
  std::vector<int> fill(adj.offsets.begin(), adj.offsets.end() - 1);
  for (const auto& e : edges) {
    adj.neighbors[fill[e[0]]++] = e[1];
    adj.neighbors[fill[e[1]]++] = e[0];
  }
  return adj;
}

Matrix aggregate_neighbors(const Adjacency& adj, const Matrix& x) {
  const int n = adj.num_nodes;
  if (n <= 0 || x.rows() % n != 0) throw ShapeError("aggregate: row count is not a multiple of N");
  const int graphs = static_cast<int>(x.rows()) / n;
  Matrix out = adj.self_weight * x;
  for (int g = 0; g < graphs; ++g) {
    const int base = g * n;
    for (int i = 0; i < n; ++i) {
      auto row = out.row(base + i);
      for (int k = adj.offsets[i]; k < adj.offsets[i + 1]; ++k) row += x.row(base + adj.neighbors[k]);
    }
  }
  return out;
}

namespace {

Matrix segment_sum_impl(const Matrix& a, int segment) {
  if (segment <= 0 || a.rows() % segment != 0) throw ShapeError("segment_sum: bad segment length");
  const Eigen::Index blocks = a.rows() / segment;
  Matrix out = Matrix::Zero(blocks, a.cols());
  for (Eigen::Index b = 0; b < blocks; ++b) {
    out.row(b) = a.middleRows(b * segment, segment).colwise().sum();
  }
  return out;
}

Matrix segment_repeat_impl(const Matrix& a, int segment) {
  Matrix out(a.rows() * segment, a.cols());
  const Eigen::Index cols = a.cols();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    std::copy_n(a.data() + (r / segment) * cols, cols, out.data() + r * cols);
  }
  return out;
}

Matrix reshape_impl(const Matrix& a, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(a.data(), rows, cols);
}

void accumulate(Matrix& slot, const Matrix& g) {
  if (slot.size() == 0) {
    slot = g;
  } else {
    slot += g;
  }
}

void accumulate(Matrix& slot, Matrix&& g) {
  if (slot.size() == 0) {
    slot = std::move(g);
  } else {
    slot += g;
  }
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddRow: return "add_row";
    case Op::SumRows: return "sum_rows";
    case Op::BroadcastRows: return "broadcast_rows";
    case Op::Relu: return "relu";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::OneMinus: return "one_minus";
    case Op::Sum: return "sum";
    case Op::Fill: return "fill";
    case Op::SliceCols: return "slice_cols";
    case Op::PadCols: return "pad_cols";
    case Op::ConcatCols: return "concat_cols";
    case Op::Transpose: return "transpose";
    case Op::Aggregate: return "aggregate";
    case Op::SegmentSum: return "segment_sum";
    case Op::SegmentRepeat: return "segment_repeat";
    case Op::Reshape: return "reshape";
  }
  return "unknown";
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw StructuralError("tape: variable does not belong to this tape");
  }
  return nodes_[v.id];
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  if (m.size() != 1) throw ShapeError("tape: value is not a scalar");
  return m(0, 0);
}

void Tape::check_finite(const Matrix& m, Op op) const {
  // x * 0 is 0 for finite x and NaN otherwise; one vectorised pass.
  if ((m.array() * 0.0).sum() != 0.0) {
    std::ostringstream msg;
    msg << "numerical overflow: non-finite output of primitive '" << op_name(op) << "'";
    throw NumericalError(msg.str());
  }
}

namespace {

// Pure data movement and masking cannot turn finite inputs into non-finite ones.
bool can_overflow(Op op) {
  switch (op) {
    case Op::Relu:
    case Op::SliceCols:
    case Op::PadCols:
    case Op::ConcatCols:
    case Op::Transpose:
    case Op::SegmentRepeat:
    case Op::BroadcastRows:
    case Op::Reshape:
    case Op::Fill:
    case Op::Sigmoid:
    case Op::Tanh:
      return false;
    default:
      return true;
  }
}

}  // namespace

Var Tape::push(Node n) {
  if (n.op != Op::Leaf) {
    n.value = evaluate(n);
    if (can_overflow(n.op)) check_finite(n.value, n.op);
    n.needs_grad = false;
    for (auto id : n.in) {
      if (id >= 0 && nodes_[id].needs_grad) n.needs_grad = true;
    }
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Matrix value) {
  check_finite(value, Op::Leaf);
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::input(Matrix value) {
  check_finite(value, Op::Leaf);
  Node n;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(const ParamSet& params, std::size_t index) {
  if (bound_params_ != nullptr && bound_params_ != &params) {
    throw StructuralError("tape: parameters from two different sets");
  }
  if (bound_params_ == nullptr) {
    bound_params_ = &params;
    param_nodes_.assign(params.size(), -1);
  }
  if (index >= params.size()) throw StructuralError("tape: parameter index out of range");
  if (param_nodes_[index] >= 0) return Var{param_nodes_[index]};
  Node n;
  n.value = params[index];
  n.needs_grad = true;
  Var v = push(std::move(n));
  param_nodes_[index] = v.id;
  return v;
}

std::vector<Var> Tape::parameters(const ParamSet& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) vars.push_back(parameter(params, i));
  return vars;
}

namespace {

void require(bool ok, std::string_view what) {
  if (!ok) throw ShapeError(std::string("shape mismatch in ") + std::string(what));
}

}  // namespace

Matrix Tape::evaluate(const Node& n) const {
  const Matrix* a = n.in[0] >= 0 ? &nodes_[n.in[0]].value : nullptr;
  const Matrix* b = n.in[1] >= 0 ? &nodes_[n.in[1]].value : nullptr;
  switch (n.op) {
    case Op::Leaf:
      return n.value;
    case Op::MatMul:
      require(a->cols() == b->rows(), "matmul");
      return (*a) * (*b);
    case Op::Add:
      require(a->rows() == b->rows() && a->cols() == b->cols(), "add");
      return *a + *b;
    case Op::Sub:
      require(a->rows() == b->rows() && a->cols() == b->cols(), "sub");
      return *a - *b;
    case Op::Mul:
      require(a->rows() == b->rows() && a->cols() == b->cols(), "mul");
      return a->cwiseProduct(*b);
    case Op::Scale:
      return n.scalar * (*a);
    case Op::AddRow: {
      require(b->rows() == 1 && b->cols() == a->cols(), "add_row");
      Matrix out = *a;
      out.rowwise() += b->row(0);
      return out;
    }
    case Op::SumRows:
      return a->colwise().sum();
    case Op::BroadcastRows:
      require(a->rows() == 1, "broadcast_rows");
      return a->replicate(n.i0, 1);
    case Op::Relu:
      return a->cwiseMax(0.0);
    case Op::Tanh:
      return a->array().tanh().matrix();
    case Op::Sigmoid:
      return (1.0 / (1.0 + (-a->array()).exp())).matrix();
    case Op::OneMinus:
      return (1.0 - a->array()).matrix();
    case Op::Sum:
      return Matrix::Constant(1, 1, a->sum());
    case Op::Fill:
      require(a->size() == 1, "fill");
      return Matrix::Constant(n.i0, n.i1, (*a)(0, 0));
    case Op::SliceCols:
      require(n.i0 >= 0 && n.i1 >= 0 && n.i0 + n.i1 <= a->cols(), "slice_cols");
      return a->middleCols(n.i0, n.i1);
    case Op::PadCols: {
      require(n.i0 >= 0 && n.i0 + a->cols() <= n.i1, "pad_cols");
      Matrix out = Matrix::Zero(a->rows(), n.i1);
      out.middleCols(n.i0, a->cols()) = *a;
      return out;
    }
    case Op::ConcatCols: {
      require(a->rows() == b->rows(), "concat_cols");
      Matrix out(a->rows(), a->cols() + b->cols());
      out << *a, *b;
      return out;
    }
    case Op::Transpose:
      return a->transpose();
    case Op::Aggregate:
      return aggregate_neighbors(*n.adj, *a);
    case Op::SegmentSum:
      return segment_sum_impl(*a, n.i0);
    case Op::SegmentRepeat:
      return segment_repeat_impl(*a, n.i0);
    case Op::Reshape:
      require(static_cast<Eigen::Index>(n.i0) * n.i1 == a->size(), "reshape");
      return reshape_impl(*a, n.i0, n.i1);
  }
  throw StructuralError("tape: unknown primitive");
}

#define PG_NODE(op_, a_, b_) \
  Node n;                    \
  n.op = (op_);              \
  n.in = {(a_).id, (b_).id}

Var Tape::matmul(Var a, Var b) { node(a); node(b); PG_NODE(Op::MatMul, a, b); return push(std::move(n)); }
Var Tape::add(Var a, Var b) { node(a); node(b); PG_NODE(Op::Add, a, b); return push(std::move(n)); }
Var Tape::sub(Var a, Var b) { node(a); node(b); PG_NODE(Op::Sub, a, b); return push(std::move(n)); }
Var Tape::mul(Var a, Var b) { node(a); node(b); PG_NODE(Op::Mul, a, b); return push(std::move(n)); }
Var Tape::add_row(Var a, Var row) { node(a); node(row); PG_NODE(Op::AddRow, a, row); return push(std::move(n)); }

Var Tape::scale(Var a, double s) {
  node(a);
  PG_NODE(Op::Scale, a, Var{});
  n.scalar = s;
  return push(std::move(n));
}

Var Tape::sum_rows(Var a) { node(a); PG_NODE(Op::SumRows, a, Var{}); return push(std::move(n)); }

Var Tape::broadcast_rows(Var row, int rows) {
  node(row);
  PG_NODE(Op::BroadcastRows, row, Var{});
  n.i0 = rows;
  return push(std::move(n));
}

Var Tape::relu(Var a) { node(a); PG_NODE(Op::Relu, a, Var{}); return push(std::move(n)); }
Var Tape::tanh(Var a) { node(a); PG_NODE(Op::Tanh, a, Var{}); return push(std::move(n)); }
Var Tape::sigmoid(Var a) { node(a); PG_NODE(Op::Sigmoid, a, Var{}); return push(std::move(n)); }
Var Tape::one_minus(Var a) { node(a); PG_NODE(Op::OneMinus, a, Var{}); return push(std::move(n)); }
Var Tape::sum(Var a) { node(a); PG_NODE(Op::Sum, a, Var{}); return push(std::move(n)); }

Var Tape::mean(Var a) {
  const auto count = static_cast<double>(value(a).size());
  return scale(sum(a), 1.0 / count);
}

Var Tape::fill(Var s, int rows, int cols) {
  node(s);
  PG_NODE(Op::Fill, s, Var{});
  n.i0 = rows;
  n.i1 = cols;
  return push(std::move(n));
}

Var Tape::slice_cols(Var a, int start, int count) {
  node(a);
  PG_NODE(Op::SliceCols, a, Var{});
  n.i0 = start;
  n.i1 = count;
  return push(std::move(n));
}

Var Tape::pad_cols(Var a, int start, int total) {
  node(a);
  PG_NODE(Op::PadCols, a, Var{});
  n.i0 = start;
  n.i1 = total;
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) { node(a); node(b); PG_NODE(Op::ConcatCols, a, b); return push(std::move(n)); }
Var Tape::transpose(Var a) { node(a); PG_NODE(Op::Transpose, a, Var{}); return push(std::move(n)); }

Var Tape::aggregate(Var a, std::shared_ptr<const Adjacency> adj) {
  node(a);
  if (!adj) throw StructuralError("aggregate: null adjacency");
  PG_NODE(Op::Aggregate, a, Var{});
  n.adj = std::move(adj);
  return push(std::move(n));
}

Var Tape::segment_sum(Var a, int segment) {
  node(a);
  PG_NODE(Op::SegmentSum, a, Var{});
  n.i0 = segment;
  return push(std::move(n));
}

Var Tape::segment_repeat(Var a, int segment) {
  node(a);
  PG_NODE(Op::SegmentRepeat, a, Var{});
  n.i0 = segment;
  return push(std::move(n));
}

Var Tape::reshape(Var a, int rows, int cols) {
  node(a);
  PG_NODE(Op::Reshape, a, Var{});
  n.i0 = rows;
  n.i1 = cols;
  return push(std::move(n));
}

#undef PG_NODE

std::vector<Matrix> Tape::backward(Var out) const {
  const Matrix& v = value(out);
  if (v.size() != 1) throw ShapeError("backward: output is not a scalar; pass a seed");
  return backward(out, Matrix::Ones(1, 1));
}

std::vector<Matrix> Tape::backward(Var out, const Matrix& seed) const {
  const Node& root = node(out);
  if (seed.rows() != root.value.rows() || seed.cols() != root.value.cols()) {
    throw ShapeError("backward: seed shape differs from output shape");
  }
  std::vector<Matrix> adj(nodes_.size());
  adj[out.id] = seed;
  for (std::int32_t i = out.id; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (n.op == Op::Leaf || adj[i].size() == 0 || !n.needs_grad) continue;
    const Matrix& g = adj[i];
    const std::int32_t ia = n.in[0];
    const std::int32_t ib = n.in[1];
    const bool ga = ia >= 0 && nodes_[ia].needs_grad;
    const bool gb = ib >= 0 && nodes_[ib].needs_grad;
    const Matrix* a = ia >= 0 ? &nodes_[ia].value : nullptr;
    const Matrix* b = ib >= 0 ? &nodes_[ib].value : nullptr;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        if (ga) accumulate(adj[ia], g * b->transpose());
        if (gb) accumulate(adj[ib], a->transpose() * g);
        break;
      case Op::Add:
        if (ga) accumulate(adj[ia], g);
        if (gb) accumulate(adj[ib], g);
        break;
      case Op::Sub:
        if (ga) accumulate(adj[ia], g);
        if (gb) accumulate(adj[ib], -g);
        break;
      case Op::Mul:
        if (ga) accumulate(adj[ia], g.cwiseProduct(*b));
        if (gb) accumulate(adj[ib], g.cwiseProduct(*a));
        break;
      case Op::Scale:
        if (ga) accumulate(adj[ia], n.scalar * g);
        break;
      case Op::AddRow:
        if (ga) accumulate(adj[ia], g);
        if (gb) accumulate(adj[ib], g.colwise().sum());
        break;
      case Op::SumRows:
        if (ga) accumulate(adj[ia], g.replicate(a->rows(), 1));
        break;
      case Op::BroadcastRows:
        if (ga) accumulate(adj[ia], g.colwise().sum());
        break;
      case Op::Relu:
        if (ga) accumulate(adj[ia], (a->array() > 0.0).select(g.array(), 0.0).matrix());
        break;
      case Op::Tanh:
        if (ga) accumulate(adj[ia], (g.array() * (1.0 - n.value.array().square())).matrix());
        break;
      case Op::Sigmoid:
        if (ga) {
          accumulate(adj[ia],
                     (g.array() * n.value.array() * (1.0 - n.value.array())).matrix());
        }
        break;
      case Op::OneMinus:
        if (ga) accumulate(adj[ia], -g);
        break;
      case Op::Sum:
        if (ga) accumulate(adj[ia], Matrix::Constant(a->rows(), a->cols(), g(0, 0)));
        break;
      case Op::Fill:
        if (ga) accumulate(adj[ia], Matrix::Constant(1, 1, g.sum()));
        break;
      case Op::SliceCols:
        if (ga) {
          Matrix full = Matrix::Zero(a->rows(), a->cols());
          full.middleCols(n.i0, n.i1) = g;
          accumulate(adj[ia], full);
        }
        break;
      case Op::PadCols:
        if (ga) accumulate(adj[ia], g.middleCols(n.i0, a->cols()));
        break;
      case Op::ConcatCols:
        if (ga) accumulate(adj[ia], g.leftCols(a->cols()));
        if (gb) accumulate(adj[ib], g.rightCols(b->cols()));
        break;
      case Op::Transpose:
        if (ga) accumulate(adj[ia], g.transpose());
        break;
      case Op::Aggregate:
        if (ga) accumulate(adj[ia], aggregate_neighbors(*n.adj, g));
        break;
      case Op::SegmentSum:
        if (ga) accumulate(adj[ia], segment_repeat_impl(g, n.i0));
        break;
      case Op::SegmentRepeat:
        if (ga) accumulate(adj[ia], segment_sum_impl(g, n.i0));
        break;
      case Op::Reshape:
        if (ga) accumulate(adj[ia], reshape_impl(g, a->rows(), a->cols()));
        break;
    }
  }
  return adj;
}

ParamGrads Tape::grad_params(Var scalar_out) const {
  if (bound_params_ == nullptr) throw StructuralError("grad_params: no parameters bound to tape");
  const auto adj = backward(scalar_out);
  ParamGrads grads = bound_params_->zeros_like();
  for (std::size_t p = 0; p < param_nodes_.size(); ++p) {
    const auto id = param_nodes_[p];
    if (id >= 0 && adj[id].size() != 0) {
      if (adj[id].rows() != grads[p].rows() || adj[id].cols() != grads[p].cols()) {
        throw StructuralError("grad_params: gradient shape differs from parameter shape");
      }
      grads[p] = adj[id];
    }
  }
  return grads;
}

Matrix Tape::grad_input(Var scalar_out, Var input) const {
  const Node& in = node(input);
  if (in.op != Op::Leaf || !in.needs_grad) throw StructuralError("grad_input: not an input leaf");
  const auto adj = backward(scalar_out);
  if (adj[input.id].size() == 0) return Matrix::Zero(in.value.rows(), in.value.cols());
  return adj[input.id];
}

std::vector<Var> Tape::gradients(Var scalar_out, std::span<const Var> wrt) {
  if (value(scalar_out).size() != 1) throw ShapeError("gradients: output is not a scalar");
  const std::int32_t top = scalar_out.id;
  std::vector<Var> adj(static_cast<std::size_t>(top) + 1);
  adj[top] = constant(Matrix::Ones(1, 1));

  auto acc = [&](std::int32_t id, Var g) {
    if (!adj[id].valid()) {
      adj[id] = g;
    } else {
      adj[id] = add(adj[id], g);
    }
  };

  for (std::int32_t i = top; i >= 0; --i) {
    // Copy what is needed: pushing nodes may reallocate `nodes_`.
    const Op op = nodes_[i].op;
    if (op == Op::Leaf || !adj[i].valid() || !nodes_[i].needs_grad) continue;
    const Var g = adj[i];
    const std::int32_t ia = nodes_[i].in[0];
    const std::int32_t ib = nodes_[i].in[1];
    const bool ga = ia >= 0 && nodes_[ia].needs_grad;
    const bool gb = ib >= 0 && nodes_[ib].needs_grad;
    const Var a{ia};
    const Var b{ib};
    const Var self{i};
    const int i0 = nodes_[i].i0;
    switch (op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        if (ga) acc(ia, matmul(g, transpose(b)));
        if (gb) acc(ib, matmul(transpose(a), g));
        break;
      case Op::Add:
        if (ga) acc(ia, g);
        if (gb) acc(ib, g);
        break;
      case Op::Sub:
        if (ga) acc(ia, g);
        if (gb) acc(ib, scale(g, -1.0));
        break;
      case Op::Mul:
        if (ga) acc(ia, mul(g, b));
        if (gb) acc(ib, mul(g, a));
        break;
      case Op::Scale:
        if (ga) acc(ia, scale(g, nodes_[i].scalar));
        break;
      case Op::AddRow:
        if (ga) acc(ia, g);
        if (gb) acc(ib, sum_rows(g));
        break;
      case Op::SumRows:
        if (ga) acc(ia, broadcast_rows(g, static_cast<int>(nodes_[ia].value.rows())));
        break;
      case Op::BroadcastRows:
        if (ga) acc(ia, sum_rows(g));
        break;
      case Op::Relu:
        if (ga) {
          // Zero second derivative: the mask is a constant.
          Matrix mask = (nodes_[ia].value.array() > 0.0).cast<double>().matrix();
          acc(ia, mul(g, constant(std::move(mask))));
        }
        break;
      case Op::Tanh:
        if (ga) acc(ia, mul(g, one_minus(mul(self, self))));
        break;
      case Op::Sigmoid:
        if (ga) acc(ia, mul(g, mul(self, one_minus(self))));
        break;
      case Op::OneMinus:
        if (ga) acc(ia, scale(g, -1.0));
        break;
      case Op::Sum:
        if (ga) {
          acc(ia, fill(g, static_cast<int>(nodes_[ia].value.rows()),
                       static_cast<int>(nodes_[ia].value.cols())));
        }
        break;
      case Op::Fill:
        if (ga) acc(ia, sum(g));
        break;
      case Op::SliceCols:
        if (ga) acc(ia, pad_cols(g, i0, static_cast<int>(nodes_[ia].value.cols())));
        break;
      case Op::PadCols:
        if (ga) acc(ia, slice_cols(g, i0, static_cast<int>(nodes_[ia].value.cols())));
        break;
      case Op::ConcatCols: {
        const int ca = static_cast<int>(nodes_[ia].value.cols());
        const int cb = static_cast<int>(nodes_[ib].value.cols());
        if (ga) acc(ia, slice_cols(g, 0, ca));
        if (gb) acc(ib, slice_cols(g, ca, cb));
        break;
      }
      case Op::Transpose:
        if (ga) acc(ia, transpose(g));
        break;
      case Op::Aggregate:
        if (ga) acc(ia, aggregate(g, nodes_[i].adj));
        break;
      case Op::SegmentSum:
        if (ga) acc(ia, segment_repeat(g, i0));
        break;
      case Op::SegmentRepeat:
        if (ga) acc(ia, segment_sum(g, i0));
        break;
      case Op::Reshape:
        if (ga) {
          acc(ia, reshape(g, static_cast<int>(nodes_[ia].value.rows()),
                          static_cast<int>(nodes_[ia].value.cols())));
        }
        break;
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const Var w : wrt) {
    const Node& n = node(w);
    if (w.id <= top && adj[w.id].valid()) {
      result.push_back(adj[w.id]);
    } else {
      result.push_back(constant(Matrix::Zero(n.value.rows(), n.value.cols())));
    }
  }
  return result;
}

void Tape::replay() {
  for (auto& n : nodes_) {
    if (n.op == Op::Leaf) continue;
    n.value = evaluate(n);
    check_finite(n.value, n.op);
  }
}

Var gradient_norm_penalty(Tape& tape, Var f, Var x, int first_col, int count) {
  const auto rows = static_cast<int>(tape.value(x).rows());
  if (tape.value(f).cols() != 1 || tape.value(f).rows() != rows) {
    throw ShapeError("gradient_norm_penalty: f must be one column with a row per input");
  }
  const Var total = tape.sum(f);
  const Var gx = tape.gradients(total, std::span<const Var>(&x, 1))[0];
  const Var part = tape.slice_cols(gx, first_col, count);
  const Var ones_col = tape.constant(Matrix::Ones(count, 1));
  const Var norm2 = tape.matmul(tape.square(part), ones_col);
  const Var one = tape.constant(Matrix::Ones(rows, 1));
  const Var resid = tape.sub(norm2, one);
  return tape.mean(tape.square(resid));
}

}  // namespace plastigraph::num
