#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "plastigraph/numcore/matrix.hpp"
#include "plastigraph/numcore/params.hpp"

namespace plastigraph::num {

/// Compressed adjacency of one graph. Batches of graphs sharing this topology are
/// stacked row-wise, `num_nodes` rows per graph.
struct Adjacency {
  int num_nodes = 0;
  std::vector<int> offsets;    // size num_nodes + 1
  std::vector<int> neighbors;  // symmetric, no self loops
  double self_weight = 1.0;    // 1 + eps of the GIN update

  static Adjacency from_edges(int num_nodes, std::span<const std::array<int, 2>> edges,
                              double eps = 0.0);
};

/// (A + (1+eps) I) X applied block-wise to a row stack of graphs.
Matrix aggregate_neighbors(const Adjacency& adj, const Matrix& x);

enum class Op : std::uint8_t {
  Leaf,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  AddRow,
  SumRows,
  BroadcastRows,
  Relu,
  Tanh,
  Sigmoid,
  OneMinus,
  Sum,
  Fill,
  SliceCols,
  PadCols,
  ConcatCols,
  Transpose,
  Aggregate,
  SegmentSum,
  SegmentRepeat,
  Reshape,
};

std::string_view op_name(Op op);

/// Handle to a value recorded on a Tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode recorder. Every primitive appends one node holding its output.
/// Gradients may themselves be recorded (`gradients`) so that losses built from
/// input-gradients can be differentiated again with respect to parameters.
class Tape {
 public:
  Tape() { nodes_.reserve(256); }

  // Leaves.
  Var constant(Matrix value);
  /// Leaf that participates in differentiation (network inputs).
  Var input(Matrix value);
  /// Leaf bound to parameter `index` of `params`; the value is copied.
  Var parameter(const ParamSet& params, std::size_t index);
  /// Binds every parameter of `params`, in order.
  std::vector<Var> parameters(const ParamSet& params);

  const Matrix& value(Var v) const { return node(v).value; }
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }
  bool needs_grad(Var v) const { return node(v).needs_grad; }

  // Primitives.
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  /// a (m x n) + row (1 x n) broadcast over rows.
  Var add_row(Var a, Var row);
  /// Column sums, m x n -> 1 x n.
  Var sum_rows(Var a);
  Var broadcast_rows(Var row, int rows);
  Var relu(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  /// 1 - a
  Var one_minus(Var a);
  /// Sum of all entries, -> 1 x 1.
  Var sum(Var a);
  Var mean(Var a);
  /// 1 x 1 -> rows x cols filled with the scalar.
  Var fill(Var s, int rows, int cols);
  Var slice_cols(Var a, int start, int count);
  /// Embeds `a` at column `start` of a zero matrix with `total` columns.
  Var pad_cols(Var a, int start, int total);
  Var concat_cols(Var a, Var b);
  Var transpose(Var a);
  /// GIN neighbourhood sum (A + (1+eps) I) X over a stack of graphs.
  Var aggregate(Var a, std::shared_ptr<const Adjacency> adj);
  /// Sums consecutive blocks of `segment` rows: (B*segment) x d -> B x d.
  Var segment_sum(Var a, int segment);
  /// Repeats each row `segment` times: B x d -> (B*segment) x d.
  Var segment_repeat(Var a, int segment);
  /// Row-major reinterpretation with the same number of entries.
  Var reshape(Var a, int rows, int cols);
  Var square(Var a) { return mul(a, a); }

  /// Numeric reverse sweep from `out` seeded with `seed` (shape of `out`).
  /// Returns one adjoint per node; nodes that do not need a gradient get an
  /// empty matrix.
  std::vector<Matrix> backward(Var out, const Matrix& seed) const;
  /// Reverse sweep from a scalar output seeded with 1.
  std::vector<Matrix> backward(Var out) const;

  /// d out / d theta for every parameter bound to this tape. Parameters that do
  /// not influence `out` receive exact zeros.
  ParamGrads grad_params(Var scalar_out) const;
  /// d out / d input for a leaf created by `input` (scalar `out`).
  Matrix grad_input(Var scalar_out, Var input) const;

  /// Records the reverse sweep itself on the tape and returns d out / d wrt as
  /// Vars, so they can be differentiated again. `out` must be 1 x 1.
  std::vector<Var> gradients(Var scalar_out, std::span<const Var> wrt);

  /// Re-evaluates every non-leaf node from its inputs.
  void replay();

 private:
  struct Node {
    Op op = Op::Leaf;
    std::array<std::int32_t, 2> in{-1, -1};
    Matrix value;
    double scalar = 0.0;
    int i0 = 0;
    int i1 = 0;
    bool needs_grad = false;
    std::shared_ptr<const Adjacency> adj;
  };

  const Node& node(Var v) const;
  Var push(Node n);
  Matrix evaluate(const Node& n) const;
  void check_finite(const Matrix& m, Op op) const;

  std::vector<Node> nodes_;
  const ParamSet* bound_params_ = nullptr;
  std::vector<std::int32_t> param_nodes_;  // node id per parameter index, -1 if unbound
};

/// Mean over rows of (||d f / d x restricted to columns [first, first+count)||^2 - 1)^2.
/// `f` must be a column (one scalar per row of `x`, rows independent). The returned
/// Var lives on the tape and can be differentiated with respect to parameters.
Var gradient_norm_penalty(Tape& tape, Var f, Var x, int first_col, int count);

}  // namespace plastigraph::num
