#include "pitchlab/nn/autodiff.hpp"

#include <cmath>

namespace pitchlab {

namespace {

void check_same_graph(Var a, Var b) {
  if (a.g == nullptr || a.g != b.g) throw NnError("vars belong to different graphs");
}

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw NnError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                  std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                  std::to_string(b.cols()));
}

}  // namespace

int Graph::check(Var v) const {
  if (v.g != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw NnError("invalid var");
  return v.id;
}

Mat& Graph::gbuf(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

int Graph::add_node(Mat value, bool needs_grad, BackFn back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Graph::leaf(Mat* bound) {
  if (!bound) throw NnError("null parameter binding");
  int id = add_node(*bound, true, nullptr);
  nodes_[id].bound = bound;
  return {this, id};
}

Var Graph::constant(Mat value) { return {this, add_node(std::move(value), false, nullptr)}; }

Var Graph::constant_scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

const Mat& Graph::grad(Var v) const {
  const Node& n = nodes_.at(check(v));
  if (n.grad.size() == 0)
    throw NnError("gradient not computed for this var (run backward first)");
  return n.grad;
}

void Graph::backward(Var loss) {
  const int root = check(loss);
  const Node& rn = nodes_[root];
  if (rn.value.rows() != 1 || rn.value.cols() != 1)
    throw NnError("backward() root must be a scalar");
  if (!std::isfinite(rn.value(0, 0))) throw NnError("backward(): non-finite loss value");
  if (ran_backward_) throw NnError("backward() already ran on this graph");
  ran_backward_ = true;
  gbuf(root)(0, 0) = 1.0;
  for (int id = root; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.back) n.back(*this, id);
  }
}

std::vector<std::pair<Mat*, Mat>> Graph::leaf_grads() const {
  std::vector<std::pair<Mat*, Mat>> out;
  for (const auto& n : nodes_) {
    if (!n.bound) continue;
    if (n.grad.size() == 0)
      out.emplace_back(n.bound, Mat::Zero(n.value.rows(), n.value.cols()));
    else
      out.emplace_back(n.bound, n.grad);
  }
  return out;
}

Var matmul(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  const Mat& A = g.val(a);
  const Mat& B = g.val(b);
  if (A.cols() != B.rows()) throw NnError("matmul: inner dimension mismatch");
  const bool ng = g.needs(a.id) || g.needs(b.id);
  const int ai = a.id, bi = b.id;
  int id = g.add_node(A * B, ng, [ai, bi](Graph& gg, int self) {
    const Mat& G = gg.g(self);
    if (gg.needs(ai)) gg.gbuf(ai).noalias() += G * gg.v(bi).transpose();
    if (gg.needs(bi)) gg.gbuf(bi).noalias() += gg.v(ai).transpose() * G;
  });
  return {&g, id};
}

Var add(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  check_same_shape(g.val(a), g.val(b), "add");
  const bool ng = g.needs(a.id) || g.needs(b.id);
  const int ai = a.id, bi = b.id;
  int id = g.add_node(g.val(a) + g.val(b), ng, [ai, bi](Graph& gg, int self) {
    const Mat& G = gg.g(self);
    if (gg.needs(ai)) gg.gbuf(ai) += G;
    if (gg.needs(bi)) gg.gbuf(bi) += G;
  });
  return {&g, id};
}

Var add_bias(Var m, Var bias) {
  check_same_graph(m, bias);
  Graph& g = *m.g;
  const Mat& M = g.val(m);
  const Mat& B = g.val(bias);
  if (B.cols() != 1 || B.rows() != M.rows()) throw NnError("add_bias: bias must be d x 1");
  const bool ng = g.needs(m.id) || g.needs(bias.id);
  const int mi = m.id, bi = bias.id;
  int id = g.add_node(M.colwise() + B.col(0), ng, [mi, bi](Graph& gg, int self) {
    const Mat& G = gg.g(self);
    if (gg.needs(mi)) gg.gbuf(mi) += G;
    if (gg.needs(bi)) gg.gbuf(bi) += G.rowwise().sum();
  });
  return {&g, id};
}

Var sub(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  check_same_shape(g.val(a), g.val(b), "sub");
  const bool ng = g.needs(a.id) || g.needs(b.id);
  const int ai = a.id, bi = b.id;
  int id = g.add_node(g.val(a) - g.val(b), ng, [ai, bi](Graph& gg, int self) {
    const Mat& G = gg.g(self);
    if (gg.needs(ai)) gg.gbuf(ai) += G;
    if (gg.needs(bi)) gg.gbuf(bi) -= G;
  });
  return {&g, id};
}

Var mul(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  check_same_shape(g.val(a), g.val(b), "mul");
  const bool ng = g.needs(a.id) || g.needs(b.id);
  const int ai = a.id, bi = b.id;
  int id = g.add_node(g.val(a).cwiseProduct(g.val(b)), ng, [ai, bi](Graph& gg, int self) {
    const Mat& G = gg.g(self);
    if (gg.needs(ai)) gg.gbuf(ai) += G.cwiseProduct(gg.v(bi));
    if (gg.needs(bi)) gg.gbuf(bi) += G.cwiseProduct(gg.v(ai));
  });
  return {&g, id};
}

Var divide(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  check_same_shape(g.val(a), g.val(b), "divide");
  const bool ng = g.needs(a.id) || g.needs(b.id);
  const int ai = a.id, bi = b.id;
  int id = g.add_node(g.val(a).cwiseQuotient(g.val(b)), ng, [ai, bi](Graph& gg, int self) {
    const Mat& G = gg.g(self);
    const Mat& B = gg.v(bi);
    if (gg.needs(ai)) gg.gbuf(ai) += G.cwiseQuotient(B);
    if (gg.needs(bi)) gg.gbuf(bi) -= G.cwiseProduct(gg.v(self)).cwiseQuotient(B);
  });
  return {&g, id};
}

Var affine_scalar(Var a, double k, double c) {
  Graph& g = *a.g;
  const bool ng = g.needs(a.id);
  const int ai = a.id;
  Mat v = (k * g.val(a).array() + c).matrix();
  int id = g.add_node(std::move(v), ng, [ai, k](Graph& gg, int self) {
    if (gg.needs(ai)) gg.gbuf(ai) += k * gg.g(self);
  });
  return {&g, id};
}

namespace {
template <typename Fwd, typename Bwd>
Var unary_op(Var a, Fwd fwd, Bwd bwd) {
  Graph& g = *a.g;
  const bool ng = g.needs(a.id);
  const int ai = a.id;
  int id = g.add_node(fwd(g.val(a)), ng, [ai, bwd](Graph& gg, int self) {
    if (!gg.needs(ai)) return;
    gg.gbuf(ai) += bwd(gg.g(self), gg.v(ai), gg.v(self));
  });
  return {&g, id};
}
}  // namespace

Var vtanh(Var a) {
  return unary_op(
      a, [](const Mat& x) -> Mat { return x.array().tanh().matrix(); },
      [](const Mat& G, const Mat&, const Mat& y) -> Mat {
        return (G.array() * (1.0 - y.array().square())).matrix();
      });
}

Var vsigmoid(Var a) {
  return unary_op(
      a, [](const Mat& x) -> Mat { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); },
      [](const Mat& G, const Mat&, const Mat& y) -> Mat {
        return (G.array() * y.array() * (1.0 - y.array())).matrix();
      });
}

Var vsoftplus(Var a) {
  return unary_op(
      a,
      [](const Mat& x) -> Mat {
        // stable softplus: max(x,0) + log1p(exp(-|x|))
        return (x.array().max(0.0) + (-x.array().abs()).exp().log1p()).matrix();
      },
      [](const Mat& G, const Mat& x, const Mat&) -> Mat {
        return (G.array() / (1.0 + (-x.array()).exp())).matrix();
      });
}

Var vexp(Var a) {
  return unary_op(
      a, [](const Mat& x) -> Mat { return x.array().exp().matrix(); },
      [](const Mat& G, const Mat&, const Mat& y) -> Mat { return G.cwiseProduct(y); });
}

Var vlog(Var a) {
  return unary_op(
      a, [](const Mat& x) -> Mat { return x.array().log().matrix(); },
      [](const Mat& G, const Mat& x, const Mat&) -> Mat { return G.cwiseQuotient(x); });
}

Var vsquare(Var a) {
  return unary_op(
      a, [](const Mat& x) -> Mat { return x.array().square().matrix(); },
      [](const Mat& G, const Mat& x, const Mat&) -> Mat {
        return (2.0 * G.array() * x.array()).matrix();
      });
}

Var sum_all(Var a) {
  Graph& g = *a.g;
  const bool ng = g.needs(a.id);
  const int ai = a.id;
  Mat v(1, 1);
  v(0, 0) = g.val(a).sum();
  int id = g.add_node(std::move(v), ng, [ai](Graph& gg, int self) {
    if (gg.needs(ai)) gg.gbuf(ai).array() += gg.g(self)(0, 0);
  });
  return {&g, id};
}

Var mean_all(Var a) {
  Graph& g = *a.g;
  const double n = static_cast<double>(g.val(a).size());
  return affine_scalar(sum_all(a), 1.0 / n, 0.0);
}

Var colwise_sum(Var a) {
  Graph& g = *a.g;
  const bool ng = g.needs(a.id);
  const int ai = a.id;
  int id = g.add_node(g.val(a).colwise().sum(), ng, [ai](Graph& gg, int self) {
    if (!gg.needs(ai)) return;
    gg.gbuf(ai).array().rowwise() += gg.g(self).row(0).array();
  });
  return {&g, id};
}

Var rowwise_sum(Var a) {
  Graph& g = *a.g;
  const bool ng = g.needs(a.id);
  const int ai = a.id;
  int id = g.add_node(g.val(a).rowwise().sum(), ng, [ai](Graph& gg, int self) {
    if (!gg.needs(ai)) return;
    gg.gbuf(ai).array().colwise() += gg.g(self).col(0).array();
  });
  return {&g, id};
}

Var slice_rows(Var a, int row0, int row1) {
  Graph& g = *a.g;
  const Mat& A = g.val(a);
  if (row0 < 0 || row1 > A.rows() || row0 >= row1) throw NnError("slice_rows: bad range");
  const bool ng = g.needs(a.id);
  const int ai = a.id;
  int id = g.add_node(A.middleRows(row0, row1 - row0), ng, [ai, row0, row1](Graph& gg, int self) {
    if (gg.needs(ai)) gg.gbuf(ai).middleRows(row0, row1 - row0) += gg.g(self);
  });
  return {&g, id};
}

Var vstack(Var a, Var b) {
  check_same_graph(a, b);
  Graph& g = *a.g;
  const Mat& A = g.val(a);
  const Mat& B = g.val(b);
  if (A.cols() != B.cols()) throw NnError("vstack: column mismatch");
  Mat v(A.rows() + B.rows(), A.cols());
  v.topRows(A.rows()) = A;
  v.bottomRows(B.rows()) = B;
  const bool ng = g.needs(a.id) || g.needs(b.id);
  const int ai = a.id, bi = b.id;
  const int ar = static_cast<int>(A.rows());
  int id = g.add_node(std::move(v), ng, [ai, bi, ar](Graph& gg, int self) {
    const Mat& G = gg.g(self);
    if (gg.needs(ai)) gg.gbuf(ai) += G.topRows(ar);
    if (gg.needs(bi)) gg.gbuf(bi) += G.bottomRows(G.rows() - ar);
  });
  return {&g, id};
}

Var repeat_cols(Var a, int k) {
  if (k < 1) throw NnError("repeat_cols: k must be >= 1");
  Graph& g = *a.g;
  const Mat& A = g.val(a);
  Mat v(A.rows(), A.cols() * k);
  for (int j = 0; j < A.cols(); ++j)
    for (int r = 0; r < k; ++r) v.col(j * k + r) = A.col(j);
  const bool ng = g.needs(a.id);
  const int ai = a.id;
  int id = g.add_node(std::move(v), ng, [ai, k](Graph& gg, int self) {
    if (!gg.needs(ai)) return;
    const Mat& G = gg.g(self);
    Mat& dst = gg.gbuf(ai);
    for (int j = 0; j < dst.cols(); ++j)
      for (int r = 0; r < k; ++r) dst.col(j) += G.col(j * k + r);
  });
  return {&g, id};
}

Var mul_rowwise(Var m, Var row) {
  check_same_graph(m, row);
  Graph& g = *m.g;
  const Mat& M = g.val(m);
  const Mat& R = g.val(row);
  if (R.rows() != 1 || R.cols() != M.cols()) throw NnError("mul_rowwise: row must be 1 x n");
  Mat v = (M.array().rowwise() * R.row(0).array()).matrix();
  const bool ng = g.needs(m.id) || g.needs(row.id);
  const int mi = m.id, ri = row.id;
  int id = g.add_node(std::move(v), ng, [mi, ri](Graph& gg, int self) {
    const Mat& G = gg.g(self);
    if (gg.needs(mi))
      gg.gbuf(mi).array() += G.array().rowwise() * gg.v(ri).row(0).array();
    if (gg.needs(ri)) gg.gbuf(ri) += G.cwiseProduct(gg.v(mi)).colwise().sum();
  });
  return {&g, id};
}

Var detach(Var a) {
  Graph& g = *a.g;
  return g.constant(g.val(a));
}

Var logsumexp(const std::vector<Var>& vs) {
  if (vs.empty()) throw NnError("logsumexp: empty set");
  Graph& g = *vs.front().g;
  Mat m = g.val(vs.front());
  for (size_t i = 1; i < vs.size(); ++i) m = m.cwiseMax(g.val(vs[i]));
  Var mconst = g.constant(m);  // detached max is gradient-neutral
  Var acc = vexp(sub(vs[0], mconst));
  for (size_t i = 1; i < vs.size(); ++i) acc = add(acc, vexp(sub(vs[i], mconst)));
  return add(vlog(acc), mconst);
}

}  // namespace pitchlab
