#pragma once

#include <Eigen/Core>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pitchlab {

using Mat = Eigen::MatrixXd;

struct NnError : std::runtime_error {
  explicit NnError(const std::string& what) : std::runtime_error(what) {}
};

class Graph;

struct Var {
  Graph* g = nullptr;
  int id = -1;
};

// Reverse-mode tape over dense matrices. Build the graph forward, call
// backward(loss) once, read leaf gradients. Batches live in columns.
class Graph {
 public:
  // Leaf bound to an external parameter matrix (value is copied in).
  Var leaf(Mat* bound);
  Var constant(Mat value);
  Var constant_scalar(double v);

  const Mat& val(Var v) const { return nodes_.at(check(v)).value; }
  const Mat& grad(Var v) const;

  // Seeds d(loss)=1 and propagates in reverse creation order. The loss must
  // be 1x1 and finite.
  void backward(Var loss);

  // (parameter pointer, accumulated gradient) for every bound leaf.
  std::vector<std::pair<Mat*, Mat>> leaf_grads() const;

  size_t size() const { return nodes_.size(); }

  // --- low-level interface used by the op builders ---
  using BackFn = std::function<void(Graph&, int)>;
  int add_node(Mat value, bool needs_grad, BackFn back);
  bool needs(int id) const { return nodes_[id].needs_grad; }
  const Mat& v(int id) const { return nodes_[id].value; }
  const Mat& g(int id) const { return nodes_[id].grad; }
  Mat& gbuf(int id);  // zero-allocates on first touch

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    Mat* bound = nullptr;
    BackFn back;
  };

  int check(Var v) const;

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);            // same shape
Var add_bias(Var m, Var bias);    // bias d x 1 broadcast over columns
Var sub(Var a, Var b);
Var mul(Var a, Var b);            // elementwise
Var divide(Var a, Var b);         // elementwise
Var affine_scalar(Var a, double k, double c);  // k*a + c
Var vtanh(Var a);
Var vsigmoid(Var a);
Var vsoftplus(Var a);
Var vexp(Var a);
Var vlog(Var a);
Var vsquare(Var a);
Var sum_all(Var a);      // 1x1
Var mean_all(Var a);     // 1x1
Var colwise_sum(Var a);  // 1 x n
Var rowwise_sum(Var a);  // d x 1
Var slice_rows(Var a, int row0, int row1);
Var vstack(Var a, Var b);
Var repeat_cols(Var a, int k);   // block repeat: col j of output = col j/k of input
Var mul_rowwise(Var m, Var row); // scale column j of m by row(0, j)
Var detach(Var a);

// log(sum_i exp(v_i)) elementwise across equally-shaped vars, max-stabilized.
Var logsumexp(const std::vector<Var>& vs);

}  // namespace pitchlab
