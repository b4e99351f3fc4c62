#include <doctest.h>

#include <cmath>

#include "pitchlab/nn/nets.hpp"

using namespace pitchlab;

namespace {

Mat randn(int r, int c, Rng& rng, double scale = 1.0) {
  return Mat::NullaryExpr(r, c, [&] { return scale * rng.normal(); });
}

}  // namespace

TEST_CASE("constant loss has zero gradients") {
  Rng rng(1);
  Mat w = randn(4, 3, rng);
  Graph g;
  Var wv = g.leaf(&w);
  (void)wv;
  Var loss = g.constant_scalar(3.25);
  g.backward(loss);
  for (auto& [p, grad] : g.leaf_grads()) CHECK(grad.norm() == 0.0);
}

TEST_CASE("quadratic loss on a linear map matches the normal-equation residual") {
  Rng rng(2);
  Mat W = randn(3, 5, rng);
  Mat X = randn(5, 7, rng);
  Mat Y = randn(3, 7, rng);
  Graph g;
  Var wv = g.leaf(&W);
  Var resid = sub(matmul(wv, g.constant(X)), g.constant(Y));
  Var loss = affine_scalar(sum_all(vsquare(resid)), 0.5, 0.0);
  g.backward(loss);
  const Mat expected = (W * X - Y) * X.transpose();
  const Mat got = g.leaf_grads()[0].second;
  CHECK((got - expected).norm() < 1e-12);
}

TEST_CASE("every primitive op passes central finite differences") {
  Rng rng(3);
  const double tol = 1e-4;

  auto check = [&](const char* name, std::vector<Mat*> params,
                   const std::function<Var(Graph&)>& build) {
    INFO(name);
    CHECK(gradcheck_max_rel_error(params, build) < tol);
  };

  Mat A = randn(4, 6, rng, 0.7), B = randn(4, 6, rng, 0.7), C = randn(6, 3, rng, 0.5);
  Mat pos = (randn(4, 6, rng, 0.3).array() + 2.0).matrix();  // positive inputs
  Mat bias = randn(4, 1, rng);
  Mat row = randn(1, 6, rng);

  check("matmul", {&A, &C}, [&](Graph& g) {
    return sum_all(matmul(g.leaf(&A), g.leaf(&C)));
  });
  check("add+mul", {&A, &B}, [&](Graph& g) {
    return sum_all(mul(add(g.leaf(&A), g.leaf(&B)), g.leaf(&B)));
  });
  check("sub+divide", {&A, &pos}, [&](Graph& g) {
    return sum_all(divide(sub(g.leaf(&A), g.leaf(&pos)), g.leaf(&pos)));
  });
  check("add_bias", {&A, &bias}, [&](Graph& g) {
    return sum_all(vsquare(add_bias(g.leaf(&A), g.leaf(&bias))));
  });
  check("tanh", {&A}, [&](Graph& g) { return sum_all(vtanh(g.leaf(&A))); });
  check("sigmoid", {&A}, [&](Graph& g) { return sum_all(vsigmoid(g.leaf(&A))); });
  check("softplus", {&A}, [&](Graph& g) { return sum_all(vsoftplus(g.leaf(&A))); });
  check("exp", {&A}, [&](Graph& g) { return sum_all(vexp(g.leaf(&A))); });
  check("log", {&pos}, [&](Graph& g) { return sum_all(vlog(g.leaf(&pos))); });
  check("square-mean", {&A}, [&](Graph& g) { return mean_all(vsquare(g.leaf(&A))); });
  check("colwise+rowwise", {&A}, [&](Graph& g) {
    Var a = g.leaf(&A);
    return add(sum_all(vsquare(colwise_sum(a))), sum_all(vsquare(rowwise_sum(a))));
  });
  check("slice+vstack", {&A, &B}, [&](Graph& g) {
    Var s = vstack(slice_rows(g.leaf(&A), 1, 3), slice_rows(g.leaf(&B), 0, 2));
    return sum_all(vsquare(s));
  });
  check("repeat_cols", {&A}, [&](Graph& g) {
    return sum_all(vsquare(repeat_cols(g.leaf(&A), 3)));
  });
  check("mul_rowwise", {&A, &row}, [&](Graph& g) {
    return sum_all(vsquare(mul_rowwise(g.leaf(&A), g.leaf(&row))));
  });
  check("logsumexp", {&A, &B}, [&](Graph& g) {
    return sum_all(logsumexp({g.leaf(&A), g.leaf(&B), affine_scalar(g.leaf(&A), 0.3, -1.0)}));
  });
}

TEST_CASE("gaussian head composites pass finite differences") {
  Rng rng(4);
  const double tol = 1e-4;
  Mat mean = randn(3, 5, rng, 0.5);
  Mat raw = randn(3, 5, rng, 0.5);
  Mat mean2 = randn(3, 5, rng, 0.5);
  Mat raw2 = randn(3, 5, rng, 0.5);
  Mat z = randn(3, 5, rng);

  auto sigma_of = [](Graph& g, Mat* raw_p) {
    return affine_scalar(vsigmoid(g.leaf(raw_p)), 1.999, 1e-3);
  };

  CHECK(gradcheck_max_rel_error({&mean, &raw}, [&](Graph& g) {
          return mean_all(gaussian_log_prob_graph(g.leaf(&mean), sigma_of(g, &raw),
                                                  g.constant(z)));
        }) < tol);
  CHECK(gradcheck_max_rel_error({&mean, &raw, &mean2, &raw2}, [&](Graph& g) {
          return mean_all(gaussian_kl_graph(g.leaf(&mean), sigma_of(g, &raw), g.leaf(&mean2),
                                            sigma_of(g, &raw2)));
        }) < tol);
}

TEST_CASE("mlp and q-network gradients match finite differences") {
  Rng rng(5);
  const double tol = 1e-4;
  Mlp mlp = Mlp::make(4, {8, 8}, 3, rng);
  Mat x = randn(4, 6, rng);
  Mat y = randn(3, 6, rng);
  CHECK(gradcheck_max_rel_error(mlp.params(), [&](Graph& g) {
          return mean_all(vsquare(sub(mlp.forward_graph(g, g.constant(x)), g.constant(y))));
        }) < tol);

  MultiChannelQ q = MultiChannelQ::make(5, 3, 8, 2, rng);
  Mat qin = randn(5, 6, rng);
  Mat tgt = randn(3, 6, rng);
  CHECK(gradcheck_max_rel_error(q.params(), [&](Graph& g) {
          return mean_all(vsquare(sub(q.values_graph(g, g.constant(qin)), g.constant(tgt))));
        }) < tol);

  PolicyNet pol = PolicyNet::make(4, 2, 8, 2, rng, 1e-3, 2.0);
  Mat obs = randn(4, 6, rng);
  Mat zs = randn(2, 6, rng, 0.3);
  CHECK(gradcheck_max_rel_error(pol.params(), [&](Graph& g) {
          auto [m, s] = pol.forward_graph(g, g.constant(obs));
          return mean_all(gaussian_log_prob_graph(m, s, g.constant(zs)));
        }) < tol);
}

TEST_CASE("single-weight perturbation moves the output by eps * jacobian") {
  Rng rng(6);
  Mlp mlp = Mlp::make(3, {5}, 2, rng);
  Mat x = randn(3, 1, rng);
  auto out0 = [&] {
    Graph g;
    return g.val(mlp.forward_graph(g, g.constant(x)));
  }();

  Graph g;
  Var y = mlp.forward_graph(g, g.constant(x));
  Var pick = slice_rows(y, 0, 1);  // scalar output y_0
  g.backward(sum_all(pick));
  Mat jac;  // d y0 / d W0
  for (auto& [p, grad] : g.leaf_grads())
    if (p == &mlp.layers[0].W) jac = grad;

  const double eps = 1e-6;
  mlp.layers[0].W(2, 1) += eps;
  Graph g2;
  Mat out1 = g2.val(mlp.forward_graph(g2, g2.constant(x)));
  const double delta = out1(0, 0) - out0(0, 0);
  CHECK(delta == doctest::Approx(eps * jac(2, 1)).epsilon(1e-4));
}

TEST_CASE("gaussian scalar identities") {
  // density at the mode with unit sigma in d dimensions
  for (int d : {1, 3, 8}) {
    GaussianParams p;
    p.mean = VectorXd::Zero(d);
    p.sigma = VectorXd::Ones(d);
    CHECK(gaussian_log_prob(p, p.mean) ==
          doctest::Approx(-0.5 * d * std::log(2.0 * M_PI)).epsilon(1e-12));
  }
  // 1-D standard normal at z=1
  GaussianParams p1;
  p1.mean = VectorXd::Zero(1);
  p1.sigma = VectorXd::Ones(1);
  VectorXd one(1);
  one << 1.0;
  CHECK(gaussian_log_prob(p1, one) ==
        doctest::Approx(-0.5 - 0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
  // KL(p, p) = 0 and KL >= 0
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    GaussianParams a, b;
    a.mean = VectorXd::NullaryExpr(4, [&] { return rng.normal(); });
    a.sigma = VectorXd::NullaryExpr(4, [&] { return 0.1 + std::abs(rng.normal()); });
    b.mean = VectorXd::NullaryExpr(4, [&] { return rng.normal(); });
    b.sigma = VectorXd::NullaryExpr(4, [&] { return 0.1 + std::abs(rng.normal()); });
    CHECK(gaussian_kl(a, a) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(gaussian_kl(a, b) >= 0.0);
    if ((a.mean - b.mean).norm() > 1e-6) CHECK(gaussian_kl(a, b) > 0.0);
  }
}

TEST_CASE("policy head keeps sigma within the squash bounds") {
  Rng rng(8);
  PolicyNet pol = PolicyNet::make(6, 3, 16, 2, rng, 1e-3, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd obs = VectorXd::NullaryExpr(6, [&] { return 5.0 * rng.normal(); });
    GaussianParams p = pol.forward(obs);
    for (int i = 0; i < 3; ++i) {
      CHECK(p.sigma[i] >= 1e-3);
      CHECK(p.sigma[i] <= 2.0);
    }
  }
}

TEST_CASE("multi-channel Q total equals the channel sum exactly") {
  Rng rng(9);
  MultiChannelQ q = MultiChannelQ::make(7, 4, 16, 2, rng);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd in = VectorXd::NullaryExpr(7, [&] { return rng.normal(); });
    const VectorXd vals = q.values(in);
    CHECK(q.total(in) == vals.sum());  // bit-exact
  }
}

TEST_CASE("batched forward is bit-exact against single evaluation") {
  Rng rng(10);
  Mlp mlp = Mlp::make(5, {12}, 4, rng);
  Mat xs = randn(5, 9, rng);
  Mat batch = mlp.forward_batch(xs);
  for (int j = 0; j < xs.cols(); ++j) {
    VectorXd single = mlp.forward(xs.col(j));
    CHECK((batch.col(j) - single).norm() == 0.0);
  }
}

TEST_CASE("backward rejects a non-finite loss") {
  Rng rng(11);
  Mat w = randn(2, 2, rng);
  Graph g;
  Var wv = g.leaf(&w);
  Var bad = vlog(affine_scalar(vsquare(wv), -1.0, 0.0));  // log of negatives
  CHECK_THROWS_AS(g.backward(sum_all(bad)), NnError);
}

TEST_CASE("adam reduces a simple quadratic") {
  Rng rng(12);
  Mat w = randn(3, 3, rng);
  const Mat target = randn(3, 3, rng);
  Adam opt(0.05);
  auto loss_of = [&] { return 0.5 * (w - target).squaredNorm(); };
  const double before = loss_of();
  for (int it = 0; it < 200; ++it) {
    Graph g;
    Var wv = g.leaf(&w);
    Var loss = affine_scalar(sum_all(vsquare(sub(wv, g.constant(target)))), 0.5, 0.0);
    g.backward(loss);
    opt.step(g.leaf_grads());
  }
  CHECK(loss_of() < 0.01 * before);
}
