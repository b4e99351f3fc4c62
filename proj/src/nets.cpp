#include "pitchlab/nn/nets.hpp"

#include <cmath>

namespace pitchlab {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Mlp Mlp::make(int in, const std::vector<int>& hidden, int out, Rng& rng, double final_scale) {
  Mlp mlp;
  std::vector<int> dims;
  dims.push_back(in);
  for (int h : hidden) dims.push_back(h);
  dims.push_back(out);
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer;
    const double scale =
        (i + 2 == dims.size() ? final_scale : 1.0) / std::sqrt(static_cast<double>(dims[i]));
    layer.W = Mat::NullaryExpr(dims[i + 1], dims[i], [&] { return scale * rng.normal(); });
    layer.b = Mat::Zero(dims[i + 1], 1);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

VectorXd Mlp::forward(const VectorXd& x) const { return forward_with_hidden(x, nullptr); }

VectorXd Mlp::forward_with_hidden(const VectorXd& x, std::vector<VectorXd>* hidden) const {
  if (x.size() != in_dim()) throw NnError("Mlp::forward: input dimension mismatch");
  VectorXd h = x;
  for (size_t i = 0; i < layers.size(); ++i) {
    VectorXd y = layers[i].W * h + layers[i].b.col(0);
    if (i + 1 < layers.size()) {
      y = y.array().tanh().matrix();
      if (hidden) hidden->push_back(y);
    }
    h = std::move(y);
  }
  return h;
}

Mat Mlp::forward_batch(const Mat& x) const {
  Mat out(out_dim(), x.cols());
  for (int j = 0; j < x.cols(); ++j) out.col(j) = forward(x.col(j));
  return out;
}

Mat Mlp::forward_batch_fast(const Mat& x) const {
  if (x.rows() != in_dim()) throw NnError("Mlp::forward_batch_fast: input dimension mismatch");
  Mat h = x;
  for (size_t i = 0; i < layers.size(); ++i) {
    Mat y = (layers[i].W * h).colwise() + layers[i].b.col(0);
    if (i + 1 < layers.size()) y = y.array().tanh().matrix();
    h = std::move(y);
  }
  return h;
}

Var Mlp::forward_graph(Graph& g, Var x) {
  Var h = x;
  for (size_t i = 0; i < layers.size(); ++i) {
    Var w = g.leaf(&layers[i].W);
    Var b = g.leaf(&layers[i].b);
    h = add_bias(matmul(w, h), b);
    if (i + 1 < layers.size()) h = vtanh(h);
  }
  return h;
}

std::vector<Mat*> Mlp::params() {
  std::vector<Mat*> out;
  for (auto& l : layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<const Mat*> Mlp::params() const {
  std::vector<const Mat*> out;
  for (const auto& l : layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  return out;
}

// ---------- Gaussian ----------

double gaussian_log_prob(const GaussianParams& p, const VectorXd& z) {
  if (z.size() != p.mean.size()) throw NnError("gaussian_log_prob: dimension mismatch");
  const auto u = (z - p.mean).array() / p.sigma.array();
  return -0.5 * u.square().sum() - p.sigma.array().log().sum() -
         0.5 * kLog2Pi * static_cast<double>(z.size());
}

VectorXd gaussian_sample(const GaussianParams& p, Rng& rng) {
  VectorXd z(p.mean.size());
  for (int i = 0; i < z.size(); ++i) z[i] = p.mean[i] + p.sigma[i] * rng.normal();
  return z;
}

double gaussian_kl(const GaussianParams& p, const GaussianParams& q) {
  const auto sp = p.sigma.array(), sq = q.sigma.array();
  const auto dm = (p.mean - q.mean).array();
  return ((sq.log() - sp.log()) + (sp.square() + dm.square()) / (2.0 * sq.square()) - 0.5).sum();
}

double gaussian_entropy(const GaussianParams& p) {
  return p.sigma.array().log().sum() +
         0.5 * (1.0 + kLog2Pi) * static_cast<double>(p.sigma.size());
}

Var gaussian_log_prob_graph(Var mean, Var sigma, Var z) {
  Graph& g = *mean.g;
  const double d = static_cast<double>(g.val(mean).rows());
  Var u = divide(sub(z, mean), sigma);
  Var per_dim = sub(affine_scalar(vsquare(u), -0.5, 0.0), vlog(sigma));
  return affine_scalar(colwise_sum(per_dim), 1.0, -0.5 * kLog2Pi * d);
}

Var gaussian_kl_graph(Var mean_p, Var sigma_p, Var mean_q, Var sigma_q) {
  Var log_ratio = sub(vlog(sigma_q), vlog(sigma_p));
  Var var_p = vsquare(sigma_p);
  Var dm2 = vsquare(sub(mean_p, mean_q));
  Var denom = affine_scalar(vsquare(sigma_q), 2.0, 0.0);
  Var frac = divide(add(var_p, dm2), denom);
  Var per_dim = affine_scalar(add(log_ratio, frac), 1.0, -0.5);
  return colwise_sum(per_dim);
}

// ---------- PolicyNet ----------

PolicyNet PolicyNet::make(int obs_dim, int act_dim, int hidden, int layers, Rng& rng,
                          double sigma_min, double sigma_max, double sigma_init,
                          double mean_init_scale) {
  PolicyNet net;
  std::vector<int> hs(layers, hidden);
  net.mlp = Mlp::make(obs_dim, hs, 2 * act_dim, rng, mean_init_scale);
  net.act_dim = act_dim;
  net.sigma_min = sigma_min;
  net.sigma_max = sigma_max;
  // bias the raw-sigma rows so the squash starts near sigma_init
  const double frac =
      std::clamp((sigma_init - sigma_min) / (sigma_max - sigma_min), 1e-4, 1.0 - 1e-4);
  net.mlp.layers.back().b.col(0).tail(act_dim).setConstant(std::log(frac / (1.0 - frac)));
  return net;
}

GaussianParams PolicyNet::forward(const VectorXd& obs) const {
  return forward_with_hidden(obs, nullptr);
}

GaussianParams PolicyNet::forward_with_hidden(const VectorXd& obs,
                                              std::vector<VectorXd>* hidden) const {
  const VectorXd out = mlp.forward_with_hidden(obs, hidden);
  GaussianParams p;
  p.mean = out.head(act_dim);
  if (squash_mean) {
    const auto c = 0.5 * (mean_hi + mean_lo).array();
    const auto r = 0.5 * (mean_hi - mean_lo).array();
    p.mean = (c + r * p.mean.array().tanh()).matrix();
  }
  p.sigma = (sigma_min +
             (sigma_max - sigma_min) *
                 out.tail(act_dim).unaryExpr([](double v) { return sigmoid(v); }).array())
                .matrix();
  return p;
}

std::pair<Var, Var> PolicyNet::forward_graph(Graph& g, Var obs) {
  Var out = mlp.forward_graph(g, obs);
  Var mean = slice_rows(out, 0, act_dim);
  if (squash_mean) {
    const int n = static_cast<int>(g.val(obs).cols());
    Mat c = (0.5 * (mean_hi + mean_lo)).replicate(1, n);
    Mat r = (0.5 * (mean_hi - mean_lo)).replicate(1, n);
    mean = add(mul(vtanh(mean), g.constant(std::move(r))), g.constant(std::move(c)));
  }
  Var raw = slice_rows(out, act_dim, 2 * act_dim);
  Var sigma = affine_scalar(vsigmoid(raw), sigma_max - sigma_min, sigma_min);
  return {mean, sigma};
}

// ---------- MultiChannelQ ----------

MultiChannelQ MultiChannelQ::make(int in_dim, int channels, int hidden, int layers, Rng& rng) {
  MultiChannelQ q;
  std::vector<int> hs(layers > 1 ? layers - 1 : 0, hidden);
  q.trunk = Mlp::make(in_dim, hs, hidden, rng);
  q.w_heads = Mat::NullaryExpr(channels, hidden,
                               [&] { return 0.01 * rng.normal() / std::sqrt(double(hidden)); });
  q.b_heads = Mat::Zero(channels, 1);
  return q;
}

VectorXd MultiChannelQ::values(const VectorXd& input) const {
  const VectorXd f = trunk.forward(input).array().tanh().matrix();
  return w_heads * f + b_heads.col(0);
}

Mat MultiChannelQ::values_batch_fast(const Mat& input) const {
  const Mat f = trunk.forward_batch_fast(input).array().tanh().matrix();
  return (w_heads * f).colwise() + b_heads.col(0);
}

double MultiChannelQ::total(const VectorXd& input) const { return values(input).sum(); }

Var MultiChannelQ::values_graph(Graph& g, Var input) {
  Var f = vtanh(trunk.forward_graph(g, input));
  Var w = g.leaf(&w_heads);
  Var b = g.leaf(&b_heads);
  return add_bias(matmul(w, f), b);
}

std::vector<Mat*> MultiChannelQ::params() {
  std::vector<Mat*> out = trunk.params();
  out.push_back(&w_heads);
  out.push_back(&b_heads);
  return out;
}

std::vector<const Mat*> MultiChannelQ::params() const {
  std::vector<const Mat*> out = trunk.params();
  out.push_back(&w_heads);
  out.push_back(&b_heads);
  return out;
}

// ---------- Adam ----------

void Adam::step(const std::vector<std::pair<Mat*, Mat>>& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [param, grad] : grads) {
    if (!grad.allFinite()) throw NnError("Adam::step: non-finite gradient");
    auto it = slots_.find(param);
    if (it == slots_.end()) {
      Slot s;
      s.m = Mat::Zero(param->rows(), param->cols());
      s.v = Mat::Zero(param->rows(), param->cols());
      it = slots_.emplace(param, std::move(s)).first;
    }
    Slot& s = it->second;
    s.m = beta1_ * s.m + (1.0 - beta1_) * grad;
    s.v = (beta2_ * s.v.array() + (1.0 - beta2_) * grad.array().square()).matrix();
    param->array() -=
        lr_ * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + eps_);
  }
}

// ---------- finite differences ----------

double gradcheck_max_rel_error(const std::vector<Mat*>& params,
                               const std::function<Var(Graph&)>& build, double h,
                               int probe_limit, Rng* rng) {
  // analytic pass
  Graph g;
  Var loss = build(g);
  g.backward(loss);
  std::unordered_map<Mat*, Mat> analytic;
  for (auto& [p, grad] : g.leaf_grads()) {
    auto it = analytic.find(p);
    if (it == analytic.end())
      analytic.emplace(p, grad);
    else
      it->second += grad;
  }

  auto eval = [&]() {
    Graph gg;
    return gg.val(build(gg))(0, 0);
  };

  double worst = 0.0;
  for (Mat* p : params) {
    auto it = analytic.find(p);
    const bool have = it != analytic.end();
    const long n = p->size();
    std::vector<long> coords;
    if (probe_limit > 0 && n > probe_limit && rng) {
      for (int k = 0; k < probe_limit; ++k)
        coords.push_back(static_cast<long>(rng->uniform_int(static_cast<uint64_t>(n))));
    } else {
      coords.resize(n);
      for (long i = 0; i < n; ++i) coords[i] = i;
    }
    for (long i : coords) {
      double* slot = p->data() + i;
      const double orig = *slot;
      *slot = orig + h;
      const double up = eval();
      *slot = orig - h;
      const double dn = eval();
      *slot = orig;
      const double fd = (up - dn) / (2.0 * h);
      const double an = have ? *(it->second.data() + i) : 0.0;
      const double denom = std::max({1e-8, std::abs(fd), std::abs(an)});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

// ---------- checkpoint adapters ----------

void add_mlp_tensors(NamedTensors& out, const std::string& prefix, const Mlp& mlp) {
  for (size_t i = 0; i < mlp.layers.size(); ++i) {
    out.add(prefix + ".w" + std::to_string(i), mlp.layers[i].W);
    out.add(prefix + ".b" + std::to_string(i), mlp.layers[i].b);
  }
}

void load_mlp_tensors(const NamedTensors& in, const std::string& prefix, Mlp& mlp) {
  mlp.layers.clear();
  for (size_t i = 0; in.has(prefix + ".w" + std::to_string(i)); ++i) {
    DenseLayer layer;
    layer.W = in.get(prefix + ".w" + std::to_string(i));
    layer.b = in.get(prefix + ".b" + std::to_string(i));
    mlp.layers.push_back(std::move(layer));
  }
  if (mlp.layers.empty()) throw CheckpointError("no layers found under '" + prefix + "'");
}

void add_policy_tensors(NamedTensors& out, const std::string& prefix, const PolicyNet& net) {
  add_mlp_tensors(out, prefix, net.mlp);
  Mat meta(4, 1);
  meta << net.act_dim, net.sigma_min, net.sigma_max, net.squash_mean ? 1.0 : 0.0;
  out.add(prefix + ".head", meta);
  if (net.squash_mean) {
    out.add(prefix + ".mean_lo", net.mean_lo);
    out.add(prefix + ".mean_hi", net.mean_hi);
  }
}

void load_policy_tensors(const NamedTensors& in, const std::string& prefix, PolicyNet& net) {
  load_mlp_tensors(in, prefix, net.mlp);
  const Mat& meta = in.get(prefix + ".head");
  net.act_dim = static_cast<int>(meta(0, 0));
  net.sigma_min = meta(1, 0);
  net.sigma_max = meta(2, 0);
  net.squash_mean = meta(3, 0) != 0.0;
  if (net.squash_mean) {
    net.mean_lo = in.get(prefix + ".mean_lo");
    net.mean_hi = in.get(prefix + ".mean_hi");
  }
}

void add_q_tensors(NamedTensors& out, const std::string& prefix, const MultiChannelQ& q) {
  add_mlp_tensors(out, prefix + ".trunk", q.trunk);
  out.add(prefix + ".w_heads", q.w_heads);
  out.add(prefix + ".b_heads", q.b_heads);
}

void load_q_tensors(const NamedTensors& in, const std::string& prefix, MultiChannelQ& q) {
  load_mlp_tensors(in, prefix + ".trunk", q.trunk);
  q.w_heads = in.get(prefix + ".w_heads");
  q.b_heads = in.get(prefix + ".b_heads");
}

uint64_t params_hash(const std::vector<const Mat*>& params) {
  uint64_t h = 14695981039346656037ULL;
  for (const Mat* m : params) h = fnv1a64(m->data(), sizeof(double) * m->size(), h);
  return h;
}

void save_policy_net(const std::string& prefix, const std::string& tag, const PolicyNet& net) {
  NamedTensors t;
  add_policy_tensors(t, "net", net);
  save_checkpoint(prefix, tag, t);
}

PolicyNet load_policy_net(const std::string& prefix, std::string* tag_out) {
  NamedTensors t = load_checkpoint(prefix, tag_out);
  PolicyNet net;
  net.mlp.layers.resize(1);
  load_policy_tensors(t, "net", net);
  return net;
}

}  // namespace pitchlab
