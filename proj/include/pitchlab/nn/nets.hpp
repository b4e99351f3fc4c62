#pragma once

#include <unordered_map>

#include "pitchlab/checkpoint.hpp"
#include "pitchlab/nn/autodiff.hpp"
#include "pitchlab/rng.hpp"

namespace pitchlab {

using Eigen::VectorXd;

struct DenseLayer {
  Mat W;
  Mat b;  // d x 1
};

// Plain MLP, tanh on all but the last layer. Inference goes through a
// per-column GEMV path so a batched evaluation is bit-identical to
// evaluating columns one at a time.
struct Mlp {
  std::vector<DenseLayer> layers;

  static Mlp make(int in, const std::vector<int>& hidden, int out, Rng& rng,
                  double final_scale = 1.0);

  int in_dim() const { return static_cast<int>(layers.front().W.cols()); }
  int out_dim() const { return static_cast<int>(layers.back().W.rows()); }

  VectorXd forward(const VectorXd& x) const;
  // hidden activations (post-tanh) for probe analyses
  VectorXd forward_with_hidden(const VectorXd& x, std::vector<VectorXd>* hidden) const;
  Mat forward_batch(const Mat& x) const;  // column loop, bit-exact vs forward()
  Mat forward_batch_fast(const Mat& x) const;  // GEMM path for training internals

  Var forward_graph(Graph& g, Var x);

  std::vector<Mat*> params();
  std::vector<const Mat*> params() const;
};

// ---------- diagonal Gaussian heads ----------

struct GaussianParams {
  VectorXd mean;
  VectorXd sigma;
};

double gaussian_log_prob(const GaussianParams& p, const VectorXd& z);
VectorXd gaussian_sample(const GaussianParams& p, Rng& rng);
double gaussian_kl(const GaussianParams& p, const GaussianParams& q);
double gaussian_entropy(const GaussianParams& p);

// graph-side, batched over columns; all return 1 x n
Var gaussian_log_prob_graph(Var mean, Var sigma, Var z);
Var gaussian_kl_graph(Var mean_p, Var sigma_p, Var mean_q, Var sigma_q);

// sigma squash: sigma_min + (sigma_max - sigma_min) * sigmoid(raw).
// Bounded on both sides so the stddev invariant holds by construction.
struct PolicyNet {
  Mlp mlp;  // out = 2 * act_dim (mean rows, raw-sigma rows)
  int act_dim = 0;
  double sigma_min = 1e-3;
  double sigma_max = 2.0;
  bool squash_mean = false;  // tanh-squash means into [mean_lo, mean_hi]
  VectorXd mean_lo, mean_hi;

  static PolicyNet make(int obs_dim, int act_dim, int hidden, int layers, Rng& rng,
                        double sigma_min, double sigma_max, double sigma_init = 0.5,
                        double mean_init_scale = 0.01);

  GaussianParams forward(const VectorXd& obs) const;
  GaussianParams forward_with_hidden(const VectorXd& obs, std::vector<VectorXd>* hidden) const;
  std::pair<Var, Var> forward_graph(Graph& g, Var obs);  // (mean, sigma), each d x n

  std::vector<Mat*> params() { return mlp.params(); }
  std::vector<const Mat*> params() const { return mlp.params(); }
};

// One value head per reward channel over a shared tanh trunk. The total is
// the exact sum of the channel heads.
struct MultiChannelQ {
  Mlp trunk;    // obs+act -> feature (tanh applied to trunk output)
  Mat w_heads;  // channels x feature
  Mat b_heads;  // channels x 1

  static MultiChannelQ make(int in_dim, int channels, int hidden, int layers, Rng& rng);

  int channels() const { return static_cast<int>(w_heads.rows()); }
  VectorXd values(const VectorXd& input) const;
  Mat values_batch_fast(const Mat& input) const;
  double total(const VectorXd& input) const;
  Var values_graph(Graph& g, Var input);  // channels x n

  std::vector<Mat*> params();
  std::vector<const Mat*> params() const;
};

// ---------- optimizer ----------

class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

  // Applies one update; throws NnError on non-finite gradients.
  void step(const std::vector<std::pair<Mat*, Mat>>& grads);

 private:
  struct Slot {
    Mat m, v;
  };
  std::unordered_map<Mat*, Slot> slots_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long long t_ = 0;
};

// ---------- finite differences ----------

// Max relative error between analytic gradients of build(g) and central
// finite differences over every coordinate of every param (or a probe
// subset when probe_limit > 0).
double gradcheck_max_rel_error(const std::vector<Mat*>& params,
                               const std::function<Var(Graph&)>& build, double h = 1e-5,
                               int probe_limit = 0, Rng* rng = nullptr);

// ---------- checkpoint adapters ----------

void add_mlp_tensors(NamedTensors& out, const std::string& prefix, const Mlp& mlp);
void load_mlp_tensors(const NamedTensors& in, const std::string& prefix, Mlp& mlp);
void add_policy_tensors(NamedTensors& out, const std::string& prefix, const PolicyNet& net);
void load_policy_tensors(const NamedTensors& in, const std::string& prefix, PolicyNet& net);
void add_q_tensors(NamedTensors& out, const std::string& prefix, const MultiChannelQ& q);
void load_q_tensors(const NamedTensors& in, const std::string& prefix, MultiChannelQ& q);

uint64_t params_hash(const std::vector<const Mat*>& params);

void save_policy_net(const std::string& prefix, const std::string& tag, const PolicyNet& net);
PolicyNet load_policy_net(const std::string& prefix, std::string* tag_out = nullptr);

}  // namespace pitchlab
