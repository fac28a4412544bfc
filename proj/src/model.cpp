#include "swarm/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace swarm::model {

using ad::Tape;
using ad::Var;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kLogStdLo = -20.0;
constexpr double kLogStdHi = 2.0;

uint64_t hash_combine(uint64_t h, uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

// Numerically stable log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)).
double log_one_minus_tanh_sq(double u) {
  const double two_u = -2.0 * u;
  const double softplus =
      two_u > 30.0 ? two_u : std::log1p(std::exp(std::min(two_u, 30.0)));
  return 2.0 * (std::log(2.0) - u - softplus);
}

}  // namespace

uint64_t ModelConfig::layout_hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (int v : {d_model, n_heads, n_blocks_enc, n_blocks_dec, window, m_max,
                k_max, obs_dim, action_dim, n_experts,
                mean_pool_time ? 1 : 0}) {
    h = hash_combine(h, static_cast<uint64_t>(v));
  }
  return h;
}

Policy::Policy(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  if (!cfg.valid()) throw std::invalid_argument("Policy: invalid model config");
  Rng rng(seed);
  const int d = cfg.d_model;
  auto lin = [&](const std::string& name, int in, int out, double gain) {
    params_.add(name + ".w", nn::orthogonal(in, out, gain, rng));
    params_.add(name + ".b", Mat::Zero(1, out));
  };
  auto ln = [&](const std::string& name) {
    params_.add(name + ".g", Mat::Ones(1, d));
    params_.add(name + ".b", Mat::Zero(1, d));
  };
  auto emb = [&](const std::string& name, int rows) {
    Mat e(rows, d);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < d; ++c) e(r, c) = 0.02 * rng.gaussian();
    params_.add(name, e);
  };
  auto block = [&](const std::string& p, bool cross) {
    ln(p + ".ln1");
    lin(p + ".attn.q", d, d, 1.0);
    lin(p + ".attn.k", d, d, 1.0);
    lin(p + ".attn.v", d, d, 1.0);
    lin(p + ".attn.o", d, d, 1.0);
    if (cross) {
      ln(p + ".ln_x");
      lin(p + ".xattn.q", d, d, 1.0);
      lin(p + ".xattn.k", d, d, 1.0);
      lin(p + ".xattn.v", d, d, 1.0);
      lin(p + ".xattn.o", d, d, 1.0);
    }
    ln(p + ".ln2");
    lin(p + ".ff1", d, 4 * d, 1.0);
    lin(p + ".ff2", 4 * d, d, 1.0);
  };

  // Encoder.
  params_.add("enc.ln_in.g", Mat::Ones(1, cfg.obs_dim));
  params_.add("enc.ln_in.b", Mat::Zero(1, cfg.obs_dim));
  lin("enc.embed", cfg.obs_dim, d, 1.0);
  emb("enc.time_emb", cfg.window);
  emb("enc.agent_emb", cfg.m_max);
  for (int b = 0; b < cfg.n_blocks_enc; ++b)
    block("enc.blk" + std::to_string(b), false);
  ln("enc.lnf");

  // Value head: two hidden layers, ReLU.
  lin("enc.vhead.l1", d, d, std::sqrt(2.0));
  lin("enc.vhead.l2", d, d, std::sqrt(2.0));
  lin("enc.vhead.out", d, 1, 1.0);

  // Expert mixture.
  for (int j = 0; j < cfg.n_experts; ++j) {
    const std::string p = "moe.e" + std::to_string(j);
    lin(p + ".l1", d, d, std::sqrt(2.0));
    lin(p + ".l2", d, d, std::sqrt(2.0));
    params_.add(p + ".key", nn::orthogonal(d, d, 1.0, rng));    // W_j
    params_.add(p + ".value", nn::orthogonal(d, d, 1.0, rng));  // V_j
  }
  {
    Mat q(2, d);  // one task query per phase: pursuit, attachment
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < d; ++c) q(r, c) = 0.02 * rng.gaussian();
    params_.add("moe.task_query", q);
  }
  lin("moe.h_proj", d, d, 1.0);

  // Decoder.
  params_.add("dec.start", Mat::Zero(1, d));
  lin("dec.embed", cfg.action_dim, d, 1.0);
  emb("dec.agent_emb", cfg.m_max);
  for (int b = 0; b < cfg.n_blocks_dec; ++b)
    block("dec.blk" + std::to_string(b), true);
  ln("dec.lnf");
  lin("dec.mean", d, cfg.action_dim, 0.01);
  // Start with modest exploration noise. Unit pre-squash sigma pushes the
  // tanh into its saturated (bang-bang) regime: fine control drowns, and the
  // induced position random walk carries agents across the whole arena
  // within one episode.
  params_.add("dec.log_std", Mat::Constant(1, cfg.action_dim, -2.5));

  for (int i = 0; i < params_.count(); ++i) {
    if (params_.name(i).rfind("enc.vhead", 0) == 0) vhead_idx_.push_back(i);
  }
  hard_update_target();
}

void Policy::hard_update_target() {
  target_vhead_.clear();
  for (int i : vhead_idx_) target_vhead_.push_back(params_.value(i));
}

void Policy::soft_update_target(double eta_soft) {
  for (size_t k = 0; k < vhead_idx_.size(); ++k) {
    target_vhead_[k] =
        (1.0 - eta_soft) * target_vhead_[k] + eta_soft * params_.value(vhead_idx_[k]);
  }
}

Var Policy::attention(Tape& t, nn::TapeBinding& bind, const std::string& prefix,
                      Var xq, Var xkv, const Mat* mask) const {
  const int d = cfg_.d_model;
  const int dh = d / cfg_.n_heads;
  Var q = ad::add_rowvec(t, ad::matmul(t, xq, bind(prefix + ".q.w")),
                         bind(prefix + ".q.b"));
  Var k = ad::add_rowvec(t, ad::matmul(t, xkv, bind(prefix + ".k.w")),
                         bind(prefix + ".k.b"));
  Var v = ad::add_rowvec(t, ad::matmul(t, xkv, bind(prefix + ".v.w")),
                         bind(prefix + ".v.b"));
  std::vector<Var> heads;
  for (int hidx = 0; hidx < cfg_.n_heads; ++hidx) {
    Var qh = ad::slice_cols(t, q, hidx * dh, dh);
    Var kh = ad::slice_cols(t, k, hidx * dh, dh);
    Var vh = ad::slice_cols(t, v, hidx * dh, dh);
    Var scores = ad::scale(t, ad::matmul_nt(t, qh, kh), 1.0 / std::sqrt(dh));
    if (mask) scores = ad::add_const(t, scores, *mask);
    Var attn = ad::softmax_rows(t, scores);
    heads.push_back(ad::matmul(t, attn, vh));
  }
  Var o = cfg_.n_heads == 1 ? heads[0] : ad::concat_cols(t, heads);
  return ad::add_rowvec(t, ad::matmul(t, o, bind(prefix + ".o.w")),
                        bind(prefix + ".o.b"));
}

Var Policy::encoder_blocks(Tape& t, nn::TapeBinding& bind, Var tokens,
                           int) const {
  Var x = tokens;
  for (int b = 0; b < cfg_.n_blocks_enc; ++b) {
    const std::string p = "enc.blk" + std::to_string(b);
    Var h1 = ad::layernorm_rows(t, x, bind(p + ".ln1.g"), bind(p + ".ln1.b"));
    x = ad::add(t, x, attention(t, bind, p + ".attn", h1, h1, nullptr));
    Var h2 = ad::layernorm_rows(t, x, bind(p + ".ln2.g"), bind(p + ".ln2.b"));
    Var ff = ad::relu(t, ad::add_rowvec(t, ad::matmul(t, h2, bind(p + ".ff1.w")),
                                        bind(p + ".ff1.b")));
    ff = ad::add_rowvec(t, ad::matmul(t, ff, bind(p + ".ff2.w")),
                        bind(p + ".ff2.b"));
    x = ad::add(t, x, ff);
  }
  return ad::layernorm_rows(t, x, bind("enc.lnf.g"), bind("enc.lnf.b"));
}

Var Policy::value_head(Tape& t, nn::TapeBinding& bind, Var reps) const {
  Var h = ad::relu(t, ad::add_rowvec(t, ad::matmul(t, reps, bind("enc.vhead.l1.w")),
                                     bind("enc.vhead.l1.b")));
  h = ad::relu(t, ad::add_rowvec(t, ad::matmul(t, h, bind("enc.vhead.l2.w")),
                                 bind("enc.vhead.l2.b")));
  return ad::add_rowvec(t, ad::matmul(t, h, bind("enc.vhead.out.w")),
                        bind("enc.vhead.out.b"));
}

EncodeOut Policy::encode(Tape& t, nn::TapeBinding& bind,
                         const ObservationWindow& w) const {
  const int n = w.n;
  const int T = w.window;
  if (n < 1 || n > cfg_.m_max || T != cfg_.window ||
      w.rows.rows() != T * n || w.rows.cols() != cfg_.obs_dim) {
    throw std::invalid_argument("encode: window shape mismatch");
  }
  if (!w.rows.allFinite()) throw std::invalid_argument("encode: non-finite input");

  Var obs = t.leaf(w.rows);
  obs = ad::layernorm_rows(t, obs, bind("enc.ln_in.g"), bind("enc.ln_in.b"));
  Var tokens = ad::add_rowvec(t, ad::matmul(t, obs, bind("enc.embed.w")),
                              bind("enc.embed.b"));

  // Additive time and agent-index encodings via 0/1 selector matmuls.
  Mat sel_t = Mat::Zero(T * n, cfg_.window);
  Mat sel_a = Mat::Zero(T * n, cfg_.m_max);
  for (int ti = 0; ti < T; ++ti)
    for (int i = 0; i < n; ++i) {
      sel_t(ti * n + i, ti) = 1.0;
      sel_a(ti * n + i, i) = 1.0;
    }
  tokens = ad::add(t, tokens,
                   ad::matmul(t, t.leaf(sel_t), bind("enc.time_emb")));
  tokens = ad::add(t, tokens,
                   ad::matmul(t, t.leaf(sel_a), bind("enc.agent_emb")));

  Var encoded = encoder_blocks(t, bind, tokens, T * n);

  Var reps;
  if (cfg_.mean_pool_time) {
    Mat pool = Mat::Zero(n, T * n);
    for (int ti = 0; ti < T; ++ti)
      for (int i = 0; i < n; ++i) pool(i, ti * n + i) = 1.0 / T;
    reps = ad::matmul(t, t.leaf(pool), encoded);
  } else {
    reps = ad::slice_rows(t, encoded, (T - 1) * n, n);
  }
  EncodeOut out;
  out.reps = reps;
  out.values = value_head(t, bind, reps);
  if (!t.value(out.reps).allFinite() || !t.value(out.values).allFinite()) {
    throw std::runtime_error("encode: non-finite activations");
  }
  return out;
}

Eigen::VectorXd Policy::target_values(const ObservationWindow& w) const {
  Tape t;
  nn::TapeBinding bind(t, params_);
  EncodeOut enc = encode(t, bind, w);
  // Plain forward through the lag copy of the value head.
  const Mat& reps = t.value(enc.reps);
  // target_vhead_ order mirrors vhead_idx_: l1.w, l1.b, l2.w, l2.b, out.w, out.b
  Mat h = ((reps * target_vhead_[0]).rowwise() + target_vhead_[1].row(0)).cwiseMax(0.0);
  h = ((h * target_vhead_[2]).rowwise() + target_vhead_[3].row(0)).cwiseMax(0.0);
  Mat v = (h * target_vhead_[4]).rowwise() + target_vhead_[5].row(0);
  return v.col(0);
}

MixOut Policy::mixture(Tape& t, nn::TapeBinding& bind, Var reps,
                       int task) const {
  if (task < 0 || task >= 2) throw std::invalid_argument("mixture: bad task");
  Var pooled = ad::mean_rows(t, reps);  // 1 x d
  Var query = ad::slice_rows(t, bind("moe.task_query"), task, 1);
  std::vector<Var> logits, values;
  for (int j = 0; j < cfg_.n_experts; ++j) {
    const std::string p = "moe.e" + std::to_string(j);
    Var e = ad::relu(t, ad::add_rowvec(t, ad::matmul(t, pooled, bind(p + ".l1.w")),
                                       bind(p + ".l1.b")));
    e = ad::relu(t, ad::add_rowvec(t, ad::matmul(t, e, bind(p + ".l2.w")),
                                   bind(p + ".l2.b")));
    Var key = ad::matmul(t, e, bind(p + ".key"));      // 1 x d
    logits.push_back(ad::matmul_nt(t, key, query));    // 1 x 1
    values.push_back(ad::matmul(t, e, bind(p + ".value")));  // 1 x d
  }
  MixOut out;
  out.alpha = ad::softmax_rows(
      t, cfg_.n_experts == 1 ? logits[0] : ad::concat_cols(t, logits));
  Var stacked = cfg_.n_experts == 1 ? values[0] : ad::concat_rows(t, values);
  Var h = ad::matmul(t, out.alpha, stacked);  // 1 x d
  out.h = ad::add_rowvec(t, ad::matmul(t, h, bind("moe.h_proj.w")),
                         bind("moe.h_proj.b"));
  return out;
}

Var Policy::decoder_tokens_out(Tape& t, nn::TapeBinding& bind, Var reps, Var h,
                               const Mat& pre_squash_prefix, int n_tokens) const {
  // Token 0 is the start embedding; token m >= 1 embeds agent (m-1)'s action.
  Var tok0 = bind("dec.start");
  Var tokens = tok0;
  if (n_tokens > 1) {
    Mat squashed = pre_squash_prefix.topRows(n_tokens - 1).array().tanh();
    Var acts = t.leaf(squashed);
    Var emb = ad::add_rowvec(t, ad::matmul(t, acts, bind("dec.embed.w")),
                             bind("dec.embed.b"));
    tokens = ad::concat_rows(t, {tok0, emb});
  }
  Mat sel_a = Mat::Zero(n_tokens, cfg_.m_max);
  for (int i = 0; i < n_tokens; ++i) sel_a(i, i) = 1.0;
  tokens = ad::add(t, tokens, ad::matmul(t, t.leaf(sel_a), bind("dec.agent_emb")));

  Mat mask(n_tokens, n_tokens);
  for (int r = 0; r < n_tokens; ++r)
    for (int c = 0; c < n_tokens; ++c) mask(r, c) = c <= r ? 0.0 : kNegInf;

  Var x = tokens;
  for (int b = 0; b < cfg_.n_blocks_dec; ++b) {
    const std::string p = "dec.blk" + std::to_string(b);
    // The expert context conditions every block input.
    x = ad::add_rowvec(t, x, h);
    Var h1 = ad::layernorm_rows(t, x, bind(p + ".ln1.g"), bind(p + ".ln1.b"));
    x = ad::add(t, x, attention(t, bind, p + ".attn", h1, h1, &mask));
    Var hx = ad::layernorm_rows(t, x, bind(p + ".ln_x.g"), bind(p + ".ln_x.b"));
    x = ad::add(t, x, attention(t, bind, p + ".xattn", hx, reps, nullptr));
    Var h2 = ad::layernorm_rows(t, x, bind(p + ".ln2.g"), bind(p + ".ln2.b"));
    Var ff = ad::relu(t, ad::add_rowvec(t, ad::matmul(t, h2, bind(p + ".ff1.w")),
                                        bind(p + ".ff1.b")));
    ff = ad::add_rowvec(t, ad::matmul(t, ff, bind(p + ".ff2.w")),
                        bind(p + ".ff2.b"));
    x = ad::add(t, x, ff);
  }
  return ad::layernorm_rows(t, x, bind("dec.lnf.g"), bind("dec.lnf.b"));
}

DecodeOut Policy::decode_logprobs(Tape& t, nn::TapeBinding& bind, Var reps,
                                  Var h, const Mat& pre_squash, int n,
                                  double a_bound) const {
  if (pre_squash.rows() != n || pre_squash.cols() != cfg_.action_dim) {
    throw std::invalid_argument("decode_logprobs: action shape mismatch");
  }
  Var out = decoder_tokens_out(t, bind, reps, h, pre_squash, n);
  Var means = ad::add_rowvec(t, ad::matmul(t, out, bind("dec.mean.w")),
                             bind("dec.mean.b"));  // n x 3
  Var log_std = ad::clamp(t, bind("dec.log_std"), kLogStdLo, kLogStdHi);

  // Gaussian log-density of the stored pre-squash samples.
  Var neg_mu = ad::scale(t, means, -1.0);
  Var diff = ad::add_const(t, neg_mu, pre_squash);  // u - mu
  Var inv_var = ad::exp_op(t, ad::scale(t, log_std, -2.0));
  Var quad = ad::mul_rowvec(t, ad::square(t, diff), inv_var);
  Var per_dim = ad::scale(t, quad, -0.5);
  Var lp = ad::sum_rows(t, per_dim);  // n x 1
  Var log_std_sum = ad::sum(t, log_std);
  Mat ones_n = Mat::Ones(n, 1);
  lp = ad::add(t, lp, ad::matmul(t, t.leaf(ones_n),
                                 ad::scale(t, log_std_sum, -1.0)));
  // Constant terms: -3/2 log(2pi) and the tanh/scale squash correction.
  Mat corr(n, 1);
  for (int i = 0; i < n; ++i) {
    double c = -0.5 * cfg_.action_dim * kLog2Pi;
    for (int d = 0; d < cfg_.action_dim; ++d) {
      c -= std::log(a_bound) + log_one_minus_tanh_sq(pre_squash(i, d));
    }
    corr(i, 0) = c;
  }
  DecodeOut res;
  res.logprobs = ad::add_const(t, lp, corr);
  const double ent_const = 0.5 * cfg_.action_dim * (1.0 + kLog2Pi);
  Var ent = ad::add_const(
      t, ad::matmul(t, t.leaf(ones_n), log_std_sum),
      Mat::Constant(n, 1, ent_const));
  res.entropies = ent;
  return res;
}

ActSample Policy::decode_act(Tape& t, nn::TapeBinding& bind, Var reps, Var h,
                             const Mat& prev_pre_squash, int agent_index,
                             Rng* rng, double a_bound) const {
  const int n_tokens = agent_index + 1;
  if (prev_pre_squash.rows() < agent_index) {
    throw std::invalid_argument("decode_act: missing previous actions");
  }
  Var out = decoder_tokens_out(t, bind, reps, h, prev_pre_squash, n_tokens);
  Var last = ad::slice_rows(t, out, n_tokens - 1, 1);
  Var mean_v = ad::add_rowvec(t, ad::matmul(t, last, bind("dec.mean.w")),
                              bind("dec.mean.b"));
  const Mat& mu = t.value(mean_v);
  Mat log_std = t.value(bind("dec.log_std")).cwiseMax(kLogStdLo).cwiseMin(kLogStdHi);

  ActSample s;
  double lp = -0.5 * cfg_.action_dim * kLog2Pi;
  for (int d = 0; d < cfg_.action_dim; ++d) {
    const double sd = std::exp(log_std(0, d));
    const double u = rng ? mu(0, d) + sd * rng->gaussian() : mu(0, d);
    s.pre_squash[d] = u;
    s.action[d] = a_bound * std::tanh(u);
    const double z = (u - mu(0, d)) / sd;
    lp += -0.5 * z * z - log_std(0, d) - std::log(a_bound) -
          log_one_minus_tanh_sq(u);
  }
  s.logprob = lp;
  return s;
}

double Policy::gaussian_entropy(const Eigen::Vector3d& log_std) {
  return 0.5 * 3.0 * (1.0 + kLog2Pi) + log_std.sum();
}

}  // namespace swarm::model
