#include "flyer/td3.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "flyer/errors.hpp"

namespace flyer {

namespace {

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

void fill_uniform(double* data, std::ptrdiff_t n, double bound, Rng& rng) {
  for (std::ptrdiff_t i = 0; i < n; ++i) data[i] = rng.uniform(-bound, bound);
}

}  // namespace

// --- parameters ---------------------------------------------------------------

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < W.size(); ++l) n += W[l].size() + b[l].size();
  return n;
}

NetworkParams NetworkParams::make(int in, const std::vector<int>& hidden, int out,
                                  Output output, Rng& rng) {
  if (in <= 0 || out <= 0) throw ParameterError("network input/output dims must be positive");
  if (hidden.empty()) throw ParameterError("network needs at least one hidden layer");
  for (int h : hidden)
    if (h <= 0) throw ParameterError("hidden widths must be positive");

  std::vector<int> dims;
  dims.push_back(in);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);

  NetworkParams net;
  net.output = output;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    MatX Wl(dims[l + 1], dims[l]);
    VecX bl(dims[l + 1]);
    fill_uniform(Wl.data(), Wl.size(), bound, rng);
    fill_uniform(bl.data(), bl.size(), bound, rng);
    net.W.push_back(std::move(Wl));
    net.b.push_back(std::move(bl));
  }
  return net;
}

NetworkParams NetworkParams::zeros_like(const NetworkParams& shape) {
  NetworkParams z;
  z.output = shape.output;
  for (std::size_t l = 0; l < shape.W.size(); ++l) {
    z.W.push_back(MatX::Zero(shape.W[l].rows(), shape.W[l].cols()));
    z.b.push_back(VecX::Zero(shape.b[l].size()));
  }
  return z;
}

void NetworkParams::validate() const {
  if (W.empty() || W.size() != b.size())
    throw ParameterError("network layer lists are empty or inconsistent");
  for (std::size_t l = 0; l < W.size(); ++l) {
    if (l > 0 && W[l].cols() != W[l - 1].rows())
      throw ParameterError("layer " + std::to_string(l) + " input does not chain");
    if (b[l].size() != W[l].rows())
      throw ParameterError("bias " + std::to_string(l) + " does not match its layer");
    if (!W[l].allFinite() || !b[l].allFinite())
      throw ParameterError("non-finite parameter in layer " + std::to_string(l));
  }
}

AdamState AdamState::zeros_like(const NetworkParams& shape) {
  AdamState s;
  for (std::size_t l = 0; l < shape.W.size(); ++l) {
    s.mW.push_back(MatX::Zero(shape.W[l].rows(), shape.W[l].cols()));
    s.vW.push_back(MatX::Zero(shape.W[l].rows(), shape.W[l].cols()));
    s.mb.push_back(VecX::Zero(shape.b[l].size()));
    s.vb.push_back(VecX::Zero(shape.b[l].size()));
  }
  return s;
}

void LearnerConfig::validate() const {
  if (hidden.empty()) throw ParameterError("hidden widths must not be empty");
  for (int h : hidden)
    if (h <= 0) throw ParameterError("hidden widths must be positive");
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0, 1]");
  if (batch < 1) throw ParameterError("batch size must be at least 1");
  if (policy_delay < 1) throw ParameterError("policy delay must be at least 1");
  if (!(tau > 0.0 && tau <= 1.0)) throw ParameterError("tau must lie in (0, 1]");
  if (sigma_warmup < 0.0 || sigma < 0.0 || smoothing_sigma < 0.0 || smoothing_clip < 0.0)
    throw ParameterError("noise scales must be non-negative");
  if (warmup_steps < 0) throw ParameterError("warm-up length must be non-negative");
  if (noise_cutoff_distance < 0.0)
    throw ParameterError("noise cutoff distance must be non-negative");
  if (replay_capacity < static_cast<std::size_t>(batch))
    throw ParameterError("replay capacity must hold at least one batch");
  if (learn_per_stroke < -1)
    throw ParameterError("learn_per_stroke must be -1 (match insertions) or >= 0");
}

// --- replay -------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : cap_(capacity) {
  if (capacity == 0) throw ParameterError("replay capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < cap_) {
    data_.push_back(t);
  } else {
    data_[head_] = t;
    head_ = (head_ + 1) % cap_;
  }
  ++inserted_;
}

void ReplayBuffer::push(const std::vector<Transition>& batch) {
  for (const Transition& t : batch) push(t);
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw ParameterError("replay index out of range");
  return data_.size() < cap_ ? data_[i] : data_[(head_ + i) % cap_];
}

// --- forward / backward -------------------------------------------------------

MatX forward(const NetworkParams& net, const MatX& input, ForwardCache* cache) {
  if (net.W.empty()) throw ParameterError("forward through an empty network");
  if (input.rows() != net.input_dim())
    throw ParameterError("input has " + std::to_string(input.rows()) +
                         " rows, network expects " + std::to_string(net.input_dim()));
  if (cache) {
    cache->act.clear();
    cache->act.reserve(net.layers() + 1);
    cache->act.push_back(input);
  }
  MatX x = input;
  for (int l = 0; l < net.layers(); ++l) {
    MatX z = (net.W[l] * x).colwise() + net.b[l];
    if (l + 1 < net.layers())
      x = z.cwiseMax(0.0);
    else if (net.output == NetworkParams::Output::Tanh)
      x = z.array().tanh().matrix();
    else
      x = std::move(z);
    if (cache) cache->act.push_back(x);
  }
  return x;
}

MatX backward(const NetworkParams& net, const ForwardCache& cache, const MatX& dOut,
              NetworkParams* grads) {
  const int L = net.layers();
  if (static_cast<int>(cache.act.size()) != L + 1)
    throw ParameterError("forward cache does not match the network");
  for (int l = 0; l < L; ++l)
    if (cache.act[l].rows() != net.W[l].cols())
      throw ParameterError("forward cache does not match layer " + std::to_string(l));
  if (dOut.rows() != net.output_dim() || dOut.cols() != cache.act[0].cols())
    throw ParameterError("output-gradient shape mismatch");
  if (grads) {
    grads->W.resize(L);
    grads->b.resize(L);
    grads->output = net.output;
  }

  MatX delta;
  if (net.output == NetworkParams::Output::Tanh) {
    const MatX& y = cache.act[L];
    delta = dOut.cwiseProduct((1.0 - y.array().square()).matrix());
  } else {
    delta = dOut;
  }

  for (int l = L - 1;; --l) {
    if (grads) {
      grads->W[l].noalias() = delta * cache.act[l].transpose();
      grads->b[l] = delta.rowwise().sum();
    }
    MatX dx = net.W[l].transpose() * delta;
    if (l == 0) return dx;
    // Rectifier mask: the cached activation is the rectifier output.
    delta = dx.cwiseProduct((cache.act[l].array() > 0.0).cast<double>().matrix());
  }
}

// --- policy evaluation ----------------------------------------------------

Action actor_forward(const NetworkParams& actor, const Obs& s) {
  if (!s.allFinite()) throw ParameterError("non-finite observation");
  if (actor.input_dim() != s.size() || actor.output_dim() != 3)
    throw ParameterError("actor shapes do not match the observation/action layout");
  const MatX out = forward(actor, s);
  return Action(out(0, 0), out(1, 0), out(2, 0));
}

double critic_forward(const NetworkParams& critic, const Obs& s, const Action& a) {
  if (critic.input_dim() != s.size() + a.size() || critic.output_dim() != 1)
    throw ParameterError("critic shapes do not match the state-action layout");
  VecX in(s.size() + a.size());
  in << s, a;
  return forward(critic, in)(0, 0);
}

Action select_action(const NetworkParams& actor, const Obs& s, std::int64_t steps_taken,
                     double distance_to_goal, const LearnerConfig& cfg, Rng& rng) {
  Action a = actor_forward(actor, s);
  if (distance_to_goal >= cfg.noise_cutoff_distance) {
    const double sigma = steps_taken < cfg.warmup_steps ? cfg.sigma_warmup : cfg.sigma;
    for (int c = 0; c < a.size(); ++c) a[c] = clamp1(a[c] + sigma * rng.normal());
  }
  return a;
}

// --- optimization -----------------------------------------------------------

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& opt,
               double lr) {
  const int L = params.layers();
  if (grads.layers() != L || static_cast<int>(opt.mW.size()) != L)
    throw ParameterError("gradient/optimizer layout does not match the network");
  for (int l = 0; l < L; ++l) {
    if (grads.W[l].rows() != params.W[l].rows() || grads.W[l].cols() != params.W[l].cols() ||
        grads.b[l].size() != params.b[l].size())
      throw ParameterError("gradient shapes do not match layer " + std::to_string(l));
    if (!grads.W[l].allFinite() || !grads.b[l].allFinite()) {
      char msg[96];
      std::snprintf(msg, sizeof msg, "non-finite gradient in layer %d (|g|_max = %g)", l,
                    std::max(grads.W[l].cwiseAbs().maxCoeff(), grads.b[l].cwiseAbs().maxCoeff()));
      throw TrainingError(msg);
    }
  }

  opt.t += 1;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(opt.t));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(opt.t));
  for (int l = 0; l < L; ++l) {
    opt.mW[l] = kAdamBeta1 * opt.mW[l] + (1.0 - kAdamBeta1) * grads.W[l];
    opt.vW[l] = kAdamBeta2 * opt.vW[l] + (1.0 - kAdamBeta2) * grads.W[l].cwiseProduct(grads.W[l]);
    params.W[l].array() -=
        lr * (opt.mW[l].array() / c1) / ((opt.vW[l].array() / c2).sqrt() + kAdamEps);
    opt.mb[l] = kAdamBeta1 * opt.mb[l] + (1.0 - kAdamBeta1) * grads.b[l];
    opt.vb[l] = kAdamBeta2 * opt.vb[l] + (1.0 - kAdamBeta2) * grads.b[l].cwiseProduct(grads.b[l]);
    params.b[l].array() -=
        lr * (opt.mb[l].array() / c1) / ((opt.vb[l].array() / c2).sqrt() + kAdamEps);
  }
}

void soft_update(NetworkParams& target, const NetworkParams& online, double tau) {
  if (target.layers() != online.layers())
    throw ParameterError("target/online layer counts differ");
  for (int l = 0; l < target.layers(); ++l) {
    target.W[l] = tau * online.W[l] + (1.0 - tau) * target.W[l];
    target.b[l] = tau * online.b[l] + (1.0 - tau) * target.b[l];
  }
}

// --- the learner ------------------------------------------------------------

LearnerState LearnerState::init(int obs_dim, int act_dim, const LearnerConfig& cfg,
                                Rng& rng) {
  cfg.validate();
  LearnerState st;
  st.actor = NetworkParams::make(obs_dim, cfg.hidden, act_dim,
                                 NetworkParams::Output::Tanh, rng);
  st.critic1 = NetworkParams::make(obs_dim + act_dim, cfg.hidden, 1,
                                   NetworkParams::Output::Linear, rng);
  st.critic2 = NetworkParams::make(obs_dim + act_dim, cfg.hidden, 1,
                                   NetworkParams::Output::Linear, rng);
  st.actor_target = st.actor;
  st.critic1_target = st.critic1;
  st.critic2_target = st.critic2;
  st.actor_opt = AdamState::zeros_like(st.actor);
  st.critic1_opt = AdamState::zeros_like(st.critic1);
  st.critic2_opt = AdamState::zeros_like(st.critic2);
  return st;
}

bool learn_iteration(LearnerState& st, const ReplayBuffer& buffer,
                     const LearnerConfig& cfg, Rng& rng) {
  if (!buffer.ready(cfg.batch)) return false;

  const int N = cfg.batch;
  const int od = st.actor.input_dim();
  const int ad = st.actor.output_dim();

  MatX S(od, N), Sn(od, N), A(ad, N);
  Eigen::RowVectorXd r(N);
  std::vector<char> terminal(N);
  for (int j = 0; j < N; ++j) {
    const Transition& t = buffer.at(rng.uniform_index(buffer.size()));
    S.col(j) = t.s;
    Sn.col(j) = t.s_next;
    A.col(j) = t.a;
    r(j) = t.r;
    terminal[j] = t.done ? 1 : 0;
  }

  // Twin-min target with clipped smoothing noise on the target policy.
  MatX An = forward(st.actor_target, Sn);
  for (int j = 0; j < N; ++j)
    for (int c = 0; c < ad; ++c) {
      const double eps = std::clamp(cfg.smoothing_sigma * rng.normal(),
                                    -cfg.smoothing_clip, cfg.smoothing_clip);
      An(c, j) = clamp1(An(c, j) + eps);
    }
  MatX In(od + ad, N);
  In.topRows(od) = Sn;
  In.bottomRows(ad) = An;
  const MatX q1n = forward(st.critic1_target, In);
  const MatX q2n = forward(st.critic2_target, In);
  Eigen::RowVectorXd y(N);
  for (int j = 0; j < N; ++j)
    y(j) = r(j) + (terminal[j] ? 0.0 : cfg.gamma * std::min(q1n(0, j), q2n(0, j)));

  // Both critics regress on the same batch and target.
  MatX I(od + ad, N);
  I.topRows(od) = S;
  I.bottomRows(ad) = A;
  NetworkParams grads;
  for (auto [critic, opt] : {std::pair{&st.critic1, &st.critic1_opt},
                             std::pair{&st.critic2, &st.critic2_opt}}) {
    ForwardCache cache;
    const MatX q = forward(*critic, I, &cache);
    const MatX dq = (2.0 / N) * (q - y);
    backward(*critic, cache, dq, &grads);
    adam_step(*critic, grads, *opt, cfg.learning_rate);
  }

  st.iterations += 1;
  if (st.iterations % cfg.policy_delay == 0) {
    // Deterministic policy gradient: push the actor up the first critic's
    // value surface, then let all three targets drift after the online nets.
    ForwardCache actor_cache;
    const MatX Api = forward(st.actor, S, &actor_cache);
    MatX Ip(od + ad, N);
    Ip.topRows(od) = S;
    Ip.bottomRows(ad) = Api;
    ForwardCache critic_cache;
    forward(st.critic1, Ip, &critic_cache);
    const MatX dq = MatX::Constant(1, N, -1.0 / N);
    const MatX dIn = backward(st.critic1, critic_cache, dq, nullptr);
    backward(st.actor, actor_cache, dIn.bottomRows(ad), &grads);
    adam_step(st.actor, grads, st.actor_opt, cfg.learning_rate);

    soft_update(st.actor_target, st.actor, cfg.tau);
    soft_update(st.critic1_target, st.critic1, cfg.tau);
    soft_update(st.critic2_target, st.critic2, cfg.tau);
  }
  return true;
}

}  // namespace flyer
