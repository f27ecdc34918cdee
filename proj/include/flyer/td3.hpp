#pragma once

#include <cstdint>
#include <vector>

#include "flyer/env.hpp"
#include "flyer/rng.hpp"

namespace flyer {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Adam moment-estimate decay rates and denominator floor.
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

/// Fully connected network: rectifier hidden layers, output squashed to
/// (-1,1) for the actor and left linear for the critic. The critic consumes
/// the state with the action appended.
struct NetworkParams {
  enum class Output { Tanh, Linear };

  std::vector<MatX> W;  ///< W[l] maps layer l input (cols) to output (rows)
  std::vector<VecX> b;
  Output output = Output::Linear;

  int input_dim() const { return static_cast<int>(W.front().cols()); }
  int output_dim() const { return static_cast<int>(W.back().rows()); }
  int layers() const { return static_cast<int>(W.size()); }
  std::size_t parameter_count() const;

  /// Fan-in-scaled uniform initialization, fully determined by the stream.
  static NetworkParams make(int in, const std::vector<int>& hidden, int out,
                            Output output, Rng& rng);
  /// Same shapes, all parameters zero (gradient / moment containers).
  static NetworkParams zeros_like(const NetworkParams& shape);

  /// Layer shapes chain and every parameter is finite.
  void validate() const;
};

/// Per-layer first/second moment estimates plus the shared step counter.
struct AdamState {
  std::vector<MatX> mW, vW;
  std::vector<VecX> mb, vb;
  std::int64_t t = 0;

  static AdamState zeros_like(const NetworkParams& shape);
};

/// Everything the learner is allowed to tune, with the training defaults.
struct LearnerConfig {
  std::vector<int> hidden = {400, 400, 400, 300};
  double learning_rate = 1e-4;  ///< shared by the actor and both critics
  double gamma = 0.99;
  int batch = 100;
  int policy_delay = 2;  ///< actor/target cadence d
  double tau = 5e-4;

  double sigma_warmup = 1.0;  ///< exploration noise before `warmup_steps`
  double sigma = 0.1;         ///< and after
  std::int64_t warmup_steps = 100;
  double noise_cutoff_distance = 10.0;  ///< noise off when closer to the goal

  double smoothing_sigma = 0.2;  ///< target-policy smoothing scale
  double smoothing_clip = 0.5;   ///< and clip

  std::size_t replay_capacity = 1000000;

  /// Deterministic learning cadence: iterations run per stroke. The sentinel
  /// -1 matches the number of transitions inserted for that stroke, so one
  /// stroke trains over exactly one stroke's worth of reproduced data.
  int learn_per_stroke = -1;

  std::uint64_t seed = 0;

  void validate() const;
};

/// FIFO experience store over the reproduced transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  std::size_t capacity() const { return cap_; }
  std::size_t size() const { return data_.size(); }
  bool ready(int batch) const { return size() >= static_cast<std::size_t>(batch); }
  std::int64_t total_inserted() const { return inserted_; }

  void push(const Transition& t);
  void push(const std::vector<Transition>& batch);

  /// Insertion order, index 0 = oldest survivor.
  const Transition& at(std::size_t i) const;

 private:
  std::size_t cap_;
  std::size_t head_ = 0;  ///< next slot to overwrite once full
  std::int64_t inserted_ = 0;
  std::vector<Transition> data_;
};

/// The six parameter sets, their optimizers, and the two counters that
/// define where training stands. Plain data; checkpointing serializes it.
struct LearnerState {
  NetworkParams actor, critic1, critic2;
  NetworkParams actor_target, critic1_target, critic2_target;
  AdamState actor_opt, critic1_opt, critic2_opt;
  std::int64_t iterations = 0;  ///< completed learn iterations (m)
  std::int64_t strokes = 0;     ///< actions selected (exploration schedule)

  /// Fresh networks with targets initialized equal to the online nets.
  static LearnerState init(int obs_dim, int act_dim, const LearnerConfig& cfg,
                           Rng& rng);
};

/// Batched forward pass; columns are samples. When `cache` is given the
/// layer activations are kept for a later backward().
struct ForwardCache {
  std::vector<MatX> act;  ///< act[0] = input, act[l+1] = layer l output
};
MatX forward(const NetworkParams& net, const MatX& input, ForwardCache* cache = nullptr);

/// Backpropagate `dOut` (gradient of a scalar loss in the network output,
/// out x N) through the cached pass. Fills `grads` when given (shapes of
/// `net`) and returns the gradient with respect to the input.
MatX backward(const NetworkParams& net, const ForwardCache& cache, const MatX& dOut,
              NetworkParams* grads);

/// Deterministic policy evaluation; components land in [-1, 1].
Action actor_forward(const NetworkParams& actor, const Obs& s);

double critic_forward(const NetworkParams& critic, const Obs& s, const Action& a);

/// Policy action plus exploration noise: Normal(0, sigma^2) per component,
/// warm-up sigma for the first `warmup_steps` selections, none at all within
/// the cutoff distance of the goal, result clipped to [-1, 1].
Action select_action(const NetworkParams& actor, const Obs& s, std::int64_t steps_taken,
                     double distance_to_goal, const LearnerConfig& cfg, Rng& rng);

/// Bias-corrected Adam update of `params` in place. Throws TrainingError on
/// a non-finite gradient.
void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& opt,
               double lr);

/// target <- tau * online + (1 - tau) * target, every layer.
void soft_update(NetworkParams& target, const NetworkParams& online, double tau);

/// One TD3 iteration: sample a mini-batch, regress both critics on the
/// twin-min smoothed target (y = r on terminal transitions), and on every
/// `policy_delay`-th iteration step the actor up its value gradient and
/// soft-update all three targets. Returns false (touching nothing) while
/// the buffer holds fewer than `batch` transitions.
bool learn_iteration(LearnerState& st, const ReplayBuffer& buffer,
                     const LearnerConfig& cfg, Rng& rng);

}  // namespace flyer
