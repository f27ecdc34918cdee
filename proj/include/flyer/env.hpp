#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "flyer/fsi.hpp"

namespace flyer {

/// Normalized 13-component observation handed to the policy.
using Obs = Eigen::Matrix<double, 13, 1>;
/// Encoded action, each component in [-1, 1].
using Action = Eigen::Vector3d;

namespace obs {
constexpr int kXr = 0;    ///< body position relative to the goal
constexpr int kYr = 1;
constexpr int kSin = 2;   ///< body pitch encoded as (sin, cos)
constexpr int kCos = 3;
constexpr int kU = 4;     ///< body velocity
constexpr int kV = 5;
constexpr int kOmega = 6; ///< body angular velocity
constexpr int kUa = 7;    ///< sensed external-flow velocity
constexpr int kVa = 8;
constexpr int kXl = 9;    ///< leading-edge position on the stroke rail
constexpr int kK = 10;    ///< stroke sign
constexpr int kFbx = 11;  ///< body-force (gravity) vector
constexpr int kFby = 12;
}  // namespace obs

/// Distance scale of the reward and of the position normalization.
constexpr double kRewardLengthScale = 1000.0;

/// Componentwise normalization divisors: positions by the reward length
/// scale, velocities by a typical flapping speed, the rail by its half-range,
/// the body force by the flyer's weight, so every entry lands near [-1, 1].
Obs default_obs_scales(const BodyParams& body);

/// r = -sqrt(L / L0) - omega^2 with L0 = 1000; zero only at the goal at rest.
double compute_reward(double distance, double omega);

/// Stroke kinematics commanded by one action.
struct StrokeCommand {
  double amplitude = 0.0;        ///< [0, 5.4]
  double pitch_amplitude = 0.0;  ///< [0, pi/4]
  double frequency = 1.0;        ///< [0.5, 1.5]
};

/// Affine map from [-1,1]^3 onto the command ranges (inputs are clamped).
StrokeCommand decode_action(const Action& encoded);
Action encode_action(const StrokeCommand& cmd);

/// External-flow condition around the domain.
struct BoundaryScenario {
  enum class Kind { Quiescent, Uniform, Pulsatile };
  Kind kind = Kind::Quiescent;

  // uniform: speed * direction imposed on the upstream edge(s)
  double speed = 0.0;
  Vec2 direction = Vec2(1.0, 0.0);

  // pulsatile: oscillating profiles on the left/bottom/top edges, right edge
  // zero-gradient; speeds ramp linearly from zero over [0, t_i]
  double u_lm = 0.59;
  double v_bm = 0.29;
  double f_l = 0.01;
  double f_b = 0.015;
  double t_i = 40.0;
};

/// Time-dependent BoundarySpec realizing the scenario on a rectangular
/// domain [lo, hi]; profiles close over the scenario and evaluate at (y, t).
BoundarySpec boundary_profile(const BoundaryScenario& sc, const Vec2& lo, const Vec2& hi);

/// The velocity reported to the flyer in boundary-imposed sensing mode:
/// the imposed free stream rather than anything probed from the wake.
/// For the pulsatile scenario this is the edge-averaged inflow.
Vec2 imposed_velocity(const BoundaryScenario& sc, double t);

/// One scripted mission entry: a goal change or a disturbance pulse, armed
/// once per episode when its trigger (a time or a line crossing) is met.
struct MissionEvent {
  enum class Kind { GoalChange, MomentPulse, ForcePulse };
  enum class Trigger { Time, CrossX, CrossY };

  Kind kind = Kind::GoalChange;
  Trigger trigger = Trigger::Time;
  double threshold = 0.0;  ///< trigger time, or the line coordinate

  Vec2 goal = Vec2::Zero();  ///< GoalChange payload

  /// Pulse strength as a multiple of the reference: the flyer's weight for
  /// force pulses, EnvConfig::reference_moment for moment pulses.
  double multiple = 0.0;
  double duration = 0.0;
  Vec2 force_dir = Vec2(0.0, -1.0);

  static MissionEvent goal_change(Trigger tr, double threshold, const Vec2& goal);
  static MissionEvent moment_pulse(Trigger tr, double threshold, double multiple = 62.5,
                                   double duration = 2.0);
  static MissionEvent force_pulse(Trigger tr, double threshold, double multiple = 300.0,
                                  double duration = 0.4, const Vec2& dir = Vec2(0.0, -1.0));
};

struct EnvConfig {
  Vec2 start = Vec2::Zero();
  Vec2 goal = Vec2::Zero();
  double start_angle = 0.0;
  Vec2 domain_lo = Vec2(-kRewardLengthScale, -kRewardLengthScale);
  Vec2 domain_hi = Vec2(kRewardLengthScale, kRewardLengthScale);

  BoundaryScenario boundary;

  double success_distance = 5.0;  ///< hover when closer than this ...
  double success_duration = 400.0;  ///< ... for this long without leaving
  int max_strokes = 1000;  ///< episode stroke budget
  int episode_cap = 3;     ///< restarts from the start point per run

  bool antenna_mode = false;  ///< probe the head point instead of the imposed flow
  double head_offset = 0.5;   ///< antenna distance from the mass center (body axis)

  /// Baseline moment for the disturbance multiple. The physical value comes
  /// from an external stability experiment; this is an explicit stand-in.
  double reference_moment = 1.0;

  double dt_target = 0.01;       ///< coupled backend: desired FSI step
  int min_steps_per_stroke = 16;

  double initial_xl = 0.0;  ///< rail position at episode start
  int initial_k = +1;       ///< sign of the first stroke

  std::vector<MissionEvent> events;

  Obs scales = default_obs_scales(BodyParams{});

  void validate() const;
};

/// One stored experience plus the absolute-frame data the reproduction
/// module needs to rebuild the observation in a relocated frame.
struct Transition {
  Obs s = Obs::Zero();
  Action a = Action::Zero();
  double r = 0.0;
  Obs s_next = Obs::Zero();
  bool done = false;

  Vec2 start = Vec2::Zero();        ///< episode start point (absolute)
  Vec2 goal = Vec2::Zero();         ///< goal this transition was scored against
  Vec2 gravity_dir = Vec2(0, -1);   ///< gravity orientation in this frame
  Vec2 body_pos = Vec2::Zero();     ///< absolute pose after the stroke
  double body_angle = 0.0;
  double time = 0.0;                ///< environment clock after the stroke
  /// Normalization the observations were divided by; the reproduction
  /// transforms and reward re-evaluation need it to move between the
  /// normalized state and physical lengths.
  Obs scales = default_obs_scales(BodyParams{});
};

/// What one environment stroke produced, beyond the transition itself.
struct StrokeResult {
  Transition transition;
  bool success = false;  ///< hover criterion latched this episode
  bool failed = false;   ///< left the domain or the solver gave up
  bool moment_active = false;  ///< a disturbance overlapped this stroke
  bool force_active = false;
  StrokeRunReport report;  ///< coupled backend diagnostics (zero otherwise)
  std::string failure;     ///< what the solver threw, when failed is set
};

/// Common surface of the coupled CFD environment and the fluid-free
/// point-mass stand-in: reset, one stroke per action, normalized states.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvConfig& config() const = 0;
  virtual Obs reset() = 0;
  virtual StrokeResult step(const Action& encoded) = 0;

  virtual double time() const = 0;
  virtual double distance_to_goal() const = 0;  ///< raw chord units
  virtual bool done() const = 0;
  virtual int strokes() const = 0;  ///< strokes taken this episode
};

/// Build the normalized observation from a coupled-simulation snapshot.
/// `goal` is the current goal (mission events may have moved it off the
/// configured one).
Obs assemble_state(const CoupledState& sim, const BodyParams& body, double rail_xl,
                   int stroke_sign, const Vec2& goal, const EnvConfig& cfg);

/// Full CFD-CSD environment: one flexible-wing flyer in the fluid domain,
/// stroke-level stepping through the partitioned coupling loop.
class CoupledEnv : public Environment {
 public:
  CoupledEnv(std::shared_ptr<const StretchedGrid> grid, double reynolds,
             const FlowParams& flow_params, const WingParams& wing_params,
             const BodyParams& body_params, const FsiConfig& fsi, EnvConfig cfg);

  CoupledEnv(const CoupledEnv&) = delete;
  CoupledEnv& operator=(const CoupledEnv&) = delete;

  const EnvConfig& config() const override { return cfg_; }
  Obs reset() override;
  StrokeResult step(const Action& encoded) override;

  double time() const override { return state_.time(); }
  double distance_to_goal() const override;
  bool done() const override { return done_; }
  int strokes() const override { return strokes_; }

  const CoupledState& state() const { return state_; }
  const Vec2& goal() const { return goal_; }
  double rail_xl() const { return rail_xl_; }
  int stroke_sign() const { return k_; }

 private:
  struct ArmedEvent {
    const MissionEvent* spec = nullptr;
    bool fired = false;
    double fire_time = 0.0;
  };

  Obs assemble() const;
  void update_triggers(double t_end);
  BodyLoad disturbance_at(double t) const;

  std::shared_ptr<const StretchedGrid> grid_;
  FlowSolver flow_;
  WingSolver wing_;
  BodyParams body_params_;
  CoupledStepper stepper_;
  EnvConfig cfg_;
  BoundarySpec bc_;

  CoupledState state_;
  Vec2 goal_ = Vec2::Zero();
  double rail_xl_ = 0.0;
  int k_ = +1;
  int strokes_ = 0;
  bool done_ = false;
  bool success_ = false;
  double hover_clock_ = 0.0;
  Vec2 prev_pos_ = Vec2::Zero();
  std::vector<ArmedEvent> events_;
};

/// Analytic stand-in with the same observation/action/reward surface and the
/// same equivariance under translation, mirroring, and rotation-with-gravity,
/// so reproduced replicas are faithful experience here too. Stroke-averaged
/// forces: thrust along the body normal, a stroke-signed sway along the body
/// axis, a stroke-signed pitch moment from the pitch-amplitude offset, and
/// linear drag against the ambient flow (taken from the boundary scenario).
/// Mission events are a coupled-backend feature and are ignored here.
struct PointMassParams {
  double thrust_gain = 0.011213991769547324;  ///< hover at A=2.7, f=1
  double sway_gain = 0.005;
  double moment_gain = 1.0;
  double drag = 0.5;
  double spin_drag = 2.0;
  double froude = 0.08175;
  Vec2 gravity_dir = Vec2(0.0, -1.0);
  int substeps = 32;
};

class PointMassEnv : public Environment {
 public:
  PointMassEnv(PointMassParams params, EnvConfig cfg);

  const EnvConfig& config() const override { return cfg_; }
  Obs reset() override;
  StrokeResult step(const Action& encoded) override;

  double time() const override { return time_; }
  double distance_to_goal() const override;
  bool done() const override { return done_; }
  int strokes() const override { return strokes_; }

  const PointMassParams& params() const { return params_; }

 private:
  Obs scales() const;
  Obs assemble() const;

  PointMassParams params_;
  EnvConfig cfg_;

  Vec2 pos_ = Vec2::Zero();
  Vec2 vel_ = Vec2::Zero();
  double angle_ = 0.0;
  double omega_ = 0.0;
  double time_ = 0.0;
  double rail_xl_ = 0.0;
  int k_ = +1;
  int strokes_ = 0;
  bool done_ = false;
  bool success_ = false;
  double hover_clock_ = 0.0;
};

}  // namespace flyer
