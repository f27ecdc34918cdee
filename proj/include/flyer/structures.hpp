#pragma once

#include <Eigen/Dense>

#include "flyer/errors.hpp"
#include "flyer/types.hpp"

namespace flyer {

// ---------------------------------------------------------------------------
// Stroke kinematics of the wing leading edge (body frame).
//
// Over one stroke of duration 1/(2 f) the leading edge translates by the
// commanded amplitude along the stroke direction while the chord pitches
// sinusoidally around straight-down:
//   xl(t)    = xl(ts) - k (A/2) (cos(2 pi f (t - ts)) - 1)
//   alpha(t) = -pi/2 - k A_alpha sin(2 pi f (t - ts))
// The commanded amplitude is clipped so the end point stays within the
// allowed excursion from the body center.
// ---------------------------------------------------------------------------
struct StrokeSpec {
  double amplitude = 0.0;        ///< A, chords, in [0, 5.4]
  double pitch_amplitude = 0.0;  ///< A_alpha, rad, in [0, pi/4]
  double frequency = 1.0;        ///< f, in [0.5, 1.5]
  int direction = +1;            ///< k, +1 or -1; the upcoming stroke side
  double start_xl = 0.0;         ///< xl(ts), chords, in [-2.7, 2.7]
  double start_time = 0.0;       ///< ts

  static constexpr double kMaxAmplitude = 5.4;
  static constexpr double kMaxPitchAmplitude = 0.7853981633974483;  // pi/4
  static constexpr double kMinFrequency = 0.5;
  static constexpr double kMaxFrequency = 1.5;
  static constexpr double kMaxExcursion = 2.7;

  void validate() const;  ///< throws ParameterError outside the ranges

  double duration() const { return 0.5 / frequency; }
  double end_time() const { return start_time + duration(); }
  /// Amplitude after clipping the stroke end point to +-kMaxExcursion.
  double clipped_amplitude() const;
  double end_xl() const;

  // Leading-edge trajectory; t is clamped to [ts, ts + duration].
  double xl(double t) const;
  double xl_rate(double t) const;
  double pitch(double t) const;
  double pitch_rate(double t) const;

  /// The stroke as seen in a mirrored world: sign-flipped direction and
  /// start position, same amplitudes and timing.
  StrokeSpec mirrored() const {
    StrokeSpec m = *this;
    m.direction = -direction;
    m.start_xl = -start_xl;
    return m;
  }
};

/// Clamp boundary data for the wing root: position, velocity, unit tangent
/// direction of the chord at the clamp, and its time derivative.
struct ClampState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 direction = Vec2(0.0, -1.0);
  Vec2 direction_rate = Vec2::Zero();
};

// ---------------------------------------------------------------------------
// Flexible wing: an elastic filament clamped at the leading edge,
//   rho Xtt = d/ds[ K_T (|Xs|^2 - 1) Xs ] - K_B Xssss + F*/(h ds) + rho Fr g_hat
// discretized on `nodes` points and integrated with explicit velocity-Verlet
// substeps bounded by the bending/tension stability limits.
// ---------------------------------------------------------------------------
struct WingParams {
  int nodes = 33;
  double length = 1.0;
  double density = 1000.0;    ///< rho_wf
  double thickness = 1.0e-3;  ///< h, chords
  double tension = 7.4e6;     ///< K_T
  double bending = 2.0e4;     ///< K_B
  double froude = 0.08175;
  Vec2 gravity_dir = Vec2(0.0, -1.0);
  double substep_safety = 0.4;
  double speed_limit = 1.0e3;  ///< node speed beyond which StabilityError fires

  void validate() const;
  double ds() const { return length / (nodes - 1); }
};

struct WingState {
  Eigen::Matrix2Xd X;  ///< 2 x nodes positions, world frame
  Eigen::Matrix2Xd V;  ///< 2 x nodes velocities
  double time = 0.0;

  static WingState straight(const WingParams& p, const ClampState& clamp);
  int nodes() const { return static_cast<int>(X.cols()); }
};

struct WingEnergy {
  double kinetic = 0.0, tension = 0.0, bending = 0.0, gravity = 0.0;
  double total() const { return kinetic + tension + bending + gravity; }
};

class WingSolver {
 public:
  explicit WingSolver(WingParams params);

  const WingParams& params() const { return params_; }
  /// Largest stable substep (bending and stretching limits times the safety).
  double stable_dt() const { return stable_dt_; }

  /// Advance by dt with the clamp interpolated from c0 (at state.time) to c1
  /// (at state.time + dt) and the integrated per-segment spanwise load
  /// (2 x nodes) held frozen over the step.
  void advance(WingState& state, const ClampState& c0, const ClampState& c1,
               const Eigen::Matrix2Xd& load_per_span, double dt) const;

  /// Nodal accelerations for the current shape (node 0 is clamped; its entry
  /// is zero). Exposed for direct inspection.
  Eigen::Matrix2Xd acceleration(const WingState& state, const ClampState& clamp,
                                const Eigen::Matrix2Xd& load_per_span) const;

  WingEnergy energy(const WingState& state, const ClampState& clamp) const;
  /// max_i | |X_s| - 1 | over segments.
  double max_strain(const WingState& state) const;

 private:
  WingParams params_;
  double stable_dt_ = 0.0;
};

// ---------------------------------------------------------------------------
// Rigid body (position, pitch) advanced with velocity-Verlet: positions from
// the stored accelerations of the converged previous step, velocities from
// the trapezoid of old and new accelerations.
// ---------------------------------------------------------------------------
struct BodyParams {
  double mass_ratio = 197.53086419753086;     ///< m_bw
  double inertia_ratio = 197.53086419753086;  ///< I_bw
  double density_ratio = 1000.0;              ///< rho_wf
  double aspect_ratio = 6.0;
  double thickness = 1.0e-3;
  double froude = 0.08175;
  Vec2 gravity_dir = Vec2(0.0, -1.0);

  void validate() const;
  /// Effective translational / rotational inertia in flow-force units.
  double linear_inertia() const { return mass_ratio * density_ratio * aspect_ratio * thickness; }
  double angular_inertia() const {
    return inertia_ratio * density_ratio * aspect_ratio * thickness;
  }
};

struct BodyLoad {
  Vec2 force = Vec2::Zero();  ///< aerodynamic plus disturbances; no gravity
  double moment = 0.0;
};

struct BodyState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double angle = 0.0;
  double omega = 0.0;
  Vec2 accel = Vec2::Zero();  ///< converged acceleration at `time`
  double alpha = 0.0;
  double time = 0.0;
};

/// Seed the stored accelerations from the load acting at the initial instant.
void body_initialize(BodyState& state, const BodyParams& params, const BodyLoad& load);

/// One velocity-Verlet step. Pure in `state`: repeated calls with improved
/// `load_next` (the load at time + dt) re-evaluate the same step, which is
/// exactly what the partitioned coupling iteration needs.
BodyState body_advance(const BodyState& state, const BodyParams& params, const BodyLoad& load_next,
                       double dt);

/// World-frame clamp data for a stroke riding on a moving body. The leading
/// edge sits at body-frame (xl(t), 0) and the chord leaves the clamp along
/// the body-frame direction (cos alpha, sin alpha).
ClampState clamp_world(const BodyState& body, const StrokeSpec& stroke, double t);

/// Clamp data in a static world frame (body at the origin, untilted).
ClampState clamp_static(const StrokeSpec& stroke, double t);

}  // namespace flyer
