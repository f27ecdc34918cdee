#include "flyer/structures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flyer {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

// ---------------------------------------------------------------------------
// StrokeSpec
// ---------------------------------------------------------------------------

void StrokeSpec::validate() const {
  if (!(amplitude >= 0.0 && amplitude <= kMaxAmplitude))
    throw ParameterError("stroke amplitude " + std::to_string(amplitude) + " outside [0, " +
                         std::to_string(kMaxAmplitude) + "]");
  if (!(pitch_amplitude >= 0.0 && pitch_amplitude <= kMaxPitchAmplitude))
    throw ParameterError("pitch amplitude " + std::to_string(pitch_amplitude) +
                         " outside [0, pi/4]");
  if (!(frequency >= kMinFrequency && frequency <= kMaxFrequency))
    throw ParameterError("stroke frequency " + std::to_string(frequency) + " outside [" +
                         std::to_string(kMinFrequency) + ", " + std::to_string(kMaxFrequency) +
                         "]");
  if (direction != 1 && direction != -1) throw ParameterError("stroke direction must be +-1");
  if (!(std::abs(start_xl) <= kMaxExcursion))
    throw ParameterError("stroke start " + std::to_string(start_xl) + " outside +-" +
                         std::to_string(kMaxExcursion));
  if (!std::isfinite(start_time)) throw ParameterError("stroke start time must be finite");
}

double StrokeSpec::clipped_amplitude() const {
  const double room = direction > 0 ? kMaxExcursion - start_xl : kMaxExcursion + start_xl;
  return std::max(0.0, std::min(amplitude, room));
}

double StrokeSpec::end_xl() const { return start_xl + direction * clipped_amplitude(); }

namespace {
double stroke_phase(const StrokeSpec& s, double t) {
  const double tau = std::clamp(t - s.start_time, 0.0, s.duration());
  return 2.0 * kPi * s.frequency * tau;
}
}  // namespace

double StrokeSpec::xl(double t) const {
  return start_xl - direction * 0.5 * clipped_amplitude() * (std::cos(stroke_phase(*this, t)) - 1.0);
}

double StrokeSpec::xl_rate(double t) const {
  return direction * clipped_amplitude() * kPi * frequency * std::sin(stroke_phase(*this, t));
}

double StrokeSpec::pitch(double t) const {
  return -0.5 * kPi - direction * pitch_amplitude * std::sin(stroke_phase(*this, t));
}

double StrokeSpec::pitch_rate(double t) const {
  return -direction * pitch_amplitude * 2.0 * kPi * frequency * std::cos(stroke_phase(*this, t));
}

// ---------------------------------------------------------------------------
// WingParams / WingState
// ---------------------------------------------------------------------------

void WingParams::validate() const {
  if (nodes < 5) throw ParameterError("wing needs at least 5 nodes");
  if (!(length > 0.0)) throw ParameterError("wing length must be positive");
  if (!(density > 0.0)) throw ParameterError("wing density must be positive");
  if (!(thickness > 0.0)) throw ParameterError("wing thickness must be positive");
  if (!(tension >= 0.0)) throw ParameterError("tension stiffness must be non-negative");
  if (!(bending > 0.0)) throw ParameterError("bending stiffness must be positive");
  if (!(froude >= 0.0)) throw ParameterError("froude number must be non-negative");
  if (!(gravity_dir.norm() > 0.0)) throw ParameterError("gravity direction must be non-zero");
  if (!(substep_safety > 0.0 && substep_safety <= 1.0))
    throw ParameterError("substep safety must lie in (0, 1]");
  if (!(speed_limit > 0.0)) throw ParameterError("speed limit must be positive");
}

WingState WingState::straight(const WingParams& p, const ClampState& clamp) {
  p.validate();
  WingState s;
  s.X.resize(2, p.nodes);
  s.V.resize(2, p.nodes);
  const Vec2 d = clamp.direction.normalized();
  for (int i = 0; i < p.nodes; ++i) {
    const double arc = i * p.ds();
    s.X.col(i) = clamp.position + arc * d;
    s.V.col(i) = clamp.velocity + arc * clamp.direction_rate;
  }
  return s;
}

// ---------------------------------------------------------------------------
// WingSolver
// ---------------------------------------------------------------------------

WingSolver::WingSolver(WingParams params) : params_(params) {
  params_.validate();
  const double ds = params_.ds();
  // Explicit stability limits: bending (stencil eigenvalue bound 16/ds^4)
  // and stretching (longitudinal wave speed sqrt(2 K_T / rho)).
  const double dt_bend = 0.5 * ds * ds * std::sqrt(params_.density / params_.bending);
  double limit = dt_bend;
  if (params_.tension > 0.0) {
    const double dt_tens = ds * std::sqrt(params_.density / (2.0 * params_.tension));
    limit = std::min(limit, dt_tens);
  }
  stable_dt_ = params_.substep_safety * limit;
}

Eigen::Matrix2Xd WingSolver::acceleration(const WingState& state, const ClampState& clamp,
                                          const Eigen::Matrix2Xd& load_per_span) const {
  const int n = params_.nodes;
  if (state.nodes() != n || load_per_span.cols() != n)
    throw ParameterError("wing state/load size does not match the solver");
  const double ds = params_.ds();
  const double inv_ds = 1.0 / ds;
  const Eigen::Matrix2Xd& X = state.X;

  // Extended node array with the clamp ghost (slope fixed by the clamp
  // direction) and the free-end ghosts (zero curvature, zero shear).
  Eigen::Matrix2Xd ext(2, n + 3);
  ext.col(0) = X.col(1) - 2.0 * ds * clamp.direction.normalized();
  ext.middleCols(1, n) = X;
  ext.col(n + 1) = 2.0 * X.col(n - 1) - X.col(n - 2);
  ext.col(n + 2) = 3.0 * X.col(n - 1) - 2.0 * X.col(n - 2);

  // Segment tension fluxes T_j e_j, plus the zero flux past the free end.
  Eigen::Matrix2Xd flux(2, n);
  for (int j = 0; j + 1 < n; ++j) {
    const Vec2 e = (X.col(j + 1) - X.col(j)) * inv_ds;
    flux.col(j) = params_.tension * (e.squaredNorm() - 1.0) * e;
  }
  flux.col(n - 1).setZero();

  const double inv_rho = 1.0 / params_.density;
  const double load_scale = inv_rho / (params_.thickness * ds);
  const double inv_ds4 = inv_ds * inv_ds * inv_ds * inv_ds;
  const Vec2 gravity = params_.froude * params_.gravity_dir.normalized();

  Eigen::Matrix2Xd a(2, n);
  a.col(0).setZero();
  for (int i = 1; i < n; ++i) {
    const Vec2 tension = (flux.col(i) - flux.col(i - 1)) * inv_ds;
    const Vec2 x4 = (ext.col(i - 1) - 4.0 * ext.col(i) + 6.0 * ext.col(i + 1) -
                     4.0 * ext.col(i + 2) + ext.col(i + 3)) *
                    inv_ds4;
    a.col(i) =
        (tension - params_.bending * x4) * inv_rho + load_per_span.col(i) * load_scale + gravity;
  }
  return a;
}

void WingSolver::advance(WingState& state, const ClampState& c0, const ClampState& c1,
                         const Eigen::Matrix2Xd& load_per_span, double dt) const {
  if (!(dt > 0.0)) throw ParameterError("wing step must be positive");
  if (state.nodes() != params_.nodes) throw ParameterError("wing state size mismatch");

  const int substeps = std::max(1, static_cast<int>(std::ceil(dt / stable_dt_)));
  const double h = dt / substeps;

  const auto blend = [&](double w) {
    ClampState c;
    c.position = (1.0 - w) * c0.position + w * c1.position;
    c.velocity = (1.0 - w) * c0.velocity + w * c1.velocity;
    c.direction = (1.0 - w) * c0.direction + w * c1.direction;
    c.direction_rate = (1.0 - w) * c0.direction_rate + w * c1.direction_rate;
    return c;
  };

  state.X.col(0) = c0.position;
  state.V.col(0) = c0.velocity;
  Eigen::Matrix2Xd accel = acceleration(state, c0, load_per_span);
  Eigen::Matrix2Xd accel_next;
  for (int k = 0; k < substeps; ++k) {
    const ClampState ck = blend(static_cast<double>(k + 1) / substeps);
    state.X += h * state.V + (0.5 * h * h) * accel;
    state.X.col(0) = ck.position;
    accel_next = acceleration(state, ck, load_per_span);
    state.V += (0.5 * h) * (accel + accel_next);
    state.V.col(0) = ck.velocity;
    accel.swap(accel_next);

    const double speed = state.V.colwise().norm().maxCoeff();
    if (speed > params_.speed_limit)
      throw StabilityError("wing node speed " + std::to_string(speed) + " exceeds the limit " +
                           std::to_string(params_.speed_limit));
  }
  state.time += dt;
}

WingEnergy WingSolver::energy(const WingState& state, const ClampState& clamp) const {
  const int n = params_.nodes;
  const double ds = params_.ds();
  const double inv_ds = 1.0 / ds;
  const Eigen::Matrix2Xd& X = state.X;
  const Vec2 gravity = params_.froude * params_.gravity_dir.normalized();

  WingEnergy e;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 * ds : ds;
    e.kinetic += 0.5 * params_.density * w * state.V.col(i).squaredNorm();
    e.gravity -= params_.density * w * gravity.dot(X.col(i));
  }
  for (int j = 0; j + 1 < n; ++j) {
    const double strain = ((X.col(j + 1) - X.col(j)) * inv_ds).squaredNorm() - 1.0;
    e.tension += 0.25 * params_.tension * strain * strain * ds;
  }
  const Vec2 ghost = X.col(1) - 2.0 * ds * clamp.direction.normalized();
  for (int i = 0; i + 1 < n; ++i) {
    const Vec2 left = i == 0 ? ghost : X.col(i - 1);
    const Vec2 curv = (left - 2.0 * X.col(i) + X.col(i + 1)) * (inv_ds * inv_ds);
    e.bending += 0.5 * params_.bending * curv.squaredNorm() * ds;
  }
  return e;
}

double WingSolver::max_strain(const WingState& state) const {
  const double inv_ds = 1.0 / params_.ds();
  double worst = 0.0;
  for (int j = 0; j + 1 < state.nodes(); ++j) {
    const double stretch = (state.X.col(j + 1) - state.X.col(j)).norm() * inv_ds;
    worst = std::max(worst, std::abs(stretch - 1.0));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Rigid body
// ---------------------------------------------------------------------------

void BodyParams::validate() const {
  if (!(mass_ratio > 0.0)) throw ParameterError("body mass ratio must be positive");
  if (!(inertia_ratio > 0.0)) throw ParameterError("body inertia ratio must be positive");
  if (!(density_ratio > 0.0)) throw ParameterError("density ratio must be positive");
  if (!(aspect_ratio >= 1.0)) throw ParameterError("aspect ratio must be at least 1");
  if (!(thickness > 0.0)) throw ParameterError("wing thickness must be positive");
  if (!(froude >= 0.0)) throw ParameterError("froude number must be non-negative");
  if (!(gravity_dir.norm() > 0.0)) throw ParameterError("gravity direction must be non-zero");
}

namespace {
Vec2 body_accel(const BodyParams& p, const BodyLoad& load) {
  return load.force / p.linear_inertia() + p.froude * p.gravity_dir.normalized();
}
}  // namespace

void body_initialize(BodyState& state, const BodyParams& params, const BodyLoad& load) {
  params.validate();
  state.accel = body_accel(params, load);
  state.alpha = load.moment / params.angular_inertia();
}

BodyState body_advance(const BodyState& state, const BodyParams& params, const BodyLoad& load_next,
                       double dt) {
  if (!(dt > 0.0)) throw ParameterError("body step must be positive");
  BodyState next = state;
  next.position = state.position + dt * state.velocity + (0.5 * dt * dt) * state.accel;
  next.angle = state.angle + dt * state.omega + (0.5 * dt * dt) * state.alpha;
  next.accel = body_accel(params, load_next);
  next.alpha = load_next.moment / params.angular_inertia();
  next.velocity = state.velocity + (0.5 * dt) * (state.accel + next.accel);
  next.omega = state.omega + (0.5 * dt) * (state.alpha + next.alpha);
  next.time = state.time + dt;
  return next;
}

// ---------------------------------------------------------------------------
// Clamp kinematics
// ---------------------------------------------------------------------------

ClampState clamp_static(const StrokeSpec& stroke, double t) {
  const double alpha = stroke.pitch(t);
  const double alpha_dot = stroke.pitch_rate(t);
  ClampState c;
  c.position = Vec2(stroke.xl(t), 0.0);
  c.velocity = Vec2(stroke.xl_rate(t), 0.0);
  c.direction = Vec2(std::cos(alpha), std::sin(alpha));
  c.direction_rate = alpha_dot * Vec2(-std::sin(alpha), std::cos(alpha));
  return c;
}

ClampState clamp_world(const BodyState& body, const StrokeSpec& stroke, double t) {
  const ClampState local = clamp_static(stroke, t);
  const Mat2 R = rot2(body.angle);
  ClampState c;
  const Vec2 arm = R * local.position;
  c.position = body.position + arm;
  c.velocity = body.velocity + body.omega * perp(arm) + R * local.velocity;
  c.direction = R * local.direction;
  c.direction_rate = body.omega * perp(c.direction) + R * local.direction_rate;
  return c;
}

}  // namespace flyer
