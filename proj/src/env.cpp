#include "flyer/env.hpp"

#include <algorithm>
#include <cmath>

#include "flyer/errors.hpp"

namespace flyer {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp_unit(double x) { return std::min(1.0, std::max(-1.0, x)); }

bool inside(const Vec2& p, const Vec2& lo, const Vec2& hi) {
  return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
}

double flyer_weight(const BodyParams& body) { return body.linear_inertia() * body.froude; }

}  // namespace

Obs default_obs_scales(const BodyParams& body) {
  Obs s;
  const double w = flyer_weight(body);
  s << kRewardLengthScale, kRewardLengthScale, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0,
      StrokeSpec::kMaxExcursion, 1.0, w, w;
  return s;
}

double compute_reward(double distance, double omega) {
  return -std::sqrt(distance / kRewardLengthScale) - omega * omega;
}

StrokeCommand decode_action(const Action& encoded) {
  StrokeCommand cmd;
  cmd.amplitude = 0.5 * StrokeSpec::kMaxAmplitude * (clamp_unit(encoded.x()) + 1.0);
  cmd.pitch_amplitude = 0.5 * StrokeSpec::kMaxPitchAmplitude * (clamp_unit(encoded.y()) + 1.0);
  cmd.frequency = 1.0 + 0.5 * clamp_unit(encoded.z());
  return cmd;
}

Action encode_action(const StrokeCommand& cmd) {
  return Action(2.0 * cmd.amplitude / StrokeSpec::kMaxAmplitude - 1.0,
                2.0 * cmd.pitch_amplitude / StrokeSpec::kMaxPitchAmplitude - 1.0,
                2.0 * (cmd.frequency - 1.0));
}

BoundarySpec boundary_profile(const BoundaryScenario& sc, const Vec2& lo, const Vec2& hi) {
  switch (sc.kind) {
    case BoundaryScenario::Kind::Quiescent:
      return BoundarySpec::quiescent();
    case BoundaryScenario::Kind::Uniform:
      return BoundarySpec::uniform_inflow(sc.speed * sc.direction.normalized());
    case BoundaryScenario::Kind::Pulsatile:
      break;
  }

  // Pulsatile inflow on the left/bottom/top edges. Each profile ramps
  // linearly from rest to its uniform amplitude over [0, t_i] and then
  // oscillates in time with a full cosine wave along the edge; the two
  // expressions agree at t_i because sin(0) = 0.
  const double Lx = hi.x() - lo.x();
  const double Ly = hi.y() - lo.y();
  const auto left_u = [sc, lo, Ly](double /*x*/, double y, double t) {
    if (t <= 0.0) return 0.0;
    if (t < sc.t_i) return sc.u_lm * (t / sc.t_i);
    const double wave = std::sin(2.0 * kPi * sc.f_l * (t - sc.t_i));
    const double shape = std::cos(2.0 * kPi * (y - lo.y()) / Ly) - 1.0;
    return sc.u_lm * (1.0 - 0.5 * wave * shape);
  };
  const auto bottom_v = [sc, lo, Lx](double x, double /*y*/, double t) {
    if (t <= 0.0) return 0.0;
    if (t < sc.t_i) return sc.v_bm * (t / sc.t_i);
    const double wave = std::sin(2.0 * kPi * sc.f_b * (t - sc.t_i));
    const double shape = std::cos(2.0 * kPi * (x - lo.x()) / Lx) - 1.0;
    return sc.v_bm * (1.0 - 0.5 * wave * shape);
  };

  BoundarySpec bc;  // right edge stays zero-gradient
  bc.left.kind = BoundaryCondition::Kind::Prescribed;
  bc.left.profile = [left_u](double x, double y, double t) { return Vec2(left_u(x, y, t), 0.0); };
  bc.bottom.kind = BoundaryCondition::Kind::Prescribed;
  bc.bottom.profile = [bottom_v](double x, double y, double t) {
    return Vec2(0.0, bottom_v(x, y, t));
  };
  bc.top.kind = BoundaryCondition::Kind::Prescribed;
  bc.top.profile = [bottom_v](double x, double y, double t) {
    return Vec2(0.0, -bottom_v(x, y, t));
  };
  return bc;
}

Vec2 imposed_velocity(const BoundaryScenario& sc, double t) {
  switch (sc.kind) {
    case BoundaryScenario::Kind::Quiescent:
      return Vec2::Zero();
    case BoundaryScenario::Kind::Uniform:
      return sc.speed * sc.direction.normalized();
    case BoundaryScenario::Kind::Pulsatile:
      break;
  }
  // Edge average of the left inflow: the cosine averages to zero over the
  // full edge, leaving u_lm * (1 + 0.5 sin(...)). Vertical inflow cancels
  // between bottom and top.
  if (t <= 0.0) return Vec2::Zero();
  if (t < sc.t_i) return Vec2(sc.u_lm * (t / sc.t_i), 0.0);
  return Vec2(sc.u_lm * (1.0 + 0.5 * std::sin(2.0 * kPi * sc.f_l * (t - sc.t_i))), 0.0);
}

MissionEvent MissionEvent::goal_change(Trigger tr, double threshold, const Vec2& goal) {
  MissionEvent e;
  e.kind = Kind::GoalChange;
  e.trigger = tr;
  e.threshold = threshold;
  e.goal = goal;
  return e;
}

MissionEvent MissionEvent::moment_pulse(Trigger tr, double threshold, double multiple,
                                        double duration) {
  MissionEvent e;
  e.kind = Kind::MomentPulse;
  e.trigger = tr;
  e.threshold = threshold;
  e.multiple = multiple;
  e.duration = duration;
  return e;
}

MissionEvent MissionEvent::force_pulse(Trigger tr, double threshold, double multiple,
                                       double duration, const Vec2& dir) {
  MissionEvent e;
  e.kind = Kind::ForcePulse;
  e.trigger = tr;
  e.threshold = threshold;
  e.multiple = multiple;
  e.duration = duration;
  e.force_dir = dir;
  return e;
}

void EnvConfig::validate() const {
  if (!(domain_lo.x() < domain_hi.x() && domain_lo.y() < domain_hi.y()))
    throw ParameterError("domain bounds must be a nonempty box");
  if (!inside(start, domain_lo, domain_hi)) throw ParameterError("start outside the domain");
  if (!inside(goal, domain_lo, domain_hi)) throw ParameterError("goal outside the domain");
  if (!(success_distance > 0.0) || !(success_duration > 0.0))
    throw ParameterError("hover thresholds must be positive");
  if (max_strokes < 1) throw ParameterError("max_strokes must be at least 1");
  if (episode_cap < 1) throw ParameterError("episode_cap must be at least 1");
  if (!(head_offset >= 0.0)) throw ParameterError("head_offset must be nonnegative");
  if (!(reference_moment > 0.0)) throw ParameterError("reference_moment must be positive");
  if (!(dt_target > 0.0)) throw ParameterError("dt_target must be positive");
  if (min_steps_per_stroke < 1) throw ParameterError("min_steps_per_stroke must be at least 1");
  if (std::abs(initial_xl) > StrokeSpec::kMaxExcursion)
    throw ParameterError("initial_xl outside the stroke rail");
  if (initial_k != 1 && initial_k != -1) throw ParameterError("initial_k must be +1 or -1");
  if (!(scales.array() > 0.0).all() || !scales.allFinite())
    throw ParameterError("observation scales must be positive and finite");
  if (boundary.kind == BoundaryScenario::Kind::Uniform) {
    if (!(boundary.speed >= 0.0)) throw ParameterError("uniform flow speed must be nonnegative");
    if (boundary.direction.norm() <= 0.0)
      throw ParameterError("uniform flow needs a nonzero direction");
  }
  if (boundary.kind == BoundaryScenario::Kind::Pulsatile) {
    if (!(boundary.t_i > 0.0)) throw ParameterError("pulsatile ramp time t_i must be positive");
    if (boundary.u_lm < 0.0 || boundary.v_bm < 0.0 || boundary.f_l < 0.0 || boundary.f_b < 0.0)
      throw ParameterError("pulsatile amplitudes and frequencies must be nonnegative");
  }
  for (const MissionEvent& e : events) {
    if (!std::isfinite(e.threshold)) throw ParameterError("event trigger must be finite");
    if (e.kind == MissionEvent::Kind::GoalChange) {
      if (!inside(e.goal, domain_lo, domain_hi))
        throw ParameterError("event goal outside the domain");
    } else {
      if (!(e.multiple > 0.0) || !(e.duration > 0.0))
        throw ParameterError("pulse events need a positive multiple and duration");
      if (e.kind == MissionEvent::Kind::ForcePulse && e.force_dir.norm() <= 0.0)
        throw ParameterError("force pulse needs a nonzero direction");
    }
  }
}

Obs assemble_state(const CoupledState& sim, const BodyParams& body, double rail_xl,
                   int stroke_sign, const Vec2& goal, const EnvConfig& cfg) {
  const BodyState& b = sim.body;
  Vec2 sensed;
  if (cfg.antenna_mode) {
    const Vec2 head =
        b.position + cfg.head_offset * Vec2(std::cos(b.angle), std::sin(b.angle));
    sensed = probe_velocity(sim.field, head);
  } else {
    sensed = imposed_velocity(cfg.boundary, sim.time());
  }
  const Vec2 fb = flyer_weight(body) * body.gravity_dir.normalized();

  Obs raw;
  raw << b.position.x() - goal.x(), b.position.y() - goal.y(), std::sin(b.angle),
      std::cos(b.angle), b.velocity.x(), b.velocity.y(), b.omega, sensed.x(), sensed.y(),
      rail_xl, static_cast<double>(stroke_sign), fb.x(), fb.y();
  return raw.cwiseQuotient(cfg.scales);
}

// ---------------------------------------------------------------------------
// CoupledEnv

CoupledEnv::CoupledEnv(std::shared_ptr<const StretchedGrid> grid, double reynolds,
                       const FlowParams& flow_params, const WingParams& wing_params,
                       const BodyParams& body_params, const FsiConfig& fsi, EnvConfig cfg)
    : grid_(std::move(grid)),
      flow_(grid_, reynolds, flow_params),
      wing_(wing_params),
      body_params_(body_params),
      stepper_(flow_, wing_, body_params, fsi),
      cfg_(std::move(cfg)) {
  cfg_.validate();
  const GridSpec& g = grid_->spec();
  if (cfg_.domain_lo.x() < g.xmin || cfg_.domain_hi.x() > g.xmax ||
      cfg_.domain_lo.y() < g.ymin || cfg_.domain_hi.y() > g.ymax)
    throw ParameterError("env domain exceeds the grid");
  bc_ = boundary_profile(cfg_.boundary, Vec2(g.xmin, g.ymin), Vec2(g.xmax, g.ymax));
  reset();
}

Obs CoupledEnv::reset() {
  rail_xl_ = cfg_.initial_xl;
  k_ = cfg_.initial_k;

  StrokeSpec seed;  // zero-amplitude stroke fixing the initial clamp geometry
  seed.amplitude = 0.0;
  seed.pitch_amplitude = 0.0;
  seed.frequency = 1.0;
  seed.direction = k_;
  seed.start_xl = rail_xl_;
  seed.start_time = 0.0;

  BodyState body;
  body.position = cfg_.start;
  body.angle = cfg_.start_angle;
  state_ = make_coupled_state(grid_, wing_.params(), body, seed);
  body_initialize(state_.body, body_params_, BodyLoad{});

  goal_ = cfg_.goal;
  strokes_ = 0;
  done_ = false;
  success_ = false;
  hover_clock_ = 0.0;
  prev_pos_ = cfg_.start;
  events_.clear();
  events_.reserve(cfg_.events.size());
  for (const MissionEvent& e : cfg_.events) events_.push_back(ArmedEvent{&e, false, 0.0});
  return assemble();
}

Obs CoupledEnv::assemble() const {
  return assemble_state(state_, body_params_, rail_xl_, k_, goal_, cfg_);
}

double CoupledEnv::distance_to_goal() const {
  return (state_.body.position - goal_).norm();
}

BodyLoad CoupledEnv::disturbance_at(double t) const {
  BodyLoad load;
  for (const ArmedEvent& ev : events_) {
    if (!ev.fired || ev.spec->kind == MissionEvent::Kind::GoalChange) continue;
    if (t < ev.fire_time || t >= ev.fire_time + ev.spec->duration) continue;
    if (ev.spec->kind == MissionEvent::Kind::MomentPulse) {
      load.moment += ev.spec->multiple * cfg_.reference_moment;
    } else {
      load.force += ev.spec->multiple * flyer_weight(body_params_) *
                    ev.spec->force_dir.normalized();
    }
  }
  return load;
}

void CoupledEnv::update_triggers(double t_end) {
  const Vec2& pos = state_.body.position;
  for (ArmedEvent& ev : events_) {
    if (ev.fired) continue;
    const MissionEvent& e = *ev.spec;
    bool fire = false;
    double when = t_end;
    switch (e.trigger) {
      case MissionEvent::Trigger::Time:
        fire = t_end >= e.threshold;
        when = std::max(e.threshold, 0.0);
        break;
      case MissionEvent::Trigger::CrossX:
        fire = (prev_pos_.x() - e.threshold) * (pos.x() - e.threshold) <= 0.0 &&
               prev_pos_.x() != pos.x();
        break;
      case MissionEvent::Trigger::CrossY:
        fire = (prev_pos_.y() - e.threshold) * (pos.y() - e.threshold) <= 0.0 &&
               prev_pos_.y() != pos.y();
        break;
    }
    if (!fire) continue;
    if (e.kind != MissionEvent::Kind::GoalChange) {
      for (const ArmedEvent& other : events_) {
        if (&other == &ev || !other.fired || other.spec->kind != e.kind) continue;
        if (when < other.fire_time + other.spec->duration &&
            other.fire_time < when + e.duration)
          throw ParameterError("overlapping disturbance pulses of the same type");
      }
    }
    ev.fired = true;
    ev.fire_time = when;
    if (e.kind == MissionEvent::Kind::GoalChange) goal_ = e.goal;
  }
}

StrokeResult CoupledEnv::step(const Action& encoded) {
  if (done_) throw ParameterError("episode is over; call reset() first");
  if (!encoded.allFinite()) throw ParameterError("action must be finite");

  const StrokeCommand cmd = decode_action(encoded);
  StrokeSpec stroke;
  stroke.amplitude = cmd.amplitude;
  stroke.pitch_amplitude = cmd.pitch_amplitude;
  stroke.frequency = cmd.frequency;
  stroke.direction = k_;
  stroke.start_xl = rail_xl_;
  stroke.start_time = state_.time();

  const double t0 = state_.time();
  const double t1 = t0 + stroke.duration();
  const int steps = std::max(cfg_.min_steps_per_stroke,
                             static_cast<int>(std::ceil(stroke.duration() / cfg_.dt_target)));

  // Time-triggered events that open during this stroke arm before it runs so
  // the pulse window starts at the scheduled instant, not a stroke boundary.
  // Crossing triggers can't fire here: the body hasn't moved since the last
  // boundary check.
  for (const ArmedEvent& ev : events_) {
    if (!ev.fired && ev.spec->trigger == MissionEvent::Trigger::Time &&
        ev.spec->threshold < t1) {
      update_triggers(t1);
      break;
    }
  }

  StrokeResult out;
  const Obs s = assemble();

  try {
    out.report = run_stroke(stepper_, state_, bc_, stroke, steps,
                            [this](double t) { return disturbance_at(t); });
    rail_xl_ = stroke.end_xl();
    k_ = -k_;
  } catch (const Error& err) {
    out.failed = true;
    out.failure = err.what();
    done_ = true;
    rail_xl_ = stroke.xl(state_.time());  // wherever the clamp actually got to
  }
  ++strokes_;

  Obs s2;
  try {
    s2 = assemble();
  } catch (const Error&) {
    s2 = s;  // antenna probe left the grid along with the flyer
  }

  const double distance = distance_to_goal();
  const double reward = compute_reward(distance, state_.body.omega);

  if (!out.failed) {
    if (distance < cfg_.success_distance)
      hover_clock_ += state_.time() - t0;
    else
      hover_clock_ = 0.0;
    if (hover_clock_ >= cfg_.success_duration) success_ = true;
  }
  if (success_) {
    out.success = true;
    done_ = true;
  }
  if (!inside(state_.body.position, cfg_.domain_lo, cfg_.domain_hi)) {
    out.failed = true;
    done_ = true;
  }
  if (strokes_ >= cfg_.max_strokes) done_ = true;

  for (const ArmedEvent& ev : events_) {
    if (!ev.fired) continue;
    const bool overlaps = ev.fire_time < t1 && ev.fire_time + ev.spec->duration > t0;
    if (ev.spec->kind == MissionEvent::Kind::MomentPulse && overlaps) out.moment_active = true;
    if (ev.spec->kind == MissionEvent::Kind::ForcePulse && overlaps) out.force_active = true;
  }

  Transition& tr = out.transition;
  tr.s = s;
  tr.a = Action(clamp_unit(encoded.x()), clamp_unit(encoded.y()), clamp_unit(encoded.z()));
  tr.r = reward;
  tr.s_next = s2;
  tr.done = done_;
  tr.start = cfg_.start;
  tr.goal = goal_;
  tr.gravity_dir = body_params_.gravity_dir.normalized();
  tr.body_pos = state_.body.position;
  tr.body_angle = state_.body.angle;
  tr.time = state_.time();
  tr.scales = cfg_.scales;

  // Line-crossing events are detected at stroke boundaries; their pulses and
  // goal changes take effect from the next stroke on.
  update_triggers(state_.time());
  prev_pos_ = state_.body.position;
  return out;
}

// ---------------------------------------------------------------------------
// PointMassEnv

PointMassEnv::PointMassEnv(PointMassParams params, EnvConfig cfg)
    : params_(std::move(params)), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (params_.substeps < 1) throw ParameterError("substeps must be at least 1");
  if (!(params_.froude >= 0.0)) throw ParameterError("froude must be nonnegative");
  if (params_.gravity_dir.norm() <= 0.0) throw ParameterError("gravity needs a direction");
  reset();
}

Obs PointMassEnv::reset() {
  pos_ = cfg_.start;
  vel_ = Vec2::Zero();
  angle_ = cfg_.start_angle;
  omega_ = 0.0;
  time_ = 0.0;
  rail_xl_ = cfg_.initial_xl;
  k_ = cfg_.initial_k;
  strokes_ = 0;
  done_ = false;
  success_ = false;
  hover_clock_ = 0.0;
  return assemble();
}

Obs PointMassEnv::scales() const {
  // Positions, velocities, and the rail share the coupled scales; the body
  // force is normalized by its own magnitude so the entry is the direction.
  Obs out = cfg_.scales;
  out[obs::kFbx] = out[obs::kFby] = std::max(params_.froude, 1e-12);
  return out;
}

Obs PointMassEnv::assemble() const {
  const Vec2 sensed = imposed_velocity(cfg_.boundary, time_);
  const Vec2 ghat = params_.gravity_dir.normalized();
  const double w = params_.froude;  // unit mass: the weight is the gravity pull

  Obs raw;
  raw << pos_.x() - cfg_.goal.x(), pos_.y() - cfg_.goal.y(), std::sin(angle_),
      std::cos(angle_), vel_.x(), vel_.y(), omega_, sensed.x(), sensed.y(), rail_xl_,
      static_cast<double>(k_), w * ghat.x(), w * ghat.y();
  return raw.cwiseQuotient(scales());
}

double PointMassEnv::distance_to_goal() const { return (pos_ - cfg_.goal).norm(); }

StrokeResult PointMassEnv::step(const Action& encoded) {
  if (done_) throw ParameterError("episode is over; call reset() first");
  if (!encoded.allFinite()) throw ParameterError("action must be finite");

  const StrokeCommand cmd = decode_action(encoded);
  StrokeSpec stroke;
  stroke.amplitude = cmd.amplitude;
  stroke.pitch_amplitude = cmd.pitch_amplitude;
  stroke.frequency = cmd.frequency;
  stroke.direction = k_;
  stroke.start_xl = rail_xl_;
  stroke.start_time = time_;

  const Obs s = assemble();
  const double duration = stroke.duration();
  const double dt = duration / params_.substeps;
  const double af = stroke.clipped_amplitude() * cmd.frequency;
  const double thrust = params_.thrust_gain * af * af;
  const double sway = params_.sway_gain * af * af * k_;
  const double torque =
      params_.moment_gain * k_ * (cmd.pitch_amplitude - 0.125 * kPi) * cmd.frequency *
      cmd.frequency;
  const Vec2 ghat = params_.gravity_dir.normalized();

  for (int i = 0; i < params_.substeps; ++i) {
    const Vec2 flow = imposed_velocity(cfg_.boundary, time_ + i * dt);
    const Vec2 accel = thrust * Vec2(-std::sin(angle_), std::cos(angle_)) +
                       sway * Vec2(std::cos(angle_), std::sin(angle_)) -
                       params_.drag * (vel_ - flow) + params_.froude * ghat;
    const double alpha = torque - params_.spin_drag * omega_;
    vel_ += dt * accel;
    pos_ += dt * vel_;
    omega_ += dt * alpha;
    angle_ += dt * omega_;
  }
  time_ += duration;
  rail_xl_ = stroke.end_xl();
  k_ = -k_;
  ++strokes_;

  const Obs s2 = assemble();
  const double distance = distance_to_goal();
  const double reward = compute_reward(distance, omega_);

  StrokeResult out;
  if (distance < cfg_.success_distance)
    hover_clock_ += duration;
  else
    hover_clock_ = 0.0;
  if (hover_clock_ >= cfg_.success_duration) success_ = true;
  if (success_) {
    out.success = true;
    done_ = true;
  }
  if (!inside(pos_, cfg_.domain_lo, cfg_.domain_hi)) {
    out.failed = true;
    done_ = true;
  }
  if (strokes_ >= cfg_.max_strokes) done_ = true;

  Transition& tr = out.transition;
  tr.s = s;
  tr.a = Action(clamp_unit(encoded.x()), clamp_unit(encoded.y()), clamp_unit(encoded.z()));
  tr.r = reward;
  tr.s_next = s2;
  tr.done = done_;
  tr.start = cfg_.start;
  tr.goal = cfg_.goal;
  tr.gravity_dir = ghat;
  tr.body_pos = pos_;
  tr.body_angle = angle_;
  tr.time = time_;
  tr.scales = scales();
  return out;
}

}  // namespace flyer
