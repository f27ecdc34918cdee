#include "flyer/fsi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace flyer {

void FsiConfig::validate() const {
  if (!(tolerance > 0.0)) throw ParameterError("coupling tolerance must be positive");
  if (max_iterations < 1) throw ParameterError("coupling needs at least one sweep");
  if (!(initial_relaxation > 0.0 && initial_relaxation <= 1.0))
    throw ParameterError("initial relaxation must lie in (0, 1]");
  if (!(min_relaxation > 0.0 && min_relaxation <= max_relaxation && max_relaxation <= 1.0))
    throw ParameterError("relaxation bounds must satisfy 0 < min <= max <= 1");
}

CoupledStepper::CoupledStepper(FlowSolver& flow, const WingSolver& wing, BodyParams body_params,
                               FsiConfig config)
    : flow_(flow), wing_(wing), body_params_(body_params), config_(config) {
  config_.validate();
  body_params_.validate();
  start_omega_ = config_.initial_relaxation;
}

CoupledStepReport CoupledStepper::step(CoupledState& state, const BoundarySpec& bc,
                                       const StrokeSpec& stroke, double dt,
                                       const BodyLoad& disturbance) {
  if (!(dt > 0.0)) throw ParameterError("coupled step must be positive");
  if (std::abs(state.wing.time - state.field.time) > 1e-9 * (1.0 + std::abs(state.field.time)))
    throw ParameterError("wing and field clocks have drifted apart");
  const int nodes = state.wing.nodes();
  if (state.load.per_segment.cols() != nodes) state.load = AeroLoad::zero(nodes);

  const double t0 = state.field.time;
  const double t1 = t0 + dt;
  const ClampState clamp0 = clamp_world(state.body, stroke, t0);

  const auto advance_body = [&](const AeroLoad& load) {
    if (!config_.body_free) return state.body;
    BodyLoad total;
    total.force = load.force + disturbance.force;
    total.moment = load.moment + disturbance.moment;
    return body_advance(state.body, body_params_, total, dt);
  };
  const auto advance_wing = [&](const BodyState& body1, const AeroLoad& load) {
    WingState next = state.wing;
    wing_.advance(next, clamp0, clamp_world(body1, stroke, t1), load.per_segment, dt);
    return next;
  };

  // Structure predictor from the previous step's converged load.
  AeroLoad load = state.load;
  BodyState body1 = advance_body(load);
  WingState wing1 = advance_wing(body1, load);
  Eigen::Matrix2Xd guess_x = wing1.X;
  Eigen::Matrix2Xd guess_v = wing1.V;

  CoupledStepReport report;
  FlowField field(state.field);
  // Stacked interface residual: positions and dt-scaled velocities. The
  // added-mass feedback acts on the imposed wall velocity, so the velocity
  // block must steer the relaxation too or the sweeps settle into a
  // position-invisible limit cycle.
  Eigen::VectorXd residual(4 * nodes), residual_prev(4 * nodes);
  double omega = std::min(start_omega_, config_.initial_relaxation);

  for (int sweep = 0; sweep < config_.max_iterations; ++sweep) {
    field = state.field;
    WingForcing forcing;
    forcing.X = guess_x;
    forcing.V = guess_v;
    report.flow = flow_.advance(field, bc, &forcing, dt);

    load = aero_load(field, forcing, body_params_.aspect_ratio, body1.position, flow_.reynolds(),
                     flow_.params());
    body1 = advance_body(load);
    wing1 = advance_wing(body1, load);

    const Eigen::Matrix2Xd residual_x = wing1.X - guess_x;
    const Eigen::Matrix2Xd residual_v = wing1.V - guess_v;
    residual.head(2 * nodes) = residual_x.reshaped();
    residual.tail(2 * nodes) = dt * residual_v.reshaped();
    const double residual_norm = residual_x.cwiseAbs().maxCoeff();
    report.history.push_back(residual_norm);
    report.iterations = sweep + 1;
    report.residual = residual_norm;

    if (residual_norm < config_.tolerance) {
      state.field = std::move(field);
      state.wing = std::move(wing1);
      state.body = body1;
      state.load = load;
      start_omega_ = omega;
      return report;
    }

    if (sweep > 0) {
      const Eigen::VectorXd jump = residual - residual_prev;
      const double denom = jump.squaredNorm();
      if (denom > 0.0) omega = -omega * residual_prev.dot(jump) / denom;
      omega = std::clamp(omega, config_.min_relaxation, config_.max_relaxation);
    }
    guess_x += omega * residual_x;
    guess_v += omega * residual_v;
    residual_prev = residual;
  }

  char tol[32];
  std::snprintf(tol, sizeof(tol), "%g", config_.tolerance);
  throw CouplingError("fsi sweeps failed to reach " + std::string(tol) + " in " +
                          std::to_string(config_.max_iterations) + " iterations",
                      report.history);
}

StrokeRunReport run_stroke(CoupledStepper& stepper, CoupledState& state, const BoundarySpec& bc,
                           const StrokeSpec& stroke, int steps,
                           const std::function<BodyLoad(double)>& disturbance) {
  if (steps < 1) throw ParameterError("a stroke needs at least one step");
  stroke.validate();
  if (std::abs(state.time() - stroke.start_time) > 1e-9 * (1.0 + std::abs(stroke.start_time)))
    throw ParameterError("stroke start time does not match the state clock");

  const double dt = stroke.duration() / steps;
  StrokeRunReport run;
  run.steps = steps;
  for (int k = 0; k < steps; ++k) {
    const BodyLoad extra = disturbance ? disturbance(state.time()) : BodyLoad{};
    const CoupledStepReport report = stepper.step(state, bc, stroke, dt, extra);
    run.coupling_iterations += report.iterations;
    run.worst_residual = std::max(run.worst_residual, report.residual);
    run.worst_divergence = std::max(run.worst_divergence, report.flow.max_divergence_error);
    run.worst_poisson = std::max(run.worst_poisson, report.flow.poisson_iterations);
    run.max_wing_speed =
        std::max(run.max_wing_speed, state.wing.V.colwise().norm().maxCoeff());
  }
  return run;
}

CoupledState make_coupled_state(std::shared_ptr<const StretchedGrid> grid,
                                const WingParams& wing_params, const BodyState& body,
                                const StrokeSpec& stroke) {
  CoupledState state;
  state.field = FlowField::quiescent(std::move(grid));
  state.wing = WingState::straight(wing_params, clamp_world(body, stroke, stroke.start_time));
  state.wing.time = stroke.start_time;
  state.field.time = stroke.start_time;
  state.body = body;
  state.body.time = stroke.start_time;
  state.load = AeroLoad::zero(wing_params.nodes);
  return state;
}

}  // namespace flyer
