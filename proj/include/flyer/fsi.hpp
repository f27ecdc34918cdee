#pragma once

#include <functional>
#include <vector>

#include "flyer/flow.hpp"
#include "flyer/structures.hpp"

namespace flyer {

// ---------------------------------------------------------------------------
// Partitioned fluid-structure coupling with Aitken-relaxed fixed-point
// sweeps. Within one time step the interface iterate is the wing state at
// the new time level; every sweep re-advances the flow from the saved old
// field with the current interface guess, evaluates the aerodynamic load,
// advances the rigid body and the elastic wing under that load, and relaxes.
// ---------------------------------------------------------------------------

struct FsiConfig {
  double tolerance = 1e-8;  ///< converged when max node displacement residual drops below
  int max_iterations = 100;
  /// First-sweep relaxation of the very first step. Later steps start from
  /// the previous step's converged factor (capped by this), so a cautious
  /// default costs little and survives coarse grids where the per-node
  /// added-mass gain is large.
  double initial_relaxation = 0.1;
  double min_relaxation = 0.01;
  double max_relaxation = 1.0;
  bool body_free = true;  ///< false keeps the body frozen (prescribed-clamp runs)

  void validate() const;
};

struct CoupledState {
  FlowField field;
  WingState wing;
  BodyState body;
  AeroLoad load;  ///< converged load of the last step; warm start for the next

  double time() const { return field.time; }
};

struct CoupledStepReport {
  int iterations = 0;
  double residual = 0.0;          ///< final interface residual
  std::vector<double> history;    ///< residual per sweep
  FlowStepReport flow;            ///< report of the converged flow advance
};

class CoupledStepper {
 public:
  CoupledStepper(FlowSolver& flow, const WingSolver& wing, BodyParams body_params,
                 FsiConfig config = {});

  /// Advance the coupled system by dt through the given stroke. `disturbance`
  /// is an extra body load (beyond the aerodynamic reaction) held over the
  /// step. Throws CouplingError with the residual history if the sweeps do
  /// not converge; the state is left untouched in that case.
  CoupledStepReport step(CoupledState& state, const BoundarySpec& bc, const StrokeSpec& stroke,
                         double dt, const BodyLoad& disturbance = {});

  const FsiConfig& config() const { return config_; }
  const BodyParams& body_params() const { return body_params_; }

 private:
  FlowSolver& flow_;
  const WingSolver& wing_;
  BodyParams body_params_;
  FsiConfig config_;
  double start_omega_;  ///< carried over from the last converged step
};

struct StrokeRunReport {
  int steps = 0;
  int coupling_iterations = 0;  ///< summed over all steps
  double worst_residual = 0.0;
  double worst_divergence = 0.0;
  int worst_poisson = 0;
  double max_wing_speed = 0.0;
};

/// Run one full stroke in `steps` uniform increments. The stroke's start
/// time must match the state clock. The optional disturbance schedule is
/// sampled at the beginning of each increment.
StrokeRunReport run_stroke(CoupledStepper& stepper, CoupledState& state, const BoundarySpec& bc,
                           const StrokeSpec& stroke, int steps,
                           const std::function<BodyLoad(double)>& disturbance = {});

/// Quiescent flow, straight wing hanging from the stroke's start clamp,
/// zero warm-start load.
CoupledState make_coupled_state(std::shared_ptr<const StretchedGrid> grid,
                                const WingParams& wing_params, const BodyState& body,
                                const StrokeSpec& stroke);

}  // namespace flyer
