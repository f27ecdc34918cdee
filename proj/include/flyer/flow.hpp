#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>

#include "flyer/grid.hpp"
#include "flyer/types.hpp"

namespace flyer {

/// Per-edge velocity condition. Profiles are evaluated at face points and the
/// global time, so pulsatile inlets and exact-solution tests plug in directly.
struct BoundaryCondition {
  enum class Kind { ZeroNormalGradient, Prescribed };
  Kind kind = Kind::ZeroNormalGradient;
  std::function<Vec2(double x, double y, double t)> profile;  ///< used when Prescribed
};

struct BoundarySpec {
  BoundaryCondition left, right, bottom, top;

  static BoundarySpec quiescent() { return BoundarySpec{}; }  // all zero-gradient
  /// Uniform inflow of the given velocity vector on the upstream edge(s),
  /// zero-normal-gradient elsewhere.
  static BoundarySpec uniform_inflow(const Vec2& U);
  static BoundarySpec prescribed_everywhere(std::function<Vec2(double, double, double)> f);
};

/// Lagrangian wing data handed to the fluid: node positions and the velocity
/// the fluid must match there (displacement rate over the step).
struct WingForcing {
  Eigen::Matrix2Xd X;  ///< 2 x Ns node positions
  Eigen::Matrix2Xd V;  ///< 2 x Ns target velocities

  int count() const { return static_cast<int>(X.cols()); }
  /// Segment length attributed to node k (trapezoidal; half segments at ends).
  Eigen::ArrayXd node_ds() const;
  /// Unit normals from central-difference tangents.
  Eigen::Matrix2Xd normals() const;
};

/// MAC-staggered fields. u is stored at vertical faces ((nx+1) x ny), v at
/// horizontal faces (nx x (ny+1)), p and the mass source q at centers.
struct FlowField {
  std::shared_ptr<const StretchedGrid> grid;
  Eigen::ArrayXXd u, v, p, q;
  double time = 0.0;

  static FlowField quiescent(std::shared_ptr<const StretchedGrid> g);
  /// Sample an analytic velocity field onto the staggered locations.
  void fill(const std::function<Vec2(double, double)>& velocity);
  double max_speed() const;
  /// Volume-weighted kinetic energy 0.5 * int |u|^2 dV (cell-center average).
  double kinetic_energy() const;
  /// max_c |div(u) - q| over cells.
  double divergence_error() const;
};

struct FlowParams {
  double cfl_limit = 1.0;          ///< advance() refuses steps beyond this
  double poisson_tol = 1.0e-9;     ///< max-norm of (div - q) residual
  int poisson_cap_multiplier = 10; ///< iteration cap = mult * nx * ny
  double probe_offset_factor = 1.5;///< surface-load probes at +- factor * h
  double q_offset_factor = 1.0;    ///< source/sink sheet offset in local h
  bool mass_source = true;         ///< enable the continuity source q
  double forcing_regularization = 1.0e-10;
};

struct FlowStepReport {
  double cfl = 0.0;
  int poisson_iterations = 0;
  double poisson_residual = 0.0;
  double max_divergence_error = 0.0;
};

/// Aerodynamic load on the wing: per-segment surface force
/// (-[p] n + 2 mu [D] n) ds per unit span, plus span-scaled totals.
struct AeroLoad {
  Eigen::Matrix2Xd per_segment;  ///< 2 x Ns, per unit span (for the wing PDE)
  Vec2 force = Vec2::Zero();     ///< total, multiplied by span b
  double moment = 0.0;           ///< about the body center, multiplied by b

  static AeroLoad zero(int ns) {
    AeroLoad l;
    l.per_segment = Eigen::Matrix2Xd::Zero(2, ns);
    return l;
  }
};

/// Fractional-step incompressible solver: Crank-Nicolson convection
/// (linearized about the old velocity) and diffusion via an approximate-
/// factorization (ADI) solve, immersed-boundary direct forcing on the wing,
/// continuity source q, and a PCG pressure projection enforcing
/// div(u) - q = 0 to the configured tolerance.
class FlowSolver {
 public:
  FlowSolver(std::shared_ptr<const StretchedGrid> grid, double reynolds, FlowParams params = {});

  FlowStepReport advance(FlowField& field, const BoundarySpec& bc, const WingForcing* wing,
                         double dt);

  const FlowParams& params() const { return params_; }
  double reynolds() const { return reynolds_; }

  /// Estimated convective CFL for a candidate dt (field plus wing motion).
  double estimate_cfl(const FlowField& field, const WingForcing* wing, double dt) const;

 private:
  struct EdgeValues;  // resolved boundary data for one instant

  void resolve_boundary(const FlowField& f, const BoundarySpec& bc, double t, EdgeValues& ev,
                        bool from_state) const;
  void mass_balance_correction(EdgeValues& ev, const BoundarySpec& bc, double q_total) const;
  void build_mass_source(const WingForcing& wing, Eigen::ArrayXXd& q) const;
  void apply_direct_forcing(Eigen::ArrayXXd& u, Eigen::ArrayXXd& v, const WingForcing& wing) const;
  int project(Eigen::ArrayXXd& u, Eigen::ArrayXXd& v, Eigen::ArrayXXd& p,
              const Eigen::ArrayXXd& q, double dt, double& residual_out);

  std::shared_ptr<const StretchedGrid> grid_;
  double reynolds_;
  FlowParams params_;

  Eigen::SparseMatrix<double> poisson_;  // SPD (negated FV Laplacian), built once
  Eigen::ArrayXd inv_diag_;              // Jacobi preconditioner
  Eigen::VectorXd phi_;                  // warm start
};

/// Surface-integral aerodynamic load (pressure-jump and viscous-stress probes
/// offset along the wing normal). Totals are multiplied by the span b; the
/// moment arm is taken about `body_center`.
AeroLoad aero_load(const FlowField& field, const WingForcing& wing, double span_b,
                   const Vec2& body_center, double reynolds, const FlowParams& params = {});

/// Bilinear velocity sample at a point (exact for constant and linear fields).
Vec2 probe_velocity(const FlowField& field, const Vec2& point);

/// Largest mismatch between the sampled fluid velocity at the wing nodes and
/// the node velocities; a cheap no-slip quality monitor.
double interface_slip(const FlowField& field, const WingForcing& wing);

/// Reflection about the vertical mid-line (requires a mirror-symmetric grid).
FlowField mirror_x(const FlowField& field);
/// Quarter-turn counterclockwise remap (requires nx == ny and symmetric axes).
FlowField rotate_quarter(const FlowField& field);

}  // namespace flyer
