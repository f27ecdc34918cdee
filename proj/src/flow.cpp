#include "flyer/flow.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace flyer {

namespace {

// --- small utilities ---------------------------------------------------------

// Roma/Peskin 3-point regularized delta (support |r| <= 1.5).
double kernel3(double r) {
  const double a = std::abs(r);
  if (a <= 0.5) return (1.0 + std::sqrt(1.0 - 3.0 * a * a)) / 3.0;
  if (a <= 1.5) {
    const double t = 1.0 - a;
    return (5.0 - 3.0 * a - std::sqrt(1.0 - 3.0 * t * t)) / 6.0;
  }
  return 0.0;
}

// Lagrange 3-point first/second derivative weights for spacings a (to the
// left neighbor) and b (to the right neighbor).
struct Stencil {
  double lm, l0, lp;  // first derivative
  double sm, s0, sp;  // second derivative
};
Stencil stencil(double a, double b) {
  Stencil s;
  s.lm = -b / (a * (a + b));
  s.l0 = (b - a) / (a * b);
  s.lp = a / (b * (a + b));
  s.sm = 2.0 / (a * (a + b));
  s.s0 = -2.0 / (a * b);
  s.sp = 2.0 / (b * (a + b));
  return s;
}

// Quadratic Lagrange weights for evaluating at x from nodes x0, x1, x2.
struct Lagrange3 {
  double w0, w1, w2;
};
Lagrange3 lagrange3(double x, double x0, double x1, double x2) {
  return {(x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2)),
          (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2)),
          (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1))};
}

// In-place Thomas solve; all spans have length n.
void thomas(std::vector<double>& lo, std::vector<double>& di, std::vector<double>& up,
            std::vector<double>& rhs) {
  const int n = static_cast<int>(rhs.size());
  for (int i = 1; i < n; ++i) {
    const double w = lo[i] / di[i - 1];
    di[i] -= w * up[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= di[n - 1];
  for (int i = n - 2; i >= 0; --i) {
    rhs[i] = (rhs[i] - up[i] * rhs[i + 1]) / di[i];
  }
}

double clamp01(double w) { return std::clamp(w, 0.0, 1.0); }

// Linear interpolation index/weight along a coordinate array (clamped).
void line_weights(const Eigen::ArrayXd& coords, double x, int& i0, double& w1) {
  const int n = static_cast<int>(coords.size());
  if (x <= coords(0)) {
    i0 = 0;
    w1 = 0.0;
    return;
  }
  if (x >= coords(n - 1)) {
    i0 = n - 2;
    w1 = 1.0;
    return;
  }
  const double* begin = coords.data();
  const double* it = std::upper_bound(begin, begin + n, x);
  i0 = static_cast<int>(it - begin) - 1;
  i0 = std::clamp(i0, 0, n - 2);
  w1 = clamp01((x - coords(i0)) / (coords(i0 + 1) - coords(i0)));
}

double bilinear(const Eigen::ArrayXXd& a, const Eigen::ArrayXd& xs, const Eigen::ArrayXd& ys,
                double x, double y) {
  int i, j;
  double wx, wy;
  line_weights(xs, x, i, wx);
  line_weights(ys, y, j, wy);
  return (1.0 - wx) * ((1.0 - wy) * a(i, j) + wy * a(i, j + 1)) +
         wx * ((1.0 - wy) * a(i + 1, j) + wy * a(i + 1, j + 1));
}

}  // namespace

// --- BoundarySpec / WingForcing ----------------------------------------------

BoundarySpec BoundarySpec::uniform_inflow(const Vec2& U) {
  BoundarySpec bc;
  auto profile = [U](double, double, double) { return U; };
  if (U.x() > 0.0) bc.left = {BoundaryCondition::Kind::Prescribed, profile};
  if (U.x() < 0.0) bc.right = {BoundaryCondition::Kind::Prescribed, profile};
  if (U.y() > 0.0) bc.bottom = {BoundaryCondition::Kind::Prescribed, profile};
  if (U.y() < 0.0) bc.top = {BoundaryCondition::Kind::Prescribed, profile};
  return bc;
}

BoundarySpec BoundarySpec::prescribed_everywhere(std::function<Vec2(double, double, double)> f) {
  BoundarySpec bc;
  bc.left = bc.right = bc.bottom = bc.top = {BoundaryCondition::Kind::Prescribed, f};
  return bc;
}

Eigen::ArrayXd WingForcing::node_ds() const {
  const int n = count();
  Eigen::ArrayXd ds = Eigen::ArrayXd::Zero(n);
  for (int k = 0; k + 1 < n; ++k) {
    const double seg = (X.col(k + 1) - X.col(k)).norm();
    ds(k) += 0.5 * seg;
    ds(k + 1) += 0.5 * seg;
  }
  return ds;
}

Eigen::Matrix2Xd WingForcing::normals() const {
  const int n = count();
  Eigen::Matrix2Xd nm(2, n);
  for (int k = 0; k < n; ++k) {
    const int a = std::max(0, k - 1);
    const int b = std::min(n - 1, k + 1);
    Vec2 t = X.col(b) - X.col(a);
    const double len = t.norm();
    if (len <= 0.0) throw GeometryError("degenerate wing segment");
    t /= len;
    nm.col(k) = Vec2(-t.y(), t.x());
  }
  return nm;
}

// --- FlowField ----------------------------------------------------------------

FlowField FlowField::quiescent(std::shared_ptr<const StretchedGrid> g) {
  FlowField f;
  const int nx = g->nx(), ny = g->ny();
  f.grid = std::move(g);
  f.u = Eigen::ArrayXXd::Zero(nx + 1, ny);
  f.v = Eigen::ArrayXXd::Zero(nx, ny + 1);
  f.p = Eigen::ArrayXXd::Zero(nx, ny);
  f.q = Eigen::ArrayXXd::Zero(nx, ny);
  return f;
}

void FlowField::fill(const std::function<Vec2(double, double)>& velocity) {
  const auto& g = *grid;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i <= g.nx(); ++i) u(i, j) = velocity(g.xf()(i), g.yc()(j)).x();
  for (int j = 0; j <= g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) v(i, j) = velocity(g.xc()(i), g.yf()(j)).y();
}

double FlowField::max_speed() const {
  return std::max(u.abs().maxCoeff(), v.abs().maxCoeff());
}

double FlowField::kinetic_energy() const {
  const auto& g = *grid;
  double e = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double uc = 0.5 * (u(i, j) + u(i + 1, j));
      const double vc = 0.5 * (v(i, j) + v(i, j + 1));
      e += 0.5 * (uc * uc + vc * vc) * g.dx()(i) * g.dy()(j);
    }
  }
  return e;
}

double FlowField::divergence_error() const {
  const auto& g = *grid;
  double m = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double div = (u(i + 1, j) - u(i, j)) / g.dx()(i) + (v(i, j + 1) - v(i, j)) / g.dy()(j);
      m = std::max(m, std::abs(div - q(i, j)));
    }
  }
  return m;
}

// --- FlowSolver ----------------------------------------------------------------

struct FlowSolver::EdgeValues {
  Eigen::ArrayXd left_u, right_u;  // normal faces, size ny
  Eigen::ArrayXd bottom_v, top_v;  // normal faces, size nx
  // prescribed tangential wall values (empty for zero-gradient edges)
  Eigen::ArrayXd left_v, right_v;  // size ny+1
  Eigen::ArrayXd bottom_u, top_u;  // size nx+1
};

FlowSolver::FlowSolver(std::shared_ptr<const StretchedGrid> grid, double reynolds,
                       FlowParams params)
    : grid_(std::move(grid)), reynolds_(reynolds), params_(params) {
  if (!(reynolds_ > 0.0)) throw ParameterError("reynolds must be positive");
  const auto& g = *grid_;
  const int nx = g.nx(), ny = g.ny();
  const int n = nx * ny;
  auto idx = [nx](int i, int j) { return i + nx * j; };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(5 * n));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double diag = 0.0;
      if (i + 1 < nx) {
        const double c = g.dy()(j) / (g.xc()(i + 1) - g.xc()(i));
        trip.emplace_back(idx(i, j), idx(i + 1, j), -c);
        diag += c;
      }
      if (i > 0) {
        const double c = g.dy()(j) / (g.xc()(i) - g.xc()(i - 1));
        trip.emplace_back(idx(i, j), idx(i - 1, j), -c);
        diag += c;
      }
      if (j + 1 < ny) {
        const double c = g.dx()(i) / (g.yc()(j + 1) - g.yc()(j));
        trip.emplace_back(idx(i, j), idx(i, j + 1), -c);
        diag += c;
      }
      if (j > 0) {
        const double c = g.dx()(i) / (g.yc()(j) - g.yc()(j - 1));
        trip.emplace_back(idx(i, j), idx(i, j - 1), -c);
        diag += c;
      }
      trip.emplace_back(idx(i, j), idx(i, j), diag);
    }
  }
  poisson_.resize(n, n);
  poisson_.setFromTriplets(trip.begin(), trip.end());
  inv_diag_.resize(n);
  for (int k = 0; k < n; ++k) inv_diag_(k) = 1.0 / poisson_.coeff(k, k);
  phi_ = Eigen::VectorXd::Zero(n);
}

double FlowSolver::estimate_cfl(const FlowField& field, const WingForcing* wing,
                                double dt) const {
  const auto& g = *grid_;
  double c = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double uc = std::max(std::abs(field.u(i, j)), std::abs(field.u(i + 1, j)));
      const double vc = std::max(std::abs(field.v(i, j)), std::abs(field.v(i, j + 1)));
      c = std::max(c, uc / g.dx()(i) + vc / g.dy()(j));
    }
  }
  if (wing != nullptr) {
    for (int k = 0; k < wing->count(); ++k) {
      const double h = std::min(g.local_dx(wing->X(0, k)), g.local_dy(wing->X(1, k)));
      c = std::max(c, wing->V.col(k).norm() / h);
    }
  }
  return c * dt;
}

void FlowSolver::resolve_boundary(const FlowField& f, const BoundarySpec& bc, double t,
                                  EdgeValues& ev, bool /*from_state*/) const {
  const auto& g = *grid_;
  const int nx = g.nx(), ny = g.ny();
  ev.left_u.resize(ny);
  ev.right_u.resize(ny);
  ev.bottom_v.resize(nx);
  ev.top_v.resize(nx);

  for (int j = 0; j < ny; ++j) {
    ev.left_u(j) = bc.left.kind == BoundaryCondition::Kind::Prescribed
                       ? bc.left.profile(g.spec().xmin, g.yc()(j), t).x()
                       : f.u(1, j);
    ev.right_u(j) = bc.right.kind == BoundaryCondition::Kind::Prescribed
                        ? bc.right.profile(g.spec().xmax, g.yc()(j), t).x()
                        : f.u(nx - 1, j);
  }
  for (int i = 0; i < nx; ++i) {
    ev.bottom_v(i) = bc.bottom.kind == BoundaryCondition::Kind::Prescribed
                         ? bc.bottom.profile(g.xc()(i), g.spec().ymin, t).y()
                         : f.v(i, 1);
    ev.top_v(i) = bc.top.kind == BoundaryCondition::Kind::Prescribed
                      ? bc.top.profile(g.xc()(i), g.spec().ymax, t).y()
                      : f.v(i, ny - 1);
  }

  if (bc.left.kind == BoundaryCondition::Kind::Prescribed) {
    ev.left_v.resize(ny + 1);
    for (int j = 0; j <= ny; ++j) ev.left_v(j) = bc.left.profile(g.spec().xmin, g.yf()(j), t).y();
  } else {
    ev.left_v.resize(0);
  }
  if (bc.right.kind == BoundaryCondition::Kind::Prescribed) {
    ev.right_v.resize(ny + 1);
    for (int j = 0; j <= ny; ++j)
      ev.right_v(j) = bc.right.profile(g.spec().xmax, g.yf()(j), t).y();
  } else {
    ev.right_v.resize(0);
  }
  if (bc.bottom.kind == BoundaryCondition::Kind::Prescribed) {
    ev.bottom_u.resize(nx + 1);
    for (int i = 0; i <= nx; ++i)
      ev.bottom_u(i) = bc.bottom.profile(g.xf()(i), g.spec().ymin, t).x();
  } else {
    ev.bottom_u.resize(0);
  }
  if (bc.top.kind == BoundaryCondition::Kind::Prescribed) {
    ev.top_u.resize(nx + 1);
    for (int i = 0; i <= nx; ++i) ev.top_u(i) = bc.top.profile(g.xf()(i), g.spec().ymax, t).x();
  } else {
    ev.top_u.resize(0);
  }
}

void FlowSolver::mass_balance_correction(EdgeValues& ev, const BoundarySpec& bc,
                                         double q_total) const {
  const auto& g = *grid_;
  const int nx = g.nx(), ny = g.ny();
  double S = -q_total;
  for (int j = 0; j < ny; ++j) S += (ev.right_u(j) - ev.left_u(j)) * g.dy()(j);
  for (int i = 0; i < nx; ++i) S += (ev.top_v(i) - ev.bottom_v(i)) * g.dx()(i);

  double W = 0.0;
  const double Lx = g.spec().xmax - g.spec().xmin;
  const double Ly = g.spec().ymax - g.spec().ymin;
  const bool lz = bc.left.kind == BoundaryCondition::Kind::ZeroNormalGradient;
  const bool rz = bc.right.kind == BoundaryCondition::Kind::ZeroNormalGradient;
  const bool bz = bc.bottom.kind == BoundaryCondition::Kind::ZeroNormalGradient;
  const bool tz = bc.top.kind == BoundaryCondition::Kind::ZeroNormalGradient;
  if (lz) W += Ly;
  if (rz) W += Ly;
  if (bz) W += Lx;
  if (tz) W += Lx;

  if (W <= 0.0) {
    if (std::abs(S) > 1.0e-8 * std::sqrt(Lx * Ly)) {
      throw SolverError("prescribed boundary fluxes are globally incompatible", std::abs(S), 0);
    }
    return;  // roundoff imbalance handled by projecting the Poisson rhs
  }
  const double c = S / W;
  if (lz) ev.left_u += c;
  if (rz) ev.right_u -= c;
  if (bz) ev.bottom_v += c;
  if (tz) ev.top_v -= c;
}

void FlowSolver::build_mass_source(const WingForcing& wing, Eigen::ArrayXXd& q) const {
  const auto& g = *grid_;
  q.setZero();
  if (!params_.mass_source) return;
  const Eigen::ArrayXd ds = wing.node_ds();
  const Eigen::Matrix2Xd nm = wing.normals();

  std::vector<std::pair<int, int>> touched;
  std::vector<char> mark(static_cast<std::size_t>(g.nx()) * g.ny(), 0);
  for (int k = 0; k < wing.count(); ++k) {
    const double hx = g.local_dx(wing.X(0, k));
    const double hy = g.local_dy(wing.X(1, k));
    const double strength = wing.V.col(k).dot(nm.col(k)) * ds(k);
    if (strength == 0.0) continue;
    const double off = params_.q_offset_factor;
    for (int side : {+1, -1}) {
      const Vec2 c = wing.X.col(k) + side * off * std::min(hx, hy) * Vec2(nm.col(k));
      const int ic = g.cell_index_x(c.x());
      const int jc = g.cell_index_y(c.y());
      for (int j = std::max(0, jc - 3); j <= std::min(g.ny() - 1, jc + 3); ++j) {
        for (int i = std::max(0, ic - 3); i <= std::min(g.nx() - 1, ic + 3); ++i) {
          const double w =
              kernel3((g.xc()(i) - c.x()) / hx) * kernel3((g.yc()(j) - c.y()) / hy) / (hx * hy);
          if (w != 0.0) {
            if (!mark[static_cast<std::size_t>(i) + g.nx() * j]) {
              mark[static_cast<std::size_t>(i) + g.nx() * j] = 1;
              touched.emplace_back(i, j);
            }
            q(i, j) += side * strength * w;
          }
        }
      }
    }
  }
  // Exact global balance: the pair construction cancels to kernel accuracy;
  // remove the remainder so the Poisson problem stays solvable.
  double total = 0.0, vol = 0.0;
  for (auto [i, j] : touched) {
    total += q(i, j) * g.dx()(i) * g.dy()(j);
    vol += g.dx()(i) * g.dy()(j);
  }
  if (vol > 0.0) {
    const double corr = total / vol;
    for (auto [i, j] : touched) q(i, j) -= corr;
  }
}

namespace {

struct KernelPatch {
  int i0, i1, j0, j1;
  double hx, hy;
};

KernelPatch patch_for(const Eigen::ArrayXd& xs, const Eigen::ArrayXd& ys, const Vec2& X,
                      double hx, double hy) {
  KernelPatch p;
  p.hx = hx;
  p.hy = hy;
  const int nxs = static_cast<int>(xs.size());
  const int nys = static_cast<int>(ys.size());
  auto lo = [](const Eigen::ArrayXd& c, double v, int n) {
    const double* it = std::lower_bound(c.data(), c.data() + n, v);
    return std::clamp(static_cast<int>(it - c.data()) - 1, 0, n - 1);
  };
  p.i0 = std::max(0, lo(xs, X.x() - 1.6 * hx, nxs));
  p.i1 = std::min(nxs - 1, lo(xs, X.x() + 1.6 * hx, nxs) + 2);
  p.j0 = std::max(0, lo(ys, X.y() - 1.6 * hy, nys));
  p.j1 = std::min(nys - 1, lo(ys, X.y() + 1.6 * hy, nys) + 2);
  return p;
}

}  // namespace

// Exact direct forcing: solve the small interface system so the interpolated
// velocity at every wing node matches the target after one application.
void FlowSolver::apply_direct_forcing(Eigen::ArrayXXd& u, Eigen::ArrayXXd& v,
                                      const WingForcing& wing) const {
  const auto& g = *grid_;
  const int ns = wing.count();
  if (ns == 0) return;
  for (int k = 0; k < ns; ++k) {
    const double hx = g.local_dx(wing.X(0, k));
    const double hy = g.local_dy(wing.X(1, k));
    const double mx = 3.0 * std::max(hx, hy);
    if (wing.X(0, k) < g.spec().xmin + mx || wing.X(0, k) > g.spec().xmax - mx ||
        wing.X(1, k) < g.spec().ymin + mx || wing.X(1, k) > g.spec().ymax - mx) {
      throw GeometryError("wing node too close to the domain boundary for forcing");
    }
  }

  auto solve_component = [&](Eigen::ArrayXXd& vel, const Eigen::ArrayXd& xs,
                             const Eigen::ArrayXd& ys, const Eigen::ArrayXd& vol_x,
                             const Eigen::ArrayXd& vol_y, int component) {
    std::vector<KernelPatch> patches(ns);
    Eigen::VectorXd resid(ns);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ns, ns);
    std::vector<Eigen::ArrayXXd> shapes;  // normalized interp weights per node
    shapes.reserve(ns);

    for (int k = 0; k < ns; ++k) {
      const double hx = g.local_dx(wing.X(0, k));
      const double hy = g.local_dy(wing.X(1, k));
      patches[k] = patch_for(xs, ys, wing.X.col(k), hx, hy);
      const auto& pk = patches[k];
      Eigen::ArrayXXd w(pk.i1 - pk.i0 + 1, pk.j1 - pk.j0 + 1);
      double sum = 0.0;
      for (int j = pk.j0; j <= pk.j1; ++j) {
        for (int i = pk.i0; i <= pk.i1; ++i) {
          const double ww = kernel3((xs(i) - wing.X(0, k)) / hx) *
                            kernel3((ys(j) - wing.X(1, k)) / hy) * vol_x(i) * vol_y(j) /
                            (hx * hy);
          w(i - pk.i0, j - pk.j0) = ww;
          sum += ww;
        }
      }
      if (sum <= 0.0) throw GeometryError("wing node outside the grid");
      w /= sum;  // exact interpolation of constants
      shapes.push_back(std::move(w));
      double interp = 0.0;
      for (int j = pk.j0; j <= pk.j1; ++j)
        for (int i = pk.i0; i <= pk.i1; ++i)
          interp += shapes[k](i - pk.i0, j - pk.j0) * vel(i, j);
      resid(k) = wing.V(component, k) - interp;
    }

    for (int k = 0; k < ns; ++k) {
      const auto& pk = patches[k];
      for (int l = 0; l < ns; ++l) {
        const double hxl = patches[l].hx, hyl = patches[l].hy;
        double m = 0.0;
        for (int j = pk.j0; j <= pk.j1; ++j) {
          for (int i = pk.i0; i <= pk.i1; ++i) {
            const double psi = kernel3((xs(i) - wing.X(0, l)) / hxl) *
                               kernel3((ys(j) - wing.X(1, l)) / hyl);
            if (psi != 0.0) m += shapes[k](i - pk.i0, j - pk.j0) * psi;
          }
        }
        M(k, l) = m;
      }
    }
    const double reg = params_.forcing_regularization * std::max(1.0, M.diagonal().maxCoeff());
    M.diagonal().array() += reg;
    Eigen::VectorXd a = M.ldlt().solve(resid);

    for (int l = 0; l < ns; ++l) {
      const auto& pl = patches[l];
      const double hxl = pl.hx, hyl = pl.hy;
      for (int j = pl.j0; j <= pl.j1; ++j) {
        for (int i = pl.i0; i <= pl.i1; ++i) {
          const double psi =
              kernel3((xs(i) - wing.X(0, l)) / hxl) * kernel3((ys(j) - wing.X(1, l)) / hyl);
          if (psi != 0.0) vel(i, j) += a(l) * psi;
        }
      }
    }
  };

  const int nx = g.nx(), ny = g.ny();
  // Control-volume extents per staggered location.
  Eigen::ArrayXd ux_vol(nx + 1), uy_vol(ny), vx_vol(nx), vy_vol(ny + 1);
  for (int i = 0; i <= nx; ++i) {
    double w = 0.0;
    if (i > 0) w += 0.5 * g.dx()(i - 1);
    if (i < nx) w += 0.5 * g.dx()(i);
    ux_vol(i) = w;
  }
  uy_vol = g.dy();
  vx_vol = g.dx();
  for (int j = 0; j <= ny; ++j) {
    double w = 0.0;
    if (j > 0) w += 0.5 * g.dy()(j - 1);
    if (j < ny) w += 0.5 * g.dy()(j);
    vy_vol(j) = w;
  }
  solve_component(u, g.xf(), g.yc(), ux_vol, uy_vol, 0);
  solve_component(v, g.xc(), g.yf(), vx_vol, vy_vol, 1);
}

int FlowSolver::project(Eigen::ArrayXXd& u, Eigen::ArrayXXd& v, Eigen::ArrayXXd& p,
                        const Eigen::ArrayXXd& q, double dt, double& residual_out) {
  const auto& g = *grid_;
  const int nx = g.nx(), ny = g.ny();
  const int n = nx * ny;
  auto idx = [nx](int i, int j) { return i + nx * j; };

  Eigen::VectorXd b(n);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double div =
          (u(i + 1, j) - u(i, j)) / g.dx()(i) + (v(i, j + 1) - v(i, j)) / g.dy()(j);
      b(idx(i, j)) = -(div - q(i, j)) * g.dx()(i) * g.dy()(j);
    }
  }
  b.array() -= b.mean();  // keep the singular Neumann system consistent

  // cell volumes for the max-norm convergence test
  Eigen::VectorXd inv_vol(n);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) inv_vol(idx(i, j)) = 1.0 / (g.dx()(i) * g.dy()(j));

  Eigen::VectorXd x = phi_;
  Eigen::VectorXd r = b - poisson_ * x;
  Eigen::VectorXd z = inv_diag_.matrix().asDiagonal() * r;
  Eigen::VectorXd pk = z;
  double rz = r.dot(z);
  const int cap = params_.poisson_cap_multiplier * n;
  double res = (r.array().abs() * inv_vol.array()).maxCoeff();
  int it = 0;
  while (res > params_.poisson_tol) {
    if (++it > cap) {
      throw SolverError("pressure Poisson solve did not converge", res, it - 1);
    }
    const Eigen::VectorXd Ap = poisson_ * pk;
    const double alpha = rz / pk.dot(Ap);
    x += alpha * pk;
    r -= alpha * Ap;
    res = (r.array().abs() * inv_vol.array()).maxCoeff();
    if (res <= params_.poisson_tol) break;
    z = inv_diag_.matrix().asDiagonal() * r;
    const double rz_new = r.dot(z);
    pk = z + (rz_new / rz) * pk;
    rz = rz_new;
  }
  phi_ = x;
  residual_out = res;

  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i)
      u(i, j) -= (x(idx(i, j)) - x(idx(i - 1, j))) / (g.xc()(i) - g.xc()(i - 1));
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      v(i, j) -= (x(idx(i, j)) - x(idx(i, j - 1))) / (g.yc()(j) - g.yc()(j - 1));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) p(i, j) += x(idx(i, j)) / dt;
  return it;
}

FlowStepReport FlowSolver::advance(FlowField& field, const BoundarySpec& bc,
                                   const WingForcing* wing, double dt) {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (field.grid.get() != grid_.get()) throw ParameterError("field grid mismatch");
  const auto& g = *grid_;
  const int nx = g.nx(), ny = g.ny();

  FlowStepReport report;
  report.cfl = estimate_cfl(field, wing, dt);
  if (report.cfl > params_.cfl_limit) {
    throw TimeStepError("convective CFL " + std::to_string(report.cfl) +
                        " exceeds limit; reduce dt");
  }

  const double t0 = field.time;
  const double t1 = t0 + dt;
  const double nu = 1.0 / reynolds_;
  const double h = 0.5 * dt;

  EdgeValues ev0, ev1;
  resolve_boundary(field, bc, t0, ev0, false);  // tangential wall data at t^n
  resolve_boundary(field, bc, t1, ev1, true);   // targets at t^{n+1}

  if (wing != nullptr) {
    build_mass_source(*wing, field.q);
  } else {
    field.q.setZero();
  }
  double q_total = 0.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) q_total += field.q(i, j) * g.dx()(i) * g.dy()(j);
  mass_balance_correction(ev1, bc, q_total);

  const Eigen::ArrayXXd un = field.u;
  const Eigen::ArrayXXd vn = field.v;

  // Tangential ghosts sit at the mirrored first-center position; the value is
  // quadratic extrapolation through the wall value and two interior centers,
  // which keeps the wall rows second-order accurate.
  const Lagrange3 gh_bot = lagrange3(2.0 * g.spec().ymin - g.yc()(0), g.spec().ymin, g.yc()(0),
                                     g.yc()(1));
  const Lagrange3 gh_top = lagrange3(2.0 * g.spec().ymax - g.yc()(ny - 1), g.spec().ymax,
                                     g.yc()(ny - 1), g.yc()(ny - 2));
  const Lagrange3 gh_lft = lagrange3(2.0 * g.spec().xmin - g.xc()(0), g.spec().xmin, g.xc()(0),
                                     g.xc()(1));
  const Lagrange3 gh_rgt = lagrange3(2.0 * g.spec().xmax - g.xc()(nx - 1), g.spec().xmax,
                                     g.xc()(nx - 1), g.xc()(nx - 2));

  auto u_ghost_bottom = [&](const Eigen::ArrayXXd& uu, int i, double tsel) -> double {
    if (bc.bottom.kind == BoundaryCondition::Kind::Prescribed) {
      const double wall = tsel == t0 ? ev0.bottom_u(i) : ev1.bottom_u(i);
      return gh_bot.w0 * wall + gh_bot.w1 * uu(i, 0) + gh_bot.w2 * uu(i, 1);
    }
    return uu(i, 0);
  };
  auto u_ghost_top = [&](const Eigen::ArrayXXd& uu, int i, double tsel) -> double {
    if (bc.top.kind == BoundaryCondition::Kind::Prescribed) {
      const double wall = tsel == t0 ? ev0.top_u(i) : ev1.top_u(i);
      return gh_top.w0 * wall + gh_top.w1 * uu(i, ny - 1) + gh_top.w2 * uu(i, ny - 2);
    }
    return uu(i, ny - 1);
  };
  auto v_ghost_left = [&](const Eigen::ArrayXXd& vv, int j, double tsel) -> double {
    if (bc.left.kind == BoundaryCondition::Kind::Prescribed) {
      const double wall = tsel == t0 ? ev0.left_v(j) : ev1.left_v(j);
      return gh_lft.w0 * wall + gh_lft.w1 * vv(0, j) + gh_lft.w2 * vv(1, j);
    }
    return vv(0, j);
  };
  auto v_ghost_right = [&](const Eigen::ArrayXXd& vv, int j, double tsel) -> double {
    if (bc.right.kind == BoundaryCondition::Kind::Prescribed) {
      const double wall = tsel == t0 ? ev0.right_v(j) : ev1.right_v(j);
      return gh_rgt.w0 * wall + gh_rgt.w1 * vv(nx - 1, j) + gh_rgt.w2 * vv(nx - 2, j);
    }
    return vv(nx - 1, j);
  };

  // ---- explicit right-hand side  R = -C(u^n)u^n + nu L u^n - G p^n ----------
  Eigen::ArrayXXd Ru = Eigen::ArrayXXd::Zero(nx + 1, ny);
  Eigen::ArrayXXd Rv = Eigen::ArrayXXd::Zero(nx, ny + 1);
  Eigen::ArrayXXd ua_u(nx + 1, ny), va_u(nx + 1, ny);  // advecting velocities at u-points
  Eigen::ArrayXXd ua_v(nx, ny + 1), va_v(nx, ny + 1);  // ... at v-points

  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const double wl = (g.xc()(i) - g.xf()(i)) / (g.xc()(i) - g.xc()(i - 1));
      const double wr = 1.0 - wl;
      ua_u(i, j) = un(i, j);
      va_u(i, j) = 0.5 * (wl * (vn(i - 1, j) + vn(i - 1, j + 1)) + wr * (vn(i, j) + vn(i, j + 1)));

      const double a = g.dx()(i - 1), bsp = g.dx()(i);
      const Stencil sx = stencil(a, bsp);
      const double um = un(i - 1, j), u0 = un(i, j), up = un(i + 1, j);

      const double ay = j > 0 ? g.yc()(j) - g.yc()(j - 1) : g.dy()(0);
      const double by = j + 1 < ny ? g.yc()(j + 1) - g.yc()(j) : g.dy()(ny - 1);
      const Stencil sy = stencil(ay, by);
      const double uym = j > 0 ? un(i, j - 1) : u_ghost_bottom(un, i, t0);
      const double uyp = j + 1 < ny ? un(i, j + 1) : u_ghost_top(un, i, t0);

      const double conv = ua_u(i, j) * (sx.lm * um + sx.l0 * u0 + sx.lp * up) +
                          va_u(i, j) * (sy.lm * uym + sy.l0 * u0 + sy.lp * uyp);
      const double diff = sx.sm * um + sx.s0 * u0 + sx.sp * up + sy.sm * uym + sy.s0 * u0 +
                          sy.sp * uyp;
      const double gp = (field.p(i, j) - field.p(i - 1, j)) / (g.xc()(i) - g.xc()(i - 1));
      Ru(i, j) = -conv + nu * diff - gp;
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double wb = (g.yc()(j) - g.yf()(j)) / (g.yc()(j) - g.yc()(j - 1));
      const double wt = 1.0 - wb;
      va_v(i, j) = vn(i, j);
      ua_v(i, j) = 0.5 * (wb * (un(i, j - 1) + un(i + 1, j - 1)) + wt * (un(i, j) + un(i + 1, j)));

      const double a = g.dy()(j - 1), bsp = g.dy()(j);
      const Stencil sy = stencil(a, bsp);
      const double vm = vn(i, j - 1), v0 = vn(i, j), vp = vn(i, j + 1);

      const double ax = i > 0 ? g.xc()(i) - g.xc()(i - 1) : g.dx()(0);
      const double bx = i + 1 < nx ? g.xc()(i + 1) - g.xc()(i) : g.dx()(nx - 1);
      const Stencil sx = stencil(ax, bx);
      const double vxm = i > 0 ? vn(i - 1, j) : v_ghost_left(vn, j, t0);
      const double vxp = i + 1 < nx ? vn(i + 1, j) : v_ghost_right(vn, j, t0);

      const double conv = ua_v(i, j) * (sx.lm * vxm + sx.l0 * v0 + sx.lp * vxp) +
                          va_v(i, j) * (sy.lm * vm + sy.l0 * v0 + sy.lp * vp);
      const double diff = sx.sm * vxm + sx.s0 * v0 + sx.sp * vxp + sy.sm * vm + sy.s0 * v0 +
                          sy.sp * vp;
      const double gp = (field.p(i, j) - field.p(i, j - 1)) / (g.yc()(j) - g.yc()(j - 1));
      Rv(i, j) = -conv + nu * diff - gp;
    }
  }

  // ---- ADI delta solve: (I + h Ax)(I + h Ay) du = dt * R --------------------
  Eigen::ArrayXXd du = Eigen::ArrayXXd::Zero(nx + 1, ny);
  Eigen::ArrayXXd dv = Eigen::ArrayXXd::Zero(nx, ny + 1);

  // boundary increments of the prescribed/corrected faces
  Eigen::ArrayXd d_left(ny), d_right(ny), d_bottom(nx), d_top(nx);
  for (int j = 0; j < ny; ++j) {
    d_left(j) = ev1.left_u(j) - un(0, j);
    d_right(j) = ev1.right_u(j) - un(nx, j);
  }
  for (int i = 0; i < nx; ++i) {
    d_bottom(i) = ev1.bottom_v(i) - vn(i, 0);
    d_top(i) = ev1.top_v(i) - vn(i, ny);
  }

  {  // u: x-sweep then y-sweep
    std::vector<double> lo(nx - 1), di(nx - 1), up(nx - 1), rhs(nx - 1);
    Eigen::ArrayXXd w = Eigen::ArrayXXd::Zero(nx + 1, ny);
    for (int j = 0; j < ny; ++j) {
      for (int i = 1; i < nx; ++i) {
        const Stencil sx = stencil(g.dx()(i - 1), g.dx()(i));
        const double c = ua_u(i, j);
        lo[i - 1] = h * (c * sx.lm - nu * sx.sm);
        di[i - 1] = 1.0 + h * (c * sx.l0 - nu * sx.s0);
        up[i - 1] = h * (c * sx.lp - nu * sx.sp);
        rhs[i - 1] = dt * Ru(i, j);
      }
      rhs[0] -= lo[0] * d_left(j);
      rhs[nx - 2] -= up[nx - 2] * d_right(j);
      thomas(lo, di, up, rhs);
      for (int i = 1; i < nx; ++i) w(i, j) = rhs[i - 1];
    }
    std::vector<double> lo2(ny), di2(ny), up2(ny), rhs2(ny);
    for (int i = 1; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const double ay = j > 0 ? g.yc()(j) - g.yc()(j - 1) : g.dy()(0);
        const double by = j + 1 < ny ? g.yc()(j + 1) - g.yc()(j) : g.dy()(ny - 1);
        const Stencil sy = stencil(ay, by);
        const double c = va_u(i, j);
        lo2[j] = h * (c * sy.lm - nu * sy.sm);
        di2[j] = 1.0 + h * (c * sy.l0 - nu * sy.s0);
        up2[j] = h * (c * sy.lp - nu * sy.sp);
        rhs2[j] = w(i, j);
      }
      // fold the tangential ghost increments into the wall rows
      if (bc.bottom.kind == BoundaryCondition::Kind::Prescribed) {
        const double dwall = ev1.bottom_u(i) - ev0.bottom_u(i);
        rhs2[0] -= lo2[0] * gh_bot.w0 * dwall;
        di2[0] += lo2[0] * gh_bot.w1;
        up2[0] += lo2[0] * gh_bot.w2;
      } else {
        di2[0] += lo2[0];
      }
      if (bc.top.kind == BoundaryCondition::Kind::Prescribed) {
        const double dwall = ev1.top_u(i) - ev0.top_u(i);
        rhs2[ny - 1] -= up2[ny - 1] * gh_top.w0 * dwall;
        di2[ny - 1] += up2[ny - 1] * gh_top.w1;
        lo2[ny - 1] += up2[ny - 1] * gh_top.w2;
      } else {
        di2[ny - 1] += up2[ny - 1];
      }
      thomas(lo2, di2, up2, rhs2);
      for (int j = 0; j < ny; ++j) du(i, j) = rhs2[j];
    }
  }
  {  // v: x-sweep then y-sweep
    std::vector<double> lo(nx), di(nx), up(nx), rhs(nx);
    Eigen::ArrayXXd w = Eigen::ArrayXXd::Zero(nx, ny + 1);
    for (int j = 1; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const double ax = i > 0 ? g.xc()(i) - g.xc()(i - 1) : g.dx()(0);
        const double bx = i + 1 < nx ? g.xc()(i + 1) - g.xc()(i) : g.dx()(nx - 1);
        const Stencil sx = stencil(ax, bx);
        const double c = ua_v(i, j);
        lo[i] = h * (c * sx.lm - nu * sx.sm);
        di[i] = 1.0 + h * (c * sx.l0 - nu * sx.s0);
        up[i] = h * (c * sx.lp - nu * sx.sp);
        rhs[i] = dt * Rv(i, j);
      }
      if (bc.left.kind == BoundaryCondition::Kind::Prescribed) {
        const double dwall = ev1.left_v(j) - ev0.left_v(j);
        rhs[0] -= lo[0] * gh_lft.w0 * dwall;
        di[0] += lo[0] * gh_lft.w1;
        up[0] += lo[0] * gh_lft.w2;
      } else {
        di[0] += lo[0];
      }
      if (bc.right.kind == BoundaryCondition::Kind::Prescribed) {
        const double dwall = ev1.right_v(j) - ev0.right_v(j);
        rhs[nx - 1] -= up[nx - 1] * gh_rgt.w0 * dwall;
        di[nx - 1] += up[nx - 1] * gh_rgt.w1;
        lo[nx - 1] += up[nx - 1] * gh_rgt.w2;
      } else {
        di[nx - 1] += up[nx - 1];
      }
      thomas(lo, di, up, rhs);
      for (int i = 0; i < nx; ++i) w(i, j) = rhs[i];
    }
    std::vector<double> lo2(ny - 1), di2(ny - 1), up2(ny - 1), rhs2(ny - 1);
    for (int i = 0; i < nx; ++i) {
      for (int j = 1; j < ny; ++j) {
        const Stencil sy = stencil(g.dy()(j - 1), g.dy()(j));
        const double c = va_v(i, j);
        lo2[j - 1] = h * (c * sy.lm - nu * sy.sm);
        di2[j - 1] = 1.0 + h * (c * sy.l0 - nu * sy.s0);
        up2[j - 1] = h * (c * sy.lp - nu * sy.sp);
        rhs2[j - 1] = w(i, j);
      }
      rhs2[0] -= lo2[0] * d_bottom(i);
      rhs2[ny - 2] -= up2[ny - 2] * d_top(i);
      thomas(lo2, di2, up2, rhs2);
      for (int j = 1; j < ny; ++j) dv(i, j) = rhs2[j - 1];
    }
  }

  field.u += du;
  field.v += dv;
  for (int j = 0; j < ny; ++j) {
    field.u(0, j) = ev1.left_u(j);
    field.u(nx, j) = ev1.right_u(j);
  }
  for (int i = 0; i < nx; ++i) {
    field.v(i, 0) = ev1.bottom_v(i);
    field.v(i, ny) = ev1.top_v(i);
  }

  if (wing != nullptr) apply_direct_forcing(field.u, field.v, *wing);

  report.poisson_iterations = project(field.u, field.v, field.p, field.q, dt,
                                      report.poisson_residual);
  report.max_divergence_error = report.poisson_residual;
  field.time = t1;
  return report;
}

// --- diagnostics ----------------------------------------------------------------

Vec2 probe_velocity(const FlowField& field, const Vec2& point) {
  const auto& g = *field.grid;
  if (!g.contains(point.x(), point.y())) {
    throw GeometryError("probe point outside the domain");
  }
  const double u = bilinear(field.u, g.xf(), g.yc(), point.x(), point.y());
  const double v = bilinear(field.v, g.xc(), g.yf(), point.x(), point.y());
  return {u, v};
}

double interface_slip(const FlowField& field, const WingForcing& wing) {
  double s = 0.0;
  for (int k = 0; k < wing.count(); ++k) {
    s = std::max(s, (probe_velocity(field, wing.X.col(k)) - Vec2(wing.V.col(k))).norm());
  }
  return s;
}

AeroLoad aero_load(const FlowField& field, const WingForcing& wing, double span_b,
                   const Vec2& body_center, double reynolds, const FlowParams& params) {
  const auto& g = *field.grid;
  const int nx = g.nx(), ny = g.ny();
  const int ns = wing.count();
  AeroLoad load = AeroLoad::zero(ns);
  const Eigen::ArrayXd ds = wing.node_ds();
  const Eigen::Matrix2Xd nm = wing.normals();

  // cell-centered velocity gradients
  Eigen::ArrayXXd ux(nx, ny), uy(nx, ny), vx(nx, ny), vy(nx, ny);
  Eigen::ArrayXXd ubar(nx, ny), vbar(nx, ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      ux(i, j) = (field.u(i + 1, j) - field.u(i, j)) / g.dx()(i);
      vy(i, j) = (field.v(i, j + 1) - field.v(i, j)) / g.dy()(j);
      ubar(i, j) = 0.5 * (field.u(i, j) + field.u(i + 1, j));
      vbar(i, j) = 0.5 * (field.v(i, j) + field.v(i, j + 1));
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int jm = std::max(0, j - 1), jp = std::min(ny - 1, j + 1);
      uy(i, j) = (ubar(i, jp) - ubar(i, jm)) / (g.yc()(jp) - g.yc()(jm));
      const int im = std::max(0, i - 1), ip = std::min(nx - 1, i + 1);
      vx(i, j) = (vbar(ip, j) - vbar(im, j)) / (g.xc()(ip) - g.xc()(im));
    }
  }

  auto sample = [&](const Eigen::ArrayXXd& a, const Vec2& pt) {
    return bilinear(a, g.xc(), g.yc(), pt.x(), pt.y());
  };

  const double two_mu = 2.0 / reynolds;
  for (int k = 0; k < ns; ++k) {
    const Vec2 n = nm.col(k);
    const double hloc = std::max(g.local_dx(wing.X(0, k)), g.local_dy(wing.X(1, k)));
    const double d = params.probe_offset_factor * hloc;
    const Vec2 xp = wing.X.col(k) + d * n;
    const Vec2 xm = wing.X.col(k) - d * n;
    if (!g.contains(xp.x(), xp.y()) || !g.contains(xm.x(), xm.y())) {
      throw GeometryError("aerodynamic probe point outside the domain");
    }
    const double dp = sample(field.p, xp) - sample(field.p, xm);
    const double dux = sample(ux, xp) - sample(ux, xm);
    const double duy = sample(uy, xp) - sample(uy, xm);
    const double dvx = sample(vx, xp) - sample(vx, xm);
    const double dvy = sample(vy, xp) - sample(vy, xm);
    // [D] n with D = (grad u + grad u^T)/2
    const double dsh = 0.5 * (duy + dvx);
    const Vec2 Dn(dux * n.x() + dsh * n.y(), dsh * n.x() + dvy * n.y());
    const Vec2 f = (-dp * n + two_mu * Dn) * ds(k);
    load.per_segment.col(k) = f;
    load.force += f;
    const Vec2 r = wing.X.col(k) - body_center;
    load.moment += r.x() * f.y() - r.y() * f.x();
  }
  load.force *= span_b;
  load.moment *= span_b;
  return load;
}

namespace {
void require_mirror_symmetric(const StretchedGrid& g) {
  const auto& s = g.spec();
  const double L = s.xmax - s.xmin;
  for (int i = 0; i <= g.nx(); ++i) {
    if (std::abs(g.xf()(i) + g.xf()(g.nx() - i) - (s.xmin + s.xmax)) > 1e-12 * L) {
      throw GeometryError("grid is not mirror-symmetric in x");
    }
  }
}
}  // namespace

FlowField mirror_x(const FlowField& field) {
  const auto& g = *field.grid;
  require_mirror_symmetric(g);
  const int nx = g.nx(), ny = g.ny();
  FlowField m = field;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) m.u(i, j) = -field.u(nx - i, j);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) m.v(i, j) = field.v(nx - 1 - i, j);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      m.p(i, j) = field.p(nx - 1 - i, j);
      m.q(i, j) = field.q(nx - 1 - i, j);
    }
  }
  return m;
}

FlowField rotate_quarter(const FlowField& field) {
  const auto& g = *field.grid;
  const auto& s = g.spec();
  if (g.nx() != g.ny() || std::abs(s.xmin + s.xmax) > 1e-12 || std::abs(s.ymin + s.ymax) > 1e-12) {
    throw GeometryError("quarter rotation requires a square, origin-centered grid");
  }
  for (int i = 0; i <= g.nx(); ++i) {
    if (std::abs(g.xf()(i) - g.yf()(i)) > 1e-12) {
      throw GeometryError("quarter rotation requires identical x and y grids");
    }
  }
  const int n = g.nx();
  FlowField r = field;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= n; ++i) r.u(i, j) = -field.v(j, n - i);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i < n; ++i) r.v(i, j) = field.u(j, n - 1 - i);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      r.p(i, j) = field.p(j, n - 1 - i);
      r.q(i, j) = field.q(j, n - 1 - i);
    }
  }
  return r;
}

}  // namespace flyer
