#include "flyer/reproduce.hpp"

#include <cmath>

namespace flyer {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// Reward belongs to the frame the state lives in, so every transform ends by
// re-scoring the replica from its own next state.
void reevaluate_reward(Transition& t) {
  const double L = std::hypot(t.s_next[obs::kXr] * t.scales[obs::kXr],
                              t.s_next[obs::kYr] * t.scales[obs::kYr]);
  const double omega = t.s_next[obs::kOmega] * t.scales[obs::kOmega];
  t.r = compute_reward(L, omega);
}

// Start point in the goal-relative, normalized coordinates of the x_r/y_r
// observation slots.
Vec2 start_in_obs(const Transition& t) {
  return Vec2((t.start.x() - t.goal.x()) / t.scales[obs::kXr],
              (t.start.y() - t.goal.y()) / t.scales[obs::kYr]);
}

Vec2 rotated(const Vec2& v, double c, double s) {
  return Vec2(c * v.x() - s * v.y(), s * v.x() + c * v.y());
}

bool inside(const Vec2& p, const Vec2& lo, const Vec2& hi) {
  return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
}

// Flyer position before the stroke, reconstructed from the observation.
Vec2 pre_stroke_position(const Transition& t) {
  return Vec2(t.s[obs::kXr] * t.scales[obs::kXr] + t.goal.x(),
              t.s[obs::kYr] * t.scales[obs::kYr] + t.goal.y());
}

}  // namespace

void ReproductionGrid::validate() const {
  if (start_xs.empty() != start_ys.empty())
    throw ParameterError("start targets need both axes (or neither)");
  for (double v : start_xs)
    if (!std::isfinite(v)) throw ParameterError("start target is not finite");
  for (double v : start_ys)
    if (!std::isfinite(v)) throw ParameterError("start target is not finite");
  if (rotations < 1) throw ParameterError("at least one rotation angle is required");
  if (!(domain_lo.x() < domain_hi.x() && domain_lo.y() < domain_hi.y()))
    throw ParameterError("reproduction domain is empty");
}

int ReproductionGrid::combinations() const {
  const int targets =
      start_xs.empty() ? 1 : static_cast<int>(start_xs.size() * start_ys.size());
  return targets * (mirror ? 2 : 1) * rotations;
}

ReproductionGrid ReproductionGrid::training_default() {
  ReproductionGrid g;
  for (int i = 0; i < 10; ++i) {
    g.start_xs.push_back(-900.0 + 200.0 * i);
    g.start_ys.push_back(-900.0 + 200.0 * i);
  }
  return g;
}

ReproductionGrid ReproductionGrid::identity() {
  ReproductionGrid g;
  g.mirror = false;
  g.rotations = 1;
  return g;
}

Transition translate_transition(const Transition& t, double x_t, double y_t) {
  if (x_t == 0.0 && y_t == 0.0) return t;
  Transition out = t;
  out.s[obs::kXr] += x_t / t.scales[obs::kXr];
  out.s[obs::kYr] += y_t / t.scales[obs::kYr];
  out.s_next[obs::kXr] += x_t / t.scales[obs::kXr];
  out.s_next[obs::kYr] += y_t / t.scales[obs::kYr];
  out.start += Vec2(x_t, y_t);
  out.body_pos += Vec2(x_t, y_t);
  reevaluate_reward(out);
  return out;
}

Transition mirror_transition(const Transition& t) {
  const Vec2 s0 = start_in_obs(t);
  Transition out = t;
  for (Obs* state : {&out.s, &out.s_next}) {
    Obs& o = *state;
    o[obs::kXr] = 2.0 * s0.x() - o[obs::kXr];
    o[obs::kSin] = -o[obs::kSin];
    o[obs::kU] = -o[obs::kU];
    o[obs::kOmega] = -o[obs::kOmega];
    o[obs::kUa] = -o[obs::kUa];
    o[obs::kXl] = -o[obs::kXl];
    o[obs::kK] = -o[obs::kK];
    o[obs::kFbx] = -o[obs::kFbx];
  }
  out.body_pos.x() = 2.0 * t.start.x() - t.body_pos.x();
  out.body_angle = -t.body_angle;
  out.gravity_dir.x() = -t.gravity_dir.x();
  reevaluate_reward(out);
  return out;
}

Transition rotate_transition(const Transition& t, double theta_r) {
  if (theta_r == 0.0) return t;
  if (t.scales[obs::kXr] != t.scales[obs::kYr] || t.scales[obs::kU] != t.scales[obs::kV] ||
      t.scales[obs::kUa] != t.scales[obs::kVa] ||
      t.scales[obs::kFbx] != t.scales[obs::kFby])
    throw ParameterError("rotation requires matched scales for paired components");

  const double c = std::cos(theta_r);
  const double s = std::sin(theta_r);
  const Vec2 s0 = start_in_obs(t);

  Transition out = t;
  for (Obs* state : {&out.s, &out.s_next}) {
    Obs& o = *state;
    const Vec2 rel(o[obs::kXr] - s0.x(), o[obs::kYr] - s0.y());
    const Vec2 moved = s0 + rotated(rel, c, s);
    o[obs::kXr] = moved.x();
    o[obs::kYr] = moved.y();

    const double sin_b = o[obs::kSin], cos_b = o[obs::kCos];
    o[obs::kSin] = sin_b * c + cos_b * s;  // sin(theta_b + theta_r)
    o[obs::kCos] = cos_b * c - sin_b * s;

    const Vec2 vel = rotated(Vec2(o[obs::kU], o[obs::kV]), c, s);
    o[obs::kU] = vel.x();
    o[obs::kV] = vel.y();
    const Vec2 amb = rotated(Vec2(o[obs::kUa], o[obs::kVa]), c, s);
    o[obs::kUa] = amb.x();
    o[obs::kVa] = amb.y();
    const Vec2 fb = rotated(Vec2(o[obs::kFbx], o[obs::kFby]), c, s);
    o[obs::kFbx] = fb.x();
    o[obs::kFby] = fb.y();
  }
  out.body_pos = t.start + rotated(t.body_pos - t.start, c, s);
  out.body_angle = t.body_angle + theta_r;
  out.gravity_dir = rotated(t.gravity_dir, c, s);
  reevaluate_reward(out);
  return out;
}

std::vector<Transition> reproduce_all(const Transition& t, const ReproductionGrid& grid) {
  grid.validate();

  std::vector<Transition> out;
  out.reserve(grid.combinations());

  const auto emit = [&](const Transition& replica) {
    if (inside(pre_stroke_position(replica), grid.domain_lo, grid.domain_hi) &&
        inside(replica.body_pos, grid.domain_lo, grid.domain_hi))
      out.push_back(replica);
  };

  const auto expand = [&](const Transition& moved) {
    for (int m = 0; m < (grid.mirror ? 2 : 1); ++m) {
      const Transition flipped = m ? mirror_transition(moved) : moved;
      for (int k = 0; k < grid.rotations; ++k)
        emit(k ? rotate_transition(flipped, kTwoPi * k / grid.rotations) : flipped);
    }
  };

  if (grid.start_xs.empty()) {
    expand(t);
  } else {
    for (double sx : grid.start_xs)
      for (double sy : grid.start_ys)
        expand(translate_transition(t, sx - t.start.x(), sy - t.start.y()));
  }
  return out;
}

}  // namespace flyer
