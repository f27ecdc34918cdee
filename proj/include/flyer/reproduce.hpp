#pragma once

#include <vector>

#include "flyer/env.hpp"

namespace flyer {

/// Lattice of replica frames for the data-reproduction augmentation. Every
/// real transition is relocated to each start target and, at each one, a
/// mirrored copy and a fan of rotated copies are emitted. All transforms
/// conserve the dynamics, so the replicas are valid training data; only the
/// goal-relative quantities (and hence the reward) change.
struct ReproductionGrid {
  /// Absolute start coordinates the replicas are relocated to (Cartesian
  /// product of the two axes). Leaving both empty keeps the original start.
  std::vector<double> start_xs;
  std::vector<double> start_ys;

  bool mirror = true;  ///< also emit the x-mirrored copy of every replica
  int rotations = 10;  ///< rotation angles 2*pi*k/rotations, k = 0..rotations-1

  /// Replicas whose flyer position leaves this box are dropped.
  Vec2 domain_lo = Vec2(-kRewardLengthScale, -kRewardLengthScale);
  Vec2 domain_hi = Vec2(kRewardLengthScale, kRewardLengthScale);

  void validate() const;
  /// Replicas per transition before domain filtering.
  int combinations() const;

  /// Start targets -900..900 step 200 on both axes (100 points), mirroring
  /// on, ten rotation angles: 2000 replicas per transition on the full
  /// training domain.
  static ReproductionGrid training_default();
  /// No relocation, no mirror, single zero rotation: reproduces the input.
  static ReproductionGrid identity();
};

/// Relocate the episode start by (x_t, y_t): the goal-relative positions in
/// s and s_next shift, everything else is untouched, and the reward is
/// re-evaluated from the relocated next state.
Transition translate_transition(const Transition& t, double x_t, double y_t);

/// Reflect the transition about the vertical line through its start point.
/// Sign-flips the x-like components (u, omega, u_a, rail, stroke sign, body
/// force x) and maps x_r to 2 x_start - x_r; y-like components are unchanged.
Transition mirror_transition(const Transition& t);

/// Rotate the transition by theta_r about its start point. Positions orbit
/// the start; velocities, the felt flow, and the body force rotate in place;
/// the heading shifts by theta_r. Gravity rotates with the frame, so the
/// replica is a flyer whose "down" points along the rotated body force.
Transition rotate_transition(const Transition& t, double theta_r);

/// The full augmentation: translation x mirror x rotation applied in that
/// order, with out-of-domain replicas dropped.
std::vector<Transition> reproduce_all(const Transition& t, const ReproductionGrid& grid);

}  // namespace flyer
