#pragma once

#include "flyer/errors.hpp"

namespace flyer {

/// Dimensional description of the flyer and fluid (gram / millimetre / second).
/// Defaults are the fruit-fly values used throughout.
struct PhysicalParams {
  double chord_mm = 0.75;               ///< wing chord c
  double ref_frequency_hz = 200.0;      ///< reference flapping frequency f_r
  double ref_amplitude_chords = 3.6;    ///< reference stroke amplitude A_r / c
  double fluid_density_g_mm3 = 1.2e-6;  ///< rho_f (air)
  double wing_density_g_mm3 = 1.2e-3;   ///< rho_w (wing material)
  double wing_thickness_mm = 7.5e-4;    ///< h
  double body_mass_g = 6.0e-4;          ///< m_b
  double body_length_chords = 3.0;      ///< L_b / c
  double body_radius_chords = 1.0;      ///< r_b / c
  double aspect_ratio = 6.0;            ///< A_R = b / c
  double reynolds = 84.8;               ///< Re = U_r c / nu; nu is back-solved
  double gravity_mm_s2 = 9810.0;        ///< g
  double tension_KT = 7.4e6;            ///< nondimensional stretching coefficient
  double bending_KB = 2.0e4;            ///< nondimensional bending coefficient

  void validate() const;  ///< throws ParameterError on any non-physical value
};

/// Reference scales and dimensionless groups derived from PhysicalParams.
///
/// Length c, time 1/(2 f_r), velocity U_r = pi f_r A_r, angular velocity
/// pi f_r / 3, force 4 rho_f c^4 f_r^2, moment 4 rho_f c^5 f_r^2.
struct NondimGroups {
  // reference scales (dimensional, g/mm/s system)
  double length_mm = 0.0;
  double time_s = 0.0;
  double velocity_mm_s = 0.0;
  double angular_velocity_rad_s = 0.0;
  double force_scale = 0.0;   // g mm / s^2
  double moment_scale = 0.0;  // g mm^2 / s^2

  // dimensionless groups
  double reynolds = 0.0;       ///< Re
  double froude = 0.0;         ///< Fr = g / (4 c f_r^2)
  double mass_ratio = 0.0;     ///< m_bw = m_b / (rho_w b c h)
  double density_ratio = 0.0;  ///< rho_wf = rho_w / rho_f
  double inertia = 0.0;        ///< I_bw = m_bw (L_b^2/12 + r_b^2/4)
  double K_T = 0.0;            ///< stretching coefficient
  double K_B = 0.0;            ///< bending coefficient

  // nondimensional geometry carried along for the solvers
  double thickness = 0.0;    ///< h / c
  double span = 0.0;         ///< b / c = A_R
  double body_length = 0.0;  ///< L_b / c
  double body_radius = 0.0;  ///< r_b / c
  double aspect_ratio = 0.0;
  double nu_mm2_s = 0.0;  ///< kinematic viscosity recovered from Re

  double dimensionalize_length(double x) const { return x * length_mm; }
  double nondimensionalize_length(double x) const { return x / length_mm; }
  double dimensionalize_time(double t) const { return t * time_s; }
  double nondimensionalize_time(double t) const { return t / time_s; }
  double dimensionalize_velocity(double u) const { return u * velocity_mm_s; }
  double nondimensionalize_velocity(double u) const { return u / velocity_mm_s; }
  double dimensionalize_force(double f) const { return f * force_scale; }
  double nondimensionalize_force(double f) const { return f / force_scale; }
  double dimensionalize_moment(double m) const { return m * moment_scale; }
  double nondimensionalize_moment(double m) const { return m / moment_scale; }

  /// Dimensional stretching / bending coefficients recovered from the stored
  /// nondimensional values (K_T * 4 rho_f c^2 h f_r^2, K_B * 4 rho_f c^4 h f_r^2).
  double tension_KT_dim = 0.0;
  double bending_KB_dim = 0.0;
};

NondimGroups derive_nondim_groups(const PhysicalParams& p);

}  // namespace flyer
