#include "flyer/scales.hpp"

#include <cmath>

namespace flyer {

namespace {
const double kPi = 3.14159265358979323846;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ParameterError(std::string(name) + " must be strictly positive and finite");
  }
}
}  // namespace

void PhysicalParams::validate() const {
  require_positive(chord_mm, "chord_mm");
  require_positive(ref_frequency_hz, "ref_frequency_hz");
  require_positive(ref_amplitude_chords, "ref_amplitude_chords");
  require_positive(fluid_density_g_mm3, "fluid_density_g_mm3");
  require_positive(wing_density_g_mm3, "wing_density_g_mm3");
  require_positive(wing_thickness_mm, "wing_thickness_mm");
  require_positive(body_mass_g, "body_mass_g");
  require_positive(body_length_chords, "body_length_chords");
  require_positive(body_radius_chords, "body_radius_chords");
  require_positive(aspect_ratio, "aspect_ratio");
  require_positive(reynolds, "reynolds");
  require_positive(gravity_mm_s2, "gravity_mm_s2");
  require_positive(tension_KT, "tension_KT");
  require_positive(bending_KB, "bending_KB");
  if (aspect_ratio < 1.0) {
    throw ParameterError("aspect_ratio must be >= 1");
  }
}

NondimGroups derive_nondim_groups(const PhysicalParams& p) {
  p.validate();
  NondimGroups g;

  const double c = p.chord_mm;
  const double fr = p.ref_frequency_hz;
  const double Ar = p.ref_amplitude_chords * c;

  g.length_mm = c;
  g.time_s = 1.0 / (2.0 * fr);
  g.velocity_mm_s = kPi * fr * Ar;
  g.angular_velocity_rad_s = kPi * fr / 3.0;
  g.force_scale = 4.0 * p.fluid_density_g_mm3 * c * c * c * c * fr * fr;
  g.moment_scale = g.force_scale * c;

  g.reynolds = p.reynolds;
  g.nu_mm2_s = g.velocity_mm_s * c / p.reynolds;
  g.froude = p.gravity_mm_s2 / (4.0 * c * fr * fr);

  const double span_mm = p.aspect_ratio * c;
  const double wing_mass = p.wing_density_g_mm3 * span_mm * c * p.wing_thickness_mm;
  g.mass_ratio = p.body_mass_g / wing_mass;
  g.density_ratio = p.wing_density_g_mm3 / p.fluid_density_g_mm3;

  const double Lb = p.body_length_chords;
  const double rb = p.body_radius_chords;
  g.inertia = g.mass_ratio * (Lb * Lb / 12.0 + rb * rb / 4.0);

  g.K_T = p.tension_KT;
  g.K_B = p.bending_KB;
  const double kt_factor = 4.0 * p.fluid_density_g_mm3 * c * c * p.wing_thickness_mm * fr * fr;
  g.tension_KT_dim = p.tension_KT * kt_factor;
  g.bending_KB_dim = p.bending_KB * kt_factor * c * c;

  g.thickness = p.wing_thickness_mm / c;
  g.span = p.aspect_ratio;
  g.body_length = Lb;
  g.body_radius = rb;
  g.aspect_ratio = p.aspect_ratio;
  return g;
}

}  // namespace flyer
