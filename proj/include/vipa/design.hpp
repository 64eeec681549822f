#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vipa/optics.hpp"

namespace vipa {

using Vipa = VipaSpec<double>;
using Layout = OpticalLayout<double>;

/// Targets for a spectrometer design.
struct DesignGoal {
  double lambda0_nm{605.9773};
  double delta_nu_mhz{120.0};  // frequency-mode spacing
  double pitch_um{30.0};       // spatial shift per mode
  std::optional<double> fwhm_target_mhz;
  double W_mm{1.0};
  double y_element_um{30.0};
  // Search bracket for the internal incidence angle.
  double theta_min_rad{units::deg_to_rad(0.2)};
  double theta_max_rad{units::deg_to_rad(1.2)};
  // When set, the exact resonance nearest this angle is used instead of the bracket rule.
  std::optional<double> theta_nominal_rad;
  // Optional f_in to check against the clipping interval.
  std::optional<double> f_in_candidate_mm;

  void validate() const;
};

struct FinInterval {
  double min_mm{0};
  double max_mm{0};
  bool empty{true};
};

struct DesignResult {
  double theta_in_rad{0};
  std::int64_t m{0};
  double f_x_mm{0};
  FinInterval f_in;
  double f_y_max_mm{0};
  std::optional<double> t_required_mm;
  std::vector<std::pair<std::string, double>> diagnostics;

  std::optional<double> diagnostic(const std::string& name) const;
};

struct IncidentAngle {
  double theta_in_rad;
  std::int64_t m;
};

/// Smallest internal angle in [theta_min, theta_max] satisfying m lambda0 = 2 t n_r cos(theta_in)
/// for integer m. Throws InfeasibleDesignError naming the neighbouring candidates if none exists.
IncidentAngle solve_incident_angle(const Vipa& vipa, double lambda0_nm, double theta_min_rad, double theta_max_rad);

/// Exact resonance angle closest to `theta_nominal_rad`.
IncidentAngle nearest_incident_angle(const Vipa& vipa, double lambda0_nm, double theta_nominal_rad);

/// Resonance angle of integer order m (rad); throws if m lambda0 > 2 t n_r.
double resonance_angle(const Vipa& vipa, double lambda0_nm, std::int64_t m);

/// Focal length f_x (mm) mapping a `delta_nu_mhz` step onto `pitch_um` of focal-plane shift.
double solve_fx(const Vipa& vipa, double theta_in_rad, double lambda0_nm, double delta_nu_mhz, double pitch_um);

/// Residual of the no-clipping condition at a given f_in; >= 0 means the beam is not clipped.
double clipping_residual(const Vipa& vipa, double theta_in_rad, double lambda0_nm, double W_mm, double f_in_mm);

/// Interval of f_in (mm) for which the beam is not clipped at the VIPA aperture. Each endpoint is
/// found by bisection to `tolerance_mm`.
FinInterval solve_fin_interval(const Vipa& vipa, double theta_in_rad, double lambda0_nm, double W_mm,
                               double tolerance_mm = 0.1);

/// Largest f_y (mm) whose y-direction 1/e^2 full width fits in `y_element_um`.
double solve_fy_max(double lambda0_nm, double W_mm, double y_element_um);

/// Etalon thickness (mm) giving `fwhm_target_mhz`. `vipa.t_mm` is ignored.
double solve_thickness(const Vipa& vipa, double cos_theta, double fwhm_target_mhz);

DesignResult full_design(const Vipa& vipa, const DesignGoal& goal);

/// Layout realising a design, with f_in taken from the goal candidate or the interval midpoint.
Layout layout_from_design(const DesignGoal& goal, const DesignResult& result, double f_y_mm);

}  // namespace vipa
