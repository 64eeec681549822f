#include "vipa/design.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vipa {
namespace {

constexpr double kPi = std::numbers::pi;

// 2 t n_r / lambda0, the order number at normal incidence.
double axial_order(const Vipa& vipa, double lambda0_nm) {
  return 2.0 * units::mm(vipa.t_mm) * vipa.n_r / units::nm(lambda0_nm);
}

std::string deg_string(double rad) {
  std::ostringstream os;
  os.precision(6);
  os << units::rad_to_deg(rad) << " deg";
  return os.str();
}

template <typename F>
double bisect(F&& f, double lo, double hi, double tolerance) {
  // f(lo) and f(hi) have opposite signs.
  const bool lo_negative = f(lo) < 0;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0) == lo_negative)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void DesignGoal::validate() const {
  if (!(lambda0_nm > 0)) throw ArgumentError("DesignGoal: lambda0 must be > 0");
  if (!(delta_nu_mhz > 0)) throw ArgumentError("DesignGoal: delta_nu must be > 0");
  if (!(pitch_um > 0)) throw ArgumentError("DesignGoal: pitch must be > 0");
  if (!(W_mm > 0)) throw ArgumentError("DesignGoal: W must be > 0");
  if (!(y_element_um > 0)) throw ArgumentError("DesignGoal: y_element must be > 0");
  if (fwhm_target_mhz && !(*fwhm_target_mhz > 0)) throw ArgumentError("DesignGoal: fwhm_target must be > 0");
  if (theta_nominal_rad) {
    if (!(*theta_nominal_rad > 0 && *theta_nominal_rad < Layout::max_theta_in_rad))
      throw ArgumentError("DesignGoal: theta_nominal must lie in (0, 0.1) rad");
  } else if (!(theta_min_rad > 0 && theta_min_rad < theta_max_rad && theta_max_rad < Layout::max_theta_in_rad)) {
    throw ArgumentError("DesignGoal: theta bracket must satisfy 0 < min < max < 0.1 rad");
  }
}

std::optional<double> DesignResult::diagnostic(const std::string& name) const {
  for (const auto& [key, value] : diagnostics)
    if (key == name) return value;
  return std::nullopt;
}

double resonance_angle(const Vipa& vipa, double lambda0_nm, std::int64_t m) {
  const double k = axial_order(vipa, lambda0_nm);
  const double c = static_cast<double>(m) / k;
  if (m < 1 || c > 1.0) throw InfeasibleDesignError("resonance", "order " + std::to_string(m) + " has no real angle");
  return std::acos(c);
}

IncidentAngle solve_incident_angle(const Vipa& vipa, double lambda0_nm, double theta_min_rad, double theta_max_rad) {
  vipa.validate();
  if (!(lambda0_nm > 0)) throw ArgumentError("solve_incident_angle: lambda0 must be > 0");
  if (!(theta_min_rad > 0 && theta_min_rad < theta_max_rad && theta_max_rad < Layout::max_theta_in_rad))
    throw ArgumentError("solve_incident_angle: bracket must satisfy 0 < min < max < 0.1 rad");

  const double k = axial_order(vipa, lambda0_nm);
  // cos is decreasing, so the largest admissible order gives the smallest angle.
  const auto m_hi = static_cast<std::int64_t>(std::floor(k * std::cos(theta_min_rad)));
  const auto m_lo = static_cast<std::int64_t>(std::ceil(k * std::cos(theta_max_rad)));
  if (m_lo > m_hi) {
    std::ostringstream msg;
    msg << "no integer order maps into [" << deg_string(theta_min_rad) << ", " << deg_string(theta_max_rad)
        << "]; nearest candidates are " << deg_string(resonance_angle(vipa, lambda0_nm, m_hi));
    if (static_cast<double>(m_hi + 1) <= k)
      msg << " and " << deg_string(resonance_angle(vipa, lambda0_nm, m_hi + 1));
    throw InfeasibleDesignError("incident_angle", msg.str());
  }
  return {resonance_angle(vipa, lambda0_nm, m_hi), m_hi};
}

IncidentAngle nearest_incident_angle(const Vipa& vipa, double lambda0_nm, double theta_nominal_rad) {
  vipa.validate();
  if (!(lambda0_nm > 0)) throw ArgumentError("nearest_incident_angle: lambda0 must be > 0");
  const double k = axial_order(vipa, lambda0_nm);
  const auto below = static_cast<std::int64_t>(std::floor(k * std::cos(theta_nominal_rad)));
  IncidentAngle best{resonance_angle(vipa, lambda0_nm, below), below};
  if (static_cast<double>(below + 1) <= k) {
    const double other = resonance_angle(vipa, lambda0_nm, below + 1);
    if (std::abs(other - theta_nominal_rad) < std::abs(best.theta_in_rad - theta_nominal_rad))
      best = {other, below + 1};
  }
  return best;
}

double solve_fx(const Vipa& vipa, double theta_in_rad, double lambda0_nm, double delta_nu_mhz, double pitch_um) {
  vipa.validate();
  if (!(delta_nu_mhz > 0 && pitch_um > 0 && lambda0_nm > 0))
    throw ArgumentError("solve_fx: delta_nu, pitch and lambda0 must be > 0");
  const double theta = vipa.n_r * theta_in_rad;
  const double a = std::tan(theta_in_rad) * std::cos(theta) / (vipa.n_r * std::cos(theta_in_rad));
  const double b = 1.0 / (2.0 * vipa.n_r * vipa.n_r);
  const double x = units::um(pitch_um);
  // |dlambda| / lambda0 demanded at x = pitch.
  const double target = units::nm(lambda0_nm) * delta_nu_mhz * 1e6 / units::speed_of_light;
  // b x^2 u^2 + a x u - target = 0 in u = 1/f_x; the product of roots is negative, so
  // exactly one root is positive. Written in the cancellation-free form.
  const double disc = a * a * x * x + 4.0 * b * x * x * target;
  const double denom = a * x + std::sqrt(disc);
  if (!(denom > 0)) throw InfeasibleDesignError("focal_length_x", "no positive root for f_x");
  const double u = 2.0 * target / denom;
  return 1e3 / u;
}

double clipping_residual(const Vipa& vipa, double theta_in_rad, double lambda0_nm, double W_mm, double f_in_mm) {
  const double t = units::mm(vipa.t_mm);
  const double lam = units::nm(lambda0_nm);
  const double w0 = units::mm(f_in_mm) * lam / (kPi * units::mm(W_mm));
  const double spread = lam * t / (kPi * w0 * w0 * vipa.n_r);
  return (t * std::tan(theta_in_rad) - w0 * std::sqrt(1.0 + spread * spread)) * 1e3;
}

FinInterval solve_fin_interval(const Vipa& vipa, double theta_in_rad, double lambda0_nm, double W_mm,
                               double tolerance_mm) {
  vipa.validate();
  if (!(W_mm > 0)) throw ArgumentError("solve_fin_interval: W must be > 0");
  if (!(tolerance_mm > 0)) throw ArgumentError("solve_fin_interval: tolerance must be > 0");
  auto g = [&](double f) { return clipping_residual(vipa, theta_in_rad, lambda0_nm, W_mm, f); };

  // The right-hand side w0 sqrt(1 + (lambda t / (pi n w0^2))^2) is minimal at w0^2 = lambda t / (pi n).
  const double lam = units::nm(lambda0_nm);
  const double w_star = std::sqrt(lam * units::mm(vipa.t_mm) / (kPi * vipa.n_r));
  const double f_star = w_star * kPi * units::mm(W_mm) / lam * 1e3;
  if (g(f_star) < 0) return {};

  double lo = f_star;
  while (g(lo) >= 0) lo *= 0.5;
  double hi = f_star;
  while (g(hi) >= 0) hi *= 2.0;
  const double tol = 0.25 * tolerance_mm;
  return {bisect(g, lo, f_star, tol), bisect(g, f_star, hi, tol), false};
}

double solve_fy_max(double lambda0_nm, double W_mm, double y_element_um) {
  if (!(lambda0_nm > 0 && W_mm > 0 && y_element_um > 0))
    throw ArgumentError("solve_fy_max: arguments must be > 0");
  // exp(-2 pi W^2 y^2 / (lambda^2 f^2)) falls to 1/e^2 at y = lambda f / (sqrt(pi) W).
  return units::um(y_element_um) * std::sqrt(kPi) * units::mm(W_mm) / (2.0 * units::nm(lambda0_nm)) * 1e3;
}

double solve_thickness(const Vipa& vipa, double cos_theta, double fwhm_target_mhz) {
  const double rr = vipa.rr();
  if (!(fwhm_target_mhz > 0)) throw ArgumentError("solve_thickness: target must be > 0");
  if (!(rr > 0 && rr < 1)) throw ArgumentError("solve_thickness: require 0 < R r < 1");
  if (!(cos_theta > 0 && cos_theta <= 1)) throw ArgumentError("solve_thickness: cos(theta) must lie in (0, 1]");
  const double t_m = units::speed_of_light * (1.0 - rr) /
                     (2.0 * kPi * vipa.n_r * cos_theta * std::sqrt(rr) * fwhm_target_mhz * 1e6);
  return t_m * 1e3;
}

Layout layout_from_design(const DesignGoal& goal, const DesignResult& result, double f_y_mm) {
  Layout layout;
  layout.lambda0_nm = goal.lambda0_nm;
  layout.W_mm = goal.W_mm;
  layout.theta_in_rad = result.theta_in_rad;
  layout.f_x_mm = result.f_x_mm;
  layout.f_y_mm = f_y_mm;
  layout.f_in_mm = goal.f_in_candidate_mm.value_or(0.5 * (result.f_in.min_mm + result.f_in.max_mm));
  return layout;
}

DesignResult full_design(const Vipa& vipa, const DesignGoal& goal) {
  vipa.validate();
  goal.validate();

  DesignResult out;
  const IncidentAngle angle = goal.theta_nominal_rad
                                  ? nearest_incident_angle(vipa, goal.lambda0_nm, *goal.theta_nominal_rad)
                                  : solve_incident_angle(vipa, goal.lambda0_nm, goal.theta_min_rad, goal.theta_max_rad);
  out.theta_in_rad = angle.theta_in_rad;
  out.m = angle.m;

  Layout probe;
  probe.lambda0_nm = goal.lambda0_nm;
  probe.W_mm = goal.W_mm;
  probe.theta_in_rad = angle.theta_in_rad;
  probe.validate();
  const double fsr_ghz = fsr(vipa, probe);
  if (goal.delta_nu_mhz >= fsr_ghz * 1e3) {
    std::ostringstream msg;
    msg << "mode spacing " << goal.delta_nu_mhz << " MHz is not below the free spectral range " << fsr_ghz * 1e3
        << " MHz";
    throw InfeasibleDesignError("free_spectral_range", msg.str());
  }

  out.f_x_mm = solve_fx(vipa, angle.theta_in_rad, goal.lambda0_nm, goal.delta_nu_mhz, goal.pitch_um);
  out.f_in = solve_fin_interval(vipa, angle.theta_in_rad, goal.lambda0_nm, goal.W_mm);
  if (out.f_in.empty)
    throw InfeasibleDesignError("clipping", "no f_in keeps the beam inside the VIPA aperture at W = " +
                                                std::to_string(goal.W_mm) + " mm");
  out.f_y_max_mm = solve_fy_max(goal.lambda0_nm, goal.W_mm, goal.y_element_um);
  if (goal.fwhm_target_mhz)
    out.t_required_mm = solve_thickness(vipa, std::cos(vipa.n_r * angle.theta_in_rad), *goal.fwhm_target_mhz);

  const Layout layout = layout_from_design(goal, out, out.f_y_max_mm);
  const double fwhm_mhz = fwhm_freq(vipa, layout);
  const double period_um = spatial_period(vipa, layout);
  const double expected_width_um = fwhm_mhz * goal.pitch_um / goal.delta_nu_mhz;
  const double half_window = 0.45 * period_um;
  const double step = std::min(expected_width_um / 200.0, half_window / 1000.0);

  const auto slice = intensity_slice(vipa, layout, goal.lambda0_nm, AxisRange{-half_window, half_window}, step);
  const auto col = slice.values.col(0);
  double total = 0, inside = 0;
  for (Eigen::Index i = 0; i + 1 < col.size(); ++i) {
    const double area = 0.5 * (col(i) + col(i + 1)) * step;
    total += area;
    const double mid = 0.5 * (slice.x_um(i) + slice.x_um(i + 1));
    if (std::abs(mid) <= 0.5 * goal.pitch_um) inside += area;
  }

  auto& d = out.diagnostics;
  d.emplace_back("theta_in_deg", units::rad_to_deg(angle.theta_in_rad));
  d.emplace_back("eq4_relative_residual",
                 std::abs(static_cast<double>(angle.m) * units::nm(goal.lambda0_nm) -
                          2.0 * units::mm(vipa.t_mm) * vipa.n_r * std::cos(angle.theta_in_rad)) /
                     (static_cast<double>(angle.m) * units::nm(goal.lambda0_nm)));
  d.emplace_back("fwhm_freq_mhz", fwhm_mhz);
  d.emplace_back("fsr_ghz", fsr_ghz);
  d.emplace_back("finesse", finesse(vipa));
  d.emplace_back("virtual_sources", static_cast<double>(virtual_source_count(vipa, layout)));
  d.emplace_back("spatial_period_um", period_um);
  d.emplace_back("x_fwhm_um", x_profile_fwhm(vipa, layout, goal.lambda0_nm, 0.0, half_window, step));
  d.emplace_back("crosstalk_fraction", total > 0 ? 1.0 - inside / total : 1.0);
  if (goal.f_in_candidate_mm) {
    const double f = *goal.f_in_candidate_mm;
    d.emplace_back("f_in_candidate_mm", f);
    d.emplace_back("f_in_candidate_in_interval", (f >= out.f_in.min_mm && f <= out.f_in.max_mm) ? 1.0 : 0.0);
  }
  return out;
}

}  // namespace vipa
