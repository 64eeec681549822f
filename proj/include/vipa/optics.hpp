#pragma once

// Forward model of the VIPA spectrometer: etalon phase, focal-plane intensity,
// dispersion, FSR and frequency resolution. Everything here is a pure function
// templated on the scalar type, in the usual Eigen style.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "vipa/error.hpp"
#include "vipa/units.hpp"

namespace vipa {

/// Etalon geometry and coatings.
template <typename Scalar = double>
struct VipaSpec {
  Scalar R{0.996};    // input-side reflectivity
  Scalar r{0.945};    // output-side reflectivity
  Scalar n_r{1.46};   // refractive index
  Scalar t_mm{6.74};  // thickness
  Scalar L_mm{18.0};  // length

  Scalar rr() const { return R * r; }

  void validate() const {
    if (!(r > 0 && r <= R && R < 1))
      throw ArgumentError("VipaSpec: require 0 < r <= R < 1");
    if (!(n_r >= 1)) throw ArgumentError("VipaSpec: require n_r >= 1");
    if (!(t_mm > 0)) throw ArgumentError("VipaSpec: require t > 0");
    if (!(L_mm > 0)) throw ArgumentError("VipaSpec: require L > 0");
  }
};

/// Beam and lens parameters of one spectrometer design.
template <typename Scalar = double>
struct OpticalLayout {
  Scalar lambda0_nm{605.9773};
  Scalar W_mm{1.0};            // collimated beam radius at 1/e^2
  Scalar theta_in_rad{0.0};    // internal incidence angle
  Scalar f_in_mm{400.0};
  Scalar f_x_mm{1000.0};
  Scalar f_y_mm{40.0};

  static constexpr double max_theta_in_rad = 0.1;

  void validate() const {
    if (!(lambda0_nm > 0 && W_mm > 0 && f_in_mm > 0 && f_x_mm > 0 && f_y_mm > 0))
      throw ArgumentError("OpticalLayout: all lengths must be > 0");
    if (!(theta_in_rad > 0)) throw InvalidLayoutError("OpticalLayout: theta_in must be > 0");
    if (theta_in_rad > Scalar(max_theta_in_rad))
      throw InvalidLayoutError("OpticalLayout: theta_in > 0.1 rad is outside small-angle validity");
  }
};

/// Sampled relative intensity on the focal plane; values(ix, iy).
template <typename Scalar = double>
struct IntensityGrid {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x_um;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y_um;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> values;
};

struct AxisRange {
  double min_um;
  double max_um;
};

/// External (air-side) incidence angle, theta = n_r * theta_in.
template <typename Scalar>
Scalar external_angle(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout) {
  return vipa.n_r * layout.theta_in_rad;
}

template <typename Scalar>
std::int64_t virtual_source_count(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout) {
  using std::floor;
  using std::tan;
  if (!(layout.theta_in_rad > 0)) throw InvalidLayoutError("virtual_source_count: theta_in must be > 0");
  const Scalar n = vipa.L_mm / (Scalar(2) * vipa.t_mm * tan(layout.theta_in_rad));
  if (!(n < Scalar(1e6)))
    throw InvalidLayoutError("virtual_source_count: more than 1e6 virtual sources, theta_in too small");
  const auto count = static_cast<std::int64_t>(floor(n));
  if (count < 1) throw InvalidLayoutError("virtual_source_count: fewer than one virtual source");
  return count;
}

namespace detail {

// Coefficients of phi/(2 pi) = c0 - c1 x - c2 x^2, with x in metres.
template <typename Scalar>
struct PhaseCycles {
  Scalar c0, c1, c2;
  Scalar operator()(Scalar x_m) const { return c0 - c1 * x_m - c2 * x_m * x_m; }
};

template <typename Scalar>
PhaseCycles<Scalar> phase_cycles(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout,
                                 Scalar lambda_nm) {
  using std::cos;
  using std::tan;
  const Scalar t = units::mm(vipa.t_mm);
  const Scalar lam = units::nm(lambda_nm);
  const Scalar fx = units::mm(layout.f_x_mm);
  const Scalar ti = layout.theta_in_rad;
  const Scalar th = external_angle(vipa, layout);
  return {Scalar(2) * t * vipa.n_r * cos(ti) / lam,
          Scalar(2) * t * tan(ti) * cos(th) / (lam * fx),
          t * cos(ti) / (vipa.n_r * lam * fx * fx)};
}

}  // namespace detail

/// Round-trip phase between neighbouring virtual sources at focal-plane position x.
template <typename Scalar>
Scalar phase(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout, Scalar x_um,
             Scalar lambda_nm) {
  if (!(lambda_nm > 0)) throw ArgumentError("phase: lambda must be > 0");
  return Scalar(2) * std::numbers::pi_v<Scalar> *
         detail::phase_cycles(vipa, layout, lambda_nm)(units::um(x_um));
}

/// Finite-N multi-beam interference factor. Periodic in phi with period 2 pi.
template <typename Scalar>
Scalar interference_factor(Scalar rr, std::int64_t n_sources, Scalar phi) {
  using std::pow;
  using std::remainder;
  using std::sin;
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  const Scalar reduced = remainder(phi, two_pi);
  const Scalar np1 = Scalar(n_sources + 1);
  const Scalar rr_n = pow(rr, np1);
  const Scalar s_n = sin(np1 * reduced / Scalar(2));
  const Scalar s_1 = sin(reduced / Scalar(2));
  const Scalar num = (Scalar(1) - rr_n) * (Scalar(1) - rr_n) + Scalar(4) * rr_n * s_n * s_n;
  const Scalar den = (Scalar(1) - rr) * (Scalar(1) - rr) + Scalar(4) * rr * s_1 * s_1;
  return num / den;
}

/// Relative output intensity at (x, y) on the common focal plane.
template <typename Scalar>
Scalar output_intensity(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout, Scalar x_um,
                        Scalar y_um, Scalar lambda_nm) {
  using std::exp;
  using std::round;
  if (!(lambda_nm > 0)) throw ArgumentError("output_intensity: lambda must be > 0");
  if (!(vipa.rr() < 1)) throw ArgumentError("output_intensity: require R r < 1");
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar x = units::um(x_um);
  const Scalar y = units::um(y_um);
  const Scalar lam = units::nm(lambda_nm);
  const Scalar W = units::mm(layout.W_mm);
  const Scalar fx = units::mm(layout.f_x_mm);
  const Scalar fy = units::mm(layout.f_y_mm);
  const Scalar fin = units::mm(layout.f_in_mm);

  const Scalar env_y = exp(-Scalar(2) * W * W * pi * y * y / (lam * lam * fy * fy));
  const Scalar env_x = exp(-Scalar(2) * fin * fin * x * x / (fx * fx * W * W));

  // Reduce in cycles before multiplying by 2 pi; phi itself is ~1e5 rad.
  const Scalar cycles = detail::phase_cycles(vipa, layout, lambda_nm)(x);
  const Scalar frac = cycles - round(cycles);
  const auto n = virtual_source_count(vipa, layout);
  return env_y * env_x * interference_factor(vipa.rr(), n, Scalar(2) * pi * frac);
}

template <typename Scalar>
IntensityGrid<Scalar> intensity_grid(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout,
                                     Scalar lambda_nm, AxisRange x_range, AxisRange y_range,
                                     Scalar resolution_um) {
  if (!(resolution_um > 0)) throw ArgumentError("intensity_grid: resolution must be > 0");
  if (!(x_range.max_um > x_range.min_um)) throw ArgumentError("intensity_grid: degenerate x range");
  if (!(y_range.max_um >= y_range.min_um)) throw ArgumentError("intensity_grid: inverted y range");
  auto axis = [&](AxisRange a) {
    const auto n = static_cast<Eigen::Index>(std::floor((a.max_um - a.min_um) / double(resolution_um) + 1e-9)) + 1;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = Scalar(a.min_um) + Scalar(i) * resolution_um;
    return v;
  };
  IntensityGrid<Scalar> grid;
  grid.x_um = axis(x_range);
  grid.y_um = axis(y_range);
  grid.values.resize(grid.x_um.size(), grid.y_um.size());
  for (Eigen::Index j = 0; j < grid.y_um.size(); ++j)
    for (Eigen::Index i = 0; i < grid.x_um.size(); ++i)
      grid.values(i, j) = output_intensity(vipa, layout, grid.x_um(i), grid.y_um(j), lambda_nm);
  return grid;
}

/// y = 0 slice of the intensity on a uniform x axis.
template <typename Scalar>
IntensityGrid<Scalar> intensity_slice(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout,
                                      Scalar lambda_nm, AxisRange x_range, Scalar resolution_um) {
  return intensity_grid(vipa, layout, lambda_nm, x_range, AxisRange{0.0, 0.0}, resolution_um);
}

/// Free spectral range in GHz.
template <typename Scalar>
Scalar fsr(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout) {
  using std::cos;
  return Scalar(units::speed_of_light) /
         (Scalar(2) * vipa.n_r * units::mm(vipa.t_mm) * cos(external_angle(vipa, layout))) * Scalar(1e-9);
}

/// Transmission-peak FWHM in MHz.
template <typename Scalar>
Scalar fwhm_freq(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout) {
  using std::cos;
  using std::sqrt;
  const Scalar rr = vipa.rr();
  if (!(rr < 1)) throw ArgumentError("fwhm_freq: require R r < 1");
  return Scalar(units::speed_of_light) * (Scalar(1) - rr) /
         (Scalar(2) * std::numbers::pi_v<Scalar> * vipa.n_r * units::mm(vipa.t_mm) *
          cos(external_angle(vipa, layout)) * sqrt(rr)) *
         Scalar(1e-6);
}

template <typename Scalar>
Scalar finesse(const VipaSpec<Scalar>& vipa) {
  using std::sqrt;
  const Scalar rr = vipa.rr();
  return std::numbers::pi_v<Scalar> * sqrt(rr) / (Scalar(1) - rr);
}

/// Linear and quadratic parts of the wavelength shift (pm) at focal-plane position x.
template <typename Scalar>
struct DispersionTerms {
  Scalar linear_pm;
  Scalar quadratic_pm;
  Scalar total() const { return linear_pm + quadratic_pm; }
};

template <typename Scalar>
DispersionTerms<Scalar> dispersion_terms(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout,
                                         Scalar x_um) {
  using std::cos;
  using std::tan;
  const Scalar ti = layout.theta_in_rad;
  const Scalar ratio = units::um(x_um) / units::mm(layout.f_x_mm);
  const Scalar lam_pm = layout.lambda0_nm * Scalar(1e3);
  const Scalar lin = tan(ti) * cos(external_angle(vipa, layout)) / (vipa.n_r * cos(ti)) * ratio;
  const Scalar quad = ratio * ratio / (Scalar(2) * vipa.n_r * vipa.n_r);
  return {-lam_pm * lin, -lam_pm * quad};
}

/// Wavelength shift (pm) of the intensity maximum at x relative to lambda0. +x is bluer.
template <typename Scalar>
Scalar dispersion_shift(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout, Scalar x_um) {
  return dispersion_terms(vipa, layout, x_um).total();
}

/// Frequency shift (MHz) of the intensity maximum at x relative to lambda0.
template <typename Scalar>
Scalar frequency_shift(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout, Scalar x_um) {
  return units::pm_to_mhz(dispersion_shift(vipa, layout, x_um), layout.lambda0_nm);
}

/// Wavelength (nm) detuned from the layout's lambda0 by `detuning_mhz`.
template <typename Scalar>
Scalar detuned_wavelength(const OpticalLayout<Scalar>& layout, Scalar detuning_mhz) {
  return layout.lambda0_nm + units::mhz_to_pm(detuning_mhz, layout.lambda0_nm) * Scalar(1e-3);
}

/// Integer interference order closest to lambda0 on the optical axis.
template <typename Scalar>
std::int64_t resonance_order(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout) {
  using std::llround;
  return llround(detail::phase_cycles(vipa, layout, layout.lambda0_nm).c0);
}

/// Focal-plane position (um) where `lambda_nm` satisfies phi = 2 pi order, root nearest the axis.
template <typename Scalar>
Scalar resonance_position(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout, Scalar lambda_nm,
                          std::int64_t order) {
  using std::sqrt;
  const auto pc = detail::phase_cycles(vipa, layout, lambda_nm);
  // c2 x^2 + c1 x - d = 0 with d = c0 - order
  const Scalar d = pc.c0 - Scalar(order);
  const Scalar disc = pc.c1 * pc.c1 + Scalar(4) * pc.c2 * d;
  if (disc < 0) throw DegenerateProfileError("resonance_position: order not reachable on the focal plane");
  const Scalar root = sqrt(disc);
  const Scalar x_m = pc.c1 >= 0 ? Scalar(2) * d / (pc.c1 + root) : Scalar(2) * d / (pc.c1 - root);
  return x_m * Scalar(1e6);
}

/// Predicted intensity-peak position (um) for `lambda_nm`, in the order of lambda0's axial peak.
template <typename Scalar>
Scalar peak_position(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout, Scalar lambda_nm) {
  return resonance_position(vipa, layout, lambda_nm, resonance_order(vipa, layout));
}

/// Focal-plane distance (um) between adjacent interference orders near the axis.
template <typename Scalar>
Scalar spatial_period(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout) {
  using std::abs;
  const auto pc = detail::phase_cycles(vipa, layout, layout.lambda0_nm);
  return Scalar(1e6) / abs(pc.c1);
}

/// Full width at half maximum (um) of the y = 0 profile around a peak, by dense scan and
/// linear interpolation of the half-maximum crossings.
template <typename Scalar>
Scalar x_profile_fwhm(const VipaSpec<Scalar>& vipa, const OpticalLayout<Scalar>& layout, Scalar lambda_nm,
                      Scalar center_um, Scalar half_window_um, Scalar step_um) {
  const auto g = intensity_slice(vipa, layout, lambda_nm,
                                 AxisRange{double(center_um - half_window_um), double(center_um + half_window_um)},
                                 step_um);
  const auto col = g.values.col(0);
  Eigen::Index imax = 0;
  const Scalar vmax = col.maxCoeff(&imax);
  const Scalar half = vmax / Scalar(2);
  Eigen::Index lo = imax;
  while (lo > 0 && col(lo) > half) --lo;
  Eigen::Index hi = imax;
  while (hi + 1 < col.size() && col(hi) > half) ++hi;
  if (col(lo) > half || col(hi) > half)
    throw DegenerateProfileError("x_profile_fwhm: half maximum not reached inside the window");
  auto cross = [&](Eigen::Index a, Eigen::Index b) {
    return g.x_um(a) + (half - col(a)) / (col(b) - col(a)) * (g.x_um(b) - g.x_um(a));
  };
  return cross(hi - 1, hi) - cross(lo, lo + 1);
}

}  // namespace vipa
