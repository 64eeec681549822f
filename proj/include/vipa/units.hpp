#pragma once

#include <numbers>

// Unit conventions at every module boundary:
//   lengths of optics/etalon   mm
//   focal-plane positions      um
//   wavelengths                nm (shifts in pm)
//   frequencies                MHz (FSR in GHz)
//   times                      ns
namespace vipa::units {

inline constexpr double speed_of_light = 299'792'458.0;  // m/s, exact

template <typename Scalar> constexpr Scalar mm(Scalar v) { return v * Scalar(1e-3); }
template <typename Scalar> constexpr Scalar um(Scalar v) { return v * Scalar(1e-6); }
template <typename Scalar> constexpr Scalar nm(Scalar v) { return v * Scalar(1e-9); }

template <typename Scalar> constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}
template <typename Scalar> constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

/// First-order wavelength-shift to frequency-shift conversion, dnu = -c dlambda / lambda0^2.
template <typename Scalar>
constexpr Scalar pm_to_mhz(Scalar shift_pm, Scalar lambda0_nm) {
  const Scalar lam = lambda0_nm * Scalar(1e-9);
  return -Scalar(speed_of_light) * (shift_pm * Scalar(1e-12)) / (lam * lam) * Scalar(1e-6);
}

template <typename Scalar>
constexpr Scalar mhz_to_pm(Scalar shift_mhz, Scalar lambda0_nm) {
  const Scalar lam = lambda0_nm * Scalar(1e-9);
  return -(shift_mhz * Scalar(1e6)) * lam * lam / Scalar(speed_of_light) * Scalar(1e12);
}

}  // namespace vipa::units
