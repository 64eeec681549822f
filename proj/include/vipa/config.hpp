#pragma once

// Run configuration: a sectioned key = value text file. Sections mirror the
// domain types; absent sections fall back to the reference (current-setup)
// values, except the detector PDE which must be given whenever [array] is used.
//
//   [run]       output_dir, seed
//   [vipa]      R, r, n_r, t_mm, L_mm
//   [layout]    lambda0_nm, W_mm, theta_in_deg, f_in_mm, f_x_mm, f_y_mm
//   [goal]      lambda0_nm, delta_nu_mhz, pitch_um, fwhm_target_mhz, W_mm, y_element_um,
//               theta_min_deg, theta_max_deg, theta_nominal_deg, f_in_candidate_mm
//   [array]     n_elements, element_pitch_um, pixels_per_element, dcr_cps, pde,
//               time_resolution_ns, dead_time_ns
//   [pulse]     fwhm_ns, mean_photons, n_pulses, period_ns, center_time_ns
//   [scenario]  detunings_mhz (comma list), alignment_offset_um, axis_element, eta_chain
//   [profile]   detunings_mhz, x_half_window_um, y_half_window_um, step_um
//   [analysis]  window_lo_ns, window_hi_ns, weighting (uniform|poisson), dark_subtract
//   [herald]    p, eta_det, alpha_db_km, L_km, m_first, m_last
//   [herald:NAME]  p, eta_vipa, eta_det, eta_wc   (one section per multiplexed scenario)

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vipa/analysis.hpp"
#include "vipa/design.hpp"
#include "vipa/herald.hpp"
#include "vipa/spad_sim.hpp"

namespace vipa {

struct ProfileSettings {
  std::vector<double> detunings_mhz{0.0, 120.0, 240.0};
  double x_half_window_um{300.0};
  double y_half_window_um{0.0};  // 0 gives a y = 0 slice
  double step_um{0.5};
};

struct AnalysisSettings {
  TimeWindow window{200.0, 650.0};
  FitWeighting weighting{FitWeighting::uniform};
  bool dark_subtract{false};
};

struct HeraldSettings {
  LinkParams baseline = reference_baseline();
  std::vector<HeraldScenario> scenarios = reference_scenarios();
  std::int64_t m_first{1};
  std::int64_t m_last{250};
};

struct RunConfig {
  std::filesystem::path output_dir{"spectro_out"};
  std::uint64_t seed{1};
  Vipa vipa;
  Layout layout;
  DesignGoal goal;
  SpadArraySpec array;
  bool pde_given{false};
  PulseSpec pulse;
  SimScenario scenario;  // vipa/layout/array/pulse/seed copied in by scenario_view()
  ProfileSettings profile;
  AnalysisSettings analysis;
  HeraldSettings herald;

  /// The simulation scenario with every section merged in.
  SimScenario scenario_view() const;
};

/// Parses a configuration file. Throws ConfigError on syntax errors, unknown sections or keys,
/// and unparsable values. Semantic validation happens in the validate_for_* functions.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);

void validate_for_design(const RunConfig& cfg);
void validate_for_profile(const RunConfig& cfg);
void validate_for_simulate(const RunConfig& cfg);
void validate_for_analyze(const RunConfig& cfg);
void validate_for_herald(const RunConfig& cfg);

}  // namespace vipa
