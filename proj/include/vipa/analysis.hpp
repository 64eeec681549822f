#pragma once

// Reductions of detection-event streams: per-element time histograms, windowed
// spatial profiles, Lorentzian fits, shift estimates and single-shot mode decisions.

#include <Eigen/Core>

#include <array>
#include <optional>
#include <vector>

#include "vipa/spad_sim.hpp"

namespace vipa {

struct TimeHistogram {
  int element{0};
  std::vector<std::int64_t> bin_edges_ns;  // size = counts + 1
  std::vector<double> counts_per_pulse;
};

struct TimeWindow {
  double lo_ns;
  double hi_ns;
};

struct SpatialProfile {
  std::vector<int> elements;
  std::vector<double> mean_counts_per_pulse;
  TimeWindow window{0, 0};
};

enum class FitWeighting { uniform, poisson };

/// f(e) = amplitude gamma^2 / ((e - center)^2 + gamma^2) + offset, all in element units.
struct LorentzianFit {
  double center{0};
  double gamma{1};
  double amplitude{0};
  double offset{0};
  double sse{0};
  bool converged{false};
  int iterations{0};
  // Asymptotic standard errors in the order (center, gamma, amplitude, offset).
  std::array<double, 4> stderr_{};
  std::vector<double> sse_history;

  double operator()(double e) const { return amplitude * gamma * gamma / ((e - center) * (e - center) + gamma * gamma) + offset; }
};

struct ShiftEstimate {
  double detuning_mhz;
  double shift_elements;
  double stderr_elements;
  bool flagged;  // some fit did not converge
};

struct ModeDecision {
  std::size_t assigned_index;
  double assigned_detuning_mhz;
  double confidence;
  std::vector<double> per_mode_likelihoods;  // posterior under a uniform prior, sums to 1
};

/// Per-element histograms at the array's time resolution over [0, record_ns), counts
/// divided by `n_pulses`.
std::vector<TimeHistogram> build_time_histograms(const EventList& events, std::int64_t n_pulses,
                                                 const SpadArraySpec& array, std::int64_t record_ns);

/// Per-element sum over bins whose start lies in [lo, hi).
SpatialProfile integrate_window(const std::vector<TimeHistogram>& histograms, TimeWindow window);

/// Like integrate_window, minus each element's dark floor estimated from bins outside the window.
SpatialProfile integrate_window_dark_subtracted(const std::vector<TimeHistogram>& histograms, TimeWindow window);

struct FitOptions {
  FitWeighting weighting{FitWeighting::uniform};
  int max_iterations{500};
  double relative_tolerance{1e-10};
};

LorentzianFit fit_lorentzian(const SpatialProfile& profile, const FitOptions& options = {});

/// Shifts of each fit center relative to the fit at detuning 0.
std::vector<ShiftEstimate> estimate_shifts(const std::vector<LorentzianFit>& fits, const std::vector<double>& detunings_mhz);

/// Maximum-likelihood mode for the events of one pulse under independent Poisson counts with
/// template-proportional rates. Returns nullopt when the pulse has no events.
std::optional<ModeDecision> classify_mode(const EventList& single_shot, const std::vector<SpatialProfile>& templates,
                                          const std::vector<double>& template_detunings_mhz);

inline constexpr double kCrosstalkFloorDb = -300.0;

/// 10 log10 of b's counts at a's peak element over b's counts at its own peak.
double crosstalk_metric(const SpatialProfile& a, const SpatialProfile& b);

/// Splits an event list by pulse index into `n_pulses` lists.
std::vector<EventList> split_by_pulse(const EventList& events, std::int64_t n_pulses);

}  // namespace vipa
