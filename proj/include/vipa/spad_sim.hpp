#pragma once

// Seeded Monte Carlo of weak coherent pulses detected by a single SPAD row.

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <vector>

#include "vipa/design.hpp"

namespace vipa {

struct SpadArraySpec {
  int n_elements{192};
  double element_pitch_um{30.24};  // 3 x 10.08 um pixels
  int pixels_per_element{9};
  double dcr_cps{10.0};  // dark counts per element per second
  double pde{0.5};
  std::int64_t time_resolution_ns{1};
  std::int64_t dead_time_ns{0};  // 0 disables dead time

  void validate() const;
};

struct PulseSpec {
  double fwhm_ns{180.0};
  double mean_photons{1.0};
  std::int64_t n_pulses{2550};
  std::int64_t period_ns{1000};  // record length per pulse
  double center_time_ns{400.0};

  void validate() const;
};

enum class EventOrigin : std::uint8_t { photon, dark };

struct DetectionEvent {
  std::int64_t pulse_index;
  int element;
  std::int64_t time_tag_ns;
  EventOrigin origin;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

using EventList = std::vector<DetectionEvent>;

struct SimScenario {
  Vipa vipa;
  Layout layout;
  SpadArraySpec array;
  PulseSpec pulse;
  std::vector<double> detunings_mhz{0.0, 120.0, 240.0};
  double alignment_offset_um{0.0};
  double axis_element{103.0};  // element whose center the optical axis (x = 0) hits
  double eta_chain{0.69};
  std::uint64_t seed{1};

  void validate() const;
};

/// Normalized focal-plane density (per um) on a uniform x grid.
struct SpatialPdf {
  Eigen::VectorXd x_um;
  Eigen::VectorXd density;
  Eigen::VectorXd cdf;  // trapezoidal cumulative, cdf(last) == 1
  double step_um{0};

  /// Inverse-CDF sample for u in [0, 1), linear within each trapezoid cell.
  double sample(double u) const;
  /// Sample position of the density maximum.
  double mode() const;
};

inline constexpr Eigen::Index kPdfSamples = 4097;
inline constexpr double kPdfHalfWindowPitches = 6.0;

SpatialPdf spatial_pdf(const SimScenario& scenario, double detuning_mhz);

/// Detector coordinate (um from the array's left edge) of focal-plane position x.
double detector_coordinate(const SimScenario& scenario, double x_um);

/// Element index for a detector coordinate, or -1 when off the array. An exact boundary
/// belongs to the lower element.
int element_of(const SpadArraySpec& array, double detector_um);

/// Probability mass of `pdf` per element, after the alignment mapping. Mass falling off the
/// array is dropped, so the sum can be < 1.
Eigen::VectorXd element_probabilities(const SimScenario& scenario, const SpatialPdf& pdf);

/// Simulates every pulse for one detuning. `workers` = 0 picks the hardware concurrency;
/// the output does not depend on it.
EventList simulate(const SimScenario& scenario, double detuning_mhz, unsigned workers = 0);

/// Stream seed for the detuning at `index` in the sorted detuning list.
std::uint64_t detuning_seed(std::uint64_t seed, std::size_t index);

/// One `simulate` call per distinct detuning, with decorrelated sub-seeds.
std::map<double, EventList> run_experiment(const SimScenario& scenario, unsigned workers = 0);

}  // namespace vipa
