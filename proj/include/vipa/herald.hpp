#pragma once

// Heralding probabilities of single-photon-interference entanglement generation,
// single-mode versus frequency-multiplexed.

#include <cstdint>
#include <string>
#include <vector>

namespace vipa {

struct LinkParams {
  double p{0.01};            // photon generation probability per mode
  double eta_det{0.9};       // detector efficiency
  double eta_vipa{1.0};      // spectrometer efficiency
  double eta_wc{1.0};        // wavelength-conversion efficiency
  double alpha_db_km{0.2};   // fiber loss
  double L_link_km{100.0};   // elementary link length
  std::int64_t M{1};         // frequency modes

  void validate() const;
  /// Transmission over half the link, 10^(-(alpha L / 2) / 10).
  double half_link_transmission() const;
};

/// 2 p eta_det T.
double p_single(const LinkParams& params);

/// Per-mode success probability 2 p eta_vipa eta_det eta_wc T.
double per_mode_probability(const LinkParams& params);

/// 1 - (1 - q)^M, evaluated without cancellation for small q.
double p_multi(const LinkParams& params);

/// Smallest M with p_multi(M) > p_single(params_single).
std::int64_t crossover_modes(const LinkParams& params_single, const LinkParams& params_multi);

/// Heralding rate for a communication trial time tau (same time unit as the result's inverse).
double heralding_rate(double probability, double trial_time);

struct HeraldScenario {
  std::string name;
  LinkParams params;
};

struct SweepRow {
  std::int64_t M;
  double p_single;
  std::vector<double> p_multi;  // one per scenario
};

std::vector<SweepRow> sweep(const LinkParams& baseline, const std::vector<HeraldScenario>& scenarios,
                            std::int64_t m_first, std::int64_t m_last);

/// Baseline and the three multiplexed scenarios of the 606 nm / 100 km link study.
LinkParams reference_baseline();
std::vector<HeraldScenario> reference_scenarios();

}  // namespace vipa
