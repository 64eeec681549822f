#include "vipa/herald.hpp"

#include <cmath>
#include <sstream>

#include "vipa/error.hpp"

namespace vipa {
namespace {

bool unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

double p_multi_of(double q, std::int64_t m) { return -std::expm1(static_cast<double>(m) * std::log1p(-q)); }

}  // namespace

void LinkParams::validate() const {
  if (!unit_interval(p) || !unit_interval(eta_det) || !unit_interval(eta_vipa) || !unit_interval(eta_wc))
    throw ArgumentError("LinkParams: probabilities and efficiencies must lie in [0, 1]");
  if (!(alpha_db_km >= 0)) throw ArgumentError("LinkParams: alpha must be >= 0");
  if (!(L_link_km >= 0)) throw ArgumentError("LinkParams: link length must be >= 0");
  if (M < 1) throw ArgumentError("LinkParams: M must be >= 1");
}

double LinkParams::half_link_transmission() const { return std::pow(10.0, -(alpha_db_km * L_link_km / 2.0) / 10.0); }

double p_single(const LinkParams& params) {
  params.validate();
  const double v = 2.0 * params.p * params.eta_det * params.half_link_transmission();
  if (v > 1.0) throw InvalidRegimeError("p_single: 2 p eta_det T exceeds 1");
  return v;
}

double per_mode_probability(const LinkParams& params) {
  params.validate();
  const double q =
      2.0 * params.p * params.eta_vipa * params.eta_det * params.eta_wc * params.half_link_transmission();
  if (!unit_interval(q)) throw InvalidRegimeError("per-mode success probability outside [0, 1]");
  return q;
}

double p_multi(const LinkParams& params) {
  const double q = per_mode_probability(params);
  if (q == 1.0) return 1.0;
  return p_multi_of(q, params.M);
}

std::int64_t crossover_modes(const LinkParams& params_single, const LinkParams& params_multi) {
  const double ps = p_single(params_single);
  const double q = per_mode_probability(params_multi);
  if (q <= 0.0) throw InvalidRegimeError("crossover_modes: per-mode probability is zero, never crosses");
  if (q > ps || q == 1.0) return 1;
  if (ps >= 1.0) throw InvalidRegimeError("crossover_modes: single-mode probability is 1, never exceeded");

  // ln(1 - P_s) / ln(1 - q), then settle the integer by direct evaluation.
  auto m = static_cast<std::int64_t>(std::ceil(std::log1p(-ps) / std::log1p(-q)));
  m = std::max<std::int64_t>(m, 1);
  while (m > 1 && p_multi_of(q, m - 1) > ps) --m;
  while (!(p_multi_of(q, m) > ps)) ++m;
  return m;
}

double heralding_rate(double probability, double trial_time) {
  if (!(trial_time > 0)) throw ArgumentError("heralding_rate: trial time must be > 0");
  return probability / trial_time;
}

std::vector<SweepRow> sweep(const LinkParams& baseline, const std::vector<HeraldScenario>& scenarios,
                            std::int64_t m_first, std::int64_t m_last) {
  if (m_first < 1 || m_last < m_first) throw ArgumentError("sweep: M range must be nonempty and start at >= 1");
  const double ps = p_single(baseline);
  std::vector<SweepRow> rows;
  rows.reserve(static_cast<std::size_t>(m_last - m_first + 1));
  for (std::int64_t m = m_first; m <= m_last; ++m) {
    SweepRow row{m, ps, {}};
    for (const auto& s : scenarios) {
      LinkParams lp = s.params;
      lp.M = m;
      row.p_multi.push_back(p_multi(lp));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

LinkParams reference_baseline() {
  LinkParams lp;
  lp.p = 0.01;
  lp.eta_det = 0.9;
  lp.alpha_db_km = 0.2;
  lp.L_link_km = 100.0;
  return lp;
}

std::vector<HeraldScenario> reference_scenarios() {
  std::vector<HeraldScenario> out;
  for (auto [name, eta] : {std::pair{"s2", 0.008}, std::pair{"s3", 0.09}, std::pair{"s4", 0.35}}) {
    LinkParams lp = reference_baseline();
    // eta_vipa * eta_det is quoted as one product; carried in eta_det.
    lp.eta_vipa = 1.0;
    lp.eta_det = eta;
    lp.eta_wc = 0.6;
    out.push_back({name, lp});
  }
  return out;
}

}  // namespace vipa
