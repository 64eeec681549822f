#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "vipa/analysis.hpp"

using namespace vipa;

namespace {

SimScenario current(std::uint64_t seed = 1) {
  SimScenario s;
  s.layout.theta_in_rad = units::deg_to_rad(0.7502403015083805);
  s.layout.f_in_mm = 400;
  s.layout.f_x_mm = 1109.9894213409846;
  s.array.pde = 0.5;
  s.seed = seed;
  return s;
}

SimScenario redesign(std::uint64_t seed = 1) {
  SimScenario s = current(seed);
  s.vipa.t_mm = 16.5;
  s.layout.theta_in_rad = units::deg_to_rad(0.2769396464581944);
  s.layout.f_in_mm = 498;
  s.layout.f_x_mm = 411.57481385758757;
  return s;
}

SpatialProfile synthetic(double center, double gamma, double amp, double offset, int first, int last) {
  SpatialProfile p;
  p.window = {200, 650};
  for (int e = first; e <= last; ++e) {
    p.elements.push_back(e);
    const double d = e - center;
    p.mean_counts_per_pulse.push_back(amp * gamma * gamma / (d * d + gamma * gamma) + offset);
  }
  return p;
}

// Expected profile of one mode: the element-binned density, as counts per pulse.
SpatialProfile expected_profile(const SimScenario& s, double detuning, double scale = 1.0) {
  const auto probs = element_probabilities(s, spatial_pdf(s, detuning));
  SpatialProfile p;
  p.window = {0, 1000};
  for (Eigen::Index e = 0; e < probs.size(); ++e) {
    p.elements.push_back(static_cast<int>(e));
    p.mean_counts_per_pulse.push_back(scale * probs(e));
  }
  return p;
}

double total(const std::vector<TimeHistogram>& hs) {
  double t = 0;
  for (const auto& h : hs) t += std::accumulate(h.counts_per_pulse.begin(), h.counts_per_pulse.end(), 0.0);
  return t;
}

}  // namespace

TEST_CASE("time histograms") {
  const SpadArraySpec a;
  const auto empty = build_time_histograms({}, 2550, a, 1000);
  REQUIRE(empty.size() == 192);
  CHECK(total(empty) == 0.0);
  CHECK(empty[7].bin_edges_ns.size() == 1001);
  CHECK(empty[7].counts_per_pulse.size() == 1000);

  const auto one = build_time_histograms({{0, 5, 300, EventOrigin::photon}}, 2550, a, 1000);
  CHECK(one[5].counts_per_pulse[300] == 1.0 / 2550);
  CHECK(total(one) == 1.0 / 2550);

  CHECK_THROWS_AS(build_time_histograms({{0, 192, 3, EventOrigin::photon}}, 10, a, 1000), MalformedInputError);
  CHECK_THROWS_AS(build_time_histograms({{0, 1, 1000, EventOrigin::photon}}, 10, a, 1000), MalformedInputError);
  CHECK_THROWS_AS(build_time_histograms({}, 0, a, 1000), ArgumentError);
}

TEST_CASE("counts are conserved through histograms and windows") {
  auto s = current(17);
  s.array.dcr_cps = 5e4;
  const auto ev = simulate(s, 0.0);
  const auto n = static_cast<double>(ev.size());
  const auto hs = build_time_histograms(ev, s.pulse.n_pulses, s.array, s.pulse.period_ns);
  CHECK(std::llround(total(hs) * 2550) == static_cast<long long>(ev.size()));
  CHECK(total(hs) == doctest::Approx(n / 2550).epsilon(1e-12));

  const auto whole = integrate_window(hs, {0, 1000});
  for (std::size_t e = 0; e < hs.size(); ++e) {
    const double sum = std::accumulate(hs[e].counts_per_pulse.begin(), hs[e].counts_per_pulse.end(), 0.0);
    CHECK(whole.mean_counts_per_pulse[e] == doctest::Approx(sum).epsilon(1e-12));
  }
  // Two adjacent windows add up to their union.
  const auto a = integrate_window(hs, {0, 400}), b = integrate_window(hs, {400, 1000});
  for (std::size_t e = 0; e < hs.size(); ++e)
    CHECK(a.mean_counts_per_pulse[e] + b.mean_counts_per_pulse[e] ==
          doctest::Approx(whole.mean_counts_per_pulse[e]).epsilon(1e-12));

  CHECK_THROWS_AS(integrate_window(hs, {650, 200}), ArgumentError);
  CHECK_THROWS_AS(integrate_window(hs, {0, 2000}), ArgumentError);

  const auto pulses = split_by_pulse(ev, s.pulse.n_pulses);
  std::size_t back = 0;
  for (const auto& p : pulses) back += p.size();
  CHECK(back == ev.size());
}

TEST_CASE("the 200-650 ns window brackets the pulse") {
  auto s = current(23);
  s.array.dcr_cps = 0;
  s.pulse.n_pulses = 20000;
  const auto ev = simulate(s, 0.0);
  const auto hs = build_time_histograms(ev, s.pulse.n_pulses, s.array, s.pulse.period_ns);
  const auto in = integrate_window(hs, {200, 650});
  const double captured = std::accumulate(in.mean_counts_per_pulse.begin(), in.mean_counts_per_pulse.end(), 0.0);
  CHECK(captured / total(hs) > 0.99);

  // Before the pulse only dark-level counts remain.
  auto d = current(23);
  d.pulse.n_pulses = 20000;
  const auto ev_d = simulate(d, 0.0);
  const auto hd = build_time_histograms(ev_d, d.pulse.n_pulses, d.array, d.pulse.period_ns);
  const auto early = integrate_window(hd, {0, 50});
  const double early_total = std::accumulate(early.mean_counts_per_pulse.begin(), early.mean_counts_per_pulse.end(), 0.0);
  const double dark_expected = 192 * 10.0 * 50e-9;  // per pulse
  CHECK(early_total < dark_expected + 5 * std::sqrt(dark_expected / 20000) + 1e-4);

  // Dark subtraction removes the flat floor.
  const auto sub = integrate_window_dark_subtracted(hd, {200, 650});
  const auto raw = integrate_window(hd, {200, 650});
  const double raw_far = raw.mean_counts_per_pulse[10], sub_far = sub.mean_counts_per_pulse[10];
  CHECK(sub_far <= raw_far);
  CHECK(std::abs(sub_far) < 1e-3);
}

TEST_CASE("Lorentzian fit recovers noiseless data") {
  const auto p = synthetic(103.0, 1.2, 0.05, 0.0, 95, 115);
  const auto f = fit_lorentzian(p);
  CHECK(f.converged);
  CHECK(f.center == doctest::Approx(103.0).epsilon(1e-6));
  CHECK(f.gamma == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(f.amplitude == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(std::abs(f.offset) < 1e-6 * 0.05);
  for (std::size_t i = 1; i < f.sse_history.size(); ++i) CHECK(f.sse_history[i] <= f.sse_history[i - 1]);

  for (auto [c, g, a, o] : {std::tuple{100.3, 0.8, 2.0, 0.1}, std::tuple{110.7, 3.5, 0.02, 0.001}}) {
    const auto q = fit_lorentzian(synthetic(c, g, a, o, 90, 125));
    CHECK(q.center == doctest::Approx(c).epsilon(1e-6));
    CHECK(q.gamma == doctest::Approx(g).epsilon(1e-6));
    CHECK(q.amplitude == doctest::Approx(a).epsilon(1e-6));
    CHECK(q.offset == doctest::Approx(o).epsilon(1e-6).scale(a));
  }

  auto sparse = synthetic(103.0, 1.2, 0.05, 0.0, 101, 104);
  CHECK_THROWS_AS(fit_lorentzian(sparse), InsufficientDataError);
}

TEST_CASE("Lorentzian fit under Gaussian noise stays within 3 standard errors") {
  std::mt19937_64 rng(2024);
  const double amp = 0.05, sigma = 0.01 * amp;
  std::normal_distribution<double> noise(0.0, sigma);
  int outside = 0, checks = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto p = synthetic(103.0, 1.2, amp, 0.002, 85, 121);
    for (double& v : p.mean_counts_per_pulse) v += noise(rng);
    const auto f = fit_lorentzian(p);
    REQUIRE(f.converged);
    const std::array<double, 4> truth{103.0, 1.2, amp, 0.002};
    const std::array<double, 4> est{f.center, f.gamma, f.amplitude, f.offset};
    for (int k = 0; k < 4; ++k) {
      ++checks;
      if (std::abs(est[k] - truth[k]) > 3 * f.stderr_[k]) ++outside;
    }
  }
  // 0.27% expected per check; allow a handful.
  CHECK(outside <= 4);
  CHECK(checks == 400);
}

TEST_CASE("fit center matches the simulated spatial density") {
  const auto s = current(31);
  const auto probs = element_probabilities(s, spatial_pdf(s, 0.0));
  Eigen::Index mode;
  probs.maxCoeff(&mode);
  const auto ev = simulate(s, 0.0);
  const auto hs = build_time_histograms(ev, s.pulse.n_pulses, s.array, s.pulse.period_ns);
  const auto f = fit_lorentzian(integrate_window(hs, {200, 650}));
  CHECK(std::abs(f.center - static_cast<double>(mode)) <= 0.5 + 1e-9);
}

TEST_CASE("shift estimates") {
  const auto p = synthetic(103.0, 1.2, 0.05, 0.001, 80, 130);
  const auto f = fit_lorentzian(p);
  const auto same = estimate_shifts({f, f, f}, {0, 120, 240});
  for (const auto& s : same) {
    CHECK(s.shift_elements == 0.0);
    CHECK(!s.flagged);
  }

  // Translation equivariance: whole-element shifts move every center by exactly that much.
  for (int k : {1, 3, -2}) {
    auto q = p;
    for (int& e : q.elements) e += k;
    CHECK(fit_lorentzian(q).center - f.center == doctest::Approx(k).epsilon(1e-9));
  }

  auto bad = f;
  bad.converged = false;
  const auto flagged = estimate_shifts({f, bad}, {0, 120});
  CHECK(flagged[1].flagged);
  CHECK(std::isinf(flagged[1].stderr_elements));
  CHECK_THROWS_AS(estimate_shifts({f}, {0}), ArgumentError);
  CHECK_THROWS_AS(estimate_shifts({f, f}, {60, 120}), ArgumentError);
}

TEST_CASE("2550-pulse shifts carry honest standard errors") {
  // Spread of the 120 MHz shift over seeds against the reported standard error.
  std::vector<double> shifts, errors;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto runs = run_experiment(current(seed));
    std::vector<LorentzianFit> fits;
    for (const auto& [d, ev] : runs)
      fits.push_back(fit_lorentzian(integrate_window(build_time_histograms(ev, 2550, current().array, 1000), {200, 650})));
    const auto est = estimate_shifts(fits, {0, 120, 240});
    shifts.push_back(est[1].shift_elements);
    errors.push_back(est[1].stderr_elements);
  }
  const double mean = std::accumulate(shifts.begin(), shifts.end(), 0.0) / 20;
  double var = 0;
  for (double v : shifts) var += (v - mean) * (v - mean);
  const double spread = std::sqrt(var / 19);
  const double typical = std::accumulate(errors.begin(), errors.end(), 0.0) / 20;
  MESSAGE("shift mean " << mean << ", spread " << spread << ", mean reported error " << typical);
  CHECK(mean == doctest::Approx(1.0).epsilon(0.4));
  CHECK(typical > 0.7 * spread);
}

TEST_CASE("mode classification") {
  const auto s = current();
  std::vector<SpatialProfile> templates;
  for (double d : {0.0, 120.0, 240.0}) templates.push_back(expected_profile(s, d));
  const std::vector<double> dets{0, 120, 240};

  CHECK(!classify_mode({}, templates, dets));

  for (std::size_t k = 0; k < 3; ++k) {
    const auto& v = templates[k].mean_counts_per_pulse;
    const int peak = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    const auto d = classify_mode({{0, peak, 400, EventOrigin::photon}}, templates, dets);
    REQUIRE(d);
    CHECK(d->assigned_index == k);
    CHECK(d->assigned_detuning_mhz == dets[k]);
    CHECK(std::accumulate(d->per_mode_likelihoods.begin(), d->per_mode_likelihoods.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  const std::vector<SpatialProfile> same(3, templates[0]);
  const auto u = classify_mode({{0, 103, 400, EventOrigin::photon}, {0, 104, 410, EventOrigin::photon}}, same, dets);
  REQUIRE(u);
  for (double p : u->per_mode_likelihoods) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(u->assigned_index == 0);
}

namespace {

struct Calibration {
  double accuracy;
  double confidence;
  int trials;
};

Calibration classify_all(SimScenario s) {
  s.array.dcr_cps = 0;
  s.pulse.n_pulses = 15000;
  const std::vector<double> dets{0, 120, 240};
  std::vector<SpatialProfile> templates;
  for (double d : dets) templates.push_back(expected_profile(s, d));
  const auto runs = run_experiment(s);
  int trials = 0, correct = 0;
  double conf = 0;
  for (std::size_t k = 0; k < dets.size(); ++k) {
    for (const auto& pulse : split_by_pulse(runs.at(dets[k]), s.pulse.n_pulses)) {
      const auto d = classify_mode(pulse, templates, dets);
      if (!d) continue;
      ++trials;
      correct += d->assigned_index == k;
      conf += d->confidence;
    }
  }
  return {static_cast<double>(correct) / trials, conf / trials, trials};
}

}  // namespace

TEST_CASE("classifier is calibrated and benefits from the redesign") {
  const auto cur = classify_all(current(77));
  const auto re = classify_all(redesign(77));
  MESSAGE("current accuracy " << cur.accuracy << " confidence " << cur.confidence << " over " << cur.trials);
  MESSAGE("redesign accuracy " << re.accuracy << " confidence " << re.confidence << " over " << re.trials);
  CHECK(cur.trials >= 10000);
  CHECK(std::abs(cur.accuracy - cur.confidence) < 0.05);
  CHECK(std::abs(re.accuracy - re.confidence) < 0.05);
  CHECK(re.accuracy > cur.accuracy);
}

TEST_CASE("crosstalk metric") {
  const auto s = current();
  const auto p0 = expected_profile(s, 0.0);
  CHECK(crosstalk_metric(p0, p0) == 0.0);

  SpatialProfile a, b;
  a.elements = b.elements = {0, 1, 2, 3};
  a.mean_counts_per_pulse = {0, 1, 0, 0};
  b.mean_counts_per_pulse = {0, 0, 0, 1};
  CHECK(crosstalk_metric(a, b) == kCrosstalkFloorDb);
  b.mean_counts_per_pulse = {0, 0, 0, 0};
  CHECK_THROWS_AS(crosstalk_metric(a, b), UndefinedMetricError);

  const double x120 = crosstalk_metric(p0, expected_profile(s, 120.0));
  const double x300 = crosstalk_metric(p0, expected_profile(s, 300.0));
  MESSAGE("crosstalk at 120 MHz " << x120 << " dB, at 300 MHz " << x300 << " dB");
  CHECK(x120 > -3.0);
  CHECK(x300 < -3.0);
}
