#include "vipa/spad_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <thread>
#include <tuple>

namespace vipa {
namespace {

// 2 sqrt(2 ln 2)
const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::log(2.0));

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 pulse_engine(std::uint64_t seed, std::int64_t pulse_index) {
  const auto p = static_cast<std::uint64_t>(pulse_index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32)};
  return std::mt19937_64(seq);
}

struct PulseContext {
  const SimScenario& scenario;
  const SpatialPdf& pdf;
  double photon_mean;
  double dark_mean;
  double sigma_ns;
};

std::int64_t quantize(double t_ns, std::int64_t resolution_ns) {
  return static_cast<std::int64_t>(std::floor(t_ns / static_cast<double>(resolution_ns))) * resolution_ns;
}

EventList simulate_pulse(const PulseContext& ctx, std::int64_t pulse_index) {
  const auto& sc = ctx.scenario;
  const auto period = static_cast<double>(sc.pulse.period_ns);
  auto rng = pulse_engine(sc.seed, pulse_index);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  EventList events;

  if (ctx.photon_mean > 0) {
    const int photons = std::poisson_distribution<int>(ctx.photon_mean)(rng);
    std::normal_distribution<double> arrival(sc.pulse.center_time_ns, ctx.sigma_ns);
    for (int i = 0; i < photons; ++i) {
      const double x = ctx.pdf.sample(uniform(rng));
      double t = arrival(rng);
      while (t < 0.0 || t >= period) t = arrival(rng);
      const int element = element_of(sc.array, detector_coordinate(sc, x));
      if (element < 0) continue;
      events.push_back({pulse_index, element, quantize(t, sc.array.time_resolution_ns), EventOrigin::photon});
    }
  }

  if (ctx.dark_mean > 0) {
    // Superposition of independent per-element Poisson processes.
    const int darks = std::poisson_distribution<int>(ctx.dark_mean)(rng);
    std::uniform_int_distribution<int> which(0, sc.array.n_elements - 1);
    for (int i = 0; i < darks; ++i) {
      const int element = which(rng);
      const double t = uniform(rng) * period;
      events.push_back({pulse_index, element, quantize(t, sc.array.time_resolution_ns), EventOrigin::dark});
    }
  }

  if (sc.array.dead_time_ns > 0 && events.size() > 1) {
    std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
      return std::tie(a.element, a.time_tag_ns, a.origin) < std::tie(b.element, b.time_tag_ns, b.origin);
    });
    EventList kept;
    for (const auto& ev : events) {
      if (!kept.empty() && kept.back().element == ev.element &&
          ev.time_tag_ns - kept.back().time_tag_ns < sc.array.dead_time_ns)
        continue;
      kept.push_back(ev);
    }
    events = std::move(kept);
  }

  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.time_tag_ns, a.element, a.origin) < std::tie(b.time_tag_ns, b.element, b.origin);
  });
  return events;
}

}  // namespace

void SpadArraySpec::validate() const {
  if (n_elements < 1) throw ArgumentError("SpadArraySpec: n_elements must be >= 1");
  if (!(element_pitch_um > 0)) throw ArgumentError("SpadArraySpec: element_pitch must be > 0");
  if (!(pde > 0 && pde <= 1)) throw ArgumentError("SpadArraySpec: pde must lie in (0, 1]");
  if (!(dcr_cps >= 0)) throw ArgumentError("SpadArraySpec: dcr must be >= 0");
  if (time_resolution_ns < 1) throw ArgumentError("SpadArraySpec: time_resolution must be >= 1 ns");
  if (dead_time_ns < 0) throw ArgumentError("SpadArraySpec: dead_time must be >= 0");
}

void PulseSpec::validate() const {
  if (!(fwhm_ns > 0)) throw ArgumentError("PulseSpec: fwhm must be > 0");
  if (!(mean_photons >= 0)) throw ArgumentError("PulseSpec: mean_photons must be >= 0");
  if (n_pulses < 0) throw ArgumentError("PulseSpec: n_pulses must be >= 0");
  if (period_ns < 1) throw ArgumentError("PulseSpec: period must be >= 1 ns");
  if (!(center_time_ns > 0 && center_time_ns < static_cast<double>(period_ns)))
    throw ArgumentError("PulseSpec: center_time must lie in (0, period)");
}

void SimScenario::validate() const {
  vipa.validate();
  layout.validate();
  array.validate();
  pulse.validate();
  if (!(eta_chain > 0 && eta_chain <= 1)) throw ArgumentError("SimScenario: eta_chain must lie in (0, 1]");
  for (double d : detunings_mhz)
    if (!std::isfinite(d)) throw ArgumentError("SimScenario: detunings must be finite");
  if (!std::isfinite(alignment_offset_um) || !std::isfinite(axis_element))
    throw ArgumentError("SimScenario: alignment values must be finite");
}

double SpatialPdf::sample(double u) const {
  const auto n = cdf.size();
  const auto it = std::upper_bound(cdf.data(), cdf.data() + n, u);
  const Eigen::Index i = std::clamp<Eigen::Index>((it - cdf.data()) - 1, 0, n - 2);
  const double need = u - cdf(i);
  const double d0 = density(i);
  const double slope = (density(i + 1) - d0) / step_um;
  // Solve d0 s + slope s^2 / 2 = need on [0, step].
  double s;
  if (std::abs(slope) * step_um < 1e-12 * std::max(d0, 1e-300)) {
    s = d0 > 0 ? need / d0 : 0.0;
  } else {
    const double disc = std::max(d0 * d0 + 2.0 * slope * need, 0.0);
    s = 2.0 * need / (d0 + std::sqrt(disc));
  }
  return x_um(i) + std::clamp(s, 0.0, step_um);
}

double SpatialPdf::mode() const {
  Eigen::Index i = 0;
  density.maxCoeff(&i);
  return x_um(i);
}

SpatialPdf spatial_pdf(const SimScenario& scenario, double detuning_mhz) {
  const double lambda = detuned_wavelength(scenario.layout, detuning_mhz);
  const double center = peak_position(scenario.vipa, scenario.layout, lambda);
  const double half = kPdfHalfWindowPitches * scenario.array.element_pitch_um;
  const double step = 2.0 * half / static_cast<double>(kPdfSamples - 1);

  SpatialPdf pdf;
  pdf.step_um = step;
  pdf.x_um = Eigen::VectorXd::LinSpaced(kPdfSamples, center - half, center + half);
  pdf.density.resize(kPdfSamples);
  for (Eigen::Index i = 0; i < kPdfSamples; ++i)
    pdf.density(i) = output_intensity(scenario.vipa, scenario.layout, pdf.x_um(i), 0.0, lambda);

  pdf.cdf.resize(kPdfSamples);
  pdf.cdf(0) = 0.0;
  for (Eigen::Index i = 1; i < kPdfSamples; ++i)
    pdf.cdf(i) = pdf.cdf(i - 1) + 0.5 * (pdf.density(i - 1) + pdf.density(i)) * step;
  const double total = pdf.cdf(kPdfSamples - 1);
  if (!(total > 1e-300) || !std::isfinite(total))
    throw DegenerateProfileError("spatial_pdf: total intensity in the sampling window vanishes");
  pdf.density /= total;
  pdf.cdf /= total;
  return pdf;
}

double detector_coordinate(const SimScenario& scenario, double x_um) {
  return x_um + (scenario.axis_element + 0.5) * scenario.array.element_pitch_um + scenario.alignment_offset_um;
}

int element_of(const SpadArraySpec& array, double detector_um) {
  if (!(detector_um > 0)) return -1;
  const double e = std::ceil(detector_um / array.element_pitch_um) - 1.0;
  if (e >= static_cast<double>(array.n_elements)) return -1;
  return static_cast<int>(e);
}

Eigen::VectorXd element_probabilities(const SimScenario& scenario, const SpatialPdf& pdf) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(scenario.array.n_elements);
  const double pitch = scenario.array.element_pitch_um;
  // Exact mass of each trapezoid cell, split at element boundaries.
  auto cell_mass = [&](Eigen::Index i, double a, double b) {
    // integral over [a, b] within cell i of the linear density
    const double x0 = pdf.x_um(i);
    const double d0 = pdf.density(i);
    const double slope = (pdf.density(i + 1) - d0) / pdf.step_um;
    auto prim = [&](double s) { return d0 * s + 0.5 * slope * s * s; };
    return prim(b - x0) - prim(a - x0);
  };
  for (Eigen::Index i = 0; i + 1 < pdf.x_um.size(); ++i) {
    double a = pdf.x_um(i);
    const double b = pdf.x_um(i + 1);
    while (a < b) {
      const double u = detector_coordinate(scenario, a);
      // upper boundary of the element containing u (right-open at a)
      const double next_boundary_u = (std::floor(u / pitch) + 1.0) * pitch;
      const double cut = std::min(b, a + (next_boundary_u - u));
      const double mid_u = detector_coordinate(scenario, 0.5 * (a + cut));
      const int e = element_of(scenario.array, mid_u);
      if (e >= 0) p(e) += cell_mass(i, a, cut);
      if (cut <= a) break;
      a = cut;
    }
  }
  return p;
}

EventList simulate(const SimScenario& scenario, double detuning_mhz, unsigned workers) {
  scenario.validate();
  const auto n_pulses = scenario.pulse.n_pulses;
  const double photon_mean = scenario.pulse.mean_photons * scenario.eta_chain * scenario.array.pde;
  const double dark_mean = static_cast<double>(scenario.array.n_elements) * scenario.array.dcr_cps *
                           static_cast<double>(scenario.pulse.period_ns) * 1e-9;
  if (n_pulses == 0 || (photon_mean <= 0 && dark_mean <= 0)) return {};

  const SpatialPdf pdf = photon_mean > 0 ? spatial_pdf(scenario, detuning_mhz) : SpatialPdf{};
  const PulseContext ctx{scenario, pdf, photon_mean, dark_mean, scenario.pulse.fwhm_ns / kFwhmPerSigma};

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, n_pulses));

  std::vector<EventList> per_pulse(static_cast<std::size_t>(n_pulses));
  auto run_range = [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t p = begin; p < end; ++p) per_pulse[static_cast<std::size_t>(p)] = simulate_pulse(ctx, p);
  };
  if (workers <= 1) {
    run_range(0, n_pulses);
  } else {
    std::vector<std::jthread> pool;
    const std::int64_t chunk = (n_pulses + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::int64_t begin = w * chunk;
      const std::int64_t end = std::min(n_pulses, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
  }

  std::size_t total = 0;
  for (const auto& v : per_pulse) total += v.size();
  EventList events;
  events.reserve(total);
  for (auto& v : per_pulse) events.insert(events.end(), v.begin(), v.end());
  return events;
}

std::uint64_t detuning_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(0xD1B54A32D192ED03ULL + index));
}

std::map<double, EventList> run_experiment(const SimScenario& scenario, unsigned workers) {
  if (scenario.detunings_mhz.empty()) throw ArgumentError("run_experiment: detunings must be nonempty");
  const std::set<double> canonical(scenario.detunings_mhz.begin(), scenario.detunings_mhz.end());
  std::map<double, EventList> out;
  std::size_t index = 0;
  for (double d : canonical) {
    SimScenario sub = scenario;
    sub.seed = detuning_seed(scenario.seed, index++);
    out.emplace(d, simulate(sub, d, workers));
  }
  return out;
}

}  // namespace vipa
