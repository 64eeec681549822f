#include "vipa/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vipa {

std::vector<TimeHistogram> build_time_histograms(const EventList& events, std::int64_t n_pulses,
                                                 const SpadArraySpec& array, std::int64_t record_ns) {
  array.validate();
  if (n_pulses < 1) throw ArgumentError("build_time_histograms: n_pulses must be >= 1");
  if (record_ns < array.time_resolution_ns) throw ArgumentError("build_time_histograms: record shorter than one bin");
  const std::int64_t res = array.time_resolution_ns;
  const auto n_bins = static_cast<std::size_t>(record_ns / res);

  std::vector<TimeHistogram> out(static_cast<std::size_t>(array.n_elements));
  for (int e = 0; e < array.n_elements; ++e) {
    auto& h = out[static_cast<std::size_t>(e)];
    h.element = e;
    h.bin_edges_ns.resize(n_bins + 1);
    for (std::size_t b = 0; b <= n_bins; ++b) h.bin_edges_ns[b] = static_cast<std::int64_t>(b) * res;
    h.counts_per_pulse.assign(n_bins, 0.0);
  }
  const double unit = 1.0 / static_cast<double>(n_pulses);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    if (ev.element < 0 || ev.element >= array.n_elements)
      throw MalformedInputError("event " + std::to_string(i) + " references element " + std::to_string(ev.element) +
                                " outside the array");
    if (ev.time_tag_ns < 0 || ev.time_tag_ns >= static_cast<std::int64_t>(n_bins) * res)
      throw MalformedInputError("event " + std::to_string(i) + " has time tag outside the record");
    out[static_cast<std::size_t>(ev.element)].counts_per_pulse[static_cast<std::size_t>(ev.time_tag_ns / res)] += unit;
  }
  return out;
}

namespace {

void check_window(const std::vector<TimeHistogram>& histograms, TimeWindow window) {
  if (window.lo_ns > window.hi_ns) throw ArgumentError("integrate_window: inverted window");
  if (histograms.empty()) return;
  const auto record = histograms.front().bin_edges_ns.back();
  if (window.lo_ns < 0 || window.hi_ns > static_cast<double>(record))
    throw ArgumentError("integrate_window: window outside the record");
}

bool in_window(std::int64_t bin_start, TimeWindow w) {
  const auto s = static_cast<double>(bin_start);
  return s >= w.lo_ns && s < w.hi_ns;
}

}  // namespace

SpatialProfile integrate_window(const std::vector<TimeHistogram>& histograms, TimeWindow window) {
  check_window(histograms, window);
  SpatialProfile p;
  p.window = window;
  for (const auto& h : histograms) {
    double sum = 0;
    for (std::size_t b = 0; b < h.counts_per_pulse.size(); ++b)
      if (in_window(h.bin_edges_ns[b], window)) sum += h.counts_per_pulse[b];
    p.elements.push_back(h.element);
    p.mean_counts_per_pulse.push_back(sum);
  }
  return p;
}

SpatialProfile integrate_window_dark_subtracted(const std::vector<TimeHistogram>& histograms, TimeWindow window) {
  check_window(histograms, window);
  SpatialProfile p;
  p.window = window;
  for (const auto& h : histograms) {
    double inside = 0, outside = 0;
    std::size_t n_in = 0, n_out = 0;
    for (std::size_t b = 0; b < h.counts_per_pulse.size(); ++b) {
      if (in_window(h.bin_edges_ns[b], window)) {
        inside += h.counts_per_pulse[b];
        ++n_in;
      } else {
        outside += h.counts_per_pulse[b];
        ++n_out;
      }
    }
    const double floor_per_bin = n_out > 0 ? outside / static_cast<double>(n_out) : 0.0;
    p.elements.push_back(h.element);
    p.mean_counts_per_pulse.push_back(inside - floor_per_bin * static_cast<double>(n_in));
  }
  return p;
}

namespace {

using Vec4 = Eigen::Vector4d;

double lorentzian(const Vec4& p, double e) {
  const double d = e - p(0);
  return p(2) * p(1) * p(1) / (d * d + p(1) * p(1)) + p(3);
}

struct Problem {
  Eigen::VectorXd x, y, w;

  double sse(const Vec4& p) const {
    double s = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double r = y(i) - lorentzian(p, x(i));
      s += w(i) * r * r;
    }
    return s;
  }

  // Jacobian of the model with respect to (center, gamma, amplitude, offset).
  Eigen::MatrixX4d jacobian(const Vec4& p) const {
    Eigen::MatrixX4d J(x.size(), 4);
    const double g = p(1), a = p(2);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double d = x(i) - p(0);
      const double den = d * d + g * g;
      const double den2 = den * den;
      J(i, 0) = 2.0 * a * g * g * d / den2;
      J(i, 1) = 2.0 * a * g * d * d / den2;
      J(i, 2) = g * g / den;
      J(i, 3) = 1.0;
    }
    return J;
  }
};

bool admissible(const Vec4& p) { return p.allFinite() && p(1) > 0 && p(2) >= 0; }

}  // namespace

// Levenberg-Marquardt: damped Gauss-Newton steps, accepted only when the weighted SSE
// decreases, so the SSE history is monotone.
LorentzianFit fit_lorentzian(const SpatialProfile& profile, const FitOptions& options) {
  const auto n = profile.elements.size();
  if (profile.mean_counts_per_pulse.size() != n) throw ArgumentError("fit_lorentzian: ragged profile");
  const auto nonzero = std::count_if(profile.mean_counts_per_pulse.begin(), profile.mean_counts_per_pulse.end(),
                                     [](double v) { return v != 0.0; });
  if (nonzero < 5) throw InsufficientDataError("fit_lorentzian: fewer than 5 nonzero elements");

  Problem prob;
  prob.x.resize(static_cast<Eigen::Index>(n));
  prob.y.resize(static_cast<Eigen::Index>(n));
  prob.w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    prob.x(static_cast<Eigen::Index>(i)) = profile.elements[i];
    prob.y(static_cast<Eigen::Index>(i)) = profile.mean_counts_per_pulse[i];
  }
  if (options.weighting == FitWeighting::poisson) {
    double floor = std::numeric_limits<double>::infinity();
    for (double v : profile.mean_counts_per_pulse)
      if (v > 0) floor = std::min(floor, v);
    for (Eigen::Index i = 0; i < prob.y.size(); ++i) prob.w(i) = 1.0 / std::max(prob.y(i), floor);
  }

  Eigen::Index imax = 0, imin = 0;
  const double ymax = prob.y.maxCoeff(&imax);
  const double ymin = prob.y.minCoeff(&imin);
  Vec4 p(prob.x(imax), 1.0, ymax - ymin, ymin);

  LorentzianFit fit;
  double sse = prob.sse(p);
  fit.sse_history.push_back(sse);
  double mu = 1e-3;
  constexpr double kMaxDamping = 1e16;

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (sse == 0.0) {
      fit.converged = true;
      break;
    }
    const Eigen::MatrixX4d J = prob.jacobian(p);
    const Eigen::Matrix4d H = J.transpose() * prob.w.asDiagonal() * J;
    Eigen::VectorXd r(prob.x.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = prob.y(i) - lorentzian(p, prob.x(i));
    const Vec4 g = J.transpose() * (prob.w.array() * r.array()).matrix();

    bool accepted = false;
    while (mu <= kMaxDamping) {
      Eigen::Matrix4d A = H;
      A.diagonal() += mu * H.diagonal().cwiseMax(1e-300);
      const Vec4 step = A.ldlt().solve(g);
      const Vec4 trial = p + step;
      const double trial_sse = admissible(trial) ? prob.sse(trial) : std::numeric_limits<double>::infinity();
      if (trial_sse < sse) {
        const double improvement = (sse - trial_sse) / sse;
        p = trial;
        sse = trial_sse;
        fit.sse_history.push_back(sse);
        mu = std::max(mu / 10.0, 1e-12);
        accepted = true;
        if (improvement < options.relative_tolerance) fit.converged = true;
        break;
      }
      mu *= 10.0;
    }
    if (!accepted) {
      // No damped step lowers the SSE: stationary to working precision.
      fit.converged = true;
      break;
    }
    if (fit.converged) {
      ++it;
      break;
    }
  }
  fit.iterations = it;
  fit.center = p(0);
  fit.gamma = p(1);
  fit.amplitude = p(2);
  fit.offset = p(3);
  fit.sse = sse;
  if (!std::isfinite(sse)) fit.converged = false;

  const auto dof = static_cast<double>(n) - 4.0;
  fit.stderr_.fill(std::numeric_limits<double>::infinity());
  if (dof > 0) {
    const Eigen::MatrixX4d J = prob.jacobian(p);
    const Eigen::Matrix4d H = J.transpose() * prob.w.asDiagonal() * J;
    Eigen::FullPivLU<Eigen::Matrix4d> lu(H);
    if (lu.isInvertible()) {
      // Larger of the model-based s^2 H^-1 and the HC3 sandwich H^-1 (J^T W diag(r~^2) W J) H^-1,
      // r~ = r / (1 - leverage). Count profiles are heteroscedastic (empty tails, noisy peak)
      // and there the pooled s^2 form understates the center error several-fold.
      const Eigen::Matrix4d Hi = lu.inverse();
      Eigen::VectorXd r(prob.x.size());
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double h = prob.w(i) * J.row(i).dot(Hi * J.row(i).transpose());
        r(i) = prob.w(i) * (prob.y(i) - lorentzian(p, prob.x(i))) / std::max(1.0 - h, 1e-3);
      }
      const Eigen::Matrix4d robust = Hi * (J.transpose() * r.cwiseAbs2().asDiagonal() * J) * Hi;
      const Eigen::Matrix4d cov = (Hi * (sse / dof)).diagonal().cwiseMax(robust.diagonal()).asDiagonal();
      for (int k = 0; k < 4; ++k) fit.stderr_[static_cast<std::size_t>(k)] = std::sqrt(std::max(cov(k, k), 0.0));
    }
  }
  return fit;
}

std::vector<ShiftEstimate> estimate_shifts(const std::vector<LorentzianFit>& fits,
                                           const std::vector<double>& detunings_mhz) {
  if (fits.size() < 2) throw ArgumentError("estimate_shifts: need at least two fits");
  if (fits.size() != detunings_mhz.size()) throw ArgumentError("estimate_shifts: fits and detunings differ in length");
  const auto ref_it = std::find(detunings_mhz.begin(), detunings_mhz.end(), 0.0);
  if (ref_it == detunings_mhz.end()) throw ArgumentError("estimate_shifts: no detuning-0 reference");
  const auto& ref = fits[static_cast<std::size_t>(ref_it - detunings_mhz.begin())];

  std::vector<ShiftEstimate> out;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    ShiftEstimate s{detunings_mhz[i], f.center - ref.center, 0.0, !(f.converged && ref.converged)};
    if (s.flagged) {
      s.stderr_elements = std::numeric_limits<double>::infinity();
    } else if (&f != &ref) {
      s.stderr_elements = std::hypot(f.stderr_[0], ref.stderr_[0]);
    }
    out.push_back(s);
  }
  return out;
}

std::optional<ModeDecision> classify_mode(const EventList& single_shot, const std::vector<SpatialProfile>& templates,
                                          const std::vector<double>& template_detunings_mhz) {
  if (templates.empty()) throw ArgumentError("classify_mode: templates must be nonempty");
  if (templates.size() != template_detunings_mhz.size())
    throw ArgumentError("classify_mode: templates and detunings differ in length");
  if (single_shot.empty()) return std::nullopt;

  constexpr double kFloor = 1e-12;
  std::vector<double> loglik(templates.size(), 0.0);
  for (std::size_t k = 0; k < templates.size(); ++k) {
    const auto& t = templates[k];
    const double total = std::accumulate(t.mean_counts_per_pulse.begin(), t.mean_counts_per_pulse.end(), 0.0);
    if (!(total > 0)) throw ArgumentError("classify_mode: template has no counts");
    for (const auto& ev : single_shot) {
      double prob = 0;
      const auto it = std::find(t.elements.begin(), t.elements.end(), ev.element);
      if (it != t.elements.end())
        prob = t.mean_counts_per_pulse[static_cast<std::size_t>(it - t.elements.begin())] / total;
      loglik[k] += std::log(std::max(prob, kFloor));
    }
  }
  // Ties resolve to the first (lowest) index.
  std::size_t best = 0;
  for (std::size_t k = 1; k < loglik.size(); ++k)
    if (loglik[k] > loglik[best]) best = k;

  ModeDecision d;
  d.per_mode_likelihoods.resize(loglik.size());
  double norm = 0;
  for (std::size_t k = 0; k < loglik.size(); ++k) {
    d.per_mode_likelihoods[k] = std::exp(loglik[k] - loglik[best]);
    norm += d.per_mode_likelihoods[k];
  }
  for (double& v : d.per_mode_likelihoods) v /= norm;
  d.assigned_index = best;
  d.assigned_detuning_mhz = template_detunings_mhz[best];
  d.confidence = d.per_mode_likelihoods[best];
  return d;
}

double crosstalk_metric(const SpatialProfile& a, const SpatialProfile& b) {
  if (a.elements != b.elements) throw ArgumentError("crosstalk_metric: profiles on different element axes");
  if (a.elements.empty()) throw UndefinedMetricError("crosstalk_metric: empty profiles");
  const auto& va = a.mean_counts_per_pulse;
  const auto& vb = b.mean_counts_per_pulse;
  const auto a_peak = static_cast<std::size_t>(std::max_element(va.begin(), va.end()) - va.begin());
  const double b_own = *std::max_element(vb.begin(), vb.end());
  if (!(va[a_peak] > 0) || !(b_own > 0)) throw UndefinedMetricError("crosstalk_metric: zero peak counts");
  const double ratio = vb[a_peak] / b_own;
  if (!(ratio > 0)) return kCrosstalkFloorDb;
  return std::max(10.0 * std::log10(ratio), kCrosstalkFloorDb);
}

std::vector<EventList> split_by_pulse(const EventList& events, std::int64_t n_pulses) {
  std::vector<EventList> out(static_cast<std::size_t>(std::max<std::int64_t>(n_pulses, 0)));
  for (const auto& ev : events) {
    if (ev.pulse_index < 0 || ev.pulse_index >= n_pulses)
      throw MalformedInputError("event pulse index " + std::to_string(ev.pulse_index) + " outside [0, n_pulses)");
    out[static_cast<std::size_t>(ev.pulse_index)].push_back(ev);
  }
  return out;
}

}  // namespace vipa
