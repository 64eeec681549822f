#include "vipa/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace vipa::io {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

std::int64_t parse_int(const std::string& text, long line) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw MalformedInputError("expected an integer, got '" + text + "'", line);
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

double parse_double(const std::string& text, long line) {
  double v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw MalformedInputError("expected a number, got '" + text + "'", line);
  return v;
}

void write_grid_csv(std::ostream& os, const IntensityGrid<double>& grid) {
  const bool slice = grid.y_um.size() == 1 && grid.y_um(0) == 0.0;
  if (slice) {
    os << "x_um,intensity\n";
    for (Eigen::Index i = 0; i < grid.x_um.size(); ++i)
      os << format_double(grid.x_um(i)) << ',' << format_double(grid.values(i, 0)) << '\n';
    return;
  }
  os << "x_um,y_um,intensity\n";
  for (Eigen::Index j = 0; j < grid.y_um.size(); ++j)
    for (Eigen::Index i = 0; i < grid.x_um.size(); ++i)
      os << format_double(grid.x_um(i)) << ',' << format_double(grid.y_um(j)) << ','
         << format_double(grid.values(i, j)) << '\n';
}

IntensityGrid<double> read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw MalformedInputError("empty intensity file");
  const auto header = strip(line);
  const bool slice = header == "x_um,intensity";
  if (!slice && header != "x_um,y_um,intensity") throw MalformedInputError("unknown intensity header", 1);

  std::vector<double> xs, ys, vals;
  long n = 1;
  while (std::getline(is, line)) {
    ++n;
    line = strip(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != (slice ? 2u : 3u)) throw MalformedInputError("wrong field count", n);
    xs.push_back(parse_double(f[0], n));
    if (!slice) ys.push_back(parse_double(f[1], n));
    vals.push_back(parse_double(f.back(), n));
  }

  IntensityGrid<double> g;
  if (slice) {
    g.x_um = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    g.y_um = Eigen::VectorXd::Zero(1);
    g.values = Eigen::Map<Eigen::MatrixXd>(vals.data(), static_cast<Eigen::Index>(vals.size()), 1);
    return g;
  }
  // Rows are y-major; the x axis repeats until y changes.
  std::size_t nx = 0;
  while (nx < ys.size() && ys[nx] == ys[0]) ++nx;
  if (nx == 0 || xs.size() % nx != 0) throw MalformedInputError("ragged intensity grid");
  const std::size_t ny = xs.size() / nx;
  g.x_um.resize(static_cast<Eigen::Index>(nx));
  g.y_um.resize(static_cast<Eigen::Index>(ny));
  g.values.resize(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));
  for (std::size_t j = 0; j < ny; ++j) {
    g.y_um(static_cast<Eigen::Index>(j)) = ys[j * nx];
    for (std::size_t i = 0; i < nx; ++i) {
      if (j == 0) g.x_um(static_cast<Eigen::Index>(i)) = xs[i];
      g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vals[j * nx + i];
    }
  }
  return g;
}

void write_events(std::ostream& os, const EventList& events) {
  for (const auto& ev : events) os << ev.pulse_index << ',' << ev.element << ',' << ev.time_tag_ns << '\n';
}

void write_events_truth(std::ostream& os, const EventList& events) {
  os << "pulse_index,element,time_tag_ns,origin\n";
  for (const auto& ev : events)
    os << ev.pulse_index << ',' << ev.element << ',' << ev.time_tag_ns << ','
       << (ev.origin == EventOrigin::photon ? "photon" : "dark") << '\n';
}

EventList read_events(std::istream& is) {
  EventList out;
  std::string line;
  long n = 0;
  while (std::getline(is, line)) {
    ++n;
    line = strip(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) throw MalformedInputError("expected pulse_index,element,time_tag_ns", n);
    const auto pulse = parse_int(strip(f[0]), n);
    const auto element = parse_int(strip(f[1]), n);
    const auto tag = parse_int(strip(f[2]), n);
    if (pulse < 0 || element < 0 || tag < 0) throw MalformedInputError("negative field", n);
    out.push_back({pulse, static_cast<int>(element), tag, EventOrigin::photon});
  }
  return out;
}

void write_fig6_csv(std::ostream& os, const std::vector<TimeHistogram>& histograms) {
  os << "element,time_ns,counts_per_pulse\n";
  for (const auto& h : histograms) {
    bool any = false;
    for (double v : h.counts_per_pulse) any = any || v != 0.0;
    if (!any) continue;
    for (std::size_t b = 0; b < h.counts_per_pulse.size(); ++b)
      os << h.element << ',' << h.bin_edges_ns[b] << ',' << format_double(h.counts_per_pulse[b]) << '\n';
  }
}

void write_fig7_csv(std::ostream& os, const SpatialProfile& profile, const LorentzianFit& fit) {
  os << "element,mean_counts_per_pulse,fit_value\n";
  for (std::size_t i = 0; i < profile.elements.size(); ++i)
    os << profile.elements[i] << ',' << format_double(profile.mean_counts_per_pulse[i]) << ','
       << format_double(fit(profile.elements[i])) << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const std::vector<HeraldScenario>& scenarios) {
  os << "M,p_single";
  for (const auto& s : scenarios) os << ",p_multi_" << s.name;
  os << '\n';
  for (const auto& r : rows) {
    os << r.M << ',' << format_double(r.p_single);
    for (double v : r.p_multi) os << ',' << format_double(v);
    os << '\n';
  }
}

nlohmann::json to_json(const DesignResult& result) {
  nlohmann::json j;
  j["theta_in_deg"] = units::rad_to_deg(result.theta_in_rad);
  j["m"] = result.m;
  j["f_x_mm"] = result.f_x_mm;
  j["f_in_min_mm"] = result.f_in.min_mm;
  j["f_in_max_mm"] = result.f_in.max_mm;
  j["f_y_max_mm"] = result.f_y_max_mm;
  j["t_mm"] = result.t_required_mm ? nlohmann::json(*result.t_required_mm) : nlohmann::json(nullptr);
  nlohmann::json diag = nlohmann::json::object();
  for (const auto& [k, v] : result.diagnostics) diag[k] = v;
  j["diagnostics"] = diag;
  return j;
}

nlohmann::json to_json(const LorentzianFit& fit) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["center"] = fit.center;
  j["gamma"] = fit.gamma;
  j["amplitude"] = fit.amplitude;
  j["offset"] = fit.offset;
  j["sse"] = finite_or_null(fit.sse);
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["center_stderr"] = finite_or_null(fit.stderr_[0]);
  j["gamma_stderr"] = finite_or_null(fit.stderr_[1]);
  j["amplitude_stderr"] = finite_or_null(fit.stderr_[2]);
  j["offset_stderr"] = finite_or_null(fit.stderr_[3]);
  return j;
}

nlohmann::json to_json(const std::vector<ShiftEstimate>& shifts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : shifts) {
    nlohmann::json j;
    j["detuning_mhz"] = s.detuning_mhz;
    j["shift_elements"] = s.shift_elements;
    j["stderr_elements"] = std::isfinite(s.stderr_elements) ? nlohmann::json(s.stderr_elements) : nlohmann::json(nullptr);
    j["flagged"] = s.flagged;
    arr.push_back(j);
  }
  return arr;
}

void write_json(std::ostream& os, const nlohmann::json& json) { os << json.dump(2) << '\n'; }

}  // namespace vipa::io
