#include "vipa/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "vipa/io.hpp"

namespace vipa::cli {
namespace fs = std::filesystem;
namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

fs::path events_path(const fs::path& out, double detuning) {
  return out / ("events_" + detuning_label(detuning) + ".csv");
}

}  // namespace

fs::path resolve_output_dir(const RunConfig& cfg, const std::optional<fs::path>& out_flag) {
  if (const char* env = std::getenv("SPECTRO_OUT"); env && *env) return env;
  if (out_flag) return *out_flag;
  return cfg.output_dir;
}

std::string detuning_label(double detuning_mhz) {
  if (detuning_mhz == 0.0) detuning_mhz = 0.0;  // folds -0
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, std::abs(detuning_mhz));
  return std::string(detuning_mhz < 0 ? "-" : "+") + std::string(buf, ptr) + "MHz";
}

int cmd_design(RunConfig cfg, const fs::path& out, const DesignOptions& opt, std::ostream& log) {
  if (opt.fwhm_target_mhz) cfg.goal.fwhm_target_mhz = *opt.fwhm_target_mhz;
  validate_for_design(cfg);
  const auto result = full_design(cfg.vipa, cfg.goal);

  prepare_dir(out);
  {
    auto os = open_out(out / "design.json");
    io::write_json(os, io::to_json(result));
  }
  std::string report;
  report += "incident angle theta_in: " + fixed(units::rad_to_deg(result.theta_in_rad), 2) + " deg (order m = " +
            std::to_string(result.m) + ")\n";
  report += "focal length f_x: " + fixed(result.f_x_mm, 0) + " mm\n";
  report += "f_in range without clipping: [" + fixed(result.f_in.min_mm, 0) + ", " + fixed(result.f_in.max_mm, 0) +
            "] mm\n";
  report += "largest f_y: " + fixed(result.f_y_max_mm, 1) + " mm\n";
  if (result.t_required_mm)
    report += "etalon thickness for " + fixed(*cfg.goal.fwhm_target_mhz, 0) +
              " MHz resolution: t = " + fixed(*result.t_required_mm, 1) + " mm\n";
  if (auto v = result.diagnostic("fwhm_freq_mhz")) report += "frequency resolution: " + fixed(*v, 0) + " MHz\n";
  if (auto v = result.diagnostic("fsr_ghz")) report += "free spectral range: " + fixed(*v, 1) + " GHz\n";
  if (auto v = result.diagnostic("f_in_candidate_in_interval"))
    report += std::string("candidate f_in ") + fixed(*cfg.goal.f_in_candidate_mm, 0) + " mm " +
              (*v != 0.0 ? "avoids" : "causes") + " clipping\n";
  {
    auto os = open_out(out / "design_report.txt");
    os << report;
  }
  log << report;
  return ok;
}

int cmd_profile(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  validate_for_profile(cfg);
  const auto detunings = sorted_unique(cfg.profile.detunings_mhz);
  const double center = peak_position(cfg.vipa, cfg.layout, cfg.layout.lambda0_nm);
  const AxisRange xr{center - cfg.profile.x_half_window_um, center + cfg.profile.x_half_window_um};
  const AxisRange yr{-cfg.profile.y_half_window_um, cfg.profile.y_half_window_um};

  std::vector<IntensityGrid<double>> grids;
  for (double d : detunings)
    grids.push_back(intensity_grid(cfg.vipa, cfg.layout, detuned_wavelength(cfg.layout, d), xr, yr, cfg.profile.step_um));

  prepare_dir(out);
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t k = 0; k < detunings.size(); ++k) {
    const auto name = "profile_" + detuning_label(detunings[k]) + ".csv";
    auto os = open_out(out / name);
    io::write_grid_csv(os, grids[k]);
    const double predicted = peak_position(cfg.vipa, cfg.layout, detuned_wavelength(cfg.layout, detunings[k]));
    summary.push_back({{"detuning_mhz", detunings[k]}, {"file", name}, {"predicted_peak_um", predicted}});
    log << name << ": predicted peak at x = " << fixed(predicted, 2) << " um\n";
  }
  auto os = open_out(out / "profile_summary.json");
  io::write_json(os, summary);
  return ok;
}

int cmd_simulate(RunConfig cfg, const fs::path& out, const SimulateOptions& opt, std::ostream& log) {
  if (opt.pulses) cfg.pulse.n_pulses = *opt.pulses;
  validate_for_simulate(cfg);
  const auto scenario = cfg.scenario_view();
  const auto runs = run_experiment(scenario, opt.workers);

  prepare_dir(out);
  for (const auto& [detuning, events] : runs) {
    auto os = open_out(events_path(out, detuning));
    io::write_events(os, events);
    if (opt.truth) {
      auto ts = open_out(out / ("events_" + detuning_label(detuning) + ".truth.csv"));
      io::write_events_truth(ts, events);
    }
    log << events_path(out, detuning).filename().string() << ": " << events.size() << " events over "
        << scenario.pulse.n_pulses << " pulses\n";
  }
  return ok;
}

int cmd_analyze(RunConfig cfg, const fs::path& out, const AnalyzeOptions& opt, std::ostream& log) {
  if (opt.pulses) cfg.pulse.n_pulses = *opt.pulses;
  validate_for_analyze(cfg);
  const auto detunings = sorted_unique(cfg.scenario.detunings_mhz);
  std::vector<fs::path> files = opt.events;
  if (files.empty())
    for (double d : detunings) files.push_back(events_path(out, d));
  if (files.size() != detunings.size())
    throw ConfigError("analyze: got " + std::to_string(files.size()) + " event files for " +
                      std::to_string(detunings.size()) + " detunings");

  std::vector<EventList> streams;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw Error("cannot read event file " + f.string());
    try {
      streams.push_back(io::read_events(in));
    } catch (const MalformedInputError& e) {
      throw MalformedInputError(f.string() + ": " + e.what());
    }
  }

  FitOptions fopt;
  fopt.weighting = cfg.analysis.weighting;
  std::vector<std::vector<TimeHistogram>> hists;
  std::vector<SpatialProfile> profiles;
  std::vector<LorentzianFit> fits;
  for (const auto& ev : streams) {
    hists.push_back(build_time_histograms(ev, cfg.pulse.n_pulses, cfg.array, cfg.pulse.period_ns));
    profiles.push_back(cfg.analysis.dark_subtract ? integrate_window_dark_subtracted(hists.back(), cfg.analysis.window)
                                                  : integrate_window(hists.back(), cfg.analysis.window));
    fits.push_back(fit_lorentzian(profiles.back(), fopt));
  }
  const bool have_ref = std::find(detunings.begin(), detunings.end(), 0.0) != detunings.end();
  std::vector<ShiftEstimate> shifts;
  if (detunings.size() >= 2 && have_ref) shifts = estimate_shifts(fits, detunings);

  prepare_dir(out);
  for (std::size_t k = 0; k < detunings.size(); ++k) {
    const auto label = detuning_label(detunings[k]);
    auto f6 = open_out(out / ("fig6_" + label + ".csv"));
    io::write_fig6_csv(f6, hists[k]);
    auto f7 = open_out(out / ("fig7_" + label + ".csv"));
    io::write_fig7_csv(f7, profiles[k], fits[k]);
    auto fj = open_out(out / ("fit_" + label + ".json"));
    io::write_json(fj, io::to_json(fits[k]));
  }
  {
    auto os = open_out(out / "shifts.json");
    io::write_json(os, io::to_json(shifts));
  }

  std::string report;
  for (std::size_t k = 0; k < detunings.size(); ++k)
    report += detuning_label(detunings[k]) + ": center " + fixed(fits[k].center, 2) + " +/- " +
              fixed(fits[k].stderr_[0], 2) + " elements, HWHM " + fixed(fits[k].gamma, 2) +
              (fits[k].converged ? "" : " (not converged)") + "\n";
  for (const auto& s : shifts)
    report += "shift at " + detuning_label(s.detuning_mhz) + ": " + fixed(s.shift_elements, 2) + " +/- " +
              fixed(s.stderr_elements, 2) + " elements" + (s.flagged ? " (flagged)" : "") + "\n";
  if (have_ref) {
    const auto ref = static_cast<std::size_t>(std::find(detunings.begin(), detunings.end(), 0.0) - detunings.begin());
    for (std::size_t k = 0; k < detunings.size(); ++k) {
      if (k == ref) continue;
      try {
        report += "crosstalk of " + detuning_label(detunings[k]) + " at the reference peak: " +
                  fixed(crosstalk_metric(profiles[ref], profiles[k]), 1) + " dB\n";
      } catch (const UndefinedMetricError&) {
        report += "crosstalk of " + detuning_label(detunings[k]) + ": undefined (no counts)\n";
      }
    }
  }
  {
    auto os = open_out(out / "analysis_report.txt");
    os << report;
  }
  log << report;
  return ok;
}

int cmd_herald(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  validate_for_herald(cfg);
  const auto& h = cfg.herald;
  const auto rows = sweep(h.baseline, h.scenarios, h.m_first, h.m_last);

  nlohmann::json summary;
  summary["p_single"] = p_single(h.baseline);
  summary["scenarios"] = nlohmann::json::array();
  std::string report = "single-mode heralding probability: " + sci(p_single(h.baseline)) + "\n";
  for (const auto& s : h.scenarios) {
    nlohmann::json j{{"name", s.name}, {"per_mode_probability", per_mode_probability(s.params)}};
    try {
      const auto m = crossover_modes(h.baseline, s.params);
      j["crossover_M"] = m;
      report += s.name + ": multiplexing wins from M = " + std::to_string(m) + "\n";
    } catch (const InvalidRegimeError& e) {
      j["crossover_M"] = nullptr;
      report += s.name + ": no crossover (" + e.what() + ")\n";
    }
    summary["scenarios"].push_back(j);
  }

  prepare_dir(out);
  {
    auto os = open_out(out / "herald_sweep.csv");
    io::write_sweep_csv(os, rows, h.scenarios);
  }
  {
    auto os = open_out(out / "herald.json");
    io::write_json(os, summary);
  }
  {
    auto os = open_out(out / "herald_report.txt");
    os << report;
  }
  log << report;
  return ok;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return config_invalid;
  } catch (const ArgumentError& e) {
    err << "invalid input: " << e.what() << '\n';
    return config_invalid;
  } catch (const InfeasibleDesignError& e) {
    err << "infeasible design, constraint " << e.what() << '\n';
    return infeasible;
  } catch (const MalformedInputError& e) {
    err << "parse error: " << e.what() << '\n';
    return runtime_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return runtime_error;
  }
}

}  // namespace vipa::cli
