#include "vipa/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vipa/io.hpp"

namespace vipa {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"run", {"output_dir", "seed"}},
      {"vipa", {"R", "r", "n_r", "t_mm", "L_mm"}},
      {"layout", {"lambda0_nm", "W_mm", "theta_in_deg", "f_in_mm", "f_x_mm", "f_y_mm"}},
      {"goal",
       {"lambda0_nm", "delta_nu_mhz", "pitch_um", "fwhm_target_mhz", "W_mm", "y_element_um", "theta_min_deg",
        "theta_max_deg", "theta_nominal_deg", "f_in_candidate_mm"}},
      {"array",
       {"n_elements", "element_pitch_um", "pixels_per_element", "dcr_cps", "pde", "time_resolution_ns",
        "dead_time_ns"}},
      {"pulse", {"fwhm_ns", "mean_photons", "n_pulses", "period_ns", "center_time_ns"}},
      {"scenario", {"detunings_mhz", "alignment_offset_um", "axis_element", "eta_chain"}},
      {"profile", {"detunings_mhz", "x_half_window_um", "y_half_window_um", "step_um"}},
      {"analysis", {"window_lo_ns", "window_hi_ns", "weighting", "dark_subtract"}},
      {"herald", {"p", "eta_det", "alpha_db_km", "L_km", "m_first", "m_last"}},
  };
  return keys;
}

const std::set<std::string> kHeraldScenarioKeys{"p", "eta_vipa", "eta_det", "eta_wc"};
constexpr const char* kHeraldPrefix = "herald:";

class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }

  std::string text(const std::string& key) const { return tree_->get<std::string>(pt::ptree::path_type(key, '\0')); }

  void read(const std::string& key, double& out) const {
    if (has(key)) out = number(key);
  }
  void read(const std::string& key, std::int64_t& out) const {
    if (has(key)) out = integer(key);
  }
  void read(const std::string& key, int& out) const {
    if (has(key)) out = static_cast<int>(integer(key));
  }
  void read(const std::string& key, std::optional<double>& out) const {
    if (has(key)) out = number(key);
  }
  void read_deg(const std::string& key, double& out_rad) const {
    if (has(key)) out_rad = units::deg_to_rad(number(key));
  }
  void read_deg(const std::string& key, std::optional<double>& out_rad) const {
    if (has(key)) out_rad = units::deg_to_rad(number(key));
  }
  void read_list(const std::string& key, std::vector<double>& out) const {
    if (!has(key)) return;
    out.clear();
    std::istringstream ss(text(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse(key, item));
  }

  double number(const std::string& key) const { return parse(key, text(key)); }

  std::int64_t integer(const std::string& key) const {
    const double v = number(key);
    if (v != static_cast<double>(static_cast<std::int64_t>(v))) fail(key, "expected an integer");
    return static_cast<std::int64_t>(v);
  }

  bool boolean(const std::string& key) const {
    const auto v = text(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, "expected true or false");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("[" + name_ + "] " + key + ": " + what);
  }

 private:
  double parse(const std::string& key, std::string item) const {
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.pop_back();
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.erase(item.begin());
    try {
      return io::parse_double(item);
    } catch (const MalformedInputError&) {
      fail(key, "expected a number, got '" + item + "'");
    }
  }

  std::string name_;
  const pt::ptree* tree_;
};

RunConfig from_tree(const pt::ptree& root) {
  for (const auto& [name, child] : root) {
    if (child.empty() && !child.data().empty()) throw ConfigError("key '" + name + "' outside any section");
    const std::set<std::string>* allowed = nullptr;
    if (name.rfind(kHeraldPrefix, 0) == 0) {
      allowed = &kHeraldScenarioKeys;
    } else {
      const auto it = known_keys().find(name);
      if (it == known_keys().end()) throw ConfigError("unknown section [" + name + "]");
      allowed = &it->second;
    }
    for (const auto& kv : child)
      if (!allowed->count(kv.first)) throw ConfigError("unknown key '" + kv.first + "' in [" + name + "]");
  }

  auto section = [&](const std::string& name) {
    const auto it = root.find(name);
    return Section(name, it == root.not_found() ? nullptr : &it->second);
  };

  RunConfig cfg;
  // Reference current setup as the default layout.
  cfg.layout.theta_in_rad = units::deg_to_rad(0.68);

  if (auto s = section("run"); s.has("output_dir") || s.has("seed")) {
    if (s.has("output_dir")) cfg.output_dir = s.text("output_dir");
    if (s.has("seed")) {
      const auto text = s.text("seed");
      try {
        std::size_t used = 0;
        cfg.seed = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        s.fail("seed", "expected an unsigned integer");
      }
    }
  }

  auto v = section("vipa");
  v.read("R", cfg.vipa.R);
  v.read("r", cfg.vipa.r);
  v.read("n_r", cfg.vipa.n_r);
  v.read("t_mm", cfg.vipa.t_mm);
  v.read("L_mm", cfg.vipa.L_mm);

  auto l = section("layout");
  l.read("lambda0_nm", cfg.layout.lambda0_nm);
  l.read("W_mm", cfg.layout.W_mm);
  l.read_deg("theta_in_deg", cfg.layout.theta_in_rad);
  l.read("f_in_mm", cfg.layout.f_in_mm);
  l.read("f_x_mm", cfg.layout.f_x_mm);
  l.read("f_y_mm", cfg.layout.f_y_mm);

  auto g = section("goal");
  cfg.goal.lambda0_nm = cfg.layout.lambda0_nm;
  cfg.goal.W_mm = cfg.layout.W_mm;
  g.read("lambda0_nm", cfg.goal.lambda0_nm);
  g.read("delta_nu_mhz", cfg.goal.delta_nu_mhz);
  g.read("pitch_um", cfg.goal.pitch_um);
  g.read("fwhm_target_mhz", cfg.goal.fwhm_target_mhz);
  g.read("W_mm", cfg.goal.W_mm);
  g.read("y_element_um", cfg.goal.y_element_um);
  g.read_deg("theta_min_deg", cfg.goal.theta_min_rad);
  g.read_deg("theta_max_deg", cfg.goal.theta_max_rad);
  g.read_deg("theta_nominal_deg", cfg.goal.theta_nominal_rad);
  g.read("f_in_candidate_mm", cfg.goal.f_in_candidate_mm);

  auto a = section("array");
  a.read("n_elements", cfg.array.n_elements);
  a.read("element_pitch_um", cfg.array.element_pitch_um);
  a.read("pixels_per_element", cfg.array.pixels_per_element);
  a.read("dcr_cps", cfg.array.dcr_cps);
  cfg.pde_given = a.has("pde");
  a.read("pde", cfg.array.pde);
  a.read("time_resolution_ns", cfg.array.time_resolution_ns);
  a.read("dead_time_ns", cfg.array.dead_time_ns);

  auto p = section("pulse");
  p.read("fwhm_ns", cfg.pulse.fwhm_ns);
  p.read("mean_photons", cfg.pulse.mean_photons);
  p.read("n_pulses", cfg.pulse.n_pulses);
  p.read("period_ns", cfg.pulse.period_ns);
  p.read("center_time_ns", cfg.pulse.center_time_ns);

  auto sc = section("scenario");
  sc.read_list("detunings_mhz", cfg.scenario.detunings_mhz);
  sc.read("alignment_offset_um", cfg.scenario.alignment_offset_um);
  sc.read("axis_element", cfg.scenario.axis_element);
  sc.read("eta_chain", cfg.scenario.eta_chain);

  auto pr = section("profile");
  cfg.profile.detunings_mhz = cfg.scenario.detunings_mhz;
  pr.read_list("detunings_mhz", cfg.profile.detunings_mhz);
  pr.read("x_half_window_um", cfg.profile.x_half_window_um);
  pr.read("y_half_window_um", cfg.profile.y_half_window_um);
  pr.read("step_um", cfg.profile.step_um);

  auto an = section("analysis");
  an.read("window_lo_ns", cfg.analysis.window.lo_ns);
  an.read("window_hi_ns", cfg.analysis.window.hi_ns);
  if (an.has("weighting")) {
    const auto w = an.text("weighting");
    if (w == "uniform")
      cfg.analysis.weighting = FitWeighting::uniform;
    else if (w == "poisson")
      cfg.analysis.weighting = FitWeighting::poisson;
    else
      an.fail("weighting", "expected uniform or poisson");
  }
  if (an.has("dark_subtract")) cfg.analysis.dark_subtract = an.boolean("dark_subtract");

  auto h = section("herald");
  h.read("p", cfg.herald.baseline.p);
  h.read("eta_det", cfg.herald.baseline.eta_det);
  h.read("alpha_db_km", cfg.herald.baseline.alpha_db_km);
  h.read("L_km", cfg.herald.baseline.L_link_km);
  h.read("m_first", cfg.herald.m_first);
  h.read("m_last", cfg.herald.m_last);

  std::vector<HeraldScenario> custom;
  for (const auto& [name, child] : root) {
    if (name.rfind(kHeraldPrefix, 0) != 0) continue;
    const Section hs(name, &child);
    HeraldScenario scen{name.substr(std::string(kHeraldPrefix).size()), cfg.herald.baseline};
    scen.params.eta_vipa = 1.0;
    scen.params.eta_wc = 1.0;
    hs.read("p", scen.params.p);
    hs.read("eta_vipa", scen.params.eta_vipa);
    hs.read("eta_det", scen.params.eta_det);
    hs.read("eta_wc", scen.params.eta_wc);
    if (scen.name.empty()) throw ConfigError("herald scenario section needs a name after 'herald:'");
    custom.push_back(scen);
  }
  if (!custom.empty()) {
    cfg.herald.scenarios = std::move(custom);
  } else {
    // Reference scenarios follow the configured baseline link.
    for (auto& s : cfg.herald.scenarios) {
      s.params.p = cfg.herald.baseline.p;
      s.params.alpha_db_km = cfg.herald.baseline.alpha_db_km;
      s.params.L_link_km = cfg.herald.baseline.L_link_km;
    }
  }
  return cfg;
}

template <typename F>
void as_config_error(const std::string& what, F&& f) {
  try {
    f();
  } catch (const ArgumentError& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

SimScenario RunConfig::scenario_view() const {
  SimScenario s = scenario;
  s.vipa = vipa;
  s.layout = layout;
  s.array = array;
  s.pulse = pulse;
  s.seed = seed;
  return s;
}

RunConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  return from_tree(tree);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_for_design(const RunConfig& cfg) {
  as_config_error("[vipa]", [&] { cfg.vipa.validate(); });
  as_config_error("[goal]", [&] { cfg.goal.validate(); });
}

void validate_for_profile(const RunConfig& cfg) {
  as_config_error("[vipa]", [&] { cfg.vipa.validate(); });
  as_config_error("[layout]", [&] { cfg.layout.validate(); });
  as_config_error("[layout]", [&] { (void)virtual_source_count(cfg.vipa, cfg.layout); });
  if (cfg.profile.detunings_mhz.empty()) throw ConfigError("[profile] detunings_mhz must be nonempty");
  if (!(cfg.profile.step_um > 0)) throw ConfigError("[profile] step_um must be > 0");
  if (!(cfg.profile.x_half_window_um > 0)) throw ConfigError("[profile] x_half_window_um must be > 0");
  if (!(cfg.profile.y_half_window_um >= 0)) throw ConfigError("[profile] y_half_window_um must be >= 0");
}

void validate_for_simulate(const RunConfig& cfg) {
  if (!cfg.pde_given) throw ConfigError("[array] pde is required for simulation");
  as_config_error("[scenario]", [&] { cfg.scenario_view().validate(); });
  as_config_error("[layout]", [&] { (void)virtual_source_count(cfg.vipa, cfg.layout); });
  if (cfg.scenario.detunings_mhz.empty()) throw ConfigError("[scenario] detunings_mhz must be nonempty");
}

void validate_for_analyze(const RunConfig& cfg) {
  as_config_error("[array]", [&] { cfg.array.validate(); });
  as_config_error("[pulse]", [&] { cfg.pulse.validate(); });
  if (cfg.scenario.detunings_mhz.empty()) throw ConfigError("[scenario] detunings_mhz must be nonempty");
  const auto& w = cfg.analysis.window;
  if (!(w.lo_ns <= w.hi_ns) || w.lo_ns < 0 || w.hi_ns > static_cast<double>(cfg.pulse.period_ns))
    throw ConfigError("[analysis] window must satisfy 0 <= lo <= hi <= period");
}

void validate_for_herald(const RunConfig& cfg) {
  as_config_error("[herald]", [&] { cfg.herald.baseline.validate(); });
  for (const auto& s : cfg.herald.scenarios)
    as_config_error("[herald:" + s.name + "]", [&] { s.params.validate(); });
  if (cfg.herald.m_first < 1 || cfg.herald.m_last < cfg.herald.m_first)
    throw ConfigError("[herald] M range must satisfy 1 <= m_first <= m_last");
}

}  // namespace vipa
