// spectro: design, profile, simulate, analyze and herald from one config file.

#include <iostream>

#include "CLI11.hpp"
#include "vipa/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vipa;

int main(int argc, char** argv) {
  CLI::App app{"VIPA single-photon spectrometer toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_flag;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--seed", seed, "override [run] seed");
    sub->add_option("--out", out_flag, "output directory (SPECTRO_OUT wins)");
  };

  cli::DesignOptions design_opt;
  auto* design = app.add_subcommand("design", "solve the optical design");
  common(design);
  design->add_option("--fwhm-target", design_opt.fwhm_target_mhz, "target frequency resolution in MHz");

  auto* profile = app.add_subcommand("profile", "focal-plane intensity per detuning");
  common(profile);

  cli::SimulateOptions sim_opt;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo detection events per detuning");
  common(simulate);
  simulate->add_option("--pulses", sim_opt.pulses, "override [pulse] n_pulses");
  simulate->add_option("--workers", sim_opt.workers, "worker threads, 0 = hardware concurrency");
  simulate->add_flag("--truth", sim_opt.truth, "also write ground-truth sidecar files");

  cli::AnalyzeOptions an_opt;
  std::vector<std::string> event_files;
  auto* analyze = app.add_subcommand("analyze", "histograms, Lorentzian fits and shifts");
  common(analyze);
  analyze->add_option("--events", event_files, "event files in ascending detuning order");
  analyze->add_option("--pulses", an_opt.pulses, "override [pulse] n_pulses");

  auto* herald = app.add_subcommand("herald", "heralding probability sweep and crossovers");
  common(herald);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::config_invalid;
  }

  return cli::guarded(
      [&]() -> int {
        auto cfg = load_config(config_path);
        if (seed) cfg.seed = *seed;
        std::optional<fs::path> out;
        if (out_flag) out = fs::path(*out_flag);
        const auto dir = cli::resolve_output_dir(cfg, out);
        if (design->parsed()) return cli::cmd_design(cfg, dir, design_opt, std::cout);
        if (profile->parsed()) return cli::cmd_profile(cfg, dir, std::cout);
        if (simulate->parsed()) return cli::cmd_simulate(cfg, dir, sim_opt, std::cout);
        if (analyze->parsed()) {
          for (const auto& f : event_files) an_opt.events.emplace_back(f);
          return cli::cmd_analyze(cfg, dir, an_opt, std::cout);
        }
        return cli::cmd_herald(cfg, dir, std::cout);
      },
      std::cerr);
}
