// ptmap: spectra, Husimi supports and classical coupled regions of the
// PT-symmetric kicked-rotator resonator model.
//
//   ptmap spectrum  --M 400 --mu 0.4 --out out/
//   ptmap sweep     --config sweep.json --threads 4
//   ptmap husimi    --M 400 --mu 0.4
//   ptmap classical --k 8 --et 0.2
//   ptmap rmt       --M 200 --ensemble 10 --seed 1
//
// Every subcommand builds an ExperimentConfig (from --config if given, then
// command-line overrides) and runs it through run_experiment. The exit code is
// the number of failed tasks (capped at 255).

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ptmap/harness.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  int ensemble = 0;
  std::vector<int> m_list;
  std::vector<double> mu_list;
  std::optional<double> et;
  std::optional<double> k;
  std::string dynamics;
  bool allow_large = false;
  int resolution = 0;
  int t_max = 0;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "First RNG seed (COE)");
  cmd->add_option("--ensemble", o.ensemble, "Number of COE realisations (seeds seed, seed+1, ...)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--M", o.m_list, "System sizes M");
  cmd->add_option("--mu", o.mu_list, "Amplification rates mu");
  cmd->add_option("--et", o.et, "Thouless energy E_T = N/M");
  cmd->add_option("--k", o.k, "Kicking strength");
  cmd->add_option("--dynamics", o.dynamics, "kicked_rotator or coe")
      ->check(CLI::IsMember({"kicked_rotator", "coe"}));
  cmd->add_flag("--allow-large", o.allow_large, "Permit M above the desk-scale limit");
}

ptmap::ExperimentConfig build_config(const Overrides& o, std::initializer_list<ptmap::Observable> observables,
                                     bool keep_config_observables) {
  ptmap::ExperimentConfig c = o.config_path.empty() ? ptmap::ExperimentConfig{} : ptmap::load_config(o.config_path);
  if (!keep_config_observables || o.config_path.empty()) c.observables = observables;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.threads > 0) c.threads = o.threads;
  if (!o.m_list.empty()) c.m_list = o.m_list;
  if (!o.mu_list.empty()) c.mu_list = o.mu_list;
  if (o.et) c.thouless_energy = *o.et;
  if (o.k) c.k = *o.k;
  if (o.dynamics == "coe") c.dynamics = ptmap::DynamicsKind::coe;
  if (o.dynamics == "kicked_rotator") c.dynamics = ptmap::DynamicsKind::kicked_rotator;
  if (o.allow_large) c.allow_large = true;
  if (o.resolution > 0) {
    c.husimi_resolution = o.resolution;
    c.classical_resolution = o.resolution;
  }
  if (o.t_max > 0) c.classical_t_max = o.t_max;
  if (o.seed || o.ensemble > 0) {
    const std::uint64_t first = o.seed.value_or(c.ensemble_seeds.front());
    const int count = o.ensemble > 0 ? o.ensemble : 1;
    c.ensemble_seeds.clear();
    for (int i = 0; i < count; ++i) c.ensemble_seeds.push_back(first + static_cast<std::uint64_t>(i));
  }
  return c;
}

int report(const ptmap::RunManifest& m, const ptmap::ExperimentConfig& c) {
  for (const auto& t : m.tasks) {
    std::cout << (t.ok ? "ok     " : "FAILED ") << t.key;
    if (!t.note.empty()) std::cout << "  (" << t.note << ")";
    std::cout << '\n';
  }
  std::cout << m.tasks.size() - m.failed_count() << "/" << m.tasks.size() << " tasks succeeded; outputs in "
            << c.output_dir.string() << '\n';
  return static_cast<int>(std::min<std::size_t>(m.failed_count(), 255));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PT-symmetric quantum map spectra and phase-space analysis"};
  app.set_version_flag("--version", ptmap::version_string());
  app.require_subcommand(1);

  Overrides spectrum_o, sweep_o, husimi_o, classical_o, rmt_o;
  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues, f_> and real-state fraction");
  add_common(spectrum, spectrum_o);
  auto* sweep = app.add_subcommand("sweep", "Run every observable listed in the config");
  add_common(sweep, sweep_o);
  auto* husimi = app.add_subcommand("husimi", "Husimi supports of amplified, neutral and decaying states");
  add_common(husimi, husimi_o);
  husimi->add_option("--resolution", husimi_o.resolution, "Grid points per axis")->check(CLI::PositiveNumber);
  auto* classical = app.add_subcommand("classical", "Coupled regions, trapped sets and box-counting dimensions");
  add_common(classical, classical_o);
  classical->add_option("--resolution", classical_o.resolution, "Grid cells per axis")->check(CLI::PositiveNumber);
  classical->add_option("--t-max", classical_o.t_max, "Iteration horizon")->check(CLI::PositiveNumber);
  auto* rmt = app.add_subcommand("rmt", "COE real-to-complex transition around mu_c = sqrt(N)/M");
  add_common(rmt, rmt_o);

  CLI11_PARSE(app, argc, argv);

  using ptmap::Observable;
  try {
    ptmap::ExperimentConfig config;
    if (*spectrum) {
      config = build_config(spectrum_o, {Observable::spectrum, Observable::fraction}, false);
    } else if (*sweep) {
      config = build_config(sweep_o, {Observable::spectrum, Observable::histogram, Observable::fraction}, true);
    } else if (*husimi) {
      config = build_config(husimi_o, {Observable::husimi}, false);
    } else if (*classical) {
      config = build_config(classical_o, {Observable::classical}, false);
    } else {
      ptmap::ExperimentConfig base = build_config(rmt_o, {Observable::transition}, false);
      if (rmt_o.dynamics.empty() && rmt_o.config_path.empty()) base.dynamics = ptmap::DynamicsKind::coe;
      config = base;
    }
    return report(ptmap::run_experiment(config), config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 255;
  }
}
