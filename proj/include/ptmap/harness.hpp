#pragma once

// Parameter sweeps: configuration, parallel task execution and persistence.
//
// A sweep is a set of independent tasks keyed by (observable, M, mu, seed).
// Tasks may run in any order on any thread; results are always merged in key
// order, so outputs depend only on the configuration.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptmap/operators.hpp"

namespace ptmap {

enum class Observable { spectrum, histogram, fraction, scaling, husimi, classical, transition };

std::string to_string(Observable o);
Observable observable_from_string(const std::string& s);

enum class DynamicsKind { kicked_rotator, coe };

/// Largest M accepted without `allow_large` (a 4000 x 4000 complex map).
inline constexpr int kDeskScaleMaxM = 2000;

struct ExperimentConfig {
  DynamicsKind dynamics = DynamicsKind::kicked_rotator;
  double k = 8.0;
  /// E_T = N/M; N = round(E_T * M) for every M.
  double thouless_energy = 0.2;
  std::vector<double> mu_list{0.4};
  std::vector<int> m_list{400};
  /// COE realisations; the kicked rotator uses only the first entry.
  std::vector<std::uint64_t> ensemble_seeds{1};
  std::set<Observable> observables{Observable::spectrum, Observable::fraction};
  std::filesystem::path output_dir = "out";

  double histogram_bin_width = 0.01;
  int husimi_resolution = 200;
  int classical_resolution = 1000;
  int classical_t_max = 20;
  /// Backward-coupled steps drawn in the coupled-region maps.
  int coupled_steps = 4;
  std::vector<int> box_scales{4, 5, 8, 10, 20, 25, 40, 50};
  /// mu / mu_c values for the transition scan, mu_c = sqrt(N)/M.
  std::vector<double> transition_mu_factors{0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};

  double delta_real = 1e-8;
  /// Pairing tolerance relative to max |lambda|.
  double pair_tol = 1e-7;
  int threads = 1;
  bool allow_large = false;

  int channels_for(int M) const;
  double strip_width_for(int M) const;
  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  std::vector<std::uint64_t> seeds_used() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON dump without threads and output_dir,
/// as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

struct TaskRecord {
  std::string key;
  bool ok = false;
  double wall_seconds = 0.0;
  std::optional<double> max_residual;
  /// |sum lambda - tr F| / max(1, |tr F|), |sum ln|lambda||.
  std::optional<double> trace_residual;
  std::optional<double> log_det_residual;
  std::optional<double> pairing_mismatch;
  std::string note;
  std::vector<std::string> outputs;
};

struct RunManifest {
  struct System {
    int M = 0;
    int N = 0;
    double strip_width = 0.0;
  };

  std::string config_hash;
  std::string version;
  double thouless_energy = 0.0;
  /// Quantum channel count and classical strip for every M in the sweep.
  std::vector<System> systems;
  std::vector<TaskRecord> tasks;

  std::size_t failed_count() const;
  std::optional<double> max_solver_residual() const;
};

void to_json(nlohmann::json& j, const RunManifest& m);

/// Runs every task of the sweep, writes outputs and manifest.json into
/// config.output_dir. Task failures are recorded, never thrown.
RunManifest run_experiment(const ExperimentConfig& config);

std::string version_string();

}  // namespace ptmap
