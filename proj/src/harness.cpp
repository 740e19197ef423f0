#include "ptmap/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "ptmap/classical.hpp"
#include "ptmap/husimi.hpp"
#include "ptmap/io.hpp"
#include "ptmap/spectra.hpp"

#ifndef PTMAP_VERSION
#define PTMAP_VERSION "0.0.0"
#endif

namespace ptmap {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_string() { return std::string("ptmap ") + PTMAP_VERSION; }

namespace {

const std::map<Observable, std::string>& observable_names() {
  static const std::map<Observable, std::string> names{
      {Observable::spectrum, "spectrum"}, {Observable::histogram, "histogram"},
      {Observable::fraction, "fraction"}, {Observable::scaling, "scaling"},
      {Observable::husimi, "husimi"},     {Observable::classical, "classical"},
      {Observable::transition, "transition"},
  };
  return names;
}

std::string fmt_g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

std::string to_string(Observable o) { return observable_names().at(o); }

Observable observable_from_string(const std::string& s) {
  for (const auto& [o, name] : observable_names()) {
    if (name == s) return o;
  }
  throw std::invalid_argument("unknown observable '" + s + "'");
}

int ExperimentConfig::channels_for(int M) const { return static_cast<int>(std::lround(thouless_energy * M)); }

double ExperimentConfig::strip_width_for(int M) const { return static_cast<double>(channels_for(M)) / M; }

void ExperimentConfig::validate() const {
  if (!(thouless_energy > 0.0 && thouless_energy <= 1.0)) {
    throw std::invalid_argument("config: thouless_energy must lie in (0, 1]");
  }
  if (m_list.empty()) throw std::invalid_argument("config: m_list is empty");
  for (const int M : m_list) {
    if (M < 1) throw std::invalid_argument("config: M must be >= 1");
    if (channels_for(M) < 1) {
      throw std::invalid_argument("config: round(E_T*M) < 1 for M=" + std::to_string(M));
    }
    if (M > kDeskScaleMaxM && !allow_large) {
      throw std::invalid_argument("config: M=" + std::to_string(M) + " exceeds " + std::to_string(kDeskScaleMaxM) +
                                  "; set allow_large to opt in");
    }
  }
  for (const double mu : mu_list) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("config: mu values must be finite and >= 0");
  }
  if (ensemble_seeds.empty()) throw std::invalid_argument("config: ensemble_seeds is empty");
  if (!(histogram_bin_width > 0.0)) throw std::invalid_argument("config: histogram_bin_width must be > 0");
  if (husimi_resolution < 1 || classical_resolution < 1) {
    throw std::invalid_argument("config: resolutions must be positive");
  }
  if (classical_t_max < 1 || coupled_steps < 1) throw std::invalid_argument("config: t_max and coupled_steps >= 1");
  if (!(delta_real > 0.0) || !(pair_tol > 0.0)) throw std::invalid_argument("config: tolerances must be > 0");
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  if (!std::is_sorted(transition_mu_factors.begin(), transition_mu_factors.end())) {
    throw std::invalid_argument("config: transition_mu_factors must be ascending");
  }
}

std::vector<std::uint64_t> ExperimentConfig::seeds_used() const {
  if (dynamics == DynamicsKind::kicked_rotator) return {ensemble_seeds.front()};
  return ensemble_seeds;
}

void to_json(json& j, const ExperimentConfig& c) {
  std::vector<std::string> obs;
  for (const Observable o : c.observables) obs.push_back(to_string(o));
  j = json{
      {"dynamics", c.dynamics == DynamicsKind::kicked_rotator ? "kicked_rotator" : "coe"},
      {"k", c.k},
      {"thouless_energy", c.thouless_energy},
      {"mu_list", c.mu_list},
      {"m_list", c.m_list},
      {"ensemble_seeds", c.ensemble_seeds},
      {"observables", obs},
      {"output_dir", c.output_dir.string()},
      {"histogram_bin_width", c.histogram_bin_width},
      {"husimi_resolution", c.husimi_resolution},
      {"classical_resolution", c.classical_resolution},
      {"classical_t_max", c.classical_t_max},
      {"coupled_steps", c.coupled_steps},
      {"box_scales", c.box_scales},
      {"transition_mu_factors", c.transition_mu_factors},
      {"delta_real", c.delta_real},
      {"pair_tol", c.pair_tol},
      {"threads", c.threads},
      {"allow_large", c.allow_large},
  };
}

void from_json(const json& j, ExperimentConfig& c) {
  static const std::set<std::string> known{
      "dynamics",         "k",
      "thouless_energy",  "mu_list",
      "m_list",           "ensemble_seeds",
      "observables",      "output_dir",
      "histogram_bin_width", "husimi_resolution",
      "classical_resolution", "classical_t_max",
      "coupled_steps",    "box_scales",
      "transition_mu_factors", "delta_real",
      "pair_tol",         "threads",
      "allow_large",
  };
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  if (j.contains("dynamics")) {
    const auto d = j.at("dynamics").get<std::string>();
    if (d == "kicked_rotator") {
      c.dynamics = DynamicsKind::kicked_rotator;
    } else if (d == "coe") {
      c.dynamics = DynamicsKind::coe;
    } else {
      throw std::invalid_argument("config: dynamics must be 'kicked_rotator' or 'coe'");
    }
  }
  auto read = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  read("k", c.k);
  read("thouless_energy", c.thouless_energy);
  read("mu_list", c.mu_list);
  read("m_list", c.m_list);
  read("ensemble_seeds", c.ensemble_seeds);
  if (j.contains("observables")) {
    c.observables.clear();
    for (const auto& o : j.at("observables")) c.observables.insert(observable_from_string(o.get<std::string>()));
  }
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  read("histogram_bin_width", c.histogram_bin_width);
  read("husimi_resolution", c.husimi_resolution);
  read("classical_resolution", c.classical_resolution);
  read("classical_t_max", c.classical_t_max);
  read("coupled_steps", c.coupled_steps);
  read("box_scales", c.box_scales);
  read("transition_mu_factors", c.transition_mu_factors);
  read("delta_real", c.delta_real);
  read("pair_tol", c.pair_tol);
  read("threads", c.threads);
  read("allow_large", c.allow_large);
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config '" + path.string() + "': " + e.what());
  }
  ExperimentConfig c;
  from_json(j, c);
  return c;
}

std::string config_hash(const ExperimentConfig& c) {
  json j = c;
  // Scheduling and destination do not change results.
  j.erase("threads");
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t RunManifest::failed_count() const {
  return static_cast<std::size_t>(std::count_if(tasks.begin(), tasks.end(), [](const TaskRecord& t) { return !t.ok; }));
}

std::optional<double> RunManifest::max_solver_residual() const {
  std::optional<double> out;
  for (const auto& t : tasks) {
    if (t.max_residual) out = std::max(out.value_or(0.0), *t.max_residual);
  }
  return out;
}

void to_json(json& j, const RunManifest& m) {
  json tasks = json::array();
  for (const auto& t : m.tasks) {
    json row{{"key", t.key}, {"status", t.ok ? "ok" : "failed"}, {"wall_seconds", t.wall_seconds},
             {"outputs", t.outputs}};
    if (t.max_residual) row["max_residual"] = *t.max_residual;
    if (t.trace_residual) row["trace_residual"] = *t.trace_residual;
    if (t.log_det_residual) row["log_det_residual"] = *t.log_det_residual;
    if (t.pairing_mismatch) row["pairing_mismatch"] = *t.pairing_mismatch;
    if (!t.note.empty()) row["note"] = t.note;
    tasks.push_back(std::move(row));
  }
  json systems = json::array();
  for (const auto& s : m.systems) systems.push_back({{"M", s.M}, {"N", s.N}, {"strip_width", s.strip_width}});
  j = json{{"config_hash", m.config_hash},
           {"version", m.version},
           {"thouless_energy", m.thouless_energy},
           {"systems", std::move(systems)},
           {"failed_tasks", m.failed_count()},
           {"tasks", std::move(tasks)}};
  if (const auto r = m.max_solver_residual()) j["max_solver_residual"] = *r;
}

namespace {

struct SpectralPoint {
  int M = 0;
  double mu = 0.0;
  std::uint64_t seed = 0;
};

// What the aggregate stage needs from one diagonalization.
struct SpectralSummary {
  std::vector<double> im_e;
  double f_amplified = 0.0;
  double f_real = 0.0;
};

class Sweep {
 public:
  explicit Sweep(const ExperimentConfig& config) : config_(config) {}

  RunManifest run();

 private:
  using Task = std::function<void(TaskRecord&)>;

  void add(std::string key, Task task) { tasks_.push_back({std::move(key), std::move(task)}); }
  std::vector<TaskRecord> execute(std::vector<std::pair<std::string, Task>>& tasks) const;

  SystemParams params_for(int M, double mu, std::uint64_t seed) const;
  std::string system_tag(int M, double mu, std::optional<std::uint64_t> seed) const;
  std::string write(const std::string& name, const std::function<void(const fs::path&)>& writer) const;

  void spectral_task(const SpectralPoint& point, std::size_t slot, TaskRecord& rec);
  void husimi_task(int M, double mu, TaskRecord& rec) const;
  void classical_task(double strip_width, TaskRecord& rec) const;
  void transition_task(int M, std::uint64_t seed, std::size_t slot, TaskRecord& rec);

  void histogram_aggregate(int M, double mu, TaskRecord& rec) const;
  void fraction_aggregate(TaskRecord& rec) const;
  void scaling_aggregate(double mu, TaskRecord& rec) const;
  void transition_aggregate(TaskRecord& rec) const;

  bool wants(Observable o) const { return config_.observables.contains(o); }
  std::vector<std::size_t> slots_for(int M, double mu) const;

  const ExperimentConfig& config_;
  std::vector<std::pair<std::string, Task>> tasks_;
  std::vector<SpectralPoint> points_;
  std::vector<std::optional<SpectralSummary>> summaries_;
  std::vector<std::pair<int, std::uint64_t>> transition_points_;
  std::vector<std::optional<std::vector<double>>> transition_results_;
};

SystemParams Sweep::params_for(int M, double mu, std::uint64_t seed) const {
  SystemParams p;
  p.M = M;
  p.N = config_.channels_for(M);
  p.mu = mu;
  p.seed = seed;
  if (config_.dynamics == DynamicsKind::kicked_rotator) {
    p.dynamics = KickedRotator{config_.k};
  } else {
    p.dynamics = Coe{};
  }
  return p;
}

std::string Sweep::system_tag(int M, double mu, std::optional<std::uint64_t> seed) const {
  std::string tag = "M" + std::to_string(M) + "_mu" + fmt_g(mu);
  if (seed && config_.dynamics == DynamicsKind::coe) tag += "_seed" + std::to_string(*seed);
  return tag;
}

std::string Sweep::write(const std::string& name, const std::function<void(const fs::path&)>& writer) const {
  writer(config_.output_dir / name);
  return name;
}

std::vector<TaskRecord> Sweep::execute(std::vector<std::pair<std::string, Task>>& tasks) const {
  std::vector<TaskRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      TaskRecord& rec = records[i];
      rec.key = tasks[i].first;
      const auto start = std::chrono::steady_clock::now();
      try {
        tasks[i].second(rec);
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.note = e.what();
      }
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(config_.threads), tasks.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  return records;
}

void Sweep::spectral_task(const SpectralPoint& point, std::size_t slot, TaskRecord& rec) {
  const SystemParams params = params_for(point.M, point.mu, point.seed);
  const ComplexMatrix map = build_pt_map(params);
  const Complex trace = map.trace();
  const Spectrum spec = eigendecompose(map, false);

  const Complex sum = std::accumulate(spec.lambdas.begin(), spec.lambdas.end(), Complex(0.0));
  rec.trace_residual = std::abs(sum - trace) / std::max(1.0, std::abs(trace));
  double log_det = 0.0;
  double largest = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    log_det += spec.quasienergies[i].imag();
    largest = std::max(largest, std::abs(spec.lambdas[i]));
  }
  rec.log_det_residual = std::abs(log_det);
  try {
    rec.pairing_mismatch = pair_match(spec.lambdas, config_.pair_tol * largest).worst_mismatch;
  } catch (const PtSymmetryViolation& e) {
    rec.pairing_mismatch = e.worst_mismatch;
    rec.note = e.what();
  }

  if (wants(Observable::spectrum)) {
    rec.outputs.push_back(write("spectrum_" + system_tag(point.M, point.mu, point.seed) + ".csv",
                                [&](const fs::path& p) { emit_spectrum_csv(spec, p); }));
  }
  SpectralSummary summary;
  summary.im_e.reserve(spec.size());
  for (const Complex e : spec.quasienergies) summary.im_e.push_back(e.imag());
  summary.f_amplified = fraction_amplified(spec, point.mu, config_.delta_real);
  summary.f_real = fraction_real(spec, config_.delta_real);
  summaries_[slot] = std::move(summary);
}

void Sweep::husimi_task(int M, double mu, TaskRecord& rec) const {
  const SystemParams params = params_for(M, mu, config_.ensemble_seeds.front());
  const Spectrum spec = eigendecompose(build_pt_map(params), true);
  rec.max_residual = spec.max_residual;
  const SpectralClassification cls = classify(spec, mu, config_.delta_real);
  const int res = config_.husimi_resolution;

  std::ofstream summary;
  const std::string summary_name = "husimi_" + system_tag(M, mu, std::nullopt) + "_summary.csv";
  const fs::path summary_path = config_.output_dir / summary_name;
  summary.open(summary_path);
  if (!summary) throw IoError("cannot open '" + summary_path.string() + "' for writing");
  summary << "class,states,mass_L,mass_R\n";

  const std::pair<const char*, const std::vector<std::size_t>*> classes[] = {
      {"amplified", &cls.amplified}, {"neutral", &cls.neutral}, {"decaying", &cls.decaying}};
  for (const auto& [name, indices] : classes) {
    ComplexMatrix vectors(2 * M, static_cast<Eigen::Index>(indices->size()));
    for (std::size_t c = 0; c < indices->size(); ++c) {
      vectors.col(static_cast<Eigen::Index>(c)) = spec.eigenvectors->col(static_cast<Eigen::Index>((*indices)[c]));
    }
    const HusimiGrid grid = husimi_map(orthonormal_subspace_basis(vectors), M, res, res);
    const std::string stem = "husimi_" + system_tag(M, mu, std::nullopt) + "_" + name;
    rec.outputs.push_back(write(stem + "_L.csv", [&](const fs::path& p) { emit_grid_csv(grid.values_L, p); }));
    rec.outputs.push_back(write(stem + "_R.csv", [&](const fs::path& p) { emit_grid_csv(grid.values_R, p); }));
    rec.outputs.push_back(write(stem + "_L.pgm", [&](const fs::path& p) { emit_grid_pgm(grid.values_L, p); }));
    rec.outputs.push_back(write(stem + "_R.pgm", [&](const fs::path& p) { emit_grid_pgm(grid.values_R, p); }));
    summary << name << ',' << indices->size() << ',' << format_exact(grid.mass_L() * grid.cell_area() * M) << ','
            << format_exact(grid.mass_R() * grid.cell_area() * M) << '\n';
  }
  summary.flush();
  if (!summary) throw IoError("write failed for '" + summary_path.string() + "'");
  rec.outputs.push_back(summary_name);
}

void Sweep::classical_task(double strip_width, TaskRecord& rec) const {
  const int res = config_.classical_resolution;
  const std::string tag = "strip" + fmt_g(strip_width);
  std::vector<int> scales;
  for (const int s : config_.box_scales) {
    if (res % s == 0) scales.push_back(s);
  }

  const fs::path summary_path = config_.output_dir / ("classical_" + tag + ".csv");
  std::ofstream summary(summary_path);
  if (!summary) throw IoError("cannot open '" + summary_path.string() + "' for writing");
  summary << "direction,t_max,trapped_fraction,box_dimension,box_dimension_stderr";
  for (int t = 1; t <= config_.coupled_steps; ++t) summary << ",coupled_within_" << t;
  summary << '\n';

  for (const Direction dir : {Direction::backward, Direction::forward}) {
    const char* name = dir == Direction::backward ? "backward" : "forward";
    const PassageTimeGrid grid = coupled_regions(config_.k, strip_width, config_.classical_t_max, res, res, dir);
    const BinaryGrid trapped = trapped_set_indicator(grid);

    // Coupled-region map: brightest for t = 1, dark beyond coupled_steps.
    Eigen::MatrixXd coupled(res, res);
    for (int i = 0; i < res; ++i) {
      for (int j = 0; j < res; ++j) {
        const int t = grid.at(i, j);
        coupled(i, j) = t <= config_.coupled_steps ? static_cast<double>(config_.coupled_steps + 1 - t) : 0.0;
      }
    }
    const std::string stem = std::string("classical_") + tag + "_" + name;
    rec.outputs.push_back(write(stem + "_passage.csv", [&](const fs::path& p) { emit_grid_csv(grid, p); }));
    rec.outputs.push_back(write(stem + "_coupled.pgm", [&](const fs::path& p) { emit_grid_pgm(coupled, p); }));
    rec.outputs.push_back(write(stem + "_trapped.pgm", [&](const fs::path& p) { emit_grid_pgm(trapped, p); }));

    summary << name << ',' << config_.classical_t_max << ','
            << format_exact(static_cast<double>(trapped.count()) / static_cast<double>(trapped.cells.size())) << ',';
    if (trapped.count() > 0 && scales.size() >= 3) {
      const Estimate dim = box_counting_dimension(trapped, scales);
      summary << format_exact(dim.value) << ',' << format_exact(dim.error);
    } else {
      summary << "nan,nan";
    }
    for (int t = 1; t <= config_.coupled_steps; ++t) summary << ',' << format_exact(grid.coupled_fraction(t));
    summary << '\n';
  }
  summary.flush();
  if (!summary) throw IoError("write failed for '" + summary_path.string() + "'");
  rec.outputs.push_back(summary_path.filename().string());
}

void Sweep::transition_task(int M, std::uint64_t seed, std::size_t slot, TaskRecord& rec) {
  const SystemParams params = params_for(M, 0.0, seed);
  std::vector<double> grid;
  for (const double f : config_.transition_mu_factors) grid.push_back(f * params.critical_mu());
  transition_results_[slot] = critical_mu_scan(params, grid, config_.delta_real);
  rec.note = "mu_c=" + format_exact(params.critical_mu());
}

std::vector<std::size_t> Sweep::slots_for(int M, double mu) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].M == M && points_[i].mu == mu && summaries_[i]) out.push_back(i);
  }
  return out;
}

void Sweep::histogram_aggregate(int M, double mu, TaskRecord& rec) const {
  std::vector<double> samples;
  for (const std::size_t i : slots_for(M, mu)) {
    samples.insert(samples.end(), summaries_[i]->im_e.begin(), summaries_[i]->im_e.end());
  }
  if (samples.empty()) throw std::runtime_error("no successful spectra for this (M, mu)");
  const Histogram h = im_e_histogram(std::span<const double>(samples), config_.histogram_bin_width);
  rec.outputs.push_back(write("histogram_" + system_tag(M, mu, std::nullopt) + ".csv", [&](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    out << "center,mass,density\n";
    for (std::size_t b = 0; b < h.centers.size(); ++b) {
      out << format_exact(h.centers[b]) << ',' << format_exact(h.mass[b]) << ',' << format_exact(h.density[b]) << '\n';
    }
    if (!out) throw IoError("write failed for '" + p.string() + "'");
  }));
}

namespace {

struct MeanErr {
  double mean = 0.0;
  double err = 0.0;
};

MeanErr mean_and_error(const std::vector<double>& xs) {
  MeanErr out;
  if (xs.empty()) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (const double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.err = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return out;
}

}  // namespace

void Sweep::fraction_aggregate(TaskRecord& rec) const {
  rec.outputs.push_back(write("fraction.csv", [&](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    out << "M,N,mu,realizations,f_amplified,f_amplified_stderr,f_real,f_real_stderr\n";
    for (const int M : config_.m_list) {
      for (const double mu : config_.mu_list) {
        std::vector<double> fa, fr;
        for (const std::size_t i : slots_for(M, mu)) {
          fa.push_back(summaries_[i]->f_amplified);
          fr.push_back(summaries_[i]->f_real);
        }
        if (fa.empty()) continue;
        const MeanErr a = mean_and_error(fa);
        const MeanErr r = mean_and_error(fr);
        out << M << ',' << config_.channels_for(M) << ',' << format_exact(mu) << ',' << fa.size() << ','
            << format_exact(a.mean) << ',' << format_exact(a.err) << ',' << format_exact(r.mean) << ','
            << format_exact(r.err) << '\n';
      }
    }
    if (!out) throw IoError("write failed for '" + p.string() + "'");
  }));
}

void Sweep::scaling_aggregate(double mu, TaskRecord& rec) const {
  std::vector<ScalingFit::Point> points;
  for (const int M : config_.m_list) {
    std::vector<double> fa;
    for (const std::size_t i : slots_for(M, mu)) fa.push_back(summaries_[i]->f_amplified);
    if (fa.empty()) throw std::runtime_error("missing spectra for M=" + std::to_string(M));
    points.push_back({static_cast<double>(M), mean_and_error(fa).mean});
  }
  const ScalingFit fit = fit_power_law(points);
  const Estimate dim = estimate_fractal_dimension(fit);
  rec.outputs.push_back(write("scaling_mu" + fmt_g(mu) + ".csv", [&](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    out << "# mu=" << format_exact(mu) << " a=" << format_exact(fit.exponent_a)
        << " stderr_a=" << format_exact(fit.stderr_a) << " intercept=" << format_exact(fit.intercept)
        << " d_H=" << format_exact(dim.value) << " d_H_stderr=" << format_exact(dim.error) << '\n';
    out << "M,f_amplified\n";
    for (const auto& pt : fit.points) out << format_exact(pt.M) << ',' << format_exact(pt.fraction) << '\n';
    if (!out) throw IoError("write failed for '" + p.string() + "'");
  }));
  rec.note = "a=" + format_exact(fit.exponent_a) + " stderr=" + format_exact(fit.stderr_a);
}

void Sweep::transition_aggregate(TaskRecord& rec) const {
  rec.outputs.push_back(write("transition.csv", [&](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    out << "M,N,mu_over_mu_c,mu,realizations,f_real,f_real_stderr\n";
    for (const int M : config_.m_list) {
      const double mu_c = std::sqrt(static_cast<double>(config_.channels_for(M))) / M;
      for (std::size_t f = 0; f < config_.transition_mu_factors.size(); ++f) {
        std::vector<double> values;
        for (std::size_t i = 0; i < transition_points_.size(); ++i) {
          if (transition_points_[i].first == M && transition_results_[i]) values.push_back((*transition_results_[i])[f]);
        }
        if (values.empty()) continue;
        const MeanErr m = mean_and_error(values);
        const double factor = config_.transition_mu_factors[f];
        out << M << ',' << config_.channels_for(M) << ',' << format_exact(factor) << ','
            << format_exact(factor * mu_c) << ',' << values.size() << ',' << format_exact(m.mean) << ','
            << format_exact(m.err) << '\n';
      }
    }
    if (!out) throw IoError("write failed for '" + p.string() + "'");
  }));
}

RunManifest Sweep::run() {
  config_.validate();
  fs::create_directories(config_.output_dir);

  const bool spectral = wants(Observable::spectrum) || wants(Observable::histogram) ||
                        wants(Observable::fraction) || wants(Observable::scaling);
  if (spectral) {
    for (const int M : config_.m_list) {
      for (const double mu : config_.mu_list) {
        for (const std::uint64_t seed : config_.seeds_used()) points_.push_back({M, mu, seed});
      }
    }
  }
  summaries_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const SpectralPoint pt = points_[i];
    add("spectrum/" + system_tag(pt.M, pt.mu, pt.seed), [this, pt, i](TaskRecord& rec) { spectral_task(pt, i, rec); });
  }
  if (wants(Observable::husimi)) {
    for (const int M : config_.m_list) {
      for (const double mu : config_.mu_list) {
        add("husimi/" + system_tag(M, mu, std::nullopt), [this, M, mu](TaskRecord& rec) { husimi_task(M, mu, rec); });
      }
    }
  }
  if (wants(Observable::classical)) {
    std::set<double> widths;
    for (const int M : config_.m_list) widths.insert(config_.strip_width_for(M));
    for (const double w : widths) {
      if (config_.dynamics != DynamicsKind::kicked_rotator) {
        add("classical/strip" + fmt_g(w), [](TaskRecord&) {
          throw std::invalid_argument("classical observables need kicked_rotator dynamics");
        });
        continue;
      }
      if (w >= 1.0) {
        add("classical/strip" + fmt_g(w), [](TaskRecord& rec) { rec.note = "strip covers the torus; skipped"; });
        continue;
      }
      add("classical/strip" + fmt_g(w), [this, w](TaskRecord& rec) { classical_task(w, rec); });
    }
  }
  if (wants(Observable::transition)) {
    for (const int M : config_.m_list) {
      for (const std::uint64_t seed : config_.seeds_used()) transition_points_.emplace_back(M, seed);
    }
    transition_results_.resize(transition_points_.size());
    for (std::size_t i = 0; i < transition_points_.size(); ++i) {
      const auto [M, seed] = transition_points_[i];
      std::string key = "transition/M" + std::to_string(M);
      if (config_.dynamics == DynamicsKind::coe) key += "_seed" + std::to_string(seed);
      add(key, [this, M, seed, i](TaskRecord& rec) { transition_task(M, seed, i, rec); });
    }
  }

  RunManifest manifest;
  manifest.config_hash = config_hash(config_);
  manifest.version = version_string();
  manifest.thouless_energy = config_.thouless_energy;
  manifest.tasks = execute(tasks_);

  std::vector<std::pair<std::string, Task>> aggregates;
  if (wants(Observable::histogram)) {
    for (const int M : config_.m_list) {
      for (const double mu : config_.mu_list) {
        aggregates.push_back({"histogram/" + system_tag(M, mu, std::nullopt),
                              [this, M, mu](TaskRecord& rec) { histogram_aggregate(M, mu, rec); }});
      }
    }
  }
  if (wants(Observable::fraction)) {
    aggregates.push_back({"fraction", [this](TaskRecord& rec) { fraction_aggregate(rec); }});
  }
  if (wants(Observable::scaling)) {
    for (const double mu : config_.mu_list) {
      aggregates.push_back({"scaling/mu" + fmt_g(mu), [this, mu](TaskRecord& rec) { scaling_aggregate(mu, rec); }});
    }
  }
  if (wants(Observable::transition)) {
    aggregates.push_back({"transition", [this](TaskRecord& rec) { transition_aggregate(rec); }});
  }
  for (auto& rec : execute(aggregates)) manifest.tasks.push_back(std::move(rec));

  for (const int M : config_.m_list) {
    const RunManifest::System sys{M, config_.channels_for(M), config_.strip_width_for(M)};
    if (sys.strip_width != static_cast<double>(sys.N) / M) throw std::logic_error("strip width and N/M disagree");
    manifest.systems.push_back(sys);
  }

  const fs::path manifest_path = config_.output_dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot open '" + manifest_path.string() + "' for writing");
  out << json(manifest).dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + manifest_path.string() + "'");
  return manifest;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& config) { return Sweep(config).run(); }

}  // namespace ptmap
