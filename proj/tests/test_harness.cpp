#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <unistd.h>

#include "ptmap/harness.hpp"
#include "ptmap/io.hpp"

using namespace ptmap;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ptmap_test_harness_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const TaskRecord* find_task(const RunManifest& m, const std::string& key) {
  for (const auto& t : m.tasks) {
    if (t.key == key) return &t;
  }
  return nullptr;
}

// Every file except the manifest, which carries wall-clock timings.
std::vector<std::pair<std::string, std::string>> result_files(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() == "manifest.json") continue;
    out.emplace_back(e.path().filename().string(), slurp(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("config: json round trip and defaults") {
  ExperimentConfig c;
  c.dynamics = DynamicsKind::coe;
  c.mu_list = {0.1, 0.3};
  c.m_list = {50, 100};
  c.ensemble_seeds = {3, 4, 5};
  c.observables = {Observable::histogram, Observable::transition};
  c.output_dir = "somewhere";
  c.threads = 3;
  const json j = c;
  const ExperimentConfig back = j.get<ExperimentConfig>();
  CHECK(json(back) == j);
  CHECK(back.seeds_used().size() == 3);

  const ExperimentConfig defaults = json::object().get<ExperimentConfig>();
  CHECK(json(defaults) == json(ExperimentConfig{}));
  CHECK(defaults.seeds_used().size() == 1);
}

TEST_CASE("config: unknown keys and bad values are rejected") {
  CHECK_THROWS_WITH_AS(json({{"mu_lsit", {0.1}}}).get<ExperimentConfig>(), doctest::Contains("mu_lsit"),
                       std::invalid_argument);
  CHECK_THROWS_AS(json({{"dynamics", "gue"}}).get<ExperimentConfig>(), std::invalid_argument);
  CHECK_THROWS_AS(json({{"observables", {"spectra"}}}).get<ExperimentConfig>(), std::invalid_argument);

  ExperimentConfig big;
  big.m_list = {2001};
  CHECK_THROWS_WITH_AS(big.validate(), doctest::Contains("allow_large"), std::invalid_argument);
  big.allow_large = true;
  CHECK_NOTHROW(big.validate());

  ExperimentConfig tiny;
  tiny.m_list = {2};
  tiny.thouless_energy = 0.2;
  CHECK_THROWS_WITH_AS(tiny.validate(), doctest::Contains("round(E_T*M) < 1"), std::invalid_argument);

  ExperimentConfig neg;
  neg.mu_list = {-0.1};
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("config: load_config reads a file and reports parse errors") {
  const fs::path dir = fresh_dir("load");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "ok.json") << R"({"m_list": [60], "mu_list": [0.2], "observables": ["spectrum"]})";
    std::ofstream(dir / "bad.json") << "{ not json";
  }
  const ExperimentConfig c = load_config(dir / "ok.json");
  CHECK(c.m_list == std::vector<int>{60});
  CHECK(c.observables.size() == 1);
  CHECK_THROWS_WITH_AS(load_config(dir / "bad.json"), doctest::Contains("bad.json"), std::invalid_argument);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), IoError);
}

TEST_CASE("config_hash ignores threads and output_dir only") {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.threads = 4;
  b.output_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.mu_list = {0.41};
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("run: mu=0 spectrum lies on the unit circle") {
  ExperimentConfig c;
  c.m_list = {100};
  c.mu_list = {0.0};
  c.observables = {Observable::spectrum};
  c.output_dir = fresh_dir("mu0");
  const RunManifest m = run_experiment(c);
  CHECK(m.failed_count() == 0);
  REQUIRE(m.tasks.size() == 1);
  CHECK(m.tasks[0].key == "spectrum/M100_mu0");
  REQUIRE(m.tasks[0].outputs.size() == 1);
  const Spectrum s = read_spectrum_csv(c.output_dir / m.tasks[0].outputs[0]);
  CHECK(s.size() == 200);
  for (const Complex l : s.lambdas) CHECK(std::abs(std::abs(l) - 1.0) < 1e-10);
  CHECK(*m.tasks[0].trace_residual < 1e-10);
  CHECK(*m.tasks[0].log_det_residual < 1e-8);
  CHECK(*m.tasks[0].pairing_mismatch < 1e-7);

  const json manifest = json::parse(slurp(c.output_dir / "manifest.json"));
  CHECK(manifest.at("config_hash") == config_hash(c));
  CHECK(manifest.at("systems").at(0).at("N") == 20);
  CHECK(manifest.at("systems").at(0).at("strip_width") == 0.2);
  CHECK(manifest.at("failed_tasks") == 0);
}

TEST_CASE("run: outputs are identical across reruns and thread counts") {
  ExperimentConfig c;
  c.dynamics = DynamicsKind::coe;
  c.m_list = {30, 40, 50};
  c.mu_list = {0.2, 0.5};
  c.ensemble_seeds = {1, 2};
  c.observables = {Observable::spectrum, Observable::histogram, Observable::fraction, Observable::scaling,
                   Observable::transition};
  c.output_dir = fresh_dir("serial");
  const RunManifest serial = run_experiment(c);
  CHECK(serial.failed_count() == 0);

  ExperimentConfig again = c;
  again.output_dir = fresh_dir("again");
  run_experiment(again);

  ExperimentConfig threaded = c;
  threaded.threads = 3;
  threaded.output_dir = fresh_dir("threaded");
  const RunManifest par = run_experiment(threaded);
  CHECK(par.config_hash == serial.config_hash);

  const auto files = result_files(c.output_dir);
  CHECK(files.size() == 3 * 2 * 2 + 3 * 2 + 1 + 2 + 1);
  CHECK(files == result_files(again.output_dir));
  CHECK(files == result_files(threaded.output_dir));
  REQUIRE(par.tasks.size() == serial.tasks.size());
  for (std::size_t i = 0; i < par.tasks.size(); ++i) CHECK(par.tasks[i].key == serial.tasks[i].key);

  const std::string fraction = slurp(c.output_dir / "fraction.csv");
  CHECK(fraction.rfind("M,N,mu,realizations,f_amplified,f_amplified_stderr,f_real,f_real_stderr\n", 0) == 0);
  CHECK(fraction.find("\n30,6,0.20000000000000001,2,") != std::string::npos);
  CHECK(slurp(c.output_dir / "scaling_mu0.5.csv").rfind("# mu=0.5 a=", 0) == 0);
}

TEST_CASE("run: a failing task does not stop its siblings") {
  ExperimentConfig c;
  c.dynamics = DynamicsKind::coe;
  c.m_list = {40};
  c.mu_list = {0.3};
  c.observables = {Observable::spectrum, Observable::classical};
  c.output_dir = fresh_dir("failsoft");
  const RunManifest m = run_experiment(c);
  CHECK(m.failed_count() == 1);
  const TaskRecord* classical = find_task(m, "classical/strip0.2");
  REQUIRE(classical != nullptr);
  CHECK_FALSE(classical->ok);
  CHECK(classical->note.find("kicked_rotator") != std::string::npos);
  const TaskRecord* spectrum = find_task(m, "spectrum/M40_mu0.3_seed1");
  REQUIRE(spectrum != nullptr);
  CHECK(spectrum->ok);
  CHECK(fs::exists(c.output_dir / "spectrum_M40_mu0.3_seed1.csv"));
  const json manifest = json::parse(slurp(c.output_dir / "manifest.json"));
  CHECK(manifest.at("failed_tasks") == 1);
}

TEST_CASE("run: scaling with no amplified states fails with a clear note") {
  ExperimentConfig c;
  c.m_list = {20, 30, 40};
  c.mu_list = {0.0};
  c.observables = {Observable::scaling};
  c.output_dir = fresh_dir("noamp");
  const RunManifest m = run_experiment(c);
  const TaskRecord* scaling = find_task(m, "scaling/mu0");
  REQUIRE(scaling != nullptr);
  CHECK_FALSE(scaling->ok);
  CHECK(scaling->note.find("ensemble") != std::string::npos);
}

TEST_CASE("run: small husimi and classical tasks") {
  ExperimentConfig c;
  c.m_list = {40};
  c.mu_list = {0.4};
  c.observables = {Observable::husimi, Observable::classical};
  c.husimi_resolution = 40;
  c.classical_resolution = 100;
  c.classical_t_max = 5;
  c.box_scales = {1, 2, 4, 5, 10};
  c.output_dir = fresh_dir("husimi");
  const RunManifest m = run_experiment(c);
  CHECK(m.failed_count() == 0);

  const TaskRecord* h = find_task(m, "husimi/M40_mu0.4");
  REQUIRE(h != nullptr);
  CHECK(h->outputs.size() == 13);
  CHECK(*h->max_residual < 1e-8);
  CHECK(m.max_solver_residual() == h->max_residual);
  const Eigen::MatrixXd grid = read_grid_csv(c.output_dir / "husimi_M40_mu0.4_amplified_L.csv");
  CHECK(grid.rows() == 40);
  CHECK(grid.cols() == 40);
  CHECK(grid.minCoeff() >= 0.0);

  // Class sizes add up to the dimension and the masses to the state count.
  std::ifstream summary(c.output_dir / "husimi_M40_mu0.4_summary.csv");
  std::string line;
  std::getline(summary, line);
  CHECK(line == "class,states,mass_L,mass_R");
  int states = 0;
  while (std::getline(summary, line)) {
    const auto first = line.find(','), second = line.find(',', first + 1), third = line.find(',', second + 1);
    const int n = std::stoi(line.substr(first + 1, second - first - 1));
    const double mass = std::stod(line.substr(second + 1, third - second - 1)) + std::stod(line.substr(third + 1));
    CHECK(std::abs(mass - n) < 0.05 * std::max(n, 1) + 1e-9);
    states += n;
  }
  CHECK(states == 80);

  const TaskRecord* cl = find_task(m, "classical/strip0.2");
  REQUIRE(cl != nullptr);
  CHECK(cl->outputs.size() == 7);
  const Eigen::MatrixXd passage = read_grid_csv(c.output_dir / "classical_strip0.2_backward_passage.csv");
  CHECK(passage.rows() == 100);
  CHECK((passage.array() >= 1.0).all());
  const std::string pgm = slurp(c.output_dir / "classical_strip0.2_forward_trapped.pgm");
  CHECK(pgm.rfind("P5\n100 100\n255\n", 0) == 0);
}

TEST_CASE("run: transition scan for a small COE ensemble") {
  ExperimentConfig c;
  c.dynamics = DynamicsKind::coe;
  c.m_list = {60};
  c.ensemble_seeds = {1, 2, 3};
  c.transition_mu_factors = {0.1, 10.0};
  c.observables = {Observable::transition};
  c.output_dir = fresh_dir("transition");
  const RunManifest m = run_experiment(c);
  CHECK(m.failed_count() == 0);
  CHECK(m.tasks.size() == 4);
  std::ifstream in(c.output_dir / "transition.csv");
  std::string header, low, high;
  std::getline(in, header);
  std::getline(in, low);
  std::getline(in, high);
  CHECK(header == "M,N,mu_over_mu_c,mu,realizations,f_real,f_real_stderr");
  CHECK(low.rfind("60,12,0.10000000000000001,", 0) == 0);
  CHECK(high.rfind("60,12,10,", 0) == 0);
}

TEST_CASE("observable names round trip") {
  for (const Observable o : {Observable::spectrum, Observable::histogram, Observable::fraction, Observable::scaling,
                             Observable::husimi, Observable::classical, Observable::transition}) {
    CHECK(observable_from_string(to_string(o)) == o);
  }
  CHECK_THROWS_AS(observable_from_string("nope"), std::invalid_argument);
  CHECK(version_string().rfind("ptmap ", 0) == 0);
}
