#include "ptmap/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ptmap {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

double wrap_unit_interval(double x) {
  const double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

double torus_distance(PhasePoint a, PhasePoint b) {
  auto circular = [](double d) { return std::abs(d - std::round(d)); };
  return std::max(circular(a.q - b.q), circular(a.p - b.p));
}

PhasePoint classical_step(PhasePoint pt, double k) {
  const double kick = k / (2.0 * two_pi);
  const double s = std::sin(two_pi * pt.q);
  const double q = wrap_unit_interval(pt.q + pt.p + kick * s);
  const double p = wrap_unit_interval(pt.p + kick * (s + std::sin(two_pi * q)));
  return {q, p};
}

PhasePoint classical_inverse(PhasePoint pt, double k) {
  const double kick = k / (2.0 * two_pi);
  const double s_next = std::sin(two_pi * pt.q);
  const double q = wrap_unit_interval(pt.q - pt.p + kick * s_next);
  const double p = wrap_unit_interval(pt.p - kick * (std::sin(two_pi * q) + s_next));
  return {q, p};
}

double PassageTimeGrid::coupled_fraction(int t) const {
  if (first_passage.empty()) return 0.0;
  const auto hits = std::count_if(first_passage.begin(), first_passage.end(), [t](int v) { return v <= t; });
  return static_cast<double>(hits) / static_cast<double>(first_passage.size());
}

PassageTimeGrid coupled_regions(double k, double strip_width, int t_max, int n_q, int n_p, Direction direction) {
  if (!(strip_width > 0.0 && strip_width < 1.0)) {
    throw std::invalid_argument("coupled_regions: strip_width must lie in (0, 1)");
  }
  if (t_max < 1) throw std::invalid_argument("coupled_regions: t_max must be >= 1");
  if (n_q < 1 || n_p < 1) throw std::invalid_argument("coupled_regions: resolution must be positive");

  PassageTimeGrid grid;
  grid.n_q = n_q;
  grid.n_p = n_p;
  grid.t_max = t_max;
  grid.direction = direction;
  grid.strip_width = strip_width;
  grid.first_passage.assign(static_cast<std::size_t>(n_q) * n_p, PassageTimeGrid::kNever);

  const auto advance = direction == Direction::forward ? classical_step : classical_inverse;
  for (int i = 0; i < n_q; ++i) {
    for (int j = 0; j < n_p; ++j) {
      PhasePoint x = grid.cell_center(i, j);
      for (int t = 1; t <= t_max; ++t) {
        x = advance(x, k);
        if (x.q < strip_width) {
          grid.first_passage[static_cast<std::size_t>(i) * n_p + j] = t;
          break;
        }
      }
    }
  }
  return grid;
}

std::size_t BinaryGrid::count() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](std::uint8_t c) { return c != 0; }));
}

BinaryGrid trapped_set_indicator(const PassageTimeGrid& grid) {
  BinaryGrid out{grid.n_q, grid.n_p, std::vector<std::uint8_t>(grid.first_passage.size())};
  std::transform(grid.first_passage.begin(), grid.first_passage.end(), out.cells.begin(),
                 [](int v) { return static_cast<std::uint8_t>(v == PassageTimeGrid::kNever); });
  return out;
}

Estimate box_counting_dimension(const BinaryGrid& indicator, std::span<const int> scales) {
  if (scales.size() < 3) throw std::invalid_argument("box_counting_dimension: need at least 3 scales");
  if (indicator.count() == 0) throw std::invalid_argument("box_counting_dimension: empty indicator");

  std::vector<ScalingFit::Point> points;
  for (const int s : scales) {
    if (s < 1 || indicator.n_q % s != 0 || indicator.n_p % s != 0) {
      throw std::invalid_argument("box_counting_dimension: scale " + std::to_string(s) +
                                  " does not divide the grid resolution");
    }
    const int bq = indicator.n_q / s;
    const int bp = indicator.n_p / s;
    std::vector<std::uint8_t> occupied(static_cast<std::size_t>(bq) * bp, 0);
    for (int i = 0; i < indicator.n_q; ++i) {
      for (int j = 0; j < indicator.n_p; ++j) {
        if (indicator.at(i, j)) occupied[static_cast<std::size_t>(i / s) * bp + j / s] = 1;
      }
    }
    const auto n_boxes = std::count(occupied.begin(), occupied.end(), std::uint8_t{1});
    // Box edge in torus units is s / n_q; the fit below uses M := 1/edge.
    points.push_back({static_cast<double>(indicator.n_q) / s, static_cast<double>(n_boxes)});
  }
  // ln N = c + D ln(1/edge), i.e. a power law with exponent -D.
  const ScalingFit fit = fit_power_law(points);
  return {-fit.exponent_a, fit.stderr_a};
}

}  // namespace ptmap
