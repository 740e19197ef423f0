#pragma once

// Classical limit of the kicked rotator on the unit torus, and the
// interface-coupled regions that organize the quantum supports.
//
// The interface strip is {q < strip_width}, strip_width = N/M, matching the
// projector onto the first N position states.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ptmap/spectra.hpp"

namespace ptmap {

struct PhasePoint {
  double q = 0.0;
  double p = 0.0;
};

/// x mod 1 in [0, 1).
double wrap_unit_interval(double x);

/// Distance between two torus points, max over the wrapped coordinates.
double torus_distance(PhasePoint a, PhasePoint b);

/// q' = q + p + (k/4pi) sin 2pi q, p' = p + (k/4pi)(sin 2pi q + sin 2pi q'), mod 1.
PhasePoint classical_step(PhasePoint pt, double k);

/// Exact inverse of classical_step.
PhasePoint classical_inverse(PhasePoint pt, double k);

enum class Direction { forward, backward };

struct PassageTimeGrid {
  static constexpr int kNever = std::numeric_limits<int>::max();

  int n_q = 0;
  int n_p = 0;
  int t_max = 0;
  Direction direction = Direction::backward;
  double strip_width = 0.0;
  /// Row-major in q: index i_q * n_p + j_p. Values in [1, t_max] or kNever.
  std::vector<int> first_passage;

  int at(int i_q, int j_p) const { return first_passage[static_cast<std::size_t>(i_q) * n_p + j_p]; }
  PhasePoint cell_center(int i_q, int j_p) const {
    return {(i_q + 0.5) / n_q, (j_p + 0.5) / n_p};
  }
  /// Fraction of cells reaching the strip within t steps.
  double coupled_fraction(int t) const;
};

/// First t >= 1 at which the orbit of each cell center lies in the strip;
/// backward uses the inverse map.
PassageTimeGrid coupled_regions(double k, double strip_width, int t_max, int n_q, int n_p, Direction direction);

struct BinaryGrid {
  int n_q = 0;
  int n_p = 0;
  std::vector<std::uint8_t> cells;  // same layout as PassageTimeGrid

  bool at(int i_q, int j_p) const { return cells[static_cast<std::size_t>(i_q) * n_p + j_p] != 0; }
  std::size_t count() const;
};

/// 1 where the strip is never reached within t_max.
BinaryGrid trapped_set_indicator(const PassageTimeGrid& grid);

/// OLS slope of ln(occupied boxes) against ln(1/box size). `scales` are box
/// edge lengths in cells and must divide both resolutions.
Estimate box_counting_dimension(const BinaryGrid& indicator, std::span<const int> scales);

}  // namespace ptmap
