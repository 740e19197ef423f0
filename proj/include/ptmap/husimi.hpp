#pragma once

// Husimi phase-space densities on the unit torus.
//
// Coherent states are periodized symmetric Gaussians of width 1/sqrt(M) in
// both q and p. Grids are evaluated at q_i = i / n_q, p_j = j / n_p, so the
// map p -> -p mod 1 sends grid points onto grid points.

#include <Eigen/Dense>

#include "ptmap/operators.hpp"

namespace ptmap {

struct CoherentState {
  double q0 = 0.0;
  double p0 = 0.0;
  ComplexVector amplitudes;
};

/// Number of winding images kept on either side of the central Gaussian.
inline constexpr int kWindingCutoff = 3;

/// |q0, p0> on an M-site torus; q0 and p0 are reduced mod 1.
CoherentState coherent_state(int M, double q0, double p0);

/// Orthonormal basis (columns) of the span of `vectors` (columns), via
/// column-pivoted Householder QR. Throws std::invalid_argument if the columns
/// are numerically dependent.
ComplexMatrix orthonormal_subspace_basis(const ComplexMatrix& vectors, double rank_threshold = 1e-10);

struct HusimiGrid {
  int n_q = 0;
  int n_p = 0;
  /// Indexed (i_q, j_p).
  Eigen::MatrixXd values_L;
  Eigen::MatrixXd values_R;

  double mass_L() const { return values_L.sum(); }
  double mass_R() const { return values_R.sum(); }
  double cell_area() const { return 1.0 / (static_cast<double>(n_q) * n_p); }
};

/// Summed Husimi densities of the absorbing (first M) and amplifying (last M)
/// halves of every basis column. Sub-blocks are not renormalized.
HusimiGrid husimi_map(const ComplexMatrix& basis, int M, int n_q, int n_p);

/// values_L'(q, p) = values_R(q, -p), values_R'(q, p) = values_L(q, -p).
HusimiGrid pt_transform_grid(const HusimiGrid& grid);

/// sum |a - b| / sum |b| over both halves.
double relative_l1_distance(const HusimiGrid& a, const HusimiGrid& b);

}  // namespace ptmap
