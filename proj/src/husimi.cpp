#include "ptmap/husimi.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ptmap {

namespace {

double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

// Writes the normalized coherent state into `out`, reusing its storage.
void fill_coherent(int M, double q0, double p0, ComplexVector& out) {
  constexpr double pi = std::numbers::pi;
  out.resize(M);
  for (int m = 0; m < M; ++m) {
    const double x = static_cast<double>(m) / M;
    Complex sum = 0.0;
    for (int nu = -kWindingCutoff; nu <= kWindingCutoff; ++nu) {
      const double d = x - q0 - nu;
      // 2 pi M p0 (x - nu) reduced: the phase only matters mod 2 pi.
      const double phase = 2.0 * pi * std::fmod(p0 * (m - static_cast<double>(M) * nu), 1.0);
      sum += std::exp(-pi * M * d * d) * std::polar(1.0, phase);
    }
    out(m) = sum;
  }
  out.normalize();
}

}  // namespace

CoherentState coherent_state(int M, double q0, double p0) {
  if (M < 1) throw std::invalid_argument("coherent_state: M must be >= 1");
  CoherentState cs{wrap_unit(q0), wrap_unit(p0), {}};
  fill_coherent(M, cs.q0, cs.p0, cs.amplitudes);
  return cs;
}

ComplexMatrix orthonormal_subspace_basis(const ComplexMatrix& vectors, double rank_threshold) {
  const Eigen::Index k = vectors.cols();
  if (k == 0) return ComplexMatrix(vectors.rows(), 0);
  if (k > vectors.rows()) {
    throw std::invalid_argument("orthonormal_subspace_basis: " + std::to_string(k) + " vectors in dimension " +
                                std::to_string(vectors.rows()) + " cannot be independent");
  }
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(vectors);
  qr.setThreshold(rank_threshold);
  if (qr.rank() < k) {
    throw std::invalid_argument("orthonormal_subspace_basis: " + std::to_string(k) + " vectors span only rank " +
                                std::to_string(qr.rank()) + " at threshold " + std::to_string(rank_threshold));
  }
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(vectors.rows(), k);
  return q;
}

HusimiGrid husimi_map(const ComplexMatrix& basis, int M, int n_q, int n_p) {
  if (n_q < 1 || n_p < 1) throw std::invalid_argument("husimi_map: resolution must be positive");
  if (M < 1 || basis.rows() != 2 * M) {
    throw std::invalid_argument("husimi_map: basis vectors have dimension " + std::to_string(basis.rows()) +
                                ", expected 2M=" + std::to_string(2 * M));
  }
  HusimiGrid grid{n_q, n_p, Eigen::MatrixXd::Zero(n_q, n_p), Eigen::MatrixXd::Zero(n_q, n_p)};
  if (basis.cols() == 0) return grid;

  const ComplexMatrix left = basis.topRows(M);
  const ComplexMatrix right = basis.bottomRows(M);
  ComplexMatrix states(M, n_q);
  ComplexVector cs;
  for (int j = 0; j < n_p; ++j) {
    const double p = static_cast<double>(j) / n_p;
    for (int i = 0; i < n_q; ++i) {
      fill_coherent(M, static_cast<double>(i) / n_q, p, cs);
      states.col(i) = cs;
    }
    // <q,p|phi_n> for all q on this row, all n.
    const ComplexMatrix overlap_L = states.adjoint() * left;
    const ComplexMatrix overlap_R = states.adjoint() * right;
    grid.values_L.col(j) = overlap_L.cwiseAbs2().rowwise().sum();
    grid.values_R.col(j) = overlap_R.cwiseAbs2().rowwise().sum();
  }
  return grid;
}

HusimiGrid pt_transform_grid(const HusimiGrid& grid) {
  HusimiGrid out{grid.n_q, grid.n_p, Eigen::MatrixXd(grid.n_q, grid.n_p), Eigen::MatrixXd(grid.n_q, grid.n_p)};
  for (int j = 0; j < grid.n_p; ++j) {
    const int mirrored = (grid.n_p - j) % grid.n_p;
    out.values_L.col(j) = grid.values_R.col(mirrored);
    out.values_R.col(j) = grid.values_L.col(mirrored);
  }
  return out;
}

double relative_l1_distance(const HusimiGrid& a, const HusimiGrid& b) {
  if (a.n_q != b.n_q || a.n_p != b.n_p) throw std::invalid_argument("relative_l1_distance: resolution mismatch");
  const double diff = (a.values_L - b.values_L).cwiseAbs().sum() + (a.values_R - b.values_R).cwiseAbs().sum();
  const double norm = b.values_L.cwiseAbs().sum() + b.values_R.cwiseAbs().sum();
  if (norm == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / norm;
}

}  // namespace ptmap
