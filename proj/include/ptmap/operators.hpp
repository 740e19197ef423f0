#pragma once

// Matrices of the coupled absorbing/amplifying resonator model.
//
// The full Hilbert space has dimension 2M. The first M amplitudes belong to
// the absorbing (left) resonator, the last M to the amplifying (right) one.
// Both resonators share the internal unitary dynamics F (with F^T on the
// amplifying side), and couple through the first N basis states.

#include <complex>
#include <cstdint>
#include <random>
#include <variant>

#include <Eigen/Dense>

namespace ptmap {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Seeded random stream used for every stochastic construction.
using Rng = std::mt19937_64;

struct KickedRotator {
  double k = 8.0;
};

/// Circular orthogonal ensemble; one realisation per seed.
struct Coe {};

using Dynamics = std::variant<KickedRotator, Coe>;

struct SystemParams {
  int M = 0;
  int N = 0;
  double mu = 0.0;
  Dynamics dynamics = KickedRotator{};
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless 1 <= N <= M and mu >= 0.
  void validate() const;
  /// Coupling ratio N/M (inverse dwell time).
  double thouless_energy() const { return static_cast<double>(N) / M; }
  /// RMT scale at which the spectrum turns complex, sqrt(N)/M.
  double critical_mu() const;
};

/// State on the composed space; amplitudes.head(M) is the absorbing half.
struct QuantumState {
  ComplexVector amplitudes;

  explicit QuantumState(ComplexVector a);
  Eigen::Index half() const { return amplitudes.size() / 2; }
  auto left() const { return amplitudes.head(half()); }
  auto right() const { return amplitudes.tail(half()); }
};

/// Quantized kicked rotator on an M-site torus (indices 0..M-1).
/// Unitary and symmetric.
ComplexMatrix build_kicked_rotator(int M, double k);

/// F = U^T U with U Haar-distributed (Gaussian + QR with phase fix).
ComplexMatrix sample_coe(int M, Rng& rng);

/// Internal dynamics for the given parameters. COE draws use params.seed.
ComplexMatrix build_internal_dynamics(const SystemParams& params);

struct Coupling {
  ComplexMatrix C;
  ComplexMatrix sqrtC;
};

/// C = [[Q, -iP], [-iP, Q]] and its unitary square root, with P selecting
/// the first N channels.
Coupling build_coupling(int M, int N);

/// sqrtC * diag(e^{-mu} F, e^{mu} F^T) * sqrtC.
///
/// sqrtC must come from build_coupling; its block-diagonal structure is used
/// to assemble the product in O(M^2) without dense multiplications.
ComplexMatrix assemble_pt_map(const ComplexMatrix& F, double mu, const ComplexMatrix& sqrtC);

/// Convenience: internal dynamics, coupling and assembly in one go.
ComplexMatrix build_pt_map(const SystemParams& params);

/// Parity: swaps the absorbing and amplifying halves.
ComplexVector parity_apply(const ComplexVector& psi);
QuantumState parity_apply(const QuantumState& psi);
/// P A P for a 2M x 2M matrix.
ComplexMatrix parity_apply(const ComplexMatrix& A);

/// Largest absolute entry; the norm used by every residual check here.
double max_abs(const ComplexMatrix& A);

}  // namespace ptmap
