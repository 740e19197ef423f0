#include "ptmap/operators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ptmap {

using namespace std::complex_literals;

void SystemParams::validate() const {
  if (M < 1) throw std::invalid_argument("SystemParams: M must be >= 1, got " + std::to_string(M));
  if (N < 1 || N > M) {
    throw std::invalid_argument("SystemParams: need 1 <= N <= M, got N=" + std::to_string(N) +
                                " M=" + std::to_string(M));
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw std::invalid_argument("SystemParams: mu must be finite and >= 0");
  }
}

double SystemParams::critical_mu() const { return std::sqrt(static_cast<double>(N)) / M; }

QuantumState::QuantumState(ComplexVector a) : amplitudes(std::move(a)) {
  if (amplitudes.size() == 0 || amplitudes.size() % 2 != 0) {
    throw std::invalid_argument("QuantumState: length must be 2M with M >= 1");
  }
}

ComplexMatrix build_kicked_rotator(int M, double k) {
  if (M < 1) throw std::invalid_argument("build_kicked_rotator: M must be >= 1");
  constexpr double pi = std::numbers::pi;
  const Complex prefactor = std::exp(-0.25i * pi) / std::sqrt(static_cast<double>(M));
  const double kick = M * k / (4.0 * pi);

  std::vector<double> cosines(M);
  for (int m = 0; m < M; ++m) cosines[m] = std::cos(2.0 * pi * m / M);

  ComplexMatrix F(M, M);
  const long long period = 2LL * M;  // exp(i*pi*d^2/M) has period 2M in d^2
  for (int m = 0; m < M; ++m) {
    for (int mp = m; mp < M; ++mp) {
      const long long d = mp - m;
      const double free_phase = pi * static_cast<double>((d * d) % period) / M;
      const double phase = free_phase - kick * (cosines[m] + cosines[mp]);
      F(m, mp) = prefactor * std::polar(1.0, phase);
      F(mp, m) = F(m, mp);
    }
  }
  return F;
}

ComplexMatrix sample_coe(int M, Rng& rng) {
  if (M < 1) throw std::invalid_argument("sample_coe: M must be >= 1");
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexMatrix Z(M, M);
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < M; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      Z(i, j) = Complex(re, im);
    }
  }

  Eigen::HouseholderQR<ComplexMatrix> qr(Z);
  ComplexMatrix U = qr.householderQ();
  const ComplexMatrix& R = qr.matrixQR();
  // Haar measure needs R with positive diagonal.
  for (int j = 0; j < M; ++j) {
    const double r = std::abs(R(j, j));
    U.col(j) *= (r > 0.0) ? R(j, j) / r : Complex(1.0);
  }
  return U.transpose() * U;
}

ComplexMatrix build_internal_dynamics(const SystemParams& params) {
  params.validate();
  if (const auto* kr = std::get_if<KickedRotator>(&params.dynamics)) {
    return build_kicked_rotator(params.M, kr->k);
  }
  Rng rng(params.seed);
  return sample_coe(params.M, rng);
}

Coupling build_coupling(int M, int N) {
  if (M < 1 || N < 1 || N > M) {
    throw std::invalid_argument("build_coupling: need 1 <= N <= M, got N=" + std::to_string(N) +
                                " M=" + std::to_string(M));
  }
  const double s = 1.0 / std::sqrt(2.0);
  Coupling out{ComplexMatrix::Zero(2 * M, 2 * M), ComplexMatrix::Zero(2 * M, 2 * M)};
  for (int i = 0; i < M; ++i) {
    if (i < N) {
      out.C(i, M + i) = -1i;
      out.C(M + i, i) = -1i;
      out.sqrtC(i, i) = s;
      out.sqrtC(M + i, M + i) = s;
      out.sqrtC(i, M + i) = -1i * s;
      out.sqrtC(M + i, i) = -1i * s;
    } else {
      out.C(i, i) = 1.0;
      out.C(M + i, M + i) = 1.0;
      out.sqrtC(i, i) = 1.0;
      out.sqrtC(M + i, M + i) = 1.0;
    }
  }
  return out;
}

namespace {

// sqrtC = [[A, B], [B, A]] with diagonal A, B. Returns (diag A, diag B) and
// rejects anything else.
std::pair<ComplexVector, ComplexVector> coupling_diagonals(const ComplexMatrix& sqrtC, int M) {
  ComplexVector a = sqrtC.topLeftCorner(M, M).diagonal();
  ComplexVector b = sqrtC.topRightCorner(M, M).diagonal();
  for (int j = 0; j < 2 * M; ++j) {
    for (int i = 0; i < 2 * M; ++i) {
      const int bi = i % M;
      const int bj = j % M;
      const Complex expected = (bi != bj) ? Complex(0.0) : ((i < M) == (j < M) ? a(bi) : b(bi));
      if (sqrtC(i, j) != expected) {
        throw std::invalid_argument("assemble_pt_map: sqrtC lacks the [[A,B],[B,A]] diagonal-block structure");
      }
    }
  }
  return {std::move(a), std::move(b)};
}

}  // namespace

ComplexMatrix assemble_pt_map(const ComplexMatrix& F, double mu, const ComplexMatrix& sqrtC) {
  const Eigen::Index M = F.rows();
  if (F.cols() != M || M < 1) throw std::invalid_argument("assemble_pt_map: F must be square");
  if (sqrtC.rows() != 2 * M || sqrtC.cols() != 2 * M) {
    throw std::invalid_argument("assemble_pt_map: sqrtC is " + std::to_string(sqrtC.rows()) + "x" +
                                std::to_string(sqrtC.cols()) + ", expected " + std::to_string(2 * M) +
                                "x" + std::to_string(2 * M));
  }
  const auto [a, b] = coupling_diagonals(sqrtC, static_cast<int>(M));
  const double loss = std::exp(-mu);
  const double gain = std::exp(mu);

  // With D1 = e^{-mu} F and D2 = e^{mu} F^T:
  //   TL = A D1 A + B D2 B    TR = A D1 B + B D2 A
  //   BL = B D1 A + A D2 B    BR = B D1 B + A D2 A
  ComplexMatrix out(2 * M, 2 * M);
  for (Eigen::Index j = 0; j < M; ++j) {
    for (Eigen::Index i = 0; i < M; ++i) {
      const Complex d1 = loss * F(i, j);
      const Complex d2 = gain * F(j, i);
      out(i, j) = a(i) * d1 * a(j) + b(i) * d2 * b(j);
      out(i, M + j) = a(i) * d1 * b(j) + b(i) * d2 * a(j);
      out(M + i, j) = b(i) * d1 * a(j) + a(i) * d2 * b(j);
      out(M + i, M + j) = b(i) * d1 * b(j) + a(i) * d2 * a(j);
    }
  }
  return out;
}

ComplexMatrix build_pt_map(const SystemParams& params) {
  const ComplexMatrix F = build_internal_dynamics(params);
  const Coupling coupling = build_coupling(params.M, params.N);
  return assemble_pt_map(F, params.mu, coupling.sqrtC);
}

ComplexVector parity_apply(const ComplexVector& psi) {
  if (psi.size() % 2 != 0) throw std::invalid_argument("parity_apply: odd dimension");
  const Eigen::Index M = psi.size() / 2;
  ComplexVector out(psi.size());
  out.head(M) = psi.tail(M);
  out.tail(M) = psi.head(M);
  return out;
}

QuantumState parity_apply(const QuantumState& psi) { return QuantumState(parity_apply(psi.amplitudes)); }

ComplexMatrix parity_apply(const ComplexMatrix& A) {
  if (A.rows() != A.cols() || A.rows() % 2 != 0) {
    throw std::invalid_argument("parity_apply: matrix must be square with even dimension");
  }
  const Eigen::Index M = A.rows() / 2;
  ComplexMatrix out(A.rows(), A.cols());
  out.topLeftCorner(M, M) = A.bottomRightCorner(M, M);
  out.bottomRightCorner(M, M) = A.topLeftCorner(M, M);
  out.topRightCorner(M, M) = A.bottomLeftCorner(M, M);
  out.bottomLeftCorner(M, M) = A.topRightCorner(M, M);
  return out;
}

double max_abs(const ComplexMatrix& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

}  // namespace ptmap
