#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ptmap/operators.hpp"

using namespace ptmap;
using namespace std::complex_literals;

namespace {

constexpr double pi = std::numbers::pi;

// Straight transcription of the kicked-rotator matrix element, no shared code
// with build_kicked_rotator.
Complex rotor_element(int M, double k, int m, int mp) {
  const Complex prefactor = 1.0 / std::sqrt(1i * static_cast<double>(M));
  const double d = m - mp;
  const Complex exponent = 1i * pi / static_cast<double>(M) * d * d -
                           1i * static_cast<double>(M) * k / (4.0 * pi) *
                               (std::cos(2.0 * pi * m / M) + std::cos(2.0 * pi * mp / M));
  return prefactor * std::exp(exponent);
}

ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

}  // namespace

TEST_CASE("kicked rotator: M=1, k=0 collapses to the prefactor") {
  const ComplexMatrix F = build_kicked_rotator(1, 0.0);
  REQUIRE(F.rows() == 1);
  CHECK(std::abs(F(0, 0) - std::exp(-0.25i * pi)) < 1e-15);
}

TEST_CASE("kicked rotator: elementwise oracle at M=3, k=8") {
  const ComplexMatrix F = build_kicked_rotator(3, 8.0);
  for (int m = 0; m < 3; ++m) {
    for (int mp = 0; mp < 3; ++mp) CHECK(std::abs(F(m, mp) - rotor_element(3, 8.0, m, mp)) < 1e-15);
  }
}

TEST_CASE("kicked rotator: unitary and exactly symmetric") {
  for (const int M : {1, 2, 7, 64, 200, 512}) {
    for (const double k : {0.0, 2.0, 8.0}) {
      CAPTURE(M);
      CAPTURE(k);
      const ComplexMatrix F = build_kicked_rotator(M, k);
      CHECK(max_abs(F.adjoint() * F - identity(M)) < 1e-12);
      CHECK(max_abs(F - F.transpose()) == 0.0);
    }
  }
}

TEST_CASE("kicked rotator: rejects M=0") { CHECK_THROWS_AS(build_kicked_rotator(0, 8.0), std::invalid_argument); }

TEST_CASE("COE: 1x1 draw is a phase") {
  Rng rng(3);
  const ComplexMatrix F = sample_coe(1, rng);
  CHECK(std::abs(std::abs(F(0, 0)) - 1.0) < 1e-15);
}

TEST_CASE("COE: unitary, symmetric and seed-deterministic at M=50") {
  Rng a(11), b(11), c(12);
  const ComplexMatrix Fa = sample_coe(50, a);
  const ComplexMatrix Fb = sample_coe(50, b);
  const ComplexMatrix Fc = sample_coe(50, c);
  CHECK(max_abs(Fa.adjoint() * Fa - identity(50)) < 1e-12);
  CHECK(max_abs(Fa - Fa.transpose()) < 1e-12);
  CHECK(Fa == Fb);
  CHECK(max_abs(Fa - Fc) > 1e-3);
  CHECK_THROWS_AS(sample_coe(0, a), std::invalid_argument);
}

TEST_CASE("COE: element variance follows 1/(M+1)") {
  // E|F_01|^2 = 1/(M+1) for COE; loose factor-2 gate.
  constexpr int M = 20;
  constexpr int samples = 300;
  Rng rng(2024);
  double mean = 0.0;
  for (int s = 0; s < samples; ++s) mean += std::norm(sample_coe(M, rng)(0, 1));
  mean /= samples;
  const double expected = 1.0 / (M + 1);
  CHECK(mean > expected / 2.0);
  CHECK(mean < expected * 2.0);
}

TEST_CASE("coupling: M=1, N=1 closed form") {
  const Coupling c = build_coupling(1, 1);
  const double s = 1.0 / std::sqrt(2.0);
  ComplexMatrix expected(2, 2);
  expected << s, -1i * s, -1i * s, s;
  CHECK(max_abs(c.sqrtC - expected) == 0.0);
  ComplexMatrix C(2, 2);
  C << 0.0, -1i, -1i, 0.0;
  CHECK(max_abs(c.C - C) == 0.0);
  CHECK(max_abs(c.sqrtC * c.sqrtC - C) < 1e-15);
}

TEST_CASE("coupling: M=5, N=1 structure") {
  const Coupling c = build_coupling(5, 1);
  int off_diagonal_minus_i = 0;
  int diagonal_ones = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      if (i == j && c.C(i, j) == Complex(1.0)) ++diagonal_ones;
      if (i != j && c.C(i, j) == -1i) ++off_diagonal_minus_i;
      if (i != j && c.C(i, j) != -1i) CHECK(c.C(i, j) == Complex(0.0));
    }
  }
  CHECK(off_diagonal_minus_i == 2);
  CHECK(diagonal_ones == 8);
  CHECK(c.C(0, 5) == -1i);
  CHECK(c.C(5, 0) == -1i);
}

TEST_CASE("coupling: sqrtC squares to C and is unitary") {
  for (const auto& [M, N] : {std::pair{10, 2}, std::pair{7, 7}, std::pair{30, 6}}) {
    const Coupling c = build_coupling(M, N);
    CHECK(max_abs(c.sqrtC * c.sqrtC - c.C) < 1e-15);
    CHECK(max_abs(c.sqrtC.adjoint() * c.sqrtC - identity(2 * M)) < 1e-15);
  }
}

TEST_CASE("coupling: rejects N=0 and N>M") {
  CHECK_THROWS_AS(build_coupling(5, 0), std::invalid_argument);
  CHECK_THROWS_AS(build_coupling(5, 6), std::invalid_argument);
}

TEST_CASE("assemble: structured product equals the dense triple product") {
  Rng rng(5);
  const ComplexMatrix F = sample_coe(12, rng);
  const Coupling c = build_coupling(12, 4);
  const double mu = 0.7;
  ComplexMatrix D = ComplexMatrix::Zero(24, 24);
  D.topLeftCorner(12, 12) = std::exp(-mu) * F;
  D.bottomRightCorner(12, 12) = std::exp(mu) * F.transpose();
  const ComplexMatrix dense = c.sqrtC * D * c.sqrtC;
  CHECK(max_abs(assemble_pt_map(F, mu, c.sqrtC) - dense) < 1e-14);
}

TEST_CASE("assemble: mu=0 gives a unitary map") {
  const ComplexMatrix F = build_kicked_rotator(40, 8.0);
  const Coupling c = build_coupling(40, 8);
  const ComplexMatrix map = assemble_pt_map(F, 0.0, c.sqrtC);
  CHECK(max_abs(map.adjoint() * map - identity(80)) < 1e-12);
  const Eigen::VectorXd sv = Eigen::JacobiSVD<ComplexMatrix>(map).singularValues();
  CHECK((sv.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("assemble: PT relation P (F^-1)^* P = F at M=50, k=8, mu=0.2, N=10") {
  const ComplexMatrix map = assemble_pt_map(build_kicked_rotator(50, 8.0), 0.2, build_coupling(50, 10).sqrtC);
  const ComplexMatrix inverse = map.partialPivLu().inverse();
  CHECK(max_abs(parity_apply(ComplexMatrix(inverse.conjugate())) - map) < 1e-10);
}

TEST_CASE("assemble: |det| = 1 independent of mu") {
  const ComplexMatrix F = build_kicked_rotator(50, 8.0);
  const Coupling c = build_coupling(50, 10);
  for (const double mu : {0.0, 0.5, 1.5}) {
    CAPTURE(mu);
    const Complex det = assemble_pt_map(F, mu, c.sqrtC).partialPivLu().determinant();
    CHECK(std::abs(std::abs(det) - 1.0) < 1e-10);
  }
}

TEST_CASE("assemble: dimension and structure errors") {
  const ComplexMatrix F = build_kicked_rotator(4, 1.0);
  CHECK_THROWS_AS(assemble_pt_map(F, 0.1, build_coupling(5, 1).sqrtC), std::invalid_argument);
  ComplexMatrix bogus = build_coupling(4, 2).sqrtC;
  bogus(0, 1) = 0.5;
  CHECK_THROWS_AS(assemble_pt_map(F, 0.1, bogus), std::invalid_argument);
}

TEST_CASE("build_pt_map: COE dynamics uses the seed") {
  SystemParams a{20, 4, 0.3, Coe{}, 7};
  SystemParams b = a;
  b.seed = 8;
  CHECK(build_pt_map(a) == build_pt_map(a));
  CHECK(max_abs(build_pt_map(a) - build_pt_map(b)) > 1e-3);
  SystemParams bad = a;
  bad.N = 21;
  CHECK_THROWS_AS(build_pt_map(bad), std::invalid_argument);
  bad = a;
  bad.mu = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("parity: swaps halves and is an involution") {
  ComplexVector psi(6);
  psi << 1.0, 2.0, 3.0, 4.0i, 5.0i, 6.0i;
  const ComplexVector swapped = parity_apply(psi);
  ComplexVector expected(6);
  expected << 4.0i, 5.0i, 6.0i, 1.0, 2.0, 3.0;
  CHECK(swapped == expected);
  CHECK(parity_apply(swapped) == psi);

  const QuantumState state(psi);
  CHECK(parity_apply(state).left() == psi.tail(3));

  CHECK_THROWS_AS(parity_apply(ComplexVector(ComplexVector::Zero(5))), std::invalid_argument);
  CHECK_THROWS_AS(QuantumState(ComplexVector::Zero(3)), std::invalid_argument);
}

TEST_CASE("parity: as a matrix, P P = I at M=4 and P A P matches explicit conjugation") {
  ComplexMatrix P = ComplexMatrix::Zero(8, 8);
  P.topRightCorner(4, 4) = identity(4);
  P.bottomLeftCorner(4, 4) = identity(4);
  CHECK(P * P == identity(8));
  Rng rng(1);
  const ComplexMatrix A = sample_coe(8, rng);
  CHECK(max_abs(parity_apply(A) - P * A * P) == 0.0);
  CHECK(parity_apply(parity_apply(A)) == A);
}
