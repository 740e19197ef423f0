#pragma once

// Eigenvalues of the PT-symmetric map and the observables built from them.
//
// Eigenvalues are written lambda = exp(-iE); the quasienergy E = i ln(lambda)
// has Re E in (-pi, pi] and Im E = ln|lambda|, so Im E > 0 is amplification
// per step.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptmap/operators.hpp"

namespace ptmap {

/// Raised when the dense eigensolver does not converge.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an eigenvalue has no partner 1/conj(lambda) within tolerance.
class PtSymmetryViolation : public std::runtime_error {
 public:
  PtSymmetryViolation(const std::string& what, double worst_mismatch, std::size_t unmatched)
      : std::runtime_error(what), worst_mismatch(worst_mismatch), unmatched(unmatched) {}
  double worst_mismatch;
  std::size_t unmatched;
};

struct Spectrum {
  std::vector<Complex> lambdas;
  std::vector<Complex> quasienergies;
  /// Unit-norm right eigenvectors as columns, same order as lambdas.
  std::optional<ComplexMatrix> eigenvectors;
  /// max_n ||A psi_n - lambda_n psi_n||_2; only available with eigenvectors.
  std::optional<double> max_residual;

  std::size_t size() const { return lambdas.size(); }
};

/// E = i ln(lambda), with the real part folded into (-pi, pi].
Complex quasienergy(Complex lambda);

/// Full eigendecomposition of a dense complex matrix (LAPACK zgeev).
/// Eigenvalues are sorted by (Re lambda, Im lambda).
Spectrum eigendecompose(const ComplexMatrix& map, bool want_vectors);

struct Pairing {
  /// partner[n] is the index of the eigenvalue closest to 1/conj(lambda_n).
  std::vector<std::size_t> partner;
  double worst_mismatch = 0.0;
  std::size_t self_paired = 0;
};

/// Greedy nearest-distance matching of lambda_n with 1/conj(lambda_m).
///
/// Candidate pairs within `tol` are taken in order of increasing distance;
/// every index is used once. Inside degenerate clusters the individual
/// partners are ambiguous, the pair counts are not. Throws
/// PtSymmetryViolation if anything is left over.
Pairing pair_match(std::span<const Complex> lambdas, double tol);

/// States with |Im E| < delta_real count as neutral even when mu/2 is below
/// the round-off level (e.g. mu = 0).
struct SpectralClassification {
  std::vector<std::size_t> amplified;  // Im E > mu/2
  std::vector<std::size_t> neutral;    // |Im E| <= mu/2
  std::vector<std::size_t> decaying;   // Im E < -mu/2
  std::vector<std::size_t> real_states;  // |Im E| < delta_real
  double delta_real = 0.0;
};

inline constexpr double kDefaultDeltaReal = 1e-8;

SpectralClassification classify(const Spectrum& spec, double mu, double delta_real = kDefaultDeltaReal);

/// f_> = #{Im E > mu/2} / size, counting only states that classify() calls
/// amplified (|Im E| >= delta_real), so f_> = 0 at mu = 0.
double fraction_amplified(const Spectrum& spec, double mu, double delta_real = kDefaultDeltaReal);

/// Fraction of eigenvalues with |Im E| < delta_real.
double fraction_real(const Spectrum& spec, double delta_real = kDefaultDeltaReal);

struct Histogram {
  double bin_width = 0.0;
  /// Bin j holds samples with llround(x / w) == j; halves round away from
  /// zero, so the binning is odd-symmetric. Centers are j * w.
  std::vector<int> bin_index;
  std::vector<double> centers;
  /// Fraction of all samples per bin (sums to 1).
  std::vector<double> mass;
  /// mass / bin_width (integrates to 1).
  std::vector<double> density;

  /// Mass of the bin centred on Im E = 0.
  double central_mass() const;
};

/// Histogram of Im E pooled over all spectra.
Histogram im_e_histogram(std::span<const Spectrum> spectra, double bin_width);
Histogram im_e_histogram(std::span<const double> im_e, double bin_width);

struct ScalingFit {
  struct Point {
    double M;
    double fraction;
  };
  std::vector<Point> points;
  double exponent_a = 0.0;
  double stderr_a = 0.0;
  double intercept = 0.0;
};

/// OLS fit of ln f = intercept - a ln M.
ScalingFit fit_power_law(std::span<const ScalingFit::Point> points);

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

/// d_H = 2 - a.
Estimate estimate_fractal_dimension(const ScalingFit& fit);

/// Fraction of real quasienergies for each mu (eigenvalues only). The
/// internal dynamics is built once from `params`; params.mu is ignored.
std::vector<double> critical_mu_scan(const SystemParams& params, std::span<const double> mu_grid,
                                     double delta_real = kDefaultDeltaReal);

}  // namespace ptmap
