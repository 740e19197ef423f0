#include "ptmap/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <tuple>

#include <lapacke.h>

namespace ptmap {

Complex quasienergy(Complex lambda) {
  double re = -std::arg(lambda);
  if (re <= -std::numbers::pi) re = std::numbers::pi;
  return {re, std::log(std::abs(lambda))};
}

Spectrum eigendecompose(const ComplexMatrix& map, bool want_vectors) {
  const Eigen::Index n = map.rows();
  if (map.cols() != n || n == 0) {
    throw std::invalid_argument("eigendecompose: expected a non-empty square matrix");
  }
  if (!map.allFinite()) throw std::invalid_argument("eigendecompose: matrix has non-finite entries");

  ComplexMatrix work = map;
  ComplexVector w(n);
  ComplexMatrix vr;
  if (want_vectors) vr.resize(n, n);
  const auto ni = static_cast<lapack_int>(n);
  const lapack_int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', ni, reinterpret_cast<lapack_complex_double*>(work.data()),
      ni, reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1,
      want_vectors ? reinterpret_cast<lapack_complex_double*>(vr.data()) : nullptr, want_vectors ? ni : 1);
  if (info != 0) {
    throw SolverError("zgeev failed (info=" + std::to_string(info) + ") on " + std::to_string(n) + "x" +
                      std::to_string(n) + " matrix, max|a_ij|=" + std::to_string(max_abs(map)));
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::make_tuple(w(a).real(), w(a).imag()) < std::make_tuple(w(b).real(), w(b).imag());
  });

  Spectrum out;
  out.lambdas.reserve(n);
  out.quasienergies.reserve(n);
  for (const Eigen::Index i : order) {
    out.lambdas.push_back(w(i));
    out.quasienergies.push_back(quasienergy(w(i)));
  }
  if (want_vectors) {
    ComplexMatrix sorted(n, n);
    for (Eigen::Index j = 0; j < n; ++j) sorted.col(j) = vr.col(order[j]);
    ComplexMatrix residual = map * sorted;
    for (Eigen::Index j = 0; j < n; ++j) residual.col(j) -= out.lambdas[j] * sorted.col(j);
    out.max_residual = residual.colwise().norm().maxCoeff();
    out.eigenvectors = std::move(sorted);
  }
  return out;
}

Pairing pair_match(std::span<const Complex> lambdas, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("pair_match: tol must be > 0");
  const std::size_t n = lambdas.size();
  std::vector<Complex> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = 1.0 / std::conj(lambdas[i]);

  struct Candidate {
    double distance;
    std::size_t a;
    std::size_t b;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double d = std::max(std::abs(lambdas[j] - targets[i]), std::abs(lambdas[i] - targets[j]));
      if (d < tol) candidates.push_back({d, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(x.distance, x.a, x.b) < std::tie(y.distance, y.a, y.b);
  });

  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  Pairing out;
  out.partner.assign(n, unset);
  for (const Candidate& c : candidates) {
    if (out.partner[c.a] != unset || out.partner[c.b] != unset) continue;
    out.partner[c.a] = c.b;
    out.partner[c.b] = c.a;
    out.worst_mismatch = std::max(out.worst_mismatch, c.distance);
    if (c.a == c.b) ++out.self_paired;
  }

  std::size_t unmatched = 0;
  double worst = out.worst_mismatch;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.partner[i] != unset) continue;
    ++unmatched;
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (out.partner[j] == unset) nearest = std::min(nearest, std::abs(lambdas[j] - targets[i]));
    }
    worst = std::max(worst, nearest);
  }
  if (unmatched > 0) {
    throw PtSymmetryViolation("pair_match: " + std::to_string(unmatched) + " of " + std::to_string(n) +
                                  " eigenvalues have no 1/conj partner within tol; worst mismatch " +
                                  std::to_string(worst),
                              worst, unmatched);
  }
  return out;
}

SpectralClassification classify(const Spectrum& spec, double mu, double delta_real) {
  if (!(mu >= 0.0)) throw std::invalid_argument("classify: mu must be >= 0");
  if (!(delta_real > 0.0)) throw std::invalid_argument("classify: delta_real must be > 0");
  SpectralClassification out;
  out.delta_real = delta_real;
  const double threshold = mu / 2.0;
  for (std::size_t i = 0; i < spec.quasienergies.size(); ++i) {
    const double im = spec.quasienergies[i].imag();
    const bool real = std::abs(im) < delta_real;
    if (real) {
      out.neutral.push_back(i);
      out.real_states.push_back(i);
    } else if (im > threshold) {
      out.amplified.push_back(i);
    } else if (im < -threshold) {
      out.decaying.push_back(i);
    } else {
      out.neutral.push_back(i);
    }
  }
  return out;
}

double fraction_amplified(const Spectrum& spec, double mu, double delta_real) {
  if (!(mu >= 0.0)) throw std::invalid_argument("fraction_amplified: mu must be >= 0");
  if (spec.size() == 0) return 0.0;
  const auto count = std::count_if(spec.quasienergies.begin(), spec.quasienergies.end(),
                                   [&](Complex e) { return e.imag() > mu / 2.0 && e.imag() >= delta_real; });
  return static_cast<double>(count) / static_cast<double>(spec.size());
}

double fraction_real(const Spectrum& spec, double delta_real) {
  if (spec.size() == 0) return 0.0;
  const auto count = std::count_if(spec.quasienergies.begin(), spec.quasienergies.end(),
                                   [&](Complex e) { return std::abs(e.imag()) < delta_real; });
  return static_cast<double>(count) / static_cast<double>(spec.size());
}

double Histogram::central_mass() const {
  for (std::size_t i = 0; i < bin_index.size(); ++i) {
    if (bin_index[i] == 0) return mass[i];
  }
  return 0.0;
}

Histogram im_e_histogram(std::span<const double> im_e, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("im_e_histogram: bin_width must be > 0");
  if (im_e.empty()) throw std::invalid_argument("im_e_histogram: no samples");

  // std::llround rounds halves away from zero, so the binning is odd-symmetric.
  std::map<long long, std::size_t> counts;
  for (const double x : im_e) {
    if (!std::isfinite(x)) throw std::invalid_argument("im_e_histogram: non-finite sample");
    ++counts[std::llround(x / bin_width)];
  }
  const long long lo = std::min(counts.begin()->first, -counts.rbegin()->first);
  const long long hi = -lo;

  Histogram h;
  h.bin_width = bin_width;
  const double total = static_cast<double>(im_e.size());
  for (long long j = lo; j <= hi; ++j) {
    const auto it = counts.find(j);
    const double m = it == counts.end() ? 0.0 : static_cast<double>(it->second) / total;
    h.bin_index.push_back(static_cast<int>(j));
    h.centers.push_back(static_cast<double>(j) * bin_width);
    h.mass.push_back(m);
    h.density.push_back(m / bin_width);
  }
  return h;
}

Histogram im_e_histogram(std::span<const Spectrum> spectra, double bin_width) {
  std::vector<double> samples;
  for (const Spectrum& s : spectra) {
    for (const Complex e : s.quasienergies) samples.push_back(e.imag());
  }
  return im_e_histogram(std::span<const double>(samples), bin_width);
}

ScalingFit fit_power_law(std::span<const ScalingFit::Point> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points");
  for (const auto& p : points) {
    if (!(p.fraction > 0.0)) {
      throw std::invalid_argument(
          "fit_power_law: f_> = 0 at M=" + std::to_string(p.M) +
          "; increase the ensemble size or lower mu so that amplified states are present");
    }
    if (!(p.M > 0.0)) throw std::invalid_argument("fit_power_law: M must be positive");
  }
  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    sx += std::log(p.M);
    sy += std::log(p.fraction);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.M) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.fraction) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_power_law: all M identical");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ssr = 0.0;
  for (const auto& p : points) {
    const double r = std::log(p.fraction) - (intercept + slope * std::log(p.M));
    ssr += r * r;
  }

  ScalingFit fit;
  fit.points.assign(points.begin(), points.end());
  fit.exponent_a = -slope;
  fit.intercept = intercept;
  fit.stderr_a = std::sqrt(ssr / (n - 2.0) / sxx);
  return fit;
}

Estimate estimate_fractal_dimension(const ScalingFit& fit) { return {2.0 - fit.exponent_a, fit.stderr_a}; }

std::vector<double> critical_mu_scan(const SystemParams& params, std::span<const double> mu_grid,
                                     double delta_real) {
  if (!std::is_sorted(mu_grid.begin(), mu_grid.end())) {
    throw std::invalid_argument("critical_mu_scan: mu_grid must be sorted ascending");
  }
  params.validate();
  const ComplexMatrix F = build_internal_dynamics(params);
  const Coupling coupling = build_coupling(params.M, params.N);
  std::vector<double> out;
  out.reserve(mu_grid.size());
  for (const double mu : mu_grid) {
    const Spectrum s = eigendecompose(assemble_pt_map(F, mu, coupling.sqrtC), false);
    out.push_back(fraction_real(s, delta_real));
  }
  return out;
}

}  // namespace ptmap
