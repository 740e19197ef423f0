#pragma once

// Plot-ready output formats.
//
//   spectrum CSV  header "re_lambda,im_lambda,re_E,im_E", one eigenvalue per
//                 row, 17 significant digits.
//   grid CSV      one line per q index, n_p comma-separated values; passage
//                 times use "inf" for cells that never reach the strip.
//   PGM           binary P5, 8 bit, width n_q, height n_p, top row = largest
//                 p; pixel = round(255 v / max v), all zero for a zero grid.

#include <filesystem>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "ptmap/classical.hpp"
#include "ptmap/spectra.hpp"

namespace ptmap {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void emit_spectrum_csv(const Spectrum& spec, const std::filesystem::path& path);
/// Reads a file written by emit_spectrum_csv (no eigenvectors).
Spectrum read_spectrum_csv(const std::filesystem::path& path);

void emit_grid_csv(const Eigen::MatrixXd& values, const std::filesystem::path& path);
void emit_grid_csv(const PassageTimeGrid& grid, const std::filesystem::path& path);
void emit_grid_csv(const BinaryGrid& grid, const std::filesystem::path& path);
Eigen::MatrixXd read_grid_csv(const std::filesystem::path& path);

void emit_grid_pgm(const Eigen::MatrixXd& values, const std::filesystem::path& path);
void emit_grid_pgm(const BinaryGrid& grid, const std::filesystem::path& path);

/// Formats a double with 17 significant digits ("%.17g").
std::string format_exact(double x);

}  // namespace ptmap
