#include "ptmap/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace ptmap {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::out : std::ios::out);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

double parse_double(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  if (field == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw IoError("'" + path.string() + "' line " + std::to_string(line) + ": cannot parse '" + field + "'");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

std::string format_exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void emit_spectrum_csv(const Spectrum& spec, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "re_lambda,im_lambda,re_E,im_E\n";
  for (std::size_t i = 0; i < spec.size(); ++i) {
    out << format_exact(spec.lambdas[i].real()) << ',' << format_exact(spec.lambdas[i].imag()) << ','
        << format_exact(spec.quasienergies[i].real()) << ',' << format_exact(spec.quasienergies[i].imag()) << '\n';
  }
  finish(out, path);
}

Spectrum read_spectrum_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != "re_lambda,im_lambda,re_E,im_E") {
    throw IoError("'" + path.string() + "': missing spectrum header");
  }
  Spectrum spec;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4) {
      throw IoError("'" + path.string() + "' line " + std::to_string(line_no) + ": expected 4 columns");
    }
    spec.lambdas.emplace_back(parse_double(fields[0], path, line_no), parse_double(fields[1], path, line_no));
    spec.quasienergies.emplace_back(parse_double(fields[2], path, line_no), parse_double(fields[3], path, line_no));
  }
  return spec;
}

void emit_grid_csv(const Eigen::MatrixXd& values, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << format_exact(values(i, j));
    }
    out << '\n';
  }
  finish(out, path);
}

void emit_grid_csv(const PassageTimeGrid& grid, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (int i = 0; i < grid.n_q; ++i) {
    for (int j = 0; j < grid.n_p; ++j) {
      if (j) out << ',';
      const int v = grid.at(i, j);
      if (v == PassageTimeGrid::kNever) {
        out << "inf";
      } else {
        out << v;
      }
    }
    out << '\n';
  }
  finish(out, path);
}

void emit_grid_csv(const BinaryGrid& grid, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (int i = 0; i < grid.n_q; ++i) {
    for (int j = 0; j < grid.n_p; ++j) {
      if (j) out << ',';
      out << (grid.at(i, j) ? '1' : '0');
    }
    out << '\n';
  }
  finish(out, path);
}

Eigen::MatrixXd read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& f : split_csv(line)) row.push_back(parse_double(f, path, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("'" + path.string() + "' line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j];
  }
  return out;
}

void emit_grid_pgm(const Eigen::MatrixXd& values, const std::filesystem::path& path) {
  const Eigen::Index n_q = values.rows();
  const Eigen::Index n_p = values.cols();
  const double peak = values.size() ? values.maxCoeff() : 0.0;
  auto out = open_for_write(path, true);
  out << "P5\n" << n_q << ' ' << n_p << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(n_q));
  for (Eigen::Index r = 0; r < n_p; ++r) {
    const Eigen::Index j = n_p - 1 - r;
    for (Eigen::Index i = 0; i < n_q; ++i) {
      const double v = peak > 0.0 ? std::clamp(values(i, j) / peak, 0.0, 1.0) : 0.0;
      row[static_cast<std::size_t>(i)] = static_cast<unsigned char>(std::lround(255.0 * v));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  finish(out, path);
}

void emit_grid_pgm(const BinaryGrid& grid, const std::filesystem::path& path) {
  Eigen::MatrixXd values(grid.n_q, grid.n_p);
  for (int i = 0; i < grid.n_q; ++i) {
    for (int j = 0; j < grid.n_p; ++j) values(i, j) = grid.at(i, j) ? 1.0 : 0.0;
  }
  emit_grid_pgm(values, path);
}

}  // namespace ptmap
