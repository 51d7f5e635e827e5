#pragma once

#include <filesystem>
#include <string>

#include "qfd/field.hpp"

namespace qfd::io {

/// Binary layout: a 64-byte little-endian header followed by row-major
/// float64 payload ((re, im) pairs for complex fields).
///
///   0  char[4] "QFDF"
///   4  u32     format version (1)
///   8  u32     flags: bit0 complex, bit1 two-argument matrix,
///              bit8 axis-0 dirichlet, bit9 axis-1 dirichlet
///  12  u32     dims (1 or 2)
///  16  u64     n0        24  u64  n1 (0 for 1D)
///  32  f64     dx0       40  f64  dx1 (time stamp for matrices)
///  48  f64     x0_min    56  f64  x1_min (0 for matrices)
inline constexpr std::size_t header_bytes = 64;

void write_binary(const std::filesystem::path& path, const RealField& f);
void write_binary(const std::filesystem::path& path, const ComplexField& f);
RealField read_real_binary(const std::filesystem::path& path);
ComplexField read_complex_binary(const std::filesystem::path& path);

/// Two-argument complex field f(x, x') on grid x grid, e.g. a reduced
/// density matrix. `values` is row-major in (x, x').
struct MatrixRecord {
    Grid1D grid;
    double time = 0.0;
    std::vector<complex> values;
};
void write_matrix_binary(const std::filesystem::path& path, const MatrixRecord& m);
MatrixRecord read_matrix_binary(const std::filesystem::path& path);

/// CSV with a '#' grid line, a column header, then one row per node:
/// index, x[, y], re, im (complex) or index, x[, y], value (real).
/// Numbers use shortest round-trip formatting, so reading back is exact.
void write_csv(const std::filesystem::path& path, const RealField& f);
void write_csv(const std::filesystem::path& path, const ComplexField& f);
RealField read_real_csv(const std::filesystem::path& path);
ComplexField read_complex_csv(const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);
double parse_double(std::string_view s);

}  // namespace qfd::io
