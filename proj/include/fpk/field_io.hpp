#pragma once

// Snapshot formats.
//
// CSV: header "x1,u" (d = 1) or "x1,x2,u" (d = 2), one row per cell in flat
// index order (ascending lexicographic cell-center coordinates), values
// printed with 17 significant digits.
//
// Binary: four little-endian int64 values d, n, L_num, L_den (L = L_num/L_den,
// L rounded to 1e-6 and reduced), followed by n^d little-endian float64
// values in flat index order. The boundary mode is not stored.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "fpk/grid.hpp"

namespace fpk {

void write_field_csv(std::ostream& os, const ScalarField& u);
/// Reads a CSV snapshot and checks its coordinates against `grid`.
ScalarField read_field_csv(std::istream& is, const Grid& grid);

void write_field_binary(std::ostream& os, const ScalarField& u);
/// The boundary mode is taken from the caller since the format omits it.
ScalarField read_field_binary(std::istream& is, Boundary boundary);

/// Writes to a temporary file next to `path`, then renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string format_double(double v);
/// Whole-string decimal parse; throws IoError naming `what` otherwise.
double parse_double(std::string_view text, std::string_view what);
long parse_integer(std::string_view text, std::string_view what);

}  // namespace fpk
