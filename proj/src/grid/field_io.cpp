#include "fpk/field_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fpk/error.hpp"

namespace fpk {

static_assert(std::endian::native == std::endian::little, "binary snapshots assume little-endian");

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

template <class T>
T parse_whole(std::string_view text, std::string_view what) {
  while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.remove_suffix(1);
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  T v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::IoError, std::string(what) + ": cannot parse '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

double parse_double(std::string_view text, std::string_view what) { return parse_whole<double>(text, what); }
long parse_integer(std::string_view text, std::string_view what) { return parse_whole<long>(text, what); }

void write_field_csv(std::ostream& os, const ScalarField& u) {
  const Grid& g = u.grid();
  os << (g.dim() == 1 ? "x1,u\n" : "x1,x2,u\n");
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Vec x = g.cell_center(c);
    os << format_double(x[0]);
    if (g.dim() == 2) os << ',' << format_double(x[1]);
    os << ',' << format_double(u[c]) << '\n';
  }
}

ScalarField read_field_csv(std::istream& is, const Grid& grid) {
  std::string line;
  const std::string expected = grid.dim() == 1 ? "x1,u" : "x1,x2,u";
  if (!std::getline(is, line) || line != expected) {
    throw Error(ErrorCode::IoError, "field CSV header must be '" + expected + "'");
  }
  ScalarField u(grid);
  const double tol = 1e-9 * grid.spacing();
  std::size_t c = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (c >= grid.size()) throw Error(ErrorCode::IoError, "field CSV has too many rows");
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cols;
    while (std::getline(ss, cell, ',')) cols.push_back(parse_double(cell, "field CSV value"));
    if (static_cast<int>(cols.size()) != grid.dim() + 1) {
      throw Error(ErrorCode::IoError, "field CSV row has wrong column count");
    }
    const Vec x = grid.cell_center(c);
    for (int k = 0; k < grid.dim(); ++k) {
      if (std::fabs(cols[k] - x[k]) > tol) {
        throw Error(ErrorCode::IoError, "field CSV coordinates do not match the grid");
      }
    }
    u[c++] = cols.back();
  }
  if (c != grid.size()) throw Error(ErrorCode::IoError, "field CSV has too few rows");
  return u;
}

namespace {

void put_i64(std::ostream& os, std::int64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::int64_t get_i64(std::istream& is) {
  std::int64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw Error(ErrorCode::IoError, "truncated header");
  return v;
}

}  // namespace

void write_field_binary(std::ostream& os, const ScalarField& u) {
  const Grid& g = u.grid();
  constexpr std::int64_t den = 1'000'000;
  const auto num = static_cast<std::int64_t>(std::llround(g.half_width() * den));
  const std::int64_t div = std::gcd(num, den);
  put_i64(os, g.dim());
  put_i64(os, g.n());
  put_i64(os, num / div);
  put_i64(os, den / div);
  os.write(reinterpret_cast<const char*>(u.values().data()),
           static_cast<std::streamsize>(u.size() * sizeof(double)));
}

ScalarField read_field_binary(std::istream& is, Boundary boundary) {
  const auto d = get_i64(is);
  const auto n = get_i64(is);
  const auto num = get_i64(is);
  const auto den = get_i64(is);
  if (den <= 0) throw Error(ErrorCode::IoError, "bad half-width denominator");
  Grid g(static_cast<int>(d), double(num) / double(den), static_cast<int>(n), boundary);
  ScalarField u(g);
  if (!is.read(reinterpret_cast<char*>(u.values().data()),
               static_cast<std::streamsize>(u.size() * sizeof(double)))) {
    throw Error(ErrorCode::IoError, "truncated field data");
  }
  return u;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::IoError, "cannot open " + tmp.string());
    os << contents;
    if (!os) throw Error(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace fpk
