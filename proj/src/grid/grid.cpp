#include "fpk/grid.hpp"

#include <cmath>

#include "fpk/error.hpp"
#include "fpk/kernels.hpp"

namespace fpk {

Grid::Grid(int dim, double half_width, int n, Boundary boundary)
    : dim_(dim), half_width_(half_width), n_(n), boundary_(boundary) {
  if (dim < 1 || dim > kMaxDim) throw Error(ErrorCode::InvalidGrid, "dimension must be 1 or 2");
  if (n < 4) throw Error(ErrorCode::InvalidGrid, "need at least 4 cells per axis");
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw Error(ErrorCode::InvalidGrid, "half-width must be positive");
  }
}

double Grid::cell_volume() const { return std::pow(spacing(), dim_); }
double Grid::volume() const { return std::pow(2.0 * half_width_, dim_); }

std::size_t Grid::size() const {
  const auto n = static_cast<std::size_t>(n_);
  return dim_ == 1 ? n : n * n;
}

std::size_t Grid::face_count() const {
  const auto n = static_cast<std::size_t>(n_);
  return dim_ == 1 ? n + 1 : (n + 1) * n;
}

std::array<int, kMaxDim> Grid::unflatten(std::size_t flat) const {
  if (dim_ == 1) return {static_cast<int>(flat), 0};
  return {static_cast<int>(flat / n_), static_cast<int>(flat % n_)};
}

Vec Grid::cell_center(std::size_t flat) const {
  const auto idx = unflatten(flat);
  if (dim_ == 1) return {center(idx[0]), 0.0};
  return {center(idx[0]), center(idx[1])};
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(const Grid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw Error(ErrorCode::InvalidGrid, "field length does not match grid");
  }
}

void ScalarField::require_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidGrid, "field has non-finite values");
  }
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  kernels::axpy(1.0, o.values(), values_);
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  kernels::axpy(-1.0, o.values(), values_);
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

// ---------------------------------------------------------------------------

FaceField::FaceField(const Grid& grid) : grid_(grid) {
  for (int k = 0; k < grid.dim(); ++k) faces_[k].assign(grid.face_count(), 0.0);
}

std::size_t FaceField::face_index(int axis, std::size_t cell, int f) const {
  const auto n = static_cast<std::size_t>(grid_.n());
  if (grid_.dim() == 1) return static_cast<std::size_t>(f);
  const auto idx = grid_.unflatten(cell);
  if (axis == 0) return static_cast<std::size_t>(f) * n + static_cast<std::size_t>(idx[1]);
  return static_cast<std::size_t>(idx[0]) * (n + 1) + static_cast<std::size_t>(f);
}

void FaceField::enforce_boundary() {
  const auto n = static_cast<std::size_t>(grid_.n());
  const bool periodic = grid_.periodic();
  const std::size_t lines = grid_.dim() == 1 ? 1 : n;
  for (int k = 0; k < grid_.dim(); ++k) {
    auto& F = faces_[k];
    for (std::size_t line = 0; line < lines; ++line) {
      // Position of face 0 and face n on this line.
      std::size_t first, last;
      if (grid_.dim() == 1) {
        first = 0;
        last = n;
      } else if (k == 0) {
        first = line;
        last = n * n + line;
      } else {
        first = line * (n + 1);
        last = first + n;
      }
      if (periodic) {
        F[last] = F[first];
      } else {
        F[first] = 0.0;
        F[last] = 0.0;
      }
    }
  }
}

std::vector<FaceLink> face_links(const Grid& grid, int axis) {
  const auto n = static_cast<std::size_t>(grid.n());
  const std::size_t lines = grid.dim() == 1 ? 1 : n;
  std::vector<FaceLink> links;
  links.reserve(grid.size());
  for (std::size_t line = 0; line < lines; ++line) {
    auto cell_at = [&](std::size_t pos) {
      if (grid.dim() == 1) return pos;
      return axis == 0 ? pos * n + line : line * n + pos;
    };
    auto face_at = [&](std::size_t f) {
      if (grid.dim() == 1) return f;
      return axis == 0 ? f * n + line : line * (n + 1) + f;
    };
    if (grid.periodic()) links.push_back({face_at(0), cell_at(n - 1), cell_at(0)});
    for (std::size_t f = 1; f < n; ++f) links.push_back({face_at(f), cell_at(f - 1), cell_at(f)});
  }
  return links;
}

// ---------------------------------------------------------------------------

ScalarField laplacian(const ScalarField& u) {
  const Grid& g = u.grid();
  const auto& K = kernels::active();
  const auto n = static_cast<std::size_t>(g.n());
  const double h = g.spacing();
  const double s = 1.0 / (h * h);
  const bool periodic = g.periodic();
  ScalarField out(g);
  const double* in = u.values().data();
  double* o = out.values().data();

  if (g.dim() == 1) {
    K.second_diff_line(in, o, n, s, periodic);
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) K.second_diff_line(in + i * n, o + i * n, n, s, periodic);
  // Strided axis: whole rows at a time.
  const double* last = in + (n - 1) * n;
  if (periodic) {
    K.second_diff_accumulate(last, in, in + n, o, n, s);
    K.second_diff_accumulate(last - n, last, in, o + (n - 1) * n, n, s);
  } else {
    K.diff_accumulate(in + n, in, o, n, s);
    K.diff_accumulate(last - n, last, o + (n - 1) * n, n, s);
  }
  K.second_diff_accumulate(in, in + n, in + 2 * n, o + n, (n - 2) * n, s);
  return out;
}

ScalarField divergence(const FaceField& flux) {
  const Grid& g = flux.grid();
  FaceField F = flux;
  F.enforce_boundary();
  const auto& K = kernels::active();
  const auto n = static_cast<std::size_t>(g.n());
  const double inv_h = 1.0 / g.spacing();
  ScalarField out(g);
  double* o = out.values().data();

  if (g.dim() == 1) {
    const double* f = F.axis(0).data();
    K.diff_accumulate(f + 1, f, o, n, inv_h);
    return out;
  }
  const double* f0 = F.axis(0).data();
  K.diff_accumulate(f0 + n, f0, o, n * n, inv_h);
  const double* f1 = F.axis(1).data();
  for (std::size_t i = 0; i < n; ++i) {
    K.diff_accumulate(f1 + i * (n + 1) + 1, f1 + i * (n + 1), o + i * n, n, inv_h);
  }
  return out;
}

FaceField gradient(const ScalarField& u) {
  const Grid& g = u.grid();
  FaceField grad(g);
  const double inv_h = 1.0 / g.spacing();
  for (int k = 0; k < g.dim(); ++k) {
    auto F = grad.axis(k);
    for (const FaceLink& l : face_links(g, k)) F[l.face] = (u[l.right] - u[l.left]) * inv_h;
  }
  grad.enforce_boundary();
  return grad;
}

double inner_l2(const ScalarField& u, const ScalarField& v) {
  return kernels::dot(u.values(), v.values()) * u.grid().cell_volume();
}

double inner_faces(const FaceField& f, const FaceField& g) {
  const Grid& grid = f.grid();
  double total = 0.0;
  for (int k = 0; k < grid.dim(); ++k) {
    // Face n duplicates face 0 (periodic) or is zero (zero-flux); skip it.
    std::vector<double> prod;
    prod.reserve(grid.size());
    auto a = f.axis(k);
    auto b = g.axis(k);
    for (const FaceLink& l : face_links(grid, k)) prod.push_back(a[l.face] * b[l.face]);
    total += kernels::sum(prod);
  }
  return total * grid.cell_volume();
}

FieldNorms field_norms(const ScalarField& u) {
  const double dv = u.grid().cell_volume();
  FieldNorms nrm;
  nrm.mass = kernels::sum(u.values()) * dv;
  nrm.l1 = kernels::abs_sum(u.values()) * dv;
  nrm.l2 = std::sqrt(kernels::dot(u.values(), u.values()) * dv);
  nrm.linf = kernels::max_abs(u.values());
  const FaceField grad = gradient(u);
  nrm.h1_seminorm = std::sqrt(inner_faces(grad, grad));
  return nrm;
}

double l1_distance(const ScalarField& u, const ScalarField& v) {
  return field_norms(u - v).l1;
}

double l2_distance(const ScalarField& u, const ScalarField& v) {
  const ScalarField d = u - v;
  return std::sqrt(inner_l2(d, d));
}

}  // namespace fpk
