#pragma once

// Cell-centered grids on the truncated box [-L, L]^d and the conservative
// difference operators built on them.
//
// Layout: cell (i1[, i2]) lives at flat index i1 (d = 1) or i1*n + i2 (d = 2),
// so x2 is the contiguous axis. Face fields store n+1 faces per grid line
// along each axis; face f sits between cells f-1 and f.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "fpk/coefficients.hpp"

namespace fpk {

enum class Boundary { periodic, zero_flux };

class Grid {
 public:
  /// Throws InvalidGrid unless d ∈ {1,2}, n ≥ 4 and L > 0.
  Grid(int dim, double half_width, int n, Boundary boundary);

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  int n() const { return n_; }
  Boundary boundary() const { return boundary_; }
  bool periodic() const { return boundary_ == Boundary::periodic; }

  double spacing() const { return 2.0 * half_width_ / n_; }
  double cell_volume() const;
  double volume() const;
  std::size_t size() const;
  /// Faces stored along one axis (n+1 per line).
  std::size_t face_count() const;

  double center(int i) const { return -half_width_ + (i + 0.5) * spacing(); }
  Vec cell_center(std::size_t flat) const;
  /// Multi-index of a flat cell index.
  std::array<int, kMaxDim> unflatten(std::size_t flat) const;

  bool operator==(const Grid&) const = default;

 private:
  int dim_;
  double half_width_;
  int n_;
  Boundary boundary_;
};

class ScalarField {
 public:
  explicit ScalarField(const Grid& grid);
  ScalarField(const Grid& grid, std::vector<double> values);

  template <class F>
  static ScalarField sample(const Grid& grid, F&& f) {
    ScalarField out(grid);
    for (std::size_t c = 0; c < grid.size(); ++c) out.values_[c] = f(grid.cell_center(c));
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  /// Throws InvalidGrid when a value is NaN or infinite.
  void require_finite() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);

 private:
  Grid grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

/// Face-centered flux field, one component per axis.
class FaceField {
 public:
  explicit FaceField(const Grid& grid);

  const Grid& grid() const { return grid_; }
  std::span<double> axis(int k) { return faces_[k]; }
  std::span<const double> axis(int k) const { return faces_[k]; }

  /// Flat index of face `f` (0..n) along `axis` on the grid line through `cell`.
  std::size_t face_index(int axis, std::size_t cell, int f) const;

  /// Overwrites the boundary faces: zero for zero-flux, face n := face 0 for
  /// periodic grids.
  void enforce_boundary();

 private:
  Grid grid_;
  std::array<std::vector<double>, kMaxDim> faces_;
};

/// One face with its two neighbouring cells. Boundary faces of zero-flux
/// grids are omitted; the periodic wrap face appears once (as face 0).
struct FaceLink {
  std::size_t face;
  std::size_t left;
  std::size_t right;
};

std::vector<FaceLink> face_links(const Grid& grid, int axis);

// ---------------------------------------------------------------------------
// Operators

ScalarField laplacian(const ScalarField& u);
/// Difference of face fluxes per cell; boundary faces are sanitized first.
ScalarField divergence(const FaceField& flux);
/// Face gradient; boundary faces follow the grid's boundary mode.
FaceField gradient(const ScalarField& u);

/// Weighted L² pairing Σ u·v·h^d.
double inner_l2(const ScalarField& u, const ScalarField& v);
/// Weighted face pairing over the distinct faces.
double inner_faces(const FaceField& f, const FaceField& g);

struct FieldNorms {
  double mass = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double h1_seminorm = 0.0;
};

FieldNorms field_norms(const ScalarField& u);
double l1_distance(const ScalarField& u, const ScalarField& v);
double l2_distance(const ScalarField& u, const ScalarField& v);

// ---------------------------------------------------------------------------
// Helmholtz resolvent (εI - Δ)⁻¹ and the H⁻¹ geometry it induces

enum class HelmholtzMethod { spectral, cg };

/// Solves ε·y - Δy = f. Spectral solves are exact up to rounding (DFT for
/// periodic grids, DCT-II for zero-flux grids); the CG route runs diagonally
/// preconditioned conjugate gradients to rtol 1e-10 within 10·n iterations
/// and throws SolverDiverged otherwise.
ScalarField helmholtz_solve(double eps, const ScalarField& f,
                            HelmholtzMethod method = HelmholtzMethod::spectral);

/// Applies εI - Δ.
ScalarField helmholtz_apply(double eps, const ScalarField& y);

/// ⟨u, v⟩_{-1,ε} = Σ (εI-Δ)⁻¹u · v · h^d.
double h_neg1_inner(double eps, const ScalarField& u, const ScalarField& v);
double h_neg1_norm(double eps, const ScalarField& u);

}  // namespace fpk
