#pragma once

// Interacting particle approximation of the McKean–Vlasov equation
//   dX = b(t, X, ρ(t,X)) dt + √(2a(t, X, ρ(t,X))) dW,
// whose one-time marginals are the densities solved for by the stepper.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fpk/stepper.hpp"

namespace fpk {

enum class SdeMode { pde_driven, self_consistent };
enum class DensityEstimator { histogram, kernel };
enum class ParticleBoundary { reflecting, none };

const char* to_string(SdeMode mode);
const char* to_string(DensityEstimator estimator);
const char* to_string(ParticleBoundary boundary);

struct SdeConfig {
  std::size_t N = 10000;
  double dt = 1e-3;
  SdeMode mode = SdeMode::pde_driven;
  DensityEstimator estimator = DensityEstimator::histogram;
  /// Gaussian kernel standard deviation; used by the kernel estimator only.
  double bandwidth = 0.0;
  ParticleBoundary boundary = ParticleBoundary::reflecting;
  /// Marginals are recorded every `snapshot_stride` steps (plus the last)
  /// when no PDE trajectory fixes the comparison times.
  int snapshot_stride = 10;
  /// Worker threads for the particle update; results do not depend on it.
  int threads = 1;
};

void validate(const SdeConfig& config);

struct ParticleEnsemble {
  int dim = 1;
  /// N×d, particle-major.
  std::vector<double> positions;
  std::uint64_t rng_seed = 0;
  double t = 0.0;

  std::size_t size() const { return positions.size() / static_cast<std::size_t>(dim); }
  Vec position(std::size_t p) const;
};

/// Histogram: counts/(N·h^d) per cell; kernel: Gaussian kernel sum with the
/// same normalization. Mass outside the box is dropped.
ScalarField estimate_density(const ParticleEnsemble& ensemble, const Grid& grid,
                             DensityEstimator estimator = DensityEstimator::histogram,
                             double bandwidth = 0.0);

/// Multilinear interpolation between cell centers; constant extension past
/// the outermost centers on zero-flux grids, wrap-around on periodic grids.
double interpolate(const ScalarField& field, const Vec& x);

/// Stratified draw: ⌊N·p_c⌋ particles per cell plus a multinomial draw of
/// the remainder, each placed uniformly within its cell.
ParticleEnsemble sample_initial(const ScalarField& density, std::size_t N, std::uint64_t seed);

struct SimulationResult {
  ParticleEnsemble ensemble;
  std::vector<double> times;
  std::vector<ScalarField> marginals;  // histograms on the density grid
  /// L¹ distance to the PDE field at each marginal time; empty without a PDE trajectory.
  std::vector<double> distances;
};

/// Throws ConfigError in pde_driven mode without a trajectory, and
/// ParticleEscaped when a particle leaves the box under boundary = none.
SimulationResult simulate(const CoefficientModel& model, const SdeConfig& config,
                          const ScalarField& u0_density, double T,
                          const Trajectory* pde_trajectory, std::uint64_t seed);

/// Header "t,l1_distance".
void write_distances_csv(std::ostream& os, const SimulationResult& result);

/// Little-endian int64 N, int64 d, uint64 seed, float64 t, then N×d float64.
void write_checkpoint(std::ostream& os, const ParticleEnsemble& ensemble);
ParticleEnsemble read_checkpoint(std::istream& is);

}  // namespace fpk
