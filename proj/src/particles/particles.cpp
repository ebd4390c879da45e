#include "fpk/particles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

#include "fpk/field_io.hpp"

namespace fpk {
namespace {

// Particles are split into fixed blocks, each with its own generator, so the
// random stream of a particle does not depend on the thread count.
constexpr std::size_t kBlock = 4096;

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

enum Stream : std::uint64_t { kSampling = 1, kNoise = 2 };

bool inside(const Grid& g, double x) { return x >= -g.half_width() && x <= g.half_width(); }

double reflect(double x, double L) {
  // Fold onto [-L, L] by mirror images with period 4L.
  const double period = 4.0 * L;
  double y = std::fmod(x + L, period);
  if (y < 0.0) y += period;
  return y <= 2.0 * L ? y - L : 3.0 * L - y;
}

int cell_of(const Grid& g, double x) {
  const int i = static_cast<int>(std::floor((x + g.half_width()) / g.spacing()));
  return std::clamp(i, 0, g.n() - 1);
}

// Density at time t from the PDE snapshots, linear in time between them.
class PdeDensity {
 public:
  explicit PdeDensity(const Trajectory& tr) : tr_(tr) {}

  double operator()(double t, const Vec& x) const {
    const auto& ts = tr_.times;
    if (t <= ts.front()) return interpolate(tr_.fields.front(), x);
    if (t >= ts.back()) return interpolate(tr_.fields.back(), x);
    const auto k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    return (1.0 - w) * interpolate(tr_.fields[k - 1], x) + w * interpolate(tr_.fields[k], x);
  }

  /// The snapshot at time t, if there is one.
  const ScalarField* at(double t) const {
    for (std::size_t k = 0; k < tr_.times.size(); ++k) {
      if (std::abs(tr_.times[k] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return &tr_.fields[k];
    }
    return nullptr;
  }

 private:
  const Trajectory& tr_;
};

}  // namespace

const char* to_string(SdeMode mode) {
  return mode == SdeMode::pde_driven ? "pde_driven" : "self_consistent";
}
const char* to_string(DensityEstimator estimator) {
  return estimator == DensityEstimator::histogram ? "histogram" : "kernel";
}
const char* to_string(ParticleBoundary boundary) {
  return boundary == ParticleBoundary::reflecting ? "reflecting" : "none";
}

void validate(const SdeConfig& c) {
  if (c.N < 1) throw Error(ErrorCode::ConfigError, "N must be >= 1");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw Error(ErrorCode::ConfigError, "dt must be > 0");
  if (c.estimator == DensityEstimator::kernel && !(c.bandwidth > 0.0)) {
    throw Error(ErrorCode::ConfigError, "kernel estimator needs bandwidth > 0");
  }
  if (c.snapshot_stride < 1) throw Error(ErrorCode::ConfigError, "snapshot_stride must be >= 1");
  if (c.threads < 1) throw Error(ErrorCode::ConfigError, "threads must be >= 1");
}

Vec ParticleEnsemble::position(std::size_t p) const {
  Vec x{};
  for (int k = 0; k < dim; ++k) x[k] = positions[p * dim + k];
  return x;
}

ScalarField estimate_density(const ParticleEnsemble& e, const Grid& g, DensityEstimator estimator,
                             double bandwidth) {
  if (e.dim != g.dim()) throw Error(ErrorCode::ConfigError, "ensemble and grid dimensions differ");
  ScalarField rho(g);
  const std::size_t N = e.size();
  if (N == 0) return rho;
  const int d = g.dim();
  const double norm = 1.0 / (static_cast<double>(N) * g.cell_volume());

  if (estimator == DensityEstimator::histogram) {
    for (std::size_t p = 0; p < N; ++p) {
      const Vec x = e.position(p);
      bool in = true;
      for (int k = 0; k < d; ++k) in = in && inside(g, x[k]);
      if (!in) continue;
      std::size_t c = static_cast<std::size_t>(cell_of(g, x[0]));
      if (d == 2) c = c * g.n() + static_cast<std::size_t>(cell_of(g, x[1]));
      rho[c] += 1.0;
    }
    rho *= norm;
    return rho;
  }

  if (!(bandwidth > 0.0)) throw Error(ErrorCode::ConfigError, "kernel estimator needs bandwidth > 0");
  // Gaussian kernel truncated at 6 bandwidths, evaluated at cell centers.
  const double h = g.spacing();
  const int reach = static_cast<int>(std::ceil(6.0 * bandwidth / h));
  const double kn = std::pow(2.0 * std::numbers::pi * bandwidth * bandwidth, -0.5 * d) / N;
  const double inv2s2 = 0.5 / (bandwidth * bandwidth);
  for (std::size_t p = 0; p < N; ++p) {
    const Vec x = e.position(p);
    const int c0 = static_cast<int>(std::floor((x[0] + g.half_width()) / h));
    const int c1 = d == 2 ? static_cast<int>(std::floor((x[1] + g.half_width()) / h)) : 0;
    for (int i = std::max(0, c0 - reach); i <= std::min(g.n() - 1, c0 + reach); ++i) {
      const double dx = g.center(i) - x[0];
      if (d == 1) {
        rho[i] += kn * std::exp(-dx * dx * inv2s2);
        continue;
      }
      for (int j = std::max(0, c1 - reach); j <= std::min(g.n() - 1, c1 + reach); ++j) {
        const double dy = g.center(j) - x[1];
        rho[static_cast<std::size_t>(i) * g.n() + j] += kn * std::exp(-(dx * dx + dy * dy) * inv2s2);
      }
    }
  }
  return rho;
}

double interpolate(const ScalarField& f, const Vec& x) {
  const Grid& g = f.grid();
  const int n = g.n();
  std::array<int, kMaxDim> lo{}, hi{};
  std::array<double, kMaxDim> w{};
  for (int k = 0; k < g.dim(); ++k) {
    double s = (x[k] + g.half_width()) / g.spacing() - 0.5;
    const double r = std::round(s);
    if (std::abs(s - r) < 1e-9) s = r;  // cell centers reproduce cell values exactly
    const double fl = std::floor(s);
    int i0 = static_cast<int>(fl);
    double frac = s - fl;
    int i1 = i0 + 1;
    if (g.periodic()) {
      i0 = ((i0 % n) + n) % n;
      i1 = ((i1 % n) + n) % n;
    } else if (i0 < 0) {
      i0 = i1 = 0;
      frac = 0.0;
    } else if (i1 > n - 1) {
      i0 = i1 = n - 1;
      frac = 0.0;
    }
    lo[k] = i0;
    hi[k] = i1;
    w[k] = frac;
  }
  if (g.dim() == 1) return w[0] == 0.0 ? f[lo[0]] : (1.0 - w[0]) * f[lo[0]] + w[0] * f[hi[0]];
  auto at = [&](int i, int j) { return f[static_cast<std::size_t>(i) * n + j]; };
  return (1.0 - w[0]) * ((1.0 - w[1]) * at(lo[0], lo[1]) + w[1] * at(lo[0], hi[1])) +
         w[0] * ((1.0 - w[1]) * at(hi[0], lo[1]) + w[1] * at(hi[0], hi[1]));
}

ParticleEnsemble sample_initial(const ScalarField& density, std::size_t N, std::uint64_t seed) {
  const Grid& g = density.grid();
  const double dv = g.cell_volume();
  const double scale = std::max(1.0, field_norms(density).linf);
  std::vector<double> p(g.size());
  double mass = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!std::isfinite(density[c])) throw Error(ErrorCode::ConfigError, "initial density is not finite");
    if (density[c] < -1e-12 * scale) throw Error(ErrorCode::ConfigError, "initial density is negative");
    p[c] = std::max(0.0, density[c]) * dv;
    mass += p[c];
  }
  if (std::abs(mass - 1.0) > 1e-6) {
    throw Error(ErrorCode::ConfigError, "initial density must have unit mass, got " + format_double(mass));
  }

  std::vector<std::size_t> counts(g.size());
  std::vector<double> remainder(g.size());
  std::size_t placed = 0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double expect = static_cast<double>(N) * p[c] / mass;
    counts[c] = static_cast<std::size_t>(std::floor(expect));
    remainder[c] = expect - static_cast<double>(counts[c]);
    placed += counts[c];
  }
  auto rng = make_stream(seed, kSampling, 0);
  if (placed < N) {
    std::discrete_distribution<std::size_t> pick(remainder.begin(), remainder.end());
    for (std::size_t k = placed; k < N; ++k) ++counts[pick(rng)];
  }

  ParticleEnsemble e;
  e.dim = g.dim();
  e.rng_seed = seed;
  e.positions.reserve(N * e.dim);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  const double h = g.spacing();
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Vec center = g.cell_center(c);
    for (std::size_t k = 0; k < counts[c]; ++k) {
      for (int a = 0; a < e.dim; ++a) e.positions.push_back(center[a] + h * unit(rng));
    }
  }
  return e;
}

SimulationResult simulate(const CoefficientModel& model, const SdeConfig& config,
                          const ScalarField& u0_density, double T, const Trajectory* pde,
                          std::uint64_t seed) {
  validate(config);
  const Grid& g = u0_density.grid();
  if (model.dim() != g.dim()) throw Error(ErrorCode::ConfigError, "model and grid dimensions differ");
  if (config.mode == SdeMode::pde_driven && pde == nullptr) {
    throw Error(ErrorCode::ConfigError, "pde_driven mode needs a PDE trajectory");
  }
  if (pde != nullptr && !(pde->fields.front().grid() == g)) {
    throw Error(ErrorCode::ConfigError, "PDE trajectory lives on a different grid");
  }
  if (!(T >= 0.0)) throw Error(ErrorCode::ConfigError, "T must be >= 0");

  SimulationResult out;
  out.ensemble = sample_initial(u0_density, config.N, seed);
  ParticleEnsemble& e = out.ensemble;
  const std::size_t N = e.size();
  const int d = e.dim;
  const double L = g.half_width();

  // Marginal times: the PDE snapshots when comparing, else a stride over the SDE steps.
  std::vector<double> marks;
  if (pde != nullptr) {
    for (double t : pde->times) {
      if (t > 0.0 && t <= T * (1.0 + 1e-12)) marks.push_back(std::min(t, T));
    }
  } else {
    const auto times = step_times(T, config.dt);
    for (std::size_t k = 0; k < times.size(); ++k) {
      if ((k + 1) % static_cast<std::size_t>(config.snapshot_stride) == 0 || k + 1 == times.size()) {
        marks.push_back(times[k]);
      }
    }
  }
  if (marks.empty() || marks.back() < T) marks.push_back(T);
  if (T == 0.0) marks.clear();

  std::optional<PdeDensity> pde_rho;
  if (pde != nullptr) pde_rho.emplace(*pde);

  auto record = [&](double t) {
    ScalarField hist = estimate_density(e, g);
    if (pde_rho) {
      const ScalarField* ref = pde_rho->at(t);
      if (ref != nullptr) {
        out.distances.push_back(l1_distance(hist, *ref));
      } else {
        ScalarField interp(g);
        for (std::size_t c = 0; c < g.size(); ++c) interp[c] = (*pde_rho)(t, g.cell_center(c));
        out.distances.push_back(l1_distance(hist, interp));
      }
    }
    out.times.push_back(t);
    out.marginals.push_back(std::move(hist));
  };
  record(0.0);

  const std::size_t blocks = (N + kBlock - 1) / kBlock;
  std::vector<std::mt19937_64> streams;
  streams.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) streams.push_back(make_stream(seed, kNoise, b));

  std::vector<Error> failures;
  std::mutex failure_mutex;
  std::optional<ScalarField> rho_field;

  auto advance_block = [&](std::size_t b, double t, double dt) {
    std::normal_distribution<double> normal;
    auto& rng = streams[b];
    const std::size_t end = std::min(N, (b + 1) * kBlock);
    for (std::size_t p = b * kBlock; p < end; ++p) {
      const Vec x = e.position(p);
      const double rho = rho_field ? interpolate(*rho_field, x) : (*pde_rho)(t, x);
      const Vec drift = model.drift(t, x, rho);
      const double a = model.diffusion(t, x, rho);
      if (!std::isfinite(a) || !std::isfinite(drift[0]) || !std::isfinite(drift[1])) {
        throw Error(ErrorCode::NonFiniteCoefficient, "non-finite SDE coefficient");
      }
      if (a < 0.0) throw Error(ErrorCode::NegativeDiffusion, "a = " + format_double(a) + " < 0");
      const double sigma = std::sqrt(2.0 * a * dt);
      for (int k = 0; k < d; ++k) {
        double y = x[k] + drift[k] * dt + sigma * normal(rng);
        if (std::abs(y) > L) {
          if (config.boundary == ParticleBoundary::none) {
            throw Error(ErrorCode::ParticleEscaped,
                        "particle " + std::to_string(p) + " left the box at t = " + format_double(t + dt));
          }
          y = reflect(y, L);
        }
        e.positions[p * d + k] = y;
      }
    }
  };

  const int threads = static_cast<int>(std::min<std::size_t>(config.threads, blocks));
  double t = 0.0;
  for (double mark : marks) {
    while (t < mark) {
      const double dt = std::min(config.dt, mark - t);
      const bool last = mark - t <= config.dt * (1.0 + 1e-12);
      if (config.mode == SdeMode::self_consistent) {
        rho_field = estimate_density(e, g, config.estimator, config.bandwidth);
      }
      if (threads <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) advance_block(b, t, dt);
      } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < threads; ++w) {
          pool.emplace_back([&, w] {
            try {
              for (std::size_t b = w; b < blocks; b += threads) advance_block(b, t, dt);
            } catch (const Error& err) {
              std::lock_guard lock(failure_mutex);
              failures.push_back(err);
            }
          });
        }
        pool.clear();
        if (!failures.empty()) throw failures.front();
      }
      t = last ? mark : t + dt;
    }
    e.t = t;
    record(t);
  }
  e.t = T;
  return out;
}

void write_distances_csv(std::ostream& os, const SimulationResult& result) {
  os << "t,l1_distance\n";
  for (std::size_t k = 0; k < result.distances.size(); ++k) {
    os << format_double(result.times[k]) << ',' << format_double(result.distances[k]) << '\n';
  }
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(ErrorCode::IoError, "truncated checkpoint");
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const ParticleEnsemble& e) {
  put<std::int64_t>(os, static_cast<std::int64_t>(e.size()));
  put<std::int64_t>(os, e.dim);
  put<std::uint64_t>(os, e.rng_seed);
  put<double>(os, e.t);
  os.write(reinterpret_cast<const char*>(e.positions.data()),
           static_cast<std::streamsize>(e.positions.size() * sizeof(double)));
}

ParticleEnsemble read_checkpoint(std::istream& is) {
  ParticleEnsemble e;
  const auto N = get<std::int64_t>(is);
  const auto d = get<std::int64_t>(is);
  if (N < 0 || d < 1 || d > kMaxDim) throw Error(ErrorCode::IoError, "bad checkpoint header");
  e.dim = static_cast<int>(d);
  e.rng_seed = get<std::uint64_t>(is);
  e.t = get<double>(is);
  e.positions.resize(static_cast<std::size_t>(N * d));
  if (!is.read(reinterpret_cast<char*>(e.positions.data()),
               static_cast<std::streamsize>(e.positions.size() * sizeof(double)))) {
    throw Error(ErrorCode::IoError, "truncated checkpoint positions");
  }
  return e;
}

}  // namespace fpk
