#include "fpk/app/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "fpk/field_io.hpp"

namespace fpk::app {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigError, where + ": " + what);
}

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf") return kInf;
      fail(where(key), "expected a number, got \"" + s + "\"");
    }
    if (!v.is_number()) fail(where(key), "expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(where(key), "expected an integer");
    return v.get<int>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(where(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(where(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(where(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) fail(where(key), "expected a number or an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(where(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  template <class E>
  E choice(const std::string& key, E fallback, std::initializer_list<std::pair<const char*, E>> options) {
    if (!has(key)) return fallback;
    const std::string s = string(key, "");
    for (const auto& [name, value] : options) {
      if (s == name) return value;
    }
    std::string list;
    for (const auto& o : options) list += std::string(list.empty() ? "" : ", ") + o.first;
    fail(where(key), "unknown value \"" + s + "\" (expected one of " + list + ")");
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(where(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vec vec_of(const std::vector<double>& v, const std::string& where) {
  if (v.size() > static_cast<std::size_t>(kMaxDim)) fail(where, "at most 2 components");
  Vec out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

const char* boundary_name(Boundary b) { return b == Boundary::periodic ? "periodic" : "zero_flux"; }

}  // namespace

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> ids{"energy",    "l1_bound",        "l1_contraction",
                                            "linf_bound", "mass",           "positivity",
                                            "resolvent_lipschitz", "weak_form"};
  return ids;
}

RunConfig parse_config(const json& doc) {
  RunConfig c;
  Reader top(doc, "");

  if (top.has("model")) {
    Reader m(top.raw("model"), "model");
    c.model_id = m.string("id", c.model_id);
    if (m.has("params")) {
      const json& p = m.raw("params");
      if (!p.is_object()) fail("model.params", "expected an object");
      Reader pr(p, "model.params");
      for (const auto& [key, value] : p.items()) c.model_params[key] = pr.numbers(key, {});
      pr.finish();
    }
    m.finish();
  }

  if (top.has("grid")) {
    Reader g(top.raw("grid"), "grid");
    c.grid.dim = g.integer("dim", c.grid.dim);
    c.grid.half_width = g.number("half_width", c.grid.half_width);
    c.grid.n = g.integer("n", c.grid.n);
    c.grid.boundary = g.choice("boundary", c.grid.boundary,
                               {{"periodic", Boundary::periodic}, {"zero_flux", Boundary::zero_flux}});
    g.finish();
  }

  if (top.has("initial")) {
    Reader i(top.raw("initial"), "initial");
    c.initial.kind = i.string("kind", c.initial.kind);
    if (c.initial.kind != "gaussian" && c.initial.kind != "file") {
      fail("initial.kind", "expected \"gaussian\" or \"file\"");
    }
    c.initial.center = vec_of(i.numbers("center", {}), "initial.center");
    c.initial.sigma = i.number("sigma", c.initial.sigma);
    c.initial.mass = i.number("mass", c.initial.mass);
    c.initial.path = i.string("path", c.initial.path);
    i.finish();
    if (c.initial.kind == "gaussian" && !(c.initial.sigma > 0.0)) fail("initial.sigma", "must be > 0");
    if (c.initial.kind == "file" && c.initial.path.empty()) fail("initial.path", "required for kind \"file\"");
  }

  if (top.has("hypotheses")) {
    Reader h(top.raw("hypotheses"), "hypotheses");
    if (h.has("T")) c.hypotheses.T = h.number("T", 0.0);
    if (h.has("half_width")) c.hypotheses.half_width = h.number("half_width", 0.0);
    if (h.has("r_min")) c.hypotheses.r_min = h.number("r_min", 0.0);
    if (h.has("r_max")) c.hypotheses.r_max = h.number("r_max", 0.0);
    c.hypotheses.samples = h.integer("samples", c.hypotheses.samples);
    h.finish();
  }

  if (top.has("solver")) {
    Reader s(top.raw("solver"), "solver");
    SolverConfig& sc = c.solver;
    sc.T = s.number("T", sc.T);
    sc.mu = s.number("mu", sc.mu);
    sc.eps = s.number("eps", sc.eps);
    sc.eps_schedule = s.numbers("eps_schedule", sc.eps_schedule);
    sc.flux = s.choice("flux", sc.flux, {{"centered", FluxMode::centered}, {"upwind", FluxMode::upwind}});
    sc.snapshot_stride = s.integer("snapshot_stride", sc.snapshot_stride);
    sc.range_margin = s.number("range_margin", sc.range_margin);
    c.continuation = s.boolean("continuation", c.continuation);
    if (s.has("tolerances")) {
      Reader t(s.raw("tolerances"), "solver.tolerances");
      ResolventTolerances& tol = sc.tol;
      tol.atol_per_volume = t.number("atol_per_volume", tol.atol_per_volume);
      tol.rtol = t.number("rtol", tol.rtol);
      tol.max_newton = t.integer("max_newton", tol.max_newton);
      tol.max_halvings = t.integer("max_halvings", tol.max_halvings);
      tol.max_picard = t.integer("max_picard", tol.max_picard);
      tol.linear_rtol = t.number("linear_rtol", tol.linear_rtol);
      tol.max_linear = t.integer("max_linear", tol.max_linear);
      t.finish();
    }
    s.finish();
  }

  if (top.has("sde")) {
    Reader s(top.raw("sde"), "sde");
    SdeSpec spec;
    SdeConfig& sc = spec.config;
    const int N = s.integer("N", static_cast<int>(sc.N));
    if (N < 1) fail("sde.N", "must be >= 1");
    sc.N = static_cast<std::size_t>(N);
    sc.dt = s.number("dt", sc.dt);
    sc.mode = s.choice("mode", sc.mode,
                       {{"pde_driven", SdeMode::pde_driven}, {"self_consistent", SdeMode::self_consistent}});
    sc.estimator = s.choice("estimator", sc.estimator,
                            {{"histogram", DensityEstimator::histogram}, {"kernel", DensityEstimator::kernel}});
    sc.bandwidth = s.number("bandwidth", sc.bandwidth);
    sc.boundary = s.choice("boundary", sc.boundary,
                           {{"reflecting", ParticleBoundary::reflecting}, {"none", ParticleBoundary::none}});
    sc.snapshot_stride = s.integer("snapshot_stride", sc.snapshot_stride);
    spec.pde_source = s.string("pde_source", spec.pde_source);
    s.finish();
    c.sde = spec;
  }

  if (top.has("checks")) {
    const json& v = top.raw("checks");
    if (!v.is_array()) fail("checks", "expected an array of check ids");
    for (const auto& e : v) {
      if (!e.is_string()) fail("checks", "expected an array of check ids");
      const auto id = e.get<std::string>();
      if (std::find(known_checks().begin(), known_checks().end(), id) == known_checks().end()) {
        fail("checks", "unknown check \"" + id + "\"");
      }
      c.checks.push_back(id);
    }
  }

  if (top.has("verify")) {
    Reader v(top.raw("verify"), "verify");
    VerifySpec& vs = c.verify;
    vs.l1_shift = v.number("l1_shift", vs.l1_shift);
    vs.refine = v.boolean("refine", vs.refine);
    vs.lipschitz_trials = v.integer("lipschitz_trials", vs.lipschitz_trials);
    vs.lipschitz_fraction = v.number("lipschitz_fraction", vs.lipschitz_fraction);
    vs.weak_form_max_ratio = v.number("weak_form_max_ratio", vs.weak_form_max_ratio);
    vs.l1_slope = v.number("l1_slope", vs.l1_slope);
    vs.positivity_tol = v.number("positivity_tol", vs.positivity_tol);
    vs.linf_tol = v.number("linf_tol", vs.linf_tol);
    vs.mass_identity_rtol = v.number("mass_identity_rtol", vs.mass_identity_rtol);
    vs.mass_drift_atol = v.number("mass_drift_atol", vs.mass_drift_atol);
    v.finish();
    if (vs.lipschitz_trials < 1) fail("verify.lipschitz_trials", "must be >= 1");
    if (!(vs.lipschitz_fraction > 0.0 && vs.lipschitz_fraction <= 0.5)) {
      fail("verify.lipschitz_fraction", "must lie in (0, 0.5]");
    }
  }

  c.output_dir = top.string("output_dir", c.output_dir.string());
  c.seed = top.unsigned_integer("seed", c.seed);
  top.finish();

  // Everything that can be checked without numerics is checked here.
  try {
    (void)c.grid.make();
    validate(c.solver);
    if (c.sde) validate(c.sde->config);
    (void)make_builtin_model(c.model_id, c.model_params, c.grid.dim);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::StepTooLarge) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (c.hypotheses.samples < 2) fail("hypotheses.samples", "must be >= 2");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json params = json::object();
  for (const auto& [key, value] : c.model_params) params[key] = value.size() == 1 ? json(value[0]) : json(value);
  const std::vector<double> center(c.initial.center.begin(), c.initial.center.begin() + c.grid.dim);

  json doc = {
      {"model", {{"id", c.model_id}, {"params", params}}},
      {"grid",
       {{"dim", c.grid.dim},
        {"half_width", c.grid.half_width},
        {"n", c.grid.n},
        {"boundary", boundary_name(c.grid.boundary)}}},
      {"initial",
       {{"kind", c.initial.kind},
        {"center", center},
        {"sigma", c.initial.sigma},
        {"mass", c.initial.mass},
        {"path", c.initial.path}}},
      {"solver",
       {{"T", c.solver.T},
        {"mu", c.solver.mu},
        {"eps", c.solver.eps},
        {"eps_schedule", c.solver.eps_schedule},
        {"flux", to_string(c.solver.flux)},
        {"snapshot_stride", c.solver.snapshot_stride},
        {"range_margin", c.solver.range_margin},
        {"continuation", c.continuation},
        {"tolerances",
         {{"atol_per_volume", c.solver.tol.atol_per_volume},
          {"rtol", c.solver.tol.rtol},
          {"max_newton", c.solver.tol.max_newton},
          {"max_halvings", c.solver.tol.max_halvings},
          {"max_picard", c.solver.tol.max_picard},
          {"linear_rtol", c.solver.tol.linear_rtol},
          {"max_linear", c.solver.tol.max_linear}}}}},
      {"checks", c.checks},
      {"verify",
       {{"l1_shift", c.verify.l1_shift},
        {"refine", c.verify.refine},
        {"lipschitz_trials", c.verify.lipschitz_trials},
        {"lipschitz_fraction", c.verify.lipschitz_fraction},
        {"weak_form_max_ratio", c.verify.weak_form_max_ratio},
        {"l1_slope", c.verify.l1_slope},
        {"positivity_tol", c.verify.positivity_tol},
        {"linf_tol", c.verify.linf_tol},
        {"mass_identity_rtol", c.verify.mass_identity_rtol},
        {"mass_drift_atol", c.verify.mass_drift_atol}}},
      {"output_dir", c.output_dir.string()},
      {"seed", c.seed},
  };
  json hyp = {{"samples", c.hypotheses.samples}};
  if (c.hypotheses.T) hyp["T"] = *c.hypotheses.T;
  if (c.hypotheses.half_width) hyp["half_width"] = *c.hypotheses.half_width;
  if (c.hypotheses.r_min) hyp["r_min"] = *c.hypotheses.r_min;
  if (c.hypotheses.r_max) hyp["r_max"] = *c.hypotheses.r_max;
  doc["hypotheses"] = hyp;
  if (c.sde) {
    const SdeConfig& s = c.sde->config;
    doc["sde"] = {{"N", s.N},
                  {"dt", s.dt},
                  {"mode", to_string(s.mode)},
                  {"estimator", to_string(s.estimator)},
                  {"bandwidth", number_json(s.bandwidth)},
                  {"boundary", to_string(s.boundary)},
                  {"snapshot_stride", s.snapshot_stride},
                  {"pde_source", c.sde->pde_source}};
  }
  return doc;
}

std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (char ch : name) words.push_back(static_cast<unsigned char>(ch));
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

ScalarField make_initial(const RunConfig& config, const Grid& grid) {
  if (config.initial.kind == "file") {
    std::ifstream in(config.initial.path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read initial data " + config.initial.path);
    return read_field_csv(in, grid);
  }
  const Vec c = config.initial.center;
  const double s2 = config.initial.sigma * config.initial.sigma;
  ScalarField u = ScalarField::sample(grid, [&](const Vec& x) {
    double q = 0.0;
    for (int k = 0; k < grid.dim(); ++k) q += (x[k] - c[k]) * (x[k] - c[k]);
    return std::exp(-0.5 * q / s2);
  });
  const double m = field_norms(u).mass;
  if (m > 0.0) u *= config.initial.mass / m;
  return u;
}

HypothesisBox hypothesis_box(const RunConfig& config, const ScalarField& u0) {
  const auto& h = config.hypotheses;
  const auto [lo, hi] = std::minmax_element(u0.values().begin(), u0.values().end());
  HypothesisBox box;
  box.dim = config.grid.dim;
  box.T = h.T.value_or(config.solver.T);
  box.half_width = h.half_width.value_or(config.grid.half_width);
  box.r_min = h.r_min.value_or(std::min(0.0, *lo));
  box.r_max = h.r_max.value_or(std::max(std::abs(*lo), std::abs(*hi)) + 1.0);
  return box;
}

int worker_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("FPK_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

}  // namespace fpk::app
