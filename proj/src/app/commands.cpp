#include "fpk/app/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "fpk/app/report_json.hpp"
#include "fpk/field_io.hpp"
#include "fpk/invariants.hpp"
#include "fpk/kernels.hpp"

namespace fpk::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void note(const CommandOptions& o, const std::string& line) {
  if (!o.quiet) std::cerr << line << '\n';
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

// Everything a run needs before numerics: grid, model, initial data and the
// hypothesis report, with the step-size and L∞ constants copied into the
// solver configuration.
struct Prepared {
  Grid grid;
  ModelPtr model;
  ScalarField u0;
  HypothesisReport report;
  SolverConfig solver;
};

Prepared prepare(const RunConfig& c) {
  Grid grid = c.grid.make();
  ModelPtr model = make_builtin_model(c.model_id, c.model_params, c.grid.dim);
  ScalarField u0 = make_initial(c, grid);
  HypothesisReport report = check_hypotheses(*model, hypothesis_box(c, u0), c.hypotheses.samples);
  SolverConfig solver = c.solver;
  solver.lambda_zero = report.lambda_zero;
  solver.capital_lambda = std::isfinite(report.capital_lambda) ? report.capital_lambda : 0.0;
  return {grid, model, u0, report, solver};
}

void require_solvable(const Prepared& p) {
  if (!(p.report.nu_hat > 0.0)) {
    throw Error(ErrorCode::ConfigError,
                "nu_hat = " + format_double(p.report.nu_hat) + " <= 0: beta is not strictly monotone on the box");
  }
  validate(p.solver);
}

void start_output(const RunConfig& c) {
  fs::create_directories(c.output_dir);
  write_json(c.output_dir / "config.json", to_json(c));
}

double sup_diffusion(const CoefficientModel& model, const HypothesisBox& box, int samples) {
  double sup = 0.0;
  auto lin = [&](double a, double b, int k) { return samples == 1 ? a : a + (b - a) * k / (samples - 1); };
  for (int it = 0; it < samples; ++it) {
    const double t = lin(0.0, box.T, it);
    for (int ix = 0; ix < samples; ++ix) {
      for (int iy = 0; iy < (box.dim == 2 ? samples : 1); ++iy) {
        const Vec x{lin(-box.half_width, box.half_width, ix),
                    box.dim == 2 ? lin(-box.half_width, box.half_width, iy) : 0.0};
        for (int ir = 0; ir < samples; ++ir) {
          sup = std::max(sup, std::abs(model.diffusion(t, x, lin(box.r_min, box.r_max, ir))));
        }
      }
    }
  }
  return sup;
}

Grid refined(const Grid& g) { return Grid(g.dim(), g.half_width(), 2 * g.n(), g.boundary()); }

ScalarField shifted_initial(const RunConfig& c, const Grid& grid, double shift) {
  if (c.initial.kind != "gaussian") {
    ScalarField u = make_initial(c, grid);
    u *= 1.0 + shift;
    return u;
  }
  RunConfig moved = c;
  moved.initial.center[0] += shift;
  return make_initial(moved, grid);
}

// Runs independent jobs on a small pool; results keep job order.
std::vector<std::vector<CheckReport>> run_jobs(std::vector<std::function<std::vector<CheckReport>()>> jobs,
                                               int threads) {
  std::vector<std::vector<CheckReport>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::size_t next = 0;
  std::mutex m;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard lock(m);
        if (next >= jobs.size()) return;
        k = next++;
      }
      try {
        results[k] = jobs[k]();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

void write_simulation(const fs::path& dir, const SimulationResult& r) {
  fs::create_directories(dir / "marginals");
  std::string index = "index,t,file\n";
  for (std::size_t k = 0; k < r.marginals.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "marginal_%05zu.csv", k);
    write_text(dir / "marginals" / name, render([&](std::ostream& os) { write_field_csv(os, r.marginals[k]); }));
    index += std::to_string(k) + "," + format_double(r.times[k]) + ",marginals/" + name + "\n";
  }
  write_text(dir / "marginals.csv", index);
  write_text(dir / "distances.csv", render([&](std::ostream& os) { write_distances_csv(os, r); }));
  write_text(dir / "checkpoint.bin", render([&](std::ostream& os) { write_checkpoint(os, r.ensemble); }));
}

}  // namespace

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::StepTooLarge:
    case ErrorCode::InvalidGrid:
    case ErrorCode::DegenerateBox:
    case ErrorCode::IoError:
    case ErrorCode::TestFunctionNotSupported:
      return 2;
    default:
      return 3;
  }
}

void write_trajectory(const fs::path& dir, const Trajectory& tr) {
  fs::create_directories(dir / "snapshots");
  std::string index = "index,step,t,file\n";
  for (std::size_t k = 0; k < tr.fields.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%05zu.csv", k);
    write_text(dir / "snapshots" / name, render([&](std::ostream& os) { write_field_csv(os, tr.fields[k]); }));
    index += std::to_string(k) + "," + std::to_string(tr.snapshot_steps[k]) + "," + format_double(tr.times[k]) +
             ",snapshots/" + name + "\n";
  }
  write_text(dir / "snapshots.csv", index);
  write_text(dir / "diagnostics.csv", render([&](std::ostream& os) { write_diagnostics_csv(os, tr); }));
  write_text(dir / "final.bin", render([&](std::ostream& os) { write_field_binary(os, tr.final_field()); }));
}

Trajectory read_trajectory(const fs::path& dir, const Grid& grid) {
  std::ifstream idx(dir / "snapshots.csv");
  if (!idx) throw Error(ErrorCode::IoError, "no snapshots.csv in " + dir.string());
  std::string line;
  std::getline(idx, line);
  if (line != "index,step,t,file") throw Error(ErrorCode::IoError, "bad snapshots.csv header in " + dir.string());
  Trajectory tr;
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string index, step, t, file;
    if (!std::getline(ss, index, ',') || !std::getline(ss, step, ',') || !std::getline(ss, t, ',') ||
        !std::getline(ss, file)) {
      throw Error(ErrorCode::IoError, "bad snapshots.csv row: " + line);
    }
    std::ifstream in(dir / file);
    if (!in) throw Error(ErrorCode::IoError, "missing snapshot " + (dir / file).string());
    tr.fields.push_back(read_field_csv(in, grid));
    tr.times.push_back(parse_double(t, "snapshot time"));
    tr.snapshot_steps.push_back(static_cast<int>(parse_integer(step, "snapshot step")));
  }
  if (tr.fields.empty()) throw Error(ErrorCode::IoError, "no snapshots listed in " + dir.string());
  tr.initial = field_norms(tr.fields.front());
  return tr;
}

// ---------------------------------------------------------------------------

int cmd_check_hypotheses(const RunConfig& c, const CommandOptions& o) {
  const Prepared p = prepare(c);
  start_output(c);
  const json doc = to_json(p.report);
  write_json(c.output_dir / "hypotheses.json", doc);
  note(o, "nu_hat " + format_double(p.report.nu_hat) + ", lambda_zero " + format_double(p.report.lambda_zero) +
              ", capital_lambda " + format_double(p.report.capital_lambda) + ", violations " +
              std::to_string(p.report.violations.size()));
  if (!o.quiet) std::cout << doc.dump(2) << '\n';
  return p.report.violations.empty() ? 0 : 1;
}

int cmd_solve(const RunConfig& c, const CommandOptions& o) {
  const Prepared p = prepare(c);
  require_solvable(p);
  start_output(c);
  write_json(c.output_dir / "hypotheses.json", to_json(p.report));
  if (!p.report.violations.empty()) {
    note(o, "warning: " + std::to_string(p.report.violations.size()) + " hypothesis violations on the sample box");
  }

  if (!c.continuation) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const Trajectory tr = solve_trajectory(*p.model, p.solver, p.u0);
      write_trajectory(c.output_dir, tr);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      note(o, std::to_string(tr.diagnostics.size()) + " steps in " + fmt("%.2f", secs) + " s, mass " +
                  format_double(field_norms(tr.final_field()).mass));
    } catch (const StepFailed& e) {
      write_trajectory(c.output_dir, e.partial());
      note(o, e.what());
      return exit_code_for(e);
    }
    return 0;
  }

  const auto levels = epsilon_continuation(*p.model, p.solver, p.u0);
  std::string table = "k,eps,cauchy_gap\n";
  for (std::size_t k = 0; k < levels.size(); ++k) {
    write_trajectory(c.output_dir / ("eps_" + std::to_string(k)), levels[k].trajectory);
    table += std::to_string(k) + "," + format_double(levels[k].eps) + "," +
             (levels[k].cauchy_gap ? format_double(*levels[k].cauchy_gap) : std::string()) + "\n";
    if (levels[k].cauchy_gap) {
      note(o, "eps " + format_double(levels[k].eps) + ": gap " + format_double(*levels[k].cauchy_gap));
    }
  }
  write_text(c.output_dir / "continuation.csv", table);
  return 0;
}

int cmd_verify(const RunConfig& c, const CommandOptions& o) {
  const Prepared p = prepare(c);
  if (c.checks.empty()) {
    start_output(c);
    write_json(c.output_dir / "verification.json", verification_document({}));
    return 0;
  }
  require_solvable(p);
  start_output(c);
  write_json(c.output_dir / "hypotheses.json", to_json(p.report));

  const auto wants = [&](const char* id) { return std::find(c.checks.begin(), c.checks.end(), id) != c.checks.end(); };
  const VerifySpec& v = c.verify;
  SolverConfig every = p.solver;
  every.snapshot_stride = 1;

  std::optional<Trajectory> base;
  if (wants("positivity") || wants("mass") || wants("linf_bound") || wants("l1_bound") || wants("energy") ||
      wants("weak_form")) {
    base = solve_trajectory(*p.model, every, p.u0);
  }

  std::vector<std::function<std::vector<CheckReport>()>> jobs;
  if (wants("positivity")) jobs.push_back([&] { return std::vector{positivity_check(*base, v.positivity_tol)}; });
  if (wants("mass")) {
    jobs.push_back([&] {
      const double sup_a = sup_diffusion(*p.model, p.report.box, c.hypotheses.samples);
      return std::vector{mass_check(*base, sup_a, v.mass_identity_rtol, v.mass_drift_atol)};
    });
  }
  if (wants("linf_bound")) {
    jobs.push_back([&] { return std::vector{linf_bound_check(*base, p.report.capital_lambda, v.linf_tol)}; });
  }
  if (wants("l1_bound")) {
    jobs.push_back([&] { return std::vector{l1_bound_check(*base, p.grid.spacing(), v.l1_slope)}; });
  }
  if (wants("energy")) {
    jobs.push_back([&] {
      const EnergyReport coarse = energy_estimate(*base);
      CheckReport r;
      r.id = "energy";
      r.metrics["constant"] = coarse.constant;
      r.step = coarse.worst_step;
      if (v.refine) {
        const Grid g2 = refined(p.grid);
        const EnergyReport fine = energy_estimate(solve_trajectory(*p.model, p.solver, make_initial(c, g2)));
        r.metrics["constant_refined"] = fine.constant;
        r.worst_violation = coarse.constant > 0.0 ? fine.constant / coarse.constant : 0.0;
        r.tolerance = 10.0;
        r.notes = "growth of the measured energy constant when n doubles";
      } else {
        r.worst_violation = coarse.constant;
        r.tolerance = kInf;
        r.notes = "energy constant reported, not asserted";
      }
      return std::vector{finalize(r)};
    });
  }
  if (wants("l1_contraction")) {
    jobs.push_back([&] {
      auto run = [&](const Grid& g) {
        return l1_contraction_check(*p.model, p.solver, make_initial(c, g), shifted_initial(c, g, v.l1_shift),
                                    v.l1_slope);
      };
      const CheckReport coarse = run(p.grid);
      if (!v.refine) return std::vector{coarse};
      const CheckReport fine = run(refined(p.grid));
      return std::vector{coarse, l1_contraction_refinement(coarse, fine)};
    });
  }
  if (wants("resolvent_lipschitz")) {
    jobs.push_back([&] {
      const Grid g(p.grid.dim(), p.grid.half_width(), p.grid.n(), Boundary::periodic);
      LipschitzSetup s{.model = p.model.get(),
                       .t = 0.0,
                       .lambda = std::isfinite(p.report.lambda_zero) ? v.lipschitz_fraction * p.report.lambda_zero
                                                                     : p.solver.mu,
                       .eps = p.solver.eps,
                       .lambda_zero = p.report.lambda_zero,
                       .flux = p.solver.flux};
      return std::vector{resolvent_lipschitz_check(s, g, v.lipschitz_trials, substream_seed(c.seed, "lipschitz"))};
    });
  }
  if (wants("weak_form")) {
    jobs.push_back([&] {
      const auto tests = default_test_functions(p.grid, p.solver.T);
      const WeakFormResult coarse = weak_form_residual(*base, *p.model, tests);
      if (!v.refine) {
        CheckReport r;
        r.id = "weak_form";
        r.worst_violation = coarse.constant;
        r.tolerance = kInf;
        r.metrics["constant"] = coarse.constant;
        r.notes = "residual constant reported, not asserted (refinement disabled)";
        return std::vector{finalize(r)};
      }
      const Grid g2 = refined(p.grid);
      SolverConfig half = every;
      half.mu = 0.5 * every.mu;
      const WeakFormResult fine =
          weak_form_residual(solve_trajectory(*p.model, half, make_initial(c, g2)), *p.model, tests);
      return std::vector{weak_form_refinement(coarse, fine, v.weak_form_max_ratio)};
    });
  }

  std::vector<CheckReport> reports;
  for (auto& group : run_jobs(std::move(jobs), worker_threads())) {
    for (auto& r : group) reports.push_back(std::move(r));
  }
  const json doc = verification_document(reports);
  write_json(c.output_dir / "verification.json", doc);
  for (const auto& r : doc["checks"]) {
    note(o, std::string(r["pass"].get<bool>() ? "PASS " : "FAIL ") + r["id"].get<std::string>() +
                "  worst " + r["worst_violation"].dump() + "  tol " + r["tolerance"].dump());
  }
  return doc["all_pass"].get<bool>() ? 0 : 1;
}

int cmd_particles(const RunConfig& c, const CommandOptions& o) {
  if (!c.sde) throw Error(ErrorCode::ConfigError, "particles needs an \"sde\" section");
  const SdeSpec& spec = *c.sde;
  if (spec.config.mode == SdeMode::pde_driven && spec.pde_source == "none") {
    throw Error(ErrorCode::ConfigError, "pde_driven mode needs a PDE trajectory (sde.pde_source)");
  }
  const Prepared p = prepare(c);
  std::optional<Trajectory> pde;
  if (spec.pde_source == "co_run") {
    require_solvable(p);
  } else if (spec.pde_source != "none") {
    pde = read_trajectory(spec.pde_source, p.grid);
  }
  start_output(c);
  if (spec.pde_source == "co_run") {
    pde = solve_trajectory(*p.model, p.solver, p.u0);
    write_trajectory(c.output_dir / "pde", *pde);
  }

  SdeConfig sde = spec.config;
  sde.threads = worker_threads();
  const double T = pde ? pde->final_time() : c.solver.T;
  const SimulationResult r =
      simulate(*p.model, sde, p.u0, T, pde ? &*pde : nullptr, substream_seed(c.seed, "particles"));
  write_simulation(c.output_dir, r);
  json summary = {{"N", r.ensemble.size()}, {"T", T}, {"marginals", r.marginals.size()}};
  if (!r.distances.empty()) {
    summary["final_l1_distance"] = r.distances.back();
    note(o, "L1 distance to the PDE at T = " + format_double(T) + ": " + format_double(r.distances.back()));
  }
  write_json(c.output_dir / "particles.json", summary);
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_bench(const std::optional<fs::path>& output_dir, const CommandOptions& o) {
  using clock = std::chrono::steady_clock;
  const std::size_t len = std::size_t(1) << 20;
  std::vector<double> x(len), y(len);
  for (std::size_t k = 0; k < len; ++k) {
    x[k] = std::sin(0.001 * static_cast<double>(k));
    y[k] = std::cos(0.0007 * static_cast<double>(k));
  }
  const Grid g2(2, 1.0, 512, Boundary::periodic);
  const ScalarField f2 = ScalarField::sample(g2, [](const Vec& p) { return std::sin(3 * p[0]) * std::cos(2 * p[1]); });

  auto time = [&](auto&& body) {
    const int reps = 20;
    const auto t0 = clock::now();
    double sink = 0.0;
    for (int r = 0; r < reps; ++r) sink += body();
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count() / reps;
    return std::pair{ms, sink / reps};
  };

  json doc = json::object();
  std::vector<std::pair<std::string, std::vector<double>>> values;
  const kernels::Isa original = kernels::active().isa;
  for (kernels::Isa isa : {kernels::Isa::scalar, kernels::Isa::avx2}) {
    if (!kernels::isa_supported(isa)) continue;
    kernels::set_active(isa);
    const auto [t_dot, v_dot] = time([&] { return kernels::dot(x, y); });
    const auto [t_sum, v_sum] = time([&] { return kernels::abs_sum(x); });
    const auto [t_lap, v_lap] = time([&] { return kernels::sum(laplacian(f2).values()); });
    const std::string name(kernels::to_string(isa));
    doc[name] = {{"dot_ms", t_dot}, {"abs_sum_ms", t_sum}, {"laplacian_512x512_ms", t_lap}};
    values.push_back({name, {v_dot, v_sum, v_lap}});
    note(o, name + ": dot " + fmt("%.3f", t_dot) + " ms, abs_sum " + fmt("%.3f", t_sum) + " ms, laplacian " +
                fmt("%.3f", t_lap) + " ms");
  }
  kernels::set_active(original);
  bool identical = true;
  for (const auto& [name, vals] : values) identical = identical && vals == values.front().second;
  doc["identical_results"] = identical;
  note(o, std::string("results identical across instruction sets: ") + (identical ? "yes" : "NO"));
  if (!o.quiet) std::cout << doc.dump(2) << '\n';
  if (output_dir) {
    fs::create_directories(*output_dir);
    write_json(*output_dir / "bench.json", doc);
  }
  return identical ? 0 : 1;
}

}  // namespace fpk::app
