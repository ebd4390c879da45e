#include "fpk/app/report_json.hpp"

#include <algorithm>
#include <cmath>

#include "fpk/field_io.hpp"

namespace fpk::app {

using nlohmann::json;

json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

namespace {

json point(double t, const Vec& x, int dim, double r) {
  return {{"t", t}, {"x", std::vector<double>(x.begin(), x.begin() + dim)}, {"r", r}};
}

}  // namespace

json to_json(const HypothesisReport& r) {
  json violations = json::array();
  for (const auto& v : r.violations) {
    violations.push_back({{"hypothesis", v.hypothesis},
                          {"sample", point(v.t, v.x, r.box.dim, v.r)},
                          {"residual", json_number(v.residual)}});
  }
  return {
      {"nu_hat", json_number(r.nu_hat)},
      {"sup_beta", json_number(r.sup_beta)},
      {"sup_beta_r", json_number(r.sup_beta_r)},
      {"sup_b", json_number(r.sup_b)},
      {"sup_rb_r", json_number(r.sup_rb_r)},
      {"sup_b_star_r", json_number(r.sup_b_star_r)},
      {"lambda_zero", json_number(r.lambda_zero)},
      {"capital_lambda", json_number(r.capital_lambda)},
      {"violations", violations},
      {"box",
       {{"dim", r.box.dim},
        {"T", r.box.T},
        {"half_width", r.box.half_width},
        {"r_min", r.box.r_min},
        {"r_max", r.box.r_max},
        {"samples", r.samples}}},
  };
}

json to_json(const CheckReport& r) {
  json location = json::object();
  if (r.step) location["step"] = *r.step;
  if (r.time) location["time"] = *r.time;
  json metrics = json::object();
  for (const auto& [key, value] : r.metrics) metrics[key] = json_number(value);
  return {{"id", r.id},
          {"pass", r.pass},
          {"worst_violation", json_number(r.worst_violation)},
          {"location", location},
          {"tolerance", json_number(r.tolerance)},
          {"notes", r.notes},
          {"metrics", metrics}};
}

json verification_document(std::vector<CheckReport> reports) {
  std::stable_sort(reports.begin(), reports.end(),
                   [](const CheckReport& a, const CheckReport& b) { return a.id < b.id; });
  json checks = json::array();
  bool all = true;
  for (const auto& r : reports) {
    checks.push_back(to_json(r));
    all = all && r.pass;
  }
  return {{"all_pass", all}, {"checks", checks}};
}

void write_json(const std::filesystem::path& path, const json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

}  // namespace fpk::app
