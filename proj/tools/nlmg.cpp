#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "nlmg/blowdown.hpp"
#include "nlmg/curvature.hpp"
#include "nlmg/dynamics.hpp"
#include "nlmg/errors.hpp"
#include "nlmg/io.hpp"
#include "nlmg/perimeter.hpp"
#include "nlmg/verify.hpp"

using namespace nlmg;

namespace {

struct Config {
  std::string input;
  std::string output;
  std::string options;
  std::optional<double> alpha;
  std::optional<int> n;
  std::optional<double> tol;
  std::uint64_t seed = 1;
  std::string suite = "all";
  std::string scales;
  std::string radii;
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_atomic(path, text);
  }
}

std::string replace_extension(const std::string& path, const std::string& ext) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ext;
  return path.substr(0, dot) + ext;
}

json params_json(const FracParams& p) { return {{"n", p.n}, {"alpha", p.alpha}, {"lambda", p.lambda}}; }

// --alpha replaces the file's value before validation; --n must agree with the file.
json load_input(const Config& c) {
  json j = read_json_file(c.input);
  if (!j.is_object()) throw ParseError("input must hold a JSON object");
  if (c.alpha) j["alpha"] = *c.alpha;
  if (c.n && j.contains("n") && j["n"] != *c.n) {
    throw ParseError("--n " + std::to_string(*c.n) + " does not match the input file", "n");
  }
  return j;
}

GraphField load_graph(const Config& c) { return graph_from_json(load_input(c)); }

VoxelSet load_voxels(const Config& c) { return voxels_from_json(load_input(c)); }

json options_file(const Config& c) {
  if (c.options.empty()) return json::object();
  json j = read_json_file(c.options);
  if (!j.is_object()) throw ParseError("options file must hold a JSON object");
  return j;
}

double number_option(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ParseError(std::string("key '") + key + "' must be a number", key);
  return j[key].get<double>();
}

std::vector<double> list_option(const json& j, const char* key, const std::string& flag, std::vector<double> fallback) {
  if (!flag.empty()) return parse_csv_reals(flag, key);
  if (!j.contains(key)) return fallback;
  if (!j[key].is_array()) throw ParseError(std::string("key '") + key + "' must be an array of numbers", key);
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw ParseError(std::string("key '") + key + "' holds a non-number", key);
    out.push_back(v.get<double>());
  }
  return out;
}

int run_curvature(const Config& c) {
  const GraphField u = load_graph(c);
  const CurvatureField f = curvature_field(u);
  emit(c.output, f.to_csv());
  return 0;
}

json perimeter_json(const PerimeterResult& r) {
  return {{"value", r.value}, {"err", r.err}, {"split", {r.split.first, r.split.second}}};
}

int run_perimeter(const Config& c) {
  const VoxelSet e = load_voxels(c);
  json out = {{"params", params_json(e.params())}};
  if (!c.radii.empty()) {
    const auto growth = perimeter_growth(e, parse_csv_reals(c.radii, "radii"));
    json rows = json::array();
    for (const auto& [R, r] : growth) {
      json row = perimeter_json(r);
      row["R"] = R;
      row["majorant"] = perimeter_json(ball_majorant(e, R));
      rows.push_back(row);
    }
    out["growth"] = rows;
    if (growth.size() >= 2) out["slope"] = loglog_slope(growth);
  } else {
    // Largest centered ball that stays a voxel inside the box.
    const Box& b = e.box();
    double radius = std::numeric_limits<double>::infinity();
    for (int a = 0; a < b.dim; ++a) radius = std::min(radius, 0.5 * b.extent(a) - e.voxel_size());
    const PerimeterResult r = frac_perimeter(e, Ball{b.center(), radius});
    out.update(perimeter_json(r));
    out["omega"] = {{"center", {b.center()[0], b.center()[1], b.center()[2]}}, {"radius", radius}};
    out["omega"]["center"].erase(static_cast<std::size_t>(b.dim));
  }
  emit(c.output, out.dump(2) + "\n");
  return 0;
}

int run_solve(const Config& c) {
  const GraphField u = load_graph(c);
  const json o = options_file(c);
  SolveOptions opts;
  opts.tolerance = c.tol ? *c.tol : number_option(o, "tol", opts.tolerance);
  const double mi = number_option(o, "max_iter", opts.max_iterations);
  if (mi < 0 || mi != std::floor(mi)) throw ParseError("key 'max_iter' must be a nonnegative integer", "max_iter");
  opts.max_iterations = static_cast<int>(mi);
  const double h = number_option(o, "h", 0.0);
  const SolveReport r = solve(u, h, opts);
  json rep = {{"iterations", r.iterations},         {"converged", r.converged},
              {"tolerance", r.tolerance},           {"h", h},
              {"residual_trace", r.residual_trace}, {"energy_trace", r.energy_trace},
              {"quadrature_err", r.quadrature_err}, {"params", params_json(u.params())}};
  if (c.output.empty() || c.output == "-") {
    rep["final"] = to_json(*r.final);
    emit("", rep.dump(2) + "\n");
  } else {
    write_graph_file(*r.final, c.output);
    write_text_atomic(replace_extension(c.output, ".report.json"), rep.dump(2) + "\n");
  }
  return 0;
}

int run_blowdown(const Config& c) {
  const GraphField u = load_graph(c);
  const json o = options_file(c);
  const int N = u.dim() + 1;
  BlowdownOptions opts;
  opts.R = number_option(o, "R", opts.R);
  const std::vector<double> scales = list_option(o, "scales", c.scales, {2, 4, 8, 16, 32});
  std::vector<Vec> dirs;
  if (o.contains("directions")) {
    if (!o["directions"].is_array()) throw ParseError("key 'directions' must be an array of vectors", "directions");
    for (const auto& d : o["directions"]) {
      if (!d.is_array() || static_cast<int>(d.size()) != N) {
        throw ParseError("key 'directions' entries must have " + std::to_string(N) + " components", "directions");
      }
      Vec v{};
      for (int a = 0; a < N; ++a) {
        if (!d[a].is_number()) throw ParseError("key 'directions' holds a non-number", "directions");
        v[a] = d[a].get<double>();
      }
      dirs.push_back(v);
    }
  } else {
    for (int a = 0; a < N; ++a) {
      Vec v{};
      v[a] = 1.0;
      dirs.push_back(v);
    }
  }
  const BlowdownReport r = blowdown_analyze(u, scales, dirs, opts);
  json jd = json::array(), split = json::array(), cyl = json::array();
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    jd.push_back(std::vector<double>(dirs[i].begin(), dirs[i].begin() + N));
    cyl.push_back(r.cylinder_defects[i]);
  }
  for (const Vec& v : r.split_directions) split.push_back(std::vector<double>(v.begin(), v.begin() + N));
  const json out = {{"scales", r.scales},
                    {"R", opts.R},
                    {"directions", jd},
                    {"cone_defects", r.cone_defects},
                    {"cylinder_defects", cyl},
                    {"center_gaps", r.center_gaps},
                    {"halfspace_defects", r.halfspace_defects},
                    {"tolerance", r.tolerance},
                    {"verdict", verdict_name(r.verdict)},
                    {"split_directions", split},
                    {"params", params_json(u.params())}};
  std::ostringstream csv;
  csv << "scale,cone_defect,halfspace_defect,center_gap";
  for (std::size_t i = 0; i < dirs.size(); ++i) csv << ",cylinder_defect_" << i;
  csv << "\n";
  for (std::size_t k = 0; k < r.scales.size(); ++k) {
    csv << format_double(r.scales[k]) << ',' << format_double(r.cone_defects[k]) << ','
        << format_double(r.halfspace_defects[k]) << ',' << format_double(r.center_gaps[k]);
    for (std::size_t i = 0; i < dirs.size(); ++i) csv << ',' << format_double(r.cylinder_defects[i][k]);
    csv << "\n";
  }
  if (c.output.empty() || c.output == "-") {
    std::cout << out.dump(2) << "\n" << csv.str();
  } else {
    write_text_atomic(c.output, out.dump(2) + "\n");
    write_text_atomic(replace_extension(c.output, ".csv"), csv.str());
  }
  return 0;
}

int run_verify(const Config& c) {
  std::vector<std::string> names;
  if (c.suite == "all") {
    names = suite_names();
  } else {
    std::stringstream ss(c.suite);
    for (std::string s; std::getline(ss, s, ',');) {
      std::vector<std::string> hits;
      for (const auto& n : suite_names()) {
        if (n == s) {
          hits = {n};
          break;
        }
        if (n.rfind(s, 0) == 0) hits.push_back(n);
      }
      if (hits.size() != 1) throw ParameterError("unknown or ambiguous suite '" + s + "'");
      names.push_back(hits[0]);
    }
  }
  std::vector<SuiteResult> results;
  bool all = true;
  for (const auto& n : names) {
    results.push_back(run_suite(n, c.seed));
    const SuiteResult& r = results.back();
    std::size_t ok = 0;
    for (const auto& k : r.cases) ok += k.pass;
    std::fprintf(stderr, "%-18s %s  %zu/%zu cases  %.2fs\n", n.c_str(), r.passed() ? "PASS" : "FAIL", ok, r.cases.size(),
                 r.seconds);
    for (const auto& k : r.cases) {
      if (!k.pass) std::fprintf(stderr, "    failed: %s (measured %.6g, bound %.6g)\n", k.name.c_str(), k.measured, k.bound);
    }
    all = all && r.passed();
  }
  emit(c.output, verify_json(results, c.seed).dump(2) + "\n");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal minimal graphs: curvature, perimeter, gradient flow, blow-downs, verification"};
  app.require_subcommand(1);
  Config c;
  double alpha = 0.0, tol = 0.0;
  int n = 0;

  auto add_common = [&](CLI::App* s, bool needs_input) {
    auto* in = s->add_option("--input", c.input, "Input JSON file");
    if (needs_input) in->required();
    s->add_option("--output", c.output, "Output path (stdout when omitted)");
    s->add_option("--alpha", alpha, "Override alpha in (0, 1)");
    s->add_option("--n", n, "Expected graph dimension (1 or 2)");
  };
  auto* curv = app.add_subcommand("curvature", "Graph curvature at every node with margin >= 2, as CSV");
  add_common(curv, true);
  auto* per = app.add_subcommand("perimeter", "Fractional perimeter of a voxel set");
  add_common(per, true);
  per->add_option("--radii", c.radii, "Comma-separated ball radii around the box center");
  auto* sol = app.add_subcommand("solve", "Gradient flow for U u = h with frozen exterior data");
  add_common(sol, true);
  sol->add_option("--options", c.options, "JSON options {\"h\", \"tol\", \"max_iter\"}");
  sol->add_option("--tol", tol, "Residual tolerance (overrides the options file)");
  auto* bd = app.add_subcommand("blowdown", "Blow-down analysis of a graph");
  add_common(bd, true);
  bd->add_option("--options", c.options, "JSON options {\"scales\", \"directions\", \"R\"}");
  bd->add_option("--scales", c.scales, "Comma-separated increasing scales");
  auto* ver = app.add_subcommand("verify", "Run the verification suites");
  ver->add_option("--suite", c.suite, "Suite name(s), comma-separated, or 'all'");
  ver->add_option("--seed", c.seed, "Seed for randomized cases");
  ver->add_option("--output", c.output, "JSON results path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (CLI::App* s : {curv, per, sol, bd}) {
    if (s->get_option("--alpha")->count()) c.alpha = alpha;
    if (s->get_option("--n")->count()) c.n = n;
  }
  if (sol->get_option("--tol")->count()) c.tol = tol;

  try {
    if (*curv) return run_curvature(c);
    if (*per) return run_perimeter(c);
    if (*sol) return run_solve(c);
    if (*bd) return run_blowdown(c);
    return run_verify(c);
  } catch (const ParseError& e) {
    std::cerr << "nlmg: parse error" << (e.key().empty() ? "" : " at key '" + e.key() + "'") << ": " << e.what() << "\n";
  } catch (const BudgetError& e) {
    std::cerr << "nlmg: " << e.what() << " (required far radius " << e.required_far_radius() << ")\n";
  } catch (const std::exception& e) {
    std::cerr << "nlmg: " << e.what() << "\n";
  }
  return 2;
}
