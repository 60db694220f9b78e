#include "acflab/cli.hpp"

#include "acflab/io.hpp"
#include "acflab/oracles.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <numbers>
#include <sstream>

namespace acflab {

using nlohmann::json;
namespace fs = std::filesystem;

double parse_number(const std::string& text) {
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
    const std::string a = text.substr(0, slash), b = text.substr(slash + 1);
    std::size_t ua = 0, ub = 0;
    const double num = std::stod(a, &ua), den = std::stod(b, &ub);
    if (ua != a.size() || ub != b.size() || den == 0.0) throw std::invalid_argument(text);
    return num / den;
  } catch (const std::logic_error&) {
    throw UsageError("not a number: '" + text + "'");
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
  if (out.empty()) throw UsageError("empty list: '" + text + "'");
  return out;
}

namespace {

// Typed access to a JSON object with the JSON-pointer path in every error.
class Cfg {
 public:
  Cfg(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& raw(const std::string& key) const {
    if (!has(key)) fail(key, "missing required field");
    return j_.at(key);
  }
  std::string where(const std::string& key) const { return path_ + "/" + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw UsageError((key.empty() ? (path_.empty() ? "/" : path_) : where(key)) + ": " + what);
  }

  double number(const std::string& key) const {
    const json& v = raw(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      try {
        return parse_number(v.get<std::string>());
      } catch (const UsageError& e) {
        fail(key, e.what());
      }
    }
    fail(key, "expected a number");
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  int integer(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw UsageError(where(key) + "/" + std::to_string(i) + ": expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? numbers(key) : fallback;
  }

  Point point(const std::string& key, int dim) const {
    const auto v = numbers(key);
    if (static_cast<int>(v.size()) != dim) fail(key, "expected " + std::to_string(dim) + " coordinates");
    return Eigen::Map<const Point>(v.data(), dim);
  }

  Cfg child(const std::string& key) const { return Cfg(raw(key), where(key)); }

 private:
  const json& j_;
  std::string path_;
};

GridSpec grid_from(const Cfg& c) {
  const int dim = c.integer("dim", 2);
  if (dim != 2 && dim != 3) c.fail("dim", "must be 2 or 3");
  const double lower = c.number("lower", -1.0), upper = c.number("upper", 1.0), h = c.number("h");
  if (!(h > 0.0)) c.fail("h", "must be positive");
  if (!(upper > lower)) c.fail("upper", "must exceed lower");
  if ((upper - lower) / h > 2048.0) c.fail("h", "too many cells per axis (limit 2048)");
  return GridSpec::cube(dim, lower, upper, h);
}

OracleField oracle_from(const Cfg& c, int dim) {
  const std::string name = c.string("name");
  if (name == "linear") {
    Point a = c.has("a") ? c.point("a", dim) : Point(Point::Unit(dim, 0));
    return OracleField::linear(a, c.number("c", 0.0));
  }
  if (name == "half-plane") {
    Point axis = c.has("axis") ? c.point("axis", dim) : Point(Point::Unit(dim, 0));
    if (std::abs(axis.norm() - 1.0) > 1e-9) c.fail("axis", "must be a unit vector");
    return OracleField::half_plane_linear(c.number("a", 1.0), axis.normalized(), c.number("offset", 0.0));
  }
  if (name == "alt-caffarelli") {
    if (dim != 3) c.fail("name", "alt-caffarelli lives in three dimensions (grid dim 3)");
    return OracleField::alt_caffarelli(ac_profile_build());
  }
  if (name == "annulus") {
    const double rin = c.number("rin", 0.25), rout = c.number("rout", 1.0);
    if (!(0.0 < rin && rin < rout)) c.fail("rin", "need 0 < rin < rout");
    return OracleField::annulus_capacitor(dim, rin, rout);
  }
  if (name == "homogeneous-cone") {
    if (dim != 2) c.fail("name", "homogeneous-cone is two-dimensional");
    const double opening = c.number("opening", std::numbers::pi);
    if (!(opening > 0.0 && opening <= 2.0 * std::numbers::pi)) c.fail("opening", "must lie in (0, 2 pi]");
    return OracleField::homogeneous_cone_2d(opening, c.number("start", 0.0));
  }
  c.fail("name", "unknown oracle '" + name + "' (linear, half-plane, alt-caffarelli, annulus, homogeneous-cone)");
}

json oracle_metadata(const OracleField& o) {
  json m{{"oracle", o.name()}, {"dim", o.dim()}};
  if (o.tag() == OracleField::Tag::alt_caffarelli) {
    m["theta0_rad"] = o.profile().theta0;
    m["theta0_deg"] = o.profile().theta0 * 180.0 / std::numbers::pi;
    m["fprime_theta0"] = o.profile().fprime_theta0;
  }
  if (o.tag() == OracleField::Tag::annulus_capacitor) {
    m["rin"] = o.r_in();
    m["rout"] = o.r_out();
  }
  return m;
}

json grid_json(const GridSpec& g) {
  json shape = json::array();
  for (int k = 0; k < g.dim; ++k) shape.push_back(g.shape[k]);
  json origin = json::array();
  for (int k = 0; k < g.dim; ++k) origin.push_back(g.origin[k]);
  return json{{"dim", g.dim}, {"shape", shape}, {"spacing", g.spacing}, {"origin", origin}};
}

json solve_json(const SolveReport& r) {
  return json{{"iterations", r.iterations},
              {"final_residual", r.final_residual},
              {"converged", r.converged},
              {"unknowns", r.unknowns}};
}

}  // namespace

DiniModulus modulus_from_json(const json& j, const std::string& path) {
  const Cfg c(j, path);
  const std::string family = c.string("family");
  if (family == "zero") return DiniModulus::zero();
  if (family == "log_squared") return DiniModulus::log_squared();
  try {
    if (family == "hoelder") return DiniModulus::hoelder(c.number("alpha"), c.number("coefficient", 1.0));
    if (family == "tabulated") return DiniModulus::tabulated(c.numbers("t"), c.numbers("w"));
  } catch (const ContractViolation& e) {
    c.fail("", e.what());
  }
  c.fail("family", "unknown modulus family '" + family + "' (zero, hoelder, log_squared, tabulated)");
}

Fixture fixture_from_json(const json& fixture, const json& grid) {
  const Cfg f(fixture, "/fixture");
  Fixture out;
  out.kind = f.string("type");
  if (out.kind == "ring" || out.kind == "zigzag") {
    const double h = Cfg(grid, "/grid").number("h");
    if (!(h > 0.0)) throw UsageError("/grid/h: must be positive");
    if (out.kind == "ring") {
      const double rin = f.number("rin", 0.25), rout = f.number("rout", 1.0);
      if (!(0.0 < rin && rin < rout && rout <= 1.0)) f.fail("rin", "need 0 < rin < rout <= 1");
      RingFixture r = ring_fixture(h, rin, rout);
      out.domain = r.domain;
      out.g = r.g;
      out.u = ScalarField(r.grid);
      out.default_y0 = make_point({rin, 0.0});
    } else {
      const int cells = f.integer("half_width_cells", 6);
      if (cells < 2) f.fail("half_width_cells", "must be at least 2");
      ZigzagFixture z = zigzag_fixture(h, cells * h, f.number("valley_height", -0.25), f.integer("teeth", 8));
      out.domain = z.domain;
      out.g = z.g;
      out.u = ScalarField(z.grid);
      out.default_y0 = z.valley;
    }
    out.metadata = json{{"fixture", out.kind}, {"grid", grid_json(out.u.grid())}};
    return out;
  }

  const GridSpec g = grid_from(Cfg(grid, "/grid"));
  if (out.kind == "oracle") {
    const OracleField o = oracle_from(f, g.dim);
    out.u = oracle_sample(o, g).value;
    out.exact = [o](const Point& x) { return o.value(x); };
    out.metadata = oracle_metadata(o);
  } else if (out.kind == "capacitor") {
    const double rin = f.number("rin", 0.25), rout = f.number("rout", 1.0);
    if (!(0.0 < rin && rin < rout)) f.fail("rin", "need 0 < rin < rout");
    const double extent = std::min(-g.origin[0], g.upper()[0]);
    if (!(rout <= extent)) f.fail("rout", "the outer radius must fit in the grid");
    Solution s = capacitor_fixture(g.dim, g.spacing, rin, rout, extent);
    out.u = std::move(s.field);
    out.metadata = json{{"fixture", "capacitor"}, {"rin", rin}, {"rout", rout}, {"solve", solve_json(s.report)}};
  } else if (out.kind == "quadratic") {
    const double c = f.number("coefficient", -1.0);
    out.u = sample(g, [c](const Point& x) { return c * x.squaredNorm(); });
    out.exact = [c](const Point& x) { return c * x.squaredNorm(); };
    out.metadata = json{{"fixture", "quadratic"}, {"coefficient", c}};
  } else if (out.kind == "file") {
    try {
      out.u = load_sfld(f.string("path"));
    } catch (const std::exception& e) {
      f.fail("path", e.what());
    }
    out.metadata = json{{"fixture", "file"}, {"path", f.string("path")}};
  } else {
    f.fail("type", "unknown fixture '" + out.kind + "' (oracle, capacitor, quadratic, file, ring, zigzag)");
  }
  out.metadata["grid"] = grid_json(out.u.grid());
  return out;
}

namespace {

TouchSpec touch_from(const Cfg& c) {
  TouchSpec t;
  t.modulus = c.has("modulus") ? modulus_from_json(c.raw("modulus"), c.where("modulus")) : DiniModulus::zero();
  t.reach = c.number("reach", 0.1);
  t.tol = c.number("tol", 0.0);
  t.directions = c.integer("directions", 72);
  if (!(t.reach > 0.0)) c.fail("reach", "must be positive");
  if (t.directions < 4) c.fail("directions", "need at least 4");
  return t;
}

UscExperimentConfig usc_from(const Cfg& c, const Fixture& fx, std::uint64_t seed) {
  const int dim = fx.u.grid().dim;
  UscExperimentConfig cfg;
  cfg.y0 = c.point("y0", dim);
  cfg.eps = c.numbers("eps", cfg.eps);
  cfg.samples = c.integer("samples", cfg.samples);
  cfg.radii = c.numbers("radii");
  cfg.delta = c.number("delta", cfg.delta);
  cfg.K = c.number("K", cfg.K);
  cfg.seed = seed;
  cfg.subsolution_lower = c.number("subsolution_lower", cfg.subsolution_lower);
  cfg.subsolution_tol = c.number("subsolution_tol", cfg.subsolution_tol);
  cfg.subsolution_exclude_cells = c.number("subsolution_exclude_cells", 0.0);
  cfg.maxima_noise = c.number("maxima_noise", cfg.maxima_noise);
  if (c.has("touch")) cfg.touch = touch_from(c.child("touch"));
  cfg.hopf = c.boolean("hopf", false);
  if (cfg.hopf && !cfg.touch) c.fail("hopf", "needs a touch section");
  return cfg;
}

// Contract violations raised while validating an experiment against its
// fixture are configuration errors too.
template <typename Fn>
ExperimentReport as_usage(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ContractViolation& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const AdmissibilityError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

ExperimentReport run_one(const Cfg& c, const Fixture& fx, std::uint64_t seed) {
  const std::string type = c.string("type");
  const int dim = fx.u.grid().dim;
  const bool dirichlet_fixture = fx.domain.has_value();
  if (type != "dirichlet" && dirichlet_fixture)
    c.fail("type", "'" + type + "' needs a field fixture, not a Dirichlet domain");

  if (type == "usc") {
    const auto cfg = usc_from(c, fx, seed);
    return as_usage(c.path(), [&] { return usc_interior_experiment(fx.u, cfg, fx.exact); });
  }
  if (type == "directional") {
    const auto cfg = usc_from(c, fx, seed);
    const Point d = c.point("direction", dim);
    if (std::abs(d.norm() - 1.0) > 1e-9) c.fail("direction", "must be a unit vector");
    return as_usage(c.path(), [&] { return directional_usc_check(fx.u, d, cfg, fx.exact); });
  }
  if (type == "barrier") {
    BarrierConfig cfg;
    cfg.y0 = c.point("y0", dim);
    cfg.r0 = c.number("r0", cfg.r0);
    cfg.C = c.number("C", cfg.C);
    cfg.residual_tol = c.number("residual_tol", cfg.residual_tol);
    cfg.touch_tol = c.number("touch_tol", 0.0);
    cfg.exclude = c.number("exclude_cells", cfg.exclude);
    if (c.has("reference_gradient")) cfg.reference_gradient = c.number("reference_gradient");
    cfg.reference_rel_tol = c.number("reference_rel_tol", cfg.reference_rel_tol);
    const Cfg cone = c.child("cone");
    Point axis = cone.point("axis", dim);
    if (!(axis.norm() > 0.0)) cone.fail("axis", "must be non-zero");
    const DiniModulus w =
        cone.has("modulus") ? modulus_from_json(cone.raw("modulus"), cone.where("modulus")) : DiniModulus::zero();
    const TouchingCone k(cfg.y0, axis.normalized(), w, cone.number("reach", 1.0));
    return as_usage(c.path(), [&] { return barrier_lipschitz_experiment(fx.u, k, cfg, fx.exact); });
  }
  if (type == "blowup") {
    BlowupConfig cfg;
    cfg.y0 = c.point("y0", dim);
    cfg.radii = c.numbers("radii", cfg.radii);
    cfg.estimate_radii = c.numbers("estimate_radii");
    cfg.half_width = c.number("half_width", cfg.half_width);
    cfg.h_ref = c.number("h_ref", cfg.h_ref);
    cfg.c1_rel_tol = c.number("c1_rel_tol", cfg.c1_rel_tol);
    cfg.residual_slack = c.number("residual_slack", cfg.residual_slack);
    if (c.has("reference_axis")) cfg.reference_axis = c.point("reference_axis", dim);
    cfg.axis_tol_deg = c.number("axis_tol_deg", cfg.axis_tol_deg);
    return as_usage(c.path(), [&] { return asymptotic_development_experiment(fx.u, cfg, fx.exact); });
  }
  if (type == "dirichlet") {
    if (!dirichlet_fixture) c.fail("type", "'dirichlet' needs a ring or zigzag fixture");
    DirichletExperimentConfig cfg;
    cfg.y0 = c.has("y0") ? c.point("y0", dim) : *fx.default_y0;
    cfg.eps = c.numbers("eps", cfg.eps);
    cfg.samples = c.integer("samples", cfg.samples);
    cfg.radii = c.numbers("radii");
    cfg.K = c.number("K", cfg.K);
    cfg.seed = seed;
    if (c.has("touch")) cfg.touch = touch_from(c.child("touch"));
    cfg.force = c.boolean("force", false);
    cfg.residual_tol = c.number("residual_tol", cfg.residual_tol);
    return as_usage(c.path(), [&] { return dirichlet_boundary_experiment(*fx.domain, fx.g, cfg); });
  }
  if (type == "subsolution") {
    const double lower = c.number("lower_bound", -1.0), tol = c.number("tol", 1e-9);
    return as_usage(c.path(), [&] { return subsolution_experiment(fx.u, lower, tol); });
  }
  c.fail("type", "unknown experiment '" + type + "' (usc, directional, barrier, blowup, dirichlet, subsolution)");
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

std::string two_digits(std::size_t i) {
  std::ostringstream os;
  os << std::setw(2) << std::setfill('0') << i;
  return os.str();
}

}  // namespace

RunResult run_config(const json& config, const std::vector<std::string>& types, const std::string& out_dir,
                     std::ostream& log, std::ostream* timing) {
  const Cfg root(config, "");
  if (root.string("schema") != kRunSchema)
    root.fail("schema", std::string("expected \"") + kRunSchema + "\"");
  const std::uint64_t seed = static_cast<std::uint64_t>(root.integer("seed", 1));
  const json& list = root.raw("experiments");
  if (!list.is_array() || list.empty()) root.fail("experiments", "expected a non-empty array");

  // Validate the selection before any expensive work.
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Cfg e(list[i], "/experiments/" + std::to_string(i));
    const std::string type = e.string("type");
    if (types.empty() || std::find(types.begin(), types.end(), type) != types.end()) selected.push_back(i);
  }
  if (selected.empty()) throw UsageError("/experiments: no experiment of the requested type");

  const Fixture fx = fixture_from_json(root.raw("fixture"), root.has("grid") ? root.raw("grid") : json::object());

  RunResult result;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "fixture.json", fx.metadata.dump(2) + "\n");
  }
  for (std::size_t i : selected) {
    const Cfg e(list[i], "/experiments/" + std::to_string(i));
    const std::uint64_t s = static_cast<std::uint64_t>(e.integer("seed", static_cast<int>(seed)));
    ExperimentReport rep = run_one(e, fx, s);
    const std::string name = e.string("name", two_digits(i) + "_" + e.string("type"));
    log << name << ": " << to_string(rep.verdict) << (rep.detail.empty() ? "" : " (" + rep.detail + ")") << "\n";
    if (timing) *timing << name << ": " << rep.runtime_seconds << " s\n";
    if (!out_dir.empty()) {
      json j = rep.to_json();
      j["fixture"] = fx.metadata;
      write_text(fs::path(out_dir) / (name + ".json"), j.dump(2) + "\n");
      for (const CsvTable& t : rep.tables) {
        std::ofstream os(fs::path(out_dir) / (name + "_" + t.name + ".csv"));
        write_csv(os, t.header, t.rows);
      }
    }
    if (rep.verdict == Verdict::fail) result.exit_code = 2;
    result.reports.push_back(std::move(rep));
  }
  return result;
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("--config: cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw UsageError("--config: " + std::string(e.what()));
  }
}

void write_gradient_components(const std::string& prefix, const VectorField<double>& grad) {
  for (int k = 0; k < grad.grid.dim; ++k) {
    ScalarField c(grad.grid, Eigen::VectorXd(grad.components.row(k).transpose()));
    save_sfld(prefix + ".grad" + std::to_string(k + 1) + ".sfld", c);
  }
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"acflab: monotonicity-formula lab for upper semi-continuity of |grad u|"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Sample a closed-form field");
  std::string oracle_name, out_prefix, h_text = "1/64", axis_text, a_text;
  int dim = 0;
  double lower = -1.0, upper = 1.0, c0 = 0.0, offset = 0.0, rin = 0.25, rout = 1.0;
  double opening = std::numbers::pi, start = 0.0;
  oracle->add_option("name", oracle_name, "linear, half-plane, alt-caffarelli, annulus, homogeneous-cone")->required();
  oracle->add_option("--h", h_text, "Grid spacing, e.g. 1/128");
  oracle->add_option("--dim", dim, "2 or 3 (alt-caffarelli forces 3)");
  oracle->add_option("--lower", lower);
  oracle->add_option("--upper", upper);
  oracle->add_option("--a", a_text, "Slope (half-plane) or comma-separated coefficients (linear)");
  oracle->add_option("--c", c0, "Constant term (linear)");
  oracle->add_option("--axis", axis_text, "Comma-separated unit axis (half-plane)");
  oracle->add_option("--offset", offset);
  oracle->add_option("--rin", rin);
  oracle->add_option("--rout", rout);
  oracle->add_option("--opening", opening);
  oracle->add_option("--start", start);
  oracle->add_option("--out", out_prefix, "Output prefix")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Solve a fixture Dirichlet problem");
  std::string problem = "capacitor";
  int half_width_cells = 6;
  solve->add_option("--problem", problem, "capacitor, ring or zigzag");
  solve->add_option("--h", h_text);
  solve->add_option("--dim", dim);
  solve->add_option("--rin", rin);
  solve->add_option("--rout", rout);
  solve->add_option("--half-width-cells", half_width_cells);
  solve->add_option("--out", out_prefix)->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Radius sweep and gradient estimate at one point");
  std::string field_path, y_text, radii_text;
  std::optional<double> level;
  double delta = 1.0;
  sweep->add_option("--field", field_path)->required();
  sweep->add_option("--y", y_text, "Comma-separated base point")->required();
  sweep->add_option("--radii", radii_text, "Comma-separated decreasing radii")->required();
  sweep->add_option("--level", level, "u(y) when known exactly");
  sweep->add_option("--delta", delta);
  sweep->add_option("--out", out_prefix)->required();

  // experiment runners
  std::string config_path, out_dir;
  std::optional<int> seed_override;
  std::vector<std::pair<CLI::App*, std::vector<std::string>>> runners;
  auto add_runner = [&](const std::string& name, const std::string& help, std::vector<std::string> types) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "acflab-run/1 JSON file")->required();
    sub->add_option("--out", out_dir, "Report directory (defaults to the config's output)");
    sub->add_option("--seed", seed_override, "Override the shell-sampling seed");
    runners.emplace_back(sub, std::move(types));
  };
  add_runner("usc", "Run the usc and directional experiments of a config", {"usc", "directional"});
  add_runner("barrier", "Run the barrier experiments of a config", {"barrier"});
  add_runner("blowup", "Run the blow-up experiments of a config", {"blowup"});
  add_runner("dirichlet", "Run the Dirichlet boundary experiments of a config", {"dirichlet"});
  add_runner("report", "Run every experiment of a config", {});
  add_runner("experiment", "Alias of report", {});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*oracle) {
      const double h = parse_number(h_text);
      const bool ac = oracle_name == "alt-caffarelli";
      const int d = ac ? 3 : (dim == 0 ? 2 : dim);
      if (ac && dim != 0 && dim != 3) throw UsageError("--dim: alt-caffarelli is three-dimensional");
      if (ac && !oracle->get_option("--lower")->count()) lower = -0.5;
      if (ac && !oracle->get_option("--upper")->count()) upper = 0.5;
      json spec{{"type", "oracle"}, {"name", oracle_name}, {"c", c0}, {"offset", offset}, {"rin", rin},
                {"rout", rout}, {"opening", opening}, {"start", start}};
      if (!a_text.empty()) {
        const auto a = parse_list(a_text);
        if (oracle_name == "linear") spec["a"] = a;
        else spec["a"] = a.front();
      }
      if (!axis_text.empty()) spec["axis"] = parse_list(axis_text);
      const json grid{{"dim", d}, {"lower", lower}, {"upper", upper}, {"h", h}};
      const Cfg c(spec, "/oracle");
      const OracleField o = oracle_from(c, d);
      const GridSpec g = grid_from(Cfg(grid, "/grid"));
      const SampledOracle s = oracle_sample(o, g);
      save_sfld(out_prefix + ".sfld", s.value);
      write_gradient_components(out_prefix, s.gradient);
      json meta = oracle_metadata(o);
      meta["grid"] = grid_json(g);
      write_text(out_prefix + ".json", meta.dump(2) + "\n");
      out << meta.dump(2) << "\n";
      return 0;
    }
    if (*solve) {
      const double h = parse_number(h_text);
      json fixture{{"type", problem}, {"rin", rin}, {"rout", rout}, {"half_width_cells", half_width_cells}};
      const json grid{{"dim", dim == 0 ? 2 : dim}, {"lower", -1.0}, {"upper", 1.0}, {"h", h}};
      if (problem != "capacitor" && problem != "ring" && problem != "zigzag")
        throw UsageError("--problem: expected capacitor, ring or zigzag");
      if (problem == "capacitor") fixture["rout"] = std::min(rout, 1.0);
      Fixture fx = fixture_from_json(fixture, grid);
      ScalarField u = fx.u;
      if (fx.domain) {
        const ScalarField data = sample(fx.u.grid(), fx.g);
        Solution s = solve_dirichlet(DirichletProblem{*fx.domain, data, 0.0});
        u = std::move(s.field);
        fx.metadata["solve"] = solve_json(s.report);
        save_sfld(out_prefix + ".mask.sfld", *fx.domain);
      }
      save_sfld(out_prefix + ".sfld", u);
      write_text(out_prefix + ".json", fx.metadata.dump(2) + "\n");
      out << fx.metadata.dump(2) << "\n";
      return 0;
    }
    if (*sweep) {
      ScalarField u;
      try {
        u = load_sfld(field_path);
      } catch (const std::exception& e) {
        throw UsageError("--field: " + std::string(e.what()));
      }
      const GridSpec& g = u.grid();
      const auto yv = parse_list(y_text);
      if (static_cast<int>(yv.size()) != g.dim) throw UsageError("--y: expected " + std::to_string(g.dim) + " coordinates");
      const Point y = Eigen::Map<const Point>(yv.data(), g.dim);
      if (!g.contains(y)) throw UsageError("--y: point outside the grid");
      const auto radii = parse_list(radii_text);
      double rmax = std::numeric_limits<double>::infinity();
      for (int k = 0; k < g.dim; ++k) rmax = std::min({rmax, y[k] - g.origin[k], g.upper()[k] - y[k]});
      try {
        require_admissible_radii(g, y, radii);
      } catch (const ContractViolation& e) {
        std::ostringstream os;
        os << "--radii: " << e.what() << "; admissible radii lie in [" << format_double(min_radius(g)) << ", "
           << format_double(rmax) << "], strictly decreasing";
        throw UsageError(os.str());
      }
      const BasePoint b = level ? make_base_point(u, y, *level) : make_base_point(u, y);
      GradientEstimate est;
      try {
        est = gradient_estimate(u, b, radii, delta);
      } catch (const ContractViolation& e) {
        throw UsageError("--radii: " + std::string(e.what()));
      }
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < radii.size(); ++i) rows.push_back({radii[i], est.sweep.dirichlet[i]});
      {
        std::ofstream os(out_prefix + ".csv");
        write_csv(os, {"r", "I"}, rows);
      }
      const LimitFit& f = est.sweep.fit;
      json j{{"y", yv},
             {"level", b.level},
             {"radii", radii},
             {"dirichlet", est.sweep.dirichlet},
             {"fit", {{"limit", f.limit}, {"raw_limit", f.raw_limit}, {"slope", f.slope}, {"delta", f.delta},
                      {"residual", f.residual}, {"low_confidence", f.low_confidence}}},
             {"c0", c0_closed_form(g.dim)},
             {"gradient_estimate", est.value}};
      write_text(out_prefix + ".json", j.dump(2) + "\n");
      out << j.dump(2) << "\n";
      return 0;
    }
    for (auto& [sub, types] : runners) {
      if (!*sub) continue;
      json config = read_json_file(config_path);
      if (seed_override) {
        if (!config.is_object()) throw UsageError("/: expected an object");
        config["seed"] = *seed_override;
      }
      std::string dir = out_dir;
      if (dir.empty() && config.is_object() && config.contains("output")) {
        if (!config["output"].is_string()) throw UsageError("/output: expected a string");
        dir = config["output"].get<std::string>();
      }
      return run_config(config, types, dir, out, &err).exit_code;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace acflab
