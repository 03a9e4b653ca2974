// replicator4: command-line front end.
//
//   replicator4 classify --matrix data/M_IV.json
//   replicator4 orbit --matrix data/M_IV.json --x0 0.4,0.3,0.2,0.1
//
// Exit status: 0 ok, 1 module failure (JSON error on stdout), 2 bad arguments.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "replicator4/replicator4.hpp"

namespace r4 = replicator4;
using r4::Json;

namespace {

struct Config {
  std::string subcommand;
  std::string matrix;
  std::string mode = "rational";
  double rtol = 1e-10;
  double atol = 1e-12;
  std::uint64_t seed = 1;
  std::string out = "-";
  std::string drift_out;
  std::string x0;
  std::vector<std::string> x0_list;
  std::vector<std::string> trajectories;
  double t_end = 100;
  double dt = 0.01;
  double horizon = 200;
  double closure = 1e-6;
  double delta = 1e-3;
  int probes = 16;
  int samples = 20;
  double boundary_t_end = 200;
  int starts = 3;
  double drift_budget = 0;
};

std::string read_source(const std::string& src) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(src, ec)) {
    std::ifstream in(src);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return src;
}

r4::Vec<4> parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto b = tok.find_first_not_of(" \t");
    const auto e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) r4::fail(r4::ErrorKind::ParseError, "empty coordinate in \"" + text + "\"");
    v.push_back(r4::to_double(r4::parse_rational(tok.substr(b, e - b + 1))));
  }
  if (v.size() != 4) r4::fail(r4::ErrorKind::DimensionError, "a point needs 4 coordinates");
  const double s = v[0] + v[1] + v[2] + v[3];
  if (std::abs(s - 1) > 1e-9) r4::fail(r4::ErrorKind::PreconditionFailed, "coordinates must sum to 1");
  return {v[0], v[1], v[2], v[3]};
}

std::uint64_t effective_seed(const Config& c);

Json meta(const Config& c) {
  Json config{{"matrix", c.matrix}, {"rtol", c.rtol}, {"atol", c.atol}, {"seed", effective_seed(c)}};
  if (c.subcommand == "simulate") {
    config["x0"] = c.x0;
    config["t_end"] = c.t_end;
    config["dt"] = c.dt;
  } else if (c.subcommand == "orbit") {
    config["x0"] = c.x0;
    config["horizon"] = c.horizon;
    config["closure_tol"] = c.closure;
    config["delta"] = c.delta;
    config["probes"] = c.probes;
  } else if (c.subcommand == "boundary") {
    config["samples"] = c.samples;
    config["t_end"] = c.boundary_t_end;
  } else if (c.subcommand == "verify") {
    config["starts"] = c.starts;
    config["horizon"] = c.horizon;
    config["delta"] = c.delta;
    config["probes"] = c.probes;
    config["samples"] = c.samples;
    config["t_end"] = c.boundary_t_end;
  }
  return {{"tool", r4::kToolName},
          {"version", r4::kToolVersion},
          {"schema_version", r4::kSchemaVersion},
          {"subcommand", c.subcommand},
          {"arithmetic", c.mode},
          {"config", config}};
}

void emit(const Config& c, const std::string& text) {
  if (c.out.empty() || c.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out);
  if (!f) r4::fail(r4::ErrorKind::PreconditionFailed, "cannot write " + c.out);
  f << text;
}

void emit_json(const Config& c, Json body) {
  Json doc = meta(c);
  for (auto& [k, v] : body.items()) doc[k] = v;
  emit(c, doc.dump(2) + "\n");
}

r4::IntegratorOptions integrator(const Config& c) {
  r4::IntegratorOptions o;
  o.rtol = c.rtol;
  o.atol = c.atol;
  if (c.drift_budget > 0) o.drift_ceiling = c.drift_budget;
  return o;
}

r4::OrbitOptions orbit_options(const Config& c) {
  r4::OrbitOptions o;
  o.integrator = integrator(c);
  o.closure_tol = c.closure;
  return o;
}

std::uint64_t effective_seed(const Config& c) {
  if (const char* env = std::getenv("REPLICATOR4_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      r4::fail(r4::ErrorKind::ParseError, "REPLICATOR4_SEED is not an unsigned integer");
    }
  }
  return c.seed;
}

// Everything downstream of matrix parsing, in either arithmetic.
template <r4::Scalar T>
struct Pipeline {
  r4::PayoffMatrix<T> a;
  r4::PayoffMatrix<double> af;
  r4::ClassificationReport<T> cls;

  explicit Pipeline(const r4::PayoffMatrix<T>& m, const Config& c)
      : a(m), af(m.to_float()), cls(r4::classify_matrix(m, c.atol, 1e-10)) {}

  void require_permanent(const char* what) const {
    if (!cls.permanent)
      r4::fail(r4::ErrorKind::PreconditionFailed,
               std::string(what) + " needs a permanent matrix (" + cls.reason + ")");
  }

  r4::NullLineSection<T> section() const { return r4::kernel_line_section(a, cls.label, 1e-12, 1e-10); }
};

template <r4::Scalar T>
int run_classify(const Config& c, const Pipeline<T>& p) {
  emit_json(c, r4::classification_json(p.cls));
  return 0;
}

template <r4::Scalar T>
int run_kernel(const Config& c, const Pipeline<T>& p) {
  p.require_permanent("kernel");
  emit_json(c, {{"class", r4::to_string(p.cls.label.cls)}, {"section", r4::section_json(p.section())}});
  return 0;
}

std::string format_row(double t, const r4::Vec<4>& x) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.10g,%.17g,%.17g,%.17g,%.17g\n", t, x[0], x[1], x[2], x[3]);
  return buf;
}

template <r4::Scalar T>
int run_simulate(const Config& c, const Pipeline<T>& p) {
  if (!(c.dt > 0) || !(c.t_end > 0)) r4::fail(r4::ErrorKind::PreconditionFailed, "need dt > 0 and t_end > 0");
  const r4::Vec<4> x0 = parse_point(c.x0);
  std::vector<r4::Vec<4>> monitored;
  std::optional<r4::ReferencePair> pair;
  if (p.cls.permanent) {
    const auto sec = p.section();
    if (r4::distance_to_segment(x0, r4::segment_of(sec)) > 1e-8) {
      pair = r4::select_reference_points(p.af, sec, x0, orbit_options(c));
      monitored = {pair->z_prime, pair->z_double_prime};
    }
  }
  const auto tr = r4::integrate<4>(r4::to_mat(p.af), x0, c.t_end, integrator(c), monitored);
  std::string csv = "t,x1,x2,x3,x4\n";
  for (const auto& [t, x] : tr.sample(c.dt)) csv += format_row(t, x);
  emit(c, csv);

  std::string sidecar = c.drift_out;
  if (sidecar.empty() && c.out != "-" && !c.out.empty()) sidecar = c.out + ".drift.json";
  if (!sidecar.empty()) {
    Json drift = Json::array();
    for (std::size_t k = 0; k < monitored.size(); ++k)
      drift.push_back({{"z", r4::vec_json<4>(monitored[k])}, {"drift", tr.drift()[k]}});
    Json doc = meta(c);
    doc["t_end"] = tr.t_end();
    doc["step_stats"] = r4::stats_json(tr.step_stats());
    doc["min_share"] = r4::min_share(tr);
    doc["drift"] = drift;
    std::ofstream f(sidecar);
    if (!f) r4::fail(r4::ErrorKind::PreconditionFailed, "cannot write " + sidecar);
    f << doc.dump(2) << "\n";
  }
  return 0;
}

template <r4::Scalar T>
Json orbit_body(const Config& c, const Pipeline<T>& p, const r4::Vec<4>& x0, std::uint64_t seed) {
  const auto sec = p.section();
  const r4::OrbitOptions oo = orbit_options(c);
  r4::ReferencePair pair = r4::select_reference_points(p.af, sec, x0, oo);
  r4::OrbitReport rep = r4::detect_period(p.af, x0, pair, c.horizon, oo);
  if (c.probes > 0) rep.stability = r4::stability_probe(p.af, rep, pair, c.delta, c.probes, seed, oo);
  return r4::orbit_json(rep, pair);
}

template <r4::Scalar T>
int run_orbit(const Config& c, const Pipeline<T>& p) {
  p.require_permanent("orbit");
  emit_json(c, orbit_body(c, p, parse_point(c.x0), effective_seed(c)));
  return 0;
}

template <r4::Scalar T>
Json boundary_body(const Config& c, const Pipeline<T>& p, bool& passed) {
  const auto pred = r4::predict_boundary(p.a, p.cls.label);
  r4::BoundaryOptions bo;
  bo.integrator = integrator(c);
  bo.seed = effective_seed(c);
  const auto ver = r4::verify_boundary(p.af, pred, c.samples, c.boundary_t_end, bo);
  passed = ver.all_passed();
  Json body{{"prediction", r4::prediction_json(pred)}, {"verification", r4::verification_json(ver)}};
  if (!passed) {
    try {
      r4::require_boundary_verified(ver);
    } catch (const r4::Error& e) {
      body["error"] = r4::error_json(std::string(r4::to_string(e.kind())), e.detail())["error"];
    }
  }
  return body;
}

template <r4::Scalar T>
int run_boundary(const Config& c, const Pipeline<T>& p) {
  p.require_permanent("boundary");
  bool passed = true;
  emit_json(c, boundary_body(c, p, passed));
  return passed ? 0 : 1;
}

template <r4::Scalar T>
int run_verify(const Config& c, const Pipeline<T>& p) {
  Json checks = Json::array();
  bool all = true;
  auto check = [&](const std::string& name, bool ok, Json value) {
    all = all && ok;
    checks.push_back({{"name", name}, {"passed", ok}, {"value", std::move(value)}});
  };
  Json body{{"classification", r4::classification_json(p.cls)}};
  const std::uint64_t seed = effective_seed(c);
  std::mt19937_64 rng(seed);
  const r4::Mat<4> m = r4::to_mat(p.af);

  // Simulation evidence for the verdict.
  double worst_min = 1, best_min = 1;
  for (int s = 0; s < 5; ++s) {
    const auto x0 = r4::random_start<4>(rng);
    const auto tr = r4::integrate<4>(m, x0, 200, integrator(c));
    if (p.cls.permanent) {
      worst_min = std::min(worst_min, r4::min_share(tr, 50));
    } else {
      double fin = 1;
      for (double v : tr.final_state()) fin = std::min(fin, v);
      best_min = std::min(best_min, fin);
    }
  }
  if (p.cls.permanent)
    check("simulated_permanence", worst_min >= 1e-3, worst_min);
  else
    check("simulated_non_permanence", best_min <= 1e-4, best_min);

  if (p.cls.permanent) {
    const auto sec = p.section();
    body["section"] = r4::section_json(sec);
    double residual = 0;
    for (const auto& ep : sec.endpoints) residual = std::max(residual, r4::residual_inf(p.af, r4::to_double_point(ep.x)));
    check("endpoint_residual", residual <= 1e-10, residual);
    const auto clipped = r4::clip_null_line(p.af);
    double gap = std::numeric_limits<double>::infinity();
    if (clipped) {
      const auto e0 = r4::to_double_point(sec.endpoints[0].x), e1 = r4::to_double_point(sec.endpoints[1].x);
      auto d = [](const r4::Point4<double>& u, const r4::Point4<double>& v) {
        double s = 0;
        for (int i = 0; i < 4; ++i) s = std::max(s, std::abs(u[i] - v[i]));
        return s;
      };
      gap = std::min(std::max(d(e0, (*clipped)[0]), d(e1, (*clipped)[1])),
                     std::max(d(e0, (*clipped)[1]), d(e1, (*clipped)[0])));
    }
    check("clip_cross_check", gap <= 1e-10, gap);

    Json orbits = Json::array();
    for (int s = 0; s < c.starts; ++s) {
      const auto x0 = r4::random_start<4>(rng);
      try {
        Json o = orbit_body(c, p, x0, seed + static_cast<std::uint64_t>(s));
        const bool ok = o["closure_residual"].get<double>() <= c.closure &&
                        o["avg_distance_to_K"].get<double>() <= 1e-4;
        check("orbit_" + std::to_string(s + 1), ok, o["closure_residual"]);
        orbits.push_back(std::move(o));
      } catch (const r4::Error& e) {
        check("orbit_" + std::to_string(s + 1), false, r4::error_json(std::string(r4::to_string(e.kind())), e.detail()));
      }
    }
    body["orbits"] = orbits;
    bool passed = true;
    body["boundary"] = boundary_body(c, p, passed);
    check("boundary", passed, passed);
  }
  body["checks"] = checks;
  body["passed"] = all;
  emit_json(c, body);
  return all ? 0 : 1;
}

std::vector<r4::Vec<4>> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) r4::fail(r4::ErrorKind::ParseError, "cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("t,x1,x2,x3,x4", 0) != 0) r4::fail(r4::ErrorKind::ParseError, path + ": missing CSV header");
  std::vector<r4::Vec<4>> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t;
    r4::Vec<4> x{};
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &t, &x[0], &x[1], &x[2], &x[3]) != 5)
      r4::fail(r4::ErrorKind::ParseError, path + ": malformed row");
    pts.push_back(x);
  }
  return pts;
}

int run_portrait(const Config& c) {
  static const char* kColors[] = {"#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  r4::Portrait pic;
  std::size_t layer = 0;
  auto add = [&](std::vector<r4::Vec<4>> pts) {
    pic.trajectories.push_back({std::move(pts), kColors[layer++ % 7], 1.0});
  };
  for (const auto& f : c.trajectories) add(read_trajectory_csv(f));
  if (!c.matrix.empty()) {
    const auto a = r4::to_skew(r4::parse_matrix(read_source(c.matrix)));
    const auto cls = r4::classify_matrix(a, c.atol);
    pic.title = cls.permanent ? "class " + std::string(r4::to_string(cls.label.cls)) : "not permanent (" + cls.reason + ")";
    const r4::Mat<4> m = r4::to_mat(a.to_float());
    const double dt = std::max(c.dt, c.t_end / 20000);
    for (const auto& s : c.x0_list) {
      std::vector<r4::Vec<4>> pts;
      for (const auto& [t, x] : r4::integrate<4>(m, parse_point(s), c.t_end, integrator(c)).sample(dt)) pts.push_back(x);
      add(std::move(pts));
    }
    if (cls.permanent) pic.segments.push_back(r4::segment_of(r4::kernel_line_section(a, cls.label)));
  } else if (!c.x0_list.empty()) {
    r4::fail(r4::ErrorKind::PreconditionFailed, "--x0 needs --matrix");
  }
  if (pic.trajectories.empty() && pic.segments.empty())
    r4::fail(r4::ErrorKind::PreconditionFailed, "nothing to draw: give --trajectory files or --matrix with --x0");
  emit(c, r4::render_svg(pic));
  return 0;
}

template <r4::Scalar T>
int dispatch(const Config& c, const r4::PayoffMatrix<T>& a) {
  const Pipeline<T> p(a, c);
  if (c.subcommand == "classify") return run_classify(c, p);
  if (c.subcommand == "kernel") return run_kernel(c, p);
  if (c.subcommand == "simulate") return run_simulate(c, p);
  if (c.subcommand == "orbit") return run_orbit(c, p);
  if (c.subcommand == "boundary") return run_boundary(c, p);
  return run_verify(c, p);
}

int run(const Config& c) {
  if (c.subcommand == "portrait") return run_portrait(c);
  const auto b = r4::parse_matrix(read_source(c.matrix));
  if (c.mode == "float") return dispatch(c, r4::to_skew(b.cast<double>(), c.atol));
  return dispatch(c, r4::to_skew(b));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Permanence, equilibria, periodic orbits and boundary behaviour of four-strategy conservative "
               "replicator dynamics"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(r4::kToolVersion));
  Config c;

  auto common = [&](CLI::App* s, bool needs_matrix = true) {
    auto* opt = s->add_option("--matrix,-m", c.matrix, "Matrix file (text or JSON) or inline text");
    if (needs_matrix) opt->required();
    s->add_option("--mode", c.mode, "Arithmetic for classification and kernel")
        ->check(CLI::IsMember({"rational", "float"}))
        ->capture_default_str();
    s->add_option("--rtol", c.rtol, "Integrator relative tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--atol", c.atol, "Absolute tolerance (integrator and float sign tests)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--seed", c.seed, "Random seed (REPLICATOR4_SEED overrides)")->capture_default_str();
    s->add_option("--out,-o", c.out, "Output file, - for stdout")->capture_default_str();
  };

  auto* classify = app.add_subcommand("classify", "Sign digraph, class and permanence verdict");
  common(classify);
  auto* kernel = app.add_subcommand("kernel", "Kernel line section and equilibrium segment K");
  common(kernel);
  auto* simulate = app.add_subcommand("simulate", "Integrate one trajectory to CSV with a drift sidecar");
  common(simulate);
  simulate->add_option("--x0", c.x0, "Initial state x1,x2,x3,x4")->required();
  simulate->add_option("--t-end", c.t_end, "Final time")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--dt", c.dt, "CSV sampling interval")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--drift-out", c.drift_out, "Sidecar JSON path (default <out>.drift.json)");
  simulate->add_option("--drift-budget", c.drift_budget, "Abort when monitored drift exceeds this")
      ->check(CLI::PositiveNumber);
  auto* orbit = app.add_subcommand("orbit", "Certify the periodic orbit through x0");
  common(orbit);
  orbit->add_option("--x0", c.x0, "Initial state x1,x2,x3,x4")->required();
  auto orbit_opts = [&](CLI::App* s) {
    s->add_option("--horizon", c.horizon, "Search horizon")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--closure", c.closure, "Closure tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_option("--delta", c.delta, "Stability probe radius")->check(CLI::NonNegativeNumber)->capture_default_str();
    s->add_option("--probes", c.probes, "Stability probes (0 skips)")->check(CLI::NonNegativeNumber)->capture_default_str();
  };
  orbit_opts(orbit);
  auto boundary_opts = [&](CLI::App* s) {
    s->add_option("--samples", c.samples, "Random starts per edge and face")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    s->add_option("--t-end", c.boundary_t_end, "Convergence horizon")->check(CLI::PositiveNumber)->capture_default_str();
  };
  auto* boundary = app.add_subcommand("boundary", "Predict and verify the boundary tables");
  common(boundary);
  boundary_opts(boundary);
  auto* verify = app.add_subcommand("verify", "End-to-end checks over one matrix");
  common(verify);
  orbit_opts(verify);
  boundary_opts(verify);
  verify->add_option("--starts", c.starts, "Random interior orbit starts")->check(CLI::NonNegativeNumber)->capture_default_str();
  auto* portrait = app.add_subcommand("portrait", "SVG projection of trajectories and K");
  common(portrait, false);
  portrait->add_option("--trajectory", c.trajectories, "Trajectory CSV files")->check(CLI::ExistingFile);
  portrait->add_option("--x0", c.x0_list, "Initial states to simulate (needs --matrix)");
  portrait->add_option("--t-end", c.t_end, "Simulation horizon")->check(CLI::PositiveNumber)->capture_default_str();
  portrait->add_option("--dt", c.dt, "Polyline sampling interval")->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  c.subcommand = app.get_subcommands().front()->get_name();

  try {
    return run(c);
  } catch (const r4::Error& e) {
    std::cout << r4::error_json(std::string(r4::to_string(e.kind())), e.detail()).dump(2) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cout << r4::error_json("InternalError", e.what()).dump(2) << "\n";
    return 1;
  }
}
