#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "stefan/io.hpp"
#include "stefan/numerics.hpp"
#include "stefan/parallel.hpp"
#include "stefan_cli/app.hpp"

#ifndef STEFAN_VERSION
#define STEFAN_VERSION "0.0.0"
#endif

namespace stefan::cli {

namespace fs = std::filesystem;

namespace {

// Flags common to every subcommand that reads a run configuration.
struct CommonFlags {
  std::string config, density, out, manifest;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_particles, n_paths, max_iters;
  std::optional<double> dt, T, tol;
  bool bridge = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "run configuration JSON");
  sub->add_option("--density", f.density, "density JSON (overrides the config's density)");
  sub->add_option("--out", f.out, "output path (default stdout)");
  sub->add_option("--manifest", f.manifest, "run manifest path (default <out>.manifest.json)");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--n", f.n_particles, "particles");
  sub->add_option("--paths", f.n_paths, "Monte Carlo paths for picard and bounds");
  sub->add_option("--max-iters", f.max_iters, "Picard iteration cap");
  sub->add_option("--dt", f.dt, "time step");
  sub->add_option("--T", f.T, "horizon");
  sub->add_option("--tol", f.tol, "Picard sup-change tolerance");
  sub->add_flag("--bridge", f.bridge, "Brownian-bridge kill correction");
}

json load_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw InputError("'" + p.string() + "': malformed JSON: " + e.what());
  }
}

RunConfig merge(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) {
    const fs::path p = f.config;
    apply_config(cfg, load_json(p), p.parent_path());
  }
  if (!f.density.empty()) {
    const fs::path p = f.density;
    apply_config(cfg, json{{"density", p.filename().string()}}, p.parent_path());
  }
  if (f.seed) cfg.solver.seed = *f.seed;
  if (f.n_particles) cfg.solver.n_particles = *f.n_particles;
  if (f.n_paths) {
    cfg.solver.picard.n_paths = *f.n_paths;
    cfg.bounds.n_paths = *f.n_paths;
  }
  if (f.max_iters) cfg.solver.picard.max_iters = *f.max_iters;
  if (f.dt) cfg.solver.dt = *f.dt;
  if (f.T) cfg.solver.T = *f.T;
  if (f.tol) cfg.solver.picard.tol = *f.tol;
  if (f.bridge) cfg.solver.bridge_correction = true;
  cfg.bounds.seed = cfg.solver.seed;
  try {
    cfg.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return cfg;
}

Density need_density(const RunConfig& cfg) {
  if (cfg.density.is_null()) throw InputError("no density given (use --density or a config 'density' field)");
  return density_from_json(cfg.density);
}

class Clock {
public:
  void lap(const std::string& phase) {
    const auto now = std::chrono::steady_clock::now();
    timings_[phase] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  const json& timings() const { return timings_; }
  double total() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now(), last_ = start_;
  json timings_ = json::object();
};

json jumps_json(const std::vector<Jump>& jumps) {
  json a = json::array();
  for (const auto& j : jumps) a.push_back({{"t", j.t}, {"size", j.size}});
  return a;
}

// Writes `text` to --out or stdout, then the manifest if there is a place for it.
void emit(const CommonFlags& f, const RunConfig& cfg, const std::string& command, const std::string& text,
          json extra, const Clock& clock, std::vector<std::string> outputs, std::ostream& out) {
  if (f.out.empty()) {
    out << text;
  } else {
    write_file(f.out, text);
    outputs.insert(outputs.begin(), f.out);
  }
  std::string manifest = f.manifest;
  if (manifest.empty() && !f.out.empty()) manifest = f.out + ".manifest.json";
  if (manifest.empty()) return;
  json m = std::move(extra);
  m["command"] = command;
  m["tool_version"] = STEFAN_VERSION;
  m["seed"] = cfg.solver.seed;
  m["config_hash"] = cfg.hash();
  m["config"] = cfg.to_json();
  m["threads"] = parallel::threads();
  m["timings"] = clock.timings();
  m["wall_time"] = clock.total();
  m["outputs"] = outputs;
  write_file(manifest, m.dump(2) + "\n");
}

int cmd_simulate(const CommonFlags& f, std::ostream& out) {
  Clock clock;
  const RunConfig cfg = merge(f);
  const Density d = need_density(cfg);
  clock.lap("density");
  const auto res = simulate_particles(d, cfg.solver);
  clock.lap("simulate");
  json extra{{"jumps", jumps_json(res.frontier.jumps)},
             {"final_lambda", res.frontier.lambda.back()}};
  emit(f, cfg, "simulate", frontier_csv(res.frontier), std::move(extra), clock, {}, out);
  return kOk;
}

int cmd_picard(const CommonFlags& f, std::ostream& out) {
  Clock clock;
  const RunConfig cfg = merge(f);
  const Density d = need_density(cfg);
  clock.lap("density");
  const auto res = picard_minimal(d, cfg.solver);
  clock.lap("picard");
  json extra{{"jumps", jumps_json(res.frontier.jumps)},
             {"iterations", res.iterations},
             {"converged", res.converged},
             {"monotone", res.monotone},
             {"sup_change", res.sup_change}};
  emit(f, cfg, "picard", frontier_csv(res.frontier), std::move(extra), clock, {}, out);
  return res.converged && res.monotone ? kOk : kFinding;
}

int cmd_check(const CommonFlags& f, std::optional<double> lambda0, std::ostream& out) {
  Clock clock;
  RunConfig cfg = merge(f);
  if (lambda0) cfg.lambda0 = *lambda0;
  const Density d = need_density(cfg);
  clock.lap("density");
  const auto rep = check_averaging_condition(d, cfg.lambda0, cfg.grids);
  const auto pw = check_pointwise_condition(d, cfg.grids.pointwise_x_max, cfg.grids.pointwise_windows);
  const auto mom = check_moment_condition(d);
  clock.lap("check");
  json j = report_json(rep, pw, mom, cfg.lambda0);
  j["family"] = std::string(family_name(d));
  emit(f, cfg, "check", j.dump(2) + "\n", json::object(), clock, {}, out);
  return rep.holds_1_7 ? kOk : kFinding;
}

void write_margin_tables(const fs::path& path, const BoundsReport& r, const FrontierPath& fr) {
  std::ostringstream ss;
  ss << "t,lambda,se,sqrt_lower,sqrt_upper,chi_bar,chi_bar_margin\n";
  for (std::size_t k = 1; k < fr.t.size(); ++k) {
    const double t = fr.t[k], lam = fr.lambda[k], st = std::sqrt(t);
    ss << format_double(t) << ',' << format_double(lam) << ',' << format_double(fr.standard_error(k)) << ',';
    if (r.c1 > 0) ss << format_double(lam - r.c1 * st);
    ss << ',';
    if (r.c2 > 0) ss << format_double(r.c2 * st - lam);
    ss << ',';
    if (k < r.chi_bar_t.size()) {
      ss << format_double(r.chi_bar_values[k]) << ',' << format_double(r.chi_bar_values[k] - lam);
    } else {
      ss << ',';
    }
    ss << '\n';
  }
  write_file(path, ss.str());
  if (r.prob_G.rows.empty()) return;
  std::ostringstream g;
  g << "t,prob_G,prob_G_se,threshold,a,b,window_lhs,window_rhs,window_margin\n";
  for (const auto& row : r.prob_G.rows) {
    g << format_double(row.t) << ',' << format_double(row.prob_G) << ',' << format_double(row.prob_G_se) << ','
      << format_double(r.prob_G.threshold) << ',' << format_double(row.band.a) << ','
      << format_double(row.band.b) << ',' << format_double(row.band.lhs) << ',' << format_double(row.band.rhs)
      << ',' << format_double(row.band.lhs - row.band.rhs) << '\n';
  }
  fs::path gp = path;
  gp.replace_filename(path.stem().string() + "_probG" + path.extension().string());
  write_file(gp, g.str());
}

int cmd_bounds(const CommonFlags& f, const std::string& frontier_path, const std::string& solver,
               const std::string& emit_csv, std::ostream& out) {
  Clock clock;
  const RunConfig cfg = merge(f);
  const Density d = need_density(cfg);
  clock.lap("density");
  FrontierPath fr;
  if (!frontier_path.empty()) {
    const std::size_t n = solver == "picard" ? cfg.solver.picard.n_paths : cfg.solver.n_particles;
    fr = read_frontier_csv(frontier_path, n);
    clock.lap("load_frontier");
  } else if (solver == "picard") {
    fr = picard_minimal(d, cfg.solver).frontier;
    clock.lap("picard");
  } else {
    fr = simulate_particles(d, cfg.solver).frontier;
    clock.lap("simulate");
  }
  const auto rep = run_bounds(d, fr, cfg.bounds);
  clock.lap("bounds");
  std::vector<std::string> outputs;
  if (!emit_csv.empty()) {
    write_margin_tables(emit_csv, rep, fr);
    outputs.push_back(emit_csv);
  }
  emit(f, cfg, "bounds", report_json(rep).dump(2) + "\n", json{{"frontier", frontier_path}}, clock, outputs, out);
  return rep.all_pass() ? kOk : kFinding;
}

int cmd_jump(const std::string& positions, std::ostream& out) {
  auto values = read_numbers(positions);
  if (values.empty()) throw InputError("'" + positions + "': no positions");
  out << format_double(physical_jump_scan(values, values.size())) << '\n';
  return kOk;
}

// --param key=v1,v2,... ; solver keys go to the solver block, the rest to the density.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw InputError("--param '" + spec + "': expected key=v1,v2,...");
  }
  SweepAxis ax{spec.substr(0, eq), {}};
  std::stringstream ss(spec.substr(eq + 1));
  for (std::string v; std::getline(ss, v, ',');) {
    if (v.empty()) throw InputError("--param '" + spec + "': empty value");
    ax.values.push_back(v);
  }
  return ax;
}

json sweep_value(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.find('/') != std::string::npos) return v;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end && *end == '\0') {
    if (x == std::floor(x) && v.find_first_of(".eE") == std::string::npos) return static_cast<std::int64_t>(x);
    return x;
  }
  return v;
}

int cmd_sweep(const CommonFlags& f, const std::vector<std::string>& params, const std::string& out_dir,
              std::ostream& out) {
  static const std::set<std::string> solver_keys{"n_particles", "dt", "T", "seed", "bridge_correction",
                                                 "jump_threshold"};
  Clock clock;
  const RunConfig base = merge(f);
  if (base.density.is_null()) throw InputError("no density given (use --density or a config 'density' field)");
  std::vector<SweepAxis> axes;
  for (const auto& p : params) axes.push_back(parse_axis(p));
  std::size_t cells = 1;
  for (const auto& a : axes) cells *= a.values.size();

  json index = json::array();
  std::vector<std::string> outputs;
  for (std::size_t c = 0; c < cells; ++c) {
    json doc = base.to_json();
    doc.erase("bounds");
    doc.erase("conditions");
    json assigned = json::object();
    std::size_t rest = c;
    for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
      const std::string& v = it->values[rest % it->values.size()];
      rest /= it->values.size();
      assigned[it->key] = sweep_value(v);
      if (solver_keys.count(it->key)) {
        doc["solver"][it->key] = sweep_value(v);
      } else {
        doc["density"][it->key] = sweep_value(v);
      }
    }
    RunConfig cell = base;
    apply_config(cell, doc, {});
    try {
      cell.solver.validate();
    } catch (const std::invalid_argument& e) {
      throw InputError(std::string("sweep cell: ") + e.what());
    }
    const Density d = density_from_json(cell.density);
    const auto res = simulate_particles(d, cell.solver);
    char name[32];
    std::snprintf(name, sizeof name, "cell_%04zu.csv", c);
    const fs::path path = fs::path(out_dir) / name;
    write_file(path, frontier_csv(res.frontier));
    outputs.push_back(path.string());
    index.push_back({{"cell", c},
                     {"params", assigned},
                     {"file", name},
                     {"config_hash", cell.hash()},
                     {"final_lambda", res.frontier.lambda.back()},
                     {"jumps", jumps_json(res.frontier.jumps)}});
  }
  clock.lap("sweep");
  const fs::path index_path = fs::path(out_dir) / "index.json";
  json manifest{{"command", "sweep"},
                {"tool_version", STEFAN_VERSION},
                {"seed", base.solver.seed},
                {"config_hash", base.hash()},
                {"config", base.to_json()},
                {"threads", parallel::threads()},
                {"timings", clock.timings()},
                {"wall_time", clock.total()},
                {"outputs", outputs},
                {"cells", index}};
  write_file(index_path, manifest.dump(2) + "\n");
  out << index_path.string() << '\n';
  return kOk;
}

unsigned default_threads() {
  if (const char* env = std::getenv("STEFAN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Particle and Picard solvers for the supercooled Stefan problem"};
  app.name("stefan");
  app.require_subcommand(1);
  unsigned threads = default_threads();
  app.add_option("--threads", threads, "worker threads (default STEFAN_THREADS or hardware)")
      ->check(CLI::PositiveNumber);

  CommonFlags f;
  std::optional<double> lambda0;
  std::string frontier, solver = "particles", emit_csv, positions, out_dir;
  std::vector<std::string> params;

  auto* sim = app.add_subcommand("simulate", "particle solver; frontier CSV");
  add_common(sim, f);
  auto* pic = app.add_subcommand("picard", "minimal-solution Picard iteration; frontier CSV");
  add_common(pic, f);
  auto* chk = app.add_subcommand("check", "averaging, pointwise and moment conditions; JSON report");
  add_common(chk, f);
  chk->add_option("--lambda0", lambda0, "candidate lambda0 for the averaging check");
  auto* bnd = app.add_subcommand("bounds", "closed-form constants and Monte Carlo margins; JSON report");
  add_common(bnd, f);
  bnd->add_option("--frontier", frontier, "frontier CSV to verify instead of solving");
  bnd->add_option("--solver", solver, "solver when no frontier is given")
      ->check(CLI::IsMember({"particles", "picard"}));
  bnd->add_option("--emit-csv", emit_csv, "per-t margin table path");
  auto* jmp = app.add_subcommand("jump", "one physical cascade on a CSV of positions");
  jmp->add_option("--positions", positions, "CSV of positions")->required();
  auto* swp = app.add_subcommand("sweep", "simulate over a parameter grid");
  add_common(swp, f);
  swp->add_option("--param", params, "key=v1,v2,... (repeatable)")->required();
  swp->add_option("--out-dir", out_dir, "directory for cell CSVs and index.json")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "stefan: " << e.what() << '\n';
    return kUsage;
  }
  parallel::set_threads(threads);

  try {
    if (sim->parsed()) return cmd_simulate(f, out);
    if (pic->parsed()) return cmd_picard(f, out);
    if (chk->parsed()) return cmd_check(f, lambda0, out);
    if (bnd->parsed()) return cmd_bounds(f, frontier, solver, emit_csv, out);
    if (jmp->parsed()) return cmd_jump(positions, out);
    if (swp->parsed()) return cmd_sweep(f, params, out_dir, out);
  } catch (const InputError& e) {
    err << "stefan: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "stefan: error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace stefan::cli
