#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "stefan/io.hpp"
#include "stefan_cli/app.hpp"

namespace stefan::cli {

namespace {

// Reads fields out of one JSON object and complains about anything left over.
class Fields {
public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw InputError(where_ + ": expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) throw InputError(where_ + ": missing field '" + key + "'");
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      try {
        return Ratio::parse(v.get<std::string>()).value();
      } catch (const std::exception&) {
      }
    }
    throw InputError(where_ + ": field '" + key + "' must be a number");
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::size_t count(const std::string& key) {
    const double v = number(key);
    if (!(v >= 0) || v != std::floor(v) || v > 1e15) {
      throw InputError(where_ + ": field '" + key + "' must be a nonnegative integer");
    }
    return static_cast<std::size_t>(v);
  }
  std::size_t count(const std::string& key, std::size_t fallback) { return has(key) ? count(key) : fallback; }

  bool boolean(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_boolean()) throw InputError(where_ + ": field '" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw InputError(where_ + ": field '" + key + "' must be a string");
    return v.get<std::string>();
  }

  Ratio ratio(const std::string& key) {
    const json& v = raw(key);
    try {
      if (v.is_string()) return Ratio::parse(v.get<std::string>());
      if (v.is_number_integer()) return Ratio::parse(v.dump());
      if (v.is_number()) return Ratio::parse(format_double(v.get<double>()));
    } catch (const std::exception& e) {
      throw InputError(where_ + ": field '" + key + "': " + e.what());
    }
    throw InputError(where_ + ": field '" + key + "' must be a number or \"a/b\"");
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw InputError(where_ + ": field '" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw InputError(where_ + ": field '" + key + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) throw InputError(where_ + ": unknown field '" + k + "'");
    }
  }

private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

PeriodicProfile profile_from_json(const json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() == "sin") return PeriodicProfile::sine();
    throw InputError("density: psi must be \"sin\" or an object");
  }
  Fields f(v, "density.psi");
  if (f.has("constant")) {
    const double c = f.number("constant");
    f.finish();
    return PeriodicProfile::constant(c);
  }
  auto samples = f.numbers("samples");
  const double period = f.number("period");
  f.finish();
  try {
    return PeriodicProfile::tabulated(std::move(samples), period);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("density.psi: ") + e.what());
  }
}

// Library constructors throw invalid_argument; surface them as input errors.
template <class Fn>
auto guarded(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw InputError(where + ": " + e.what());
  }
}

}  // namespace

Density density_from_json(const json& j, const std::filesystem::path& base_dir) {
  Fields f(j, "density");
  const std::string family = f.text("family");
  if (family == "piecewise") {
    PiecewiseGeometricDensity::ExactParams p{f.ratio("alpha1"), f.ratio("alpha2"), f.ratio("p"), f.ratio("q")};
    f.finish();
    return guarded("density", [&] { return PiecewiseGeometricDensity::make(p); });
  }
  if (family == "periodic") {
    const double alpha = f.number("alpha", 1.0);
    PeriodicProfile prof = f.has("psi") ? profile_from_json(f.raw("psi")) : PeriodicProfile::sine();
    f.finish();
    return guarded("density", [&] { return PeriodicOscillatoryDensity::make(alpha, std::move(prof)); });
  }
  if (family == "gaussian_path") {
    const double hurst = f.number("hurst");
    const double beta = f.number("beta_lil", 1.0);
    const std::size_t grid = f.count("grid_size", 512);
    const auto seed = static_cast<std::uint64_t>(f.count("seed", 1));
    f.finish();
    return guarded("density", [&] { return build_gaussian_path(hurst, beta, grid, seed); });
  }
  if (family == "tabulated") {
    std::vector<double> x, y;
    if (f.has("csv")) {
      std::filesystem::path path = f.text("csv");
      if (path.is_relative()) path = base_dir / path;
      for (const auto& row : read_csv_rows(path)) {
        if (row.size() != 2) throw InputError("'" + path.string() + "': rows need two columns x,f");
        x.push_back(row[0]);
        y.push_back(row[1]);
      }
    } else {
      x = f.numbers("x");
      y = f.numbers("f");
    }
    f.finish();
    return guarded("density", [&] { return TabulatedDensity::make(std::move(x), std::move(y)); });
  }
  if (family == "uniform") {
    const double lo = f.number("lo", 0.0), hi = f.number("hi");
    f.finish();
    return guarded("density", [&] { return uniform_density(lo, hi); });
  }
  throw InputError("density: unknown family '" + family +
                   "' (piecewise, periodic, gaussian_path, tabulated, uniform)");
}

json RunConfig::to_json() const {
  json j;
  j["density"] = density;
  json s;
  s["n_particles"] = solver.n_particles;
  s["dt"] = solver.dt;
  s["T"] = solver.T;
  s["seed"] = solver.seed;
  s["bridge_correction"] = solver.bridge_correction;
  if (solver.jump_threshold) s["jump_threshold"] = *solver.jump_threshold;
  s["picard"] = {{"n_paths", solver.picard.n_paths},
                 {"max_iters", solver.picard.max_iters},
                 {"tol", solver.picard.tol}};
  j["solver"] = s;
  j["bounds"] = {{"n_paths", bounds.n_paths}, {"n_t", bounds.n_t},       {"n_h", bounds.n_h},
                 {"n_x", bounds.n_x},         {"band_cap", bounds.band_cap}, {"grid_y", bounds.grid_y},
                 {"grid_h", bounds.grid_h},   {"lambda0", bounds.lambda0}};
  j["conditions"] = {{"lambda0", lambda0},
                     {"lambda_min", grids.lambda_min},
                     {"n_lambda", grids.n_lambda},
                     {"n_mu", grids.n_mu},
                     {"n_s_bins", grids.n_s_bins},
                     {"sup_seeds", grids.sup_seeds},
                     {"pointwise_x_max", grids.pointwise_x_max},
                     {"pointwise_windows", grids.pointwise_windows}};
  return j;
}

std::string RunConfig::hash() const { return hex64(fnv1a(to_json().dump())); }

namespace {

json resolve_density_paths(json d, const std::filesystem::path& base_dir) {
  if (d.is_object() && d.contains("csv") && d["csv"].is_string()) {
    std::filesystem::path p = d["csv"].get<std::string>();
    if (p.is_relative()) d["csv"] = (base_dir / p).lexically_normal().string();
  }
  return d;
}

}  // namespace

void apply_config(RunConfig& cfg, const json& doc, const std::filesystem::path& base_dir) {
  Fields top(doc, "config");
  if (top.has("density")) {
    const json& d = top.raw("density");
    if (d.is_string()) {
      std::filesystem::path p = d.get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      json parsed;
      try {
        parsed = json::parse(read_file(p));
      } catch (const json::parse_error& e) {
        throw InputError("'" + p.string() + "': malformed JSON: " + e.what());
      }
      cfg.density = resolve_density_paths(parsed, p.parent_path());
    } else {
      cfg.density = resolve_density_paths(d, base_dir);
    }
  }
  if (top.has("solver")) {
    Fields s(top.raw("solver"), "config.solver");
    auto& c = cfg.solver;
    c.n_particles = s.count("n_particles", c.n_particles);
    c.dt = s.number("dt", c.dt);
    c.T = s.number("T", c.T);
    c.seed = s.count("seed", c.seed);
    if (s.has("bridge_correction")) c.bridge_correction = s.boolean("bridge_correction");
    if (s.has("jump_threshold")) c.jump_threshold = s.number("jump_threshold");
    if (s.has("picard")) {
      Fields pf(s.raw("picard"), "config.solver.picard");
      c.picard.n_paths = pf.count("n_paths", c.picard.n_paths);
      c.picard.max_iters = pf.count("max_iters", c.picard.max_iters);
      c.picard.tol = pf.number("tol", c.picard.tol);
      pf.finish();
    }
    s.finish();
  }
  if (top.has("bounds")) {
    Fields b(top.raw("bounds"), "config.bounds");
    auto& o = cfg.bounds;
    o.n_paths = b.count("n_paths", o.n_paths);
    o.n_t = b.count("n_t", o.n_t);
    o.n_h = b.count("n_h", o.n_h);
    o.n_x = b.count("n_x", o.n_x);
    o.band_cap = b.count("band_cap", o.band_cap);
    o.grid_y = b.count("grid_y", o.grid_y);
    o.grid_h = b.count("grid_h", o.grid_h);
    o.lambda0 = b.number("lambda0", o.lambda0);
    b.finish();
  }
  if (top.has("conditions")) {
    Fields c(top.raw("conditions"), "config.conditions");
    auto& g = cfg.grids;
    cfg.lambda0 = c.number("lambda0", cfg.lambda0);
    g.lambda_min = c.number("lambda_min", g.lambda_min);
    g.n_lambda = c.count("n_lambda", g.n_lambda);
    g.n_mu = c.count("n_mu", g.n_mu);
    g.n_s_bins = c.count("n_s_bins", g.n_s_bins);
    g.sup_seeds = c.count("sup_seeds", g.sup_seeds);
    g.pointwise_x_max = c.number("pointwise_x_max", g.pointwise_x_max);
    g.pointwise_windows = c.count("pointwise_windows", g.pointwise_windows);
    c.finish();
  }
  top.finish();
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json margin_json(const Margin& m, const char* certifies) {
  json j;
  j["certifies"] = certifies;
  j["evaluated"] = m.evaluated;
  if (m.evaluated) {
    j["value"] = number_or_null(m.value);
    j["se"] = m.se;
    j["t"] = m.t;
    j["nodes"] = m.nodes;
    j["pass"] = m.pass;
  }
  return j;
}

json window_row_json(const WindowRow& r) {
  return {{"t", r.t},
          {"a", number_or_null(r.a)},
          {"b", number_or_null(r.b)},
          {"lhs", r.lhs},
          {"lhs_se", r.lhs_se},
          {"rhs", r.rhs},
          {"rhs_se", r.rhs_se},
          {"prob_abs_normal", r.prob_abs_normal},
          {"prob_U", r.prob_U}};
}

}  // namespace

json report_json(const BoundsReport& r) {
  json j;
  j["family"] = r.family;
  if (r.piecewise) {
    j["beta1"] = r.beta1;
    j["beta2"] = r.beta2;
    j["admissible_4_4"] = r.admissible_4_4;
    j["rho"] = r.rho;
    j["L"] = r.L;
    j["L_below_one"] = r.L_below_one;
    j["sup_ratio"] = r.sup_ratio;
    if (r.admissible_4_4) {
      j["c1"] = r.c1;
      j["c2"] = r.c2;
      j["beta_slope"] = {{"value", r.beta_slope.value},
                         {"se", r.beta_slope.se},
                         {"t", r.beta_slope.t},
                         {"x", r.beta_slope.x}};
      if (r.beta_slope.value < 1.0) j["c3"] = r.c3;
    }
  }
  j["delta0_hat"] = r.delta0.delta0_hat;
  j["delta0"] = {{"se", r.delta0.se}, {"t", r.delta0.t}, {"h", r.delta0.h},
                 {"pass", r.delta0.delta0_hat + 3.0 * r.delta0.se < 1.0}};
  json m;
  m["sqrt_lower"] = margin_json(r.envelopes.lower, "Lambda_t - c1 sqrt(t) >= -3 SE");
  m["sqrt_upper"] = margin_json(r.envelopes.upper, "c2 sqrt(t) - Lambda_t >= -3 SE");
  m["holder"] = margin_json(r.envelopes.holder, "c3 sqrt(h) - (Lambda_{t+h} - Lambda_t) >= -3 SE");
  m["chi_bar"] = margin_json(r.envelopes.chi_bar, "chi_bar_t - Lambda_t >= -3 SE");
  m["small_time"] = margin_json(r.small_time, "alpha2 E|N| sqrt(h) - (Lambda_h - F(Lambda_h)) >= -3 SE");
  m["window"] = margin_json(r.window, "P(Y_t in [a sqrt t, b sqrt t]) - P(|N| >= a) P(U <= b - a) >= -3 SE");
  m["probG"] = margin_json(r.probG, "P(Y_t in G) - (alpha2 - 1)/(alpha2 - L) >= -3 SE");
  j["margins"] = m;
  if (!r.prob_G.rows.empty()) {
    json rows = json::array();
    for (const auto& row : r.prob_G.rows) {
      rows.push_back({{"t", row.t}, {"prob_G", row.prob_G}, {"prob_G_se", row.prob_G_se},
                      {"band", window_row_json(row.band)}});
    }
    j["prob_G"] = {{"threshold", r.prob_G.threshold},
                   {"min_prob_G", r.prob_G.min_prob_G},
                   {"above_threshold", r.prob_G.above_threshold},
                   {"rows", rows}};
  }
  if (!r.chi_bar_t.empty()) j["chi_bar"] = {{"t", r.chi_bar_t}, {"value", r.chi_bar_values}};
  j["all_pass"] = r.all_pass();
  return j;
}

json report_json(const ConditionReport& r, const PointwiseResult& pw, const MomentResult& mom, double lambda0) {
  json j;
  double sup_small = 0.0;
  for (std::size_t i = 0; i < r.lambda_grid.size(); ++i) {
    if (r.lambda_grid[i] <= lambda0) sup_small = std::max(sup_small, r.sup_psi_per_lambda[i]);
  }
  j["lambda0_candidate"] = lambda0;
  j["lambda0"] = r.lambda0;
  j["holds_1_5"] = r.holds_1_5;
  j["holds_1_6"] = r.holds_1_6;
  j["holds_1_7"] = r.holds_1_7;
  j["margin_1_5"] = r.margin_1_5;
  j["margin_1_6"] = r.margin_1_6;
  j["margin_1_7"] = r.margin_1_7;
  j["witness_1_5"] = r.witness_1_5 ? json(*r.witness_1_5) : json(nullptr);
  j["sup_psi_below_lambda0"] = sup_small;
  j["first_moment"] = r.first_moment;
  j["f_le_1"] = mom.f_le_1;
  j["max_pdf"] = mom.max_pdf;
  j["pointwise"] = {{"holds", pw.holds},
                    {"margin", pw.margin},
                    {"witness", pw.witness ? json(*pw.witness) : json(nullptr)},
                    {"window_hi", pw.window_hi},
                    {"window_margin", pw.window_margin}};
  json worst = json::array();
  for (const auto& w : r.worst_psi) worst.push_back({w.lambda, w.mu, w.psi});
  j["worst_psi"] = worst;
  json env = json::array();
  for (std::size_t i = 0; i < r.s_grid.size(); ++i) env.push_back({r.s_grid[i], r.g_envelope[i]});
  j["g_envelope"] = env;
  j["s_max"] = r.s_max;
  j["lambda_grid"] = r.lambda_grid;
  j["sup_psi"] = r.sup_psi_per_lambda;
  return j;
}

}  // namespace stefan::cli
