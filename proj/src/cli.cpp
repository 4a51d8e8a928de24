#include "isaacslab/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include "isaacslab/bi_solver.hpp"
#include "isaacslab/config.hpp"
#include "isaacslab/game_model.hpp"
#include "isaacslab/hamiltonian.hpp"
#include "isaacslab/policy.hpp"
#include "isaacslab/scenario.hpp"
#include "isaacslab/sde.hpp"
#include "isaacslab/verifier.hpp"

namespace isaacslab::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 initialisation failed");
  }
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// CSV: ',' separator, header row, 17 significant digits.

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { line(header); }
  Csv& add(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error("internal: CSV row width mismatch");
    line(cells);
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << field(cells[i]);
    os_ << "\n";
  }
  std::size_t width_;
  std::ostringstream os_;
};

std::string verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

// ---------------------------------------------------------------------------
// Command-line overrides on top of the scenario file.

struct Overrides {
  std::optional<std::int64_t> seed, grid_nx, grid_nt, paths, steps, workers;
  std::optional<std::string> side, out;
  bool dump_paths = false;
};

std::string side_name(const GameSpec& spec, Side side) {
  if (spec.kind == ModelKind::Control) return "control";
  return side == Side::Upper ? "upper" : "lower";
}

template <class T>
T positive(std::int64_t v, const std::string& what) {
  if (v < 1) throw ConfigError(what + " must be >= 1");
  return static_cast<T>(v);
}

Scenario load_settings(const std::string& path, const Overrides& ov) {
  Scenario st = load_scenario(path);
  const auto d = static_cast<std::size_t>(st.spec.d);
  if (ov.seed) {
    if (*ov.seed < 0) throw ConfigError("--seed must be >= 0");
    st.seed = static_cast<std::uint64_t>(*ov.seed);
  }
  if (ov.grid_nx) st.n.assign(d, positive<int>(*ov.grid_nx, "--grid-nx"));
  if (ov.grid_nt) st.nt = positive<int>(*ov.grid_nt, "--grid-nt");
  if (ov.paths) st.paths = positive<std::size_t>(*ov.paths, "--paths");
  if (ov.steps) st.steps = positive<int>(*ov.steps, "--steps");
  if (ov.workers) st.workers = positive<unsigned>(*ov.workers, "--workers");
  if (ov.side) st.side = parse_side(*ov.side);
  if (ov.out) st.out_dir = *ov.out;
  if (ov.dump_paths) st.dump_paths = true;
  if (const char* env = std::getenv("ISAACSLAB_OUT"); env != nullptr && *env != '\0') {
    st.out_dir = env;
  }
  validate_scenario(st);
  return st;
}

// ---------------------------------------------------------------------------
// Run context: output directory, manifest, timings.

class Context {
 public:
  Context(std::string command, Scenario& st, std::ostream& out, std::ostream& err)
      : command_(std::move(command)), st_(st), out_(out), err_(err) {
    fs::create_directories(st.out_dir);
  }

  Scenario& settings() { return st_; }
  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

  void write(const std::string& name, const std::string& content) {
    const fs::path p = fs::path(st_.out_dir) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write " + p.string());
    f << content;
    f.close();
    outputs_.push_back({{"file", name},
                        {"bytes", content.size()},
                        {"sha256", sha256_file(p.string())}});
  }

  template <class F>
  auto timed(const std::string& phase, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record(phase, t0);
    } else {
      auto r = fn();
      record(phase, t0);
      return r;
    }
  }

  void write_manifest(int exit_code, const Overrides& ov) {
    json overrides = json::object();
    if (ov.seed) overrides["seed"] = *ov.seed;
    if (ov.grid_nx) overrides["grid_nx"] = *ov.grid_nx;
    if (ov.grid_nt) overrides["grid_nt"] = *ov.grid_nt;
    if (ov.paths) overrides["paths"] = *ov.paths;
    if (ov.steps) overrides["steps"] = *ov.steps;
    if (ov.workers) overrides["workers"] = *ov.workers;
    if (ov.side) overrides["side"] = *ov.side;
    if (ov.out) overrides["out"] = *ov.out;
    if (ov.dump_paths) overrides["dump_paths"] = true;
    json m;
    m["tool"] = "isaacslab";
    m["version"] = kVersion;
    m["scenario"] = st_.path;
    m["subcommand"] = command_;
    m["seed"] = st_.seed;
    m["overrides"] = overrides;
    m["output_dir"] = st_.out_dir;
    m["exit_code"] = exit_code;
    m["timings_seconds"] = timings_;
    m["outputs"] = outputs_;
    std::ofstream f(fs::path(st_.out_dir) / "manifest.json");
    f << m.dump(2) << "\n";
  }

 private:
  void record(const std::string& phase, std::chrono::steady_clock::time_point t0) {
    timings_[phase] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  std::string command_;
  Scenario& st_;
  std::ostream& out_;
  std::ostream& err_;
  json outputs_ = json::array();
  json timings_ = json::object();
};

// ---------------------------------------------------------------------------
// Shared steps.

std::shared_ptr<const ValueField> solve_field(Context& ctx) {
  return ctx.timed("solve", [&] { return solve_scenario(ctx.settings()); });
}

bool needs_field(const std::vector<std::string>& policies) {
  return std::any_of(policies.begin(), policies.end(), [](const std::string& p) {
    return p.find_first_not_of(" \t") != std::string::npos &&
           p.substr(p.find_first_not_of(" \t")).rfind("star", 0) == 0;
  });
}

std::vector<FeedbackPolicy> parse_policies(const std::vector<std::string>& texts,
                                           const std::shared_ptr<const ValueField>& field) {
  std::vector<FeedbackPolicy> out;
  for (const auto& t : texts) out.push_back(FeedbackPolicy::parse(t, field));
  return out;
}

std::string format_point(std::span<const double> u) {
  std::string s;
  for (std::size_t i = 0; i < u.size(); ++i) s += (i ? ";" : "") + config::format_number(u[i]);
  return s;
}

/// Constant policies at the lower and upper corners of the control box.
std::vector<std::string> corner_policies(const ControlSet& U) {
  return {format_point(U.lo()), format_point(U.hi())};
}

void warn_clamping(Context& ctx, double fraction) {
  if (fraction > 0.01) {
    ctx.err() << "warning: " << num(fraction * 100.0)
              << "% of policy evaluations read the gradient outside the grid box; enlarge [grid]\n";
  }
}

void write_verdicts(Context& ctx, const std::vector<std::vector<std::string>>& rows) {
  Csv csv({"check", "statistic", "threshold", "verdict"});
  for (const auto& r : rows) csv.add(r);
  ctx.write("verdict.csv", csv.str());
  for (const auto& r : rows) ctx.out() << r[3] << "  " << r[0] << "\n";
}

bool all_pass(const std::vector<std::vector<std::string>>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r[3] == "PASS"; });
}

std::vector<std::string> point_header(const std::string& prefix, int d) {
  std::vector<std::string> h;
  for (int i = 1; i <= d; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_validate(Context& ctx) {
  const Scenario& st = ctx.settings();
  const std::string canonical = st.spec.canonical();
  ctx.out() << canonical;
  ctx.write("canonical.cfg", canonical);
  double radius = 10.0;
  if (st.has_grid) {
    radius = 0.0;
    for (std::size_t i = 0; i < st.lo.size(); ++i) {
      radius = std::max({radius, std::fabs(st.lo[i]), std::fabs(st.hi[i])});
    }
  }
  const auto cloud = make_sample_cloud(st.spec, radius, 200, st.seed);
  const auto growth = check_linear_growth(st.spec, cloud);
  const auto novikov = check_novikov_boundedness(st.spec, cloud);
  Csv csv({"metric", "value"});
  csv.add({"samples", std::to_string(growth.samples)});
  csv.add({"growth_constant", num(growth.growth_constant)});
  csv.add({"growth_constant_doubled", num(growth.growth_constant_doubled)});
  csv.add({"unbounded_suspicion", growth.unbounded_suspicion ? "true" : "false"});
  csv.add({"novikov_bound", novikov.novikov_bound ? num(*novikov.novikov_bound) : "nan"});
  csv.add({"degenerate", novikov.degenerate ? "true" : "false"});
  csv.add({"nondegeneracy_constant", num(novikov.nondegeneracy_constant)});
  ctx.write("diagnostics.csv", csv.str());
  if (growth.unbounded_suspicion) ctx.err() << "warning: coefficients may violate linear growth\n";
  if (novikov.degenerate) ctx.err() << "note: sigma sigma^T is degenerate on the sample cloud\n";
  return kExitOk;
}

int cmd_solve(Context& ctx) {
  const Scenario& st = ctx.settings();
  const auto field = solve_field(ctx);
  const Grid& grid = field->grid();
  const auto res = ctx.timed("residual", [&] { return residual(st.spec, *field, st.workers); });
  const std::string side = side_name(st.spec, st.side);
  const int d = st.spec.d;

  std::vector<int> levels;
  for (double s : st.slices) {
    if (!(s >= 0.0 && s <= st.spec.T)) throw ConfigError("[output] slices must lie in [0, T]");
    levels.push_back(static_cast<int>(std::lround(s / grid.dt())));
  }

  auto header = point_header("x", d);
  header.insert(header.begin(), "t");
  header.push_back("v");
  Csv values(header);
  std::vector<double> x(static_cast<std::size_t>(d));
  for (int n : levels) {
    for (std::size_t node = 0; node < grid.nodes(); ++node) {
      grid.coords(node, x);
      std::vector<std::string> row{num(grid.time(n))};
      for (double xi : x) row.push_back(num(xi));
      row.push_back(num(field->value(n, node)));
      values.add(row);
    }
  }
  ctx.write("value_" + side + ".csv", values.str());

  double max_gap = 0.0;
  if (st.spec.kind == ModelKind::Game) {
    auto gh = point_header("x", d);
    gh.insert(gh.begin(), "t");
    for (auto& p : point_header("p", d)) gh.push_back(p);
    gh.push_back("gap");
    Csv gaps(gh);
    HamiltonianWorkspace ws(st.spec);
    for (int n : levels) {
      const int gl = std::min(n, grid.time_levels() - 2);
      for (std::size_t node = 0; node < grid.nodes(); ++node) {
        grid.coords(node, x);
        const auto p = field->gradient(gl, node);
        const auto sol = ws.table(grid.time(n), x).solve(p);
        max_gap = std::max(max_gap, sol.gap());
        std::vector<std::string> row{num(grid.time(n))};
        for (double xi : x) row.push_back(num(xi));
        for (double pi : p) row.push_back(num(pi));
        row.push_back(num(sol.gap()));
        gaps.add(row);
      }
    }
    ctx.write("isaacs_gap_field_" + side + ".csv", gaps.str());
  }

  Csv summary({"metric", "value"});
  summary.add({"equation", equation_name(field->equation())});
  summary.add({"nodes", std::to_string(grid.nodes())});
  summary.add({"time_levels", std::to_string(grid.time_levels())});
  summary.add({"dt", num(grid.dt())});
  summary.add({"dt_max", num(field->scheme().dt_max)});
  summary.add({"lax_friedrichs", field->scheme().lax_friedrichs ? "true" : "false"});
  summary.add({"nondegeneracy", num(field->scheme().nondegeneracy)});
  summary.add({"residual_max", num(res.max_abs)});
  summary.add({"residual_rms", num(res.rms)});
  summary.add({"value_t_x0", num(field->interpolate(st.t, st.x0))});
  if (st.spec.kind == ModelKind::Game) summary.add({"max_isaacs_gap", num(max_gap)});
  ctx.write("solve_summary_" + side + ".csv", summary.str());
  ctx.out() << "v(" << num(st.t) << ", x0) = " << num(field->interpolate(st.t, st.x0)) << "\n";
  return kExitOk;
}

int cmd_isaacs_gap(Context& ctx) {
  const Scenario& st = ctx.settings();
  if (st.spec.kind != ModelKind::Game) throw ConfigError("isaacs-gap needs a game model");
  const auto d = static_cast<std::size_t>(st.spec.d);
  std::mt19937_64 rng(st.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<CostatePoint> cloud;
  for (std::size_t k = 0; k < st.gap_samples; ++k) {
    CostatePoint c;
    c.s = st.spec.T * unit(rng);
    for (std::size_t i = 0; i < d; ++i) {
      const double lo = st.has_grid ? st.lo[i] : -10.0, hi = st.has_grid ? st.hi[i] : 10.0;
      c.x.push_back(lo + (hi - lo) * unit(rng));
    }
    for (std::size_t i = 0; i < d; ++i) c.p.push_back(st.gap_p_radius * (2.0 * unit(rng) - 1.0));
    cloud.push_back(std::move(c));
  }
  auto header = point_header("x", st.spec.d);
  header.insert(header.begin(), "s");
  for (auto& p : point_header("p", st.spec.d)) header.push_back(p);
  for (const char* h : {"lower", "upper", "gap"}) header.push_back(h);
  Csv csv(header);
  double max_gap = 0.0;
  ctx.timed("gap", [&] {
    for (const auto& c : cloud) {
      const auto r = hamiltonian(st.spec, c.s, c.x, c.p);
      max_gap = std::max(max_gap, r.gap);
      std::vector<std::string> row{num(c.s)};
      for (double v : c.x) row.push_back(num(v));
      for (double v : c.p) row.push_back(num(v));
      row.push_back(num(r.lower));
      row.push_back(num(r.upper));
      row.push_back(num(r.gap));
      csv.add(row);
    }
  });
  ctx.write("isaacs_gap.csv", csv.str());
  Csv summary({"metric", "value"});
  summary.add({"samples", std::to_string(cloud.size())});
  summary.add({"max_gap", num(max_gap)});
  summary.add({"isaacs_condition_on_sample", max_gap <= 1e-12 ? "true" : "false"});
  ctx.write("isaacs_gap_summary.csv", summary.str());
  ctx.out() << "max Isaacs gap over " << cloud.size() << " samples: " << num(max_gap) << "\n";
  return kExitOk;
}

int cmd_simulate(Context& ctx) {
  const Scenario& st = ctx.settings();
  const bool control = st.spec.kind == ModelKind::Control;
  const std::vector<std::string> texts =
      control ? std::vector<std::string>{st.policy} : std::vector<std::string>{st.policy1, st.policy2};
  std::shared_ptr<const ValueField> field;
  if (needs_field(texts)) field = solve_field(ctx);
  const FeedbackPolicy p1 = control ? FeedbackPolicy::passive() : FeedbackPolicy::parse(st.policy1, field);
  const FeedbackPolicy p2 = FeedbackPolicy::parse(control ? st.policy : st.policy2, field);
  SimulationOptions opts;
  opts.workers = st.workers;
  opts.store_paths = st.dump_paths;
  const PathBundle b = ctx.timed("simulate", [&] {
    return simulate(st.spec, p1, p2, st.t, st.x0, st.paths, st.steps, st.seed, opts);
  });
  if (b.failed) {
    ctx.err() << "error: non-finite state on path " << *b.failed_path << "\n";
    return kExitUsage;
  }
  warn_clamping(ctx, b.clamped_fraction());
  const int d = st.spec.d;
  const auto ud = static_cast<std::size_t>(d);

  auto header = point_header("y_T", d);
  header.insert(header.begin(), "path");
  for (const char* h : {"running_cost", "terminal_cost", "payoff", "sup_norm"}) header.push_back(h);
  Csv per_path(header);
  for (std::size_t i = 0; i < b.n_paths; ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (std::size_t r = 0; r < ud; ++r) row.push_back(num(b.y_final[i * ud + r]));
    row.push_back(num(b.running_cost[i]));
    row.push_back(num(b.terminal_cost[i]));
    row.push_back(num(b.running_cost[i] + b.terminal_cost[i]));
    row.push_back(num(b.sup_norm[i]));
    per_path.add(row);
  }
  ctx.write("simulate_paths.csv", per_path.str());

  const PayoffEstimate est = estimate_payoff(b);
  const MomentEstimate m2 = estimate_moments(b, 2);
  Csv summary({"metric", "value"});
  summary.add({"paths", std::to_string(b.n_paths)});
  summary.add({"steps", std::to_string(b.n_steps)});
  summary.add({"payoff_mean", num(est.mean)});
  summary.add({"payoff_se", num(est.standard_error)});
  summary.add({"running_mean", num(est.running_mean)});
  summary.add({"terminal_mean", num(est.terminal_mean)});
  summary.add({"nonfinite_fraction", num(est.nonfinite_fraction)});
  summary.add({"sup_moment_2", num(m2.mean)});
  summary.add({"sup_moment_2_se", num(m2.standard_error)});
  summary.add({"clamped_fraction", num(b.clamped_fraction())});
  ctx.write("simulate_summary.csv", summary.str());

  if (b.has_paths()) {
    auto ph = point_header("y", d);
    ph.insert(ph.begin(), {"path", "step", "s"});
    for (auto& h : point_header("u1_", b.k1)) ph.push_back(h);
    for (auto& h : point_header("u2_", b.k2)) ph.push_back(h);
    Csv paths(ph);
    const auto ns = static_cast<std::size_t>(b.n_steps);
    const auto k1 = static_cast<std::size_t>(b.k1), k2 = static_cast<std::size_t>(b.k2);
    for (std::size_t i = 0; i < b.n_paths; ++i) {
      for (std::size_t k = 0; k <= ns; ++k) {
        std::vector<std::string> row{std::to_string(i), std::to_string(k), num(b.time(static_cast<int>(k)))};
        for (std::size_t r = 0; r < ud; ++r) row.push_back(num(b.y[(i * (ns + 1) + k) * ud + r]));
        // controls act on [s_k, s_{k+1}); the terminal row has none
        for (std::size_t j = 0; j < k1; ++j) row.push_back(k < ns ? num(b.u1[(i * ns + k) * k1 + j]) : "");
        for (std::size_t j = 0; j < k2; ++j) row.push_back(k < ns ? num(b.u2[(i * ns + k) * k2 + j]) : "");
        paths.add(row);
      }
    }
    ctx.write("paths.csv", paths.str());
  }
  ctx.out() << "J = " << num(est.mean) << " +/- " << num(est.standard_error) << "\n";
  if (est.ill_defined) ctx.err() << "warning: some path payoffs are non-finite (J ill-defined)\n";
  return kExitOk;
}

int cmd_verify_saddle(Context& ctx) {
  Scenario& st = ctx.settings();
  if (st.spec.kind != ModelKind::Game) throw ConfigError("verify-saddle needs a game model");
  const auto field = solve_field(ctx);
  const auto dev1 = parse_policies(st.deviations1.empty() ? corner_policies(st.spec.U1) : st.deviations1, field);
  const auto dev2 = parse_policies(st.deviations2.empty() ? corner_policies(st.spec.U2) : st.deviations2, field);
  const SaddleReport rep = ctx.timed("verify", [&] {
    return verify_saddle(st.spec, field, dev1, dev2, st.t, st.x0, scenario_mc(st), st.allowance);
  });
  warn_clamping(ctx, rep.clamped_fraction);

  Csv csv({"player", "policy", "mean", "se", "diff_vs_star", "diff_se", "holds", "separated"});
  csv.add({"star", "star", num(rep.star.mean), num(rep.star.standard_error), "0", "0", "true", "true"});
  for (const auto& d : rep.deviations) {
    csv.add({d.player == Player::One ? "u1" : "u2", d.label, num(d.payoff.mean),
             num(d.payoff.standard_error), num(d.difference.mean), num(d.difference.standard_error),
             d.holds ? "true" : "false", d.separated ? "true" : "false"});
  }
  ctx.write("saddle.csv", csv.str());

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"star_payoff_matches_value", num(std::fabs(rep.star.mean - rep.value)),
                  num(3.0 * rep.star.standard_error + rep.allowance), verdict(rep.value_matches)});
  rows.push_back({"star_payoff_well_defined", num(rep.star.nonfinite_fraction), "0",
                  verdict(!rep.star.ill_defined)});
  for (const auto& d : rep.deviations) {
    const std::string name = (d.player == Player::One ? "u1_deviation[" : "u2_deviation[") + d.label + "]";
    const double gain = d.player == Player::One ? d.difference.mean : -d.difference.mean;
    rows.push_back({name, num(gain), num(3.0 * d.difference.standard_error), verdict(d.holds)});
  }
  write_verdicts(ctx, rows);
  return all_pass(rows) ? kExitOk : kExitFail;
}

int cmd_game_value(Context& ctx) {
  Scenario& st = ctx.settings();
  if (st.spec.kind != ModelKind::Game) throw ConfigError("game-value needs a game model");
  std::vector<std::string> f1 = st.family1, f2 = st.family2;
  if (f1.empty()) {
    f1 = corner_policies(st.spec.U1);
    f1.insert(f1.begin(), "star");
  }
  if (f2.empty()) {
    f2 = corner_policies(st.spec.U2);
    f2.insert(f2.begin(), "star");
  }
  std::shared_ptr<const ValueField> field;
  if (needs_field(f1) || needs_field(f2)) field = solve_field(ctx);
  const auto fam1 = parse_policies(f1, field);
  const auto fam2 = parse_policies(f2, field);
  const GameValueReport rep = ctx.timed("matrix", [&] {
    return estimate_game_values(st.spec, field.get(), fam1, fam2, st.t, st.x0, scenario_mc(st));
  });
  Csv csv({"row_policy", "col_policy", "mean", "se"});
  for (std::size_t i = 0; i < rep.labels1.size(); ++i) {
    for (std::size_t j = 0; j < rep.labels2.size(); ++j) {
      csv.add({rep.labels1[i], rep.labels2[j], num(rep.cell(i, j).mean), num(rep.cell(i, j).standard_error)});
    }
  }
  ctx.write("payoff_matrix.csv", csv.str());
  Csv summary({"metric", "value"});
  summary.add({"sup_inf", num(rep.sup_inf)});
  summary.add({"inf_sup", num(rep.inf_sup)});
  summary.add({"max_se", num(rep.max_se)});
  summary.add({"value_t_x0", rep.value ? num(*rep.value) : "nan"});
  ctx.write("game_value_summary.csv", summary.str());

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"minimax_inequality", num(rep.sup_inf - rep.inf_sup), num(3.0 * rep.max_se),
                  verdict(rep.consistent)});
  if (rep.collapsed) {
    const double star = rep.cell(*rep.star1, *rep.star2).mean;
    rows.push_back({"values_collapse_to_star",
                    num(std::max(std::fabs(rep.sup_inf - star), std::fabs(rep.inf_sup - star))),
                    num(3.0 * rep.max_se), verdict(*rep.collapsed)});
  }
  write_verdicts(ctx, rows);
  return all_pass(rows) ? kExitOk : kExitFail;
}

int cmd_verify_control(Context& ctx) {
  Scenario& st = ctx.settings();
  if (st.spec.kind != ModelKind::Control) throw ConfigError("verify-control needs kind = \"control\"");
  const auto field = solve_field(ctx);
  std::vector<std::string> texts = st.family.empty() ? std::vector<std::string>{"star"} : st.family;
  if (st.random_constants > 0) {
    std::mt19937_64 rng(st.random_seed);
    std::uniform_int_distribution<std::size_t> pick(0, st.spec.U2.size() - 1);
    for (int k = 0; k < st.random_constants; ++k) texts.push_back(format_point(st.spec.U2.point(pick(rng))));
  }
  const auto family = parse_policies(texts, field);
  const ControlReport rep = ctx.timed("verify", [&] {
    return verify_control(st.spec, *field, family, st.t, st.x0, scenario_mc(st), st.allowance);
  });
  warn_clamping(ctx, rep.clamped_fraction);
  Csv csv({"policy", "mean", "se", "excess_over_value", "not_below", "strictly_above"});
  for (const auto& c : rep.candidates) {
    csv.add({c.label, num(c.payoff.mean), num(c.payoff.standard_error), num(c.payoff.mean - rep.value),
             c.not_below ? "true" : "false", c.strictly_above ? "true" : "false"});
  }
  ctx.write("control.csv", csv.str());
  std::vector<std::vector<std::string>> rows;
  if (rep.star) {
    const auto& s = rep.candidates[*rep.star];
    rows.push_back({"star_payoff_matches_value", num(std::fabs(s.payoff.mean - rep.value)),
                    num(3.0 * s.payoff.standard_error + rep.allowance), verdict(rep.star_matches)});
  } else {
    rows.push_back({"star_payoff_matches_value", "nan", "nan", "FAIL"});
  }
  for (const auto& c : rep.candidates) {
    rows.push_back({"value_is_lower_bound[" + c.label + "]", num(rep.value - c.payoff.mean),
                    num(3.0 * c.payoff.standard_error), verdict(c.not_below)});
  }
  write_verdicts(ctx, rows);
  return all_pass(rows) ? kExitOk : kExitFail;
}

int cmd_decompose(Context& ctx) {
  Scenario& st = ctx.settings();
  const bool control = st.spec.kind == ModelKind::Control;
  std::vector<std::string> a = st.decompose1, b = st.decompose2;
  if (control) {
    if (b.empty()) b = {"star"};
    a.assign(b.size(), "");
  } else {
    if (a.empty()) a = {"star"};
    if (b.empty()) b.assign(a.size(), "star");
  }
  if (a.size() != b.size()) throw ConfigError("[verify] decompose1 and decompose2 need equal lengths");
  const auto field = solve_field(ctx);
  const double allowance = st.allowance ? *st.allowance : scheme_allowance(st.spec, *field, st.workers);

  Csv csv({"policy1", "policy2", "value", "payoff_mean", "payoff_se", "defect_mean", "defect_se",
           "residual_mean", "residual_se", "correlation"});
  Csv hist({"policy1", "policy2", "bin_lo", "bin_hi", "count"});
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const FeedbackPolicy p1 = control ? FeedbackPolicy::passive() : FeedbackPolicy::parse(a[k], field);
    const FeedbackPolicy p2 = FeedbackPolicy::parse(b[k], field);
    const DecompositionReport rep = ctx.timed("decompose_" + std::to_string(k), [&] {
      return fundamental_decomposition(st.spec, *field, p1, p2, st.t, st.x0, scenario_mc(st), allowance);
    });
    warn_clamping(ctx, rep.clamped_fraction);
    csv.add({p1.label(), p2.label(), num(rep.value), num(rep.payoff.mean), num(rep.payoff.standard_error),
             num(rep.defect_mean), num(rep.defect_se), num(rep.residual_mean), num(rep.residual_se),
             num(rep.correlation)});
    const auto [mn, mx] = std::minmax_element(rep.residuals.begin(), rep.residuals.end());
    const int bins = 20;
    const double lo = *mn, width = (*mx > *mn) ? (*mx - *mn) / bins : 1.0;
    std::vector<std::size_t> counts(bins, 0);
    for (double r : rep.residuals) {
      counts[std::min<std::size_t>(bins - 1, static_cast<std::size_t>((r - lo) / width))]++;
    }
    for (int i = 0; i < bins; ++i) {
      hist.add({p1.label(), p2.label(), num(lo + i * width), num(lo + (i + 1) * width),
                std::to_string(counts[static_cast<std::size_t>(i)])});
    }
    rows.push_back({"mean_zero_residual[" + p1.label() + "|" + p2.label() + "]",
                    num(std::fabs(rep.residual_mean)), num(3.0 * rep.residual_se), verdict(rep.passed)});
  }
  ctx.write("decomposition.csv", csv.str());
  ctx.write("residual_histogram.csv", hist.str());
  write_verdicts(ctx, rows);
  return all_pass(rows) ? kExitOk : kExitFail;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bellman-Isaacs solver and Monte-Carlo verifier for stochastic differential games",
               "isaacslab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string scenario;
  Overrides ov;
  std::int64_t seed = 0, nx = 0, nt = 0, paths = 0, steps = 0, workers = 0;
  std::string side, outdir;

  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(Context&);
  };
  const std::vector<Entry> entries{
      {"validate", "Check a scenario file and echo its canonical form", cmd_validate},
      {"solve", "Solve the Bellman-Isaacs (or HJB) equation on the grid", cmd_solve},
      {"isaacs-gap", "Sample H0+ - H0- over random (s, x, p)", cmd_isaacs_gap},
      {"simulate", "Simulate the closed-loop state equation", cmd_simulate},
      {"verify-saddle", "Check the saddle inequalities of the synthesized policies", cmd_verify_saddle},
      {"game-value", "Payoff matrix over finite policy families", cmd_game_value},
      {"verify-control", "Check the verification theorem for a control model", cmd_verify_control},
      {"decompose", "Check the mean-zero pathwise decomposition of the payoff", cmd_decompose},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  std::vector<std::map<std::string, CLI::Option*>> opts(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CLI::App* sub = app.add_subcommand(entries[i].name, entries[i].help);
    sub->add_option("scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    auto& o = opts[i];
    o["seed"] = sub->add_option("--seed", seed, "Base random seed ([mc] seed)");
    o["grid-nx"] = sub->add_option("--grid-nx", nx, "Grid points per axis ([grid] n)");
    o["grid-nt"] = sub->add_option("--grid-nt", nt, "Time levels ([grid] nt)");
    o["paths"] = sub->add_option("--paths", paths, "Monte-Carlo paths ([mc] paths)");
    o["steps"] = sub->add_option("--steps", steps, "Euler-Maruyama steps ([mc] steps)");
    o["side"] = sub->add_option("--side", side, "upper or lower ([grid] side)")
                    ->check(CLI::IsMember({"upper", "lower"}));
    o["workers"] = sub->add_option("--workers", workers, "Worker threads ([mc] workers)");
    o["out"] = sub->add_option("--out", outdir, "Output directory ([output] dir; ISAACSLAB_OUT wins)");
    sub->add_flag("--dump-paths", ov.dump_paths, "Write every path to paths.csv ([output] dump_paths)");
    subs.emplace_back(sub, &entries[i]);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i].first->parsed()) continue;
    auto& o = opts[i];
    if (o["seed"]->count()) ov.seed = seed;
    if (o["grid-nx"]->count()) ov.grid_nx = nx;
    if (o["grid-nt"]->count()) ov.grid_nt = nt;
    if (o["paths"]->count()) ov.paths = paths;
    if (o["steps"]->count()) ov.steps = steps;
    if (o["side"]->count()) ov.side = side;
    if (o["workers"]->count()) ov.workers = workers;
    if (o["out"]->count()) ov.out = outdir;
    try {
      Scenario st = load_settings(scenario, ov);
      Context ctx(subs[i].second->name, st, out, err);
      const int code = subs[i].second->fn(ctx);
      ctx.write_manifest(code, ov);
      return code;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const fs::filesystem_error& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace isaacslab::cli
