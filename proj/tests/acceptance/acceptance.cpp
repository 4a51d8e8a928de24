// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. Expected values come from closed forms or independent
// computations in this file, never from the code under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "isaacslab/bi_solver.hpp"
#include "isaacslab/cli.hpp"
#include "isaacslab/expr.hpp"
#include "isaacslab/game_model.hpp"
#include "isaacslab/hamiltonian.hpp"
#include "isaacslab/policy.hpp"
#include "isaacslab/scenario.hpp"
#include "isaacslab/verifier.hpp"

namespace fs = std::filesystem;
using namespace isaacslab;

namespace {

const std::string kScenarios = ISAACSLAB_SCENARIO_DIR;

std::string scenario_path(const std::string& name) { return kScenarios + "/" + name + ".cfg"; }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Suite {
 public:
  void run(int id, const std::string& name, double limit_seconds, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = out.pass;
    std::string timing = fmt(secs) + " s";
    if (limit_seconds > 0.0) {
      timing += " (limit " + fmt(limit_seconds) + " s)";
      if (secs > limit_seconds) {
        pass = false;
        timing += " TOO SLOW";
      }
    }
    std::printf("%s  criterion %d: %s | %s | %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                out.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failures_ += pass ? 0 : 1;
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

double closed_form_sine_heat(double sigma, double T, double t, double x) {
  return std::exp(-sigma * sigma * (T - t) / 2.0) * std::sin(x);
}

// ---------------------------------------------------------------------------
// 1. Sine-heat solve against the closed form.

Outcome sine_heat_solve() {
  const Scenario sc = load_scenario(scenario_path("sine_heat"));
  const Grid grid = scenario_grid(sc);
  if (grid.count(0) != 401 || grid.time_levels() != 1001) return {false, "scenario grid is not 401x1001"};
  const auto field = solve_scenario(sc);
  const double sigma = 0.5, T = 1.0;
  double worst = 0.0;
  std::vector<double> x(1);
  for (int n = 0; n < grid.time_levels(); ++n) {
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
      if (!grid.in_inner_box(k, 0.6)) continue;
      grid.coords(k, x);
      worst = std::max(worst, std::fabs(field->value(n, k) -
                                        closed_form_sine_heat(sigma, T, grid.time(n), x[0])));
    }
  }
  const double x_spot[] = {std::numbers::pi / 2.0};
  const double spot = field->interpolate(0.0, x_spot);
  const double oracle = closed_form_sine_heat(sigma, T, 0.0, x_spot[0]);
  const bool pass = worst <= 1e-3 && std::fabs(spot - oracle) <= 1e-3 && std::fabs(spot - 0.88250) <= 1e-3;
  return {pass, "max interior error " + fmt(worst) + ", v(0,pi/2) = " + fmt(spot) + " vs " + fmt(oracle)};
}

// ---------------------------------------------------------------------------
// 2. Isaacs gap on separable models and on the bilinear game.

const char* kSeparable2d = R"cfg(
[model]
name = "separable_2d"
kind = "game"
d = 2
m = 2
T = 1
[dynamics]
b = ["0", "0"]
f1 = ["u1_1 - u2_1 + s", "2*u1_2 + sin(3*u2_2) * x1"]
sigma = [["0.5", "0"], ["0", "0.5"]]
[cost]
l = "cos(u1_1 * x2) - u1_2^2 + step(u2_1 - 0.3) * x1 + u2_2^2/2"
g = "0"
[controls.u1]
lo = [-1, -1]
hi = [1, 1]
points = [7, 5]
[controls.u2]
lo = [-1, -1]
hi = [1, 1]
points = [5, 7]
)cfg";

Outcome isaacs_gap_checks() {
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_separable = 0.0;
  std::size_t samples = 0;
  const auto sample_model = [&](const GameSpec& spec, std::size_t n) {
    std::vector<CostatePoint> cloud(n);
    for (auto& pt : cloud) {
      pt.s = spec.T * unit(rng);
      pt.x.resize(static_cast<std::size_t>(spec.d));
      pt.p.resize(static_cast<std::size_t>(spec.d));
      for (auto& v : pt.x) v = -5.0 + 10.0 * unit(rng);
      for (auto& v : pt.p) v = -3.0 + 6.0 * unit(rng);
    }
    worst_separable = std::max(worst_separable, isaacs_gap(spec, cloud));
    samples += n;
  };
  sample_model(load_scenario(scenario_path("sine_heat")).spec, 1000);
  sample_model(load_scenario(scenario_path("regime_switch")).spec, 1000);
  sample_model(load_scenario(scenario_path("degenerate")).spec, 1000);
  sample_model(load_spec(kSeparable2d), 1000);

  const GameSpec bilinear = load_scenario(scenario_path("bilinear")).spec;
  int exact = 0;
  for (int k = 0; k < 100; ++k) {
    const double p[] = {-10.0 + 20.0 * unit(rng)};
    const double x[] = {-4.0 + 8.0 * unit(rng)};
    const auto rep = hamiltonian(bilinear, unit(rng), x, p);
    exact += rep.gap == 2.0 * std::fabs(p[0]) ? 1 : 0;
  }
  const bool pass = worst_separable <= 1e-12 && exact == 100;
  return {pass, "separable max gap " + fmt(worst_separable) + " over " + std::to_string(samples) +
                    " samples; bilinear gap == 2|p| at " + std::to_string(exact) + "/100"};
}

// ---------------------------------------------------------------------------
// 3. Saddle equivalence on random Borel (discontinuous) tabulated Hamiltonians.

struct RandomHamiltonian {
  std::string f1, l;
  int n1 = 1, n2 = 1;
  bool integer_valued = false;
};

RandomHamiltonian random_hamiltonian(std::mt19937_64& rng, int family) {
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> size(2, 31);
  std::uniform_int_distribution<int> small(-2, 2);
  const auto c = [&] { return fmt(coef(rng)); };
  const auto i = [&] { return std::to_string(small(rng)); };
  RandomHamiltonian h;
  h.n1 = size(rng);
  h.n2 = size(rng);
  switch (family) {
    case 0:  // generic, coupled
      h.f1 = c() + "*sin(" + c() + "*u1_1 + " + c() + "*u2_1 + x1) + " + c() + "*step(u1_1 - u2_1 - " +
             c() + ")";
      h.l = c() + "*cos(" + c() + "*u1_1*u2_1) + " + c() + "*step(u2_1 - " + c() + ") - " + c() +
            "*abs(u1_1 - " + c() + ") + " + c() + "*u1_1*u2_1*s";
      break;
    case 1:  // separable in (u1, u2): a saddle always exists
      h.f1 = c() + "*step(u1_1 - " + c() + ") + " + c() + "*sin(" + c() + "*u2_1)";
      h.l = c() + "*abs(u1_1 - " + c() + ")*x1 + " + c() + "*cos(" + c() + "*u2_1) + " + c() +
            "*step(" + c() + " - u2_1)";
      break;
    default:  // integer valued: many exact ties
      h.integer_valued = true;
      h.f1 = i() + "*step(u1_1 - " + c() + ")";
      h.l = i() + "*step(u2_1 - " + c() + ") + " + i() + "*step(u1_1 - " + c() + ") + " + i() +
            "*step(u1_1 - u2_1 - " + c() + ") + " + i() + "*step(" + c() + " - u1_1 - u2_1)";
      break;
  }
  return h;
}

std::string table_model(const RandomHamiltonian& h) {
  std::ostringstream os;
  os << "[model]\nname = \"table\"\nkind = \"game\"\nd = 1\nm = 1\nT = 1\n"
     << "[dynamics]\nb = [\"0\"]\nf1 = [\"" << h.f1 << "\"]\nsigma = [\"1\"]\n"
     << "[cost]\nl = \"" << h.l << "\"\ng = \"0\"\n"
     << "[controls.u1]\nlo = [-1]\nhi = [1]\npoints = [" << h.n1 << "]\n"
     << "[controls.u2]\nlo = [-1]\nhi = [1]\npoints = [" << h.n2 << "]\n";
  return os.str();
}

Outcome saddle_equivalence() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> int_p(-3, 3);
  int checks = 0, agree = 0, with_saddle = 0, without = 0, oracle_mismatch = 0;
  for (int k = 0; k < 200; ++k) {
    const RandomHamiltonian h = random_hamiltonian(rng, k % 3);
    const GameSpec spec = load_spec(table_model(h));
    for (int q = 0; q < 5; ++q) {
      const double s = unit(rng);
      const double x[] = {-2.0 + 4.0 * unit(rng)};
      const double p[] = {h.integer_valued ? static_cast<double>(int_p(rng)) : -3.0 + 6.0 * unit(rng)};
      // Independent brute force over the table.
      const std::size_t n1 = spec.U1.size(), n2 = spec.U2.size();
      double lower = -INFINITY, upper = INFINITY;
      for (std::size_t i = 0; i < n1; ++i) {
        double row_min = INFINITY;
        for (std::size_t j = 0; j < n2; ++j) {
          row_min = std::min(row_min, h0_cv(spec, s, x, p, spec.U1.point(i), spec.U2.point(j)));
        }
        lower = std::max(lower, row_min);
      }
      for (std::size_t j = 0; j < n2; ++j) {
        double col_max = -INFINITY;
        for (std::size_t i = 0; i < n1; ++i) {
          col_max = std::max(col_max, h0_cv(spec, s, x, p, spec.U1.point(i), spec.U2.point(j)));
        }
        upper = std::min(upper, col_max);
      }
      const auto rep = hamiltonian(spec, s, x, p);
      if (rep.lower != lower || rep.upper != upper) ++oracle_mismatch;
      const auto sel = select_saddle(spec, s, x, p);
      const auto chk = check_saddle_inequalities(spec, s, x, p, sel.u1, sel.u2, 0.0);
      const bool no_gap = upper - lower == 0.0;
      ++checks;
      agree += chk.holds == no_gap ? 1 : 0;
      (no_gap ? with_saddle : without) += 1;
    }
  }
  const bool pass = agree == checks && oracle_mismatch == 0 && with_saddle >= 50 && without >= 50;
  return {pass, std::to_string(agree) + "/" + std::to_string(checks) + " agree (" +
                    std::to_string(with_saddle) + " with gap 0, " + std::to_string(without) +
                    " with gap > 0), brute-force mismatches " + std::to_string(oracle_mismatch)};
}

// ---------------------------------------------------------------------------
// 4. Saddle verification on sine-heat.

Outcome saddle_verification() {
  const Scenario sc = load_scenario(scenario_path("sine_heat"));
  if (sc.paths != 20000 || sc.steps != 400) return {false, "scenario is not 2e4 paths x 400 steps"};
  const auto field = solve_scenario(sc);
  const std::vector<FeedbackPolicy> dev = {FeedbackPolicy::constant({1.0}), FeedbackPolicy::constant({-1.0})};
  const SaddleReport rep = verify_saddle(sc.spec, field, dev, dev, sc.t, sc.x0, scenario_mc(sc));
  const double oracle = closed_form_sine_heat(0.5, 1.0, 0.0, std::numbers::pi / 2.0);
  const double tol = 3.0 * rep.star.standard_error + rep.allowance;
  bool pass = std::fabs(rep.star.mean - oracle) <= tol && std::fabs(0.88250 - oracle) <= 5e-6;
  std::string detail = "J* = " + fmt(rep.star.mean) + " +/- " + fmt(rep.star.standard_error) +
                       " vs " + fmt(oracle) + " (tol " + fmt(tol) + ")";
  for (const auto& d : rep.deviations) {
    const double se = d.difference.standard_error;
    // Player 1 deviating must strictly lower J, player 2 deviating must strictly raise it.
    const bool strict = d.player == Player::One ? d.difference.mean < -2.0 * se
                                                : d.difference.mean > 2.0 * se;
    pass = pass && strict;
    detail += "; u" + std::string(d.player == Player::One ? "1" : "2") + "=" + d.label + ": " +
              fmt(d.difference.mean) + " (2SE " + fmt(2.0 * se) + ")";
  }
  pass = pass && rep.deviations.size() == 4;
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 5. Finite-family game value.

Outcome game_value() {
  const Scenario sc = load_scenario(scenario_path("sine_heat"));
  const auto field = solve_scenario(sc);
  std::vector<FeedbackPolicy> fam;
  for (const char* text : {"star", "1", "-1", "0"}) fam.push_back(FeedbackPolicy::parse(text, field));
  const GameValueReport rep = estimate_game_values(sc.spec, field.get(), fam, fam, sc.t, sc.x0, scenario_mc(sc));
  const double star = rep.cell(0, 0).mean;
  const double tol = 3.0 * rep.max_se;
  const bool pass = rep.cells.size() == 16 && std::fabs(rep.sup_inf - star) <= tol &&
                    std::fabs(rep.inf_sup - star) <= tol && std::fabs(rep.sup_inf - rep.inf_sup) <= tol;
  return {pass, "sup-inf " + fmt(rep.sup_inf) + ", inf-sup " + fmt(rep.inf_sup) + ", J(z*,z*) " +
                    fmt(star) + ", 3 maxSE " + fmt(tol)};
}

// ---------------------------------------------------------------------------
// 6. Pathwise decomposition across the scenario gallery.

Outcome decomposition_gallery() {
  const std::vector<std::string> gallery = {"sine_heat", "bilinear", "regime_switch", "hopf_cole",
                                            "degenerate"};
  int runs = 0, passed = 0, suboptimal = 0, suboptimal_ok = 0;
  std::string detail;
  for (const auto& name : gallery) {
    const Scenario sc = load_scenario(scenario_path(name));
    const auto field = solve_scenario(sc);
    std::vector<std::string> p1 = sc.decompose1, p2 = sc.decompose2;
    if (sc.spec.kind == ModelKind::Control) {
      // Single controller: the configured list drives player 2.
      p1.assign(p2.size(), "");
    }
    if (p1.size() != p2.size() || p2.empty()) return {false, name + ": no decomposition pairs configured"};
    for (std::size_t k = 0; k < p2.size(); ++k) {
      const FeedbackPolicy a =
          p1[k].empty() ? FeedbackPolicy::passive() : FeedbackPolicy::parse(p1[k], field);
      const FeedbackPolicy b = FeedbackPolicy::parse(p2[k], field);
      const auto rep = fundamental_decomposition(sc.spec, *field, a, b, sc.t, sc.x0, scenario_mc(sc));
      ++runs;
      // The same gate stated through its ingredients: E[J~] - v against the
      // mean of the integral term, measured in SE(R).
      const double lhs = rep.payoff.mean - rep.value;
      const bool ok = std::fabs(rep.residual_mean) <= 3.0 * rep.residual_se &&
                      std::fabs(lhs - rep.defect_mean) <= 3.0 * rep.residual_se + 1e-12;
      passed += ok ? 1 : 0;
      const bool star1 = p1[k].empty() || a.kind() == FeedbackPolicy::Kind::Synthesized;
      const bool star2 = b.kind() == FeedbackPolicy::Kind::Synthesized;
      if (!(star1 && star2)) {
        ++suboptimal;
        suboptimal_ok += ok && std::fabs(rep.defect_mean) > 3.0 * rep.defect_se ? 1 : 0;
      }
      if (!ok) {
        detail += " " + name + "[" + std::to_string(k) + "] R=" + fmt(rep.residual_mean) + " SE " +
                  fmt(rep.residual_se) + ";";
      }
    }
  }
  const bool pass = runs == passed && suboptimal > 0 && suboptimal == suboptimal_ok;
  return {pass, std::to_string(passed) + "/" + std::to_string(runs) + " runs within 3 SE, " +
                    std::to_string(suboptimal_ok) + "/" + std::to_string(suboptimal) +
                    " suboptimal runs with a visible integral term" + detail};
}

// ---------------------------------------------------------------------------
// 7. Single-controller verification on the Hopf-Cole benchmark.

// v(t, x) = -sigma^2 log E exp(cos(x + sigma sqrt(T - t) Z) / sigma^2), Z ~ N(0, 1),
// by the trapezoidal rule on [-12, 12].
double hopf_cole_oracle(double sigma, double T, double t, double x) {
  const double tau = T - t;
  if (tau <= 0.0) return -std::cos(x);
  const int n = 6000;
  const double a = -12.0, b = 12.0, h = (b - a) / n;
  const double shift = 1.0 / (sigma * sigma);  // factor out exp(max cos / sigma^2)
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double z = a + h * k;
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    sum += w * std::exp(-0.5 * z * z + (std::cos(x + sigma * std::sqrt(tau) * z) - 1.0) / (sigma * sigma));
  }
  const double mean = sum * h / std::sqrt(2.0 * std::numbers::pi);
  return -sigma * sigma * (std::log(mean) + shift);
}

Outcome control_case() {
  const Scenario sc = load_scenario(scenario_path("hopf_cole"));
  const auto field = solve_scenario(sc);
  const Grid& grid = field->grid();
  double worst = 0.0;
  std::vector<double> x(1);
  for (int n = 0; n < grid.time_levels(); n += 10) {
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
      if (!grid.in_inner_box(k, 0.6)) continue;
      grid.coords(k, x);
      worst = std::max(worst, std::fabs(field->value(n, k) - hopf_cole_oracle(0.5, 1.0, grid.time(n), x[0])));
    }
  }
  const double oracle = hopf_cole_oracle(0.5, 1.0, sc.t, sc.x0[0]);
  const double v = field->interpolate(sc.t, sc.x0);

  std::vector<FeedbackPolicy> family = {FeedbackPolicy::synthesized(field)};
  std::mt19937_64 rng(sc.random_seed);
  std::uniform_int_distribution<std::size_t> pick(0, sc.spec.U2.size() - 1);
  for (int k = 0; k < 3; ++k) {
    const auto u = sc.spec.U2.point(pick(rng));
    family.push_back(FeedbackPolicy::constant({u.begin(), u.end()}));
  }
  const ControlReport rep = verify_control(sc.spec, *field, family, sc.t, sc.x0, scenario_mc(sc), 0.0);
  const auto& star = rep.candidates.at(0);
  const double star_gap = std::fabs(star.payoff.mean - v);
  bool pass = star_gap <= 3.0 * star.payoff.standard_error + 2e-3 && worst <= 2e-3 &&
              std::fabs(v - oracle) <= 2e-3;
  std::string detail = "|J*-v| " + fmt(star_gap) + " (tol " + fmt(3.0 * star.payoff.standard_error + 2e-3) +
                       "), oracle error max " + fmt(worst) + " / at x0 " + fmt(std::fabs(v - oracle));
  for (std::size_t k = 1; k < rep.candidates.size(); ++k) {
    const auto& c = rep.candidates[k];
    const bool above = c.payoff.mean - v > 2.0 * c.payoff.standard_error;
    pass = pass && above;
    detail += "; u=" + c.label + ": +" + fmt(c.payoff.mean - v);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 8. Observed order of the scheme residual.

Outcome scheme_order() {
  const GameSpec spec = load_scenario(scenario_path("sine_heat")).spec;
  const double lo = std::numbers::pi / 2.0 - 2.0 * std::numbers::pi;
  const double hi = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi;
  std::vector<double> res;
  int n = 101, steps = 40;
  for (int level = 0; level < 4; ++level) {
    const Grid grid({lo}, {hi}, {n}, steps + 1, spec.T);
    const ValueField field = solve_bi(spec, grid);
    res.push_back(residual(spec, field).max_abs);
    n = 2 * n - 1;  // h halves
    steps *= 4;     // dt quarters, keeping dt / h^2 fixed
  }
  bool pass = true;
  std::string detail = "max residual";
  for (double r : res) detail += " " + fmt(r);
  detail += "; ratios";
  for (std::size_t k = 1; k < res.size(); ++k) {
    const double ratio = res[k - 1] / res[k];
    pass = pass && ratio >= 3.0 && ratio <= 5.0;
    detail += " " + fmt(ratio);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 9. Worker-count independence of verify-saddle output.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  unsetenv("ISAACSLAB_OUT");
  const fs::path root = fs::temp_directory_path() / "isaacslab_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream sink_out, sink_err;
  const auto run = [&](const std::string& workers, const std::string& dir) {
    return cli::run({"verify-saddle", scenario_path("sine_heat"), "--workers", workers, "--out",
                     (root / dir).string()},
                    sink_out, sink_err);
  };
  const int a = run("1", "w1");
  const int b = run("4", "w4");
  if (a == cli::kExitUsage || b == cli::kExitUsage) return {false, "run failed: " + sink_err.str()};
  int compared = 0, identical = 0;
  for (const auto& entry : fs::directory_iterator(root / "w1")) {
    if (entry.path().extension() != ".csv") continue;
    ++compared;
    const fs::path other = root / "w4" / entry.path().filename();
    identical += fs::exists(other) && slurp(entry.path()) == slurp(other) ? 1 : 0;
  }
  const bool has_core = fs::exists(root / "w1" / "saddle.csv") && fs::exists(root / "w1" / "verdict.csv");
  fs::remove_all(root);
  const bool pass = has_core && compared >= 2 && identical == compared && a == b;
  return {pass, std::to_string(identical) + "/" + std::to_string(compared) +
                    " CSV files byte-identical for --workers 1 vs 4"};
}

// ---------------------------------------------------------------------------
// 10. Parser cases and the printing round trip.

struct ParseCase {
  const char* text;
  const char* rendered;  // nullptr for an error case
  expr::ErrorKind kind;
  std::size_t position;
  double value;  // checked when finite and the case parses
};

constexpr double kNoValue = NAN;

const ParseCase kParseCases[] = {
    {"1+2*3", "(1 + (2 * 3))", {}, 0, 7.0},
    {"1*2+3", "((1 * 2) + 3)", {}, 0, 5.0},
    {"1-2-3", "((1 - 2) - 3)", {}, 0, -4.0},
    {"8/4/2", "((8 / 4) / 2)", {}, 0, 1.0},
    {"2^3^2", "(2 ^ (3 ^ 2))", {}, 0, 512.0},
    {"-2^2", "(-(2 ^ 2))", {}, 0, -4.0},
    {"2^-1", "(2 ^ (-1))", {}, 0, 0.5},
    {"2^-3^2", "(2 ^ (-(3 ^ 2)))", {}, 0, 1.0 / 512.0},
    {"(1+2)*3", "((1 + 2) * 3)", {}, 0, 9.0},
    {"2*-3", "(2 * (-3))", {}, 0, -6.0},
    {"--2", "(-(-2))", {}, 0, 2.0},
    {"-3^2*2", "((-(3 ^ 2)) * 2)", {}, 0, -18.0},
    {"12/2*3", "((12 / 2) * 3)", {}, 0, 18.0},
    {"1-2+3", "((1 - 2) + 3)", {}, 0, 2.0},
    {"2^3*4", "((2 ^ 3) * 4)", {}, 0, 32.0},
    {"4*2^3", "(4 * (2 ^ 3))", {}, 0, 32.0},
    {"(2^3)^2", "((2 ^ 3) ^ 2)", {}, 0, 64.0},
    {"sin(x1)+u1_1^2/2", "(sin(x1) + ((u1_1 ^ 2) / 2))", {}, 0, kNoValue},
    {"min(1, 2) * 3", "(min(1, 2) * 3)", {}, 0, 3.0},
    {"clamp(2.5, -1, 1)", "clamp(2.5, (-1), 1)", {}, 0, 1.0},
    {"step(0.25 - 0.5)*2 + step(0.5 - 0.25)*1", "((step((0.25 - 0.5)) * 2) + (step((0.5 - 0.25)) * 1))", {}, 0, 1.0},
    {"step(0)", "step(0)", {}, 0, 1.0},
    {"1.5e-3*x1", "(0.0015 * x1)", {}, 0, kNoValue},
    {"  1 +\t2 ", "(1 + 2)", {}, 0, 3.0},
    {"-(1+2)", "(-(1 + 2))", {}, 0, -3.0},
    {"1 - -2", "(1 - (-2))", {}, 0, 3.0},
    {"4^2^-1", "(4 ^ (2 ^ (-1)))", {}, 0, 2.0},
    {"u2_1*u1_1 - p1/x1", "((u2_1 * u1_1) - (p1 / x1))", {}, 0, kNoValue},
    {"exp(-s)", "exp((-s))", {}, 0, kNoValue},
    {".5+5.", "(0.5 + 5)", {}, 0, 5.5},
    {"2E2", "200", {}, 0, 200.0},
    {"abs(-3)^2", "(abs((-3)) ^ 2)", {}, 0, 9.0},
    {"max(1, 2, 3)", nullptr, expr::ErrorKind::Arity, 0, kNoValue},
    {"", nullptr, expr::ErrorKind::Syntax, 0, kNoValue},
    {"1+", nullptr, expr::ErrorKind::Syntax, 2, kNoValue},
    {"(1+2", nullptr, expr::ErrorKind::Syntax, 4, kNoValue},
    {"sin(x1", nullptr, expr::ErrorKind::Syntax, 6, kNoValue},
    {"3 $ 4", nullptr, expr::ErrorKind::Syntax, 2, kNoValue},
    {"1 2", nullptr, expr::ErrorKind::Syntax, 2, kNoValue},
    {"^2", nullptr, expr::ErrorKind::Syntax, 0, kNoValue},
    {"1+*2", nullptr, expr::ErrorKind::Syntax, 2, kNoValue},
    {")", nullptr, expr::ErrorKind::Syntax, 0, kNoValue},
    {"2^", nullptr, expr::ErrorKind::Syntax, 2, kNoValue},
    {"x1 * (2 + )", nullptr, expr::ErrorKind::Syntax, 10, kNoValue},
    {"foo(1)", nullptr, expr::ErrorKind::UnknownIdentifier, 0, kNoValue},
    {"x0", nullptr, expr::ErrorKind::UnknownIdentifier, 0, kNoValue},
    {"1 + a", nullptr, expr::ErrorKind::UnknownIdentifier, 4, kNoValue},
    {"u3_1", nullptr, expr::ErrorKind::UnknownIdentifier, 0, kNoValue},
    {"sin(1,2)", nullptr, expr::ErrorKind::Arity, 0, kNoValue},
    {"2 * clamp(1,2)", nullptr, expr::ErrorKind::Arity, 4, kNoValue},
};

int run_parse_cases(std::string& failures) {
  int ok = 0;
  for (const auto& c : kParseCases) {
    bool good = false;
    try {
      const expr::Ast ast = expr::parse(c.text);
      good = c.rendered != nullptr && expr::to_string(ast) == c.rendered;
      if (good && std::isfinite(c.value)) good = expr::eval(ast, {}) == c.value;
    } catch (const expr::ExprError& e) {
      good = c.rendered == nullptr && e.kind() == c.kind && e.position() == c.position;
    }
    ok += good ? 1 : 0;
    if (!good) failures += std::string(" '") + c.text + "'";
  }
  return ok;
}

expr::Node random_node(std::mt19937_64& rng, int depth) {
  using expr::Node;
  using expr::NodeKind;
  std::uniform_int_distribution<int> pick(0, 9);
  Node n;
  const int choice = depth <= 0 ? pick(rng) % 2 : pick(rng);
  if (choice == 0) {
    n.kind = NodeKind::Constant;
    std::uniform_int_distribution<int> style(0, 2);
    switch (style(rng)) {
      case 0: n.value = std::uniform_int_distribution<int>(0, 100)(rng); break;
      case 1: n.value = std::uniform_real_distribution<double>(0.0, 10.0)(rng); break;
      default: n.value = std::ldexp(std::uniform_real_distribution<double>(0.5, 1.0)(rng),
                                    std::uniform_int_distribution<int>(-40, 40)(rng));
    }
    return n;
  }
  if (choice == 1) {
    static const char* names[] = {"s", "x1", "x2", "u1_1", "u1_2", "u2_1", "u_1", "p1", "p2"};
    n.kind = NodeKind::Variable;
    expr::parse_variable_name(names[std::uniform_int_distribution<int>(0, 8)(rng)], n.var);
    return n;
  }
  if (choice == 2) {
    n.kind = NodeKind::Negate;
    n.children.push_back(random_node(rng, depth - 1));
    return n;
  }
  if (choice <= 6) {
    n.kind = NodeKind::Binary;
    n.op = static_cast<expr::BinaryOp>(std::uniform_int_distribution<int>(0, 4)(rng));
    n.children.push_back(random_node(rng, depth - 1));
    n.children.push_back(random_node(rng, depth - 1));
    return n;
  }
  n.kind = NodeKind::Call;
  n.func = static_cast<expr::Func>(std::uniform_int_distribution<int>(0, 11)(rng));
  for (std::size_t k = 0; k < expr::func_arity(n.func); ++k) n.children.push_back(random_node(rng, depth - 1));
  return n;
}

Outcome parser_suite() {
  std::string failures;
  const int ok = run_parse_cases(failures);
  const int total = static_cast<int>(std::size(kParseCases));
  std::mt19937_64 rng(10);
  int round_trips = 0;
  for (int k = 0; k < 1000; ++k) {
    const expr::Ast ast(std::make_shared<const expr::Node>(random_node(rng, 6)), "");
    const std::string text = expr::to_string(ast);
    try {
      const expr::Ast back = expr::parse(text);
      round_trips += expr::structurally_equal(ast.root(), back.root()) && expr::to_string(back) == text ? 1 : 0;
    } catch (const expr::ExprError&) {
    }
  }
  const bool pass = total == 50 && ok == total && round_trips == 1000;
  return {pass, std::to_string(ok) + "/" + std::to_string(total) + " cases, " + std::to_string(round_trips) +
                    "/1000 round trips" + failures};
}

}  // namespace

int main() {
  Suite suite;
  suite.run(1, "sine-heat solve vs closed form", 5.0, sine_heat_solve);
  suite.run(2, "Isaacs gap", 1.0, isaacs_gap_checks);
  suite.run(3, "saddle equivalence on random tables", 10.0, saddle_equivalence);
  suite.run(4, "saddle verification", 30.0, saddle_verification);
  suite.run(5, "finite-family game value", 120.0, game_value);
  suite.run(6, "pathwise decomposition across the gallery", 60.0, decomposition_gallery);
  suite.run(7, "single-controller verification (Hopf-Cole)", 60.0, control_case);
  suite.run(8, "scheme residual order", 0.0, scheme_order);
  suite.run(9, "determinism across worker counts", 0.0, determinism);
  suite.run(10, "parser suite", 0.0, parser_suite);
  std::printf("%d criteria failed\n", suite.failures());
  return suite.failures() == 0 ? 0 : 1;
}
