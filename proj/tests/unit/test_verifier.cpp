#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "isaacslab/bi_solver.hpp"
#include "isaacslab/verifier.hpp"
#include "models.hpp"

using namespace isaacslab;
namespace models = testing_models;

namespace {

constexpr double kPi = std::numbers::pi;
const double kX0[] = {kPi / 2};

Grid sine_grid(int n, int nt) { return Grid({kPi / 2 - 2 * kPi}, {kPi / 2 + 2 * kPi}, {n}, nt, 1.0); }

std::shared_ptr<const ValueField> solve(const GameSpec& spec, const Grid& grid) {
  return std::make_shared<const ValueField>(spec.kind == ModelKind::Control ? solve_hjb_control(spec, grid)
                                                                            : solve_bi(spec, grid));
}

FeedbackPolicy c(double u) { return FeedbackPolicy::constant({u}); }

McParams mc(std::size_t paths, int steps, std::uint64_t seed = 1) { return {paths, steps, seed, 1}; }

}  // namespace

TEST_CASE("deterministic payoff has zero standard error") {
  const GameSpec spec = load_spec(models::game("0.3", "u1_1", "0.5", "0", "1.75"));
  const PayoffEstimate p = payoff(spec, c(1.0), c(0.0), 0.0, kX0, mc(500, 20));
  CHECK(p.mean == 1.75);
  CHECK(p.standard_error == 0.0);
  CHECK_FALSE(p.ill_defined);
}

TEST_CASE("payoff additivity and the heat target") {
  const GameSpec spec = load_spec(models::sine_heat());
  const PayoffEstimate p = payoff(spec, c(0.0), c(0.0), 0.0, kX0, mc(20000, 50, 4));
  CHECK(p.mean == p.terminal_mean + p.running_mean);
  CHECK(std::fabs(p.mean - std::exp(-0.125)) <= 3.0 * p.standard_error);
  CHECK(p.n_paths == 20000);
}

TEST_CASE("non-finite payoffs are flagged") {
  // g = log(x) is undefined for the paths that end below zero.
  const GameSpec spec = load_spec(models::game("0", "0", "1", "0", "log(x1)"));
  const double x0[] = {0.5};
  const PayoffEstimate p = payoff(spec, c(0.0), c(0.0), 0.0, x0, mc(1000, 10));
  CHECK(p.ill_defined);
  CHECK(p.nonfinite_fraction > 0.2);
  CHECK(p.nonfinite_fraction < 0.5);
  CHECK(std::isinf(p.positive_part));
  CHECK(std::isinf(p.negative_part));
  CHECK(std::isfinite(p.mean));
}

TEST_CASE("decomposition on the sine-heat game") {
  const GameSpec spec = load_spec(models::sine_heat());
  const auto field = solve(spec, sine_grid(201, 321));
  const FeedbackPolicy star = FeedbackPolicy::synthesized(field);

  const DecompositionReport opt = fundamental_decomposition(spec, *field, star, star, 0.0, kX0, mc(5000, 100, 2));
  CHECK(opt.passed);
  CHECK(opt.residuals.size() == 5000);
  CHECK(std::fabs(opt.defect_mean) <= 1e-12);  // u1 = u2 = p on the grid: no defect
  CHECK(opt.correlation > 0.9);

  const DecompositionReport dev = fundamental_decomposition(spec, *field, c(1.0), star, 0.0, kX0, mc(5000, 100, 2));
  CHECK(dev.passed);
  CHECK(dev.defect_mean < -10.0 * dev.defect_se);             // -(p - 1)^2 / 2 integrated
  CHECK(dev.payoff.mean < dev.value - 3.0 * dev.residual_se);  // E J~ < v
  CHECK(std::fabs(dev.payoff.mean - dev.value - dev.defect_mean) <= 3.0 * dev.residual_se);
}

TEST_CASE("deterministic model: the decomposition residual is the scheme error") {
  const GameSpec spec = load_spec(models::game("0", "0", "0", "0", "sin(x1)"));
  const Grid grid({-4.0}, {4.0}, {65}, 11, 1.0);  // x0 sits on a node
  const auto field = solve(spec, grid);
  const FeedbackPolicy star = FeedbackPolicy::synthesized(field);
  const double x0[] = {0.25};
  const DecompositionReport r = fundamental_decomposition(spec, *field, star, star, 0.0, x0, mc(10, 10), 1e-9);
  CHECK(r.residual_se == 0.0);
  CHECK(std::fabs(r.residual_mean) <= 1e-12);
  CHECK(r.passed);
}

TEST_CASE("saddle verification on the sine-heat game") {
  const GameSpec spec = load_spec(models::sine_heat());
  const auto field = solve(spec, sine_grid(201, 321));
  const SaddleReport rep = verify_saddle(spec, field, {c(1.0), c(-1.0)}, {c(1.0)}, 0.0, kX0, mc(5000, 100, 6));
  CHECK(rep.passed);
  CHECK(rep.value_matches);
  REQUIRE(rep.deviations.size() == 3);
  for (const auto& d : rep.deviations) {
    CHECK(d.holds);
    CHECK(d.separated);
  }
  CHECK(rep.deviations[0].difference.mean < 0.0);
  CHECK(rep.deviations[2].difference.mean > 0.0);
}

TEST_CASE("all-zero model ties everywhere") {
  const GameSpec spec = load_spec(models::game("0", "0", "0", "0", "cos(x1)"));
  const Grid grid({-4.0}, {4.0}, {65}, 11, 1.0);  // x0 sits on a node
  const auto field = solve(spec, grid);
  const double x0[] = {0.25};
  const SaddleReport rep = verify_saddle(spec, field, {c(1.0)}, {c(-1.0)}, 0.0, x0, mc(20, 10));
  CHECK(rep.passed);
  for (const auto& d : rep.deviations) CHECK(d.difference.mean == 0.0);

  const FeedbackPolicy star = FeedbackPolicy::synthesized(field);
  const GameValueReport g = estimate_game_values(spec, field.get(), {star, c(1.0)}, {star, c(0.0)}, 0.0, x0, mc(20, 10));
  for (const auto& cell : g.cells) CHECK(cell.mean == std::cos(0.25));
  CHECK(g.sup_inf == std::cos(0.25));
  CHECK(g.inf_sup == std::cos(0.25));
  REQUIRE(g.collapsed.has_value());
  CHECK(*g.collapsed);
}

TEST_CASE("bilinear dynamics keep a gap without star policies") {
  const GameSpec spec = load_spec(models::bilinear());
  const double x0[] = {0.0};
  const std::vector<FeedbackPolicy> fam = {c(1.0), c(-1.0)};
  const GameValueReport g = estimate_game_values(spec, nullptr, fam, fam, 0.0, x0, mc(4000, 50));
  CHECK(g.consistent);
  CHECK(g.sup_inf == doctest::Approx(-1.0).epsilon(0.05));
  CHECK(g.inf_sup == doctest::Approx(1.0).epsilon(0.05));
  CHECK(g.sup_inf < g.inf_sup - 3.0 * g.max_se);
  CHECK_FALSE(g.collapsed.has_value());
}

TEST_CASE("single-controller verification") {
  // l = u^2 with f1 = 0: doing nothing is optimal and v is the heat solution.
  const GameSpec spec = load_spec(models::control("0", "0.5", "u_1^2", "sin(x1)", -1.0, 1.0, 21));
  const auto field = solve(spec, sine_grid(201, 321));
  const ControlReport rep = verify_control(spec, *field, {FeedbackPolicy::synthesized(field), c(0.5), c(-0.3)},
                                           0.0, kX0, mc(5000, 50, 9));
  CHECK(rep.passed);
  REQUIRE(rep.star.has_value());
  CHECK(rep.star_matches);
  CHECK(rep.value == doctest::Approx(std::exp(-0.125)).epsilon(1e-3));
  CHECK(rep.candidates[1].strictly_above);
  CHECK(rep.candidates[2].strictly_above);

  const GameSpec free = load_spec(models::control("0", "0.5", "0", "sin(x1)", -1.0, 1.0, 5));
  const auto ff = solve(free, sine_grid(101, 81));
  const ControlReport tie = verify_control(free, *ff, {FeedbackPolicy::synthesized(ff), c(1.0)}, 0.0, kX0, mc(2000, 20));
  CHECK(tie.candidates[0].payoff.mean == tie.candidates[1].payoff.mean);

  CHECK_THROWS_AS(verify_control(load_spec(models::sine_heat()), *ff, {c(0.0)}, 0.0, kX0, mc(10, 10)), ConfigError);
}
