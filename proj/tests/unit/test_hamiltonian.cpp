#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "isaacslab/hamiltonian.hpp"
#include "models.hpp"

using namespace isaacslab;
namespace models = testing_models;

namespace {

const double kX[] = {0.3};

}  // namespace

TEST_CASE("current-value Hamiltonian") {
  const GameSpec spec = load_spec(models::sine_heat());
  const double p[] = {0.8}, u[] = {0.8};
  CHECK(h0_cv(spec, 0.0, kX, p, u, u) == 0.0);
  const double p1[] = {1.0}, one[] = {1.0}, zero[] = {0.0};
  CHECK(h0_cv(spec, 0.0, kX, p1, one, zero) == 0.5);
  const GameSpec constant = load_spec(models::game("0", "0", "1", "1", "0"));
  CHECK(h0_cv(constant, 0.4, kX, p1, one, zero) == 1.0);
}

TEST_CASE("lower and upper values") {
  const GameSpec bilinear = load_spec(models::bilinear());
  const double p[] = {0.7};
  CHECK(h_lower(bilinear, 0.0, kX, p).value == doctest::Approx(-0.7).epsilon(1e-15));
  CHECK(h_upper(bilinear, 0.0, kX, p).value == doctest::Approx(0.7).epsilon(1e-15));

  const GameSpec spec = load_spec(models::sine_heat());
  const double q[] = {0.6};
  const auto lo = h_lower(spec, 0.0, kX, q);
  const auto up = h_upper(spec, 0.0, kX, q);
  CHECK(lo.value == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(up.value == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(lo.control[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(up.control[0] == doctest::Approx(0.6).epsilon(1e-15));

  const GameSpec zero = load_spec(models::game("0", "0", "1", "0", "0"));
  CHECK(h_lower(zero, 0.0, kX, q).value == 0.0);
  const GameSpec c = load_spec(models::game("0", "0", "1", "2.5", "0"));
  CHECK(h_upper(c, 0.0, kX, q).value == 2.5);
}

TEST_CASE("Isaacs gap") {
  const GameSpec bilinear = load_spec(models::bilinear());
  std::vector<CostatePoint> at07{{0.0, {0.0}, {0.7}}};
  CHECK(isaacs_gap(bilinear, at07) == doctest::Approx(1.4).epsilon(1e-15));
  std::vector<CostatePoint> at0{{0.0, {0.0}, {0.0}}};
  CHECK(isaacs_gap(bilinear, at0) == 0.0);

  const GameSpec spec = load_spec(models::sine_heat());
  std::vector<CostatePoint> cloud;
  for (int k = -20; k <= 20; ++k) cloud.push_back({0.5, {0.1 * k}, {0.15 * k}});
  CHECK(isaacs_gap(spec, cloud) <= 1e-15);
}

TEST_CASE("saddle selection") {
  const GameSpec spec = load_spec(models::sine_heat());
  const double p[] = {0.6};
  const auto sel = select_saddle(spec, 0.0, kX, p);
  CHECK(sel.u1[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(sel.u2[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(check_saddle_inequalities(spec, 0.0, kX, p, sel.u1, sel.u2).holds);

  const double big[] = {2.0};
  const auto clamped = select_saddle(spec, 0.0, kX, big);
  CHECK(clamped.u1[0] == 1.0);
  CHECK(clamped.u2[0] == 1.0);

  const GameSpec zero = load_spec(models::game("0", "0", "1", "0", "0"));
  const auto tie = select_saddle(zero, 0.0, kX, p);
  CHECK(tie.index1 == 0);
  CHECK(tie.index2 == 0);
  CHECK(check_saddle_inequalities(zero, 0.0, kX, p, tie.u1, tie.u2).holds);

  const GameSpec bilinear = load_spec(models::bilinear());
  const double q[] = {0.7};
  for (double a : {-1.0, 1.0}) {
    for (double b : {-1.0, 1.0}) {
      const double u1[] = {a}, u2[] = {b};
      CHECK_FALSE(check_saddle_inequalities(bilinear, 0.0, kX, q, u1, u2).holds);
    }
  }
}

TEST_CASE("matrix games") {
  // Rows maximise: row 1 guarantees 2, column 0 concedes at most 2.
  const std::vector<double> a{1, 5, 2, 3};
  const auto sol = solve_pure(a, 2, 2);
  CHECK(sol.lower == 2.0);
  CHECK(sol.upper == 2.0);
  CHECK(sol.row == 1);
  CHECK(sol.col == 0);
  CHECK(check_saddle(a, 2, 2, 1, 0).holds);
  const std::vector<double> pennies{1, -1, -1, 1};
  const auto mp = solve_pure(pennies, 2, 2);
  CHECK(mp.gap() == 2.0);
  CHECK_FALSE(check_saddle(pennies, 2, 2, mp.row, mp.col).holds);
}

TEST_CASE("argmax invariance under a control-independent shift") {
  const GameSpec a = load_spec(models::game("0", "u1_1*u2_1 + u1_1^2 - u2_1", "1", "sin(3*u1_1) - u2_1^2", "0", 15));
  const GameSpec b = load_spec(models::game("2*x1", "u1_1*u2_1 + u1_1^2 - u2_1", "1", "sin(3*u1_1) - u2_1^2", "0", 15));
  for (double p0 : {-2.0, -0.3, 0.0, 0.9, 1.7}) {
    const double p[] = {p0};
    const auto ra = hamiltonian(a, 0.0, kX, p);
    const auto rb = hamiltonian(b, 0.0, kX, p);
    CHECK(ra.argmax_u1 == rb.argmax_u1);
    CHECK(ra.argmin_u2 == rb.argmin_u2);
  }
}

TEST_CASE("lower never exceeds upper; refinement is monotone") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::string f1 = "u1_1*u2_1 + 0.3*sin(5*u1_1) - step(u2_1 - 0.2)";
  const std::string l = "cos(4*u1_1*u2_1) + u2_1^2 - abs(u1_1)";
  // 9 points on [-1, 1] are a subset of 17 points.
  const GameSpec coarse = load_spec(models::game("0", f1, "1", l, "0", 9));
  const GameSpec fine = load_spec(models::game("0", f1, "1", l, "0", 17));
  for (int k = 0; k < 200; ++k) {
    const double p[] = {3.0 * unit(rng)}, x[] = {unit(rng)};
    const auto c = hamiltonian(coarse, 0.0, x, p);
    const auto f = hamiltonian(fine, 0.0, x, p);
    CHECK(c.lower <= c.upper + 1e-12);
    CHECK(f.lower <= f.upper + 1e-12);
    // Mixed refinements computed directly: enlarging only the inner set.
    double inner_fine_lower = -INFINITY;  // max over coarse U1 of min over fine U2
    for (std::size_t i = 0; i < coarse.U1.size(); ++i) {
      double m = INFINITY;
      for (std::size_t j = 0; j < fine.U2.size(); ++j) {
        m = std::min(m, h0_cv(fine, 0.0, x, p, coarse.U1.point(i), fine.U2.point(j)));
      }
      inner_fine_lower = std::max(inner_fine_lower, m);
    }
    CHECK(inner_fine_lower <= c.lower + 1e-12);  // larger inner set: lower cannot rise
    CHECK(f.lower >= inner_fine_lower - 1e-12);  // then larger outer set: cannot fall
  }
}

TEST_CASE("indexed scalar solve agrees with the full sweep") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const char* models[][2] = {
      {"u1_1 - u2_1", "u2_1^2/2 - u1_1^2/2"},
      {"u1_1 * u2_1", "0"},
      {"step(u1_1 - u2_1) - step(u2_1)", "step(u1_1) + step(-u2_1) - step(u1_1 + u2_1)"},
      {"0", "step(u1_1 - 0.1) - step(u2_1 + 0.1)"},
      {"sin(3*u1_1*u2_1)", "cos(2*u1_1 - u2_1)"},
  };
  for (const auto& m : models) {
    const GameSpec spec = load_spec(models::game("0", m[0], "1", m[1], "0", 13));
    ControlTable plain, indexed;
    plain.build(spec, 0.0, kX);
    indexed.build(spec, 0.0, kX);
    indexed.build_scalar_index();
    REQUIRE(indexed.has_scalar_index());
    std::vector<double> probes;
    for (int k = 0; k < 300; ++k) probes.push_back(4.0 * unit(rng));
    for (int k = -40; k <= 40; ++k) probes.push_back(0.05 * k);  // many exact crossings
    for (double q : probes) {
      const double p[] = {q};
      const auto a = plain.solve(p);
      const auto b = indexed.solve(p);
      CHECK(a.lower == b.lower);
      CHECK(a.upper == b.upper);
      CHECK(a.row == b.row);
      CHECK(a.col == b.col);
    }
  }
}
