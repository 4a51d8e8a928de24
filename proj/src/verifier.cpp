#include "isaacslab/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isaacslab/bi_solver.hpp"
#include "isaacslab/errors.hpp"

namespace isaacslab {

namespace {

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

// Welford in index order, so results do not depend on how paths were scheduled.
Moments moments(const std::vector<double>& v) {
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double delta = v[i] - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v[i] - mean);
  }
  const double n = static_cast<double>(v.size());
  return {mean, v.size() > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0};
}

void require_ok(const PathBundle& bundle) {
  if (bundle.failed) {
    throw SimulationError("simulation produced a non-finite state on path " +
                          std::to_string(bundle.failed_path.value_or(0)));
  }
}

double field_value(const ValueField& field, double t, std::span<const double> x0) {
  return field.interpolate(t, x0);
}

PathBundle run(const GameSpec& spec, const FeedbackPolicy& p1, const FeedbackPolicy& p2, double t,
               std::span<const double> x0, const McParams& mc, const ValueField* decomposition = nullptr) {
  SimulationOptions opts;
  opts.workers = mc.workers;
  opts.decomposition = decomposition;
  PathBundle b = simulate(spec, p1, p2, t, x0, mc.paths, mc.steps, mc.seed, opts);
  require_ok(b);
  return b;
}

}  // namespace

PayoffEstimate estimate_payoff(const PathBundle& bundle) {
  require_ok(bundle);
  PayoffEstimate out;
  out.n_paths = bundle.n_paths;
  out.clamped_fraction = bundle.clamped_fraction();
  std::vector<double> total, running, terminal;
  total.reserve(bundle.n_paths);
  std::size_t nonfinite = 0;
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < bundle.n_paths; ++i) {
    const double j = bundle.running_cost[i] + bundle.terminal_cost[i];
    if (!std::isfinite(j)) {
      ++nonfinite;
      const double inf = std::numeric_limits<double>::infinity();
      if (std::isnan(j) || j > 0) pos = inf;
      if (std::isnan(j) || j < 0) neg = inf;
      continue;
    }
    pos += std::max(j, 0.0);
    neg += std::max(-j, 0.0);
    total.push_back(j);
    running.push_back(bundle.running_cost[i]);
    terminal.push_back(bundle.terminal_cost[i]);
  }
  const double n = static_cast<double>(bundle.n_paths);
  out.nonfinite_fraction = static_cast<double>(nonfinite) / n;
  out.ill_defined = nonfinite > 0;
  out.positive_part = pos / n;
  out.negative_part = neg / n;
  if (total.empty()) {
    out.mean = out.running_mean = out.terminal_mean = std::numeric_limits<double>::quiet_NaN();
    out.standard_error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.running_mean = moments(running).mean;
  out.terminal_mean = moments(terminal).mean;
  out.mean = out.terminal_mean + out.running_mean;
  out.standard_error = moments(total).se;
  return out;
}

PayoffEstimate payoff(const GameSpec& spec, const FeedbackPolicy& policy1,
                      const FeedbackPolicy& policy2, double t, std::span<const double> x0,
                      const McParams& mc) {
  return estimate_payoff(run(spec, policy1, policy2, t, x0, mc));
}

PairedDifference paired_difference(const PathBundle& a, const PathBundle& b) {
  if (a.n_paths != b.n_paths) throw SimulationError("paired difference needs equal path counts");
  std::vector<double> diff(a.n_paths);
  for (std::size_t i = 0; i < a.n_paths; ++i) {
    diff[i] = (a.running_cost[i] + a.terminal_cost[i]) - (b.running_cost[i] + b.terminal_cost[i]);
  }
  const Moments m = moments(diff);
  return {m.mean, m.se};
}

double scheme_allowance(const GameSpec& spec, const ValueField& field, unsigned workers) {
  return 5.0 * residual(spec, field, workers).max_abs;
}

DecompositionReport fundamental_decomposition(const GameSpec& spec, const ValueField& field,
                                              const FeedbackPolicy& policy1,
                                              const FeedbackPolicy& policy2, double t,
                                              std::span<const double> x0, const McParams& mc,
                                              double allowance) {
  const PathBundle b = run(spec, policy1, policy2, t, x0, mc, &field);
  DecompositionReport out;
  out.value = field_value(field, t, x0);
  out.payoff = estimate_payoff(b);
  out.clamped_fraction = b.clamped_fraction();
  const Moments defect = moments(b.hamiltonian_defect);
  out.defect_mean = defect.mean;
  out.defect_se = defect.se;
  out.residuals.resize(b.n_paths);
  for (std::size_t i = 0; i < b.n_paths; ++i) {
    out.residuals[i] = b.running_cost[i] + b.terminal_cost[i] - out.value - b.hamiltonian_defect[i];
  }
  const Moments r = moments(out.residuals);
  out.residual_mean = r.mean;
  out.residual_se = r.se;
  const Moments st = moments(b.stochastic_integral);
  double cov = 0.0, vr = 0.0, vs = 0.0;
  for (std::size_t i = 0; i < b.n_paths; ++i) {
    const double a = out.residuals[i] - r.mean, c = b.stochastic_integral[i] - st.mean;
    cov += a * c;
    vr += a * a;
    vs += c * c;
  }
  out.correlation = (vr > 0.0 && vs > 0.0) ? cov / std::sqrt(vr * vs)
                                           : std::numeric_limits<double>::quiet_NaN();
  const double gap = std::fabs(out.residual_mean);
  out.passed = std::isfinite(gap) &&
               (gap <= 3.0 * out.residual_se || (out.residual_se == 0.0 && gap <= allowance));
  return out;
}

SaddleReport verify_saddle(const GameSpec& spec, std::shared_ptr<const ValueField> field,
                           const std::vector<FeedbackPolicy>& deviations1,
                           const std::vector<FeedbackPolicy>& deviations2, double t,
                           std::span<const double> x0, const McParams& mc,
                           std::optional<double> allowance) {
  const FeedbackPolicy star = FeedbackPolicy::synthesized(field);
  SaddleReport out;
  out.value = field_value(*field, t, x0);
  out.allowance = allowance ? *allowance : scheme_allowance(spec, *field, mc.workers);
  const PathBundle base = run(spec, star, star, t, x0, mc);
  out.star = estimate_payoff(base);
  out.clamped_fraction = base.clamped_fraction();
  out.value_matches =
      std::fabs(out.star.mean - out.value) <= 3.0 * out.star.standard_error + out.allowance;
  out.passed = out.value_matches && !out.star.ill_defined;

  const auto deviate = [&](Player who, const FeedbackPolicy& policy) {
    const PathBundle b = who == Player::One ? run(spec, policy, star, t, x0, mc)
                                            : run(spec, star, policy, t, x0, mc);
    DeviationResult r;
    r.player = who;
    r.label = policy.label();
    r.payoff = estimate_payoff(b);
    r.difference = paired_difference(b, base);
    // Player 1 deviating may only lower J, player 2 deviating may only raise it.
    const double signed_gain = who == Player::One ? r.difference.mean : -r.difference.mean;
    r.holds = signed_gain <= 3.0 * r.difference.standard_error;
    r.separated = -signed_gain > 2.0 * r.difference.standard_error;
    out.clamped_fraction = std::max(out.clamped_fraction, b.clamped_fraction());
    out.passed = out.passed && r.holds && !r.payoff.ill_defined;
    out.deviations.push_back(std::move(r));
  };
  for (const auto& p : deviations1) deviate(Player::One, p);
  for (const auto& p : deviations2) deviate(Player::Two, p);
  return out;
}

GameValueReport estimate_game_values(const GameSpec& spec, const ValueField* field,
                                     const std::vector<FeedbackPolicy>& family1,
                                     const std::vector<FeedbackPolicy>& family2, double t,
                                     std::span<const double> x0, const McParams& mc) {
  if (family1.empty() || family2.empty()) throw ConfigError("policy families must be non-empty");
  GameValueReport out;
  for (const auto& p : family1) out.labels1.push_back(p.label());
  for (const auto& p : family2) out.labels2.push_back(p.label());
  const auto star_index = [](const std::vector<FeedbackPolicy>& fam) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < fam.size(); ++i) {
      if (fam[i].kind() == FeedbackPolicy::Kind::Synthesized) return i;
    }
    return std::nullopt;
  };
  out.star1 = star_index(family1);
  out.star2 = star_index(family2);
  if (field != nullptr) out.value = field_value(*field, t, x0);

  const std::size_t n1 = family1.size(), n2 = family2.size();
  out.cells.reserve(n1 * n2);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      out.cells.push_back(payoff(spec, family1[i], family2[j], t, x0, mc));
      out.max_se = std::max(out.max_se, out.cells.back().standard_error);
    }
  }
  out.sup_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n1; ++i) {
    double row_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n2; ++j) row_min = std::min(row_min, out.cell(i, j).mean);
    out.sup_inf = std::max(out.sup_inf, row_min);
  }
  out.inf_sup = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n2; ++j) {
    double col_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n1; ++i) col_max = std::max(col_max, out.cell(i, j).mean);
    out.inf_sup = std::min(out.inf_sup, col_max);
  }
  const double tol = 3.0 * out.max_se;
  out.consistent = out.sup_inf <= out.inf_sup + tol;
  if (out.star1 && out.star2) {
    const double star = out.cell(*out.star1, *out.star2).mean;
    out.collapsed = std::fabs(out.sup_inf - star) <= tol && std::fabs(out.inf_sup - star) <= tol;
  }
  return out;
}

ControlReport verify_control(const GameSpec& spec, const ValueField& field,
                             const std::vector<FeedbackPolicy>& family, double t,
                             std::span<const double> x0, const McParams& mc,
                             std::optional<double> allowance) {
  if (spec.kind != ModelKind::Control) throw ConfigError("verify_control needs a control model");
  if (field.equation() != Equation::ControlHjb) {
    throw ConfigError("verify_control needs a field from the control HJB solve");
  }
  ControlReport out;
  out.value = field_value(field, t, x0);
  out.allowance = allowance ? *allowance : scheme_allowance(spec, field, mc.workers);
  out.passed = true;
  const FeedbackPolicy passive = FeedbackPolicy::passive();
  for (std::size_t k = 0; k < family.size(); ++k) {
    const PathBundle b = run(spec, passive, family[k], t, x0, mc);
    ControlCandidate c;
    c.label = family[k].label();
    c.payoff = estimate_payoff(b);
    c.is_star = family[k].kind() == FeedbackPolicy::Kind::Synthesized;
    c.not_below = c.payoff.mean >= out.value - 3.0 * c.payoff.standard_error;
    c.strictly_above = c.payoff.mean - out.value > 2.0 * c.payoff.standard_error;
    if (c.is_star && !out.star) {
      out.star = k;
      out.star_matches =
          std::fabs(c.payoff.mean - out.value) <= 3.0 * c.payoff.standard_error + out.allowance;
      out.passed = out.passed && out.star_matches;
    }
    out.passed = out.passed && c.not_below && !c.payoff.ill_defined;
    out.clamped_fraction = std::max(out.clamped_fraction, b.clamped_fraction());
    out.candidates.push_back(std::move(c));
  }
  if (!out.star) out.passed = false;
  return out;
}

}  // namespace isaacslab
