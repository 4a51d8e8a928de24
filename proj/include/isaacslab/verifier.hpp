#pragma once

// Monte-Carlo checks of the verification results for a solved value field:
// payoff estimates, the pathwise decomposition
//   J~ = v(t, x0) + int (H0_CV - H0) dr + M_T,
// saddle inequalities under common random numbers, finite-family game values
// and the single-controller verification theorem. Every gate is statistical
// (k standard errors) plus, where a value field enters, a scheme allowance of
// 5 x the field's max grid residual.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "isaacslab/game_model.hpp"
#include "isaacslab/policy.hpp"
#include "isaacslab/sde.hpp"
#include "isaacslab/value_field.hpp"

namespace isaacslab {

struct McParams {
  std::size_t paths = 10000;
  int steps = 200;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct PayoffEstimate {
  double mean = 0.0;  // terminal_mean + running_mean
  double standard_error = 0.0;
  std::size_t n_paths = 0;
  double terminal_mean = 0.0;
  double running_mean = 0.0;
  double nonfinite_fraction = 0.0;
  /// Some path payoff was non-finite. The means then cover the finite paths
  /// only, and J+ / J- below are the expectations of the positive and
  /// negative parts over all paths (+inf when any path contributes +/-inf or
  /// NaN).
  bool ill_defined = false;
  double positive_part = 0.0;
  double negative_part = 0.0;
  double clamped_fraction = 0.0;
};

/// Summarises the per-path payoffs running_cost + terminal_cost of a bundle.
PayoffEstimate estimate_payoff(const PathBundle& bundle);

PayoffEstimate payoff(const GameSpec& spec, const FeedbackPolicy& policy1,
                      const FeedbackPolicy& policy2, double t, std::span<const double> x0,
                      const McParams& mc);

/// Mean and standard error of the per-path difference a - b (common random
/// numbers make the two vectors path-aligned).
struct PairedDifference {
  double mean = 0.0;
  double standard_error = 0.0;
};
PairedDifference paired_difference(const PathBundle& a, const PathBundle& b);

/// Scheme allowance = 5 x max residual of `field` on its interior sample.
double scheme_allowance(const GameSpec& spec, const ValueField& field, unsigned workers = 1);

struct DecompositionReport {
  double value = 0.0;        // v(t, x0) interpolated from the field
  PayoffEstimate payoff;     // J~
  double defect_mean = 0.0;  // MC mean of int (H0_CV - H0) dr
  double defect_se = 0.0;
  double residual_mean = 0.0;  // R = J~ - v - int (H0_CV - H0) dr
  double residual_se = 0.0;
  /// Correlation of R with sum <Dv, sigma dW>; NaN when either is constant.
  double correlation = 0.0;
  double clamped_fraction = 0.0;
  std::vector<double> residuals;  // per path
  /// |mean R| <= 3 SE(R); when SE(R) = 0 (no noise) |mean R| <= allowance.
  bool passed = false;
};

DecompositionReport fundamental_decomposition(const GameSpec& spec, const ValueField& field,
                                              const FeedbackPolicy& policy1,
                                              const FeedbackPolicy& policy2, double t,
                                              std::span<const double> x0, const McParams& mc,
                                              double allowance = 0.0);

struct DeviationResult {
  Player player = Player::One;
  std::string label;
  PayoffEstimate payoff;
  PairedDifference difference;  // J(deviation) - J(star, star)
  /// The inequality is not violated beyond 3 SE of the paired difference.
  bool holds = false;
  /// The inequality holds strictly by more than 2 SE.
  bool separated = false;
};

struct SaddleReport {
  double value = 0.0;  // v(t, x0)
  double allowance = 0.0;
  PayoffEstimate star;
  bool value_matches = false;  // |J(star, star) - v| <= 3 SE + allowance
  std::vector<DeviationResult> deviations;
  bool passed = false;  // value_matches and every deviation holds
  double clamped_fraction = 0.0;
};

/// `field` must carry a gradient; the star policies are synthesized from it.
/// Deviations of player 1 play against z2*, those of player 2 against z1*.
SaddleReport verify_saddle(const GameSpec& spec, std::shared_ptr<const ValueField> field,
                           const std::vector<FeedbackPolicy>& deviations1,
                           const std::vector<FeedbackPolicy>& deviations2, double t,
                           std::span<const double> x0, const McParams& mc,
                           std::optional<double> allowance = std::nullopt);

struct GameValueReport {
  std::vector<std::string> labels1, labels2;
  std::vector<PayoffEstimate> cells;  // row-major: rows = family1, cols = family2
  double sup_inf = 0.0;               // max_i min_j J(i, j)
  double inf_sup = 0.0;               // min_j max_i J(i, j)
  double max_se = 0.0;
  std::optional<std::size_t> star1, star2;
  std::optional<double> value;  // v(t, x0) when a field was supplied
  bool consistent = false;      // sup_inf <= inf_sup + 3 max_se
  /// With both stars present: sup_inf and inf_sup within 3 max_se of J(star, star).
  std::optional<bool> collapsed;

  const PayoffEstimate& cell(std::size_t i, std::size_t j) const {
    return cells[i * labels2.size() + j];
  }
};

/// Evaluates the full payoff matrix with common random numbers. `field` may be
/// null when the families contain no synthesized policy.
GameValueReport estimate_game_values(const GameSpec& spec, const ValueField* field,
                                     const std::vector<FeedbackPolicy>& family1,
                                     const std::vector<FeedbackPolicy>& family2, double t,
                                     std::span<const double> x0, const McParams& mc);

struct ControlCandidate {
  std::string label;
  PayoffEstimate payoff;
  bool is_star = false;
  bool not_below = false;     // J(z) >= v - 3 SE
  bool strictly_above = false;  // J(z) - v > 2 SE
};

struct ControlReport {
  double value = 0.0;
  double allowance = 0.0;
  std::vector<ControlCandidate> candidates;
  std::optional<std::size_t> star;
  bool star_matches = false;  // |J(star) - v| <= 3 SE + allowance
  bool passed = false;        // star_matches and every candidate not_below
  double clamped_fraction = 0.0;
};

/// `field` must come from solve_hjb_control; family entries act for the
/// single controller.
ControlReport verify_control(const GameSpec& spec, const ValueField& field,
                             const std::vector<FeedbackPolicy>& family, double t,
                             std::span<const double> x0, const McParams& mc,
                             std::optional<double> allowance = std::nullopt);

}  // namespace isaacslab
