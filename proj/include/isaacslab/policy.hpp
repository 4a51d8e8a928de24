#pragma once

// Feedback policies z(s, x) for either player.
//
// A synthesized policy reads the gradient of a solved value field and plays
// the pure saddle selection of the Hamiltonian at that costate:
//   z1*(s, x) = argmax_{u1} min_{u2} H0_CV(s, x, Dv(s, x), u1, u2)
//   z2*(s, x) = argmin_{u2} max_{u1} H0_CV(s, x, Dv(s, x), u1, u2)

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isaacslab/expr.hpp"
#include "isaacslab/game_model.hpp"
#include "isaacslab/hamiltonian.hpp"
#include "isaacslab/value_field.hpp"

namespace isaacslab {

/// Player 1 maximises, player 2 minimises. The single controller of a
/// control model is player 2.
enum class Player { One, Two };

const ControlSet& control_set(const GameSpec& spec, Player who);

/// Per-worker scratch shared by the policies of one simulation. Caches the
/// saddle selection at the last (field, s, x) so both synthesized policies
/// reuse one Hamiltonian sweep.
class PolicyScratch {
 public:
  explicit PolicyScratch(const GameSpec& spec);

  struct Selection {
    std::size_t row = 0;
    std::size_t col = 0;
    double lower = 0.0;  // H0-
    double upper = 0.0;  // H0+
    bool clamped = false;
    std::vector<double> p;
  };

  /// Saddle selection at the interpolated gradient of `field`.
  const Selection& select(const ValueField& field, double s, std::span<const double> x);
  HamiltonianWorkspace& workspace() { return ws_; }

 private:
  HamiltonianWorkspace ws_;
  const ValueField* key_field_ = nullptr;
  double key_s_ = 0.0;
  std::vector<double> key_x_;
  Selection sel_;
};

struct PolicyEval {
  /// Index into the owning control set when the value is one of its points.
  std::optional<std::size_t> index;
  /// The gradient was read outside the field's box (synthesized only).
  bool clamped_gradient = false;
};

class FeedbackPolicy {
 public:
  enum class Kind { Constant, Expression, Tabulated, Synthesized };

  FeedbackPolicy() = default;

  static FeedbackPolicy constant(std::vector<double> u);
  /// Components are expressions in s and x1..xd.
  static FeedbackPolicy expression(std::vector<expr::Ast> components);
  /// Control values at the nodes of a spatial grid (first coordinate fastest,
  /// `values` has nodes x k entries); evaluation uses the nearest node.
  static FeedbackPolicy tabulated(std::vector<double> lo, std::vector<double> hi,
                                  std::vector<int> counts, std::vector<double> values);
  static FeedbackPolicy synthesized(std::shared_ptr<const ValueField> field);
  /// The only admissible policy of the passive player of a control model.
  static FeedbackPolicy passive() { return constant({}); }

  /// Parses "star" or a ';'-separated list of expressions in (s, x).
  static FeedbackPolicy parse(const std::string& text, std::shared_ptr<const ValueField> field);

  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  FeedbackPolicy& with_label(std::string label) {
    label_ = std::move(label);
    return *this;
  }
  const std::shared_ptr<const ValueField>& field() const { return field_; }
  std::span<const double> constant_value() const { return value_; }

  /// Throws ConfigError when the policy cannot act for `who` under `spec`.
  void check(const GameSpec& spec, Player who) const;

  /// Writes z(s, x), clamped into the player's control box, to `out`.
  PolicyEval evaluate(const GameSpec& spec, Player who, double s, std::span<const double> x,
                      std::span<double> out, PolicyScratch& scratch) const;

 private:
  Kind kind_ = Kind::Constant;
  std::string label_;
  std::vector<double> value_;           // constant
  std::vector<expr::Ast> components_;   // expression
  std::vector<double> lo_, hi_, h_;     // tabulated grid
  std::vector<int> counts_;
  std::vector<double> table_;
  std::shared_ptr<const ValueField> field_;  // synthesized
};

}  // namespace isaacslab
