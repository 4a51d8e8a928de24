#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isaacslab/config.hpp"
#include "isaacslab/expr.hpp"

namespace isaacslab {

/// Finite discretisation of a compact box U in R^k. Points are stored
/// row-major and sorted lexicographically; enumeration order is the
/// tie-breaking order for every argmax/argmin in the library.
class ControlSet {
 public:
  ControlSet() = default;

  /// Tensor grid with `counts[j]` points on [lo_j, hi_j].
  static ControlSet grid(std::vector<double> lo, std::vector<double> hi, std::vector<int> counts);
  /// Explicit point list; duplicates are removed.
  static ControlSet points(std::vector<double> lo, std::vector<double> hi,
                           std::vector<std::vector<double>> pts);
  /// The 0-dimensional one-point set used for the passive player of a
  /// single-controller problem.
  static ControlSet singleton();

  std::size_t dim() const { return lo_.size(); }
  std::size_t size() const { return count_; }
  std::span<const double> point(std::size_t i) const {
    return {flat_.data() + i * dim(), dim()};
  }
  std::span<const double> flat() const { return flat_; }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }

  /// Clamps `u` into the bounding box in place; returns true if anything moved.
  bool clamp(std::span<double> u) const;
  /// Index of a point equal to `u` within `tol` (max norm), if any.
  std::optional<std::size_t> find(std::span<const double> u, double tol = 1e-12) const;

 private:
  void finalize(std::vector<std::vector<double>> pts);

  std::vector<double> lo_, hi_;
  std::vector<double> flat_;
  std::size_t count_ = 0;
};

enum class ModelKind { Game, Control };

/// Which arguments a coefficient actually reads.
struct Dependence {
  bool time = false;
  bool state = false;
};

/// Coefficients of
///   dy = [b(s,y) + f1(s,y,u1,u2)] ds + sigma(s,y) dW,
///   J  = E[ int l(s,y,u1,u2) ds + g(y(T)) ].
/// Player 1 (u1) maximises J, player 2 (u2) minimises it. A control model
/// has a single minimising controller u; it is stored as player 2 with a
/// one-point U1.
class GameSpec {
 public:
  ModelKind kind = ModelKind::Game;
  int d = 1;
  int m = 1;
  double T = 1.0;
  std::vector<expr::Ast> b;      // d
  std::vector<expr::Ast> f1;     // d
  std::vector<expr::Ast> sigma;  // d*m, row-major
  expr::Ast l;
  expr::Ast g;
  ControlSet U1;
  ControlSet U2;
  std::string name;

  /// Validates structure and computes dependency flags. Called by the loaders;
  /// call again after building a spec by hand.
  void finalize();

  // Hot-path evaluators. Spans must have the documented sizes.
  void eval_b(double s, std::span<const double> x, std::span<double> out) const;
  void eval_f1(double s, std::span<const double> x, std::span<const double> u1,
               std::span<const double> u2, std::span<double> out) const;
  void eval_sigma(double s, std::span<const double> x, std::span<double> out) const;
  double eval_l(double s, std::span<const double> x, std::span<const double> u1,
                std::span<const double> u2) const;
  double eval_g(std::span<const double> x) const;

  struct Dynamics {
    Eigen::VectorXd drift;      // b + f1
    Eigen::MatrixXd diffusion;  // d x m
  };
  Dynamics eval_dynamics(double s, std::span<const double> x, std::span<const double> u1,
                         std::span<const double> u2) const;

  /// Dependence of the pair (f1, l), which fixes how often Hamiltonian
  /// control tables must be rebuilt.
  const Dependence& control_terms() const { return control_terms_; }
  /// Dependence of the pair (b, sigma).
  const Dependence& uncontrolled_terms() const { return uncontrolled_terms_; }

  /// Canonical scenario text for the model sections.
  std::string canonical() const;

 private:
  expr::Bindings bind(double s, std::span<const double> x, std::span<const double> u1,
                      std::span<const double> u2) const;

  Dependence control_terms_{};
  Dependence uncontrolled_terms_{};
};

/// Builds a GameSpec from the model sections of a scenario document:
/// [model], [dynamics], [cost], [controls.u1]/[controls.u2] (or
/// [controls.u] for kind = "control").
GameSpec load_spec(const config::Document& doc);
GameSpec load_spec(std::string_view config_text);

struct SamplePoint {
  double s = 0.0;
  std::vector<double> x;
  std::vector<double> u1;
  std::vector<double> u2;
};

/// Deterministic cloud: `n_states` draws of (s, x) uniform on
/// [0,T] x [-radius, radius]^d, each paired with every control pair when
/// |U1|*|U2| <= 1024, otherwise with `pairs_per_state` random pairs.
std::vector<SamplePoint> make_sample_cloud(const GameSpec& spec, double radius,
                                           std::size_t n_states, std::uint64_t seed,
                                           std::size_t pairs_per_state = 16);

struct DiagnosticsReport {
  std::size_t samples = 0;
  // Linear growth: K = max (|b| + |f1| + ||sigma||_F) / (1 + |x|).
  double growth_constant = 0.0;
  double growth_constant_doubled = 0.0;  // same cloud with x scaled by 2
  bool unbounded_suspicion = false;
  // Girsanov kernel bound max |sigma^+ f1| with sigma^+ = sigma^T (sigma sigma^T)^-1.
  std::optional<double> novikov_bound;
  bool degenerate = false;
  double nondegeneracy_constant = 0.0;  // min eigenvalue of sigma sigma^T
};

DiagnosticsReport check_linear_growth(const GameSpec& spec, std::span<const SamplePoint> cloud);
DiagnosticsReport check_novikov_boundedness(const GameSpec& spec,
                                            std::span<const SamplePoint> cloud);

/// Minimum eigenvalue and condition number of sigma sigma^T at one point.
struct CovarianceSpectrum {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double condition = 0.0;  // +inf when singular
};
CovarianceSpectrum covariance_spectrum(const GameSpec& spec, double s, std::span<const double> x);

}  // namespace isaacslab
