#pragma once

// Euler-Maruyama simulation of the closed-loop state equation
//   y_{k+1} = y_k + [b + f1(s_k, y_k, z1(s_k, y_k), z2(s_k, y_k))] dt + sigma(s_k, y_k) dW_k
// with left-endpoint running cost. Path i draws its increments from a
// generator seeded by splitmix64(splitmix64(base_seed) + i), so bundles do not
// depend on the worker count and two runs with the same seed share their
// Brownian increments (common random numbers).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "isaacslab/game_model.hpp"
#include "isaacslab/policy.hpp"
#include "isaacslab/value_field.hpp"

namespace isaacslab {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t path_seed(std::uint64_t base_seed, std::size_t path);

struct SimulationOptions {
  unsigned workers = 1;
  /// Keep dW, y, u1 and u2 for every path and step.
  bool store_paths = false;
  /// When set, accumulate along each path the Hamiltonian defect
  ///   sum_k [H0_CV(s_k, y_k, p_k, u1_k, u2_k) - H0(s_k, y_k, p_k)] dt
  /// and the stochastic integral sum_k <p_k, sigma dW_k>, with p_k the
  /// interpolated gradient of this field.
  const ValueField* decomposition = nullptr;
};

struct PathBundle {
  double t = 0.0;
  double horizon = 0.0;  // T
  std::vector<double> x0;
  std::size_t n_paths = 0;
  int n_steps = 0;
  int d = 0, m = 0, k1 = 0, k2 = 0;
  double dt = 0.0;
  std::uint64_t base_seed = 0;

  bool failed = false;
  std::optional<std::size_t> failed_path;  // lowest path index with a non-finite state

  // Per path.
  std::vector<double> running_cost;  // sum_k l dt
  std::vector<double> terminal_cost; // g(y_T)
  std::vector<double> sup_norm;      // max_k |y_k|
  std::vector<double> y_final;       // n_paths x d

  // Present when SimulationOptions::decomposition was set.
  std::vector<double> hamiltonian_defect;
  std::vector<double> stochastic_integral;

  // Present when SimulationOptions::store_paths was set.
  std::vector<double> dW;  // n_paths x n_steps x m
  std::vector<double> y;   // n_paths x (n_steps+1) x d
  std::vector<double> u1;  // n_paths x n_steps x k1
  std::vector<double> u2;  // n_paths x n_steps x k2

  std::size_t policy_evaluations = 0;
  std::size_t clamped_evaluations = 0;

  double time(int k) const { return t + (horizon - t) * k / n_steps; }
  bool has_paths() const { return !y.empty(); }
  /// Fraction of synthesized-policy evaluations whose gradient lookup was
  /// clamped into the value-field box.
  double clamped_fraction() const {
    return policy_evaluations == 0
               ? 0.0
               : static_cast<double>(clamped_evaluations) / static_cast<double>(policy_evaluations);
  }
  /// Runs with more than 1% clamped evaluations should use a larger box.
  bool clamp_warning() const { return clamped_fraction() > 0.01; }
};

PathBundle simulate(const GameSpec& spec, const FeedbackPolicy& policy1,
                    const FeedbackPolicy& policy2, double t, std::span<const double> x0,
                    std::size_t n_paths, int n_steps, std::uint64_t base_seed,
                    const SimulationOptions& options = {});

struct MomentEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo estimate of E sup_{t<=s<=T} |y(s)|^p (sup over the time grid).
MomentEstimate estimate_moments(const PathBundle& bundle, int p);

}  // namespace isaacslab
