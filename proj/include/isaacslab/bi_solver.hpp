#pragma once

// Explicit backward solver for
//   v_s + <b, Dv> + 1/2 Tr(sigma^T D^2v sigma) + H0(s, x, Dv) = 0,  v(T, .) = g,
// with H0 = H0+ (upper Isaacs), H0- (lower Isaacs) or min over U (control HJB).
//
// Second derivatives use the standard three-point stencil, first derivatives
// central differences. Ghost nodes extrapolate linearly. When the sampled
// non-degeneracy constant of sigma sigma^T falls below a threshold a local
// Lax-Friedrichs term theta * h * D^2 v is added per axis, with theta half
// the largest characteristic speed |b + f1(u*)| seen at the one-sided and
// central gradients.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "isaacslab/game_model.hpp"
#include "isaacslab/value_field.hpp"

namespace isaacslab {

enum class Side { Upper, Lower };

struct SolverOptions {
  Side side = Side::Upper;
  unsigned workers = 1;
  double degeneracy_threshold = 0.05;
  /// Overrides the automatic Lax-Friedrichs switch when set.
  std::optional<bool> lax_friedrichs;
};

struct StabilityInfo {
  double dt_max = 0.0;
  double diffusion_max = 0.0;       // max |(sigma sigma^T)_ij|
  std::vector<double> speed_max;    // per axis: max |b_i| + max |f1_i|
  double nondegeneracy = 0.0;       // min eigenvalue of sigma sigma^T
};

/// Samples every node at t = 0, T/2, T and evaluates
///   dt_max = 0.9 / (sum_i D/h_i^2 + sum_i F_i/h_i).
StabilityInfo stability_info(const GameSpec& spec, const Grid& grid);

/// Smallest number of time levels whose step satisfies the stability bound.
int min_time_levels(const GameSpec& spec, const Grid& grid);

ValueField solve_bi(const GameSpec& spec, const Grid& grid, const SolverOptions& options = {});
/// Requires a control model (kind = "control").
ValueField solve_hjb_control(const GameSpec& spec, const Grid& grid,
                             const SolverOptions& options = {});

struct NodeRef {
  int level = 0;
  std::size_t node = 0;
};

/// Nodes inside the centred box covering `fraction` of each side, on every
/// `level_stride`-th level below the terminal one.
std::vector<NodeRef> interior_sample(const Grid& grid, double fraction = 0.6,
                                     int level_stride = 1);

struct ResidualStats {
  double max_abs = 0.0;
  double rms = 0.0;
  std::size_t count = 0;
  NodeRef worst{};
};

/// Discrete residual
///   r = (v^{n+1} - v^n)/dt + <b, Dv^n> + 1/2 Tr(a D^2 v^n) + H0(s_n, x, Dv^n)
/// at level n < nt-1, with the same spatial stencils as the solver and no
/// artificial viscosity.
double residual_at(const GameSpec& spec, const ValueField& field, NodeRef at);
ResidualStats residual(const GameSpec& spec, const ValueField& field,
                       std::span<const NodeRef> sample, unsigned workers = 1);
ResidualStats residual(const GameSpec& spec, const ValueField& field, unsigned workers = 1);

}  // namespace isaacslab
