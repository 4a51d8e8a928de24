#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace isaacslab {

/// Uniform space-time grid on a box in R^d (d <= 2) times [0, T].
/// Nodes are numbered with the first coordinate varying fastest.
class Grid {
 public:
  Grid() = default;
  Grid(std::vector<double> lo, std::vector<double> hi, std::vector<int> counts, int time_levels,
       double horizon);

  int dim() const { return static_cast<int>(lo_.size()); }
  double lo(int i) const { return lo_[i]; }
  double hi(int i) const { return hi_[i]; }
  int count(int i) const { return counts_[i]; }
  double h(int i) const { return h_[i]; }
  int time_levels() const { return nt_; }
  double horizon() const { return T_; }
  double dt() const { return dt_; }
  double time(int level) const;
  std::size_t nodes() const { return nodes_; }
  std::size_t stride(int i) const { return i == 0 ? 1 : static_cast<std::size_t>(counts_[0]); }

  void coords(std::size_t node, std::span<double> x) const;
  int axis_index(std::size_t node, int axis) const;
  /// True when the node lies in the centred sub-box covering `fraction` of
  /// each side length.
  bool in_inner_box(std::size_t node, double fraction) const;

  bool operator==(const Grid&) const = default;

 private:
  std::vector<double> lo_, hi_;
  std::vector<int> counts_;
  std::vector<double> h_;
  int nt_ = 0;
  double T_ = 0.0;
  double dt_ = 0.0;
  std::size_t nodes_ = 0;
};

enum class Equation { UpperIsaacs, LowerIsaacs, ControlHjb };

std::string equation_name(Equation e);

struct SchemeInfo {
  double dt_max = 0.0;
  bool lax_friedrichs = false;
  double nondegeneracy = 0.0;
};

/// Grid samples of a candidate solution v and (once computed) its spatial
/// gradient. Storage is time-major: level n holds nodes() values.
class ValueField {
 public:
  ValueField() = default;
  ValueField(Grid grid, Equation equation, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  Equation equation() const { return equation_; }
  const SchemeInfo& scheme() const { return scheme_; }
  void set_scheme(SchemeInfo info) { scheme_ = info; }

  std::span<const double> level(int n) const;
  std::span<double> level(int n);
  double value(int n, std::size_t node) const { return values_[index(n, node)]; }
  std::span<const double> values() const { return values_; }

  bool has_gradient() const { return !gradient_.empty(); }
  std::span<const double> gradient(int n, std::size_t node) const;

  /// Central differences inside, second-order one-sided at the boundary.
  void compute_gradient();

  /// Multilinear in x, linear in time; x outside the box is clamped.
  double interpolate(double s, std::span<const double> x) const;
  /// Gradient piecewise constant in time (level floor(s/dt), never the
  /// terminal level) and multilinear in x. Returns true when x was clamped
  /// into the box.
  bool interpolate_gradient(double s, std::span<const double> x, std::span<double> out) const;

  /// Time level whose gradient applies at time s.
  int gradient_level(double s) const;

 private:
  std::size_t index(int n, std::size_t node) const {
    return static_cast<std::size_t>(n) * grid_.nodes() + node;
  }
  struct Stencil {
    std::size_t nodes[4];
    double weights[4];
    int count;
    bool clamped;
  };
  Stencil stencil(std::span<const double> x) const;

  Grid grid_;
  Equation equation_ = Equation::UpperIsaacs;
  SchemeInfo scheme_{};
  std::vector<double> values_;
  std::vector<double> gradient_;
};

/// Returns a copy of `field` with the gradient populated.
ValueField gradient(const ValueField& field);

}  // namespace isaacslab
