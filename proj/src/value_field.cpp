#include "isaacslab/value_field.hpp"

#include <algorithm>
#include <cmath>

#include "isaacslab/errors.hpp"

namespace isaacslab {

Grid::Grid(std::vector<double> lo, std::vector<double> hi, std::vector<int> counts,
           int time_levels, double horizon)
    : lo_(std::move(lo)), hi_(std::move(hi)), counts_(std::move(counts)), nt_(time_levels),
      T_(horizon) {
  const std::size_t d = lo_.size();
  if (d < 1 || d > 2) throw SolverError("grid solver supports d = 1 or d = 2");
  if (hi_.size() != d || counts_.size() != d) throw SolverError("grid dimension mismatch");
  if (!(T_ > 0.0)) throw SolverError("grid horizon must be positive");
  if (nt_ < 2) throw SolverError("grid needs at least two time levels");
  nodes_ = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (!(lo_[i] < hi_[i])) throw SolverError("grid box needs lo < hi");
    if (counts_[i] < 3) throw SolverError("grid needs at least 3 points per axis");
    h_.push_back((hi_[i] - lo_[i]) / (counts_[i] - 1));
    nodes_ *= static_cast<std::size_t>(counts_[i]);
  }
  dt_ = T_ / (nt_ - 1);
}

double Grid::time(int level) const { return T_ * level / (nt_ - 1); }

int Grid::axis_index(std::size_t node, int axis) const {
  if (axis == 0) return static_cast<int>(node % static_cast<std::size_t>(counts_[0]));
  return static_cast<int>(node / static_cast<std::size_t>(counts_[0]));
}

void Grid::coords(std::size_t node, std::span<double> x) const {
  for (int i = 0; i < dim(); ++i) {
    const int k = axis_index(node, i);
    x[i] = k == counts_[i] - 1 ? hi_[i] : lo_[i] + k * h_[i];
  }
}

bool Grid::in_inner_box(std::size_t node, double fraction) const {
  for (int i = 0; i < dim(); ++i) {
    const double centre = 0.5 * (lo_[i] + hi_[i]);
    const double half = 0.5 * fraction * (hi_[i] - lo_[i]);
    const int k = axis_index(node, i);
    const double x = lo_[i] + k * h_[i];
    if (x < centre - half - 1e-12 * (hi_[i] - lo_[i]) ||
        x > centre + half + 1e-12 * (hi_[i] - lo_[i])) {
      return false;
    }
  }
  return true;
}

std::string equation_name(Equation e) {
  switch (e) {
    case Equation::UpperIsaacs: return "bi-upper";
    case Equation::LowerIsaacs: return "bi-lower";
    case Equation::ControlHjb: return "hjb-control";
  }
  return "?";
}

ValueField::ValueField(Grid grid, Equation equation, std::vector<double> values)
    : grid_(std::move(grid)), equation_(equation), values_(std::move(values)) {
  if (values_.size() != grid_.nodes() * static_cast<std::size_t>(grid_.time_levels())) {
    throw SolverError("value array does not match the grid");
  }
}

std::span<const double> ValueField::level(int n) const {
  return {values_.data() + index(n, 0), grid_.nodes()};
}

std::span<double> ValueField::level(int n) { return {values_.data() + index(n, 0), grid_.nodes()}; }

std::span<const double> ValueField::gradient(int n, std::size_t node) const {
  const auto d = static_cast<std::size_t>(grid_.dim());
  return {gradient_.data() + index(n, node) * d, d};
}

void ValueField::compute_gradient() {
  const int d = grid_.dim();
  const std::size_t n_nodes = grid_.nodes();
  gradient_.assign(values_.size() * static_cast<std::size_t>(d), 0.0);
  for (int n = 0; n < grid_.time_levels(); ++n) {
    const double* v = values_.data() + index(n, 0);
    double* g = gradient_.data() + index(n, 0) * static_cast<std::size_t>(d);
    for (std::size_t node = 0; node < n_nodes; ++node) {
      for (int a = 0; a < d; ++a) {
        const int k = grid_.axis_index(node, a);
        const int last = grid_.count(a) - 1;
        const std::size_t st = grid_.stride(a);
        const double h = grid_.h(a);
        double out;
        if (k == 0) {
          out = (-3.0 * v[node] + 4.0 * v[node + st] - v[node + 2 * st]) / (2.0 * h);
        } else if (k == last) {
          out = (3.0 * v[node] - 4.0 * v[node - st] + v[node - 2 * st]) / (2.0 * h);
        } else {
          out = (v[node + st] - v[node - st]) / (2.0 * h);
        }
        g[node * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = out;
      }
    }
  }
}

ValueField::Stencil ValueField::stencil(std::span<const double> x) const {
  Stencil st{};
  const int d = grid_.dim();
  std::size_t base[2] = {0, 0};
  double frac[2] = {0.0, 0.0};
  for (int a = 0; a < d; ++a) {
    double xa = x[a];
    if (xa < grid_.lo(a)) {
      xa = grid_.lo(a);
      st.clamped = true;
    } else if (xa > grid_.hi(a)) {
      xa = grid_.hi(a);
      st.clamped = true;
    }
    const double t = (xa - grid_.lo(a)) / grid_.h(a);
    int i0 = static_cast<int>(std::floor(t));
    i0 = std::clamp(i0, 0, grid_.count(a) - 2);
    base[a] = static_cast<std::size_t>(i0);
    frac[a] = std::clamp(t - i0, 0.0, 1.0);
  }
  if (d == 1) {
    st.count = 2;
    st.nodes[0] = base[0];
    st.nodes[1] = base[0] + 1;
    st.weights[0] = 1.0 - frac[0];
    st.weights[1] = frac[0];
  } else {
    const std::size_t nx = static_cast<std::size_t>(grid_.count(0));
    const std::size_t n00 = base[0] + nx * base[1];
    st.count = 4;
    st.nodes[0] = n00;
    st.nodes[1] = n00 + 1;
    st.nodes[2] = n00 + nx;
    st.nodes[3] = n00 + nx + 1;
    st.weights[0] = (1.0 - frac[0]) * (1.0 - frac[1]);
    st.weights[1] = frac[0] * (1.0 - frac[1]);
    st.weights[2] = (1.0 - frac[0]) * frac[1];
    st.weights[3] = frac[0] * frac[1];
  }
  return st;
}

double ValueField::interpolate(double s, std::span<const double> x) const {
  const Stencil st = stencil(x);
  const int nt = grid_.time_levels();
  const double tau = std::clamp(s / grid_.dt(), 0.0, static_cast<double>(nt - 1));
  int n0 = static_cast<int>(std::floor(tau + 1e-9));
  n0 = std::min(n0, nt - 2);
  double w = tau - n0;
  if (std::fabs(w) < 1e-9) w = 0.0;
  if (std::fabs(w - 1.0) < 1e-9) w = 1.0;
  const auto at_level = [&](int n) {
    double acc = 0.0;
    for (int k = 0; k < st.count; ++k) acc += st.weights[k] * value(n, st.nodes[k]);
    return acc;
  };
  if (w == 0.0) return at_level(n0);
  if (w == 1.0) return at_level(n0 + 1);
  return (1.0 - w) * at_level(n0) + w * at_level(n0 + 1);
}

int ValueField::gradient_level(double s) const {
  const int nt = grid_.time_levels();
  int n = static_cast<int>(std::floor(s / grid_.dt() + 1e-9));
  return std::clamp(n, 0, nt - 2);
}

bool ValueField::interpolate_gradient(double s, std::span<const double> x,
                                      std::span<double> out) const {
  if (!has_gradient()) throw SolverError("value field has no gradient");
  const Stencil st = stencil(x);
  const int n = gradient_level(s);
  const int d = grid_.dim();
  for (int a = 0; a < d; ++a) out[a] = 0.0;
  for (int k = 0; k < st.count; ++k) {
    const auto g = gradient(n, st.nodes[k]);
    for (int a = 0; a < d; ++a) out[a] += st.weights[k] * g[a];
  }
  return st.clamped;
}

ValueField gradient(const ValueField& field) {
  ValueField out = field;
  out.compute_gradient();
  return out;
}

}  // namespace isaacslab
