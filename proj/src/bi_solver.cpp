#include "isaacslab/bi_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "isaacslab/hamiltonian.hpp"
#include "isaacslab/parallel.hpp"

namespace isaacslab {

namespace {

struct Derivatives {
  std::array<double, 2> p{};
  std::array<double, 2> second{};
  double cross = 0.0;
  // one-sided differences, used by the Lax-Friedrichs speed estimate
  std::array<double, 2> backward{};
  std::array<double, 2> forward{};
};

struct Coefficients {
  std::array<double, 2> b{};
  std::array<std::array<double, 2>, 2> a{};  // sigma sigma^T
};

// Values of one time level with linear ghost extrapolation.
class LevelReader {
 public:
  LevelReader(const Grid& grid, const double* v)
      : v_(v), nx_(grid.count(0)), ny_(grid.dim() == 2 ? grid.count(1) : 1) {}

  double at(int i, int j) const {
    if (j < 0) return 2.0 * at(i, 0) - at(i, 1);
    if (j >= ny_) return 2.0 * at(i, ny_ - 1) - at(i, ny_ - 2);
    if (i < 0) return 2.0 * raw(0, j) - raw(1, j);
    if (i >= nx_) return 2.0 * raw(nx_ - 1, j) - raw(nx_ - 2, j);
    return raw(i, j);
  }

 private:
  double raw(int i, int j) const {
    return v_[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx_) * static_cast<std::size_t>(j)];
  }
  const double* v_;
  int nx_, ny_;
};

Derivatives derivatives(const Grid& grid, const LevelReader& r, std::size_t node) {
  Derivatives out;
  const int i = grid.axis_index(node, 0);
  const int j = grid.dim() == 2 ? grid.axis_index(node, 1) : 0;
  const double c = r.at(i, j);
  {
    const double h = grid.h(0);
    const double e = r.at(i + 1, j), w = r.at(i - 1, j);
    out.p[0] = (e - w) / (2.0 * h);
    out.second[0] = (e - 2.0 * c + w) / (h * h);
    out.backward[0] = (c - w) / h;
    out.forward[0] = (e - c) / h;
  }
  if (grid.dim() == 2) {
    const double h = grid.h(1);
    const double n = r.at(i, j + 1), s = r.at(i, j - 1);
    out.p[1] = (n - s) / (2.0 * h);
    out.second[1] = (n - 2.0 * c + s) / (h * h);
    out.backward[1] = (c - s) / h;
    out.forward[1] = (n - c) / h;
    out.cross = (r.at(i + 1, j + 1) - r.at(i + 1, j - 1) - r.at(i - 1, j + 1) +
                 r.at(i - 1, j - 1)) /
                (4.0 * grid.h(0) * h);
  }
  return out;
}

Coefficients coefficients(const GameSpec& spec, double s, std::span<const double> x,
                          std::vector<double>& sigma_buf) {
  Coefficients c;
  const int d = spec.d;
  spec.eval_b(s, x, {c.b.data(), static_cast<std::size_t>(d)});
  sigma_buf.resize(static_cast<std::size_t>(d * spec.m));
  spec.eval_sigma(s, x, sigma_buf);
  for (int r = 0; r < d; ++r) {
    for (int q = 0; q < d; ++q) {
      double acc = 0.0;
      for (int k = 0; k < spec.m; ++k) acc += sigma_buf[r * spec.m + k] * sigma_buf[q * spec.m + k];
      c.a[r][q] = acc;
    }
  }
  return c;
}

double diffusion_term(const Coefficients& c, const Derivatives& dv, int d) {
  double acc = c.a[0][0] * dv.second[0];
  if (d == 2) acc += 2.0 * c.a[0][1] * dv.cross + c.a[1][1] * dv.second[1];
  return 0.5 * acc;
}

double pick(const MatrixGameSolution& sol, Equation eq) {
  return eq == Equation::LowerIsaacs ? sol.lower : sol.upper;
}

Equation equation_for(const GameSpec& spec, Side side) {
  if (spec.kind == ModelKind::Control) return Equation::ControlHjb;
  return side == Side::Upper ? Equation::UpperIsaacs : Equation::LowerIsaacs;
}

// Half the largest |b_a + f1_a(u*)| over the central and one-sided gradients.
double lax_friedrichs_theta(const ControlTable& table, const Coefficients& c,
                            const Derivatives& dv, int axis, int d) {
  std::array<double, 2> q = dv.p;
  double speed = 0.0;
  const auto probe = [&](double component) {
    q[axis] = component;
    const auto sol = table.solve({q.data(), static_cast<std::size_t>(d)});
    speed = std::max(speed, std::fabs(c.b[axis] + table.f1(sol.row, sol.col)[axis]));
  };
  probe(dv.p[axis]);
  probe(dv.backward[axis]);
  probe(dv.forward[axis]);
  return 0.5 * speed;
}

void require_supported(const GameSpec& spec, const Grid& grid) {
  if (spec.d != grid.dim()) throw SolverError("grid dimension does not match the model");
  if (spec.d > 2) throw SolverError("grid solver supports d <= 2");
  if (std::fabs(grid.horizon() - spec.T) > 1e-12 * spec.T) {
    throw SolverError("grid horizon does not match the model horizon T");
  }
}

}  // namespace

StabilityInfo stability_info(const GameSpec& spec, const Grid& grid) {
  require_supported(spec, grid);
  const int d = spec.d;
  StabilityInfo info;
  info.speed_max.assign(static_cast<std::size_t>(d), 0.0);
  info.nondegeneracy = std::numeric_limits<double>::infinity();
  HamiltonianWorkspace ws(spec);
  std::vector<double> sigma_buf;
  std::array<double, 2> x{};
  const std::array<double, 3> times{0.0, 0.5 * spec.T, spec.T};
  for (double s : times) {
    for (std::size_t node = 0; node < grid.nodes(); ++node) {
      grid.coords(node, {x.data(), static_cast<std::size_t>(d)});
      const std::span<const double> xs{x.data(), static_cast<std::size_t>(d)};
      const Coefficients c = coefficients(spec, s, xs, sigma_buf);
      const ControlTable& table = ws.table(s, xs);
      for (int a = 0; a < d; ++a) {
        double fmax = 0.0;
        for (std::size_t i = 0; i < table.rows(); ++i) {
          for (std::size_t j = 0; j < table.cols(); ++j) {
            fmax = std::max(fmax, std::fabs(table.f1(i, j)[a]));
          }
        }
        info.speed_max[a] = std::max(info.speed_max[a], std::fabs(c.b[a]) + fmax);
        for (int q = 0; q < d; ++q) info.diffusion_max = std::max(info.diffusion_max, std::fabs(c.a[a][q]));
      }
      double lmin = c.a[0][0];
      if (d == 2) {
        const double tr = c.a[0][0] + c.a[1][1];
        const double det = c.a[0][0] * c.a[1][1] - c.a[0][1] * c.a[1][0];
        lmin = 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
      }
      info.nondegeneracy = std::min(info.nondegeneracy, std::max(lmin, 0.0));
    }
  }
  double denom = 0.0;
  for (int a = 0; a < d; ++a) {
    denom += info.diffusion_max / (grid.h(a) * grid.h(a)) + info.speed_max[a] / grid.h(a);
  }
  info.dt_max = denom > 0.0 ? 0.9 / denom : std::numeric_limits<double>::infinity();
  return info;
}

int min_time_levels(const GameSpec& spec, const Grid& grid) {
  const auto info = stability_info(spec, grid);
  if (!std::isfinite(info.dt_max)) return 2;
  return static_cast<int>(std::ceil(spec.T / info.dt_max - 1e-9)) + 1;
}

ValueField solve_bi(const GameSpec& spec, const Grid& grid, const SolverOptions& options) {
  require_supported(spec, grid);
  const StabilityInfo info = stability_info(spec, grid);
  if (grid.dt() > info.dt_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time step " << grid.dt() << " violates the stability bound " << info.dt_max
       << " (need at least " << min_time_levels(spec, grid) << " time levels)";
    throw StabilityError(os.str(), grid.dt(), info.dt_max);
  }
  const bool lax_friedrichs =
      options.lax_friedrichs.value_or(info.nondegeneracy < options.degeneracy_threshold);
  const Equation eq = equation_for(spec, options.side);
  const int d = spec.d;
  const auto ud = static_cast<std::size_t>(d);
  const std::size_t n_nodes = grid.nodes();
  const int nt = grid.time_levels();
  const double dt = grid.dt();

  ValueField field(grid, eq, std::vector<double>(n_nodes * static_cast<std::size_t>(nt)));
  field.set_scheme({info.dt_max, lax_friedrichs, info.nondegeneracy});

  std::vector<std::array<double, 2>> xs(n_nodes);
  for (std::size_t node = 0; node < n_nodes; ++node) grid.coords(node, {xs[node].data(), ud});

  auto terminal = field.level(nt - 1);
  for (std::size_t node = 0; node < n_nodes; ++node) {
    terminal[node] = spec.eval_g({xs[node].data(), ud});
  }

  const bool frozen_coeffs = !spec.uncontrolled_terms().time;
  std::vector<Coefficients> cached;
  if (frozen_coeffs) {
    std::vector<double> sigma_buf;
    cached.resize(n_nodes);
    for (std::size_t node = 0; node < n_nodes; ++node) {
      cached[node] = coefficients(spec, 0.0, {xs[node].data(), ud}, sigma_buf);
    }
  }

  const unsigned workers = options.workers == 0 ? default_workers() : options.workers;
  std::vector<HamiltonianWorkspace> spaces(workers, HamiltonianWorkspace(spec));

  for (int n = nt - 2; n >= 0; --n) {
    // Left-endpoint coefficients, matching the Ito convention of the simulator.
    const double s = grid.time(n);
    const double* next = field.level(n + 1).data();
    double* cur = field.level(n).data();
    const LevelReader reader(grid, next);
    parallel_for(n_nodes, workers, [&](std::size_t begin, std::size_t end, unsigned w) {
      HamiltonianWorkspace& ws = spaces[w];
      std::vector<double> sigma_buf;
      for (std::size_t node = begin; node < end; ++node) {
        const std::span<const double> x{xs[node].data(), ud};
        const Coefficients c = frozen_coeffs ? cached[node] : coefficients(spec, s, x, sigma_buf);
        const Derivatives dv = derivatives(grid, reader, node);
        const ControlTable& table = ws.table(s, x);
        const double hamiltonian = pick(table.solve({dv.p.data(), ud}), eq);
        double rate = diffusion_term(c, dv, d) + hamiltonian;
        for (int a = 0; a < d; ++a) rate += c.b[a] * dv.p[a];
        if (lax_friedrichs) {
          for (int a = 0; a < d; ++a) {
            rate += lax_friedrichs_theta(table, c, dv, a, d) * grid.h(a) * dv.second[a];
          }
        }
        cur[node] = next[node] + dt * rate;
      }
    });
    for (std::size_t node = 0; node < n_nodes; ++node) {
      if (!std::isfinite(cur[node])) {
        std::ostringstream os;
        os << "non-finite value at time level " << n << " (t = " << grid.time(n) << ", node "
           << node << ")";
        throw SolverError(os.str());
      }
    }
  }
  field.compute_gradient();
  return field;
}

ValueField solve_hjb_control(const GameSpec& spec, const Grid& grid, const SolverOptions& options) {
  if (spec.kind != ModelKind::Control) {
    throw SolverError("solve_hjb_control needs a single-controller model");
  }
  SolverOptions opts = options;
  opts.side = Side::Lower;
  return solve_bi(spec, grid, opts);
}

std::vector<NodeRef> interior_sample(const Grid& grid, double fraction, int level_stride) {
  std::vector<NodeRef> out;
  level_stride = std::max(level_stride, 1);
  std::vector<std::size_t> inner;
  for (std::size_t node = 0; node < grid.nodes(); ++node) {
    if (grid.in_inner_box(node, fraction)) inner.push_back(node);
  }
  for (int n = 0; n < grid.time_levels() - 1; n += level_stride) {
    for (std::size_t node : inner) out.push_back({n, node});
  }
  return out;
}

namespace {

double residual_with(const GameSpec& spec, const ValueField& field, NodeRef at,
                     HamiltonianWorkspace& ws, std::vector<double>& sigma_buf) {
  const Grid& grid = field.grid();
  if (at.level < 0 || at.level >= grid.time_levels() - 1) {
    throw SolverError("residual needs a level below the terminal one");
  }
  const auto ud = static_cast<std::size_t>(spec.d);
  std::array<double, 2> x{};
  grid.coords(at.node, {x.data(), ud});
  const std::span<const double> xs{x.data(), ud};
  const double s = grid.time(at.level);
  const LevelReader reader(grid, field.level(at.level).data());
  const Derivatives dv = derivatives(grid, reader, at.node);
  const Coefficients c = coefficients(spec, s, xs, sigma_buf);
  const double hamiltonian = pick(ws.table(s, xs).solve({dv.p.data(), ud}), field.equation());
  double r = (field.value(at.level + 1, at.node) - field.value(at.level, at.node)) / grid.dt();
  r += diffusion_term(c, dv, spec.d) + hamiltonian;
  for (int a = 0; a < spec.d; ++a) r += c.b[a] * dv.p[a];
  return r;
}

}  // namespace

double residual_at(const GameSpec& spec, const ValueField& field, NodeRef at) {
  require_supported(spec, field.grid());
  HamiltonianWorkspace ws(spec);
  std::vector<double> sigma_buf;
  return residual_with(spec, field, at, ws, sigma_buf);
}

ResidualStats residual(const GameSpec& spec, const ValueField& field,
                       std::span<const NodeRef> sample, unsigned workers) {
  require_supported(spec, field.grid());
  if (workers == 0) workers = default_workers();
  std::vector<double> values(sample.size());
  std::vector<HamiltonianWorkspace> spaces(workers, HamiltonianWorkspace(spec));
  parallel_for(sample.size(), workers, [&](std::size_t begin, std::size_t end, unsigned w) {
    std::vector<double> sigma_buf;
    for (std::size_t k = begin; k < end; ++k) {
      values[k] = residual_with(spec, field, sample[k], spaces[w], sigma_buf);
    }
  });
  ResidualStats stats;
  stats.count = sample.size();
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double a = std::fabs(values[k]);
    sum_sq += a * a;
    if (a > stats.max_abs) {
      stats.max_abs = a;
      stats.worst = sample[k];
    }
  }
  stats.rms = values.empty() ? 0.0 : std::sqrt(sum_sq / static_cast<double>(values.size()));
  return stats;
}

ResidualStats residual(const GameSpec& spec, const ValueField& field, unsigned workers) {
  const auto sample = interior_sample(field.grid());
  return residual(spec, field, sample, workers);
}

}  // namespace isaacslab
