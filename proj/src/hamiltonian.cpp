#include "isaacslab/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isaacslab/errors.hpp"

namespace isaacslab {

MatrixGameSolution solve_pure(std::span<const double> a, std::size_t n_rows, std::size_t n_cols) {
  MatrixGameSolution out;
  out.lower = -std::numeric_limits<double>::infinity();
  std::vector<double> col_max(n_cols, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double* row = a.data() + i * n_cols;
    double row_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_cols; ++j) {
      row_min = std::min(row_min, row[j]);
      col_max[j] = std::max(col_max[j], row[j]);
    }
    if (row_min > out.lower) {
      out.lower = row_min;
      out.row = i;
    }
  }
  out.upper = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n_cols; ++j) {
    if (col_max[j] < out.upper) {
      out.upper = col_max[j];
      out.col = j;
    }
  }
  return out;
}

SaddleCheck check_saddle(std::span<const double> a, std::size_t n_rows, std::size_t n_cols,
                         std::size_t row, std::size_t col, double tol) {
  const double centre = a[row * n_cols + col];
  double worst = 0.0;
  for (std::size_t i = 0; i < n_rows; ++i) worst = std::max(worst, a[i * n_cols + col] - centre);
  for (std::size_t j = 0; j < n_cols; ++j) worst = std::max(worst, centre - a[row * n_cols + j]);
  return {worst <= tol, worst};
}

// ---------------------------------------------------------------------------

void ControlTable::build(const GameSpec& spec, double s, std::span<const double> x) {
  n1_ = spec.U1.size();
  n2_ = spec.U2.size();
  d_ = static_cast<std::size_t>(spec.d);
  indexed_ = false;
  breaks_.clear();
  pieces_.clear();
  f_.resize(n1_ * n2_ * d_);
  l_.resize(n1_ * n2_);
  for (std::size_t i = 0; i < n1_; ++i) {
    const auto u1 = spec.U1.point(i);
    for (std::size_t j = 0; j < n2_; ++j) {
      const auto u2 = spec.U2.point(j);
      spec.eval_f1(s, x, u1, u2, {f_.data() + (i * n2_ + j) * d_, d_});
      l_[i * n2_ + j] = spec.eval_l(s, x, u1, u2);
    }
  }
}

double ControlTable::h0_cv(std::size_t i, std::size_t j, std::span<const double> p) const {
  const double* f = f_.data() + (i * n2_ + j) * d_;
  double acc = 0.0;
  for (std::size_t r = 0; r < d_; ++r) acc += f[r] * p[r];
  return acc + l_[i * n2_ + j];
}

namespace {

// Minimum of v[0..n) with four independent accumulators; the serial
// dependency chain otherwise dominates the Hamiltonian sweep.
double row_minimum(const double* v, std::size_t n) {
  double m0 = v[0], m1 = v[0], m2 = v[0], m3 = v[0];
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    m0 = v[j] < m0 ? v[j] : m0;
    m1 = v[j + 1] < m1 ? v[j + 1] : m1;
    m2 = v[j + 2] < m2 ? v[j + 2] : m2;
    m3 = v[j + 3] < m3 ? v[j + 3] : m3;
  }
  for (; j < n; ++j) m0 = v[j] < m0 ? v[j] : m0;
  m0 = m1 < m0 ? m1 : m0;
  m2 = m3 < m2 ? m3 : m2;
  return m2 < m0 ? m2 : m0;
}

}  // namespace

MatrixGameSolution ControlTable::sweep(std::span<const double> p) const {
  // Same sweep as solve_pure without materialising the matrix.
  thread_local std::vector<double> col_max_buf, row_buf;
  col_max_buf.resize(n2_);
  row_buf.resize(n2_);
  double* __restrict col_max = col_max_buf.data();
  double* __restrict row = row_buf.data();
  MatrixGameSolution out;
  out.lower = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n1_; ++i) {
    const double* __restrict lrow = l_.data() + i * n2_;
    const double* __restrict frow = f_.data() + i * n2_ * d_;
    if (d_ == 1) {
      const double p0 = p[0];
      for (std::size_t j = 0; j < n2_; ++j) row[j] = frow[j] * p0 + lrow[j];
    } else {
      for (std::size_t j = 0; j < n2_; ++j) {
        // Same summation order as h0_cv, so entries agree bit for bit.
        double v = 0.0;
        for (std::size_t r = 0; r < d_; ++r) v += frow[j * d_ + r] * p[r];
        row[j] = v + lrow[j];
      }
    }
    if (i == 0) {
      for (std::size_t j = 0; j < n2_; ++j) col_max[j] = row[j];
    } else {
      for (std::size_t j = 0; j < n2_; ++j) col_max[j] = row[j] > col_max[j] ? row[j] : col_max[j];
    }
    const double row_min = row_minimum(row, n2_);
    if (row_min > out.lower) {
      out.lower = row_min;
      out.row = i;
    }
  }
  out.upper = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n2_; ++j) {
    if (col_max[j] < out.upper) {
      out.upper = col_max[j];
      out.col = j;
    }
  }
  return out;
}

MatrixGameSolution ControlTable::solve(std::span<const double> p) const {
  if (indexed_ && std::isfinite(p[0])) {
    const double q = p[0];
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), q);
    const auto near = [q](double c) { return std::fabs(q - c) <= 1e-9 * (1.0 + std::fabs(c)); };
    const bool guarded = (it != breaks_.begin() && near(*(it - 1))) || (it != breaks_.end() && near(*it));
    if (!guarded) {
      const Piece& pc = pieces_[static_cast<std::size_t>(it - breaks_.begin())];
      MatrixGameSolution out;
      out.row = pc.row;
      out.col = pc.col;
      out.lower = f_[pc.row * n2_ + pc.row_arg] * q + l_[pc.row * n2_ + pc.row_arg];
      out.upper = f_[pc.col_arg * n2_ + pc.col] * q + l_[pc.col_arg * n2_ + pc.col];
      return out;
    }
  }
  return sweep(p);
}

ControlTable::Piece ControlTable::piece_at(double q) const {
  const double p[1] = {q};
  const MatrixGameSolution sol = sweep(p);
  Piece pc{static_cast<std::uint32_t>(sol.row), 0, static_cast<std::uint32_t>(sol.col), 0};
  for (std::size_t j = 0; j < n2_; ++j) {
    if (f_[sol.row * n2_ + j] * q + l_[sol.row * n2_ + j] == sol.lower) {
      pc.row_arg = static_cast<std::uint32_t>(j);
      break;
    }
  }
  for (std::size_t i = 0; i < n1_; ++i) {
    if (f_[i * n2_ + sol.col] * q + l_[i * n2_ + sol.col] == sol.upper) {
      pc.col_arg = static_cast<std::uint32_t>(i);
      break;
    }
  }
  return pc;
}

namespace {

// Crossing point of the lines a0 + a1 q and b0 + b1 q, if they are not parallel.
void add_crossing(double fa, double la, double fb, double lb, std::vector<double>& out) {
  if (fa == fb) return;
  const double c = -(la - lb) / (fa - fb);
  if (std::isfinite(c)) out.push_back(c);
}

double midpoint(const std::vector<double>& breaks, std::size_t k) {
  if (breaks.empty()) return 0.0;
  if (k == 0) return breaks.front() - 1.0 - std::fabs(breaks.front());
  if (k == breaks.size()) return breaks.back() + 1.0 + std::fabs(breaks.back());
  return 0.5 * (breaks[k - 1] + breaks[k]);
}

void sort_unique(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

void ControlTable::build_scalar_index() {
  if (d_ != 1) throw SolverError("scalar index needs d = 1");
  indexed_ = false;
  // Level 1: orderings inside each row and each column.
  std::vector<double> coarse;
  for (std::size_t i = 0; i < n1_; ++i) {
    for (std::size_t j = 0; j < n2_; ++j) {
      const std::size_t a = i * n2_ + j;
      for (std::size_t j2 = j + 1; j2 < n2_; ++j2) add_crossing(f_[a], l_[a], f_[i * n2_ + j2], l_[i * n2_ + j2], coarse);
      for (std::size_t i2 = i + 1; i2 < n1_; ++i2) add_crossing(f_[a], l_[a], f_[i2 * n2_ + j], l_[i2 * n2_ + j], coarse);
    }
  }
  sort_unique(coarse);
  // Level 2: inside each coarse interval the row minima and column maxima are
  // fixed lines; add their mutual crossings.
  std::vector<double> breaks = coarse;
  std::vector<std::size_t> row_arg(n1_), col_arg(n2_);
  std::vector<double> local;
  for (std::size_t k = 0; k <= coarse.size(); ++k) {
    const double q = midpoint(coarse, k);
    for (std::size_t i = 0; i < n1_; ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < n2_; ++j) {
        if (f_[i * n2_ + j] * q + l_[i * n2_ + j] < f_[i * n2_ + best] * q + l_[i * n2_ + best]) best = j;
      }
      row_arg[i] = best;
    }
    for (std::size_t j = 0; j < n2_; ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n1_; ++i) {
        if (f_[i * n2_ + j] * q + l_[i * n2_ + j] > f_[best * n2_ + j] * q + l_[best * n2_ + j]) best = i;
      }
      col_arg[j] = best;
    }
    local.clear();
    for (std::size_t i = 0; i < n1_; ++i) {
      const std::size_t a = i * n2_ + row_arg[i];
      for (std::size_t i2 = i + 1; i2 < n1_; ++i2) {
        const std::size_t b = i2 * n2_ + row_arg[i2];
        add_crossing(f_[a], l_[a], f_[b], l_[b], local);
      }
    }
    for (std::size_t j = 0; j < n2_; ++j) {
      const std::size_t a = col_arg[j] * n2_ + j;
      for (std::size_t j2 = j + 1; j2 < n2_; ++j2) {
        const std::size_t b = col_arg[j2] * n2_ + j2;
        add_crossing(f_[a], l_[a], f_[b], l_[b], local);
      }
    }
    const double lo = k == 0 ? -std::numeric_limits<double>::infinity() : coarse[k - 1];
    const double hi = k == coarse.size() ? std::numeric_limits<double>::infinity() : coarse[k];
    for (double c : local) {
      if (c > lo && c < hi) breaks.push_back(c);
    }
  }
  sort_unique(breaks);
  breaks_ = std::move(breaks);
  pieces_.resize(breaks_.size() + 1);
  for (std::size_t k = 0; k <= breaks_.size(); ++k) pieces_[k] = piece_at(midpoint(breaks_, k));
  indexed_ = true;
}

void ControlTable::payoff_matrix(std::span<const double> p, std::vector<double>& out) const {
  out.resize(n1_ * n2_);
  for (std::size_t i = 0; i < n1_; ++i) {
    for (std::size_t j = 0; j < n2_; ++j) out[i * n2_ + j] = h0_cv(i, j, p);
  }
}

HamiltonianWorkspace::HamiltonianWorkspace(const GameSpec& spec) : spec_(&spec) {}

const ControlTable& HamiltonianWorkspace::table(double s, std::span<const double> x) {
  const Dependence& dep = spec_->control_terms();
  bool stale = !built_;
  if (!stale && dep.time && s != cached_s_) stale = true;
  if (!stale && dep.state && !std::equal(x.begin(), x.end(), cached_x_.begin(), cached_x_.end())) {
    stale = true;
  }
  if (stale) {
    table_.build(*spec_, s, x);
    built_ = true;
    cached_s_ = s;
    cached_x_.assign(x.begin(), x.end());
    if (!dep.time && !dep.state && spec_->d == 1 && table_.rows() * table_.cols() <= 4096) {
      table_.build_scalar_index();
    }
  }
  return table_;
}

// ---------------------------------------------------------------------------

double h0_cv(const GameSpec& spec, double s, std::span<const double> x, std::span<const double> p,
             std::span<const double> u1, std::span<const double> u2) {
  std::vector<double> f(static_cast<std::size_t>(spec.d));
  spec.eval_f1(s, x, u1, u2, f);
  double acc = 0.0;
  for (std::size_t r = 0; r < f.size(); ++r) acc += f[r] * p[r];
  return acc + spec.eval_l(s, x, u1, u2);
}

HamiltonianReport hamiltonian(const GameSpec& spec, double s, std::span<const double> x,
                              std::span<const double> p) {
  ControlTable table;
  table.build(spec, s, x);
  const auto sol = table.solve(p);
  HamiltonianReport rep;
  rep.s = s;
  rep.x.assign(x.begin(), x.end());
  rep.p.assign(p.begin(), p.end());
  rep.lower = sol.lower;
  rep.upper = sol.upper;
  rep.gap = sol.gap();
  rep.argmax_u1 = sol.row;
  rep.argmin_u2 = sol.col;
  return rep;
}

HamiltonianValue h_lower(const GameSpec& spec, double s, std::span<const double> x,
                         std::span<const double> p) {
  const auto rep = hamiltonian(spec, s, x, p);
  const auto u = spec.U1.point(rep.argmax_u1);
  return {rep.lower, rep.argmax_u1, {u.begin(), u.end()}};
}

HamiltonianValue h_upper(const GameSpec& spec, double s, std::span<const double> x,
                         std::span<const double> p) {
  const auto rep = hamiltonian(spec, s, x, p);
  const auto u = spec.U2.point(rep.argmin_u2);
  return {rep.upper, rep.argmin_u2, {u.begin(), u.end()}};
}

SaddleSelection select_saddle(const GameSpec& spec, double s, std::span<const double> x,
                              std::span<const double> p) {
  const auto rep = hamiltonian(spec, s, x, p);
  SaddleSelection out;
  out.index1 = rep.argmax_u1;
  out.index2 = rep.argmin_u2;
  const auto a = spec.U1.point(rep.argmax_u1);
  const auto b = spec.U2.point(rep.argmin_u2);
  out.u1.assign(a.begin(), a.end());
  out.u2.assign(b.begin(), b.end());
  return out;
}

SaddleCheck check_saddle_inequalities(const GameSpec& spec, double s, std::span<const double> x,
                                      std::span<const double> p, std::span<const double> u1_star,
                                      std::span<const double> u2_star, double tol) {
  const double centre = h0_cv(spec, s, x, p, u1_star, u2_star);
  double worst = 0.0;
  for (std::size_t i = 0; i < spec.U1.size(); ++i) {
    worst = std::max(worst, h0_cv(spec, s, x, p, spec.U1.point(i), u2_star) - centre);
  }
  for (std::size_t j = 0; j < spec.U2.size(); ++j) {
    worst = std::max(worst, centre - h0_cv(spec, s, x, p, u1_star, spec.U2.point(j)));
  }
  return {worst <= tol, worst};
}

double isaacs_gap(const GameSpec& spec, std::span<const CostatePoint> cloud) {
  HamiltonianWorkspace ws(spec);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& pt : cloud) {
    worst = std::max(worst, ws.table(pt.s, pt.x).solve(pt.p).gap());
  }
  return worst;
}

}  // namespace isaacslab
