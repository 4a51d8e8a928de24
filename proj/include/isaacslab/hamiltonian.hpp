#pragma once

// Current-value Hamiltonian H0_CV(s,x,p,u1,u2) = <f1(s,x,u1,u2), p> + l(s,x,u1,u2)
// and its lower/upper values over the discretised control sets:
//   H0-(s,x,p) = max_{u1} min_{u2} H0_CV,   H0+(s,x,p) = min_{u2} max_{u1} H0_CV.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "isaacslab/game_model.hpp"

namespace isaacslab {

/// Pure-strategy solution of a finite zero-sum matrix game a(i, j) where the
/// row player maximises. Ties resolve to the first index.
struct MatrixGameSolution {
  double lower = 0.0;   // max_i min_j a(i, j)
  double upper = 0.0;   // min_j max_i a(i, j)
  std::size_t row = 0;  // first row attaining `lower`
  std::size_t col = 0;  // first column attaining `upper`
  double gap() const { return upper - lower; }
};

/// `a` is row-major n_rows x n_cols.
MatrixGameSolution solve_pure(std::span<const double> a, std::size_t n_rows, std::size_t n_cols);

struct SaddleCheck {
  bool holds = false;
  double worst_violation = 0.0;  // >= 0; 0 when both inequalities hold exactly
};

/// a(i, col) <= a(row, col) <= a(row, j) for all i, j, up to `tol`.
SaddleCheck check_saddle(std::span<const double> a, std::size_t n_rows, std::size_t n_cols,
                         std::size_t row, std::size_t col, double tol = 1e-10);

/// f1 and l tabulated over U1 x U2 at a fixed (s, x).
class ControlTable {
 public:
  void build(const GameSpec& spec, double s, std::span<const double> x);

  std::size_t rows() const { return n1_; }
  std::size_t cols() const { return n2_; }
  std::span<const double> f1(std::size_t i, std::size_t j) const {
    return {f_.data() + (i * n2_ + j) * d_, d_};
  }
  double l(std::size_t i, std::size_t j) const { return l_[i * n2_ + j]; }
  double h0_cv(std::size_t i, std::size_t j, std::span<const double> p) const;

  MatrixGameSolution solve(std::span<const double> p) const;
  void payoff_matrix(std::span<const double> p, std::vector<double>& out) const;

  /// d = 1 only. Every entry is affine in the scalar costate, so the saddle
  /// selection is piecewise constant between the crossing points of entries
  /// sharing a row or column (and of the row minima / column maxima).
  /// Precomputes those pieces; solve() then uses a binary search and falls
  /// back to the full sweep within 1e-9 (relative) of a breakpoint.
  void build_scalar_index();
  bool has_scalar_index() const { return indexed_; }

 private:
  MatrixGameSolution sweep(std::span<const double> p) const;

  struct Piece {
    std::uint32_t row, row_arg;  // selected row and its minimising column
    std::uint32_t col, col_arg;  // selected column and its maximising row
  };
  Piece piece_at(double p) const;

  std::size_t n1_ = 0, n2_ = 0, d_ = 0;
  std::vector<double> f_;
  std::vector<double> l_;
  bool indexed_ = false;
  std::vector<double> breaks_;
  std::vector<Piece> pieces_;
};

/// Per-worker scratch. Rebuilds the control table only when (s, x) changes in
/// a way the coefficients can see. A table that depends on neither is
/// indexed once for fast scalar solves (d = 1, at most 4096 control pairs).
class HamiltonianWorkspace {
 public:
  explicit HamiltonianWorkspace(const GameSpec& spec);

  const ControlTable& table(double s, std::span<const double> x);
  const GameSpec& spec() const { return *spec_; }

 private:
  const GameSpec* spec_;
  ControlTable table_;
  bool built_ = false;
  double cached_s_ = 0.0;
  std::vector<double> cached_x_;
};

struct HamiltonianReport {
  double s = 0.0;
  std::vector<double> x;
  std::vector<double> p;
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
  std::size_t argmax_u1 = 0;  // index into U1
  std::size_t argmin_u2 = 0;  // index into U2
};

struct HamiltonianValue {
  double value = 0.0;
  std::size_t index = 0;
  std::vector<double> control;
};

struct SaddleSelection {
  std::size_t index1 = 0;
  std::size_t index2 = 0;
  std::vector<double> u1;
  std::vector<double> u2;
};

double h0_cv(const GameSpec& spec, double s, std::span<const double> x, std::span<const double> p,
             std::span<const double> u1, std::span<const double> u2);

HamiltonianReport hamiltonian(const GameSpec& spec, double s, std::span<const double> x,
                              std::span<const double> p);

/// max over U1 of min over U2, with the first maximising u1.
HamiltonianValue h_lower(const GameSpec& spec, double s, std::span<const double> x,
                         std::span<const double> p);
/// min over U2 of max over U1, with the first minimising u2.
HamiltonianValue h_upper(const GameSpec& spec, double s, std::span<const double> x,
                         std::span<const double> p);

/// u1* maximises min_{u2} H0_CV, u2* minimises max_{u1} H0_CV.
SaddleSelection select_saddle(const GameSpec& spec, double s, std::span<const double> x,
                              std::span<const double> p);

SaddleCheck check_saddle_inequalities(const GameSpec& spec, double s, std::span<const double> x,
                                      std::span<const double> p, std::span<const double> u1_star,
                                      std::span<const double> u2_star, double tol = 1e-10);

struct CostatePoint {
  double s = 0.0;
  std::vector<double> x;
  std::vector<double> p;
};

/// Largest H0+ - H0- over the cloud.
double isaacs_gap(const GameSpec& spec, std::span<const CostatePoint> cloud);

}  // namespace isaacslab
