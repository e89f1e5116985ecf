#pragma once

// Dense two-phase tableau simplex with Bland's anti-cycling rule.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "robstat/error.hpp"

namespace robstat {

inline constexpr double kLpTol = 1e-9;

/// maximize c.x  subject to  A x <= b,  lower <= x <= upper.
/// Bounds may be infinite; by default every variable is non-negative.
struct LinearProgram {
  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  std::vector<double> lower;  // empty => all zero
  std::vector<double> upper;  // empty => all +inf

  explicit LinearProgram(std::size_t n = 0)
      : num_vars(n),
        objective(n, 0.0),
        lower(n, 0.0),
        upper(n, std::numeric_limits<double>::infinity()) {}

  void add_constraint(std::vector<double> row, double b) {
    rows.push_back(std::move(row));
    rhs.push_back(b);
  }

  void set_free(std::size_t j) {
    lower.at(j) = -std::numeric_limits<double>::infinity();
    upper.at(j) = std::numeric_limits<double>::infinity();
  }
};

enum class LpStatus { optimal, unbounded, infeasible };

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

namespace detail {

// Tableau over non-negative variables: max c.y s.t. A y <= b, y >= 0.
class Tableau {
 public:
  Tableau(const std::vector<std::vector<double>>& a, const std::vector<double>& b, std::size_t n)
      : m_(a.size()), n_(n) {
    // Columns: [0, n) structural, [n, n+m) slack, [n+m, n+m+k) artificial.
    std::size_t k = 0;
    for (double v : b) k += v < 0.0 ? 1 : 0;
    cols_ = n_ + m_ + k;
    width_ = cols_ + 1;
    t_.assign(m_ * width_, 0.0);
    basis_.assign(m_, 0);
    std::size_t art = n_ + m_;
    for (std::size_t i = 0; i < m_; ++i) {
      const double sign = b[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = sign * a[i][j];
      at(i, n_ + i) = sign;
      rhs(i) = sign * b[i];
      if (sign < 0.0) {
        at(i, art) = 1.0;
        basis_[i] = art++;
      } else {
        basis_[i] = n_ + i;
      }
    }
    first_artificial_ = n_ + m_;
  }

  // Returns false if infeasible.
  bool phase_one() {
    if (first_artificial_ == cols_) return true;
    std::vector<double> cost(cols_, 0.0);
    for (std::size_t j = first_artificial_; j < cols_; ++j) cost[j] = -1.0;
    if (!optimize(cost, cols_)) fail(ErrorKind::numeric, "phase one unbounded");
    double infeas = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] >= first_artificial_) infeas += rhs(i);
    }
    if (infeas > kLpTol) return false;
    // Drive remaining (zero-level) artificials out of the basis.
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < first_artificial_) continue;
      for (std::size_t j = 0; j < first_artificial_; ++j) {
        if (std::abs(at(i, j)) > 1e-11) {
          pivot(i, j);
          break;
        }
      }
      // A row with no usable pivot is redundant; its artificial stays basic at 0
      // and is never allowed to enter again.
    }
    return true;
  }

  // Phase two on the structural objective. Returns false if unbounded.
  bool phase_two(const std::vector<double>& c) {
    std::vector<double> cost(cols_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) cost[j] = c[j];
    return optimize(cost, first_artificial_);
  }

  std::vector<double> solution() const {
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) y[basis_[i]] = rhs(i);
    }
    return y;
  }

 private:
  double& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
  double at(std::size_t i, std::size_t j) const { return t_[i * width_ + j]; }
  double& rhs(std::size_t i) { return t_[i * width_ + cols_]; }
  double rhs(std::size_t i) const { return t_[i * width_ + cols_]; }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j < width_; ++j) at(r, j) /= p;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
    basis_[r] = c;
  }

  // Bland's rule: lowest-index improving column, lowest-index leaving basic
  // variable among ratio ties. Columns >= allowed never enter.
  bool optimize(const std::vector<double>& cost, std::size_t allowed) {
    const std::size_t max_iter = 50 * (cols_ + m_) + 1000;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < allowed; ++j) {
        double reduced = cost[j];
        for (std::size_t i = 0; i < m_; ++i) reduced -= cost[basis_[i]] * at(i, j);
        if (reduced > kLpTol) {
          enter = j;
          break;
        }
      }
      if (enter == cols_) return true;
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = at(i, enter);
        if (a <= 1e-11) continue;
        const double ratio = rhs(i) / a;
        if (leave == m_ || ratio < best - 1e-12) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + 1e-12 && basis_[i] < basis_[leave]) {
          leave = i;
        }
      }
      if (leave == m_) return false;
      pivot(leave, enter);
    }
    fail(ErrorKind::numeric, "simplex iteration limit exceeded");
  }

  std::size_t m_, n_, cols_ = 0, width_ = 0, first_artificial_ = 0;
  std::vector<double> t_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

inline LpSolution solve_lp(const LinearProgram& lp) {
  const std::size_t n = lp.num_vars;
  require(lp.objective.size() == n, "LP objective length must equal the variable count");
  require(lp.rows.size() == lp.rhs.size(), "LP needs one right-hand side per constraint row");
  require(lp.lower.size() == n && lp.upper.size() == n, "LP bounds length must equal the variable count");
  for (const auto& row : lp.rows) require(row.size() == n, "LP constraint row length must equal the variable count");
  for (std::size_t j = 0; j < n; ++j) {
    require(!std::isnan(lp.lower[j]) && !std::isnan(lp.upper[j]) && lp.lower[j] <= lp.upper[j],
            "LP variable bounds are inconsistent");
  }

  // Substitute x_j = offset + sign * y (or y+ - y-) with y >= 0.
  struct Map {
    double offset = 0.0;
    double sign = 1.0;
    std::size_t col = 0;
    bool split = false;
  };
  std::vector<Map> map(n);
  std::size_t cols = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const bool lo = std::isfinite(lp.lower[j]);
    const bool hi = std::isfinite(lp.upper[j]);
    if (lo) {
      map[j] = {lp.lower[j], 1.0, cols++, false};
    } else if (hi) {
      map[j] = {lp.upper[j], -1.0, cols++, false};
    } else {
      map[j] = {0.0, 1.0, cols, true};
      cols += 2;
    }
  }
  auto expand = [&](const std::vector<double>& coeffs, double& shift) {
    std::vector<double> out(cols, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      shift += coeffs[j] * map[j].offset;
      out[map[j].col] += map[j].sign * coeffs[j];
      if (map[j].split) out[map[j].col + 1] -= coeffs[j];
    }
    return out;
  };

  std::vector<std::vector<double>> a;
  std::vector<double> b;
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    double shift = 0.0;
    a.push_back(expand(lp.rows[i], shift));
    b.push_back(lp.rhs[i] - shift);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isfinite(lp.lower[j]) && std::isfinite(lp.upper[j])) {
      std::vector<double> row(cols, 0.0);
      row[map[j].col] = 1.0;
      a.push_back(std::move(row));
      b.push_back(lp.upper[j] - lp.lower[j]);
    }
  }
  double obj_shift = 0.0;
  const std::vector<double> c = expand(lp.objective, obj_shift);

  detail::Tableau tab(a, b, cols);
  LpSolution sol;
  if (!tab.phase_one()) {
    sol.status = LpStatus::infeasible;
    return sol;
  }
  if (!tab.phase_two(c)) {
    sol.status = LpStatus::unbounded;
    return sol;
  }
  const std::vector<double> y = tab.solution();
  sol.status = LpStatus::optimal;
  sol.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double v = y[map[j].col];
    if (map[j].split) v -= y[map[j].col + 1];
    sol.x[j] = map[j].offset + map[j].sign * v;
  }
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.objective[j] * sol.x[j];
  return sol;
}

}  // namespace robstat
