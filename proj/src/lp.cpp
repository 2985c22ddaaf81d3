#include "enlarge/lp.hpp"

#include <cmath>
#include <limits>

namespace enlarge::lp {
namespace {

class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0) {}

  double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * (cols_ + 1) + j]; }
  double& rhs(int i) { return at(i, cols_); }
  double& obj(int j) { return at(rows_, j); }

  void pivot(int r, int c) {
    const double pv = at(r, c);
    for (int j = 0; j <= cols_; ++j) at(r, j) /= pv;
    for (int i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (int j = 0; j <= cols_; ++j) at(i, j) -= f * at(r, j);
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  int rows_, cols_;
  std::vector<double> a_;
};

// Runs simplex iterations on the objective row; columns >= `limit` never enter.
Status iterate(Tableau& tab, std::vector<int>& basis, int limit, double eps) {
  for (int guard = 0; guard < 100000; ++guard) {
    int enter = -1;
    for (int j = 0; j < limit; ++j)
      if (tab.obj(j) < -eps) {
        enter = j;
        break;
      }
    if (enter < 0) return Status::kOptimal;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < tab.rows(); ++i) {
      const double a = tab.at(i, enter);
      if (a <= eps) continue;
      const double ratio = tab.rhs(i) / a;
      if (ratio < best - eps || (std::fabs(ratio - best) <= eps && leave >= 0 && basis[i] < basis[leave])) {
        best = ratio;
        leave = i;
      }
    }
    if (leave < 0) return Status::kUnbounded;
    tab.pivot(leave, enter);
    basis[leave] = enter;
  }
  return Status::kUnbounded;
}

}  // namespace

Solution solve(const Problem& problem, double eps) {
  const int n = problem.num_vars;
  const int m = static_cast<int>(problem.constraints.size());
  int slack = 0, art = 0;
  for (const auto& c : problem.constraints) {
    const bool flip = c.rhs < 0;
    Sense s = c.sense;
    if (flip && s != Sense::kEq) s = (s == Sense::kLessEq) ? Sense::kGreaterEq : Sense::kLessEq;
    if (s != Sense::kEq) ++slack;
    if (s != Sense::kLessEq) ++art;
  }
  const int cols = n + slack + art;
  Tableau tab(m, cols);
  std::vector<int> basis(m, -1);
  int next_slack = n, next_art = n + slack;
  for (int i = 0; i < m; ++i) {
    const auto& c = problem.constraints[i];
    const double sign = c.rhs < 0 ? -1.0 : 1.0;
    Sense s = c.sense;
    if (sign < 0 && s != Sense::kEq) s = (s == Sense::kLessEq) ? Sense::kGreaterEq : Sense::kLessEq;
    for (int j = 0; j < n; ++j) tab.at(i, j) = sign * (j < static_cast<int>(c.coef.size()) ? c.coef[j] : 0.0);
    tab.rhs(i) = sign * c.rhs;
    if (s == Sense::kLessEq) {
      tab.at(i, next_slack) = 1.0;
      basis[i] = next_slack++;
    } else if (s == Sense::kGreaterEq) {
      tab.at(i, next_slack++) = -1.0;
      tab.at(i, next_art) = 1.0;
      basis[i] = next_art++;
    } else {
      tab.at(i, next_art) = 1.0;
      basis[i] = next_art++;
    }
  }

  Solution sol;
  const int first_art = n + slack;
  if (art > 0) {
    for (int j = first_art; j < cols; ++j) tab.obj(j) = 1.0;
    for (int i = 0; i < m; ++i)
      if (basis[i] >= first_art)
        for (int j = 0; j <= cols; ++j) tab.obj(j) -= tab.at(i, j);
    iterate(tab, basis, cols, eps);
    if (tab.obj(cols) < -1e-9) return sol;  // infeasible
    // Drive remaining artificials out of the basis.
    for (int i = 0; i < m; ++i) {
      if (basis[i] < first_art) continue;
      for (int j = 0; j < first_art; ++j)
        if (std::fabs(tab.at(i, j)) > 1e-9) {
          tab.pivot(i, j);
          basis[i] = j;
          break;
        }
    }
  }
  for (int j = 0; j <= cols; ++j) tab.obj(j) = 0.0;
  for (int j = 0; j < n; ++j) tab.obj(j) = -(j < static_cast<int>(problem.objective.size()) ? problem.objective[j] : 0.0);
  for (int i = 0; i < m; ++i) {
    const int b = basis[i];
    if (b >= n || b < 0) continue;
    const double cb = b < static_cast<int>(problem.objective.size()) ? problem.objective[b] : 0.0;
    if (cb == 0.0) continue;
    for (int j = 0; j <= cols; ++j) tab.obj(j) += cb * tab.at(i, j);
  }
  // Artificial rows left in the basis are redundant; their columns stay barred.
  sol.status = iterate(tab, basis, first_art, eps);
  if (sol.status != Status::kOptimal) return sol;
  sol.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) sol.x[basis[i]] = tab.rhs(i);
  sol.value = 0.0;
  for (int j = 0; j < n && j < static_cast<int>(problem.objective.size()); ++j) sol.value += problem.objective[j] * sol.x[j];
  return sol;
}

}  // namespace enlarge::lp
