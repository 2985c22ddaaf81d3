#pragma once

#include <vector>

namespace enlarge::lp {

enum class Sense { kLessEq, kEq, kGreaterEq };

struct Constraint {
  std::vector<double> coef;
  Sense sense = Sense::kLessEq;
  double rhs = 0.0;
};

// maximize objective . x  subject to constraints, x >= 0.
struct Problem {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<Constraint> constraints;
};

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Solution {
  Status status = Status::kInfeasible;
  std::vector<double> x;
  double value = 0.0;
};

// Dense two-phase simplex with Bland's rule. Intended for the small
// one-step problems of the deflator oracle.
Solution solve(const Problem& problem, double eps = 1e-12);

}  // namespace enlarge::lp
