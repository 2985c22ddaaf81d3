#pragma once

#include "enlarge/linalg.hpp"
#include "enlarge/process.hpp"

#include <optional>
#include <string>
#include <vector>

namespace enlarge {

// E[X | partition t] for per-atom values X.
template <typename T>
std::vector<T> condexp(const FiniteFilteredSpace<T>& space, const std::vector<T>& per_atom, int t) {
  if (static_cast<int>(per_atom.size()) != space.num_atoms())
    throw Error(ErrorCode::kDimensionMismatch, "condexp: value count differs from atom count");
  if (t < 0 || t > space.horizon()) throw Error(ErrorCode::kInvalidSpace, "condexp: t out of range");
  std::vector<T> out(space.num_cells(t), T(0));
  for (int a = 0; a < space.num_atoms(); ++a) out[space.cell_of(t, a)] += space.atom_prob(a) * per_atom[a];
  for (int c = 0; c < space.num_cells(t); ++c) out[c] /= space.cell_prob(t, c);
  return out;
}

// E[X_t - X_{t-1} | partition t-1] for each cell of t-1 and component h.
template <typename T>
PredictableProcess<T> conditional_drift(const AdaptedProcess<T>& x) {
  const auto& sp = x.space();
  PredictableProcess<T> out(sp, x.dim());
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c)
      for (int h = 0; h < x.dim(); ++h) {
        T s = T(0);
        for (int k : sp->children(t - 1, c)) s += sp->transition(t - 1, k) * x.increment(t, k, h);
        out.at(t, c, h) = s;
      }
  return out;
}

template <typename T>
struct DoobParts {
  AdaptedProcess<T> martingale;  // M, M_0 = 0
  PredictableProcess<T> drift;   // A (cumulative), A_0 = 0
};

template <typename T>
DoobParts<T> doob_decompose(const AdaptedProcess<T>& x) {
  const auto& sp = x.space();
  PredictableProcess<T> drift = cumulate(conditional_drift(x));
  AdaptedProcess<T> m(sp, x.dim());
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c)
      for (int h = 0; h < x.dim(); ++h) {
        const int root = sp->cell_of(0, sp->atoms_in(t, c).front());
        m.at(t, c, h) = x.at(t, c, h) - x.at(0, root, h) - drift.at_cell_of(t, c, h);
      }
  return {std::move(m), std::move(drift)};
}

// Predictable dual projection of the increments of A (A_0 ignored), cumulative.
template <typename T>
PredictableProcess<T> compensator(const AdaptedProcess<T>& a) {
  return cumulate(conditional_drift(a));
}

// [X, Y]_t = sum_{s<=t} dX_s dY_s^T, flattened row-major (dim = dx * dy).
template <typename T>
AdaptedProcess<T> bracket(const AdaptedProcess<T>& x, const AdaptedProcess<T>& y) {
  if (x.space() != y.space()) throw Error(ErrorCode::kDimensionMismatch, "bracket: different spaces");
  const auto& sp = x.space();
  const int dx = x.dim(), dy = y.dim();
  AdaptedProcess<T> out(sp, dx * dy);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) {
      const int up = sp->parent(t, c);
      for (int i = 0; i < dx; ++i) {
        const T xi = x.increment(t, c, i);
        for (int j = 0; j < dy; ++j) out.at(t, c, i * dy + j) = out.at(t - 1, up, i * dy + j) + xi * y.increment(t, c, j);
      }
    }
  return out;
}

template <typename T>
PredictableProcess<T> pred_bracket(const AdaptedProcess<T>& x, const AdaptedProcess<T>& y) {
  return compensator(bracket(x, y));
}

// Per-step increments of <X, Y>: E[dX_t dY_t^T | F_{t-1}].
template <typename T>
PredictableProcess<T> pred_bracket_steps(const AdaptedProcess<T>& x, const AdaptedProcess<T>& y) {
  const auto& sp = x.space();
  const int dx = x.dim(), dy = y.dim();
  PredictableProcess<T> out(sp, dx * dy);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c)
      for (int k : sp->children(t - 1, c)) {
        const T p = sp->transition(t - 1, k);
        for (int i = 0; i < dx; ++i) {
          const T xi = p * x.increment(t, k, i);
          for (int j = 0; j < dy; ++j) out.at(t, c, i * dy + j) += xi * y.increment(t, k, j);
        }
      }
  return out;
}

// Reads an integrand given on partition t at time t and checks that it is in
// fact measurable w.r.t. partition t-1.
template <typename T>
PredictableProcess<T> to_predictable(const AdaptedProcess<T>& h, double tol = ScalarTraits<T>::kDefaultTol) {
  const auto& sp = h.space();
  PredictableProcess<T> out(sp, h.dim());
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const auto& kids = sp->children(t - 1, c);
      for (int d = 0; d < h.dim(); ++d) {
        const T v = h.at(t, kids.front(), d);
        for (int k : kids)
          if (!ScalarTraits<T>::is_zero(T(h.at(t, k, d) - v), tol))
            throw Error(ErrorCode::kNotPredictable,
                        "integrand varies inside a cell of t-1 at t=" + std::to_string(t));
        out.at(t, c, d) = v;
      }
    }
  return out;
}

// (H . X)_t = sum_{s<=t} H_s^T dX_s.
template <typename T>
AdaptedProcess<T> stoch_integral(const PredictableProcess<T>& h, const AdaptedProcess<T>& x) {
  if (h.dim() != x.dim()) throw Error(ErrorCode::kDimensionMismatch, "stoch_integral: dimension mismatch");
  const auto& sp = x.space();
  AdaptedProcess<T> out(sp, 1);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) {
      const int up = sp->parent(t, c);
      T s = out.at(t - 1, up);
      for (int d = 0; d < x.dim(); ++d) s += h.at(t, up, d) * x.increment(t, c, d);
      out.at(t, c) = s;
    }
  return out;
}

template <typename T>
AdaptedProcess<T> stoch_integral(const AdaptedProcess<T>& h, const AdaptedProcess<T>& x) {
  return stoch_integral(to_predictable(h), x);
}

// Scalar predictable H times each component of a predictable (cumulative) process's steps.
template <typename T>
PredictableProcess<T> integrate_predictable(const PredictableProcess<T>& h, const PredictableProcess<T>& a) {
  return cumulate([&] {
    PredictableProcess<T> steps = increments(a);
    const auto& sp = a.space();
    for (int t = 1; t <= sp->horizon(); ++t)
      for (int c = 0; c < sp->num_cells(t - 1); ++c)
        for (int d = 0; d < a.dim(); ++d) steps.at(t, c, d) *= h.at(t, c);
    return steps;
  }());
}

template <typename T>
struct StochasticExponential {
  AdaptedProcess<T> value;
  // First t at which 1 + dX_t <= 0 on each atom; -1 if never.
  std::vector<int> first_nonpositive;
  bool any_nonpositive() const {
    for (int t : first_nonpositive)
      if (t >= 0) return true;
    return false;
  }
};

template <typename T>
StochasticExponential<T> stoch_exponential(const AdaptedProcess<T>& x) {
  if (x.dim() != 1) throw Error(ErrorCode::kDimensionMismatch, "stoch_exponential: scalar process required");
  const auto& sp = x.space();
  StochasticExponential<T> out{AdaptedProcess<T>(sp, 1), std::vector<int>(sp->num_atoms(), -1)};
  for (int c = 0; c < sp->num_cells(0); ++c) out.value.at(0, c) = T(1);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) {
      const T factor = T(1) + x.increment(t, c);
      out.value.at(t, c) = out.value.at(t - 1, sp->parent(t, c)) * factor;
      if (!(factor > 0))
        for (int a : sp->atoms_in(t, c))
          if (out.first_nonpositive[a] < 0) out.first_nonpositive[a] = t;
    }
  return out;
}

template <typename T>
struct MartingaleReport {
  double max_abs_drift = 0.0;
  int worst_t = -1;
  int worst_cell = -1;
  int worst_component = -1;
  bool pass = true;
};

template <typename T>
MartingaleReport<T> martingale_check(const AdaptedProcess<T>& x, double tol) {
  MartingaleReport<T> rep;
  const PredictableProcess<T> d = conditional_drift(x);
  const auto& sp = x.space();
  T worst = T(0);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c)
      for (int h = 0; h < x.dim(); ++h) {
        const T v = abs_value(d.at(t, c, h));
        if (v > worst) {
          worst = v;
          rep.worst_t = t;
          rep.worst_cell = c;
          rep.worst_component = h;
        }
      }
  rep.max_abs_drift = to_double(worst);
  rep.pass = ScalarTraits<T>::kExact && tol == 0.0 ? worst == 0 : rep.max_abs_drift <= tol;
  return rep;
}

template <typename T>
struct JumpConstraint {
  int n = 0;
  std::vector<PredictableProcess<T>> selectors;  // alpha_1..alpha_n
};

// Distinct child jump vectors per (t, parent cell). Cells with fewer than n
// distinct jumps pad the selector list with a vector that is never attained.
template <typename T>
JumpConstraint<T> jump_constraint(const AdaptedProcess<T>& w, double tol = ScalarTraits<T>::kDefaultTol) {
  const auto& sp = w.space();
  const int d = w.dim();
  std::vector<std::vector<std::vector<std::vector<T>>>> support(sp->horizon() + 1);
  JumpConstraint<T> out;
  for (int t = 1; t <= sp->horizon(); ++t) {
    support[t].resize(sp->num_cells(t - 1));
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      auto& set = support[t][c];
      for (int k : sp->children(t - 1, c)) {
        std::vector<T> jump(d);
        for (int h = 0; h < d; ++h) jump[h] = w.increment(t, k, h);
        bool seen = false;
        for (const auto& s : set) {
          bool same = true;
          for (int h = 0; h < d && same; ++h) same = ScalarTraits<T>::is_zero(T(s[h] - jump[h]), tol);
          if (same) seen = true;
        }
        if (!seen) set.push_back(std::move(jump));
      }
      out.n = std::max(out.n, static_cast<int>(set.size()));
    }
  }
  for (int i = 0; i < out.n; ++i) out.selectors.emplace_back(sp, d);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const auto& set = support[t][c];
      T pad = T(1);
      for (const auto& s : set)
        for (const T& v : s) pad += abs_value(v);
      for (int i = 0; i < out.n; ++i)
        for (int h = 0; h < d; ++h)
          out.selectors[i].at(t, c, h) = i < static_cast<int>(set.size()) ? set[i][h] : (h == 0 ? pad : T(0));
    }
  return out;
}

// Gram-Schmidt of the jump vectors of W against E[dW_i dW_j | F_{t-1}], cell by cell.
template <typename T>
AdaptedProcess<T> orthogonalize(const AdaptedProcess<T>& w, double tol = ScalarTraits<T>::kDefaultTol) {
  if (!martingale_check(w, tol).pass) throw Error(ErrorCode::kNotMartingale, "orthogonalize: input has drift");
  const auto& sp = w.space();
  const int d = w.dim();
  AdaptedProcess<T> out(sp, d);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const auto& kids = sp->children(t - 1, c);
      const int m = static_cast<int>(kids.size());
      std::vector<T> p(m);
      for (int j = 0; j < m; ++j) p[j] = sp->transition(t - 1, kids[j]);
      auto inner = [&](const std::vector<T>& u, const std::vector<T>& v) {
        T s = T(0);
        for (int j = 0; j < m; ++j) s += p[j] * u[j] * v[j];
        return s;
      };
      std::vector<std::vector<T>> basis;
      T scale = T(0);
      for (int h = 0; h < d; ++h)
        for (int j = 0; j < m; ++j) scale += p[j] * w.increment(t, kids[j], h) * w.increment(t, kids[j], h);
      const double cut = tol * (1.0 + to_double(scale));
      for (int h = 0; h < d; ++h) {
        std::vector<T> e(m);
        for (int j = 0; j < m; ++j) e[j] = w.increment(t, kids[j], h);
        for (const auto& b : basis) {
          const T nb = inner(b, b);
          if (nb == 0) continue;
          const T coef = inner(e, b) / nb;
          for (int j = 0; j < m; ++j) e[j] -= coef * b[j];
        }
        if (ScalarTraits<T>::is_zero(inner(e, e), cut))
          for (auto& v : e) v = T(0);
        for (int j = 0; j < m; ++j) out.at(t, kids[j], h) = out.at(t - 1, c, h) + e[j];
        basis.push_back(std::move(e));
      }
    }
  return out;
}

template <typename T>
struct Representation {
  PredictableProcess<T> integrand;
  double residual = 0.0;
};

// H with X = X_0 + H . W, minimum-norm per cell.
template <typename T>
Representation<T> represent(const AdaptedProcess<T>& x, const AdaptedProcess<T>& w,
                            double tol = ScalarTraits<T>::kDefaultTol) {
  if (x.dim() != 1) throw Error(ErrorCode::kDimensionMismatch, "represent: scalar X required");
  const auto& sp = x.space();
  const int d = w.dim();
  Representation<T> out{PredictableProcess<T>(sp, d), 0.0};
  T worst = T(0);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const auto& kids = sp->children(t - 1, c);
      Matrix<T> a(static_cast<int>(kids.size()), d);
      std::vector<T> b(kids.size());
      for (std::size_t j = 0; j < kids.size(); ++j) {
        for (int h = 0; h < d; ++h) a(static_cast<int>(j), h) = w.increment(t, kids[j], h);
        b[j] = x.increment(t, kids[j]);
      }
      auto ls = min_norm_least_squares(a, b);
      for (int h = 0; h < d; ++h) out.integrand.at(t, c, h) = ls.x[h];
      if (ls.residual > worst) worst = ls.residual;
    }
  out.residual = to_double(worst);
  const bool fail = ScalarTraits<T>::kExact && tol == 0.0 ? worst != 0 : out.residual > tol;
  if (fail)
    throw Error(ErrorCode::kNoRepresentation, "residual " + std::to_string(out.residual) + " exceeds tolerance");
  return out;
}

// Driver with the representation property on any tree: component h jumps by
// 1{child index = h} - P(child h | cell), for h < (children - 1).
template <typename T>
AdaptedProcess<T> indicator_driver(const SpacePtr<T>& sp) {
  const int d = std::max(1, sp->max_branching() - 1);
  AdaptedProcess<T> w(sp, d);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const auto& kids = sp->children(t - 1, c);
      const int m = static_cast<int>(kids.size());
      for (int j = 0; j < m; ++j)
        for (int h = 0; h < d; ++h) {
          T jump = T(0);
          if (h < m - 1) jump = (j == h ? T(1) : T(0)) - sp->transition(t - 1, kids[h]);
          w.at(t, kids[j], h) = w.at(t - 1, c, h) + jump;
        }
    }
  return w;
}

// One martingale per (t, cell of t-1, child index < last): all F-martingales
// null at 0 are linear combinations of these.
template <typename T>
std::vector<AdaptedProcess<T>> elementary_martingales(const SpacePtr<T>& sp) {
  std::vector<AdaptedProcess<T>> out;
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const auto& kids = sp->children(t - 1, c);
      for (std::size_t h = 0; h + 1 < kids.size(); ++h) {
        AdaptedProcess<T> x(sp, 1);
        const T ph = sp->transition(t - 1, kids[h]);
        for (std::size_t j = 0; j < kids.size(); ++j) x.at(t, kids[j]) = (j == h ? T(1) : T(0)) - ph;
        for (int s = t + 1; s <= sp->horizon(); ++s)
          for (int k = 0; k < sp->num_cells(s); ++k) x.at(s, k) = x.at(s - 1, sp->parent(s, k));
        out.push_back(std::move(x));
      }
    }
  return out;
}

}  // namespace enlarge
