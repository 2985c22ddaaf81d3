#pragma once

#include "enlarge/calculus.hpp"

#include <limits>
#include <map>
#include <utility>

namespace enlarge {

inline constexpr int kNever = std::numeric_limits<int>::max();

// Random time on a product extension of `base`: each base atom splits into
// `levels` sub-atoms with conditional weights; tau is fixed per sub-atom.
template <typename T>
struct RandomTimeExtension {
  SpacePtr<T> base;
  int levels = 1;
  std::vector<std::vector<T>> weights;  // [base atom][level]
  std::vector<std::vector<int>> tau;    // [base atom][level]; kNever for infinity

  void validate() const {
    const int n = base->num_atoms();
    if (static_cast<int>(weights.size()) != n || static_cast<int>(tau.size()) != n)
      throw Error(ErrorCode::kInvalidSpace, "extension: per-atom arrays do not match base");
    for (int a = 0; a < n; ++a) {
      if (static_cast<int>(weights[a].size()) != levels || static_cast<int>(tau[a].size()) != levels)
        throw Error(ErrorCode::kInvalidSpace, "extension: level count mismatch");
      T s = T(0);
      for (const T& w : weights[a]) {
        if (w < 0) throw Error(ErrorCode::kInvalidSpace, "extension: negative weight");
        s += w;
      }
      const T gap = abs_value(T(s - T(1)));
      if (ScalarTraits<T>::kExact ? gap != 0 : to_double(gap) > 1e-12)
        throw Error(ErrorCode::kInvalidSpace, "extension: weights do not sum to 1");
      for (int u : tau[a])
        if (u < 0 || (u > base->horizon() && u != kNever))
          throw Error(ErrorCode::kInvalidSpace, "extension: tau outside {0..T, inf}");
    }
  }
};

// Deterministic time on every base atom.
template <typename T>
RandomTimeExtension<T> deterministic_time(const SpacePtr<T>& base, int when) {
  RandomTimeExtension<T> ext{base, 1, {}, {}};
  ext.weights.assign(base->num_atoms(), {T(1)});
  ext.tau.assign(base->num_atoms(), {when});
  return ext;
}

// Progressive enlargement of `base` by tau, living on the positive-weight
// sub-atoms of the extension.
template <typename T>
struct EnlargedFiltration {
  SpacePtr<T> base;
  SpacePtr<T> space;
  std::vector<int> base_atom;                // extended atom -> base atom
  std::vector<int> tau;                      // extended atom -> tau
  std::vector<std::vector<int>> base_cell;   // [t][G cell] -> base cell at t

  int horizon() const { return space->horizon(); }

  // G cell at t is pre-default iff tau > t on it.
  bool alive(int t, int g_cell) const { return tau[space->atoms_in(t, g_cell).front()] > t; }

  AdaptedProcess<T> lift(const AdaptedProcess<T>& x) const {
    AdaptedProcess<T> out(space, x.dim());
    for (int t = 0; t <= horizon(); ++t)
      for (int c = 0; c < space->num_cells(t); ++c)
        for (int h = 0; h < x.dim(); ++h) out.at(t, c, h) = x.at(t, base_cell[t][c], h);
    return out;
  }

  PredictableProcess<T> lift(const PredictableProcess<T>& x) const {
    PredictableProcess<T> out(space, x.dim());
    for (int t = 1; t <= horizon(); ++t)
      for (int c = 0; c < space->num_cells(t - 1); ++c)
        for (int h = 0; h < x.dim(); ++h) out.at(t, c, h) = x.at(t, base_cell[t - 1][c], h);
    return out;
  }

  std::vector<T> lift_atoms(const std::vector<T>& per_base_atom) const {
    std::vector<T> out(base_atom.size());
    for (std::size_t i = 0; i < base_atom.size(); ++i) out[i] = per_base_atom[base_atom[i]];
    return out;
  }
};

template <typename T>
EnlargedFiltration<T> progressive_enlarge(const RandomTimeExtension<T>& ext) {
  ext.validate();
  const auto& base = ext.base;
  const int horizon_t = base->horizon();
  EnlargedFiltration<T> g;
  g.base = base;
  std::vector<std::string> names;
  std::vector<T> prob;
  for (int a = 0; a < base->num_atoms(); ++a)
    for (int l = 0; l < ext.levels; ++l) {
      if (ext.weights[a][l] == 0) continue;
      g.base_atom.push_back(a);
      g.tau.push_back(ext.tau[a][l]);
      names.push_back(ext.levels == 1 ? base->atom_names()[a] : base->atom_names()[a] + "#" + std::to_string(l));
      prob.push_back(base->atom_prob(a) * ext.weights[a][l]);
    }
  const int n = static_cast<int>(prob.size());
  std::vector<std::vector<int>> parts(horizon_t + 1, std::vector<int>(n));
  g.base_cell.assign(horizon_t + 1, {});
  for (int t = 0; t <= horizon_t; ++t) {
    std::map<std::pair<int, int>, int> ids;
    for (int i = 0; i < n; ++i) {
      const int bc = base->cell_of(t, g.base_atom[i]);
      const int category = g.tau[i] <= t ? g.tau[i] : -1;
      auto [it, inserted] = ids.emplace(std::make_pair(bc, category), static_cast<int>(ids.size()));
      if (inserted) g.base_cell[t].push_back(bc);
      parts[t][i] = it->second;
    }
  }
  g.space = std::make_shared<const FiniteFilteredSpace<T>>(std::move(names), std::move(prob), std::move(parts));
  return g;
}

// Re-expresses an extension of `g.base` over the atoms of `g.space`: each
// enlarged atom inherits the level weights of its base atom, so the new time
// is conditionally independent of the earlier one given the base.
template <typename T>
RandomTimeExtension<T> lift_extension(const RandomTimeExtension<T>& ext, const EnlargedFiltration<T>& g) {
  RandomTimeExtension<T> out{g.space, ext.levels, {}, {}};
  for (int i = 0; i < g.space->num_atoms(); ++i) {
    out.weights.push_back(ext.weights[g.base_atom[i]]);
    out.tau.push_back(ext.tau[g.base_atom[i]]);
  }
  return out;
}

// Cell map of `outer` (enlarging inner.space) composed down to inner.base.
template <typename T>
std::vector<std::vector<int>> compose_cells(const EnlargedFiltration<T>& inner, const EnlargedFiltration<T>& outer) {
  std::vector<std::vector<int>> out(outer.base_cell.size());
  for (std::size_t t = 0; t < outer.base_cell.size(); ++t)
    for (int c : outer.base_cell[t]) out[t].push_back(inner.base_cell[t][c]);
  return out;
}

template <typename T>
struct AzemaResult {
  AdaptedProcess<T> z;        // P(tau > t | F_t)
  PredictableProcess<T> z_minus;  // Z_{t-1}
};

template <typename T>
AzemaResult<T> azema(const RandomTimeExtension<T>& ext) {
  ext.validate();
  const auto& sp = ext.base;
  AdaptedProcess<T> z(sp, 1);
  for (int t = 0; t <= sp->horizon(); ++t) {
    std::vector<T> survive(sp->num_atoms(), T(0));
    for (int a = 0; a < sp->num_atoms(); ++a)
      for (int l = 0; l < ext.levels; ++l)
        if (ext.tau[a][l] > t) survive[a] += ext.weights[a][l];
    const std::vector<T> cond = condexp(*sp, survive, t);
    for (int c = 0; c < sp->num_cells(t); ++c) z.at(t, c) = cond[c];
  }
  PredictableProcess<T> zm(sp, 1);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) zm.at(t, c) = z.at(t - 1, c);
  return {std::move(z), std::move(zm)};
}

// Drift operator: the G-compensator of a base martingale X, so that
// X - drift(X) is a G-martingale. Cumulative.
template <typename T>
PredictableProcess<T> drift(const AdaptedProcess<T>& x, const EnlargedFiltration<T>& g,
                            double tol = ScalarTraits<T>::kDefaultTol) {
  if (!martingale_check(x, tol).pass) throw Error(ErrorCode::kNotMartingale, "drift: X is not a base martingale");
  return compensator(g.lift(x));
}

template <typename T>
struct DriftFactors {
  AdaptedProcess<T> n;         // martingale factor on the base filtration
  PredictableProcess<T> phi;   // integrand factor on G
  PredictableProcess<T> residual;  // per G node (t, cell of t-1)
  double max_residual = 0.0;
};

// Solves, per G node, sum_j phi_j * regressor_b,j = target_b over b, in the
// minimum-norm least-squares sense. regressors[b] are per-step base-predictable
// (dim = dim N), targets[b] per-step G-predictable (dim 1).
template <typename T>
DriftFactors<T> fit_factor_system(const EnlargedFiltration<T>& g, AdaptedProcess<T> n,
                                  const std::vector<PredictableProcess<T>>& regressors,
                                  const std::vector<PredictableProcess<T>>& targets, double cutoff = 1e-12) {
  const auto& sp = g.space;
  const int dn = n.dim();
  const int nb = static_cast<int>(regressors.size());
  DriftFactors<T> out{std::move(n), PredictableProcess<T>(sp, dn), PredictableProcess<T>(sp, 1), 0.0};
  T worst = T(0);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const int bc = g.base_cell[t - 1][c];
      Matrix<T> a(nb, dn);
      std::vector<T> rhs(nb);
      for (int b = 0; b < nb; ++b) {
        for (int j = 0; j < dn; ++j) a(b, j) = regressors[b].at(t, bc, j);
        rhs[b] = targets[b].at(t, c);
      }
      auto ls = min_norm_least_squares(a, rhs, cutoff);
      for (int j = 0; j < dn; ++j) out.phi.at(t, c, j) = ls.x[j];
      out.residual.at(t, c) = ls.residual;
      if (ls.residual > worst) worst = ls.residual;
    }
  out.max_residual = to_double(worst);
  return out;
}

// Fits Gamma(X) = phi^T . <N, X> over the given base martingales. Does not
// throw; see fit_drift_factors for the checked variant.
template <typename T>
DriftFactors<T> fit_drift_factors_unchecked(const EnlargedFiltration<T>& g, const AdaptedProcess<T>& n,
                                            const std::vector<AdaptedProcess<T>>& basis, double cutoff = 1e-12) {
  std::vector<PredictableProcess<T>> regressors, targets;
  for (const auto& x : basis) {
    regressors.push_back(pred_bracket_steps(n, x));
    targets.push_back(increments(compensator(g.lift(x))));
  }
  return fit_factor_system(g, n, regressors, targets, cutoff);
}

template <typename T>
DriftFactors<T> fit_drift_factors(const EnlargedFiltration<T>& g, const AdaptedProcess<T>& n,
                                  const std::vector<AdaptedProcess<T>>& basis,
                                  double tol = ScalarTraits<T>::kDefaultTol, double cutoff = 1e-12) {
  if (!martingale_check(n, tol).pass) throw Error(ErrorCode::kNotMartingale, "fit_drift_factors: N has drift");
  auto f = fit_drift_factors_unchecked(g, n, basis, cutoff);
  const bool bad = ScalarTraits<T>::kExact && tol == 0.0 ? f.max_residual != 0.0 : f.max_residual > tol;
  if (bad) throw Error(ErrorCode::kInfeasible, "drift factor residual " + std::to_string(f.max_residual));
  return f;
}

// Components of a vector process as a list of scalar processes.
template <typename T>
std::vector<AdaptedProcess<T>> components(const AdaptedProcess<T>& x) {
  std::vector<AdaptedProcess<T>> out;
  for (int h = 0; h < x.dim(); ++h) out.push_back(x.component(h));
  return out;
}

// Gamma(X) reconstructed from factors: phi^T . <N, X>^{base}, per step.
template <typename T>
PredictableProcess<T> factor_drift_steps(const DriftFactors<T>& f, const EnlargedFiltration<T>& g,
                                         const AdaptedProcess<T>& x) {
  const PredictableProcess<T> br = pred_bracket_steps(f.n, x);
  const auto& sp = g.space;
  PredictableProcess<T> out(sp, 1);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      T s = T(0);
      for (int j = 0; j < f.n.dim(); ++j) s += f.phi.at(t, c, j) * br.at(t, g.base_cell[t - 1][c], j);
      out.at(t, c) = s;
    }
  return out;
}

// max |A^{G.p} - A^{F.p} - phi^T . <N, A - A^{F.p}>| over G nodes.
template <typename T>
double compensator_transform_check(const AdaptedProcess<T>& a, const DriftFactors<T>& f,
                                   const EnlargedFiltration<T>& g) {
  const PredictableProcess<T> lhs = increments(compensator(g.lift(a)));
  const PredictableProcess<T> a_fp = compensator(a);
  const PredictableProcess<T> fp_steps = g.lift(increments(a_fp));
  AdaptedProcess<T> mart = a;
  const AdaptedProcess<T> a_fp_adapted = as_adapted(a_fp);
  for (int t = 0; t <= a.horizon(); ++t)
    for (int c = 0; c < a.space()->num_cells(t); ++c)
      for (int h = 0; h < a.dim(); ++h) mart.at(t, c, h) -= a_fp_adapted.at(t, c, h);
  T worst = T(0);
  for (int h = 0; h < a.dim(); ++h) {
    const PredictableProcess<T> rhs_drift = factor_drift_steps(f, g, mart.component(h));
    const auto& sp = g.space;
    for (int t = 1; t <= sp->horizon(); ++t)
      for (int c = 0; c < sp->num_cells(t - 1); ++c) {
        const T diff = abs_value(T(lhs.at(t, c, h) - fp_steps.at(t, c, h) - rhs_drift.at(t, c)));
        if (diff > worst) worst = diff;
      }
  }
  return to_double(worst);
}

// Sampled stopping time R (per base atom, kNever = infinite) and test
// variable xi >= 0 measurable at R.
template <typename T>
struct StoppedTest {
  std::vector<int> r;
  std::vector<T> xi;
};

struct OneFinCounterexample {
  int sample = -1;
  int atom = -1;  // extended atom
  int t = -1;     // value of R there
};

struct OneFinReport {
  bool pass = true;            // set equality on every sample
  bool inclusion_holds = true; // {E[xi|G_{R-}]>0} subset of {E[xi|F_{R-}]>0}
  std::vector<OneFinCounterexample> counterexamples;
  int samples = 0;
};

// Checks {E[xi|G_{R-}] > 0} = {E[xi|F_{R-}] > 0} on {R <= T}, with the
// discrete left limit X_{t-} := X_{t-1} (and X_{0-} := X_0).
template <typename T>
OneFinReport condition_1fin_check(const EnlargedFiltration<T>& g, const std::vector<StoppedTest<T>>& tests,
                                  std::size_t max_counterexamples = 16) {
  OneFinReport rep;
  const auto& base = g.base;
  const auto& sp = g.space;
  const int horizon_t = base->horizon();
  for (std::size_t s = 0; s < tests.size(); ++s) {
    const auto& test = tests[s];
    ++rep.samples;
    for (int t = 0; t <= horizon_t; ++t) {
      const int lt = t == 0 ? 0 : t - 1;
      // Unnormalized E[xi 1{R=t} | cell] on base and extended cells.
      std::vector<T> f_num(base->num_cells(lt), T(0));
      for (int a = 0; a < base->num_atoms(); ++a) {
        if (test.r[a] != t) continue;
        f_num[base->cell_of(lt, a)] += base->atom_prob(a) * test.xi[a];
      }
      std::vector<T> g_num(sp->num_cells(lt), T(0));
      for (int i = 0; i < sp->num_atoms(); ++i) {
        const int a = g.base_atom[i];
        if (test.r[a] != t) continue;
        g_num[sp->cell_of(lt, i)] += sp->atom_prob(i) * test.xi[a];
      }
      for (int i = 0; i < sp->num_atoms(); ++i) {
        const int a = g.base_atom[i];
        if (test.r[a] != t) continue;
        const bool f_pos = f_num[base->cell_of(lt, a)] > 0;
        const bool g_pos = g_num[sp->cell_of(lt, i)] > 0;
        if (g_pos && !f_pos) rep.inclusion_holds = false;
        if (g_pos != f_pos) {
          rep.pass = false;
          if (rep.counterexamples.size() < max_counterexamples)
            rep.counterexamples.push_back({static_cast<int>(s), i, t});
        }
      }
    }
  }
  return rep;
}

}  // namespace enlarge
