#pragma once

#include "enlarge/enlargement.hpp"

#include <cmath>
#include <optional>

namespace enlarge {

// Z = L * exp(-Lambda). Lambda enters through its one-step discount factors
// decay_t = exp(-(Lambda_t - Lambda_{t-1})), predictable and in (0, 1], so
// that rational mode stays exact.
template <typename T>
struct NaturalModelSpec {
  AdaptedProcess<T> l;
  PredictableProcess<T> decay;
  std::optional<PredictableProcess<T>> p;  // dim = yfac dim
  std::optional<AdaptedProcess<T>> yfac;

  const SpacePtr<T>& space() const { return l.space(); }

  AdaptedProcess<T> z() const {
    const auto& sp = space();
    AdaptedProcess<T> out(sp, 1);
    std::vector<T> disc(sp->num_cells(0), T(1));
    for (int c = 0; c < sp->num_cells(0); ++c) out.at(0, c) = l.at(0, c);
    std::vector<T> prev = disc;
    for (int t = 1; t <= sp->horizon(); ++t) {
      std::vector<T> cur(sp->num_cells(t));
      for (int c = 0; c < sp->num_cells(t); ++c) {
        const int up = sp->parent(t, c);
        cur[c] = prev[up] * decay.at(t, up);
        out.at(t, c) = l.at(t, c) * cur[c];
      }
      prev = std::move(cur);
    }
    return out;
  }

  // Cumulative hazard, float only.
  AdaptedProcess<double> lambda() const;

  // True when no step has both a hazard increment and a move of L.
  bool separated() const {
    const auto& sp = space();
    for (int t = 1; t <= sp->horizon(); ++t)
      for (int c = 0; c < sp->num_cells(t - 1); ++c) {
        if (decay.at(t, c) == T(1)) continue;
        for (int k : sp->children(t - 1, c))
          if (l.increment(t, k) != 0) return false;
      }
    return true;
  }

  void validate(double tol = ScalarTraits<T>::kDefaultTol) const {
    const auto& sp = space();
    if (l.dim() != 1) throw Error(ErrorCode::kDimensionMismatch, "L must be scalar");
    for (int c = 0; c < sp->num_cells(0); ++c)
      if (l.at(0, c) != T(1)) throw Error(ErrorCode::kInvalidZ, "L_0 must equal 1");
    for (int t = 0; t <= sp->horizon(); ++t)
      for (int c = 0; c < sp->num_cells(t); ++c)
        if (!(l.at(t, c) > 0)) throw Error(ErrorCode::kInvalidZ, "L must be strictly positive");
    if (!martingale_check(l, tol).pass) throw Error(ErrorCode::kNotMartingale, "L is not a martingale");
    for (int t = 1; t <= sp->horizon(); ++t)
      for (int c = 0; c < sp->num_cells(t - 1); ++c)
        if (!(decay.at(t, c) > 0) || decay.at(t, c) > T(1))
          throw Error(ErrorCode::kInvalidZ, "hazard increments must be finite and nonnegative");
    const AdaptedProcess<T> zz = z();
    for (int t = 1; t <= sp->horizon(); ++t)
      for (int c = 0; c < sp->num_cells(t); ++c)
        if (!(zz.at(t, c) > 0) || !(zz.at(t, c) < T(1)))
          throw Error(ErrorCode::kInvalidZ, "Z outside (0,1) at t=" + std::to_string(t));
    if (p.has_value() != yfac.has_value())
      throw Error(ErrorCode::kDimensionMismatch, "p and Yfac must be given together");
  }
};

template <typename T>
AdaptedProcess<double> NaturalModelSpec<T>::lambda() const {
  const auto& sp = space();
  auto fsp = std::make_shared<const FiniteFilteredSpace<double>>(
      sp->atom_names(),
      [&] {
        std::vector<double> v;
        for (const T& p : sp->probabilities()) v.push_back(to_double(p));
        double s = 0;
        for (double x : v) s += x;
        for (double& x : v) x /= s;
        return v;
      }(),
      sp->partitions());
  AdaptedProcess<double> out(fsp, 1);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c) {
      const int up = sp->parent(t, c);
      out.at(t, c) = out.at(t - 1, up) - std::log(to_double(decay.at(t, up)));
    }
  return out;
}

// Conditional default masses q_t(u) = P(tau = u | F_t), u <= t, per cell.
template <typename T>
struct MassTable {
  std::vector<std::vector<std::vector<T>>> q;  // [t][cell][u], u = 0..t
  AdaptedProcess<T> z;
};

template <typename T>
struct NaturalConstruction {
  RandomTimeExtension<T> extension;
  MassTable<T> masses;
};

// Forward proportional redistribution: past masses are scaled by
// (1 - Z_t) / (1 - Z_{t-1} decay_t), the new mass fills up to 1 - Z_t.
template <typename T>
MassTable<T> proportional_masses(const NaturalModelSpec<T>& spec, double tol = ScalarTraits<T>::kDefaultTol) {
  spec.validate(tol);
  const auto& sp = spec.space();
  MassTable<T> m{{}, spec.z()};
  m.q.resize(sp->horizon() + 1);
  m.q[0].assign(sp->num_cells(0), {});
  for (int c = 0; c < sp->num_cells(0); ++c) m.q[0][c] = {T(T(1) - m.z.at(0, c))};
  for (int t = 1; t <= sp->horizon(); ++t) {
    m.q[t].assign(sp->num_cells(t), {});
    for (int c = 0; c < sp->num_cells(t); ++c) {
      const int up = sp->parent(t, c);
      const T expected_survival = m.z.at(t - 1, up) * spec.decay.at(t, up);
      const T denom = T(1) - expected_survival;
      const T left = T(1) - m.z.at(t, c);
      auto& row = m.q[t][c];
      row.assign(t + 1, T(0));
      T past = T(0);
      if (denom == 0) {
        // No past mass can exist when E[Z_t | F_{t-1}] = 1.
        for (int u = 0; u < t; ++u)
          if (m.q[t - 1][up][u] != 0) throw Error(ErrorCode::kInvalidZ, "degenerate redistribution");
      } else {
        const T ratio = left / denom;
        for (int u = 0; u < t; ++u) {
          row[u] = m.q[t - 1][up][u] * ratio;
          past += row[u];
        }
      }
      T fresh = left - past;
      if (fresh < 0) {
        if (ScalarTraits<T>::kExact || to_double(fresh) < -tol)
          throw Error(ErrorCode::kNegativeMass, "new default mass negative at t=" + std::to_string(t));
        fresh = T(0);
      }
      row[t] = fresh;
    }
  }
  return m;
}

template <typename T>
NaturalConstruction<T> construct_tau_proportional(const NaturalModelSpec<T>& spec,
                                                  double tol = ScalarTraits<T>::kDefaultTol) {
  MassTable<T> m = proportional_masses(spec, tol);
  const auto& sp = spec.space();
  const int horizon_t = sp->horizon();
  RandomTimeExtension<T> ext{sp, horizon_t + 2, {}, {}};
  for (int a = 0; a < sp->num_atoms(); ++a) {
    const int c = sp->cell_of(horizon_t, a);
    std::vector<T> w(m.q[horizon_t][c]);
    w.push_back(m.z.at(horizon_t, c));
    std::vector<int> tau(horizon_t + 2);
    for (int u = 0; u <= horizon_t; ++u) tau[u] = u;
    tau[horizon_t + 1] = kNever;
    ext.weights.push_back(std::move(w));
    ext.tau.push_back(std::move(tau));
  }
  return {std::move(ext), std::move(m)};
}

struct InterceptReport {
  std::vector<double> coincidence;  // P(tau = R) per supplied time
  double max = 0.0;
};

// Exact P(tau = R) for base stopping times R given per base atom.
template <typename T>
InterceptReport intercept_check(const RandomTimeExtension<T>& ext, const std::vector<std::vector<int>>& times) {
  InterceptReport rep;
  for (const auto& r : times) {
    T p = T(0);
    for (int a = 0; a < ext.base->num_atoms(); ++a)
      for (int l = 0; l < ext.levels; ++l)
        if (r[a] != kNever && ext.tau[a][l] == r[a]) p += ext.base->atom_prob(a) * ext.weights[a][l];
    rep.coincidence.push_back(to_double(p));
    rep.max = std::max(rep.max, rep.coincidence.back());
  }
  return rep;
}

template <typename T>
struct DiesTemplateReport {
  double pre_residual = 0.0;   // max over pre-default G nodes and basis
  double post_residual = 0.0;  // after fitting p(tau), if Yfac given
  int pre_nodes = 0;
  int post_nodes = 0;
  std::optional<PredictableProcess<T>> fitted_p;  // on G, post-default nodes only
};

// Compares the drift of each basis martingale with
//   (1{t <= tau}/Z_- - 1{t > tau}/(1 - Z_-)) d<M, X> + 1{t > tau} p(tau) d<Y, X>,
// M the martingale part of Z.
template <typename T>
DiesTemplateReport<T> dies_template_check(const RandomTimeExtension<T>& ext, const NaturalModelSpec<T>& spec,
                                          const std::vector<AdaptedProcess<T>>& basis, double cutoff = 1e-12) {
  const EnlargedFiltration<T> g = progressive_enlarge(ext);
  const AdaptedProcess<T> z = azema(ext).z;
  const AdaptedProcess<T> m = doob_decompose(z).martingale;
  const auto& sp = g.space;
  const int nb = static_cast<int>(basis.size());
  std::vector<PredictableProcess<T>> gam, bm, by;
  for (const auto& x : basis) {
    gam.push_back(increments(compensator(g.lift(x))));
    bm.push_back(pred_bracket_steps(m, x));
    if (spec.yfac) by.push_back(pred_bracket_steps(*spec.yfac, x));
  }
  const int dy = spec.yfac ? spec.yfac->dim() : 0;
  DiesTemplateReport<T> rep;
  if (spec.yfac) rep.fitted_p.emplace(sp, dy);
  T pre = T(0), post = T(0);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) {
      const int bc = g.base_cell[t - 1][c];
      const T zm = z.at(t - 1, bc);
      if (g.alive(t - 1, c)) {
        ++rep.pre_nodes;
        for (int b = 0; b < nb; ++b) {
          const T r = abs_value(T(gam[b].at(t, c) - bm[b].at(t, bc) / zm));
          if (r > pre) pre = r;
        }
        continue;
      }
      ++rep.post_nodes;
      Matrix<T> a(nb, dy);
      std::vector<T> rhs(nb);
      for (int b = 0; b < nb; ++b) {
        rhs[b] = gam[b].at(t, c) + bm[b].at(t, bc) / (T(1) - zm);
        for (int j = 0; j < dy; ++j) a(b, j) = by[b].at(t, bc, j);
      }
      if (dy == 0) {
        for (const T& v : rhs)
          if (abs_value(v) > post) post = abs_value(v);
        continue;
      }
      auto ls = min_norm_least_squares(a, rhs, cutoff);
      for (int j = 0; j < dy; ++j) rep.fitted_p->at(t, c, j) = ls.x[j];
      if (ls.residual > post) post = ls.residual;
    }
  rep.pre_residual = to_double(pre);
  rep.post_residual = to_double(post);
  return rep;
}

}  // namespace enlarge
