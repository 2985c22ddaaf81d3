#pragma once

#include "enlarge/calculus.hpp"
#include "enlarge/natural_model.hpp"

#include <random>

namespace enlarge::testing {

// Random tree with per-node branching in [2, max_branching] and random
// rational-friendly probabilities (integer weights in 1..9, normalized).
template <typename T>
SpacePtr<T> random_tree(std::mt19937_64& rng, int depth, int max_branching) {
  return tree_space<T>(depth, [&](int, const std::vector<int>&) {
    std::uniform_int_distribution<int> nb(2, max_branching), w(1, 9);
    const int k = nb(rng);
    std::vector<int> ws(k);
    int total = 0;
    for (int& x : ws) total += (x = w(rng));
    std::vector<T> p;
    for (int x : ws) p.push_back(T(x) / T(total));
    return p;
  });
}

template <typename T>
AdaptedProcess<T> random_adapted(std::mt19937_64& rng, const SpacePtr<T>& sp, int dim = 1) {
  std::uniform_int_distribution<int> v(-9, 9);
  AdaptedProcess<T> x(sp, dim);
  for (int t = 0; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c)
      for (int h = 0; h < dim; ++h) x.at(t, c, h) = T(v(rng)) / T(4);
  return x;
}

template <typename T>
AdaptedProcess<T> random_martingale(std::mt19937_64& rng, const SpacePtr<T>& sp, int dim = 1) {
  return doob_decompose(random_adapted(rng, sp, dim)).martingale;
}

template <typename T>
PredictableProcess<T> random_predictable(std::mt19937_64& rng, const SpacePtr<T>& sp, int dim = 1) {
  std::uniform_int_distribution<int> v(-9, 9);
  PredictableProcess<T> h(sp, dim);
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c)
      for (int d = 0; d < dim; ++d) h.at(t, c, d) = T(v(rng)) / T(3);
  return h;
}

// Fair +-1 walk on the binomial tree with p = 1/2.
template <typename T>
AdaptedProcess<T> walk(const SpacePtr<T>& sp) {
  return adapted_from_atoms<T>(sp, 1, [&](int t, int a, int) {
    T s = T(0);
    const std::string& name = sp->atom_names()[a];
    for (int i = 0; i < t; ++i) s += name[i] == 'u' ? T(1) : T(-1);
    return s;
  });
}

}  // namespace enlarge::testing

namespace enlarge::testing {

// Binomial fair tree where odd steps carry hazard (decay 1/2, L flat) and
// even steps move L by a factor 1 +- 1/4.
template <typename T>
NaturalModelSpec<T> separated_binomial_spec(int depth) {
  auto sp = binomial_space<T>(depth, T(1) / T(2));
  NaturalModelSpec<T> spec{adapted_from_atoms<T>(sp, 1,
                                                 [&](int t, int a, int) {
                                                   T l = T(1);
                                                   const std::string& name = sp->atom_names()[a];
                                                   for (int s = 2; s <= t; s += 2)
                                                     l *= name[s - 1] == 'u' ? T(5) / T(4) : T(3) / T(4);
                                                   return l;
                                                 }),
                           PredictableProcess<T>(sp, 1), std::nullopt, std::nullopt};
  for (int t = 1; t <= depth; ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c) spec.decay.at(t, c) = t % 2 == 1 ? T(1) / T(2) : T(1);
  return spec;
}

}  // namespace enlarge::testing
