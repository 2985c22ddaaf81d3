#pragma once

#include "enlarge/error.hpp"
#include "enlarge/scalar.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace enlarge {

// Finite outcome set with strictly positive probabilities and a filtration
// given as a refining sequence of partitions indexed by t = 0..T.
template <typename T>
class FiniteFilteredSpace {
 public:
  FiniteFilteredSpace(std::vector<std::string> atom_names, std::vector<T> prob,
                      std::vector<std::vector<int>> partitions)
      : names_(std::move(atom_names)), prob_(std::move(prob)), partitions_(std::move(partitions)) {
    build();
  }

  int horizon() const { return static_cast<int>(partitions_.size()) - 1; }
  int num_atoms() const { return static_cast<int>(prob_.size()); }
  int num_cells(int t) const { return static_cast<int>(cell_atoms_[t].size()); }
  int cell_of(int t, int atom) const { return partitions_[t][atom]; }
  // Cell at t-1 containing `cell` (a cell at t >= 1).
  int parent(int t, int cell) const { return parent_[t][cell]; }
  // Cells at t+1 contained in `cell` (a cell at t < T).
  const std::vector<int>& children(int t, int cell) const { return children_[t][cell]; }
  const std::vector<int>& atoms_in(int t, int cell) const { return cell_atoms_[t][cell]; }
  const T& atom_prob(int atom) const { return prob_[atom]; }
  const T& cell_prob(int t, int cell) const { return cell_prob_[t][cell]; }
  const std::vector<T>& probabilities() const { return prob_; }
  const std::vector<std::string>& atom_names() const { return names_; }
  const std::vector<std::vector<int>>& partitions() const { return partitions_; }

  int max_branching() const {
    std::size_t b = 1;
    for (const auto& per_t : children_)
      for (const auto& kids : per_t) b = std::max(b, kids.size());
    return static_cast<int>(b);
  }

  // P(child | parent) for a cell at t+1.
  T transition(int t, int child) const {
    return cell_prob_[t + 1][child] / cell_prob_[t][parent_[t + 1][child]];
  }

 private:
  void build();

  std::vector<std::string> names_;
  std::vector<T> prob_;
  std::vector<std::vector<int>> partitions_;
  std::vector<std::vector<std::vector<int>>> cell_atoms_;
  std::vector<std::vector<T>> cell_prob_;
  std::vector<std::vector<int>> parent_;
  std::vector<std::vector<std::vector<int>>> children_;
};

template <typename T>
using SpacePtr = std::shared_ptr<const FiniteFilteredSpace<T>>;

template <typename T>
void FiniteFilteredSpace<T>::build() {
  const int n = num_atoms();
  if (n == 0) throw Error(ErrorCode::kInvalidSpace, "no atoms");
  if (partitions_.empty()) throw Error(ErrorCode::kInvalidSpace, "no partitions");
  if (static_cast<int>(names_.size()) != n)
    throw Error(ErrorCode::kInvalidSpace, "atom name count differs from probability count");
  T total = T(0);
  for (const T& p : prob_) {
    if (!(p > 0)) throw Error(ErrorCode::kInvalidSpace, "atom probability not strictly positive");
    total += p;
  }
  const T gap = abs_value(T(total - T(1)));
  if (ScalarTraits<T>::kExact ? gap != 0 : to_double(gap) > 1e-12)
    throw Error(ErrorCode::kInvalidSpace, "probabilities do not sum to 1");

  const int horizon_t = horizon();
  cell_atoms_.assign(horizon_t + 1, {});
  cell_prob_.assign(horizon_t + 1, {});
  parent_.assign(horizon_t + 1, {});
  children_.assign(horizon_t + 1, {});
  for (int t = 0; t <= horizon_t; ++t) {
    const auto& part = partitions_[t];
    if (static_cast<int>(part.size()) != n)
      throw Error(ErrorCode::kInvalidSpace, "partition size differs from atom count");
    int cells = 0;
    for (int id : part) {
      if (id < 0) throw Error(ErrorCode::kInvalidSpace, "negative cell id");
      cells = std::max(cells, id + 1);
    }
    cell_atoms_[t].assign(cells, {});
    cell_prob_[t].assign(cells, T(0));
    for (int a = 0; a < n; ++a) {
      cell_atoms_[t][part[a]].push_back(a);
      cell_prob_[t][part[a]] += prob_[a];
    }
    for (int c = 0; c < cells; ++c)
      if (cell_atoms_[t][c].empty())
        throw Error(ErrorCode::kInvalidSpace, "cell ids are not dense at t=" + std::to_string(t));
    if (t > 0) {
      parent_[t].assign(cells, -1);
      for (int a = 0; a < n; ++a) {
        int& up = parent_[t][part[a]];
        const int prev = partitions_[t - 1][a];
        if (up == -1) {
          up = prev;
        } else if (up != prev) {
          throw Error(ErrorCode::kInvalidSpace,
                      "partition at t=" + std::to_string(t) + " does not refine t-1");
        }
      }
      children_[t - 1].assign(cell_atoms_[t - 1].size(), {});
      for (int c = 0; c < cells; ++c) children_[t - 1][parent_[t][c]].push_back(c);
    }
  }
  children_[horizon_t].assign(cell_atoms_[horizon_t].size(), {});
}

// Tree whose node at depth t with child-index path `path` branches with the
// conditional probabilities returned by `branch`. Atoms are leaves in
// lexicographic path order; cell ids follow the same order.
template <typename T>
SpacePtr<T> tree_space(int depth,
                       const std::function<std::vector<T>(int t, const std::vector<int>& path)>& branch) {
  struct Leaf {
    std::vector<int> path;
    T prob;
  };
  std::vector<Leaf> level{{{}, T(1)}};
  for (int t = 0; t < depth; ++t) {
    std::vector<Leaf> next;
    for (const auto& node : level) {
      const std::vector<T> probs = branch(t, node.path);
      if (probs.empty()) throw Error(ErrorCode::kInvalidSpace, "node without children");
      for (std::size_t k = 0; k < probs.size(); ++k) {
        auto path = node.path;
        path.push_back(static_cast<int>(k));
        next.push_back({std::move(path), T(node.prob * probs[k])});
      }
    }
    level = std::move(next);
  }
  const int n = static_cast<int>(level.size());
  std::vector<std::string> names;
  std::vector<T> prob;
  std::vector<std::vector<int>> parts(depth + 1, std::vector<int>(n, 0));
  for (const auto& leaf : level) {
    std::string name;
    for (int k : leaf.path) name += static_cast<char>('0' + k);
    names.push_back(name.empty() ? std::string("root") : name);
    prob.push_back(leaf.prob);
  }
  for (int t = 1; t <= depth; ++t) {
    int id = -1;
    std::vector<int> last;
    for (int a = 0; a < n; ++a) {
      std::vector<int> prefix(level[a].path.begin(), level[a].path.begin() + t);
      if (a == 0 || prefix != last) ++id;
      parts[t][a] = id;
      last = std::move(prefix);
    }
  }
  return std::make_shared<const FiniteFilteredSpace<T>>(std::move(names), std::move(prob), std::move(parts));
}

// Binomial tree with up-probability `p_up`; atom names use 'u'/'d'.
template <typename T>
SpacePtr<T> binomial_space(int depth, const T& p_up) {
  auto base = tree_space<T>(depth, [&](int, const std::vector<int>&) {
    return std::vector<T>{p_up, T(T(1) - p_up)};
  });
  std::vector<std::string> names = base->atom_names();
  for (auto& s : names) {
    if (s == "root") continue;
    for (char& c : s) c = (c == '0') ? 'u' : 'd';
  }
  return std::make_shared<const FiniteFilteredSpace<T>>(names, base->probabilities(), base->partitions());
}

}  // namespace enlarge
