#pragma once

#include "enlarge/space.hpp"

#include <vector>

namespace enlarge {

// d-vector valued process, constant on the cells of partition t.
template <typename T>
class AdaptedProcess {
 public:
  AdaptedProcess() = default;
  AdaptedProcess(SpacePtr<T> space, int dim) : space_(std::move(space)), dim_(dim) {
    values_.resize(space_->horizon() + 1);
    for (int t = 0; t <= space_->horizon(); ++t)
      values_[t].assign(static_cast<std::size_t>(space_->num_cells(t)) * dim_, T(0));
  }

  const SpacePtr<T>& space() const { return space_; }
  int dim() const { return dim_; }
  int horizon() const { return space_->horizon(); }

  T& at(int t, int cell, int h = 0) { return values_[t][static_cast<std::size_t>(cell) * dim_ + h]; }
  const T& at(int t, int cell, int h = 0) const {
    return values_[t][static_cast<std::size_t>(cell) * dim_ + h];
  }
  const T& on_atom(int t, int atom, int h = 0) const { return at(t, space_->cell_of(t, atom), h); }

  // Increment X_t - X_{t-1} on a cell at t (t >= 1).
  T increment(int t, int cell, int h = 0) const {
    return at(t, cell, h) - at(t - 1, space_->parent(t, cell), h);
  }

  AdaptedProcess component(int h) const {
    AdaptedProcess out(space_, 1);
    for (int t = 0; t <= horizon(); ++t)
      for (int c = 0; c < space_->num_cells(t); ++c) out.at(t, c) = at(t, c, h);
    return out;
  }

 private:
  SpacePtr<T> space_;
  int dim_ = 0;
  std::vector<std::vector<T>> values_;
};

// Process whose value at t >= 1 is measurable w.r.t. partition t-1; stored
// on the cells of t-1. The value at t = 0 is 0.
template <typename T>
class PredictableProcess {
 public:
  PredictableProcess() = default;
  PredictableProcess(SpacePtr<T> space, int dim) : space_(std::move(space)), dim_(dim) {
    values_.resize(space_->horizon() + 1);
    for (int t = 1; t <= space_->horizon(); ++t)
      values_[t].assign(static_cast<std::size_t>(space_->num_cells(t - 1)) * dim_, T(0));
  }

  const SpacePtr<T>& space() const { return space_; }
  int dim() const { return dim_; }
  int horizon() const { return space_->horizon(); }

  // `cell` is a cell of partition t-1.
  T& at(int t, int cell, int h = 0) { return values_[t][static_cast<std::size_t>(cell) * dim_ + h]; }
  const T& at(int t, int cell, int h = 0) const {
    return values_[t][static_cast<std::size_t>(cell) * dim_ + h];
  }
  // Value at t seen from a cell of partition t.
  const T& at_cell_of(int t, int cell_t, int h = 0) const {
    return at(t, space_->parent(t, cell_t), h);
  }

 private:
  SpacePtr<T> space_;
  int dim_ = 0;
  std::vector<std::vector<T>> values_;
};

// Cumulative predictable process viewed as an adapted process.
template <typename T>
AdaptedProcess<T> as_adapted(const PredictableProcess<T>& p) {
  const auto& sp = p.space();
  AdaptedProcess<T> out(sp, p.dim());
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t); ++c)
      for (int h = 0; h < p.dim(); ++h) out.at(t, c, h) = p.at_cell_of(t, c, h);
  return out;
}

// Running sum of per-step predictable values: (sum_{s<=t} v_s), still predictable.
template <typename T>
PredictableProcess<T> cumulate(const PredictableProcess<T>& steps) {
  const auto& sp = steps.space();
  PredictableProcess<T> out(sp, steps.dim());
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c)
      for (int h = 0; h < steps.dim(); ++h) {
        T prev = (t == 1) ? T(0) : out.at(t - 1, sp->parent(t - 1, c), h);
        out.at(t, c, h) = prev + steps.at(t, c, h);
      }
  return out;
}

// Per-step increments of a cumulative predictable process.
template <typename T>
PredictableProcess<T> increments(const PredictableProcess<T>& cumulative) {
  const auto& sp = cumulative.space();
  PredictableProcess<T> out(sp, cumulative.dim());
  for (int t = 1; t <= sp->horizon(); ++t)
    for (int c = 0; c < sp->num_cells(t - 1); ++c)
      for (int h = 0; h < cumulative.dim(); ++h) {
        T prev = (t == 1) ? T(0) : cumulative.at(t - 1, sp->parent(t - 1, c), h);
        out.at(t, c, h) = cumulative.at(t, c, h) - prev;
      }
  return out;
}

// Adapted process from a per-atom function f(t, atom), checked for
// measurability.
template <typename T, typename F>
AdaptedProcess<T> adapted_from_atoms(const SpacePtr<T>& space, int dim, F&& f) {
  AdaptedProcess<T> out(space, dim);
  for (int t = 0; t <= space->horizon(); ++t)
    for (int c = 0; c < space->num_cells(t); ++c) {
      const auto& atoms = space->atoms_in(t, c);
      for (int h = 0; h < dim; ++h) {
        T v = f(t, atoms.front(), h);
        for (std::size_t i = 1; i < atoms.size(); ++i)
          if (f(t, atoms[i], h) != v)
            throw Error(ErrorCode::kNotPredictable, "values not constant on a cell");
        out.at(t, c, h) = v;
      }
    }
  return out;
}

}  // namespace enlarge
