#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qama/core_types.hpp"

namespace qama {

using VariablePair = std::pair<std::size_t, std::size_t>;
/// Sparse upper-triangular coefficients keyed by (p, q) with p < q.
using PairCoefficients = std::map<VariablePair, double>;

/// Minimization objective over x in {0,1}^n:
///   E(x) = sum_{p<q} quad[p,q] x_p x_q + sum_p linear[p] x_p + offset.
class QuboProblem {
 public:
  QuboProblem() = default;
  QuboProblem(std::size_t n, PairCoefficients quad, std::vector<double> linear,
              double offset = 0.0, std::optional<Shape> shape = std::nullopt);

  std::size_t size() const { return n_; }
  const PairCoefficients& quadratic() const { return quad_; }
  const std::vector<double>& linear() const { return linear_; }
  double offset() const { return offset_; }
  const std::optional<Shape>& shape() const { return shape_; }

  double energy(const SelectionMask& x) const;

 private:
  std::size_t n_ = 0;
  PairCoefficients quad_;
  std::vector<double> linear_;
  double offset_ = 0.0;
  std::optional<Shape> shape_;
};

struct Neighbor {
  std::size_t index;
  double coupling;
};

/// Spin-form objective over sigma in {-1,+1}^n:
///   E(sigma) = -sum_{p<q} J[p,q] s_p s_q - sum_p h_p s_p + offset.
/// Adjacency lists are built once at construction.
class IsingProblem {
 public:
  IsingProblem() = default;
  IsingProblem(std::size_t n, PairCoefficients couplings,
               std::vector<double> fields, double offset = 0.0,
               std::optional<Shape> shape = std::nullopt);

  std::size_t size() const { return n_; }
  const PairCoefficients& couplings() const { return couplings_; }
  const std::vector<double>& fields() const { return fields_; }
  double offset() const { return offset_; }
  const std::optional<Shape>& shape() const { return shape_; }
  std::span<const Neighbor> neighbors(std::size_t k) const { return adjacency_[k]; }

  double energy(const SpinState& sigma) const;
  double energy(const SelectionMask& x) const;

  /// sum_q J[k,q] s_q + h_k, the quantity every single-flip delta depends on.
  double local_field(const SpinState& sigma, std::size_t k) const;

 private:
  std::size_t n_ = 0;
  PairCoefficients couplings_;
  std::vector<double> fields_;
  double offset_ = 0.0;
  std::optional<Shape> shape_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// Substitutes x = (1 + sigma) / 2; constants go to the offset so both forms
/// give identical energies on corresponding states.
IsingProblem to_ising(const QuboProblem& qubo);

double energy(const QuboProblem& problem, const SelectionMask& state);
double energy(const IsingProblem& problem, const SpinState& state);

enum class FlipDirection { kRaise, kLower };  // -1 -> +1, +1 -> -1

struct FlipDelta {
  std::size_t index;
  double delta;  // energy after flip minus energy before
  FlipDirection direction;
};

/// O(degree(k)) energy change of flipping spin k.
FlipDelta flip_delta(const IsingProblem& problem, const SpinState& state,
                     std::size_t k);

}  // namespace qama
