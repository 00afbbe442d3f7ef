#pragma once

#include <cstddef>
#include <vector>

#include "qama/core_types.hpp"
#include "qama/problem.hpp"

namespace qama {

/// Per-head interaction strengths J[t,i,j] for one batch element.
/// Symmetric in (i, j) with a zero diagonal.
class CouplingTensor {
 public:
  CouplingTensor(std::size_t heads, std::size_t seq_len, std::vector<double> values);

  std::size_t heads() const { return heads_; }
  std::size_t seq_len() const { return seq_len_; }
  double operator()(std::size_t t, std::size_t i, std::size_t j) const {
    return values_[(t * seq_len_ + i) * seq_len_ + j];
  }
  const std::vector<double>& values() const { return values_; }
  double max_abs() const;

 private:
  std::size_t heads_;
  std::size_t seq_len_;
  std::vector<double> values_;
};

/// Per-(head, token) self-importance h[t,i].
class FieldVector {
 public:
  FieldVector(std::size_t heads, std::size_t seq_len, std::vector<double> values);

  std::size_t heads() const { return heads_; }
  std::size_t seq_len() const { return seq_len_; }
  double operator()(std::size_t t, std::size_t i) const {
    return values_[t * seq_len_ + i];
  }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t heads_;
  std::size_t seq_len_;
  std::vector<double> values_;
};

struct DynamicCoefficients {
  double rho = 0.0;
  double lambda = 0.0;
  // Set when H == 1: there are no head pairs, so lambda is 0 and the
  // penalty is omitted.
  bool penalty_disabled = false;
};

struct EnergyBreakdown {
  double h_alpha = 0.0;
  double h_beta = 0.0;
  double h_gamma = 0.0;
  double total = 0.0;  // -h_alpha - rho h_beta + lambda h_gamma
};

struct SubtermMaxima {
  double alpha;
  double beta;
  double gamma;
};

/// 1 / sqrt(2 pi): mean of max(0, X) for standard normal X.
inline constexpr double kPositivePartMean = 0.39894228040143267794;

/// J_t = (Q_t K_t^T)(Q_t K_t^T)^T / (2D) per head, diagonal cleared.
/// Q and K are H x N x D slices of a single batch element.
CouplingTensor compute_coupling(const Tensor& query, const Tensor& key);

/// h[t,i] = V[t,i,:] . W_eps.
FieldVector compute_field(const Tensor& value, const Tensor& field_weights);

/// rho = N rho0, lambda = N sqrt(2/pi) / (H - 1) * lambda0.
DynamicCoefficients dynamic_coefficients(const Shape& shape,
                                         const CoefficientConfig& cfg);

/// Expected maxima of the three subterms for standardized inputs. These are
/// diagnostics only; note the alpha estimate counts N^2 pairs even though the
/// interaction sum runs over i < j.
SubtermMaxima expected_max_subterms(const Shape& shape);

/// Sample mean of max(0, x).
double positive_part_mean(std::span<const double> samples);

/// Assembles -H_alpha - rho H_beta + lambda H_gamma as a QUBO over the
/// head-major flattened mask. The resulting problem has offset 0.
QuboProblem assemble_qubo(const CouplingTensor& coupling, const FieldVector& field,
                          const DynamicCoefficients& coeff, const Shape& shape);

EnergyBreakdown energy_breakdown(const SelectionMask& mask,
                                 const CouplingTensor& coupling,
                                 const FieldVector& field,
                                 const DynamicCoefficients& coeff);

}  // namespace qama
