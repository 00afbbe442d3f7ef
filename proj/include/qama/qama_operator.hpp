#pragma once

#include <cstdint>
#include <vector>

#include "qama/annealer.hpp"
#include "qama/core_types.hpp"
#include "qama/hamiltonian.hpp"

namespace qama {

/// Operator output for a batch.
struct EnergyOutput {
  Tensor e_token;  // B x H x N, per-(head, token) share of the pure energy
  Tensor e_out;    // B, sum of e_token over (t, i)
  Tensor e_dist;   // B x H x N x D, e_token[b,t,i] * W_eps^T
};

/// Everything backward needs. Masks are constants: no gradient flows through
/// the solver.
struct ForwardCache {
  AttentionInput input;
  CoefficientConfig config;
  std::vector<SelectionMask> masks;
  std::vector<CouplingTensor> couplings;
  std::vector<FieldVector> fields;
  std::vector<DynamicCoefficients> coefficients;
  std::vector<SolveResult> solves;
};

struct GradientBundle {
  Tensor d_query;
  Tensor d_key;
  Tensor d_value;
  Tensor d_field_weights;  // D x 1
};

struct ForwardResult {
  EnergyOutput output;
  ForwardCache cache;
};

/// Build -> solve -> pure energy -> distribution mapping, per batch element.
/// Every batch element is solved with the same seed, so an element's result
/// depends only on its own data.
ForwardResult forward(const AttentionInput& input, const CoefficientConfig& cfg,
                      const SolverBackend& backend, std::uint64_t seed);

/// Energy output for fixed masks (the forward map with the solve frozen):
///   e_token[t,i] = -s[t,i] (1/2 sum_{j != i} J[t,i,j] s[t,j] + rho h[t,i]).
EnergyOutput energy_output(const AttentionInput& input, const CoefficientConfig& cfg,
                           const std::vector<SelectionMask>& masks);

/// Gradients of sum(grad_e_dist * e_dist) with respect to Q, K, V and W_eps,
/// with masks held fixed.
GradientBundle backward(const Tensor& grad_e_dist, const ForwardCache& cache);

/// H x N 0/1 maps, one row per head.
std::vector<std::vector<std::uint8_t>> extract_head_masks(const SelectionMask& mask,
                                                          std::size_t heads,
                                                          std::size_t seq_len);
std::vector<std::vector<std::vector<std::uint8_t>>> extract_head_masks(
    const ForwardCache& cache);

}  // namespace qama
