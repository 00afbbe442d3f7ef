#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "qama/annealer.hpp"
#include "qama/problem.hpp"

namespace qama {

/// Default ground-state match tolerance: 1e-6 * max(1, |ground_energy|).
double default_success_tolerance(double ground_energy);

/// Fraction of runs (seeds first_seed, first_seed + 1, ...) whose best energy
/// is within tol of the ground energy.
double estimate_success_probability(const IsingProblem& problem,
                                    const SolverBackend& backend, std::size_t runs,
                                    double ground_energy,
                                    std::optional<double> tol = std::nullopt,
                                    std::uint64_t first_seed = 0);

struct TtsReport {
  double p_success = 0.0;
  double t_ann = 0.0;
  std::optional<std::uint64_t> runs;  // empty when p_success == 0
  double t_sol = 0.0;                 // +inf when p_success == 0
};

/// Runs needed for 99% confidence, ceil(ln 0.01 / ln(1 - p)), times t_ann.
TtsReport time_to_solution(double p_success, double t_ann);

struct BarrierReport {
  bool reached = false;
  double b_min = 0.0;               // largest uphill step on the witness path
  std::vector<std::size_t> witness_path;  // flipped site per step
  double b_u = 0.0;                 // sum of uphill steps on the witness path
  std::size_t flips = 0;
  double max_step = 0.0;            // largest positive step, recomputed by replay
};

inline constexpr std::size_t kBarrierCap = 12;

/// Minimax single-flip barrier from `start` to `ground`. Exhaustive over all
/// paths of at most `max_path_length` flips (default 2n); among paths with the
/// minimal barrier, the witness minimises the cumulative uphill sum, then the
/// length. Immediate backtracking never appears in a witness.
BarrierReport min_barrier(const IsingProblem& problem, const SpinState& start,
                          const SpinState& ground,
                          std::optional<std::size_t> max_path_length = std::nullopt);

}  // namespace qama
