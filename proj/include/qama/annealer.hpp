#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qama/core_types.hpp"
#include "qama/problem.hpp"

namespace qama {

enum class Interpolation { kGeometric, kLinear };
enum class AcceptanceRule { kMetropolis, kGlauber };
enum class SiteOrder { kSequential, kRandom };

/// Inverse-temperature ramp, one beta value per sweep.
struct AnnealSchedule {
  double beta_start = 0.1;
  double beta_end = 10.0;
  std::size_t sweeps = 200;
  Interpolation interpolation = Interpolation::kGeometric;

  void validate() const;
  /// beta for sweep r in [0, sweeps). A single-sweep schedule runs at beta_end.
  double beta(std::size_t sweep) const;
};

struct SolveResult {
  SelectionMask best_state;
  double best_energy = 0.0;
  std::vector<double> energy_trace;  // current energy after each sweep, if recorded
  std::size_t sweeps_used = 0;
  std::uint64_t seed = 0;
  std::string backend;
};

/// Seam for solver hardware or software: consumes an Ising problem plus the
/// backend's own configuration and returns the best state found.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual std::string name() const = 0;
  virtual SolveResult solve(const IsingProblem& problem, std::uint64_t seed) const = 0;
  virtual nlohmann::json config() const = 0;
  /// Largest problem this backend accepts.
  virtual std::size_t capacity() const { return static_cast<std::size_t>(-1); }
};

inline constexpr std::size_t kDefaultBruteForceCap = 24;

/// Exact minimum by Gray-code enumeration. Ties go to the lexicographically
/// smallest bit string (bit 0 first).
SolveResult brute_force(const QuboProblem& problem,
                        std::size_t cap = kDefaultBruteForceCap);
SolveResult brute_force(const IsingProblem& problem,
                        std::size_t cap = kDefaultBruteForceCap);

double acceptance_probability(AcceptanceRule rule, double beta, double delta);

struct AnnealOptions {
  AnnealSchedule schedule;
  AcceptanceRule acceptance = AcceptanceRule::kMetropolis;
  SiteOrder order = SiteOrder::kSequential;
  bool record_trace = false;
};

/// Single-spin-flip simulated annealing. Returns the best state ever visited.
SolveResult simulated_anneal(const IsingProblem& problem, const AnnealOptions& options,
                             std::uint64_t seed);

struct SoftSpinOptions {
  std::size_t steps = 2000;
  double dt = 0.05;
  double gain_start = 0.0;
  double gain_end = 2.0;
  double coupling_strength = 0.5;  // relative to the largest row sum of |J| + |h|
  double noise = 0.05;
  double amplitude_clamp = 1.5;

  void validate() const;
};

/// Soft-spin relaxation in the style of an optical Ising machine:
///   dx/dt = (g - 1) x - x^3 + eps (J x + h) + noise,
/// with gain g ramped linearly. Best effort; binarized by sign every step.
SolveResult soft_spin_anneal(const IsingProblem& problem, const SoftSpinOptions& options,
                             std::uint64_t seed);

class BruteForceBackend final : public SolverBackend {
 public:
  explicit BruteForceBackend(std::size_t cap = kDefaultBruteForceCap) : cap_(cap) {}
  std::string name() const override { return "brute"; }
  SolveResult solve(const IsingProblem& problem, std::uint64_t seed) const override;
  nlohmann::json config() const override;
  std::size_t capacity() const override { return cap_; }

 private:
  std::size_t cap_;
};

class SimulatedAnnealingBackend final : public SolverBackend {
 public:
  explicit SimulatedAnnealingBackend(AnnealOptions options = {});
  std::string name() const override;
  SolveResult solve(const IsingProblem& problem, std::uint64_t seed) const override;
  nlohmann::json config() const override;
  const AnnealOptions& options() const { return options_; }

 private:
  AnnealOptions options_;
};

class SoftSpinBackend final : public SolverBackend {
 public:
  explicit SoftSpinBackend(SoftSpinOptions options = {});
  std::string name() const override { return "softspin"; }
  SolveResult solve(const IsingProblem& problem, std::uint64_t seed) const override;
  nlohmann::json config() const override;

 private:
  SoftSpinOptions options_;
};

/// Builds a backend from its name ("brute", "sa", "glauber", "softspin") and
/// a JSON configuration object; missing keys take defaults.
std::unique_ptr<SolverBackend> make_backend(const std::string& name,
                                            const nlohmann::json& config = nlohmann::json::object());

}  // namespace qama
