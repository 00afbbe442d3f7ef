#include "qama/annealer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "rng.hpp"

namespace qama {

namespace {

SpinState random_spins(std::size_t n, detail::Rng& rng) {
  std::vector<std::int8_t> spins(n);
  for (auto& s : spins) s = rng.coin() ? 1 : -1;
  return SpinState(std::move(spins));
}

std::vector<double> local_fields(const IsingProblem& problem, const SpinState& sigma) {
  std::vector<double> lf(problem.size());
  for (std::size_t k = 0; k < problem.size(); ++k) lf[k] = problem.local_field(sigma, k);
  return lf;
}

// Applies an accepted flip of site k to the spin vector and the cached local
// fields of its neighbours.
void apply_flip(const IsingProblem& problem, std::vector<std::int8_t>& spins,
                std::vector<double>& lf, std::size_t k) {
  spins[k] = static_cast<std::int8_t>(-spins[k]);
  const double change = 2.0 * spins[k];
  for (const auto& nb : problem.neighbors(k)) lf[nb.index] += nb.coupling * change;
}

}  // namespace

void AnnealSchedule::validate() const {
  if (!(beta_start > 0.0) || !std::isfinite(beta_start)) {
    throw ArgumentError(fmt::format("beta_start must be positive, got {}", beta_start));
  }
  if (!(beta_end >= beta_start) || !std::isfinite(beta_end)) {
    throw ArgumentError(fmt::format("beta_end ({}) must be >= beta_start ({})", beta_end,
                                    beta_start));
  }
  if (sweeps == 0) throw ArgumentError("schedule needs at least one sweep");
}

double AnnealSchedule::beta(std::size_t sweep) const {
  if (sweeps <= 1) return beta_end;
  if (sweep + 1 >= sweeps) return beta_end;
  if (sweep == 0) return beta_start;
  const double frac = static_cast<double>(sweep) / static_cast<double>(sweeps - 1);
  if (interpolation == Interpolation::kLinear) {
    return beta_start + (beta_end - beta_start) * frac;
  }
  return beta_start * std::pow(beta_end / beta_start, frac);
}

SolveResult brute_force(const IsingProblem& problem, std::size_t cap) {
  const std::size_t n = problem.size();
  if (n > cap) {
    throw CapacityError(fmt::format("brute force over {} variables exceeds cap {}", n, cap));
  }
  if (n > 62) throw CapacityError("brute force limited to 62 variables");

  // Gray-code walk from the all-zero mask. `key` orders states
  // lexicographically with bit 0 as the most significant character.
  std::vector<std::int8_t> spins(n, -1);
  SpinState start(spins);
  std::vector<double> lf = local_fields(problem, start);
  double current = problem.energy(start);
  std::uint64_t key = 0;
  double best = current;
  std::uint64_t best_key = 0;

  const std::uint64_t total = std::uint64_t{1} << n;
  constexpr std::uint64_t kResync = 4096;
  for (std::uint64_t g = 1; g < total; ++g) {
    const auto k = static_cast<std::size_t>(std::countr_zero(g));
    current += 2.0 * spins[k] * lf[k];
    apply_flip(problem, spins, lf, k);
    key ^= std::uint64_t{1} << (n - 1 - k);
    if (g % kResync == 0) {
      // Bound accumulated rounding in the incremental updates.
      SpinState now(spins);
      lf = local_fields(problem, now);
      current = problem.energy(now);
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(best));
    if (current < best - tol || (current <= best + tol && key < best_key)) {
      best = current;
      best_key = key;
    }
  }

  std::vector<std::uint8_t> bits(n);
  for (std::size_t p = 0; p < n; ++p) bits[p] = (best_key >> (n - 1 - p)) & 1U;
  SolveResult out;
  out.best_state = SelectionMask(std::move(bits));
  out.best_energy = problem.energy(out.best_state);
  out.sweeps_used = 1;
  out.backend = "brute";
  return out;
}

SolveResult brute_force(const QuboProblem& problem, std::size_t cap) {
  if (problem.size() > cap) {
    throw CapacityError(fmt::format("brute force over {} variables exceeds cap {}",
                                    problem.size(), cap));
  }
  SolveResult out = brute_force(to_ising(problem), cap);
  out.best_energy = problem.energy(out.best_state);
  return out;
}

double acceptance_probability(AcceptanceRule rule, double beta, double delta) {
  if (rule == AcceptanceRule::kMetropolis) {
    return delta <= 0.0 ? 1.0 : std::exp(-beta * delta);
  }
  return 1.0 / (1.0 + std::exp(beta * delta));
}

SolveResult simulated_anneal(const IsingProblem& problem, const AnnealOptions& options,
                             std::uint64_t seed) {
  options.schedule.validate();
  const std::size_t n = problem.size();
  detail::Rng rng(seed);

  SpinState init = random_spins(n, rng);
  std::vector<std::int8_t> spins = init.spins();
  std::vector<double> lf = local_fields(problem, init);
  double current = problem.energy(init);
  std::vector<std::int8_t> best_spins = spins;
  double best = current;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  SolveResult out;
  if (options.record_trace) out.energy_trace.reserve(options.schedule.sweeps);
  for (std::size_t sweep = 0; sweep < options.schedule.sweeps; ++sweep) {
    const double beta = options.schedule.beta(sweep);
    if (options.order == SiteOrder::kRandom) {
      for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[rng.engine()() % i]);
      }
    }
    for (std::size_t k : order) {
      const double delta = 2.0 * spins[k] * lf[k];
      bool accept;
      if (options.acceptance == AcceptanceRule::kMetropolis && delta <= 0.0) {
        accept = true;
      } else {
        accept = rng.uniform() < acceptance_probability(options.acceptance, beta, delta);
      }
      if (!accept) continue;
      apply_flip(problem, spins, lf, k);
      current += delta;
      if (current < best) {
        best = current;
        best_spins = spins;
      }
    }
    if (options.record_trace) out.energy_trace.push_back(current);
  }

  out.best_state = spins_to_mask(SpinState(std::move(best_spins)));
  out.best_energy = problem.energy(out.best_state);
  out.sweeps_used = options.schedule.sweeps;
  out.seed = seed;
  out.backend = options.acceptance == AcceptanceRule::kMetropolis ? "sa" : "glauber";
  return out;
}

void SoftSpinOptions::validate() const {
  if (steps == 0) throw ArgumentError("soft-spin needs at least one step");
  if (!(dt > 0.0)) throw ArgumentError("soft-spin dt must be positive");
  if (!(noise >= 0.0)) throw ArgumentError("soft-spin noise must be nonnegative");
  if (!(amplitude_clamp > 0.0)) throw ArgumentError("soft-spin clamp must be positive");
}

SolveResult soft_spin_anneal(const IsingProblem& problem, const SoftSpinOptions& options,
                             std::uint64_t seed) {
  options.validate();
  const std::size_t n = problem.size();
  detail::Rng rng(seed);

  double scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double row = std::abs(problem.fields()[k]);
    for (const auto& nb : problem.neighbors(k)) row += std::abs(nb.coupling);
    scale = std::max(scale, row);
  }
  const double eps = scale > 0.0 ? options.coupling_strength / scale : 0.0;

  std::vector<double> x(n);
  for (auto& v : x) v = 0.01 * rng.normal();
  std::vector<double> drive(n);
  std::vector<std::int8_t> signs(n, -1);
  std::vector<std::int8_t> best_signs = signs;
  double best = problem.energy(SpinState(signs));
  const double noise_scale = options.noise * std::sqrt(options.dt);

  for (std::size_t step = 0; step < options.steps; ++step) {
    const double frac = options.steps > 1
                            ? static_cast<double>(step) / static_cast<double>(options.steps - 1)
                            : 1.0;
    const double gain = options.gain_start + (options.gain_end - options.gain_start) * frac;
    for (std::size_t k = 0; k < n; ++k) {
      double f = problem.fields()[k];
      for (const auto& nb : problem.neighbors(k)) f += nb.coupling * x[nb.index];
      drive[k] = f;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double force = (gain - 1.0) * x[k] - x[k] * x[k] * x[k] + eps * drive[k];
      x[k] += options.dt * force + noise_scale * rng.normal();
      x[k] = std::clamp(x[k], -options.amplitude_clamp, options.amplitude_clamp);
      signs[k] = x[k] >= 0.0 ? 1 : -1;
    }
    const double e = problem.energy(SpinState(signs));
    if (e < best) {
      best = e;
      best_signs = signs;
    }
  }

  SolveResult out;
  out.best_state = spins_to_mask(SpinState(std::move(best_signs)));
  out.best_energy = problem.energy(out.best_state);
  out.sweeps_used = options.steps;
  out.seed = seed;
  out.backend = "softspin";
  return out;
}

SolveResult BruteForceBackend::solve(const IsingProblem& problem, std::uint64_t seed) const {
  SolveResult out = brute_force(problem, cap_);
  out.seed = seed;
  return out;
}

nlohmann::json BruteForceBackend::config() const { return {{"cap", cap_}}; }

SimulatedAnnealingBackend::SimulatedAnnealingBackend(AnnealOptions options)
    : options_(std::move(options)) {
  options_.schedule.validate();
}

std::string SimulatedAnnealingBackend::name() const {
  return options_.acceptance == AcceptanceRule::kMetropolis ? "sa" : "glauber";
}

SolveResult SimulatedAnnealingBackend::solve(const IsingProblem& problem,
                                             std::uint64_t seed) const {
  return simulated_anneal(problem, options_, seed);
}

nlohmann::json SimulatedAnnealingBackend::config() const {
  const auto& s = options_.schedule;
  return {{"beta_start", s.beta_start},
          {"beta_end", s.beta_end},
          {"sweeps", s.sweeps},
          {"interpolation", s.interpolation == Interpolation::kLinear ? "linear" : "geometric"},
          {"order", options_.order == SiteOrder::kRandom ? "random" : "sequential"},
          {"record_trace", options_.record_trace}};
}

SoftSpinBackend::SoftSpinBackend(SoftSpinOptions options) : options_(options) {
  options_.validate();
}

SolveResult SoftSpinBackend::solve(const IsingProblem& problem, std::uint64_t seed) const {
  return soft_spin_anneal(problem, options_, seed);
}

nlohmann::json SoftSpinBackend::config() const {
  return {{"steps", options_.steps},
          {"dt", options_.dt},
          {"gain_start", options_.gain_start},
          {"gain_end", options_.gain_end},
          {"coupling_strength", options_.coupling_strength},
          {"noise", options_.noise},
          {"amplitude_clamp", options_.amplitude_clamp}};
}

std::unique_ptr<SolverBackend> make_backend(const std::string& name,
                                            const nlohmann::json& config) {
  if (!config.is_object()) throw ArgumentError("backend config must be a JSON object");
  if (name == "brute") {
    return std::make_unique<BruteForceBackend>(
        config.value("cap", kDefaultBruteForceCap));
  }
  if (name == "sa" || name == "glauber") {
    AnnealOptions opt;
    opt.acceptance = name == "sa" ? AcceptanceRule::kMetropolis : AcceptanceRule::kGlauber;
    opt.schedule.beta_start = config.value("beta_start", opt.schedule.beta_start);
    opt.schedule.beta_end = config.value("beta_end", opt.schedule.beta_end);
    opt.schedule.sweeps = config.value("sweeps", opt.schedule.sweeps);
    const std::string interp = config.value("interpolation", std::string("geometric"));
    if (interp == "linear") {
      opt.schedule.interpolation = Interpolation::kLinear;
    } else if (interp != "geometric") {
      throw ArgumentError("unknown interpolation '" + interp + "'");
    }
    const std::string order = config.value("order", std::string("sequential"));
    if (order == "random") {
      opt.order = SiteOrder::kRandom;
    } else if (order != "sequential") {
      throw ArgumentError("unknown site order '" + order + "'");
    }
    opt.record_trace = config.value("record_trace", false);
    return std::make_unique<SimulatedAnnealingBackend>(opt);
  }
  if (name == "softspin") {
    SoftSpinOptions opt;
    opt.steps = config.value("steps", opt.steps);
    opt.dt = config.value("dt", opt.dt);
    opt.gain_start = config.value("gain_start", opt.gain_start);
    opt.gain_end = config.value("gain_end", opt.gain_end);
    opt.coupling_strength = config.value("coupling_strength", opt.coupling_strength);
    opt.noise = config.value("noise", opt.noise);
    opt.amplitude_clamp = config.value("amplitude_clamp", opt.amplitude_clamp);
    return std::make_unique<SoftSpinBackend>(opt);
  }
  throw ArgumentError("unknown backend '" + name + "' (expected brute, sa, glauber, softspin)");
}

}  // namespace qama
