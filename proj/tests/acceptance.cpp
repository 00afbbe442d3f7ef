// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and runtime
// budgets are fixed here; the exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qama/analysis.hpp"
#include "qama/experiment.hpp"
#include "qama/hamiltonian.hpp"
#include "qama/qama_operator.hpp"
#include "test_support.hpp"

using namespace qama;
using namespace qama::testing;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

constexpr double kExact = 1e-9;

Outcome basis_change() {
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  std::size_t states = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 12;
    const QuboProblem q = random_qubo(n, rng);
    const IsingProblem is = to_ising(q);
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
      const SelectionMask x = mask_from_code(code, n);
      worst = std::max(worst, std::abs(naive_qubo_energy(q, x) - naive_ising_energy(is, mask_to_spins(x))));
      ++states;
    }
  }
  return {worst <= kExact, fmt::format("50 problems, {} states, max |dE| = {:.3g}", states, worst)};
}

Outcome flip_deltas() {
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 16;
    const IsingProblem is = to_ising(random_qubo(n, rng, 0.5));
    const SpinState s = random_spins(n, rng);
    const std::size_t k = rng() % n;
    const double full = naive_ising_energy(is, s.flipped(k)) - naive_ising_energy(is, s);
    worst = std::max(worst, std::abs(flip_delta(is, s, k).delta - full));
  }
  return {worst <= kExact, fmt::format("1000 triples, max |delta error| = {:.3g}", worst)};
}

Outcome oracle_equivalence() {
  const SimulatedAnnealingBackend sa;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const QuboProblem q = build_problem(generate_instance(Shape(1, 2, 6, 4), seed), {});
    const double ground = enumerate_min_energy(q);
    const double found = sa.solve(to_ising(q), seed).best_energy;
    if (found <= ground + default_success_tolerance(ground)) ++hits;
  }
  return {hits >= 95, fmt::format("default SA hit the exhaustive ground energy on {}/100 runs", hits)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(1004);
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::size_t selected = 0;
  for (std::uint64_t trial = 0; trial < 24; ++trial) {
    const Shape shape(1, 1 + trial % 2, 2 + trial % 3, 1 + trial % 4);
    const AttentionInput in = random_input(shape, 9000 + trial);
    const CoefficientConfig cfg{0.6, 0.3};
    const ForwardResult r = forward(in, cfg, SimulatedAnnealingBackend{}, trial);
    selected += r.cache.masks[0].count();
    const GradStats stats = check_gradients(in, cfg, r.cache, random_tensor(in.value().dims(), rng));
    checked += stats.checked;
    failed += stats.failed;
  }
  return {failed == 0 && selected > 0,
          fmt::format("24 instances, {} gradient entries, {} outside tolerance, {} selected bits",
                      checked, failed, selected)};
}

Outcome coefficient_formulas() {
  const DynamicCoefficients c = dynamic_coefficients(Shape(1, 2, 64, 4), {0.16, 0.8});
  const TtsReport t = time_to_solution(0.5, 1.0);
  const bool ok = c.rho == 10.24 && t.runs && *t.runs == 7 && t.t_sol == 7.0;
  return {ok, fmt::format("rho(N=64) = {:.17g}, TTS(0.5, 1) = {} runs", c.rho, t.runs ? *t.runs : 0)};
}

Outcome gaussian_expectation() {
  std::mt19937_64 rng(1006);
  std::normal_distribution<double> normal;
  std::vector<double> draws(1'000'000);
  for (auto& x : draws) x = normal(rng);
  const double mean = positive_part_mean(draws);
  const double target = 1.0 / std::sqrt(2.0 * M_PI);
  const double rel = std::abs(mean - target) / target;
  return {rel < 0.01, fmt::format("mean = {:.6f}, target = {:.6f}, rel err = {:.2e}", mean, target, rel)};
}

bool overlapping(std::uint64_t code, std::size_t n) {
  return ((code & ((std::uint64_t{1} << n) - 1)) & (code >> n)) != 0;
}

Outcome penalty_behavior() {
  std::size_t qualifying = 0;
  std::size_t ground_states = 0;
  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 400 && qualifying < 30; ++seed) {
    const std::size_t n = 2 + seed % 4;
    const Shape shape(1, 2, n, 4);
    const AttentionInput in = generate_instance(shape, seed);
    const CouplingTensor J = compute_coupling(in.query_slice(0), in.key_slice(0));
    const FieldVector h = compute_field(in.value_slice(0), in.field_weights());
    const DynamicCoefficients base = dynamic_coefficients(shape, {});
    const std::size_t bits = 2 * n;

    // Qualify: a head-disjoint selection attains the unpenalized optimum.
    const QuboProblem free = assemble_qubo(J, h, {base.rho, 0.0, true}, shape);
    double best = INFINITY;
    double best_disjoint = INFINITY;
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
      const double e = naive_qubo_energy(free, mask_from_code(code, bits));
      best = std::min(best, e);
      if (!overlapping(code, n)) best_disjoint = std::min(best_disjoint, e);
    }
    if (best_disjoint > best + kExact * std::max(1.0, std::abs(best))) continue;
    ++qualifying;

    const QuboProblem penalized =
        assemble_qubo(J, h, {base.rho, 1e3 * J.max_abs(), false}, shape);
    double ground = INFINITY;
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code)
      ground = std::min(ground, naive_qubo_energy(penalized, mask_from_code(code, bits)));
    const double tol = kExact * std::max(1.0, std::abs(ground));
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
      if (naive_qubo_energy(penalized, mask_from_code(code, bits)) > ground + tol) continue;
      ++ground_states;
      if (overlapping(code, n)) ++violations;
    }
    // The solver's own answer must be one of them.
    const SelectionMask solved = brute_force(penalized).best_state;
    std::uint64_t code = 0;
    for (std::size_t k = 0; k < bits; ++k) code |= std::uint64_t{solved[k]} << k;
    if (overlapping(code, n)) ++violations;
  }
  return {qualifying >= 20 && violations == 0,
          fmt::format("{} qualifying instances, {} ground states, {} with head overlap",
                      qualifying, ground_states, violations)};
}

Outcome ground_landscape() {
  double worst = INFINITY;
  std::size_t rows = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 3 + seed % 4;
    const QuboProblem q = build_problem(generate_instance(Shape(1, 2, n, 4), seed), {});
    const SelectionMask g = brute_force(q).best_state;
    const MutationLandscape land = mutation_landscape(q, g);
    for (const auto& r : land.rows) {
      // Recompute each mutated energy independently of the landscape code.
      const double base = naive_qubo_energy(q, g);
      const double delta = naive_qubo_energy(q, g.flipped(r.index)) - base;
      worst = std::min({worst, r.delta, delta});
      ++rows;
    }
  }
  return {worst >= -kExact, fmt::format("30 ground states, {} mutations, min delta = {:.3g}", rows, worst)};
}

Outcome determinism() {
  bool same = true;
  const AttentionInput in = generate_instance(Shape(2, 2, 5, 4), 77);
  same = same && in.query() == generate_instance(Shape(2, 2, 5, 4), 77).query();
  const IsingProblem is = to_ising(build_problem(in, {}, 1));
  for (const std::string name : {"sa", "glauber", "softspin", "brute"}) {
    const auto backend = make_backend(name);
    const SolveResult a = backend->solve(is, 5);
    const SolveResult b = backend->solve(is, 5);
    same = same && a.best_state == b.best_state && a.best_energy == b.best_energy;
  }
  const ForwardResult f1 = forward(in, {}, SimulatedAnnealingBackend{}, 5);
  const ForwardResult f2 = forward(in, {}, SimulatedAnnealingBackend{}, 5);
  same = same && f1.output.e_dist == f2.output.e_dist && f1.output.e_out == f2.output.e_out;
  std::mt19937_64 rng(3);
  const Tensor g = random_tensor(in.value().dims(), rng);
  const GradientBundle g1 = backward(g, f1.cache);
  const GradientBundle g2 = backward(g, f2.cache);
  same = same && g1.d_query == g2.d_query && g1.d_field_weights == g2.d_field_weights;

  ExperimentConfig cfg;
  cfg.instances = 3;
  cfg.runs = 3;
  const BenchReport b1 = benchmark_solvers(cfg);
  const BenchReport b2 = benchmark_solvers(cfg);
  for (std::size_t i = 0; i < b1.rows.size(); ++i)
    same = same && b1.rows[i].best_energy == b2.rows[i].best_energy && b1.rows[i].hit == b2.rows[i].hit;
  return {same, "solve, forward, backward and bench repeat bit-identically (CLI covered by cli_smoke)"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"qubo-ising exactness", 10.0, basis_change},
      {"incremental flip deltas", 5.0, flip_deltas},
      {"oracle equivalence", 60.0, oracle_equivalence},
      {"gradient check", 30.0, gradient_check},
      {"coefficient formulas", 1.0, coefficient_formulas},
      {"gaussian expectation", 5.0, gaussian_expectation},
      {"penalty behavior", 10.0, penalty_behavior},
      {"ground-state landscape", 5.0, ground_landscape},
      {"determinism", 10.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out{false, ""};
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool ok = out.ok && in_budget;
    if (!ok) ++failures;
    std::cout << fmt::format("{} {:<24} {:.3f}s/{:.0f}s  {}{}\n", ok ? "PASS" : "FAIL", c.name, secs,
                             c.budget_seconds, out.detail, in_budget ? "" : " [over budget]");
  }
  std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
