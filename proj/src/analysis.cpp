#include "qama/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace qama {

double default_success_tolerance(double ground_energy) {
  return 1e-6 * std::max(1.0, std::abs(ground_energy));
}

double estimate_success_probability(const IsingProblem& problem,
                                    const SolverBackend& backend, std::size_t runs,
                                    double ground_energy, std::optional<double> tol,
                                    std::uint64_t first_seed) {
  if (runs == 0) throw ArgumentError("success probability needs at least one run");
  const double threshold = ground_energy + tol.value_or(default_success_tolerance(ground_energy));
  std::size_t hits = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    const SolveResult res = backend.solve(problem, first_seed + r);
    if (res.best_energy <= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(runs);
}

TtsReport time_to_solution(double p_success, double t_ann) {
  if (!(t_ann > 0.0) || !std::isfinite(t_ann)) {
    throw ArgumentError(fmt::format("t_ann must be positive, got {}", t_ann));
  }
  if (!(p_success >= 0.0 && p_success <= 1.0)) {
    throw ArgumentError(fmt::format("p_success must lie in [0, 1], got {}", p_success));
  }
  TtsReport out{p_success, t_ann, std::nullopt, 0.0};
  if (p_success == 0.0) {
    out.t_sol = std::numeric_limits<double>::infinity();
    return out;
  }
  std::uint64_t runs = 1;
  if (p_success < 1.0) {
    double ratio = std::log(0.01) / std::log1p(-p_success);
    // 1 - p is rarely exact in binary (1 - 0.99 != 0.01), so a ratio that is an
    // integer up to rounding must not be pushed to the next integer by ceil.
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) ratio = nearest;
    runs = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(ratio)));
  }
  out.runs = runs;
  out.t_sol = t_ann * static_cast<double>(runs);
  return out;
}

namespace {

struct PathCost {
  double barrier = std::numeric_limits<double>::infinity();
  double uphill = std::numeric_limits<double>::infinity();
  std::size_t length = 0;
};

bool better(const PathCost& a, const PathCost& b) {
  constexpr double kEps = 1e-12;
  if (a.barrier < b.barrier - kEps) return true;
  if (a.barrier > b.barrier + kEps) return false;
  if (a.uphill < b.uphill - kEps) return true;
  if (a.uphill > b.uphill + kEps) return false;
  return a.length < b.length;
}

std::uint32_t encode(const SpinState& s) {
  std::uint32_t code = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] > 0) code |= std::uint32_t{1} << k;
  }
  return code;
}

SpinState decode(std::uint32_t code, std::size_t n) {
  std::vector<std::int8_t> spins(n);
  for (std::size_t k = 0; k < n; ++k) spins[k] = (code >> k) & 1U ? 1 : -1;
  return SpinState(std::move(spins));
}

}  // namespace

BarrierReport min_barrier(const IsingProblem& problem, const SpinState& start,
                          const SpinState& ground, std::optional<std::size_t> max_path_length) {
  const std::size_t n = problem.size();
  if (n > kBarrierCap) {
    throw CapacityError(fmt::format("barrier search over {} spins exceeds cap {}", n,
                                    kBarrierCap));
  }
  if (start.size() != n || ground.size() != n) {
    throw ShapeError("barrier endpoints must match the problem size");
  }
  const std::size_t limit = max_path_length.value_or(2 * n);
  const std::uint32_t states = std::uint32_t{1} << n;
  std::vector<double> energy(states);
  for (std::uint32_t c = 0; c < states; ++c) energy[c] = problem.energy(decode(c, n));

  const std::uint32_t source = encode(start);
  const std::uint32_t target = encode(ground);

  // Layered relaxation: best[c] is the best cost of reaching c in at most r
  // flips; pred[r][c] records the predecessor when layer r improved c.
  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<PathCost> best(states);
  best[source] = {0.0, 0.0, 0};
  std::vector<std::vector<std::uint32_t>> pred;
  pred.reserve(limit);
  for (std::size_t r = 0; r < limit; ++r) {
    std::vector<PathCost> next = best;
    std::vector<std::uint32_t> layer(states, kNone);
    bool changed = false;
    for (std::uint32_t c = 0; c < states; ++c) {
      if (!std::isfinite(best[c].barrier)) continue;
      for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t d = c ^ (std::uint32_t{1} << k);
        const double step = energy[d] - energy[c];
        const double up = std::max(0.0, step);
        const PathCost cand{std::max(best[c].barrier, up), best[c].uphill + up,
                            best[c].length + 1};
        if (better(cand, next[d])) {
          next[d] = cand;
          layer[d] = c;
          changed = true;
        }
      }
    }
    best = std::move(next);
    pred.push_back(std::move(layer));
    if (!changed) break;
  }

  BarrierReport out;
  if (!std::isfinite(best[target].barrier)) return out;
  out.reached = true;
  out.b_min = best[target].barrier;

  std::vector<std::size_t> path;
  std::uint32_t c = target;
  for (std::size_t r = pred.size(); r-- > 0;) {
    const std::uint32_t p = pred[r][c];
    if (p == kNone) continue;
    path.push_back(static_cast<std::size_t>(std::countr_zero(p ^ c)));
    c = p;
  }
  std::reverse(path.begin(), path.end());

  // Replay to report the witness's own statistics.
  SpinState s = start;
  double e = problem.energy(s);
  for (std::size_t k : path) {
    s.flip(k);
    const double next_e = problem.energy(s);
    const double up = std::max(0.0, next_e - e);
    out.b_u += up;
    out.max_step = std::max(out.max_step, up);
    e = next_e;
  }
  out.witness_path = std::move(path);
  out.flips = out.witness_path.size();
  return out;
}

}  // namespace qama
