#include "qama/problem.hpp"

#include <fmt/format.h>

namespace qama {

namespace {

void check_pairs(const PairCoefficients& pairs, std::size_t n, const char* what) {
  for (const auto& [key, value] : pairs) {
    if (key.first >= key.second) {
      throw ValidationError(fmt::format("{} key ({}, {}) must satisfy p < q", what,
                                        key.first, key.second));
    }
    if (key.second >= n) {
      throw IndexError(fmt::format("{} key ({}, {}) outside n = {}", what, key.first,
                                   key.second, n));
    }
  }
}

void check_state_size(std::size_t got, std::size_t n) {
  if (got != n) {
    throw ShapeError(fmt::format("state has {} variables, problem has {}", got, n));
  }
}

}  // namespace

QuboProblem::QuboProblem(std::size_t n, PairCoefficients quad,
                         std::vector<double> linear, double offset,
                         std::optional<Shape> shape)
    : n_(n),
      quad_(std::move(quad)),
      linear_(std::move(linear)),
      offset_(offset),
      shape_(std::move(shape)) {
  if (linear_.size() != n_) {
    throw ShapeError(fmt::format("linear has {} entries, n = {}", linear_.size(), n_));
  }
  check_pairs(quad_, n_, "quadratic");
  if (shape_ && shape_->qubits() != n_) {
    throw ShapeError("problem size does not match H * N of its shape");
  }
}

double QuboProblem::energy(const SelectionMask& x) const {
  check_state_size(x.size(), n_);
  double e = offset_;
  for (std::size_t p = 0; p < n_; ++p) {
    if (x[p]) e += linear_[p];
  }
  for (const auto& [key, value] : quad_) {
    if (x[key.first] && x[key.second]) e += value;
  }
  return e;
}

IsingProblem::IsingProblem(std::size_t n, PairCoefficients couplings,
                           std::vector<double> fields, double offset,
                           std::optional<Shape> shape)
    : n_(n),
      couplings_(std::move(couplings)),
      fields_(std::move(fields)),
      offset_(offset),
      shape_(std::move(shape)),
      adjacency_(n) {
  if (fields_.size() != n_) {
    throw ShapeError(fmt::format("fields has {} entries, n = {}", fields_.size(), n_));
  }
  check_pairs(couplings_, n_, "coupling");
  if (shape_ && shape_->qubits() != n_) {
    throw ShapeError("problem size does not match H * N of its shape");
  }
  for (const auto& [key, value] : couplings_) {
    adjacency_[key.first].push_back({key.second, value});
    adjacency_[key.second].push_back({key.first, value});
  }
}

double IsingProblem::energy(const SpinState& sigma) const {
  check_state_size(sigma.size(), n_);
  double e = offset_;
  for (std::size_t p = 0; p < n_; ++p) e -= fields_[p] * sigma[p];
  for (const auto& [key, value] : couplings_) {
    e -= value * sigma[key.first] * sigma[key.second];
  }
  return e;
}

double IsingProblem::energy(const SelectionMask& x) const {
  return energy(mask_to_spins(x));
}

double IsingProblem::local_field(const SpinState& sigma, std::size_t k) const {
  double f = fields_[k];
  for (const auto& nb : adjacency_[k]) f += nb.coupling * sigma[nb.index];
  return f;
}

IsingProblem to_ising(const QuboProblem& qubo) {
  // c x_p           = c/2 + (c/2) s_p
  // Q x_p x_q       = Q/4 (1 + s_p + s_q + s_p s_q)
  // and E = -J s s - h s + offset, so J = -Q/4 and h = -(c/2 + sum Q/4).
  const std::size_t n = qubo.size();
  std::vector<double> fields(n, 0.0);
  double offset = qubo.offset();
  for (std::size_t p = 0; p < n; ++p) {
    const double c = qubo.linear()[p];
    offset += c / 2.0;
    fields[p] -= c / 2.0;
  }
  PairCoefficients couplings;
  for (const auto& [key, value] : qubo.quadratic()) {
    const double quarter = value / 4.0;
    offset += quarter;
    fields[key.first] -= quarter;
    fields[key.second] -= quarter;
    couplings.emplace(key, -quarter);
  }
  return IsingProblem(n, std::move(couplings), std::move(fields), offset, qubo.shape());
}

double energy(const QuboProblem& problem, const SelectionMask& state) {
  return problem.energy(state);
}

double energy(const IsingProblem& problem, const SpinState& state) {
  return problem.energy(state);
}

FlipDelta flip_delta(const IsingProblem& problem, const SpinState& state,
                     std::size_t k) {
  check_state_size(state.size(), problem.size());
  if (k >= problem.size()) {
    throw IndexError(fmt::format("flip site {} outside [0, {})", k, problem.size()));
  }
  const double s = state[k];
  return {k, 2.0 * s * problem.local_field(state, k),
          s < 0 ? FlipDirection::kRaise : FlipDirection::kLower};
}

}  // namespace qama
