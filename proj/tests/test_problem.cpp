#include <doctest.h>

#include <cmath>
#include <random>

#include "qama/problem.hpp"
#include "test_support.hpp"

using namespace qama;
using namespace qama::testing;

TEST_CASE("problem construction validates keys and sizes") {
  CHECK_THROWS_AS(QuboProblem(2, {{{1, 0}, 1.0}}, {0, 0}), ValidationError);
  CHECK_THROWS_AS(QuboProblem(2, {{{0, 0}, 1.0}}, {0, 0}), ValidationError);
  CHECK_THROWS_AS(QuboProblem(2, {{{0, 2}, 1.0}}, {0, 0}), IndexError);
  CHECK_THROWS_AS(QuboProblem(2, {}, {0}), ShapeError);
  CHECK_THROWS_AS(IsingProblem(3, {}, {0, 0}), ShapeError);
  CHECK_THROWS_AS(QuboProblem(3, {}, {0, 0, 0}, 0.0, Shape(1, 2, 2, 1)), ShapeError);
}

TEST_CASE("energy examples") {
  const QuboProblem q(2, {{{0, 1}, -2.0}}, {0.0, 0.0}, 0.0);
  CHECK(q.energy(SelectionMask({1, 1})) == -2.0);
  const QuboProblem off(3, {{{0, 2}, 4.0}}, {1.0, 2.0, 3.0}, 1.25);
  CHECK(off.energy(SelectionMask::zeros(3)) == 1.25);
  CHECK_THROWS_AS(q.energy(SelectionMask::zeros(3)), ShapeError);
  const IsingProblem is(2, {}, {0.0, 0.0});
  CHECK_THROWS_AS(is.energy(SpinState::all_down(3)), ShapeError);
}

TEST_CASE("energy matches naive double loop on random pairs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    const QuboProblem q = random_qubo(n, rng);
    const SelectionMask x = random_mask(n, rng);
    CHECK(std::abs(energy(q, x) - naive_qubo_energy(q, x)) <= 1e-12);
    const IsingProblem is = to_ising(q);
    const SpinState s = random_spins(n, rng);
    CHECK(std::abs(energy(is, s) - naive_ising_energy(is, s)) <= 1e-12);
  }
}

TEST_CASE("to_ising single variable by hand") {
  const double c = 3.5;
  const IsingProblem is = to_ising(QuboProblem(1, {}, {c}, 0.0));
  CHECK(is.fields()[0] == -c / 2.0);
  CHECK(is.offset() == c / 2.0);
  CHECK(is.energy(SpinState({-1})) == 0.0);
  CHECK(is.energy(SpinState({1})) == c);
}

TEST_CASE("to_ising of the empty problem") {
  const IsingProblem is = to_ising(QuboProblem(0, {}, {}, 0.0));
  CHECK(is.size() == 0);
  CHECK(is.couplings().empty());
  CHECK(is.offset() == 0.0);
  CHECK(is.energy(SpinState{}) == 0.0);
}

TEST_CASE("basis change is exact on every state (n <= 12)") {
  std::mt19937_64 rng(12);
  for (std::size_t n : {1U, 2U, 5U, 10U, 12U}) {
    const QuboProblem q = random_qubo(n, rng);
    const IsingProblem is = to_ising(q);
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
      const SelectionMask x = mask_from_code(code, n);
      CHECK(std::abs(q.energy(x) - is.energy(mask_to_spins(x))) <= 1e-9);
    }
  }
}

TEST_CASE("flip_delta examples") {
  const IsingProblem isolated(1, {}, {1.0});
  const FlipDelta d = flip_delta(isolated, SpinState({-1}), 0);
  CHECK(d.delta == -2.0);
  CHECK(d.direction == FlipDirection::kRaise);
  CHECK(flip_delta(isolated, SpinState({1}), 0).direction == FlipDirection::kLower);

  const IsingProblem zero(4, {}, {0, 0, 0, 0});
  for (std::size_t k = 0; k < 4; ++k) CHECK(flip_delta(zero, SpinState({1, -1, 1, 1}), k).delta == 0.0);

  CHECK_THROWS_AS(flip_delta(zero, SpinState::all_down(4), 4), IndexError);
  CHECK_THROWS_AS(flip_delta(zero, SpinState::all_down(3), 0), ShapeError);
}

TEST_CASE("flip_delta equals full recompute and is antisymmetric") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 16;
    const IsingProblem is = to_ising(random_qubo(n, rng, 0.5));
    const SpinState s = random_spins(n, rng);
    const std::size_t k = rng() % n;
    const FlipDelta fwd = flip_delta(is, s, k);
    const SpinState t = s.flipped(k);
    CHECK(std::abs(fwd.delta - (naive_ising_energy(is, t) - naive_ising_energy(is, s))) <= 1e-9);
    const FlipDelta back = flip_delta(is, t, k);
    CHECK(std::abs(back.delta + fwd.delta) <= 1e-12);
    CHECK(back.direction != fwd.direction);
  }
}

TEST_CASE("adjacency lists mirror the coupling map") {
  const IsingProblem is(3, {{{0, 1}, 0.5}, {{1, 2}, -1.0}}, {0, 0, 0});
  CHECK(is.neighbors(0).size() == 1);
  CHECK(is.neighbors(1).size() == 2);
  CHECK(is.neighbors(2).size() == 1);
  CHECK(is.neighbors(2)[0].coupling == -1.0);
}
