#include <doctest.h>

#include <cmath>
#include <random>

#include "qama/experiment.hpp"
#include "qama/qama_operator.hpp"
#include "test_support.hpp"

using namespace qama;
using namespace qama::testing;

TEST_CASE("forward: zero mask gives zero energies") {
  // J = 0 (Q = 0) and strongly negative fields force s = 0.
  const Shape s(1, 2, 3, 1);
  const AttentionInput in(Tensor::zeros({1, 2, 3, 1}), Tensor::zeros({1, 2, 3, 1}),
                          Tensor({1, 2, 3, 1}, std::vector<double>(6, 1.0)), Tensor({1, 1}, {-5.0}));
  const BruteForceBackend brute;
  const ForwardResult r = forward(in, {0.5, 0.5}, brute, 0);
  CHECK(r.cache.masks[0] == SelectionMask::zeros(6));
  for (double v : r.output.e_token.data()) CHECK(v == 0.0);
  for (double v : r.output.e_dist.data()) CHECK(v == 0.0);
  CHECK(r.output.e_out[0] == 0.0);
  (void)s;
}

TEST_CASE("forward: single pair splits its energy between both tokens") {
  const AttentionInput in(Tensor({1, 1, 2, 1}, {1.0, 2.0}), Tensor({1, 1, 2, 1}, {1.0, 1.0}),
                          Tensor({1, 1, 2, 1}, {0.0, 0.0}), Tensor({1, 1}, {0.0}));
  const ForwardResult r = forward(in, {0.16, 0.8}, BruteForceBackend{}, 0);
  CHECK(r.cache.couplings[0](0, 0, 1) == 2.0);
  CHECK(r.cache.masks[0] == SelectionMask({1, 1}));
  CHECK(r.output.e_token.at({0, 0, 0}) == -1.0);
  CHECK(r.output.e_token.at({0, 0, 1}) == -1.0);
  CHECK(r.output.e_out[0] == -2.0);
}

TEST_CASE("forward: energy identities on random instances") {
  const SimulatedAnnealingBackend sa;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Shape shape(3, 2, 4, 3);
    const AttentionInput in = random_input(shape, seed);
    const CoefficientConfig cfg{0.16, 0.8};
    const ForwardResult r = forward(in, cfg, sa, seed);
    CHECK(r.output.e_dist.dims() == in.value().dims());
    for (std::size_t b = 0; b < shape.batch(); ++b) {
      double sum = 0.0;
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t i = 0; i < 4; ++i) sum += r.output.e_token.at({b, t, i});
      CHECK(std::abs(sum - r.output.e_out[b]) <= 1e-9);
      const auto& c = r.cache.coefficients[b];
      const EnergyBreakdown br =
          energy_breakdown(r.cache.masks[b], r.cache.couplings[b], r.cache.fields[b], c);
      CHECK(std::abs(r.output.e_out[b] - (-br.h_alpha - c.rho * br.h_beta)) <= 1e-9);
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t i = 0; i < 4; ++i)
          for (std::size_t d = 0; d < 3; ++d)
            CHECK(r.output.e_dist.at({b, t, i, d}) ==
                  r.output.e_token.at({b, t, i}) * in.field_weights().at({d, 0}));
    }
  }
}

TEST_CASE("penalty never enters the output energy") {
  const Shape shape(2, 3, 3, 2);
  const AttentionInput in = random_input(shape, 4);
  const ForwardResult r = forward(in, {0.2, 0.9}, BruteForceBackend{}, 0);
  for (double lambda0 : {0.0, 0.3, 1.0}) {
    const EnergyOutput again = energy_output(in, {0.2, lambda0}, r.cache.masks);
    CHECK(again.e_out == r.output.e_out);
    CHECK(again.e_dist == r.output.e_dist);
  }
}

TEST_CASE("scaling W_eps rescales both the field and the mapping paths") {
  const Shape shape(1, 2, 3, 2);
  const AttentionInput in = random_input(shape, 6);
  const CoefficientConfig cfg{0.5, 0.5};
  const ForwardResult r = forward(in, cfg, BruteForceBackend{}, 0);
  const double c = 3.0;
  std::vector<double> w(in.field_weights().data().begin(), in.field_weights().data().end());
  for (auto& x : w) x *= c;
  const AttentionInput scaled(in.query(), in.key(), in.value(), Tensor({2, 1}, w));
  const EnergyOutput out = energy_output(scaled, cfg, r.cache.masks);
  const auto& J = r.cache.couplings[0];
  const auto& h = r.cache.fields[0];
  const double rho = r.cache.coefficients[0].rho;
  const auto& s = r.cache.masks[0];
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t i = 0; i < 3; ++i) {
      double pair = 0.0;
      for (std::size_t j = 0; j < 3; ++j)
        if (j != i) pair += J(t, i, j) * s[t * 3 + j];
      const double e = -static_cast<double>(s[t * 3 + i]) * (0.5 * pair + rho * c * h(t, i));
      CHECK(out.e_token.at({0, t, i}) == doctest::Approx(e).epsilon(1e-12));
      for (std::size_t d = 0; d < 2; ++d)
        CHECK(out.e_dist.at({0, t, i, d}) == doctest::Approx(e * w[d]).epsilon(1e-12));
    }
}

TEST_CASE("batch elements are independent") {
  const Shape shape(3, 2, 4, 3);
  const AttentionInput in = random_input(shape, 8);
  auto permute = [](const Tensor& t, const std::vector<std::size_t>& perm) {
    const std::size_t stride = t.size() / t.dims()[0];
    std::vector<double> out(t.size());
    for (std::size_t b = 0; b < perm.size(); ++b)
      for (std::size_t x = 0; x < stride; ++x) out[b * stride + x] = t[perm[b] * stride + x];
    return Tensor(t.dims(), out);
  };
  const std::vector<std::size_t> perm{2, 0, 1};
  const AttentionInput shuffled(permute(in.query(), perm), permute(in.key(), perm),
                                permute(in.value(), perm), in.field_weights());
  const SimulatedAnnealingBackend sa;
  const ForwardResult a = forward(in, {}, sa, 3);
  const ForwardResult b = forward(shuffled, {}, sa, 3);
  CHECK(b.output.e_dist == permute(a.output.e_dist, perm));
  CHECK(b.output.e_out == permute(a.output.e_out, perm));
}

TEST_CASE("forward rejects problems beyond backend capacity") {
  const AttentionInput in = random_input(Shape(1, 2, 5, 2), 1);
  CHECK_THROWS_AS(forward(in, {}, BruteForceBackend{8}, 0), CapacityError);
  CHECK_THROWS_AS(forward(in, {1.5, 0.5}, BruteForceBackend{}, 0), ValidationError);
}

TEST_CASE("backward: zero upstream gradient and zero masks give zero gradients") {
  const Shape shape(2, 2, 3, 4);
  const AttentionInput in = random_input(shape, 12);
  const ForwardResult r = forward(in, {}, BruteForceBackend{}, 0);
  const GradientBundle zero = backward(Tensor::zeros({2, 2, 3, 4}), r.cache);
  for (const Tensor* t : {&zero.d_query, &zero.d_key, &zero.d_value, &zero.d_field_weights})
    for (double v : t->data()) CHECK(v == 0.0);

  ForwardCache masked = r.cache;
  masked.masks.assign(2, SelectionMask::zeros(6));
  std::mt19937_64 rng(1);
  const GradientBundle gated = backward(random_tensor({2, 2, 3, 4}, rng), masked);
  for (const Tensor* t : {&gated.d_query, &gated.d_key, &gated.d_value, &gated.d_field_weights})
    for (double v : t->data()) CHECK(v == 0.0);

  CHECK_THROWS_AS(backward(Tensor::zeros({2, 2, 3, 3}), r.cache), ShapeError);
}

TEST_CASE("backward matches central finite differences") {
  std::mt19937_64 rng(2718);
  std::size_t failed = 0;
  std::size_t checked = 0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const Shape shape(1 + trial % 2, 1 + trial % 2, 2 + trial % 3, 1 + trial % 4);
    const AttentionInput in = random_input(shape, 500 + trial);
    // Field-favoured coefficients keep several tokens selected per head.
    const CoefficientConfig cfg{0.6, 0.3};
    const ForwardResult r = forward(in, cfg, BruteForceBackend{}, trial);
    const Tensor g = random_tensor(in.value().dims(), rng);
    const GradStats stats = check_gradients(in, cfg, r.cache, g);
    checked += stats.checked;
    failed += stats.failed;
  }
  CHECK(checked > 0);
  CHECK(failed == 0);
}

TEST_CASE("backward is exact on a fully selected mask") {
  // Every pair active exercises the whole interaction path.
  const Shape shape(1, 2, 4, 3);
  const AttentionInput in = random_input(shape, 99);
  const CoefficientConfig cfg{0.4, 0.5};
  ForwardResult r = forward(in, cfg, BruteForceBackend{}, 0);
  r.cache.masks.assign(1, SelectionMask(std::vector<std::uint8_t>(8, 1)));
  std::mt19937_64 rng(5);
  const GradStats stats = check_gradients(in, cfg, r.cache, random_tensor({1, 2, 4, 3}, rng));
  CHECK(stats.failed == 0);
}

TEST_CASE("extract_head_masks") {
  const auto maps = extract_head_masks(SelectionMask({1, 0, 0, 1}), 2, 2);
  CHECK(maps == std::vector<std::vector<std::uint8_t>>{{1, 0}, {0, 1}});
  const auto ones = extract_head_masks(SelectionMask(std::vector<std::uint8_t>(6, 1)), 3, 2);
  for (const auto& row : ones) CHECK(row == std::vector<std::uint8_t>{1, 1});

  std::mt19937_64 rng(3);
  const SelectionMask m = random_mask(12, rng);
  std::vector<std::uint8_t> flat;
  for (const auto& row : extract_head_masks(m, 3, 4)) flat.insert(flat.end(), row.begin(), row.end());
  CHECK(SelectionMask(flat) == m);
  CHECK_THROWS_AS(extract_head_masks(m, 5, 2), ShapeError);

  const ForwardResult r = forward(random_input(Shape(2, 2, 2, 2), 1), {}, BruteForceBackend{}, 0);
  const auto per_batch = extract_head_masks(r.cache);
  REQUIRE(per_batch.size() == 2);
  CHECK(per_batch[1] == extract_head_masks(r.cache.masks[1], 2, 2));
}
