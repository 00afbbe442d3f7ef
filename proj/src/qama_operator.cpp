#include "qama/qama_operator.hpp"

#include <fmt/format.h>

#include "qama/problem.hpp"

namespace qama {

namespace {

struct ElementModel {
  CouplingTensor coupling;
  FieldVector field;
  DynamicCoefficients coeff;
};

ElementModel build_element(const AttentionInput& input, const CoefficientConfig& cfg,
                           std::size_t b) {
  return {compute_coupling(input.query_slice(b), input.key_slice(b)),
          compute_field(input.value_slice(b), input.field_weights()),
          dynamic_coefficients(input.shape(), cfg)};
}

// Writes e_token for one element into `e_token` (H * N values) and returns
// their sum.
double element_energy(const SelectionMask& mask, const CouplingTensor& coupling,
                      const FieldVector& field, const DynamicCoefficients& coeff,
                      double* e_token) {
  const std::size_t heads = coupling.heads();
  const std::size_t n = coupling.seq_len();
  double total = 0.0;
  for (std::size_t t = 0; t < heads; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = t * n + i;
      double e = 0.0;
      if (mask[k]) {
        double pair = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i && mask[t * n + j]) pair += coupling(t, i, j);
        }
        e = -(0.5 * pair + coeff.rho * field(t, i));
      }
      e_token[k] = e;
      total += e;
    }
  }
  return total;
}

EnergyOutput assemble_output(const AttentionInput& input, const std::vector<SelectionMask>& masks,
                             const std::vector<ElementModel>& models) {
  const Shape& shape = input.shape();
  const std::size_t B = shape.batch();
  const std::size_t HN = shape.qubits();
  const std::size_t D = shape.dim();
  const auto w = input.field_weights().data();

  std::vector<double> e_token(B * HN);
  std::vector<double> e_out(B);
  std::vector<double> e_dist(B * HN * D);
  for (std::size_t b = 0; b < B; ++b) {
    e_out[b] = element_energy(masks[b], models[b].coupling, models[b].field, models[b].coeff,
                              e_token.data() + b * HN);
    for (std::size_t k = 0; k < HN; ++k) {
      const double e = e_token[b * HN + k];
      for (std::size_t d = 0; d < D; ++d) e_dist[(b * HN + k) * D + d] = e * w[d];
    }
  }
  return {Tensor({B, shape.heads(), shape.seq_len()}, std::move(e_token)),
          Tensor({B}, std::move(e_out)),
          Tensor({B, shape.heads(), shape.seq_len(), D}, std::move(e_dist))};
}

void check_masks(const Shape& shape, const std::vector<SelectionMask>& masks) {
  if (masks.size() != shape.batch()) {
    throw ShapeError(fmt::format("{} masks for batch of {}", masks.size(), shape.batch()));
  }
  for (const auto& m : masks) {
    if (m.size() != shape.qubits()) {
      throw ShapeError(fmt::format("mask of {} bits, expected {}", m.size(), shape.qubits()));
    }
  }
}

}  // namespace

ForwardResult forward(const AttentionInput& input, const CoefficientConfig& cfg,
                      const SolverBackend& backend, std::uint64_t seed) {
  cfg.validate();
  const Shape& shape = input.shape();
  if (shape.qubits() > backend.capacity()) {
    throw CapacityError(fmt::format("{} qubits per element exceed backend '{}' capacity {}",
                                    shape.qubits(), backend.name(), backend.capacity()));
  }
  std::vector<ElementModel> models;
  std::vector<SelectionMask> masks;
  std::vector<SolveResult> solves;
  for (std::size_t b = 0; b < shape.batch(); ++b) {
    models.push_back(build_element(input, cfg, b));
    const auto& m = models.back();
    const QuboProblem qubo = assemble_qubo(m.coupling, m.field, m.coeff, shape);
    solves.push_back(backend.solve(to_ising(qubo), seed));
    masks.push_back(solves.back().best_state);
  }
  EnergyOutput output = assemble_output(input, masks, models);

  ForwardCache cache{input, cfg, std::move(masks), {}, {}, {}, std::move(solves)};
  for (auto& m : models) {
    cache.couplings.push_back(std::move(m.coupling));
    cache.fields.push_back(std::move(m.field));
    cache.coefficients.push_back(m.coeff);
  }
  return {std::move(output), std::move(cache)};
}

EnergyOutput energy_output(const AttentionInput& input, const CoefficientConfig& cfg,
                           const std::vector<SelectionMask>& masks) {
  cfg.validate();
  check_masks(input.shape(), masks);
  std::vector<ElementModel> models;
  for (std::size_t b = 0; b < input.shape().batch(); ++b) {
    models.push_back(build_element(input, cfg, b));
  }
  return assemble_output(input, masks, models);
}

GradientBundle backward(const Tensor& grad_e_dist, const ForwardCache& cache) {
  const AttentionInput& input = cache.input;
  const Shape& shape = input.shape();
  const std::size_t B = shape.batch();
  const std::size_t H = shape.heads();
  const std::size_t N = shape.seq_len();
  const std::size_t D = shape.dim();
  const std::vector<std::size_t> expected{B, H, N, D};
  if (grad_e_dist.dims() != expected) {
    throw ShapeError("gradient of e_dist must have the shape of V");
  }
  check_masks(shape, cache.masks);

  const auto q = input.query().data();
  const auto k = input.key().data();
  const auto v = input.value().data();
  const auto w = input.field_weights().data();
  const auto g = grad_e_dist.data();

  std::vector<double> dq(B * H * N * D, 0.0);
  std::vector<double> dk(B * H * N * D, 0.0);
  std::vector<double> dv(B * H * N * D, 0.0);
  std::vector<double> dw(D, 0.0);

  std::vector<double> g_token(N);
  std::vector<double> scores(N * N);
  std::vector<double> d_pair(N * N);
  std::vector<double> d_scores(N * N);

  for (std::size_t b = 0; b < B; ++b) {
    const SelectionMask& s = cache.masks[b];
    const CouplingTensor& J = cache.couplings[b];
    const FieldVector& h = cache.fields[b];
    const double rho = cache.coefficients[b].rho;

    for (std::size_t t = 0; t < H; ++t) {
      const std::size_t row0 = (b * H + t) * N;  // first (b, t, i) row
      const std::uint8_t* sel = s.bits().data() + t * N;

      for (std::size_t i = 0; i < N; ++i) {
        double acc = 0.0;
        for (std::size_t d = 0; d < D; ++d) acc += g[(row0 + i) * D + d] * w[d];
        g_token[i] = acc;

        // Mapping path: e_dist = e_token * W^T.
        if (sel[i]) {
          double pair = 0.0;
          for (std::size_t j = 0; j < N; ++j) {
            if (j != i && sel[j]) pair += J(t, i, j);
          }
          const double e = -(0.5 * pair + rho * h(t, i));
          for (std::size_t d = 0; d < D; ++d) dw[d] += g[(row0 + i) * D + d] * e;
        }
      }

      // Field path: dL/dh_i = -rho G_i s_i, h = V W.
      for (std::size_t i = 0; i < N; ++i) {
        if (!sel[i]) continue;
        const double dh = -rho * g_token[i];
        for (std::size_t d = 0; d < D; ++d) {
          dv[(row0 + i) * D + d] += dh * w[d];
          dw[d] += dh * v[(row0 + i) * D + d];
        }
      }

      // Interaction path. J_ij (== J_ji) enters tokens i and j, each with
      // weight -1/2 s_i s_j, so dL/dJ_ij = -1/2 s_i s_j (G_i + G_j).
      bool any_pair = false;
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
          double val = 0.0;
          if (i != j && sel[i] && sel[j]) {
            val = -0.5 * (g_token[i] + g_token[j]);
            any_pair = true;
          }
          d_pair[i * N + j] = val;
        }
      }
      if (!any_pair) continue;

      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < D; ++c) acc += q[(row0 + i) * D + c] * k[(row0 + j) * D + c];
          scores[i * N + j] = acc;
        }
      }
      // J_ij = sum_c S_ic S_jc / (2D) over unordered pairs, so
      // dS_ic = sum_{j != i} dJ_ij S_jc / (2D).
      const double inv = 1.0 / (2.0 * static_cast<double>(D));
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t c = 0; c < N; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < N; ++j) acc += d_pair[i * N + j] * scores[j * N + c];
          d_scores[i * N + c] = acc * inv;
        }
      }
      // S = Q K^T.
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t c = 0; c < N; ++c) {
          const double ds = d_scores[i * N + c];
          if (ds == 0.0) continue;
          for (std::size_t e = 0; e < D; ++e) {
            dq[(row0 + i) * D + e] += ds * k[(row0 + c) * D + e];
            dk[(row0 + c) * D + e] += ds * q[(row0 + i) * D + e];
          }
        }
      }
    }
  }

  return {Tensor(expected, std::move(dq)), Tensor(expected, std::move(dk)),
          Tensor(expected, std::move(dv)), Tensor({D, 1}, std::move(dw))};
}

std::vector<std::vector<std::uint8_t>> extract_head_masks(const SelectionMask& mask,
                                                          std::size_t heads,
                                                          std::size_t seq_len) {
  if (mask.size() != heads * seq_len) {
    throw ShapeError(fmt::format("mask of {} bits cannot be split into {} x {}", mask.size(),
                                 heads, seq_len));
  }
  std::vector<std::vector<std::uint8_t>> out(heads);
  for (std::size_t t = 0; t < heads; ++t) {
    out[t].assign(mask.bits().begin() + static_cast<std::ptrdiff_t>(t * seq_len),
                  mask.bits().begin() + static_cast<std::ptrdiff_t>((t + 1) * seq_len));
  }
  return out;
}

std::vector<std::vector<std::vector<std::uint8_t>>> extract_head_masks(
    const ForwardCache& cache) {
  const Shape& shape = cache.input.shape();
  std::vector<std::vector<std::vector<std::uint8_t>>> out;
  for (const auto& m : cache.masks) {
    out.push_back(extract_head_masks(m, shape.heads(), shape.seq_len()));
  }
  return out;
}

}  // namespace qama
