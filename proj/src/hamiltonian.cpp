#include "qama/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace qama {

namespace {

void require_finite(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError(fmt::format("{} has non-finite entries", what));
  }
}

void require_head_slice(const Tensor& t, const char* name) {
  if (t.rank() != 3) {
    throw ShapeError(fmt::format("{} must be an H x N x D slice, got rank {}", name,
                                 t.rank()));
  }
}

}  // namespace

CouplingTensor::CouplingTensor(std::size_t heads, std::size_t seq_len,
                               std::vector<double> values)
    : heads_(heads), seq_len_(seq_len), values_(std::move(values)) {
  if (values_.size() != heads_ * seq_len_ * seq_len_) {
    throw ShapeError("coupling tensor needs H * N * N values");
  }
  require_finite(values_, "coupling tensor");
}

double CouplingTensor::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

FieldVector::FieldVector(std::size_t heads, std::size_t seq_len,
                         std::vector<double> values)
    : heads_(heads), seq_len_(seq_len), values_(std::move(values)) {
  if (values_.size() != heads_ * seq_len_) {
    throw ShapeError("field vector needs H * N values");
  }
  require_finite(values_, "field vector");
}

CouplingTensor compute_coupling(const Tensor& query, const Tensor& key) {
  require_head_slice(query, "Q");
  require_head_slice(key, "K");
  if (query.dims() != key.dims()) throw ShapeError("Q and K slices differ in shape");
  const std::size_t heads = query.dims()[0];
  const std::size_t n = query.dims()[1];
  const std::size_t d = query.dims()[2];
  const auto q = query.data();
  const auto k = key.data();

  std::vector<double> values(heads * n * n, 0.0);
  std::vector<double> scores(n * n);
  for (std::size_t t = 0; t < heads; ++t) {
    const std::size_t base = t * n * d;
    // scores = Q_t K_t^T
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += q[base + i * d + c] * k[base + j * d + c];
        scores[i * n + j] = acc;
      }
    }
    double* out = values.data() + t * n * n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += scores[i * n + c] * scores[j * n + c];
        acc /= 2.0 * static_cast<double>(d);
        out[i * n + j] = acc;
        out[j * n + i] = acc;
      }
    }
  }
  return CouplingTensor(heads, n, std::move(values));
}

FieldVector compute_field(const Tensor& value, const Tensor& field_weights) {
  require_head_slice(value, "V");
  const std::size_t heads = value.dims()[0];
  const std::size_t n = value.dims()[1];
  const std::size_t d = value.dims()[2];
  const auto& w = field_weights.dims();
  if (w.size() != 2 || w[0] != d || w[1] != 1) {
    throw ShapeError(fmt::format("W_eps must be {} x 1", d));
  }
  const auto v = value.data();
  const auto weights = field_weights.data();
  std::vector<double> h(heads * n, 0.0);
  for (std::size_t row = 0; row < heads * n; ++row) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += v[row * d + c] * weights[c];
    h[row] = acc;
  }
  return FieldVector(heads, n, std::move(h));
}

DynamicCoefficients dynamic_coefficients(const Shape& shape,
                                         const CoefficientConfig& cfg) {
  cfg.validate();
  const double n = static_cast<double>(shape.seq_len());
  DynamicCoefficients out;
  out.rho = n * cfg.rho0;
  if (shape.heads() < 2) {
    out.lambda = 0.0;
    out.penalty_disabled = true;
  } else {
    const double sqrt_2_over_pi = std::sqrt(2.0 / std::numbers::pi);
    out.lambda = n * sqrt_2_over_pi / static_cast<double>(shape.heads() - 1) * cfg.lambda0;
  }
  return out;
}

SubtermMaxima expected_max_subterms(const Shape& shape) {
  const double h = static_cast<double>(shape.heads());
  const double n = static_cast<double>(shape.seq_len());
  const double c = std::sqrt(1.0 / (2.0 * std::numbers::pi));
  return {h * n * n * c, h * n * c, h * (h - 1.0) * n / 2.0};
}

double positive_part_mean(std::span<const double> samples) {
  if (samples.empty()) throw ArgumentError("positive_part_mean needs samples");
  double acc = 0.0;
  for (double x : samples) acc += std::max(0.0, x);
  return acc / static_cast<double>(samples.size());
}

QuboProblem assemble_qubo(const CouplingTensor& coupling, const FieldVector& field,
                          const DynamicCoefficients& coeff, const Shape& shape) {
  const std::size_t heads = shape.heads();
  const std::size_t n = shape.seq_len();
  if (coupling.heads() != heads || coupling.seq_len() != n || field.heads() != heads ||
      field.seq_len() != n) {
    throw ShapeError("coupling/field dimensions do not match shape " + to_string(shape));
  }
  PairCoefficients quad;
  std::vector<double> linear(shape.qubits(), 0.0);
  for (std::size_t t = 0; t < heads; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      linear[t * n + i] = -coeff.rho * field(t, i);
      for (std::size_t j = i + 1; j < n; ++j) {
        const double jv = coupling(t, i, j);
        if (jv != 0.0) quad[{t * n + i, t * n + j}] += -jv;
      }
    }
  }
  if (!coeff.penalty_disabled && coeff.lambda != 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t1 = 0; t1 < heads; ++t1) {
        for (std::size_t t2 = t1 + 1; t2 < heads; ++t2) {
          quad[{t1 * n + i, t2 * n + i}] += coeff.lambda;
        }
      }
    }
  }
  return QuboProblem(shape.qubits(), std::move(quad), std::move(linear), 0.0,
                     Shape(1, heads, n, shape.dim()));
}

EnergyBreakdown energy_breakdown(const SelectionMask& mask,
                                 const CouplingTensor& coupling,
                                 const FieldVector& field,
                                 const DynamicCoefficients& coeff) {
  const std::size_t heads = coupling.heads();
  const std::size_t n = coupling.seq_len();
  if (mask.size() != heads * n || field.heads() != heads || field.seq_len() != n) {
    throw ShapeError("mask, coupling and field sizes disagree");
  }
  EnergyBreakdown out;
  for (std::size_t t = 0; t < heads; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[t * n + i]) continue;
      out.h_beta += field(t, i);
      for (std::size_t j = i + 1; j < n; ++j) {
        if (mask[t * n + j]) out.h_alpha += coupling(t, i, j);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t1 = 0; t1 < heads; ++t1) {
      for (std::size_t t2 = t1 + 1; t2 < heads; ++t2) {
        if (mask[t1 * n + i] && mask[t2 * n + i]) out.h_gamma += 1.0;
      }
    }
  }
  const double lambda = coeff.penalty_disabled ? 0.0 : coeff.lambda;
  out.total = -out.h_alpha - coeff.rho * out.h_beta + lambda * out.h_gamma;
  return out;
}

}  // namespace qama
