#include "qama/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace qama {

Shape::Shape(std::size_t batch, std::size_t heads, std::size_t seq_len,
             std::size_t dim)
    : batch_(batch), heads_(heads), seq_len_(seq_len), dim_(dim) {
  if (batch == 0 || heads == 0 || seq_len == 0 || dim == 0) {
    throw ShapeError("shape dimensions must all be positive, got " +
                     to_string(*this));
  }
}

std::string to_string(const Shape& shape) {
  return fmt::format("(B={}, H={}, N={}, D={})", shape.batch(), shape.heads(),
                     shape.seq_len(), shape.dim());
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  const std::size_t expected = std::accumulate(
      dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
  if (expected != data_.size()) {
    throw ShapeError(fmt::format("tensor dims {} need {} values, got {}",
                                 dims_, expected, data_.size()));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> dims) {
  const std::size_t n = std::accumulate(dims.begin(), dims.end(),
                                        std::size_t{1}, std::multiplies<>());
  return Tensor(std::move(dims), std::vector<double>(n, 0.0));
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != dims_.size()) {
    throw IndexError(fmt::format("rank {} tensor indexed with {} indices",
                                 dims_.size(), index.size()));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= dims_[axis]) {
      throw IndexError(fmt::format("index {} out of range for axis {} of size {}",
                                   i, axis, dims_[axis]));
    }
    flat = flat * dims_[axis] + i;
    ++axis;
  }
  return flat;
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(index)];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {

Shape shape_of(const Tensor& t, const char* name) {
  if (t.rank() != 4) {
    throw ShapeError(fmt::format("{} must be rank 4 (B x H x N x D), got rank {}",
                                 name, t.rank()));
  }
  const auto& d = t.dims();
  return Shape(d[0], d[1], d[2], d[3]);
}

Tensor batch_slice(const Tensor& t, std::size_t b) {
  const auto& d = t.dims();
  if (b >= d[0]) {
    throw IndexError(fmt::format("batch index {} out of range [0, {})", b, d[0]));
  }
  const std::size_t stride = d[1] * d[2] * d[3];
  auto first = t.data().begin() + static_cast<std::ptrdiff_t>(b * stride);
  return Tensor({d[1], d[2], d[3]},
                std::vector<double>(first, first + static_cast<std::ptrdiff_t>(stride)));
}

}  // namespace

AttentionInput::AttentionInput(Tensor query, Tensor key, Tensor value,
                               Tensor field_weights)
    : shape_(shape_of(query, "Q")),
      query_(std::move(query)),
      key_(std::move(key)),
      value_(std::move(value)),
      field_weights_(std::move(field_weights)) {
  if (!(shape_of(key_, "K") == shape_) || !(shape_of(value_, "V") == shape_)) {
    throw ShapeError("Q, K and V must share one shape");
  }
  const auto& w = field_weights_.dims();
  if (w.size() != 2 || w[0] != shape_.dim() || w[1] != 1) {
    throw ShapeError(fmt::format("W_eps must be {} x 1, got dims {}",
                                 shape_.dim(), w));
  }
  if (!query_.all_finite() || !key_.all_finite() || !value_.all_finite() ||
      !field_weights_.all_finite()) {
    throw ValidationError("attention input contains non-finite values");
  }
}

Tensor AttentionInput::query_slice(std::size_t b) const { return batch_slice(query_, b); }
Tensor AttentionInput::key_slice(std::size_t b) const { return batch_slice(key_, b); }
Tensor AttentionInput::value_slice(std::size_t b) const { return batch_slice(value_, b); }

void CoefficientConfig::validate() const {
  if (!(rho0 >= 0.0 && rho0 <= 1.0)) {
    throw ValidationError(fmt::format("rho0 must lie in [0, 1], got {}", rho0));
  }
  if (!(lambda0 >= 0.0 && lambda0 <= 1.0)) {
    throw ValidationError(fmt::format("lambda0 must lie in [0, 1], got {}", lambda0));
  }
}

std::size_t flat_index(std::size_t head, std::size_t token, const Shape& shape) {
  if (head >= shape.heads() || token >= shape.seq_len()) {
    throw IndexError(fmt::format("(head {}, token {}) outside H={}, N={}", head,
                                 token, shape.heads(), shape.seq_len()));
  }
  return head * shape.seq_len() + token;
}

HeadToken unflatten_index(std::size_t flat, const Shape& shape) {
  if (flat >= shape.qubits()) {
    throw IndexError(fmt::format("flat index {} outside [0, {})", flat, shape.qubits()));
  }
  return {flat / shape.seq_len(), flat % shape.seq_len()};
}

SelectionMask::SelectionMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw ValidationError("selection mask entries must be 0 or 1");
  }
}

SelectionMask SelectionMask::zeros(std::size_t n) {
  return SelectionMask(std::vector<std::uint8_t>(n, 0));
}

std::size_t SelectionMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

SelectionMask SelectionMask::flipped(std::size_t k) const {
  if (k >= bits_.size()) throw IndexError("mask flip index out of range");
  auto bits = bits_;
  bits[k] ^= 1;
  return SelectionMask(std::move(bits));
}

SpinState::SpinState(std::vector<std::int8_t> spins) : spins_(std::move(spins)) {
  for (auto s : spins_) {
    if (s != 1 && s != -1) throw ValidationError("spins must be -1 or +1");
  }
}

SpinState SpinState::all_down(std::size_t n) {
  return SpinState(std::vector<std::int8_t>(n, -1));
}

SpinState SpinState::flipped(std::size_t k) const {
  SpinState out = *this;
  out.flip(k);
  return out;
}

void SpinState::flip(std::size_t k) {
  if (k >= spins_.size()) throw IndexError("spin flip index out of range");
  spins_[k] = static_cast<std::int8_t>(-spins_[k]);
}

SpinState mask_to_spins(const SelectionMask& mask) {
  std::vector<std::int8_t> spins(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    spins[k] = static_cast<std::int8_t>(2 * mask[k] - 1);
  }
  return SpinState(std::move(spins));
}

SelectionMask spins_to_mask(const SpinState& spins) {
  std::vector<std::uint8_t> bits(spins.size());
  for (std::size_t k = 0; k < spins.size(); ++k) {
    bits[k] = static_cast<std::uint8_t>((1 + spins[k]) / 2);
  }
  return SelectionMask(std::move(bits));
}

std::string to_string(const SelectionMask& mask) {
  std::string out;
  out.reserve(mask.size());
  for (auto b : mask.bits()) out.push_back(b ? '1' : '0');
  return out;
}

}  // namespace qama
