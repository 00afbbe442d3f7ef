#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qama {

// Error taxonomy shared by every module.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct CapacityError : std::length_error {
  using std::length_error::length_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Problem dimensions of one attention instance.
/// batch, heads, seq_len and dim are all at least 1.
class Shape {
 public:
  Shape(std::size_t batch, std::size_t heads, std::size_t seq_len,
        std::size_t dim);

  std::size_t batch() const { return batch_; }
  std::size_t heads() const { return heads_; }
  std::size_t seq_len() const { return seq_len_; }
  std::size_t dim() const { return dim_; }

  /// Binary variables per batch element (heads * seq_len).
  std::size_t qubits() const { return heads_ * seq_len_; }

  bool operator==(const Shape&) const = default;

 private:
  std::size_t batch_;
  std::size_t heads_;
  std::size_t seq_len_;
  std::size_t dim_;
};

std::string to_string(const Shape& shape);

/// Dense row-major tensor of doubles. Immutable once constructed.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> dims, std::vector<double> data);

  static Tensor zeros(std::vector<std::size_t> dims);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  std::span<const double> data() const { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }

  /// Bounds-checked multi-index access.
  double at(std::initializer_list<std::size_t> index) const;
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

/// Q, K, V of shape B x H x N x D plus the D x 1 field projection W_eps.
class AttentionInput {
 public:
  AttentionInput(Tensor query, Tensor key, Tensor value, Tensor field_weights);

  const Shape& shape() const { return shape_; }
  const Tensor& query() const { return query_; }
  const Tensor& key() const { return key_; }
  const Tensor& value() const { return value_; }
  const Tensor& field_weights() const { return field_weights_; }

  /// H x N x D slice of one batch element.
  Tensor query_slice(std::size_t b) const;
  Tensor key_slice(std::size_t b) const;
  Tensor value_slice(std::size_t b) const;

 private:
  Shape shape_;
  Tensor query_;
  Tensor key_;
  Tensor value_;
  Tensor field_weights_;
};

/// Static coefficients rho0 (linear term) and lambda0 (head penalty), both in
/// [0, 1].
struct CoefficientConfig {
  double rho0 = 0.16;
  double lambda0 = 0.8;

  void validate() const;
};

/// Row-major (head, token) flattening: t * N + i.
std::size_t flat_index(std::size_t head, std::size_t token, const Shape& shape);

struct HeadToken {
  std::size_t head;
  std::size_t token;
  bool operator==(const HeadToken&) const = default;
};
HeadToken unflatten_index(std::size_t flat, const Shape& shape);

class SpinState;

/// Binary selection s in {0,1}^{H*N}; bit k is head k / N, token k % N.
class SelectionMask {
 public:
  SelectionMask() = default;
  explicit SelectionMask(std::vector<std::uint8_t> bits);
  static SelectionMask zeros(std::size_t n);

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t k) const { return bits_[k]; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::size_t count() const;

  SelectionMask flipped(std::size_t k) const;

  bool operator==(const SelectionMask&) const = default;
  auto operator<=>(const SelectionMask&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Spin configuration sigma in {-1,+1}^{H*N}.
class SpinState {
 public:
  SpinState() = default;
  explicit SpinState(std::vector<std::int8_t> spins);
  static SpinState all_down(std::size_t n);

  std::size_t size() const { return spins_.size(); }
  std::int8_t operator[](std::size_t k) const { return spins_[k]; }
  const std::vector<std::int8_t>& spins() const { return spins_; }

  SpinState flipped(std::size_t k) const;
  void flip(std::size_t k);

  bool operator==(const SpinState&) const = default;

 private:
  std::vector<std::int8_t> spins_;
};

/// sigma = 2 s - 1.
SpinState mask_to_spins(const SelectionMask& mask);
/// s = (1 + sigma) / 2.
SelectionMask spins_to_mask(const SpinState& spins);

std::string to_string(const SelectionMask& mask);

}  // namespace qama
