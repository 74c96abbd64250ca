// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace geofno {

using complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

enum class Dtype : std::uint8_t { kReal64 = 0, kComplex128 = 1 };

std::string to_string(Dtype dtype);
std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

// Storage is shared between tensors that alias the same values (a leaf and
// its grad-enabled view, a reshape). It is never written after construction.
struct TensorNode {
  Shape shape;
  Dtype dtype = Dtype::kReal64;
  std::shared_ptr<const std::vector<double>> data;
  bool requires_grad = false;
  bool recorded = false;
};

}  // namespace detail

/// Dense row-major real64 or complex128 array.
///
/// A Tensor is an immutable value: operations return new tensors and never
/// touch their inputs, so tensors may be shared freely across threads.
/// Complex values are stored interleaved (re, im) and exposed either as
/// `std::complex<double>` or as the raw double sequence.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> values);
  Tensor(Shape shape, std::vector<complex> values);

  static Tensor zeros(Shape shape, Dtype dtype = Dtype::kReal64);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  /// Builds a tensor of either dtype from its raw (interleaved) doubles.
  static Tensor from_raw(Shape shape, Dtype dtype, std::vector<double> raw);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  Dtype dtype() const;
  bool is_complex() const { return dtype() == Dtype::kComplex128; }

  std::span<const double> real() const;
  std::span<const complex> cplx() const;
  std::span<const double> raw() const;
  double item() const;
  std::vector<double> to_vector() const;

  /// Leaf flag: gradients are accumulated for this tensor by an active Tape.
  bool requires_grad() const;
  /// A leaf sharing this tensor's storage with the grad flag set as given.
  Tensor with_grad(bool enabled = true) const;
  /// A copy of the values cut off from any recorded history.
  Tensor detach() const;

  /// True when both tensors carry identical shape, dtype and bit patterns.
  bool bitwise_equal(const Tensor& other) const;

  const detail::TensorNode* node() const noexcept { return node_.get(); }
  const std::shared_ptr<const detail::TensorNode>& node_ptr() const noexcept { return node_; }
  explicit Tensor(std::shared_ptr<const detail::TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<const detail::TensorNode> node_;
};

}  // namespace geofno
