// SPDX-License-Identifier: Apache-2.0
#include "geofno/tensor.hpp"

#include <cstring>
#include <sstream>

#include "geofno/error.hpp"

namespace geofno {

std::string to_string(Dtype dtype) {
  return dtype == Dtype::kReal64 ? "real64" : "complex128";
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

namespace {

std::shared_ptr<const detail::TensorNode> make_node(Shape shape, Dtype dtype, std::vector<double> raw) {
  const std::size_t expected = shape_numel(shape) * (dtype == Dtype::kComplex128 ? 2 : 1);
  if (raw.size() != expected) {
    throw DimensionError("data length " + std::to_string(raw.size()) + " does not match shape " +
                         shape_string(shape));
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->dtype = dtype;
  node->data = std::make_shared<const std::vector<double>>(std::move(raw));
  return node;
}

const detail::TensorNode& require(const std::shared_ptr<const detail::TensorNode>& node) {
  if (!node) throw DimensionError("use of an undefined tensor");
  return *node;
}

}  // namespace

Tensor::Tensor() = default;

Tensor::Tensor(Shape shape, std::vector<double> values)
    : node_(make_node(std::move(shape), Dtype::kReal64, std::move(values))) {}

Tensor::Tensor(Shape shape, std::vector<complex> values) {
  std::vector<double> raw(values.size() * 2);
  std::memcpy(raw.data(), values.data(), raw.size() * sizeof(double));
  node_ = make_node(std::move(shape), Dtype::kComplex128, std::move(raw));
}

Tensor Tensor::zeros(Shape shape, Dtype dtype) {
  const std::size_t n = shape_numel(shape) * (dtype == Dtype::kComplex128 ? 2 : 1);
  return from_raw(std::move(shape), dtype, std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::from_raw(Shape shape, Dtype dtype, std::vector<double> raw) {
  return Tensor(make_node(std::move(shape), dtype, std::move(raw)));
}

const Shape& Tensor::shape() const { return require(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

Dtype Tensor::dtype() const { return require(node_).dtype; }

std::span<const double> Tensor::real() const {
  const auto& n = require(node_);
  if (n.dtype != Dtype::kReal64) throw DtypeError("expected a real64 tensor, got complex128");
  return {n.data->data(), n.data->size()};
}

std::span<const complex> Tensor::cplx() const {
  const auto& n = require(node_);
  if (n.dtype != Dtype::kComplex128) throw DtypeError("expected a complex128 tensor, got real64");
  return {reinterpret_cast<const complex*>(n.data->data()), n.data->size() / 2};
}

std::span<const double> Tensor::raw() const {
  const auto& n = require(node_);
  return {n.data->data(), n.data->size()};
}

double Tensor::item() const {
  auto r = real();
  if (r.size() != 1) throw DimensionError("item() requires a single-element tensor, got " + shape_string(shape()));
  return r[0];
}

std::vector<double> Tensor::to_vector() const {
  auto r = real();
  return {r.begin(), r.end()};
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor Tensor::with_grad(bool enabled) const {
  auto node = std::make_shared<detail::TensorNode>();
  const auto& src = require(node_);
  node->shape = src.shape;
  node->dtype = src.dtype;
  node->data = src.data;
  node->requires_grad = enabled;
  return Tensor(std::move(node));
}

Tensor Tensor::detach() const { return with_grad(false); }

bool Tensor::bitwise_equal(const Tensor& other) const {
  if (!defined() || !other.defined()) return defined() == other.defined();
  if (shape() != other.shape() || dtype() != other.dtype()) return false;
  auto a = raw();
  auto b = other.raw();
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace geofno
