// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "geofno/tensor.hpp"

namespace geofno::ops {

enum class Elementwise { kAdd, kSub, kMul, kGelu, kSin };

/// Dispatches one of the elementwise kernels below. Binary kernels require
/// `b`; unary kernels ignore it.
Tensor elementwise(Elementwise op, const Tensor& a, const std::optional<Tensor>& b = std::nullopt);

// Binary ops broadcast when one operand is a scalar or its shape is a
// trailing suffix of the other's (e.g. [N x C] + [C]).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor square(const Tensor& a);

/// Exact GeLU, x * Phi(x). Real input only.
Tensor gelu(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);

/// x - floor(x): wraps coordinates onto the unit torus. The derivative is
/// taken as 1 everywhere.
Tensor wrap_unit(const Tensor& a);

/// Plain 2-D matrix product, real x real or complex x complex.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Pointwise affine map over the last axis: x[..., in] W[in, out] + bias[out].
Tensor linear(const Tensor& x, const Tensor& weight, const std::optional<Tensor>& bias = std::nullopt);

Tensor reshape(const Tensor& a, Shape shape);
/// Concatenates along the last axis; leading dimensions must agree.
Tensor concat_last(const std::vector<Tensor>& parts);
/// Columns [begin, end) of the last axis.
Tensor slice_last(const Tensor& a, std::size_t begin, std::size_t end);
/// Stacks equally shaped tensors along a new leading axis.
Tensor stack(const std::vector<Tensor>& parts);
/// The `index`-th slab along the leading axis.
Tensor select(const Tensor& a, std::size_t index);
/// Repeats a vector [C] into rows [rows x C].
Tensor repeat_rows(const Tensor& v, std::size_t rows);
/// Repeats each row of a [B x C] matrix n times: [B x n x C].
Tensor expand_rows(const Tensor& a, std::size_t n);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor real_part(const Tensor& a);
Tensor imag_part(const Tensor& a);
Tensor to_complex(const Tensor& a);

}  // namespace geofno::ops
