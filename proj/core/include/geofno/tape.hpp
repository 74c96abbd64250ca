// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "geofno/tensor.hpp"

namespace geofno {

/// Reverse-mode gradient recorder.
///
/// Constructing a Tape makes it the active recorder of the calling thread
/// until it is destroyed (tapes nest like a stack). Every differentiable
/// operation whose inputs include a grad-enabled leaf, or the output of an
/// earlier recorded operation, appends an entry. `backward` replays the
/// entries in reverse exactly once.
///
/// Gradients are held by the tape, not by the tensors, so parameter tensors
/// can be shared by several threads each owning its own tape. Complex
/// gradients store (dL/dRe, dL/dIm) in the real and imaginary slots.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Seeds dL/dL = 1 for a real scalar and propagates to every input.
  void backward(const Tensor& loss);
  /// Seeds the given cotangent for a tensor of any shape.
  void backward(const Tensor& output, const Tensor& seed);

  /// Gradient of the last backward pass w.r.t. `t`, if it received one.
  std::optional<Tensor> grad(const Tensor& t) const;
  /// Same as grad(), with zeros when `t` did not take part in the loss.
  Tensor grad_or_zeros(const Tensor& t) const;

  std::size_t size() const noexcept { return entries_.size(); }
  /// Drops every entry, saved intermediate and gradient.
  void clear();

  /// The innermost tape of the calling thread, or nullptr.
  static Tape* active() noexcept;

  using BackwardFn =
      std::function<void(std::span<const double> grad_out, std::span<const std::span<double>> grad_in)>;

  // Used by operation implementations; see detail::record.
  void push(std::vector<std::shared_ptr<const detail::TensorNode>> inputs,
            std::shared_ptr<const detail::TensorNode> output, BackwardFn fn);

 private:
  struct Entry {
    std::vector<std::shared_ptr<const detail::TensorNode>> inputs;
    std::shared_ptr<const detail::TensorNode> output;
    BackwardFn fn;
  };

  std::vector<double>& grad_buffer(const detail::TensorNode* node);

  std::vector<Entry> entries_;
  std::unordered_map<const detail::TensorNode*, std::vector<double>> grads_;
  std::vector<std::shared_ptr<const detail::TensorNode>> seeded_;
  Tape* previous_ = nullptr;
  bool consumed_ = false;
};

/// Suspends recording on the calling thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

/// True when `t` is a grad-enabled leaf or the output of a recorded op.
bool needs_grad(const Tensor& t);
bool recording_enabled();

/// Attaches `fn` as the backward rule of `output` when any input needs a
/// gradient and a tape is active; otherwise returns `output` unchanged.
/// Also rejects non-finite results.
Tensor record(Tensor output, std::initializer_list<Tensor> inputs, Tape::BackwardFn fn);
Tensor record(Tensor output, const std::vector<Tensor>& inputs, Tape::BackwardFn fn);

void check_finite(const Tensor& t, const char* op);

}  // namespace detail

}  // namespace geofno
