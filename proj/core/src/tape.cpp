// SPDX-License-Identifier: Apache-2.0
#include "geofno/tape.hpp"

#include <cmath>
#include <string>

#include "geofno/error.hpp"

namespace geofno {

namespace {

thread_local Tape* g_active_tape = nullptr;
thread_local bool g_grad_enabled = true;

}  // namespace

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() {
  if (g_active_tape == this) g_active_tape = previous_;
}

Tape* Tape::active() noexcept { return g_grad_enabled ? g_active_tape : nullptr; }

void Tape::push(std::vector<std::shared_ptr<const detail::TensorNode>> inputs,
                std::shared_ptr<const detail::TensorNode> output, BackwardFn fn) {
  if (consumed_) throw TapeError("cannot record onto a tape after backward(); clear() it first");
  entries_.push_back(Entry{std::move(inputs), std::move(output), std::move(fn)});
}

std::vector<double>& Tape::grad_buffer(const detail::TensorNode* node) {
  auto it = grads_.find(node);
  if (it == grads_.end()) {
    it = grads_.emplace(node, std::vector<double>(node->data->size(), 0.0)).first;
  }
  return it->second;
}

void Tape::backward(const Tensor& loss) {
  if (loss.is_complex() || loss.numel() != 1) {
    throw DimensionError("backward(loss) requires a real scalar, got " + shape_string(loss.shape()));
  }
  backward(loss, Tensor::full(loss.shape(), 1.0));
}

void Tape::backward(const Tensor& output, const Tensor& seed) {
  if (consumed_) throw TapeError("backward() may run only once per recording");
  if (seed.shape() != output.shape() || seed.dtype() != output.dtype()) {
    throw DimensionError("backward seed must match the output shape and dtype");
  }
  consumed_ = true;
  NoGradGuard no_grad;
  seeded_.push_back(output.node_ptr());
  {
    auto& g = grad_buffer(output.node());
    auto s = seed.raw();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i];
  }
  std::vector<std::span<double>> grad_in;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    auto found = grads_.find(it->output.get());
    if (found == grads_.end()) continue;
    grad_in.clear();
    bool any = false;
    for (const auto& in : it->inputs) {
      if (in->requires_grad || in->recorded) {
        auto& buf = grad_buffer(in.get());
        grad_in.emplace_back(buf.data(), buf.size());
        any = true;
      } else {
        grad_in.emplace_back();
      }
    }
    if (!any) continue;
    const auto& out = found->second;
    it->fn(std::span<const double>(out.data(), out.size()), grad_in);
  }
}

std::optional<Tensor> Tape::grad(const Tensor& t) const {
  auto it = grads_.find(t.node());
  if (it == grads_.end()) return std::nullopt;
  return Tensor::from_raw(t.shape(), t.dtype(), it->second);
}

Tensor Tape::grad_or_zeros(const Tensor& t) const {
  if (auto g = grad(t)) return *g;
  return Tensor::zeros(t.shape(), t.dtype());
}

void Tape::clear() {
  entries_.clear();
  grads_.clear();
  seeded_.clear();
  consumed_ = false;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

bool needs_grad(const Tensor& t) {
  return t.defined() && (t.node()->requires_grad || t.node()->recorded);
}

bool recording_enabled() { return Tape::active() != nullptr; }

void check_finite(const Tensor& t, const char* op) {
  for (double v : t.raw()) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + " produced a non-finite value");
  }
}

namespace {

template <typename Range>
Tensor record_impl(Tensor output, const Range& inputs, Tape::BackwardFn fn) {
  Tape* tape = Tape::active();
  if (!tape) return output;
  bool any = false;
  for (const auto& in : inputs) any = any || needs_grad(in);
  if (!any) return output;
  auto node = std::make_shared<TensorNode>(*output.node());
  node->requires_grad = false;
  node->recorded = true;
  std::vector<std::shared_ptr<const TensorNode>> in_nodes;
  in_nodes.reserve(std::size(inputs));
  for (const auto& in : inputs) in_nodes.push_back(in.node_ptr());
  tape->push(std::move(in_nodes), node, std::move(fn));
  return Tensor(std::move(node));
}

}  // namespace

Tensor record(Tensor output, std::initializer_list<Tensor> inputs, Tape::BackwardFn fn) {
  return record_impl(std::move(output), inputs, std::move(fn));
}

Tensor record(Tensor output, const std::vector<Tensor>& inputs, Tape::BackwardFn fn) {
  return record_impl(std::move(output), inputs, std::move(fn));
}

}  // namespace detail

}  // namespace geofno
