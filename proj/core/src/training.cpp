// SPDX-License-Identifier: Apache-2.0
#include "geofno/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "geofno/blob.hpp"
#include "geofno/error.hpp"
#include "geofno/geometry.hpp"
#include "geofno/ops.hpp"
#include "geofno/rng.hpp"
#include "geofno/spectral.hpp"
#include "geofno/tape.hpp"

namespace geofno {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Per-sample relative errors of pred against truth, both [B x rows x c]
// flattened, with one mask per sample whose flags each cover rows / m rows.
struct RelL2Parts {
  std::vector<double> err_norm;
  std::vector<double> truth_norm;
};

RelL2Parts relative_parts(std::span<const double> p, std::span<const double> t, std::size_t batch,
                          std::size_t per_sample, std::size_t channels, const std::vector<Mask>* masks) {
  RelL2Parts parts{std::vector<double>(batch), std::vector<double>(batch)};
  const std::size_t rows = per_sample / channels;
  for (std::size_t b = 0; b < batch; ++b) {
    const Mask* m = masks ? &(*masks)[b] : nullptr;
    std::size_t span_rows = 1;
    if (m) {
      if (m->empty() || rows % m->size() != 0) {
        throw DimensionError("mask of length " + std::to_string(m->size()) + " does not tile " +
                             std::to_string(rows) + " rows");
      }
      span_rows = rows / m->size();
      if (std::none_of(m->begin(), m->end(), [](std::uint8_t f) { return f != 0; })) {
        throw DegenerateTargetError("relative L2 over an empty mask");
      }
    }
    double e2 = 0.0, t2 = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (m && !(*m)[r / span_rows]) continue;
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t i = b * per_sample + r * channels + c;
        const double e = p[i] - t[i];
        e2 += e * e;
        t2 += t[i] * t[i];
      }
    }
    if (!(t2 > 0.0)) throw DegenerateTargetError("relative L2 with a zero-norm target");
    parts.err_norm[b] = std::sqrt(e2);
    parts.truth_norm[b] = std::sqrt(t2);
  }
  return parts;
}

std::vector<std::string> with_extra(std::vector<std::string> v, const std::string& extra) {
  v.push_back(extra);
  return v;
}

struct Batch {
  Tensor points;
  Tensor fields;
  Tensor truth;
  std::optional<Tensor> design;
  std::optional<std::vector<Mask>> masks;
  std::size_t steps = 0;
};

Tensor stack_leading(const std::vector<const Tensor*>& parts) {
  const Shape& inner = parts.front()->shape();
  std::vector<double> raw;
  raw.reserve(parts.size() * parts.front()->numel());
  for (const Tensor* t : parts) {
    if (t->shape() != inner) {
      throw DimensionError("samples in one batch must share a shape: " + shape_string(inner) + " vs " +
                           shape_string(t->shape()));
    }
    const auto r = t->real();
    raw.insert(raw.end(), r.begin(), r.end());
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  return Tensor(std::move(shape), std::move(raw));
}

bool wants_design(const ModelConfig& c) {
  return c.io_mode == IoMode::kPointCloud && c.map == MapKind::kLearned && c.deform.conditioning > 0;
}

Batch make_batch(const DatasetBundle& data, std::span<const std::size_t> idx, const ModelConfig& cfg) {
  std::vector<const Tensor*> points, fields, truth, design;
  std::vector<Tensor> flat_points, flat_fields, flat_truth;
  const bool point_mode = cfg.io_mode == IoMode::kPointCloud;
  if (point_mode) {
    flat_points.reserve(idx.size());
    flat_fields.reserve(idx.size());
    flat_truth.reserve(idx.size());
  }
  Batch b;
  bool any_mask = false;
  for (std::size_t i : idx) any_mask = any_mask || data.records[i].mask.has_value();
  if (any_mask) b.masks.emplace();
  for (std::size_t i : idx) {
    const auto& r = data.records[i];
    if (point_mode) {
      const std::size_t n = r.geometry.point_count();
      flat_points.push_back(r.geometry.flat_points());
      flat_fields.push_back(ops::reshape(r.input, {n, r.input.numel() / n}));
      flat_truth.push_back(ops::reshape(r.output, {n, r.output.numel() / n}));
      points.push_back(&flat_points.back());
      fields.push_back(&flat_fields.back());
      truth.push_back(&flat_truth.back());
    } else {
      points.push_back(&r.geometry.points);
      fields.push_back(&r.input);
      truth.push_back(&r.output);
    }
    if (wants_design(cfg)) {
      if (!r.geometry.design_params) throw ConditioningError("record lacks the design parameters the model needs");
      design.push_back(&*r.geometry.design_params);
    }
    if (any_mask) b.masks->push_back(r.mask ? *r.mask : Mask(r.geometry.point_count(), 1));
  }
  b.points = stack_leading(points);
  b.fields = stack_leading(fields);
  b.truth = stack_leading(truth);
  if (!design.empty()) b.design = stack_leading(design);
  if (cfg.io_mode == IoMode::kSpatiotemporal) b.steps = b.truth.dim(3);
  return b;
}

Tensor predict(const GeoFnoModel& model, std::span<const Tensor> params, const Batch& b) {
  switch (model.config().io_mode) {
    case IoMode::kPointCloud: {
      PointBatch pb{b.points, b.fields, b.design, std::nullopt};
      return model.forward_points(params, pb);
    }
    case IoMode::kStructured: return model.forward_grid(params, b.points, b.fields);
    case IoMode::kSpatiotemporal: return model.forward_time(params, b.points, b.fields, b.steps);
  }
  throw ConfigError("unknown io_mode");
}

void check_compatible(const ModelConfig& cfg, const DatasetBundle& data, const char* role) {
  const auto& m = data.manifest;
  const std::string tag = std::string(role) + " set: ";
  const bool ok = cfg.io_mode == IoMode::kPointCloud ? m.io_mode != IoMode::kSpatiotemporal : m.io_mode == cfg.io_mode;
  if (!ok) throw ConfigError(tag + "bundle io_mode " + to_string(m.io_mode) + " does not fit a " +
                             to_string(cfg.io_mode) + " model");
  if (m.dim != cfg.dim) throw ConfigError(tag + "dimension mismatch between data and model");
  if (m.input_channels.size() != cfg.in_channels || m.output_channels.size() != cfg.out_channels) {
    throw ConfigError(tag + "channel counts differ between data (" + std::to_string(m.input_channels.size()) + " in, " +
                      std::to_string(m.output_channels.size()) + " out) and model (" +
                      std::to_string(cfg.in_channels) + " in, " + std::to_string(cfg.out_channels) + " out)");
  }
}

SampleRecord interpolate_record(const SampleRecord& r, std::size_t s, std::size_t ci, std::size_t co) {
  const Geometry cloud = r.geometry.kind == GeometryKind::kPointCloud ? r.geometry : r.geometry.as_point_cloud();
  const std::size_t n = cloud.point_count();
  if (cloud.dim() != 2) throw DimensionError("interpolation baseline supports 2-d data only");
  const Tensor in = ops::reshape(r.input, {n, ci});
  const Tensor out = ops::reshape(r.output, {n, co});
  const UniformGridField g = interp_to_uniform(cloud, ops::concat_last({in, out}), s);
  std::vector<double> cover(g.mask.begin(), g.mask.end());
  SampleRecord rec;
  rec.geometry = Geometry::structured(ops::reshape(uniform_grid_points({s, s}), {s, s, 2}), cloud.design_params);
  rec.input = ops::concat_last({ops::slice_last(g.values, 0, ci), Tensor({s, s, 1}, std::move(cover))});
  rec.output = ops::slice_last(g.values, ci, ci + co);
  rec.mask = g.mask;
  return rec;
}

}  // namespace

// ---------------------------------------------------------------- losses

Tensor batch_relative_l2(const Tensor& pred, const Tensor& truth, const std::vector<Mask>* masks) {
  if (pred.is_complex() || truth.is_complex()) throw DtypeError("relative L2 expects real tensors");
  if (pred.shape() != truth.shape()) {
    throw DimensionError("relative L2 shape mismatch: " + shape_string(pred.shape()) + " vs " +
                         shape_string(truth.shape()));
  }
  if (pred.rank() < 2) throw DimensionError("batched relative L2 needs [B x ... x c]");
  const std::size_t batch = pred.dim(0);
  if (batch == 0) throw DimensionError("batched relative L2 over an empty batch");
  const std::size_t per_sample = pred.numel() / batch;
  const std::size_t channels = pred.shape().back();
  if (masks && masks->size() != batch) throw DimensionError("one mask per sample required");
  const auto parts = relative_parts(pred.real(), truth.real(), batch, per_sample, channels, masks);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) total += parts.err_norm[b] / parts.truth_norm[b];
  Tensor out = Tensor::scalar(total / static_cast<double>(batch));
  std::optional<std::vector<Mask>> mask_copy;
  if (masks) mask_copy = *masks;
  return detail::record(
      std::move(out), {pred},
      [pred, truth, parts, batch, per_sample, channels, mask_copy](std::span<const double> g,
                                                                    std::span<const std::span<double>> gin) {
        const auto p = pred.real();
        const auto t = truth.real();
        const std::size_t rows = per_sample / channels;
        for (std::size_t b = 0; b < batch; ++b) {
          if (parts.err_norm[b] == 0.0) continue;
          const double k = g[0] / (static_cast<double>(batch) * parts.err_norm[b] * parts.truth_norm[b]);
          const Mask* m = mask_copy ? &(*mask_copy)[b] : nullptr;
          const std::size_t span_rows = m ? rows / m->size() : 1;
          for (std::size_t r = 0; r < rows; ++r) {
            if (m && !(*m)[r / span_rows]) continue;
            for (std::size_t c = 0; c < channels; ++c) {
              const std::size_t i = b * per_sample + r * channels + c;
              gin[0][i] += k * (p[i] - t[i]);
            }
          }
        }
      });
}

Tensor relative_l2(const Tensor& pred, const Tensor& truth, const std::optional<Mask>& mask) {
  if (pred.shape() != truth.shape()) {
    throw DimensionError("relative L2 shape mismatch: " + shape_string(pred.shape()) + " vs " +
                         shape_string(truth.shape()));
  }
  Shape s{1};
  s.insert(s.end(), pred.shape().begin(), pred.shape().end());
  if (pred.rank() == 1) s.push_back(1);
  std::vector<Mask> masks;
  if (mask) masks.push_back(*mask);
  return batch_relative_l2(ops::reshape(pred, s), ops::reshape(truth, s), mask ? &masks : nullptr);
}

Tensor masked_loss(const Tensor& pred, const Tensor& truth, const Mask& mask) {
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t f) { return f != 0; })) {
    throw DegenerateTargetError("masked loss over an empty mask");
  }
  return relative_l2(pred, truth, mask);
}

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (lr_halving_period < 1) throw ConfigError("train.lr_halving_period must be >= 1");
  if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) throw ConfigError("train.initial_lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw ConfigError("invalid Adam constants");
  }
  if (!(divergence_factor > 1.0)) throw ConfigError("train.divergence_factor must exceed 1");
}

void TrainConfig::write_to(ConfigFile& f, const std::string& s) const {
  f.set(s, "epochs", std::to_string(epochs));
  f.set(s, "initial_lr", format_double(initial_lr));
  f.set(s, "lr_halving_period", std::to_string(lr_halving_period));
  f.set(s, "batch_size", std::to_string(batch_size));
  f.set(s, "seed", std::to_string(seed));
  f.set(s, "beta1", format_double(beta1));
  f.set(s, "beta2", format_double(beta2));
  f.set(s, "eps", format_double(eps));
  f.set(s, "divergence_factor", format_double(divergence_factor));
}

std::string TrainConfig::to_text() const {
  ConfigFile f;
  write_to(f, "train");
  return f.to_string();
}

std::string TrainConfig::hash() const { return blob::hex64(blob::fnv1a(to_text())); }

TrainConfig TrainConfig::from_config(const ConfigFile& f, const std::string& s) {
  f.require_known(s, {"epochs", "initial_lr", "lr_halving_period", "batch_size", "seed", "beta1", "beta2", "eps",
                      "divergence_factor"});
  TrainConfig c;
  auto count = [&](const char* key, std::size_t fallback) {
    const long long v = f.get_int(s, key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError("key " + s + "." + key + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  c.epochs = count("epochs", c.epochs);
  c.initial_lr = f.get_double(s, "initial_lr", c.initial_lr);
  c.lr_halving_period = count("lr_halving_period", c.lr_halving_period);
  c.batch_size = count("batch_size", c.batch_size);
  c.seed = count("seed", 0);
  c.beta1 = f.get_double(s, "beta1", c.beta1);
  c.beta2 = f.get_double(s, "beta2", c.beta2);
  c.eps = f.get_double(s, "eps", c.eps);
  c.divergence_factor = f.get_double(s, "divergence_factor", c.divergence_factor);
  c.validate();
  return c;
}

double learning_rate(const TrainConfig& config, std::size_t epoch) {
  return config.initial_lr * std::ldexp(1.0, -static_cast<int>(epoch / config.lr_halving_period));
}

// ---------------------------------------------------------------- report

double TrainReport::final_train() const { return epochs.empty() ? 0.0 : epochs.back().train_err; }
double TrainReport::final_test() const { return epochs.empty() ? 0.0 : epochs.back().test_err; }

std::string TrainReport::to_text(bool with_wall_time) const {
  std::ostringstream os;
  os << "# epoch train_err test_err lr" << (with_wall_time ? " wall_seconds" : "") << "\n";
  for (const auto& e : epochs) {
    os << e.epoch << ' ' << format_double(e.train_err) << ' ' << format_double(e.test_err) << ' '
       << format_double(e.lr);
    if (with_wall_time) os << ' ' << format_double(e.wall_seconds);
    os << "\n";
  }
  os << "[summary]\n"
     << "epochs = " << epochs.size() << "\n"
     << "final_train_err = " << format_double(final_train()) << "\n"
     << "final_test_err = " << format_double(final_test()) << "\n"
     << "config_hash = " << config_hash << "\n";
  if (with_wall_time) os << "wall_seconds = " << format_double(epochs.empty() ? 0.0 : epochs.back().wall_seconds) << "\n";
  return os.str();
}

bool TrainReport::same_metrics(const TrainReport& other) const { return to_text(false) == other.to_text(false); }

// ---------------------------------------------------------------- training

TrainResult train(const GeoFnoModel& model, const DatasetBundle& train_set, const DatasetBundle& test_set,
                  const TrainConfig& config, const std::optional<TrainState>& resume, const TrainOptions& options) {
  config.validate();
  if (train_set.size() == 0 || test_set.size() == 0) throw ConfigError("training needs non-empty train and test sets");
  check_compatible(model.config(), train_set, "train");
  check_compatible(model.config(), test_set, "test");

  GeoFnoModel current = model;
  std::vector<Tensor> params = model.params();
  TrainState state;
  if (resume) {
    state = *resume;
    if (state.optimizer.m.size() != params.size()) throw DimensionError("optimizer state does not match the model");
  } else {
    state.optimizer = AdamState::for_params(params);
  }
  state.report.config_hash = config.hash();
  const double wall_base = state.report.epochs.empty() ? 0.0 : state.report.epochs.back().wall_seconds;
  const auto t0 = Clock::now();
  const std::size_t n = train_set.size();
  const std::size_t last = std::min(config.epochs, options.stop_after.value_or(config.epochs));

  for (std::size_t epoch = state.next_epoch; epoch < last; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, epoch));
    rng.shuffle(order);
    const double lr = learning_rate(config, epoch);
    const AdamConfig adam{lr, config.beta1, config.beta2, config.eps};
    double weighted = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Batch batch = make_batch(train_set, idx, current.config());
      std::vector<Tensor> leaves;
      leaves.reserve(params.size());
      for (const auto& p : params) leaves.push_back(p.with_grad());
      Tape tape;
      double value = 0.0;
      Tensor loss;
      try {
        loss = batch_relative_l2(predict(current, leaves, batch), batch.truth,
                                 batch.masks ? &*batch.masks : nullptr);
        value = loss.item();
      } catch (const NumericError& e) {
        throw DivergenceError(std::string("non-finite values in training: ") + e.what(),
                              static_cast<std::int64_t>(epoch));
      }
      if (!std::isfinite(value)) throw DivergenceError("non-finite training loss", static_cast<std::int64_t>(epoch));
      if (epoch == 0 && start == 0) state.initial_loss = value;
      if (value > config.divergence_factor * state.initial_loss) {
        throw DivergenceError("training loss " + format_double(value) + " exceeds " +
                                  format_double(config.divergence_factor) + "x its initial value",
                              static_cast<std::int64_t>(epoch));
      }
      tape.backward(loss);
      std::vector<Tensor> grads;
      grads.reserve(leaves.size());
      for (const auto& leaf : leaves) grads.push_back(tape.grad_or_zeros(leaf));
      params = adam_step(params, grads, state.optimizer, adam);
      weighted += value * static_cast<double>(end - start);
    }
    current.set_params(params);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_err = weighted / static_cast<double>(n);
    rec.test_err = evaluate(current, test_set).mean;
    rec.lr = lr;
    rec.wall_seconds = wall_base + seconds_since(t0);
    state.report.epochs.push_back(rec);
    state.next_epoch = epoch + 1;
    if (options.on_epoch) options.on_epoch(rec);
  }
  return {std::move(current), std::move(state)};
}

// ---------------------------------------------------------------- evaluation

double EvalResult::median() const {
  if (per_sample.empty()) return 0.0;
  auto v = per_sample;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

double EvalResult::max() const {
  return per_sample.empty() ? 0.0 : *std::max_element(per_sample.begin(), per_sample.end());
}

EvalResult evaluate(const GeoFnoModel& model, const DatasetBundle& dataset) {
  if (dataset.size() == 0) throw ConfigError("evaluate needs a non-empty dataset");
  check_compatible(model.config(), dataset, "evaluation");
  NoGradGuard no_grad;
  EvalResult out;
  double seconds = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const std::size_t idx[] = {i};
    const Batch b = make_batch(dataset, idx, model.config());
    const auto t0 = Clock::now();
    const Tensor pred = predict(model, model.params(), b);
    seconds += seconds_since(t0);
    out.per_sample.push_back(batch_relative_l2(pred, b.truth, b.masks ? &*b.masks : nullptr).item());
  }
  out.mean = std::accumulate(out.per_sample.begin(), out.per_sample.end(), 0.0) /
             static_cast<double>(out.per_sample.size());
  out.seconds_per_instance = seconds / static_cast<double>(dataset.size());
  return out;
}

DatasetBundle interpolate_bundle(const DatasetBundle& dataset, std::size_t s) {
  DatasetBundle out;
  out.manifest = dataset.manifest;
  out.manifest.problem = dataset.manifest.problem + "_interp" + std::to_string(s);
  out.manifest.io_mode = IoMode::kStructured;
  out.manifest.input_channels = with_extra(dataset.manifest.input_channels, "coverage");
  out.manifest.input_units = with_extra(dataset.manifest.input_units, "1");
  const std::size_t ci = dataset.manifest.input_channels.size(), co = dataset.manifest.output_channels.size();
  out.records.reserve(dataset.size());
  for (const auto& r : dataset.records) out.records.push_back(interpolate_record(r, s, ci, co));
  return out;
}

EvalResult evaluate_interpolated(const GeoFnoModel& grid_model, const DatasetBundle& dataset, std::size_t s) {
  if (dataset.size() == 0) throw ConfigError("evaluate needs a non-empty dataset");
  const auto& cfg = grid_model.config();
  const std::size_t ci = dataset.manifest.input_channels.size(), co = dataset.manifest.output_channels.size();
  if (cfg.io_mode != IoMode::kStructured || cfg.in_channels != ci + 1 || cfg.out_channels != co) {
    throw ConfigError("baseline model does not match the interpolated layout of this dataset");
  }
  NoGradGuard no_grad;
  EvalResult out;
  double seconds = 0.0;
  for (const auto& r : dataset.records) {
    const auto t0 = Clock::now();
    const SampleRecord grid = interpolate_record(r, s, ci, co);
    const Tensor pred = ops::reshape(
        grid_model.forward_grid(grid_model.params(), ops::reshape(grid.geometry.points, {1, s, s, 2}),
                                ops::reshape(grid.input, {1, s, s, ci + 1})),
        {s, s, co});
    const Tensor at_points = sample_bilinear(pred, r.geometry.flat_points());
    seconds += seconds_since(t0);
    const std::size_t n = r.geometry.point_count();
    out.per_sample.push_back(relative_l2(at_points, ops::reshape(r.output, {n, co}), r.mask).item());
  }
  out.mean = std::accumulate(out.per_sample.begin(), out.per_sample.end(), 0.0) /
             static_cast<double>(out.per_sample.size());
  out.seconds_per_instance = seconds / static_cast<double>(dataset.size());
  return out;
}

}  // namespace geofno
