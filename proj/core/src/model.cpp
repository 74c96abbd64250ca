// SPDX-License-Identifier: Apache-2.0
#include "geofno/model.hpp"

#include <sstream>

#include "geofno/error.hpp"
#include "geofno/layers.hpp"
#include "geofno/ops.hpp"
#include "geofno/rng.hpp"

namespace geofno {

namespace {

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

template <typename T>
std::vector<T> narrow(const std::vector<long long>& v, const char* key) {
  std::vector<T> out;
  for (long long x : v) {
    if (x < 0) throw ConfigError(std::string("key model.") + key + ": negative entry");
    out.push_back(static_cast<T>(x));
  }
  return out;
}

std::string map_name(MapKind k) {
  switch (k) {
    case MapKind::kNone: return "none";
    case MapKind::kIdentity: return "identity";
    case MapKind::kLearned: return "learned";
  }
  return "none";
}

MapKind map_from(const std::string& s) {
  if (s == "none") return MapKind::kNone;
  if (s == "identity") return MapKind::kIdentity;
  if (s == "learned") return MapKind::kLearned;
  throw ConfigError("key model.map: unknown coordinate map '" + s + "'");
}

// Real and imaginary parts of each entry drawn from U[0, scale).
Tensor init_spectral(std::size_t modes, std::size_t ci, std::size_t co, Rng& rng) {
  const double scale = 1.0 / static_cast<double>(ci * co);
  std::vector<complex> w(modes * ci * co);
  for (auto& z : w) {
    const double re = scale * rng.uniform();
    z = complex(re, scale * rng.uniform());
  }
  return Tensor({modes, ci, co}, std::move(w));
}

Shape with_batch(std::size_t b, const std::vector<std::size_t>& grid, std::size_t c) {
  Shape s{b};
  s.insert(s.end(), grid.begin(), grid.end());
  s.push_back(c);
  return s;
}

}  // namespace

std::string to_string(IoMode mode) {
  switch (mode) {
    case IoMode::kPointCloud: return "point_cloud";
    case IoMode::kStructured: return "structured";
    case IoMode::kSpatiotemporal: return "spatiotemporal";
  }
  return "point_cloud";
}

IoMode io_mode_from_string(const std::string& name) {
  if (name == "point_cloud") return IoMode::kPointCloud;
  if (name == "structured") return IoMode::kStructured;
  if (name == "spatiotemporal") return IoMode::kSpatiotemporal;
  throw ConfigError("unknown io_mode '" + name + "'");
}

// ---------------------------------------------------------------- ModelConfig

std::size_t ModelConfig::lift_inputs() const {
  return in_channels + dim + (io_mode == IoMode::kSpatiotemporal ? 1 : 0);
}

std::size_t ModelConfig::latent_dim() const { return dim + (io_mode == IoMode::kSpatiotemporal ? 1 : 0); }

bool ModelConfig::has_bypass(std::size_t layer) const {
  if (io_mode != IoMode::kPointCloud) return true;
  return layer > 0 && layer + 1 < layers;
}

void ModelConfig::validate() const {
  if (dim < 1 || dim > 3) throw ConfigError("model dimension must be 1, 2 or 3");
  if (io_mode == IoMode::kSpatiotemporal && dim != 2) throw ConfigError("spatiotemporal models are 2-d in space");
  if (width < 1 || out_channels < 1 || lift_hidden < 1 || proj_hidden < 1) {
    throw ConfigError("model widths must be positive");
  }
  if (k_max.size() != latent_dim()) {
    throw ConfigError("k_max needs " + std::to_string(latent_dim()) + " entries, got " + std::to_string(k_max.size()));
  }
  for (int k : k_max) {
    if (k < 0) throw ConfigError("k_max entries must be non-negative");
  }
  if (io_mode == IoMode::kPointCloud) {
    if (latent_grid.size() != dim) throw ConfigError("latent_grid needs one entry per spatial axis");
    ModeSet(k_max).check_nyquist(latent_grid);
    if (map == MapKind::kLearned && deform.dim != dim) throw ConfigError("deformation net dimension mismatch");
  }
}

std::string ModelConfig::to_text() const {
  ConfigFile f;
  write_to(f, "model");
  return f.to_string();
}

void ModelConfig::write_to(ConfigFile& f, const std::string& s) const {
  f.set(s, "io_mode", to_string(io_mode));
  f.set(s, "dim", std::to_string(dim));
  f.set(s, "in_channels", std::to_string(in_channels));
  f.set(s, "out_channels", std::to_string(out_channels));
  f.set(s, "width", std::to_string(width));
  f.set(s, "layers", std::to_string(layers));
  f.set(s, "k_max", join(k_max));
  f.set(s, "latent_grid", join(latent_grid));
  f.set(s, "lift_hidden", std::to_string(lift_hidden));
  f.set(s, "proj_hidden", std::to_string(proj_hidden));
  f.set(s, "map", map_name(map));
  f.set(s, "deform_frequencies", std::to_string(deform.frequencies));
  f.set(s, "deform_hidden", join(deform.hidden));
  f.set(s, "deform_conditioning", std::to_string(deform.conditioning));
}

ModelConfig ModelConfig::from_config(const ConfigFile& f, const std::string& s) {
  f.require_known(s, {"io_mode", "dim", "in_channels", "out_channels", "width", "layers", "k_max", "latent_grid",
                      "lift_hidden", "proj_hidden", "map", "deform_frequencies", "deform_hidden",
                      "deform_conditioning"});
  ModelConfig c;
  c.io_mode = io_mode_from_string(f.get_string(s, "io_mode", to_string(c.io_mode)));
  c.dim = static_cast<std::size_t>(f.get_int(s, "dim", static_cast<long long>(c.dim)));
  c.in_channels = static_cast<std::size_t>(f.get_int(s, "in_channels", static_cast<long long>(c.in_channels)));
  c.out_channels = static_cast<std::size_t>(f.get_int(s, "out_channels", static_cast<long long>(c.out_channels)));
  c.width = static_cast<std::size_t>(f.get_int(s, "width", static_cast<long long>(c.width)));
  c.layers = static_cast<std::size_t>(f.get_int(s, "layers", static_cast<long long>(c.layers)));
  const long long km_default = 12;
  c.k_max = narrow<int>(f.get_int_list(s, "k_max", std::vector<long long>(c.latent_dim(), km_default)), "k_max");
  c.latent_grid = narrow<std::size_t>(f.get_int_list(s, "latent_grid", std::vector<long long>(c.dim, 32)), "latent_grid");
  c.lift_hidden = static_cast<std::size_t>(f.get_int(s, "lift_hidden", static_cast<long long>(c.width)));
  c.proj_hidden = static_cast<std::size_t>(f.get_int(s, "proj_hidden", static_cast<long long>(2 * c.width)));
  c.map = map_from(f.get_string(s, "map", c.io_mode == IoMode::kPointCloud ? "learned" : "none"));
  c.deform.dim = c.dim;
  c.deform.frequencies = static_cast<std::size_t>(f.get_int(s, "deform_frequencies", 8));
  c.deform.hidden = narrow<std::size_t>(f.get_int_list(s, "deform_hidden", {32, 32}), "deform_hidden");
  c.deform.conditioning = static_cast<std::size_t>(f.get_int(s, "deform_conditioning", 0));
  c.validate();
  return c;
}

// ---------------------------------------------------------------- parameters

GeoFnoModel::Layout GeoFnoModel::layout_for(const ModelConfig& c) {
  Layout l;
  std::size_t i = 0;
  l.lift = i;
  i += 4;
  for (std::size_t layer = 0; layer < c.layers; ++layer) {
    l.spectral.push_back(i++);
    if (c.has_bypass(layer)) {
      l.bypass.push_back(i);
      i += 3;
    } else {
      l.bypass.push_back(SIZE_MAX);
    }
  }
  l.proj = i;
  i += 4;
  l.deform = i;
  if (c.io_mode == IoMode::kPointCloud && c.map == MapKind::kLearned) {
    l.deform_count = DeformNet::param_shapes(c.deform).size();
  }
  return l;
}

std::vector<std::string> GeoFnoModel::param_names(const ModelConfig& c) {
  std::vector<std::string> names{"lift.0.weight", "lift.0.bias", "lift.1.weight", "lift.1.bias"};
  for (std::size_t layer = 0; layer < c.layers; ++layer) {
    const std::string p = "fourier." + std::to_string(layer) + ".";
    names.push_back(p + "spectral");
    if (c.has_bypass(layer)) {
      names.push_back(p + "bypass");
      names.push_back(p + "bias_weight");
      names.push_back(p + "bias");
    }
  }
  for (const char* n : {"proj.0.weight", "proj.0.bias", "proj.1.weight", "proj.1.bias"}) names.emplace_back(n);
  const auto l = layout_for(c);
  for (std::size_t i = 0; i < l.deform_count; ++i) {
    names.push_back("deform." + std::to_string(i / 2) + (i % 2 ? ".bias" : ".weight"));
  }
  return names;
}

std::vector<Shape> GeoFnoModel::param_shapes(const ModelConfig& c) {
  const std::size_t w = c.width;
  const std::size_t k = ModeSet(c.k_max).size();
  std::vector<Shape> shapes{{c.lift_inputs(), c.lift_hidden}, {c.lift_hidden}, {c.lift_hidden, w}, {w}};
  for (std::size_t layer = 0; layer < c.layers; ++layer) {
    shapes.push_back({k, w, w});
    if (c.has_bypass(layer)) {
      shapes.push_back({w, w});
      shapes.push_back({c.latent_dim(), w});
      shapes.push_back({w});
    }
  }
  shapes.push_back({w, c.proj_hidden});
  shapes.push_back({c.proj_hidden});
  shapes.push_back({c.proj_hidden, c.out_channels});
  shapes.push_back({c.out_channels});
  if (layout_for(c).deform_count > 0) {
    for (auto& s : DeformNet::param_shapes(c.deform)) shapes.push_back(s);
  }
  return shapes;
}

std::vector<Dtype> GeoFnoModel::param_dtypes(const ModelConfig& c) {
  const auto names = param_names(c);
  std::vector<Dtype> out;
  for (const auto& n : names) {
    out.push_back(n.ends_with(".spectral") ? Dtype::kComplex128 : Dtype::kReal64);
  }
  return out;
}

GeoFnoModel::GeoFnoModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  modes_ = ModeSet(config_.k_max);
  layout_ = layout_for(config_);
  names_ = param_names(config_);
  Rng rng(seed);
  auto add_dense = [&](std::size_t in, std::size_t out) {
    auto [w, b] = nn::init_dense(in, out, rng);
    params_.push_back(std::move(w));
    params_.push_back(std::move(b));
  };
  const std::size_t w = config_.width;
  add_dense(config_.lift_inputs(), config_.lift_hidden);
  add_dense(config_.lift_hidden, w);
  for (std::size_t layer = 0; layer < config_.layers; ++layer) {
    params_.push_back(init_spectral(modes_.size(), w, w, rng));
    if (config_.has_bypass(layer)) {
      auto [bw, unused] = nn::init_dense(w, w, rng);
      params_.push_back(std::move(bw));
      add_dense(config_.latent_dim(), w);
    }
  }
  add_dense(w, config_.proj_hidden);
  add_dense(config_.proj_hidden, config_.out_channels);
  if (layout_.deform_count > 0) {
    for (auto& p : DeformNet::init_params(config_.deform, rng)) params_.push_back(std::move(p));
  }
}

GeoFnoModel::GeoFnoModel(ModelConfig config, std::vector<Tensor> params) : config_(std::move(config)) {
  config_.validate();
  modes_ = ModeSet(config_.k_max);
  layout_ = layout_for(config_);
  names_ = param_names(config_);
  set_params(std::move(params));
}

void GeoFnoModel::set_params(std::vector<Tensor> params) {
  const auto shapes = param_shapes(config_);
  const auto dtypes = param_dtypes(config_);
  if (params.size() != shapes.size()) {
    throw DimensionError("model expects " + std::to_string(shapes.size()) + " parameter tensors, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params[i].shape() != shapes[i] || params[i].dtype() != dtypes[i]) {
      throw DimensionError("parameter " + names_[i] + " has shape " + shape_string(params[i].shape()) +
                           ", expected " + shape_string(shapes[i]));
    }
  }
  params_ = std::move(params);
}

std::size_t count_params(const ModelConfig& config) {
  const std::size_t w = config.width;
  const std::size_t k = ModeSet(config.k_max).size();
  std::size_t n = nn::mlp_param_count({config.lift_inputs(), config.lift_hidden, w});
  n += nn::mlp_param_count({w, config.proj_hidden, config.out_channels});
  for (std::size_t layer = 0; layer < config.layers; ++layer) {
    n += 2 * k * w * w;
    if (config.has_bypass(layer)) n += w * w + config.latent_dim() * w + w;
  }
  if (config.io_mode == IoMode::kPointCloud && config.map == MapKind::kLearned) {
    n += nn::mlp_param_count(config.deform.layer_sizes());
  }
  return n;
}

std::size_t count_params(const GeoFnoModel& model) { return count_params(model.config()); }

// ---------------------------------------------------------------- forward

Tensor GeoFnoModel::lift(std::span<const Tensor> params, const Tensor& features) const {
  if (features.is_complex() || features.rank() < 1 || features.shape().back() != config_.lift_inputs()) {
    throw DimensionError("lift: expected " + std::to_string(config_.lift_inputs()) + " input channels, got " +
                         shape_string(features.shape()));
  }
  return nn::mlp(features, params.subspan(layout_.lift, 4));
}

Tensor GeoFnoModel::map_points(std::span<const Tensor> params, const Tensor& points,
                               const std::optional<Tensor>& design) const {
  switch (config_.map) {
    case MapKind::kIdentity: return ops::wrap_unit(points);
    case MapKind::kLearned:
      return DeformNet::apply(config_.deform, params.subspan(layout_.deform, layout_.deform_count), points, design);
    case MapKind::kNone: break;
  }
  throw ConfigError("point-cloud forward needs a coordinate map (identity or learned)");
}

Tensor GeoFnoModel::latent_layer(std::span<const Tensor> params, const Tensor& v, std::size_t layer,
                                 const std::vector<std::size_t>& grid, bool activate) const {
  const Tensor coeffs = spectral::grid_to_modes(v, modes_);
  const Tensor mixed = spectral::mix_modes(coeffs, spectral::fold_weights(params[layout_.spectral[layer]], modes_));
  Tensor out = spectral::modes_to_grid(mixed, modes_, grid);
  if (config_.has_bypass(layer)) {
    const std::size_t b = layout_.bypass[layer];
    out = ops::add(out, ops::linear(v, params[b]));
    const Tensor coords = uniform_grid_points(grid);
    Shape bias_shape(grid.begin(), grid.end());
    bias_shape.push_back(config_.width);
    out = ops::add(out, ops::reshape(ops::linear(coords, params[b + 1], params[b + 2]), bias_shape));
  }
  return activate ? ops::gelu(out) : out;
}

Tensor GeoFnoModel::fourier_stack(std::span<const Tensor> params, Tensor v, const std::vector<std::size_t>& grid,
                                  std::size_t first, std::size_t last) const {
  for (std::size_t layer = first; layer < last; ++layer) {
    v = latent_layer(params, v, layer, grid, layer + 1 < config_.layers);
  }
  return v;
}

Tensor GeoFnoModel::forward_points(std::span<const Tensor> params, const PointBatch& batch) const {
  if (config_.io_mode != IoMode::kPointCloud) throw ConfigError("forward_points requires a point-cloud model");
  const std::size_t d = config_.dim;
  const auto& x = batch.points;
  if (x.is_complex() || x.rank() != 3 || x.dim(2) != d) {
    throw DimensionError("points must be [B x N x " + std::to_string(d) + "], got " + shape_string(x.shape()));
  }
  const std::size_t b = x.dim(0), n = x.dim(1);
  if (batch.fields.shape() != Shape{b, n, config_.in_channels}) {
    throw DimensionError("fields must be [B x N x " + std::to_string(config_.in_channels) + "], got " +
                         shape_string(batch.fields.shape()));
  }
  if (batch.query && (batch.query->rank() != 3 || batch.query->dim(0) != b || batch.query->dim(2) != d)) {
    throw DimensionError("query points must be [B x M x d]");
  }
  const Tensor h = lift(params, ops::concat_last({batch.fields, x}));
  const std::size_t layers = config_.layers;
  if (layers == 0) {
    if (batch.query) throw ConfigError("a model without Fourier layers cannot evaluate at query points");
    return nn::mlp(h, params.subspan(layout_.proj, 4));
  }
  const Tensor xi = map_points(params, x, batch.design);
  const Tensor xq = batch.query ? map_points(params, *batch.query, batch.design) : xi;
  const auto& grid = config_.latent_grid;

  const Tensor encoded = spectral::encode_points(h, xi, modes_);
  auto weights = [&](std::size_t layer) { return spectral::fold_weights(params[layout_.spectral[layer]], modes_); };
  Tensor y;
  if (layers == 1) {
    y = spectral::decode_points(spectral::mix_modes(encoded, weights(0)), xq, modes_);
  } else {
    Tensor v = ops::gelu(spectral::modes_to_grid(spectral::mix_modes(encoded, weights(0)), modes_, grid));
    v = fourier_stack(params, v, grid, 1, layers - 1);
    const Tensor top = spectral::mix_modes(spectral::grid_to_modes(v, modes_), weights(layers - 1));
    y = spectral::decode_points(top, xq, modes_);
  }
  return nn::mlp(y, params.subspan(layout_.proj, 4));
}

Tensor GeoFnoModel::forward_grid(std::span<const Tensor> params, const Tensor& points, const Tensor& fields) const {
  if (config_.io_mode != IoMode::kStructured) throw ConfigError("forward_grid requires a structured model");
  const std::size_t d = config_.dim;
  if (points.is_complex() || points.rank() != d + 2 || points.shape().back() != d) {
    throw DimensionError("structured points must be [B x s_1 .. s_d x d], got " + shape_string(points.shape()));
  }
  const std::size_t b = points.dim(0);
  const std::vector<std::size_t> grid(points.shape().begin() + 1, points.shape().end() - 1);
  if (fields.shape() != with_batch(b, grid, config_.in_channels)) {
    throw DimensionError("structured fields must be " + shape_string(with_batch(b, grid, config_.in_channels)) +
                         ", got " + shape_string(fields.shape()));
  }
  Tensor v = lift(params, ops::concat_last({fields, points}));
  v = fourier_stack(params, v, grid, 0, config_.layers);
  return nn::mlp(v, params.subspan(layout_.proj, 4));
}

Tensor GeoFnoModel::forward_time(std::span<const Tensor> params, const Tensor& points, const Tensor& fields,
                                 std::size_t steps) const {
  if (config_.io_mode != IoMode::kSpatiotemporal) throw ConfigError("forward_time requires a spatiotemporal model");
  if (steps == 0) throw DimensionError("spatiotemporal forward needs at least one time step");
  if (points.is_complex() || points.rank() != 4 || points.dim(3) != 2) {
    throw DimensionError("spatiotemporal points must be [B x s_1 x s_2 x 2], got " + shape_string(points.shape()));
  }
  const std::size_t b = points.dim(0), s1 = points.dim(1), s2 = points.dim(2);
  const std::size_t c = config_.in_channels;
  if (fields.shape() != Shape{b, s1, s2, c}) {
    throw DimensionError("spatiotemporal fields must be [B x s_1 x s_2 x c_in], got " + shape_string(fields.shape()));
  }
  const std::size_t cells = b * s1 * s2;
  const Tensor base = ops::reshape(ops::concat_last({fields, points}), {cells, c + 2});
  const Tensor spread = ops::reshape(ops::expand_rows(base, steps), {b, s1, s2, steps, c + 2});
  std::vector<double> time(cells * steps);
  for (std::size_t i = 0; i < cells; ++i) {
    for (std::size_t t = 0; t < steps; ++t) time[i * steps + t] = static_cast<double>(t) / static_cast<double>(steps);
  }
  const Tensor features = ops::concat_last({spread, Tensor({b, s1, s2, steps, 1}, std::move(time))});
  const std::vector<std::size_t> grid{s1, s2, steps};
  Tensor v = lift(params, features);
  v = fourier_stack(params, v, grid, 0, config_.layers);
  return nn::mlp(v, params.subspan(layout_.proj, 4));
}

// ---------------------------------------------------------------- single-sample API

Tensor lift(const GeoFnoModel& model, const Tensor& features) { return model.lift(model.params(), features); }

Tensor forward_structured(const GeoFnoModel& model, const Geometry& mesh, const Tensor& fields) {
  if (mesh.kind != GeometryKind::kStructuredMesh) throw KindError("forward_structured requires a structured mesh");
  const auto grid = mesh.grid();
  Shape ps{1};
  ps.insert(ps.end(), mesh.points.shape().begin(), mesh.points.shape().end());
  Shape fs{1};
  fs.insert(fs.end(), fields.shape().begin(), fields.shape().end());
  const Tensor out = model.forward_grid(model.params(), ops::reshape(mesh.points, ps), ops::reshape(fields, fs));
  return ops::reshape(out, Shape(out.shape().begin() + 1, out.shape().end()));
}

Tensor forward_pointcloud(const GeoFnoModel& model, const Geometry& cloud, const Tensor& fields,
                          const std::optional<Tensor>& query) {
  const Geometry flat = cloud.kind == GeometryKind::kPointCloud ? cloud : cloud.as_point_cloud();
  const std::size_t n = flat.point_count(), d = flat.dim();
  if (fields.rank() != 2 || fields.dim(0) != n) throw DimensionError("fields must be [N x c_in]");
  PointBatch batch;
  batch.points = ops::reshape(flat.points, {1, n, d});
  batch.fields = ops::reshape(fields, {1, n, fields.dim(1)});
  if (flat.design_params) batch.design = ops::reshape(*flat.design_params, {1, flat.design_params->numel()});
  if (query) {
    if (query->rank() != 2 || query->dim(1) != d) throw DimensionError("query points must be [M x d]");
    batch.query = ops::reshape(*query, {1, query->dim(0), d});
  }
  const Tensor out = model.forward_points(model.params(), batch);
  return ops::reshape(out, {out.dim(1), out.dim(2)});
}

Tensor forward_spatiotemporal(const GeoFnoModel& model, const Geometry& mesh, const Tensor& fields,
                              std::size_t steps) {
  if (mesh.kind != GeometryKind::kStructuredMesh) throw KindError("forward_spatiotemporal requires a structured mesh");
  Shape ps{1};
  ps.insert(ps.end(), mesh.points.shape().begin(), mesh.points.shape().end());
  Shape fs{1};
  fs.insert(fs.end(), fields.shape().begin(), fields.shape().end());
  const Tensor out = model.forward_time(model.params(), ops::reshape(mesh.points, ps), ops::reshape(fields, fs), steps);
  return ops::reshape(out, Shape(out.shape().begin() + 1, out.shape().end()));
}

}  // namespace geofno
