// SPDX-License-Identifier: Apache-2.0
#include "geofno/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "geofno/error.hpp"
#include "geofno/fft.hpp"
#include "geofno/geometry.hpp"
#include "geofno/grad_check.hpp"
#include "geofno/ops.hpp"
#include "geofno/poisson.hpp"
#include "geofno/rng.hpp"
#include "geofno/spectral.hpp"
#include "geofno/synthetic.hpp"
#include "geofno/tape.hpp"
#include "geofno/training.hpp"

namespace geofno {

namespace {

Tensor random_real(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

Tensor random_complex(Shape shape, Rng& rng) {
  std::vector<complex> v(shape_numel(shape));
  for (auto& z : v) {
    const double re = rng.normal();
    z = complex(re, rng.normal());
  }
  return Tensor(std::move(shape), std::move(v));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() || a.dtype() != b.dtype()) {
    throw DimensionError("comparison of " + shape_string(a.shape()) + " with " + shape_string(b.shape()));
  }
  const auto x = a.raw();
  const auto y = b.raw();
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

SuiteCase check_le(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value, threshold, value <= threshold && std::isfinite(value), std::move(detail)};
}

std::string group_of(const std::string& param) {
  const auto dot = param.rfind('.');
  const std::string last = param.substr(dot + 1);
  if (param.starts_with("fourier.")) return "fourier." + last;
  return param.substr(0, param.find('.'));
}

// Generic evaluation point: every parameter drawn from U[-scale, scale).
std::vector<Tensor> random_params(const GeoFnoModel& m, Rng& rng, double scale) {
  std::vector<Tensor> out;
  for (const Tensor& p : m.params()) {
    std::vector<double> raw(p.raw().size());
    for (auto& x : raw) x = rng.uniform(-scale, scale);
    out.push_back(Tensor::from_raw(p.shape(), p.dtype(), raw));
  }
  return out;
}

// Worst grad_check error per parameter group of loss(params).
std::map<std::string, GradCheckResult> grouped_grad_check(const std::vector<std::string>& names,
                                                          const std::vector<Tensor>& params,
                                                          const std::function<Tensor(std::span<const Tensor>)>& loss) {
  std::map<std::string, GradCheckResult> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto f = [&](std::span<const Tensor> p) {
      std::vector<Tensor> all = params;
      all[i] = p[0];
      return loss(all);
    };
    const GradCheckResult r = grad_check(f, std::span<const Tensor>(&params[i], 1), 1e-5);
    auto& slot = out[group_of(names[i])];
    if (r.max_rel_error >= slot.max_rel_error) {
      slot = r;
      slot.worst_param = i;
    }
  }
  return out;
}

std::string describe(const std::string& param, const GradCheckResult& r) {
  std::ostringstream os;
  os << param << "[" << r.worst_index << "] analytic=" << r.analytic << " numeric=" << r.numeric;
  return os.str();
}

// ---------------------------------------------------------------- suites

void transforms_suite(SuiteReport& rep, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 11));
  double worst = 0.0;
  std::string worst_cfg;
  for (int c = 0; c < 60; ++c) {
    const std::size_t d = 1 + rng.index(2);
    std::vector<int> k(d);
    std::vector<std::size_t> grid(d);
    for (std::size_t a = 0; a < d; ++a) {
      k[a] = static_cast<int>(rng.index(9));
      grid[a] = static_cast<std::size_t>(2 * k[a] + 1) + rng.index(d == 1 ? 24 : 8);
    }
    const double e = roundtrip_identity_check(ModeSet(k), grid, rng.next_u64());
    if (e > worst) {
      worst = e;
      std::ostringstream os;
      os << "d=" << d << " k_max=" << k[0] << (d > 1 ? "," + std::to_string(k[1]) : "") << " grid=" << grid[0]
         << (d > 1 ? "," + std::to_string(grid[1]) : "");
      worst_cfg = os.str();
    }
  }
  rep.cases.push_back(check_le("roundtrip_identity_60_configs", worst, 1e-10, worst_cfg));

  double fft_err = 0.0, parseval = 0.0;
  for (const Shape& s : {Shape{6}, Shape{7}, Shape{12}, Shape{17}, Shape{97}, Shape{4, 5}, Shape{3, 6, 2}}) {
    const Tensor v = random_complex(s, rng);
    std::vector<std::size_t> axes(s.size());
    for (std::size_t a = 0; a < s.size(); ++a) axes[a] = a;
    const Tensor f = ops::fft_nd(v, axes, false);
    fft_err = std::max(fft_err, max_abs_diff(ops::fft_nd(f, axes, true), v));
    double lhs = 0.0, rhs = 0.0;
    for (const complex z : f.cplx()) lhs += std::norm(z);
    for (const complex z : v.cplx()) rhs += std::norm(z);
    parseval = std::max(parseval, std::abs(lhs - rhs / static_cast<double>(v.numel())));
  }
  rep.cases.push_back(check_le("fft_inverse_forward_identity", fft_err, 1e-12));
  rep.cases.push_back(check_le("fft_parseval", parseval, 1e-10));

  // Uniform-grid NUDFT against the FFT, per retained mode.
  double equiv = 0.0;
  for (const std::vector<std::size_t>& grid : {std::vector<std::size_t>{16}, std::vector<std::size_t>{12, 10}}) {
    const ModeSet modes = grid.size() == 1 ? ModeSet({6}) : ModeSet({4, 3});
    Shape vs{1};
    vs.insert(vs.end(), grid.begin(), grid.end());
    vs.push_back(2);
    const Tensor v = random_real(vs, rng);
    const std::size_t n = shape_numel(grid);
    const Tensor direct = nudft_forward(ops::reshape(v, {n, 2}), uniform_grid_points(grid), modes);
    const Tensor fast = spectral::grid_to_modes(v, modes);
    const auto dc = direct.cplx();
    const auto fc = fast.cplx();
    for (std::size_t h = 0; h < modes.half_size(); ++h) {
      for (std::size_t c = 0; c < 2; ++c) {
        equiv = std::max(equiv, std::abs(dc[(modes.zero_index() + h) * 2 + c] - fc[h * 2 + c]));
      }
    }
  }
  rep.cases.push_back(check_le("nudft_equals_fft_per_mode", equiv, 1e-10));
}

void gradients_suite(SuiteReport& rep, std::uint64_t seed) {
  for (std::uint64_t s = seed; s < seed + 3; ++s) {
    for (auto& c : point_model_gradient_cases(s)) rep.cases.push_back(std::move(c));
  }

  ModelConfig sc;
  sc.io_mode = IoMode::kStructured;
  sc.width = 2;
  sc.layers = 2;
  sc.k_max = {2, 2};
  sc.lift_hidden = 4;
  sc.proj_hidden = 4;
  sc.map = MapKind::kNone;
  const GeoFnoModel sm(sc, seed);
  Rng rng(derive_seed(seed, 22));
  const Tensor pts = random_real({2, 8, 8, 2}, rng, 0.0, 1.0);
  const Tensor fields = random_real({2, 8, 8, 1}, rng);
  const Tensor target = random_real({2, 8, 8, 1}, rng);
  const auto sloss = [&](std::span<const Tensor> p) {
    return batch_relative_l2(sm.forward_grid(p, pts, fields), target);
  };
  double worst = 0.0;
  std::string worst_detail;
  for (const auto& [group, r] : grouped_grad_check(sm.param_names(), random_params(sm, rng, 1.0), sloss)) {
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_detail = describe(sm.param_names()[r.worst_param], r);
    }
  }
  rep.cases.push_back(check_le("structured_model_all_groups", worst, 1e-4, worst_detail));

  const Tensor x = random_real({3, 4, 2}, rng);
  const Tensor y = random_real({3, 4, 2}, rng);
  const std::vector<Mask> masks{{1, 0, 1, 1}, {1, 1, 1, 1}, {0, 1, 0, 1}};
  const auto r = grad_check([&](std::span<const Tensor> p) { return batch_relative_l2(p[0], y, &masks); },
                            std::span<const Tensor>(&x, 1), 1e-5);
  rep.cases.push_back(check_le("masked_relative_l2", r.max_rel_error, 1e-4));
}

void reduction_suite(SuiteReport& rep, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 31));
  // Warped structured mesh: the canonical map gives uniform coordinates.
  const std::size_t s1 = 12, s2 = 10;
  std::vector<double> mesh(s1 * s2 * 2);
  for (std::size_t i = 0; i < s1; ++i) {
    for (std::size_t j = 0; j < s2; ++j) {
      const double u = static_cast<double>(i) / s1, v = static_cast<double>(j) / s2;
      mesh[(i * s2 + j) * 2] = u + 0.05 * std::sin(2.0 * std::numbers::pi * v);
      mesh[(i * s2 + j) * 2 + 1] = v * (1.0 + 0.3 * u);
    }
  }
  const Geometry g = Geometry::structured(Tensor({s1, s2, 2}, std::move(mesh)));
  const ModeSet modes({4, 3});
  const Tensor v = random_real({1, s1, s2, 3}, rng);
  const Tensor xi = ops::reshape(canonical_map(g), {s1 * s2, 2});
  const Tensor direct = nudft_forward(ops::reshape(v, {s1 * s2, 3}), xi, modes);
  const Tensor fast = spectral::grid_to_modes(v, modes);
  double err = 0.0;
  for (std::size_t h = 0; h < modes.half_size(); ++h) {
    for (std::size_t c = 0; c < 3; ++c) {
      err = std::max(err, std::abs(direct.cplx()[(modes.zero_index() + h) * 3 + c] - fast.cplx()[h * 3 + c]));
    }
  }
  rep.cases.push_back(check_le("canonical_map_nudft_equals_fft", err, 1e-10));

  const Tensor weights = random_complex({modes.size(), 3, 2}, rng);
  const Tensor by_fft = spectral_conv_uniform(ops::reshape(v, {s1, s2, 3}), weights, modes);
  const Tensor coeffs = nudft_forward(ops::reshape(v, {s1 * s2, 3}), xi, modes);
  std::vector<complex> mixed(modes.size() * 2, complex(0.0));
  for (std::size_t k = 0; k < modes.size(); ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t o = 0; o < 2; ++o) {
        mixed[k * 2 + o] += coeffs.cplx()[k * 3 + i] * weights.cplx()[(k * 3 + i) * 2 + o];
      }
    }
  }
  const Tensor by_nudft = ops::reshape(
      ops::real_part(nudft_inverse(Tensor({modes.size(), 2}, std::move(mixed)), xi, modes)), {s1, s2, 2});
  rep.cases.push_back(check_le("spectral_conv_fft_equals_nudft", max_abs_diff(by_fft, by_nudft), 1e-10));

  for (std::size_t layers : {1, 2, 4}) {
    ModelConfig pc;
    pc.width = 4;
    pc.layers = layers;
    pc.k_max = {3, 3};
    pc.latent_grid = {8, 8};
    pc.lift_hidden = 5;
    pc.proj_hidden = 6;
    pc.map = MapKind::kIdentity;
    const GeoFnoModel point_model(pc, seed + layers);
    const GeoFnoModel twin = structured_twin(point_model);
    const Tensor grid_pts = uniform_grid_points({8, 8});
    const Tensor f = random_real({64, 1}, rng);
    const Tensor a = forward_pointcloud(point_model, Geometry::point_cloud(grid_pts), f);
    const Tensor b = forward_structured(twin, Geometry::structured(ops::reshape(grid_pts, {8, 8, 2})),
                                        ops::reshape(f, {8, 8, 1}));
    rep.cases.push_back(check_le("pointcloud_equals_structured_L" + std::to_string(layers),
                                 max_abs_diff(a, ops::reshape(b, {64, 1})), 1e-10));
  }
}

void solver_suite(SuiteReport& rep, std::uint64_t) {
  const double r_in = 0.4, r_out = 1.0;
  const Geometry small = o_mesh_generate({r_in}, {r_out}, 16, 6);
  const ReferenceSolution zero = solve_reference(small, Tensor::zeros({16, 6}));
  double zmax = 0.0;
  for (double u : zero.u.real()) zmax = std::max(zmax, std::abs(u));
  rep.cases.push_back(check_le("zero_source_zero_solution", zmax, 0.0));

  std::vector<double> errors;
  double residual = 0.0;
  for (std::size_t level = 0; level < 3; ++level) {
    const std::size_t nt = 32u << level, nr = (8u << level) + 1;
    const Geometry mesh = o_mesh_generate({r_in}, {r_out}, nt, nr);
    const ReferenceSolution sol = solve_reference(mesh, Tensor::full({nt, nr}, 1.0));
    residual = std::max(residual, sol.residual);
    const auto p = mesh.points.real();
    const auto u = sol.u.real();
    double e = 0.0;
    for (std::size_t q = 0; q < nt * nr; ++q) {
      e = std::max(e, std::abs(u[q] - annulus_closed_form(std::hypot(p[2 * q], p[2 * q + 1]), r_in, r_out)));
    }
    errors.push_back(e);
  }
  rep.cases.push_back(check_le("discrete_residual", residual, 1e-10));
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double order = std::log2(errors[i - 1] / errors[i]);
    std::ostringstream os;
    os << "errors " << errors[i - 1] << " -> " << errors[i];
    SuiteCase c{"convergence_order_" + std::to_string(i), order, 2.2, order >= 1.8 && order <= 2.2, os.str()};
    rep.cases.push_back(c);
  }
}

}  // namespace

bool SuiteReport::passed() const {
  for (const auto& c : cases) {
    if (!c.passed) return false;
  }
  return !cases.empty();
}

std::string SuiteReport::to_text() const {
  std::ostringstream os;
  os.precision(3);
  for (const auto& c : cases) {
    os << (c.passed ? "PASS " : "FAIL ") << suite << '/' << c.name << "  value=" << std::scientific << c.value
       << " threshold=" << c.threshold << std::defaultfloat << "\n";
    if (!c.passed && !c.detail.empty()) os << "     " << c.detail << "\n";
  }
  os << suite << ": " << (passed() ? "passed" : "FAILED") << " in " << std::fixed << seconds << std::defaultfloat
     << " s\n";
  return os.str();
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"transforms", "gradients", "reduction", "solver"};
  return names;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed) {
  static const std::map<std::string, void (*)(SuiteReport&, std::uint64_t)> suites{
      {"transforms", transforms_suite},
      {"gradients", gradients_suite},
      {"reduction", reduction_suite},
      {"solver", solver_suite}};
  const auto it = suites.find(name);
  if (it == suites.end()) throw ConfigError("unknown verification suite '" + name + "'");
  SuiteReport rep;
  rep.suite = name;
  const auto t0 = std::chrono::steady_clock::now();
  it->second(rep, seed);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

GeoFnoModel structured_twin(const GeoFnoModel& point_model) {
  const ModelConfig& pc = point_model.config();
  if (pc.io_mode != IoMode::kPointCloud) throw ConfigError("structured_twin expects a point-cloud model");
  ModelConfig sc = pc;
  sc.io_mode = IoMode::kStructured;
  sc.map = MapKind::kNone;
  std::map<std::string, Tensor> by_name;
  for (std::size_t i = 0; i < point_model.params().size(); ++i) {
    by_name.emplace(point_model.param_names()[i], point_model.params()[i]);
  }
  const auto names = GeoFnoModel::param_names(sc);
  const auto shapes = GeoFnoModel::param_shapes(sc);
  const auto dtypes = GeoFnoModel::param_dtypes(sc);
  std::vector<Tensor> params;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = by_name.find(names[i]);
    params.push_back(it != by_name.end() ? it->second : Tensor::zeros(shapes[i], dtypes[i]));
  }
  return GeoFnoModel(sc, std::move(params));
}

std::vector<SuiteCase> point_model_gradient_cases(std::uint64_t seed, double scale) {
  const GeoFnoModel m = tiny_point_model(seed);
  Rng rng(derive_seed(seed, 21));
  PointBatch batch{random_real({2, 10, 2}, rng, 0.05, 0.95), random_real({2, 10, 1}, rng), random_real({2, 2}, rng),
                   std::nullopt};
  const Tensor target = random_real({2, 10, 1}, rng);
  const auto loss = [&](std::span<const Tensor> p) { return batch_relative_l2(m.forward_points(p, batch), target); };
  std::vector<SuiteCase> out;
  for (const auto& [group, r] : grouped_grad_check(m.param_names(), random_params(m, rng, scale), loss)) {
    out.push_back(check_le("point_model_seed" + std::to_string(seed) + "_" + group, r.max_rel_error, 1e-4,
                           describe(m.param_names()[r.worst_param], r)));
  }
  return out;
}

GeoFnoModel tiny_point_model(std::uint64_t seed, std::size_t conditioning) {
  ModelConfig c;
  c.width = 2;
  c.layers = 3;
  c.k_max = {2, 2};
  c.latent_grid = {6, 6};
  c.lift_hidden = 4;
  c.proj_hidden = 4;
  c.map = MapKind::kLearned;
  c.deform.frequencies = 2;
  c.deform.hidden = {4};
  c.deform.conditioning = conditioning;
  GeoFnoModel m(c, seed);
  std::vector<Tensor> params = m.params();
  Rng rng(derive_seed(seed, 99));
  const std::size_t n = params.size();
  for (std::size_t i = n - 2; i < n; ++i) params[i] = random_real(params[i].shape(), rng, -0.1, 0.1);
  m.set_params(std::move(params));
  return m;
}

}  // namespace geofno
