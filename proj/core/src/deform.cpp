// SPDX-License-Identifier: Apache-2.0
#include "geofno/deform.hpp"

#include <cmath>
#include <numbers>

#include "geofno/error.hpp"
#include "geofno/layers.hpp"
#include "geofno/ops.hpp"
#include "geofno/spectral.hpp"
#include "geofno/tape.hpp"

namespace geofno {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Value plus partials with respect to the two input coordinates.
struct Dual {
  double v = 0.0;
  double d0 = 0.0;
  double d1 = 0.0;
};

Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d0 + b.d0, a.d1 + b.d1}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d0 - b.d0, a.d1 - b.d1}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d0 * b.v + a.v * b.d0, a.d1 * b.v + a.v * b.d1}; }
Dual operator*(double s, Dual a) { return {s * a.v, s * a.d0, s * a.d1}; }
Dual operator+(double s, Dual a) { return {s + a.v, a.d0, a.d1}; }
Dual operator/(Dual a, Dual b) {
  const double q = a.v / b.v;
  return {q, (a.d0 - q * b.d0) / b.v, (a.d1 - q * b.d1) / b.v};
}
Dual sqrt(Dual a) {
  const double r = std::sqrt(a.v);
  const double k = r > 0.0 ? 0.5 / r : 0.0;
  return {r, k * a.d0, k * a.d1};
}
Dual atan2(Dual y, Dual x) {
  const double r2 = x.v * x.v + y.v * y.v;
  return {std::atan2(y.v, x.v), (x.v * y.d0 - y.v * x.d0) / r2, (x.v * y.d1 - y.v * x.d1) / r2};
}
Dual constant(double v) { return {v, 0.0, 0.0}; }

// Radii of the profile at angle theta, linear between neighboring rays.
std::pair<Dual, Dual> radii_at(const RadialProfile& p, Dual theta) {
  const std::size_t rays = p.r_s.size();
  const Dual t = (static_cast<double>(rays) / kTwoPi) * theta;
  const double base = std::floor(t.v);
  const Dual frac = t - constant(base);
  const long i0 = static_cast<long>(base);
  const std::size_t a = static_cast<std::size_t>(((i0 % static_cast<long>(rays)) + static_cast<long>(rays)) %
                                                 static_cast<long>(rays));
  const std::size_t b = (a + 1) % rays;
  const Dual one_minus = constant(1.0) - frac;
  const Dual rs = constant(p.r_s[a]) * one_minus + constant(p.r_s[b]) * frac;
  const Dual re = constant(p.r_e[a]) * one_minus + constant(p.r_e[b]) * frac;
  return {rs, re};
}

// Inverse of r_mesh_deform in the numerically stable root form
// u = 2 delta / (alpha + sqrt(alpha^2 + 4 (1 - alpha) delta / L)).
Dual r_mesh_inverse_radius(Dual rho, Dual rs, Dual re, double alpha) {
  auto root = [alpha](Dual delta, Dual len) {
    const Dual disc = constant(alpha * alpha) + (4.0 * (1.0 - alpha)) * (delta / len);
    return (2.0 * delta) / (alpha + sqrt(disc));
  };
  if (rho.v >= rs.v) return rs + root(rho - rs, re - rs);
  return rs - root(rs - rho, rs);
}

struct PolarDual {
  Dual rho;
  Dual theta;  // in [0, 2 pi)
  Dual dx;
  Dual dy;
};

PolarDual polar(double x, double y, const std::array<double, 2>& c) {
  PolarDual p;
  p.dx = {x - c[0], 1.0, 0.0};
  p.dy = {y - c[1], 0.0, 1.0};
  p.rho = sqrt(p.dx * p.dx + p.dy * p.dy);
  p.theta = atan2(p.dy, p.dx);
  if (p.theta.v < 0.0) p.theta.v += kTwoPi;
  return p;
}

double wrap(double v) { return v - std::floor(v); }

// Applies a closed-form 2-d map pointwise and records its exact Jacobian.
template <typename F>
Tensor pointwise_map_2d(const Tensor& x, F f, const char* name) {
  if (x.is_complex() || x.rank() != 2 || x.dim(1) != 2) {
    throw DimensionError(std::string(name) + ": expected real [N x 2] points, got " + shape_string(x.shape()));
  }
  const std::size_t n = x.dim(0);
  auto p = x.real();
  std::vector<double> out(n * 2);
  std::vector<double> jac(n * 4);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [u, v] = f(p[2 * i], p[2 * i + 1]);
    out[2 * i] = wrap(u.v);
    out[2 * i + 1] = wrap(v.v);
    jac[4 * i] = u.d0;
    jac[4 * i + 1] = u.d1;
    jac[4 * i + 2] = v.d0;
    jac[4 * i + 3] = v.d1;
  }
  Tensor result({n, 2}, std::move(out));
  detail::check_finite(result, name);
  return detail::record(std::move(result), {x},
                        [jac, n](std::span<const double> g, std::span<const std::span<double>> gin) {
                          for (std::size_t i = 0; i < n; ++i) {
                            gin[0][2 * i] += g[2 * i] * jac[4 * i] + g[2 * i + 1] * jac[4 * i + 2];
                            gin[0][2 * i + 1] += g[2 * i] * jac[4 * i + 1] + g[2 * i + 1] * jac[4 * i + 3];
                          }
                        });
}

void check_profile(const RadialProfile& p) {
  if (p.r_s.empty() || p.r_s.size() != p.r_e.size()) {
    throw DimensionError("radial profile needs matching, non-empty r_s and r_e");
  }
  for (std::size_t i = 0; i < p.r_s.size(); ++i) {
    if (!(p.r_s[i] >= 0.0 && p.r_s[i] < p.r_e[i])) {
      throw GeometryError("radial profile needs 0 <= r_s < r_e on ray " + std::to_string(i));
    }
  }
}

}  // namespace

Tensor sinusoidal_features(const Tensor& x, std::size_t m) {
  if (m < 1) throw DimensionError("sinusoidal_features: need at least one frequency");
  if (x.is_complex() || x.rank() < 1) throw DimensionError("sinusoidal_features: expected real [..., d]");
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  const std::size_t width = d + d * m;
  auto src = x.real();
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = src.data() + r * d;
    double* o = out.data() + r * width;
    std::copy_n(xr, d, o);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < m; ++i) o[d + j * m + i] = std::sin(std::ldexp(kTwoPi, static_cast<int>(i)) * xr[j]);
    }
  }
  Shape shape = x.shape();
  shape.back() = width;
  Tensor result(std::move(shape), std::move(out));
  detail::check_finite(result, "sinusoidal_features");
  return detail::record(std::move(result), {x},
                        [x, rows, d, m, width](std::span<const double> g, std::span<const std::span<double>> gin) {
                          auto src = x.real();
                          for (std::size_t r = 0; r < rows; ++r) {
                            const double* xr = src.data() + r * d;
                            const double* gr = g.data() + r * width;
                            double* dst = gin[0].data() + r * d;
                            for (std::size_t j = 0; j < d; ++j) {
                              double acc = gr[j];
                              for (std::size_t i = 0; i < m; ++i) {
                                const double f = std::ldexp(kTwoPi, static_cast<int>(i));
                                acc += gr[d + j * m + i] * f * std::cos(f * xr[j]);
                              }
                              dst[j] += acc;
                            }
                          }
                        });
}

std::vector<std::size_t> DeformNetConfig::layer_sizes() const {
  std::vector<std::size_t> sizes{input_width()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(dim);
  return sizes;
}

DeformNet::DeformNet(DeformNetConfig config, Rng& rng)
    : config_(std::move(config)), params_(init_params(config_, rng)) {}

DeformNet::DeformNet(DeformNetConfig config, std::vector<Tensor> params)
    : config_(std::move(config)), params_(std::move(params)) {
  const auto shapes = param_shapes(config_);
  if (params_.size() != shapes.size()) throw DimensionError("DeformNet: wrong number of parameter tensors");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params_[i].shape() != shapes[i] || params_[i].is_complex()) {
      throw DimensionError("DeformNet: parameter " + std::to_string(i) + " has shape " +
                           shape_string(params_[i].shape()) + ", expected " + shape_string(shapes[i]));
    }
  }
}

std::vector<Shape> DeformNet::param_shapes(const DeformNetConfig& config) {
  const auto sizes = config.layer_sizes();
  std::vector<Shape> shapes;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    shapes.push_back({sizes[i], sizes[i + 1]});
    shapes.push_back({sizes[i + 1]});
  }
  return shapes;
}

std::vector<Tensor> DeformNet::init_params(const DeformNetConfig& config, Rng& rng) {
  if (config.dim < 1 || config.dim > 3) throw DimensionError("DeformNet: dimension must be 1, 2 or 3");
  if (config.frequencies < 1) throw DimensionError("DeformNet: need at least one frequency");
  const auto sizes = config.layer_sizes();
  std::vector<Tensor> params;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    auto [w, b] = nn::init_dense(sizes[i], sizes[i + 1], rng, i + 2 == sizes.size());
    params.push_back(std::move(w));
    params.push_back(std::move(b));
  }
  return params;
}

Tensor DeformNet::apply(const DeformNetConfig& config, std::span<const Tensor> params, const Tensor& x,
                        const std::optional<Tensor>& a) {
  if (x.is_complex() || (x.rank() != 2 && x.rank() != 3) || x.shape().back() != config.dim) {
    throw DimensionError("DeformNet: expected points [N x " + std::to_string(config.dim) + "] or [B x N x " +
                         std::to_string(config.dim) + "], got " + shape_string(x.shape()));
  }
  Tensor features = sinusoidal_features(x, config.frequencies);
  if (config.conditioning > 0) {
    if (!a) throw ConditioningError("DeformNet was built with design-parameter conditioning; none supplied");
    const std::size_t p = config.conditioning;
    Tensor cond;
    if (x.rank() == 2) {
      if (a->shape() != Shape{p}) {
        throw DimensionError("DeformNet: design parameters must be [" + std::to_string(p) + "], got " +
                             shape_string(a->shape()));
      }
      cond = ops::repeat_rows(*a, x.dim(0));
    } else {
      if (a->shape() != Shape{x.dim(0), p}) {
        throw DimensionError("DeformNet: design parameters must be [B x " + std::to_string(p) + "], got " +
                             shape_string(a->shape()));
      }
      cond = ops::expand_rows(*a, x.dim(1));
    }
    features = ops::concat_last({features, cond});
  }
  return ops::wrap_unit(ops::add(x, nn::mlp(features, params)));
}

CoordinateMap CoordinateMap::identity(std::size_t dim) {
  if (dim < 1 || dim > 3) throw DimensionError("identity map dimension must be 1, 2 or 3");
  CoordinateMap m;
  m.variant_ = Variant::kIdentity;
  m.dim_ = dim;
  return m;
}

CoordinateMap CoordinateMap::canonical(std::vector<std::size_t> grid) {
  if (grid.empty() || grid.size() > 3) throw DimensionError("canonical map dimension must be 1, 2 or 3");
  CoordinateMap m;
  m.variant_ = Variant::kCanonical;
  m.dim_ = grid.size();
  m.grid_ = std::move(grid);
  return m;
}

CoordinateMap CoordinateMap::r_mesh(RadialProfile profile, double alpha) {
  check_profile(profile);
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("r_mesh: alpha must lie in (0, 1]");
  CoordinateMap m;
  m.variant_ = Variant::kRMesh;
  m.profile_ = std::move(profile);
  m.alpha_ = alpha;
  return m;
}

CoordinateMap CoordinateMap::o_mesh(RadialProfile profile, std::size_t n_radial) {
  check_profile(profile);
  if (n_radial < 2) throw DimensionError("o_mesh: need n_radial >= 2");
  CoordinateMap m;
  m.variant_ = Variant::kOMesh;
  m.profile_ = std::move(profile);
  m.n_radial_ = n_radial;
  return m;
}

CoordinateMap CoordinateMap::learned(DeformNet net) {
  CoordinateMap m;
  m.variant_ = Variant::kLearned;
  m.dim_ = net.config().dim;
  m.net_ = std::move(net);
  return m;
}

const DeformNet& CoordinateMap::net() const {
  if (!net_) throw KindError("coordinate map has no deformation network");
  return *net_;
}

Tensor deform_inverse(const CoordinateMap& map, const Tensor& x, const std::optional<Tensor>& a) {
  if (x.is_complex() || x.rank() < 2 || x.shape().back() != map.dim()) {
    throw DimensionError("deform_inverse: expected points with " + std::to_string(map.dim()) +
                         " coordinates, got " + shape_string(x.shape()));
  }
  switch (map.variant()) {
    case CoordinateMap::Variant::kIdentity:
      return ops::wrap_unit(x);
    case CoordinateMap::Variant::kLearned:
      return map.net()(x, a);
    case CoordinateMap::Variant::kCanonical: {
      const std::size_t n = shape_numel(map.grid());
      if (x.rank() != 2 || x.dim(0) != n) {
        throw DimensionError("deform_inverse: canonical map expects the " + std::to_string(n) + " mesh nodes");
      }
      return uniform_grid_points(map.grid());
    }
    case CoordinateMap::Variant::kRMesh: {
      const auto& prof = map.profile();
      const double alpha = map.alpha();
      return pointwise_map_2d(
          x,
          [&prof, alpha](double px, double py) {
            const PolarDual p = polar(px, py, prof.center);
            if (p.rho.v == 0.0) return std::pair{constant(prof.center[0]), constant(prof.center[1])};
            const auto [rs, re] = radii_at(prof, p.theta);
            const Dual r = r_mesh_inverse_radius(p.rho, rs, re, alpha);
            const Dual scale = r / p.rho;
            return std::pair{prof.center[0] + scale * p.dx, prof.center[1] + scale * p.dy};
          },
          "deform_inverse(r_mesh)");
    }
    case CoordinateMap::Variant::kOMesh: {
      const auto& prof = map.profile();
      const double spacing = static_cast<double>(map.n_radial() - 1) / static_cast<double>(map.n_radial());
      return pointwise_map_2d(
          x,
          [&prof, spacing](double px, double py) {
            const PolarDual p = polar(px, py, prof.center);
            const auto [rs, re] = radii_at(prof, p.theta);
            const Dual frac = (p.rho - rs) / (re - rs);
            return std::pair{(1.0 / kTwoPi) * p.theta, spacing * frac};
          },
          "deform_inverse(o_mesh)");
    }
  }
  throw KindError("unknown coordinate map variant");
}

}  // namespace geofno
