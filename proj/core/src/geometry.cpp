// SPDX-License-Identifier: Apache-2.0
#include "geofno/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "geofno/error.hpp"
#include "geofno/ops.hpp"
#include "geofno/tape.hpp"

namespace geofno {

Geometry Geometry::point_cloud(Tensor points, std::optional<Tensor> design_params) {
  Geometry g;
  g.kind = GeometryKind::kPointCloud;
  g.points = std::move(points);
  g.design_params = std::move(design_params);
  g.validate();
  return g;
}

Geometry Geometry::structured(Tensor points, std::optional<Tensor> design_params) {
  Geometry g;
  g.kind = GeometryKind::kStructuredMesh;
  g.points = std::move(points);
  g.design_params = std::move(design_params);
  g.validate();
  return g;
}

std::size_t Geometry::dim() const { return points.shape().back(); }

std::size_t Geometry::point_count() const { return points.numel() / dim(); }

std::vector<std::size_t> Geometry::grid() const {
  if (kind != GeometryKind::kStructuredMesh) throw KindError("grid() requires a structured mesh");
  return {points.shape().begin(), points.shape().end() - 1};
}

Tensor Geometry::flat_points() const { return ops::reshape(points, {point_count(), dim()}); }

Geometry Geometry::as_point_cloud() const {
  Geometry g = *this;
  g.kind = GeometryKind::kPointCloud;
  g.points = flat_points();
  return g;
}

void Geometry::validate() const {
  if (!points.defined() || points.is_complex() || points.rank() < 2) {
    throw DimensionError("geometry points must be a real tensor of rank >= 2");
  }
  const std::size_t d = points.shape().back();
  if (d < 1 || d > 3) throw DimensionError("geometry dimension must be 1, 2 or 3, got " + std::to_string(d));
  if (kind == GeometryKind::kPointCloud && points.rank() != 2) {
    throw DimensionError("point cloud must be [N x d], got " + shape_string(points.shape()));
  }
  if (kind == GeometryKind::kStructuredMesh && points.rank() != d + 1) {
    throw DimensionError("structured mesh must be [s_1 .. s_d x d], got " + shape_string(points.shape()));
  }
  for (double v : points.real()) {
    if (!std::isfinite(v)) throw GeometryError("geometry coordinates must be finite");
  }
  if (mask && mask->size() != point_count()) {
    throw DimensionError("mask has " + std::to_string(mask->size()) + " flags for " + std::to_string(point_count()) +
                         " points");
  }
  if (design_params && (design_params->is_complex() || design_params->rank() != 1)) {
    throw DimensionError("design parameters must be a real vector");
  }
}

Tensor canonical_map(const Geometry& mesh) {
  if (mesh.kind != GeometryKind::kStructuredMesh) throw KindError("canonical_map requires a structured mesh");
  const auto grid = mesh.grid();
  const std::size_t d = grid.size();
  const std::size_t n = shape_numel(grid);
  std::vector<double> out(n * d);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) out[i * d + a] = static_cast<double>(idx[a]) / static_cast<double>(grid[a]);
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < grid[a]) break;
      idx[a] = 0;
    }
  }
  return Tensor(mesh.points.shape(), std::move(out));
}

double r_mesh_deform(double r, double r_s, double r_e, double alpha) {
  if (r < 0.0) throw DomainError("r_mesh_deform: negative radius");
  if (!(r_s >= 0.0 && r_s < r_e)) throw DomainError("r_mesh_deform: need 0 <= r_s < r_e");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("r_mesh_deform: alpha must lie in (0, 1]");
  if (r >= r_s) {
    const double u = r - r_s;
    return r_s + alpha * u + (1.0 - alpha) * u * u / (r_e - r_s);
  }
  const double w = r_s - r;
  return r_s - alpha * w - (1.0 - alpha) * w * w / r_s;
}

Geometry o_mesh_generate(const std::vector<double>& r_s, const std::vector<double>& r_e, std::size_t n_azimuth,
                         std::size_t n_radial, std::array<double, 2> center) {
  if (n_azimuth < 4 || n_radial < 2) throw DimensionError("o_mesh_generate: need n_azimuth >= 4 and n_radial >= 2");
  auto per_ray = [n_azimuth](const std::vector<double>& v, const char* name) {
    if (v.size() == 1) return std::vector<double>(n_azimuth, v[0]);
    if (v.size() != n_azimuth) {
      throw DimensionError(std::string("o_mesh_generate: ") + name + " needs 1 or n_azimuth values");
    }
    return v;
  };
  const auto rs = per_ray(r_s, "r_s");
  const auto re = per_ray(r_e, "r_e");
  std::vector<double> pts(n_azimuth * n_radial * 2);
  for (std::size_t i = 0; i < n_azimuth; ++i) {
    if (!(rs[i] < re[i])) throw GeometryError("o_mesh_generate: r_s >= r_e on ray " + std::to_string(i));
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_azimuth);
    for (std::size_t j = 0; j < n_radial; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(n_radial - 1);
      const double rho = j + 1 == n_radial ? re[i] : rs[i] + (re[i] - rs[i]) * t;
      pts[(i * n_radial + j) * 2] = center[0] + rho * std::cos(theta);
      pts[(i * n_radial + j) * 2 + 1] = center[1] + rho * std::sin(theta);
    }
  }
  return Geometry::structured(Tensor({n_azimuth, n_radial, 2}, std::move(pts)));
}

UniformGridField interp_to_uniform(const Geometry& cloud, const Tensor& values, std::size_t s) {
  if (cloud.kind != GeometryKind::kPointCloud) throw KindError("interp_to_uniform requires a point cloud");
  if (cloud.dim() != 2) throw DimensionError("interp_to_uniform requires a 2-d cloud");
  const std::size_t n = cloud.point_count();
  if (n == 0) throw GeometryError("interp_to_uniform: empty cloud");
  if (values.is_complex() || values.rank() != 2 || values.dim(0) != n) {
    throw DimensionError("interp_to_uniform: values must be [N x c] with N = point count");
  }
  if (s < 2) throw DimensionError("interp_to_uniform: grid needs s >= 2");
  const std::size_t c = values.dim(1);
  auto p = cloud.points.real();
  auto v = values.real();
  constexpr std::size_t kNeighbors = 4;
  const std::size_t k = std::min(kNeighbors, n);
  const double radius = 3.0 / static_cast<double>(s);

  UniformGridField out;
  std::vector<double> grid(s * s * c, 0.0);
  out.mask.assign(s * s, 0);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      const double gx = static_cast<double>(i) / static_cast<double>(s);
      const double gy = static_cast<double>(j) / static_cast<double>(s);
      for (std::size_t q = 0; q < n; ++q) {
        const double dx = p[2 * q] - gx, dy = p[2 * q + 1] - gy;
        dist[q] = {dx * dx + dy * dy, q};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      if (std::sqrt(dist[0].first) > radius) continue;
      const std::size_t cell = i * s + j;
      out.mask[cell] = 1;
      double* dst = grid.data() + cell * c;
      if (dist[0].first == 0.0) {
        std::copy_n(v.data() + dist[0].second * c, c, dst);
        continue;
      }
      double wsum = 0.0;
      for (std::size_t q = 0; q < k; ++q) {
        const double w = 1.0 / dist[q].first;
        wsum += w;
        for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += w * v[dist[q].second * c + ch];
      }
      for (std::size_t ch = 0; ch < c; ++ch) dst[ch] /= wsum;
    }
  }
  out.values = Tensor({s, s, c}, std::move(grid));
  return out;
}

Tensor sample_bilinear(const Tensor& grid_values, const Tensor& points) {
  if (grid_values.is_complex() || grid_values.rank() != 3) {
    throw DimensionError("sample_bilinear: grid values must be real [s_1 x s_2 x c]");
  }
  if (points.is_complex() || points.rank() != 2 || points.dim(1) != 2) {
    throw DimensionError("sample_bilinear: points must be [N x 2]");
  }
  const std::size_t s1 = grid_values.dim(0), s2 = grid_values.dim(1), c = grid_values.dim(2);
  const std::size_t n = points.dim(0);
  struct Stencil {
    std::size_t idx[4];
    double w[4];
  };
  std::vector<Stencil> stencils(n);
  auto p = points.real();
  for (std::size_t q = 0; q < n; ++q) {
    const double u = p[2 * q] * static_cast<double>(s1);
    const double v = p[2 * q + 1] * static_cast<double>(s2);
    const double fu = std::floor(u), fv = std::floor(v);
    const double tu = u - fu, tv = v - fv;
    const long i0 = static_cast<long>(fu), j0 = static_cast<long>(fv);
    auto wrap = [](long i, std::size_t m) { return static_cast<std::size_t>(((i % static_cast<long>(m)) + static_cast<long>(m)) % static_cast<long>(m)); };
    const std::size_t ia = wrap(i0, s1), ib = wrap(i0 + 1, s1);
    const std::size_t ja = wrap(j0, s2), jb = wrap(j0 + 1, s2);
    stencils[q] = {{ia * s2 + ja, ia * s2 + jb, ib * s2 + ja, ib * s2 + jb},
                   {(1 - tu) * (1 - tv), (1 - tu) * tv, tu * (1 - tv), tu * tv}};
  }
  auto g = grid_values.real();
  std::vector<double> out(n * c, 0.0);
  for (std::size_t q = 0; q < n; ++q) {
    for (int t = 0; t < 4; ++t) {
      for (std::size_t ch = 0; ch < c; ++ch) out[q * c + ch] += stencils[q].w[t] * g[stencils[q].idx[t] * c + ch];
    }
  }
  Tensor result({n, c}, std::move(out));
  detail::check_finite(result, "sample_bilinear");
  return detail::record(std::move(result), {grid_values},
                        [stencils, n, c](std::span<const double> gout, std::span<const std::span<double>> gin) {
                          for (std::size_t q = 0; q < n; ++q) {
                            for (int t = 0; t < 4; ++t) {
                              for (std::size_t ch = 0; ch < c; ++ch) {
                                gin[0][stencils[q].idx[t] * c + ch] += stencils[q].w[t] * gout[q * c + ch];
                              }
                            }
                          }
                        });
}

}  // namespace geofno
