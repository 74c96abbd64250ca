// SPDX-License-Identifier: Apache-2.0
#include "geofno/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "geofno/blob.hpp"
#include "geofno/error.hpp"
#include "geofno/parallel.hpp"
#include "geofno/poisson.hpp"
#include "geofno/rng.hpp"

namespace geofno {

namespace {

constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kTestStream = 2;

struct Radii {
  double inner;
  double outer;
};

Radii radii(const SyntheticConfig& c, std::span<const double> a, double theta) {
  const std::size_t k = c.modes;
  double outer = 1.0 + a[0];
  double inner = c.inner_radius;
  for (std::size_t m = 1; m <= k; ++m) {
    const double cs = std::cos(static_cast<double>(m) * theta), sn = std::sin(static_cast<double>(m) * theta);
    outer += a[m] * cs + a[k + m] * sn;
    inner += a[2 * k + m] * cs + a[3 * k + m] * sn;
  }
  return {inner, outer};
}

std::vector<double> draw_design(const SyntheticConfig& c, Rng& rng) {
  std::vector<double> a(c.design_size());
  const std::size_t k = c.modes;
  a[0] = rng.uniform(-c.outer_offset_bound, c.outer_offset_bound);
  for (std::size_t m = 1; m <= 2 * k; ++m) a[m] = rng.uniform(-c.outer_bound, c.outer_bound);
  for (std::size_t m = 2 * k + 1; m <= 4 * k; ++m) a[m] = rng.uniform(-c.inner_bound, c.inner_bound);
  a[4 * k + 1] = rng.uniform(-c.source_bound, c.source_bound);
  a[4 * k + 2] = rng.uniform(-c.source_bound, c.source_bound);
  return a;
}

DatasetBundle generate(const SyntheticConfig& c, std::uint64_t stream, std::size_t count) {
  DatasetBundle b;
  b.manifest = synthetic_manifest(c);
  b.records.resize(count);
  const std::uint64_t base = derive_seed(c.seed, stream);
  parallel_for(count, [&](std::size_t i) {
    Rng rng(derive_seed(base, i));
    for (std::size_t attempt = 0; attempt <= c.max_retries; ++attempt) {
      const auto a = draw_design(c, rng);
      if (valid_design(c, a)) {
        b.records[i] = synthetic_record(c, a);
        return;
      }
    }
    throw GeometryError("no valid annulus after " + std::to_string(c.max_retries) + " retries");
  });
  return b;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (family != "deformed_annulus_poisson") throw ConfigError("unknown synthetic family '" + family + "'");
  if (n_theta < 4 || n_radial < 3) throw ConfigError("synthetic mesh needs n_theta >= 4 and n_radial >= 3");
  if (refine < 1) throw ConfigError("data.refine must be >= 1");
  for (double b : {outer_offset_bound, outer_bound, inner_bound, source_bound}) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("coefficient bounds must be finite and non-negative");
  }
  if (!(inner_radius > 0.0)) throw ConfigError("data.inner_radius must be positive");
  if (!(min_gap > 0.0)) throw ConfigError("data.min_gap must be positive");
  if (inner_radius - 2.0 * static_cast<double>(modes) * inner_bound <= 0.05) {
    throw ConfigError("inner radius is not bounded away from 0 under the coefficient bounds");
  }
  if (!(coordinate_scale > 0.0)) throw ConfigError("data.coordinate_scale must be positive");
  const double reach = 1.0 + outer_offset_bound + 2.0 * static_cast<double>(modes) * outer_bound;
  if (coordinate_scale * reach >= 0.5) throw ConfigError("scaled domains would leave the unit square");
}

void SyntheticConfig::write_to(ConfigFile& f, const std::string& s) const {
  f.set(s, "family", family);
  f.set(s, "n_theta", std::to_string(n_theta));
  f.set(s, "n_radial", std::to_string(n_radial));
  f.set(s, "modes", std::to_string(modes));
  f.set(s, "outer_offset_bound", format_double(outer_offset_bound));
  f.set(s, "outer_bound", format_double(outer_bound));
  f.set(s, "inner_radius", format_double(inner_radius));
  f.set(s, "inner_bound", format_double(inner_bound));
  f.set(s, "source_bound", format_double(source_bound));
  f.set(s, "min_gap", format_double(min_gap));
  f.set(s, "coordinate_scale", format_double(coordinate_scale));
  f.set(s, "refine", std::to_string(refine));
  f.set(s, "train_count", std::to_string(train_count));
  f.set(s, "test_count", std::to_string(test_count));
  f.set(s, "seed", std::to_string(seed));
  f.set(s, "max_retries", std::to_string(max_retries));
}

std::string SyntheticConfig::to_text() const {
  ConfigFile f;
  write_to(f, "data");
  return f.to_string();
}

std::string SyntheticConfig::hash() const { return blob::hex64(blob::fnv1a(to_text())); }

SyntheticConfig SyntheticConfig::from_config(const ConfigFile& f, const std::string& s) {
  f.require_known(s, {"family", "n_theta", "n_radial", "modes", "outer_offset_bound", "outer_bound", "inner_radius",
                      "inner_bound", "source_bound", "min_gap", "coordinate_scale", "refine", "train_count",
                      "test_count", "seed", "max_retries"});
  SyntheticConfig c;
  auto count = [&](const char* key, std::size_t fallback) {
    const long long v = f.get_int(s, key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError("key " + s + "." + key + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  c.family = f.get_string(s, "family", c.family);
  c.n_theta = count("n_theta", c.n_theta);
  c.n_radial = count("n_radial", c.n_radial);
  c.modes = count("modes", c.modes);
  c.outer_offset_bound = f.get_double(s, "outer_offset_bound", c.outer_offset_bound);
  c.outer_bound = f.get_double(s, "outer_bound", c.outer_bound);
  c.inner_radius = f.get_double(s, "inner_radius", c.inner_radius);
  c.inner_bound = f.get_double(s, "inner_bound", c.inner_bound);
  c.source_bound = f.get_double(s, "source_bound", c.source_bound);
  c.min_gap = f.get_double(s, "min_gap", c.min_gap);
  c.coordinate_scale = f.get_double(s, "coordinate_scale", c.coordinate_scale);
  c.refine = count("refine", c.refine);
  c.train_count = count("train_count", c.train_count);
  c.test_count = count("test_count", c.test_count);
  c.seed = count("seed", 0);
  c.max_retries = count("max_retries", c.max_retries);
  c.validate();
  return c;
}

Tensor annulus_mesh(const SyntheticConfig& c, std::span<const double> a, std::size_t n_theta, std::size_t n_radial) {
  if (a.size() != c.design_size()) throw DimensionError("design vector has the wrong length");
  std::vector<double> pts(n_theta * n_radial * 2);
  for (std::size_t i = 0; i < n_theta; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_theta);
    const Radii r = radii(c, a, theta);
    for (std::size_t j = 0; j < n_radial; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(n_radial - 1);
      const double rho = r.inner + (r.outer - r.inner) * t;
      pts[(i * n_radial + j) * 2] = rho * std::cos(theta);
      pts[(i * n_radial + j) * 2 + 1] = rho * std::sin(theta);
    }
  }
  return Tensor({n_theta, n_radial, 2}, std::move(pts));
}

AnnulusBasis annulus_basis(const SyntheticConfig& c) {
  const std::size_t p = c.design_size(), nt = c.n_theta, nr = c.n_radial, k = c.modes;
  const std::size_t w = nt * nr * 2;
  std::vector<double> basis(p * w, 0.0), offset(w);
  for (std::size_t i = 0; i < nt; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nt);
    const double cs = std::cos(theta), sn = std::sin(theta);
    for (std::size_t j = 0; j < nr; ++j) {
      const double t = static_cast<double>(j) / static_cast<double>(nr - 1);
      const std::size_t col = (i * nr + j) * 2;
      // rho = (1 - t) r_in(theta) + t r_out(theta), both affine in the design.
      const double rho0 = (1.0 - t) * c.inner_radius + t;
      offset[col] = 0.5 + c.coordinate_scale * rho0 * cs;
      offset[col + 1] = 0.5 + c.coordinate_scale * rho0 * sn;
      auto put = [&](std::size_t row, double drho) {
        basis[row * w + col] = c.coordinate_scale * drho * cs;
        basis[row * w + col + 1] = c.coordinate_scale * drho * sn;
      };
      put(0, t);
      for (std::size_t m = 1; m <= k; ++m) {
        const double cm = std::cos(static_cast<double>(m) * theta), sm = std::sin(static_cast<double>(m) * theta);
        put(m, t * cm);
        put(k + m, t * sm);
        put(2 * k + m, (1.0 - t) * cm);
        put(3 * k + m, (1.0 - t) * sm);
      }
    }
  }
  return {Tensor({p, w}, std::move(basis)), Tensor({w}, std::move(offset))};
}

bool valid_design(const SyntheticConfig& c, std::span<const double> a) {
  if (a.size() != c.design_size()) return false;
  constexpr int kSamples = 720;
  for (int q = 0; q < kSamples; ++q) {
    const Radii r = radii(c, a, 2.0 * std::numbers::pi * q / kSamples);
    if (!(r.inner > 0.05) || !(r.outer - r.inner >= c.min_gap)) return false;
  }
  return true;
}

SampleRecord synthetic_record(const SyntheticConfig& c, std::span<const double> a) {
  if (!valid_design(c, a)) throw GeometryError("design violates the annulus constraints");
  const std::size_t nt = c.n_theta * c.refine, nr = (c.n_radial - 1) * c.refine + 1;
  const Tensor fine = annulus_mesh(c, a, nt, nr);
  const double s1 = a[4 * c.modes + 1], s2 = a[4 * c.modes + 2];
  const auto fp = fine.real();
  std::vector<double> f(nt * nr);
  for (std::size_t q = 0; q < nt * nr; ++q) f[q] = 1.0 + s1 * fp[2 * q] + s2 * fp[2 * q + 1];
  const ReferenceSolution sol = solve_reference(Geometry::structured(fine), Tensor({nt, nr}, std::move(f)));

  const std::size_t ct = c.n_theta, cr = c.n_radial;
  const Tensor coarse = annulus_mesh(c, a, ct, cr);
  const auto cp = coarse.real();
  const auto u = sol.u.real();
  std::vector<double> pts(ct * cr * 2), src(ct * cr), out(ct * cr);
  for (std::size_t i = 0; i < ct; ++i) {
    for (std::size_t j = 0; j < cr; ++j) {
      const std::size_t q = i * cr + j;
      const double x = cp[2 * q], y = cp[2 * q + 1];
      pts[2 * q] = 0.5 + c.coordinate_scale * x;
      pts[2 * q + 1] = 0.5 + c.coordinate_scale * y;
      src[q] = 1.0 + s1 * x + s2 * y;
      out[q] = u[(i * c.refine) * nr + j * c.refine];
    }
  }
  SampleRecord r;
  r.geometry = Geometry::structured(Tensor({ct, cr, 2}, std::move(pts)),
                                    Tensor({a.size()}, std::vector<double>(a.begin(), a.end())));
  r.input = Tensor({ct, cr, 1}, std::move(src));
  r.output = Tensor({ct, cr, 1}, std::move(out));
  return r;
}

DatasetManifest synthetic_manifest(const SyntheticConfig& c) {
  DatasetManifest m;
  m.problem = c.family;
  m.io_mode = IoMode::kPointCloud;
  m.dim = 2;
  m.input_channels = {"f"};
  m.input_units = {"1"};
  m.output_channels = {"u"};
  m.output_units = {"1"};
  m.generator_hash = c.hash();
  return m;
}

SyntheticSplit gen_synthetic(const SyntheticConfig& config) {
  config.validate();
  return {generate(config, kTrainStream, config.train_count), generate(config, kTestStream, config.test_count)};
}

double annulus_closed_form(double r, double r_in, double r_out) {
  // u = -r^2/4 + A ln r + B with u(r_in) = u(r_out) = 0.
  const double a = (r_out * r_out - r_in * r_in) / (4.0 * std::log(r_out / r_in));
  const double b = r_out * r_out / 4.0 - a * std::log(r_out);
  return -r * r / 4.0 + a * std::log(r) + b;
}

}  // namespace geofno
