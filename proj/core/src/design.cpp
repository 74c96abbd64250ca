// SPDX-License-Identifier: Apache-2.0
#include "geofno/design.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "geofno/blob.hpp"
#include "geofno/error.hpp"
#include "geofno/ops.hpp"
#include "geofno/optim.hpp"
#include "geofno/tape.hpp"

namespace geofno {

namespace {

std::vector<double> parse_doubles(const ConfigFile& f, const std::string& s, const char* key,
                                  const std::vector<double>& fallback) {
  const std::string* v = f.find(s, key);
  if (!v) return fallback;
  std::vector<double> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double d = std::strtod(item.c_str(), &end);
    if (item.empty() || (*end != '\0' && *end != ' ')) {
      throw ConfigError("key " + s + "." + key + ": not a number list: " + *v);
    }
    out.push_back(d);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

std::vector<double> full_design(const SyntheticConfig& data, const DesignObjectiveConfig& obj,
                                const std::vector<double>& theta) {
  std::vector<double> a = obj.base.empty() ? std::vector<double>(data.design_size(), 0.0) : obj.base;
  for (std::size_t i = 0; i < obj.free.size(); ++i) a[obj.free[i]] = theta[i];
  return a;
}

double vector_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------- boundary

BoundaryQuadrature boundary_quadrature(const Tensor& polyline) {
  if (polyline.is_complex() || polyline.rank() != 2 || polyline.dim(1) != 2) {
    throw DimensionError("boundary polyline must be [N x 2]");
  }
  const std::size_t n = polyline.dim(0);
  if (n < 3) throw GeometryError("a closed boundary needs at least 3 points");
  const auto p = polyline.real();
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (p[2 * i] == p[2 * j] && p[2 * i + 1] == p[2 * j + 1]) {
      throw GeometryError("degenerate boundary: repeated consecutive point " + std::to_string(i));
    }
    area2 += p[2 * i] * p[2 * j + 1] - p[2 * j] * p[2 * i + 1];
  }
  if (!(std::abs(area2) > 0.0)) throw GeometryError("degenerate boundary: zero enclosed area");
  std::vector<double> normals(2 * n), weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t next = (i + 1) % n, prev = (i + n - 1) % n;
    const double tx = p[2 * next] - p[2 * prev], ty = p[2 * next + 1] - p[2 * prev + 1];
    const double len = std::hypot(tx, ty);
    if (!(len > 0.0)) throw GeometryError("degenerate boundary: zero-length chord at point " + std::to_string(i));
    normals[2 * i] = ty / len;
    normals[2 * i + 1] = -tx / len;
    weights[i] = 0.5 * len;
  }
  return {Tensor({n, 2}, std::move(normals)), Tensor({n}, std::move(weights))};
}

Tensor boundary_functional(const Tensor& field, const BoundaryQuadrature& b, std::size_t axis) {
  if (axis > 1) throw DimensionError("boundary axis must be 0 or 1");
  const std::size_t n = b.weights.numel();
  if (field.numel() != n || field.is_complex()) throw DimensionError("boundary field needs one real value per point");
  const auto nrm = b.normals.real();
  const auto w = b.weights.real();
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = nrm[2 * i + axis] * w[i];
  return ops::sum(ops::mul(ops::reshape(field, {n}), Tensor({n}, std::move(k))));
}

// ---------------------------------------------------------------- problem

void DesignProblem::validate() const {
  const std::size_t q = initial.size();
  if (q == 0) throw ConfigError("design problem without parameters");
  if (lower.size() != q || upper.size() != q) throw DimensionError("design bounds must match the parameter count");
  for (std::size_t i = 0; i < q; ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] <= upper[i])) {
      throw ConfigError("design bounds must be finite with lower <= upper");
    }
    if (initial[i] < lower[i] || initial[i] > upper[i]) throw DomainError("initial design lies outside its bounds");
  }
  if (!evaluate) throw ConfigError("design problem has no objective");
}

std::string DesignTrace::to_text() const {
  std::ostringstream os;
  os << "# iteration objective grad_norm";
  if (!iterations.empty()) {
    for (std::size_t i = 0; i < iterations.front().theta.size(); ++i) os << " theta_" << i;
    for (const auto& [name, value] : iterations.front().components) os << ' ' << name;
  }
  os << "\n";
  for (const auto& it : iterations) {
    os << it.iteration << ' ' << format_double(it.objective) << ' ' << format_double(it.grad_norm);
    for (double t : it.theta) os << ' ' << format_double(t);
    for (const auto& [name, value] : it.components) os << ' ' << format_double(value);
    os << "\n";
  }
  return os.str();
}

DesignResult optimize_design(const DesignProblem& problem, std::size_t steps, double lr) {
  problem.validate();
  if (!(lr > 0.0)) throw ConfigError("design learning rate must be positive");
  const std::size_t q = problem.initial.size();
  Tensor theta({q}, std::vector<double>(problem.initial));
  AdamState state = AdamState::for_params(std::span<const Tensor>(&theta, 1));
  const AdamConfig adam{lr, 0.9, 0.999, 1e-8};
  DesignResult result;
  for (std::size_t it = 0; it < steps; ++it) {
    const Tensor leaf = theta.with_grad();
    Tape tape;
    DesignEvaluation ev;
    double value = 0.0;
    try {
      ev = problem.evaluate(leaf);
      value = ev.objective.item();
    } catch (const NumericError& e) {
      throw DivergenceError(std::string("non-finite design objective: ") + e.what(), static_cast<std::int64_t>(it));
    }
    if (!std::isfinite(value)) throw DivergenceError("non-finite design objective", static_cast<std::int64_t>(it));
    tape.backward(ev.objective);
    const Tensor grad = tape.grad_or_zeros(leaf);
    DesignIterate rec;
    rec.iteration = it;
    rec.theta = theta.to_vector();
    rec.objective = value;
    for (const auto& [name, t] : ev.components) rec.components.emplace_back(name, t.item());
    rec.grad_norm = vector_norm(grad.real());
    result.trace.iterations.push_back(std::move(rec));

    auto next = adam_step(std::span<const Tensor>(&theta, 1), std::span<const Tensor>(&grad, 1), state, adam);
    std::vector<double> v = next[0].to_vector();
    for (std::size_t i = 0; i < q; ++i) v[i] = std::clamp(v[i], problem.lower[i], problem.upper[i]);
    theta = Tensor({q}, std::move(v));
  }
  result.theta = theta.to_vector();
  NoGradGuard no_grad;
  result.objective = problem.evaluate(theta).objective.item();
  return result;
}

DesignVerification verify_design(const DesignProblem& problem, const std::vector<double>& theta) {
  if (!problem.reference) throw ConfigError("design problem has no reference solver");
  if (theta.size() != problem.initial.size()) throw DimensionError("design vector has the wrong length");
  DesignVerification v;
  {
    NoGradGuard no_grad;
    v.surrogate = problem.evaluate(Tensor({theta.size()}, std::vector<double>(theta))).field_objective.item();
  }
  v.solver = problem.reference(theta);
  v.gap = std::abs(v.surrogate - v.solver) / std::abs(v.solver);
  return v;
}

DesignScan scan_design(const DesignProblem& problem, std::size_t points) {
  problem.validate();
  if (problem.initial.size() != 1) throw DimensionError("scan_design needs a one-parameter problem");
  if (points < 2) throw DimensionError("scan_design needs at least 2 points");
  DesignScan scan;
  NoGradGuard no_grad;
  const double lo = problem.lower[0], hi = problem.upper[0];
  for (std::size_t i = 0; i < points; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    scan.grid.push_back(t);
    scan.values.push_back(problem.evaluate(Tensor({1}, std::vector<double>{t})).objective.item());
  }
  scan.best = static_cast<std::size_t>(std::min_element(scan.values.begin(), scan.values.end()) - scan.values.begin());
  return scan;
}

// ---------------------------------------------------------------- synthetic problem

DesignObjectiveConfig DesignObjectiveConfig::from_config(const ConfigFile& f, const std::string& s) {
  f.require_known(s, {"w_mean", "w_reg", "w_drag", "w_lift", "free", "lower", "upper", "theta_ref", "base", "steps",
                      "lr"});
  DesignObjectiveConfig c;
  c.w_mean = f.get_double(s, "w_mean", c.w_mean);
  c.w_reg = f.get_double(s, "w_reg", c.w_reg);
  c.w_drag = f.get_double(s, "w_drag", c.w_drag);
  c.w_lift = f.get_double(s, "w_lift", c.w_lift);
  c.free.clear();
  for (long long i : f.get_int_list(s, "free", {0})) {
    if (i < 0) throw ConfigError("key " + s + ".free: negative index");
    c.free.push_back(static_cast<std::size_t>(i));
  }
  c.lower = parse_doubles(f, s, "lower", c.lower);
  c.upper = parse_doubles(f, s, "upper", c.upper);
  c.theta_ref = parse_doubles(f, s, "theta_ref", std::vector<double>(c.free.size(), 0.0));
  c.base = parse_doubles(f, s, "base", {});
  return c;
}

void DesignObjectiveConfig::write_to(ConfigFile& f, const std::string& s) const {
  f.set(s, "w_mean", format_double(w_mean));
  f.set(s, "w_reg", format_double(w_reg));
  f.set(s, "w_drag", format_double(w_drag));
  f.set(s, "w_lift", format_double(w_lift));
  std::string fr;
  for (std::size_t i = 0; i < free.size(); ++i) fr += (i ? "," : "") + std::to_string(free[i]);
  f.set(s, "free", fr);
  f.set(s, "lower", join_doubles(lower));
  f.set(s, "upper", join_doubles(upper));
  f.set(s, "theta_ref", join_doubles(theta_ref));
  if (!base.empty()) f.set(s, "base", join_doubles(base));
}

DesignProblem synthetic_design_problem(const GeoFnoModel& model, const SyntheticConfig& data,
                                       const DesignObjectiveConfig& obj) {
  data.validate();
  const auto& mc = model.config();
  if (mc.io_mode != IoMode::kPointCloud || mc.dim != 2 || mc.in_channels != 1 || mc.out_channels != 1) {
    throw ConfigError("synthetic design needs a 2-d point-cloud model with one input and one output channel");
  }
  const std::size_t p = data.design_size(), q = obj.free.size();
  if (q == 0 || obj.lower.size() != q || obj.upper.size() != q || obj.theta_ref.size() != q) {
    throw ConfigError("design free/lower/upper/theta_ref lists must have equal non-zero length");
  }
  for (std::size_t i : obj.free) {
    if (i >= p) throw ConfigError("design free index " + std::to_string(i) + " out of range");
  }
  if (!obj.base.empty() && obj.base.size() != p) throw ConfigError("design base vector has the wrong length");

  const std::size_t nt = data.n_theta, nr = data.n_radial, n = nt * nr;
  const AnnulusBasis basis = annulus_basis(data);
  std::vector<double> select(q * p, 0.0);
  for (std::size_t i = 0; i < q; ++i) select[i * p + obj.free[i]] = 1.0;
  const Tensor scatter({q, p}, std::move(select));
  const std::vector<double> base_vec = obj.base.empty() ? std::vector<double>(p, 0.0) : obj.base;
  std::vector<double> base_masked = base_vec;
  for (std::size_t i : obj.free) base_masked[i] = 0.0;
  const Tensor base({p}, std::move(base_masked));
  std::vector<double> pick(n * nt, 0.0);
  for (std::size_t i = 0; i < nt; ++i) pick[(i * nr + nr - 1) * nt + i] = 1.0;
  const Tensor outer({n, nt}, std::move(pick));
  const Tensor ones2({2, 1}, std::vector<double>{1.0, 1.0});
  const Tensor ref({q}, std::vector<double>(obj.theta_ref));
  const bool conditioned = mc.map == MapKind::kLearned && mc.deform.conditioning > 0;
  if (conditioned && mc.deform.conditioning != p) {
    throw ConditioningError("model conditioning width differs from the design vector length");
  }

  DesignProblem prob;
  prob.initial = std::vector<double>(q);
  for (std::size_t i = 0; i < q; ++i) {
    prob.initial[i] = std::clamp(base_vec[obj.free[i]], obj.lower[i], obj.upper[i]);
  }
  prob.lower = obj.lower;
  prob.upper = obj.upper;

  const double scale = data.coordinate_scale;
  const GeoFnoModel frozen = model;
  prob.evaluate = [=](const Tensor& theta) {
    if (theta.numel() != q) throw DimensionError("design vector has the wrong length");
    const Tensor a = ops::add(ops::linear(ops::reshape(theta, {1, q}), scatter), base);  // [1 x p]
    const Tensor flat = ops::add(ops::linear(a, basis.basis), basis.offset);              // [1 x 2N]
    const Tensor points = ops::reshape(flat, {1, n, 2});
    const Tensor phys = ops::scale(ops::add_scalar(points, -0.5), 1.0 / scale);
    const Tensor coeff = ops::reshape(ops::slice_last(a, p - 2, p), {2});
    const Tensor source = ops::add_scalar(ops::linear(ops::mul(phys, coeff), ones2), 1.0);  // [1 x N x 1]
    PointBatch batch{points, source, std::nullopt, std::nullopt};
    if (conditioned) batch.design = a;
    const Tensor u = frozen.forward_points(frozen.params(), batch);  // [1 x N x 1]
    const Tensor mean_u = ops::mean(u);
    const Tensor u_outer = ops::linear(ops::reshape(u, {1, n}), outer);
    const Tensor ring = ops::reshape(ops::slice_last(ops::reshape(points.detach(), {nt, nr * 2}), (nr - 1) * 2, nr * 2),
                                     {nt, 2});
    const BoundaryQuadrature quad = boundary_quadrature(ring);
    const Tensor drag = boundary_functional(u_outer, quad, 0);
    const Tensor lift = boundary_functional(u_outer, quad, 1);
    const Tensor reg = ops::sum(ops::square(ops::sub(ops::reshape(theta, {q}), ref)));
    const Tensor field = ops::add(ops::sub(ops::scale(drag, obj.w_drag), ops::scale(lift, obj.w_lift)),
                                  ops::scale(mean_u, -obj.w_mean));
    DesignEvaluation ev;
    ev.objective = ops::add(field, ops::scale(reg, obj.w_reg));
    ev.field_objective = field;
    ev.components = {{"mean_u", mean_u}, {"drag", drag}, {"lift", lift}, {"regularizer", reg}};
    return ev;
  };
  prob.reference = [=](const std::vector<double>& theta) {
    const SampleRecord rec = synthetic_record(data, full_design(data, obj, theta));
    const auto u = rec.output.real();
    double mean = 0.0;
    for (double v : u) mean += v;
    mean /= static_cast<double>(u.size());
    std::vector<double> ring(2 * nt), u_ring(nt);
    const auto pts = rec.geometry.points.real();
    for (std::size_t i = 0; i < nt; ++i) {
      const std::size_t node = i * nr + nr - 1;
      ring[2 * i] = pts[2 * node];
      ring[2 * i + 1] = pts[2 * node + 1];
      u_ring[i] = u[node];
    }
    const BoundaryQuadrature quad = boundary_quadrature(Tensor({nt, 2}, std::move(ring)));
    const Tensor field({nt}, std::move(u_ring));
    const double drag = boundary_functional(field, quad, 0).item();
    const double lift = boundary_functional(field, quad, 1).item();
    return obj.w_drag * drag - obj.w_lift * lift - obj.w_mean * mean;
  };
  return prob;
}

DesignProblem quadratic_design_problem(std::vector<double> center, std::vector<double> weights,
                                       std::vector<double> lower, std::vector<double> upper,
                                       std::vector<double> initial) {
  const std::size_t q = center.size();
  if (weights.size() != q) throw DimensionError("quadratic design: one weight per parameter");
  auto value = [center, weights](std::span<const double> t) {
    double j = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) j += weights[i] * (t[i] - center[i]) * (t[i] - center[i]);
    return j;
  };
  DesignProblem prob;
  prob.initial = std::move(initial);
  prob.lower = std::move(lower);
  prob.upper = std::move(upper);
  const Tensor c({q}, std::vector<double>(center));
  const Tensor w({q}, std::vector<double>(weights));
  prob.evaluate = [c, w, q](const Tensor& theta) {
    if (theta.numel() != q) throw DimensionError("design vector has the wrong length");
    DesignEvaluation ev;
    ev.objective = ops::sum(ops::mul(w, ops::square(ops::sub(theta, c))));
    ev.field_objective = ev.objective;
    return ev;
  };
  prob.reference = [value](const std::vector<double>& theta) { return value(theta); };
  prob.validate();
  return prob;
}

void export_design_geometry(const SyntheticConfig& data, const DesignObjectiveConfig& obj,
                            const std::vector<double>& theta, const std::filesystem::path& path) {
  const auto a = full_design(data, obj, theta);
  const Tensor phys = annulus_mesh(data, a, data.n_theta, data.n_radial);
  const Tensor scaled = ops::add_scalar(ops::scale(phys, data.coordinate_scale), 0.5);
  blob::write_file(path, blob::encode(scaled));
}

}  // namespace geofno
