// SPDX-License-Identifier: Apache-2.0
#include "geofno/poisson.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>

#include "geofno/error.hpp"

namespace geofno {

namespace {

struct Metric {
  double alpha, beta, gamma;  // g22/J, -g12/J, g11/J
};

Metric metric(double xxi, double yxi, double xeta, double yeta) {
  const double jac = xxi * yeta - xeta * yxi;
  if (!(std::abs(jac) > 0.0) || !std::isfinite(jac)) throw GeometryError("degenerate mesh cell (zero Jacobian)");
  return {(xeta * xeta + yeta * yeta) / jac, -(xxi * xeta + yxi * yeta) / jac, (xxi * xxi + yxi * yxi) / jac};
}

}  // namespace

ReferenceSolution solve_reference(const Geometry& mesh, const Tensor& source) {
  if (mesh.kind != GeometryKind::kStructuredMesh || mesh.dim() != 2) {
    throw KindError("solve_reference needs a 2-d structured O-mesh");
  }
  const auto grid = mesh.grid();
  const std::size_t nt = grid[0], nr = grid[1];
  if (nt < 3 || nr < 3) throw DimensionError("solve_reference needs at least 3 x 3 nodes");
  if (source.is_complex() || source.numel() != nt * nr ||
      !(source.shape() == Shape{nt, nr} || source.shape() == Shape{nt, nr, 1})) {
    throw DimensionError("source must be [n_theta x n_r] or [n_theta x n_r x 1]");
  }
  const auto p = mesh.points.real();
  const auto f = source.real();
  auto X = [&](std::size_t i, std::size_t j) { return p[(i * nr + j) * 2]; };
  auto Y = [&](std::size_t i, std::size_t j) { return p[(i * nr + j) * 2 + 1]; };
  const std::size_t ni = nr - 2;
  const auto n = static_cast<Eigen::Index>(nt * ni);
  auto unknown = [&](std::size_t i, std::size_t j) { return static_cast<Eigen::Index>(i * ni + (j - 1)); };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 9);
  Eigen::VectorXd rhs(n);
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);

  for (std::size_t i = 0; i < nt; ++i) {
    const std::size_t ip = (i + 1) % nt, im = (i + nt - 1) % nt;
    for (std::size_t j = 1; j + 1 < nr; ++j) {
      const Eigen::Index row = unknown(i, j);
      // A u = -(F_e - F_w + F_n - F_s); boundary nodes carry u = 0.
      auto add = [&](std::size_t a, std::size_t b, double c) {
        if (b == 0 || b + 1 == nr || c == 0.0) return;
        const Eigen::Index col = unknown(a, b);
        if (col == row) diag[static_cast<std::size_t>(row)] += c;
        trip.emplace_back(row, col, c);
      };
      const Metric e = metric(X(ip, j) - X(i, j), Y(ip, j) - Y(i, j),
                              0.25 * (X(ip, j + 1) + X(i, j + 1) - X(ip, j - 1) - X(i, j - 1)),
                              0.25 * (Y(ip, j + 1) + Y(i, j + 1) - Y(ip, j - 1) - Y(i, j - 1)));
      const Metric w = metric(X(i, j) - X(im, j), Y(i, j) - Y(im, j),
                              0.25 * (X(i, j + 1) + X(im, j + 1) - X(i, j - 1) - X(im, j - 1)),
                              0.25 * (Y(i, j + 1) + Y(im, j + 1) - Y(i, j - 1) - Y(im, j - 1)));
      const Metric nn = metric(0.25 * (X(ip, j + 1) + X(ip, j) - X(im, j + 1) - X(im, j)),
                               0.25 * (Y(ip, j + 1) + Y(ip, j) - Y(im, j + 1) - Y(im, j)), X(i, j + 1) - X(i, j),
                               Y(i, j + 1) - Y(i, j));
      const Metric s = metric(0.25 * (X(ip, j) + X(ip, j - 1) - X(im, j) - X(im, j - 1)),
                              0.25 * (Y(ip, j) + Y(ip, j - 1) - Y(im, j) - Y(im, j - 1)), X(i, j) - X(i, j - 1),
                              Y(i, j) - Y(i, j - 1));
      // -F_e
      add(ip, j, -e.alpha);
      add(i, j, e.alpha);
      add(ip, j + 1, -0.25 * e.beta);
      add(i, j + 1, -0.25 * e.beta);
      add(ip, j - 1, 0.25 * e.beta);
      add(i, j - 1, 0.25 * e.beta);
      // +F_w
      add(i, j, w.alpha);
      add(im, j, -w.alpha);
      add(i, j + 1, 0.25 * w.beta);
      add(im, j + 1, 0.25 * w.beta);
      add(i, j - 1, -0.25 * w.beta);
      add(im, j - 1, -0.25 * w.beta);
      // -F_n
      add(i, j + 1, -nn.gamma);
      add(i, j, nn.gamma);
      add(ip, j + 1, -0.25 * nn.beta);
      add(ip, j, -0.25 * nn.beta);
      add(im, j + 1, 0.25 * nn.beta);
      add(im, j, 0.25 * nn.beta);
      // +F_s
      add(i, j, s.gamma);
      add(i, j - 1, -s.gamma);
      add(ip, j, 0.25 * s.beta);
      add(ip, j - 1, 0.25 * s.beta);
      add(im, j, -0.25 * s.beta);
      add(im, j - 1, -0.25 * s.beta);

      const double xxi = 0.5 * (X(ip, j) - X(im, j)), yxi = 0.5 * (Y(ip, j) - Y(im, j));
      const double xeta = 0.5 * (X(i, j + 1) - X(i, j - 1)), yeta = 0.5 * (Y(i, j + 1) - Y(i, j - 1));
      rhs(row) = (xxi * yeta - xeta * yxi) * f[i * nr + j];
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!(std::abs(diag[static_cast<std::size_t>(r)]) > 0.0)) throw SolverError("zero diagonal in the Poisson system");
  }
  // Jacobi row scaling keeps the residual in units of u.
  Eigen::VectorXd scale(n);
  for (Eigen::Index r = 0; r < n; ++r) scale(r) = 1.0 / diag[static_cast<std::size_t>(r)];
  a = scale.asDiagonal() * a;
  rhs = scale.asDiagonal() * rhs;
  a.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: singular Poisson system");
  const Eigen::VectorXd u = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !u.allFinite()) throw SolverError("sparse LU solve failed");

  ReferenceSolution out;
  out.residual = (a * u - rhs).lpNorm<Eigen::Infinity>();
  std::vector<double> full(nt * nr, 0.0);
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 1; j + 1 < nr; ++j) full[i * nr + j] = u(unknown(i, j));
  }
  out.u = Tensor(source.shape(), std::move(full));
  return out;
}

}  // namespace geofno
