#pragma once

#include "kfp/common.hpp"
#include "kfp/fields.hpp"
#include "kfp/geometry.hpp"

#include <functional>
#include <vector>

namespace kfp {

/// Uniform tensor grid over a box in R^{N+1}; axis 0 is time.
struct GridSpec {
  Box box;
  std::vector<int> npts;

  GridSpec() = default;
  GridSpec(Box b, std::vector<int> n);

  /// Default grid for a geometry: `n` points per axis on [-6,6]^{N+1}.
  static GridSpec cube(int n_space, double half_width = 6.0, int n = 64);
  static GridSpec for_box(const Box& b, int n = 64);

  int dims() const { return static_cast<int>(npts.size()); }
  double spacing(int axis) const;
  double coord(int axis, int i) const { return box.lo[axis] + spacing(axis) * i; }
  std::int64_t total() const;
  /// Product of cell volumes (one cell per node).
  double cell_volume() const;

  std::vector<int> unflatten(std::int64_t flat) const;
  std::int64_t flatten(const std::vector<int>& idx) const;
  Eigen::VectorXd node(std::int64_t flat) const;
  /// Trapezoidal weight of a node (product of per-axis weights).
  double trapezoid_weight(const std::vector<int>& idx) const;

  bool operator==(const GridSpec& o) const { return npts == o.npts && box.lo == o.box.lo && box.hi == o.box.hi; }
};

/// Sampled function on a GridSpec with a declared zero margin (in cells) near
/// the boundary.
struct GridFunction {
  GridSpec spec;
  std::vector<double> values;
  int margin = 0;

  double operator[](std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }
  double& operator[](std::int64_t i) { return values[static_cast<std::size_t>(i)]; }
  double max_abs() const;
};

/// Pointwise sampling of an analytic field. The field's support box must fit
/// inside the grid box shrunk by `margin` cells; values larger than
/// `margin_tol * max|u|` on the margin raise a support-overflow error naming
/// the axis. The margin band is zeroed exactly.
GridFunction sample(const AnalyticField& u, const GridSpec& spec, int margin = 2,
                    double margin_tol = 1e-6);

/// Sample an arbitrary evaluator (no support checks, margin zeroed).
GridFunction sample_fn(const std::function<double(const Eigen::VectorXd&)>& f,
                       const GridSpec& spec, int margin = 0);

/// Multilinear interpolation; throws for points outside the grid box.
double interpolate(const GridFunction& u, const Eigen::VectorXd& z);
/// Multilinear interpolation, 0 outside the box (valid for compact support).
double interpolate_or_zero(const GridFunction& u, const Eigen::VectorXd& z);

/// Integral-curve step of a coordinate field or the drift:
/// field_index < N steps along d_{x_i}, field_index == N steps along Y.
GroupPoint flow_eval(const Geometry& g, const GroupPoint& z, int field_index, double h);

/// Grid-route intrinsic derivative Y^k d^beta u: central differences for the
/// coordinate directions and the symmetric flow difference for Y, with
/// multilinear interpolation at the displaced points. O(h^2) accurate.
GridFunction intrinsic_derivative_grid(const Geometry& g, const GridFunction& u,
                                       const MultiIndex& m);

/// Group convolution z -> int f(zeta) k(zeta^{-1} o z) dzeta by trapezoidal
/// quadrature over the grid of f.
GridFunction group_convolve(const Geometry& g, const GridFunction& f,
                            const std::function<double(const GroupPoint&)>& kernel,
                            const GridSpec& out_spec);

}  // namespace kfp
