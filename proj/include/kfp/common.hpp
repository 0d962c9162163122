#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kfp {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid operator structure (rank-deficient block, non-monotone layers, ...).
class StructureError : public Error {
public:
  using Error::Error;
};

/// Invalid argument / configuration.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Kernel evaluation failure (singular covariance and similar).
class KernelError : public Error {
public:
  using Error::Error;
};

/// Axis-aligned box in R^{N+1}; axis 0 is the time coordinate.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Box() = default;
  Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size()) throw ValidationError("Box: lo/hi size mismatch");
  }

  int dims() const { return static_cast<int>(lo.size()); }

  bool contains(const Eigen::VectorXd& z, double tol = 0.0) const {
    for (int i = 0; i < dims(); ++i)
      if (z[i] < lo[i] - tol || z[i] > hi[i] + tol) return false;
    return true;
  }

  Box padded(const Eigen::VectorXd& pad) const {
    Box b = *this;
    b.lo -= pad;
    b.hi += pad;
    return b;
  }

  Box padded(double pad) const {
    Box b = *this;
    b.lo.array() -= pad;
    b.hi.array() += pad;
    return b;
  }

  double extent(int axis) const { return hi[axis] - lo[axis]; }
};

/// Number of workers used by the deterministic block reductions.
/// Controlled by the KFP_WORKERS environment variable, defaults to the
/// hardware concurrency. The result of every reduction is independent of
/// this value.
int worker_count();

/// Deterministic parallel sum of f(0) + ... + f(n-1).
///
/// The index range is split into blocks of a fixed size; blocks are summed
/// sequentially and combined in a fixed pairwise tree, so the result is
/// bit-identical for any worker count.
double block_sum(std::int64_t n, const std::function<double(std::int64_t)>& f);

/// Deterministic parallel max of f over [0, n).
double block_max(std::int64_t n, const std::function<double(std::int64_t)>& f);

/// Least-squares line fit y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Fit in log-log coordinates; entries with y <= floor are dropped.
/// Returns the number of retained points in `used`.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                   double floor = 0.0, int* used = nullptr);

}  // namespace kfp
