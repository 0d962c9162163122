#pragma once

#include "kfp/common.hpp"
#include "kfp/fields.hpp"
#include "kfp/geometry.hpp"
#include "kfp/grid.hpp"

#include <vector>

namespace kfp {

/// Value of the fundamental solution at a point: Gamma, its diffusion
/// gradient (d_{x_1} Gamma, ..., d_{x_d} Gamma) and Y Gamma.
struct KernelValue {
  double gamma = 0.0;
  Eigen::VectorXd grad_d;
  double y_gamma = 0.0;
};

/// The covariance C_t = int_0^t e^{sB} A0 e^{sB^T} ds stored as an exact
/// matrix polynomial in t (finite because B is nilpotent).
class CovariancePolynomial {
public:
  explicit CovariancePolynomial(const Geometry& g);

  const Geometry& geometry() const { return *g_; }

  /// C_t by Horner evaluation of the stored coefficients.
  Eigen::MatrixXd eval(double t) const;
  /// d/dt C_t.
  Eigen::MatrixXd eval_derivative(double t) const;
  /// Coefficient of t^m; m runs from 0 to 2r+1 (the m = 0 term is zero).
  const std::vector<Eigen::MatrixXd>& coeffs() const { return coeff_; }

  /// Log-density floor below which gamma_eval returns 0 (near-degenerate t).
  double log_floor() const { return log_floor_; }
  void set_log_floor(double f) { log_floor_ = f; }

private:
  const Geometry* g_;
  std::vector<Eigen::MatrixXd> coeff_;
  double log_floor_ = -700.0;
};

/// Gamma(z) with its closed-form Gaussian derivatives; 0 for t <= 0.
/// Throws KernelError when C_t is singular for t > 0 (Hormander fails).
KernelValue gamma_eval(const CovariancePolynomial& cp, const GroupPoint& z);

/// Sample layout for the kernel bound suprema.
struct KernelSampleSpec {
  double t_min = 1e-3;
  double t_max = 10.0;
  int nt = 24;            // log-spaced in t
  double x_half_width = 10.0;
  int nx = 15;            // per space axis
};

struct KernelBoundReport {
  double sup_gamma_ratio = 0.0;   // sup ||z||^{d-2} Gamma(z)
  double sup_ygamma_ratio = 0.0;  // sup ||z||^{d} |Y Gamma(z)|
  std::int64_t samples = 0;
};

KernelBoundReport kernel_bound_check(const CovariancePolynomial& cp, const KernelSampleSpec& spec);

/// Riesz-type potential I_alpha f(z) = int f(zeta) ||zeta^{-1} o z||^{alpha-d} dzeta
/// by trapezoidal quadrature with graded refinement of the singular cell.
GridFunction riesz_potential(const Geometry& g, double alpha, const GridFunction& f,
                             const GridSpec& out_spec, int refine_levels = 8);

struct ReconstructionResult {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> values;      // quadrature reconstruction
  std::vector<double> reference;   // exact u at the points
  double rel_l2_error = 0.0;
};

/// Kernel representation u(z) = -int Gamma(zeta^{-1} o z) K u(zeta) dzeta,
/// evaluated on a sample of interior points. K u is formed from the exact
/// derivatives of u. The quadrature slices the representation in time and
/// uses tensor Gauss-Hermite rules in the covariance principal axes, which
/// resolves the parabolic concentration of the kernel near the pole.
ReconstructionResult reconstruct_from_kernel(const CovariancePolynomial& cp,
                                             const AnalyticField& u, int time_nodes,
                                             int gauss_nodes, int out_npts);

/// K u = 1/2 sum_{i<d} d^2_{x_i x_i} u - Y u (exact derivative route).
AnalyticField apply_operator(const Geometry& g, const AnalyticField& u);

}  // namespace kfp
