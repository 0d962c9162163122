#pragma once

#include "kfp/common.hpp"
#include "kfp/geometry.hpp"

#include <functional>
#include <map>
#include <memory>
#include <vector>

namespace kfp {

/// Sparse multivariate polynomial over the N+1 coordinates (t, x_1..x_N).
class Poly {
public:
  using Terms = std::map<std::vector<int>, double>;

  explicit Poly(int nvars = 0) : nv_(nvars) {}

  static Poly constant(int nvars, double c);
  static Poly variable(int nvars, int v);
  static Poly monomial(int nvars, const std::vector<int>& exps, double c);

  int nvars() const { return nv_; }
  bool is_zero() const { return terms_.empty(); }
  const Terms& terms() const { return terms_; }
  int degree() const;

  double eval(const Eigen::VectorXd& z) const;

  Poly derivative(int v) const;
  /// Substitute every variable v by repl[v].
  Poly substitute(const std::vector<Poly>& repl) const;

  void add_term(const std::vector<int>& exps, double c);

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(double a) const;
  Poly operator-() const { return (*this) * -1.0; }
  bool operator==(const Poly& o) const { return nv_ == o.nv_ && terms_ == o.terms_; }

private:
  int nv_;
  Terms terms_;
};

/// One closed-form summand P(z) * exp(Q(z)) * {1 | cos(L(z)) | sin(L(z))}.
struct SmoothTerm {
  Poly pre;
  Poly expo;
  Poly phase;
  int trig = 0;  // 0 none, 1 cos, 2 sin
};

/// Test function on R^{N+1} with exact evaluators for u and its intrinsic
/// derivatives Y^k d^beta u.
///
/// Two kinds are supported. Smooth fields are finite sums of
/// polynomial-exponential-trigonometric terms; the class is closed under
/// d_t, d_{x_i}, Y, dilations and left translations, so every derivative
/// evaluator is exact. Pointwise fields wrap an arbitrary evaluator (bump
/// products, homogeneous-norm powers) and only support order-0 use.
class AnalyticField {
public:
  AnalyticField() = default;

  // --- factories -------------------------------------------------------------

  static AnalyticField zero(int n_space, const Box& box);
  /// amplitude * exp(-sum_i a_i (z_i - c_i)^2), decay entries a_i > 0 (t first).
  static AnalyticField gaussian(const Eigen::VectorXd& center, const Eigen::VectorXd& decay,
                                double amplitude, const Box& box);
  /// Single monomial amplitude * t^{kt} * x^beta on a declared box.
  static AnalyticField monomial(int n_space, int kt, const Eigen::VectorXi& beta, double amplitude,
                                const Box& box);
  static AnalyticField from_terms(int n_space, std::vector<SmoothTerm> terms, const Box& box);
  /// Gaussian times cos(<freq, z> + phase0).
  static AnalyticField modulated_gaussian(const Eigen::VectorXd& center,
                                          const Eigen::VectorXd& decay,
                                          const Eigen::VectorXd& freq, double phase0,
                                          double amplitude, const Box& box);
  /// Product of 1-D bumps exp(-1/(1 - ((z_i-c_i)/w_i)^2)); pointwise kind.
  static AnalyticField bump_product(const Eigen::VectorXd& center, const Eigen::VectorXd& widths,
                                    double amplitude);
  /// ||z0^{-1} o z||_B^gamma times a bump cutoff; pointwise kind. Used as a
  /// sharpness probe in Holder experiments.
  static AnalyticField hom_norm_power(const Geometry& g, const GroupPoint& z0, double gamma,
                                      const Eigen::VectorXd& cutoff_widths, double amplitude);
  /// rho(z0^{-1} o z)^gamma times a bump cutoff, where rho is the smooth
  /// homogeneous gauge (|t|^{M/2} + sum_i |x^{[i]}|^{M/(2i+1)})^{1/M} with
  /// M = max(4, 2(2r+1)). Unlike the homogeneous norm, rho has no first-order
  /// kinks away from the pole, so the power carries the pole exponent alone.
  static AnalyticField gauge_power(const Geometry& g, const GroupPoint& z0, double gamma,
                                   const Eigen::VectorXd& cutoff_widths, double amplitude);
  /// Arbitrary evaluator on a declared box; pointwise kind.
  static AnalyticField pointwise(int n_space, std::function<double(const Eigen::VectorXd&)> f,
                                 const Box& box);

  // --- evaluation ------------------------------------------------------------

  int n_space() const { return nv_ - 1; }
  int nvars() const { return nv_; }
  bool supports_derivatives() const { return kind_ == Kind::Smooth; }
  const Box& support() const { return box_; }
  void set_support(const Box& b) { box_ = b; }

  double eval_flat(const Eigen::VectorXd& z) const;
  double eval(const GroupPoint& z) const { return eval_flat(z.flat()); }

  // --- exact derivatives (Smooth kind only) ----------------------------------

  AnalyticField dt() const;
  AnalyticField dx(int i) const;  // space coordinate i, 0-based
  AnalyticField dy(const Geometry& g) const;
  /// Y^k d^beta u (d^beta applied first).
  AnalyticField intrinsic_derivative(const Geometry& g, const MultiIndex& m) const;

  // --- transforms ------------------------------------------------------------

  /// z -> u(D_lambda z). Pointwise fields are wrapped by the point map.
  AnalyticField dilated(const Geometry& g, double lambda) const;
  /// z -> u(zeta o z). Pointwise fields are wrapped by the point map.
  AnalyticField translated(const Geometry& g, const GroupPoint& zeta) const;
  AnalyticField scaled(double a) const;
  AnalyticField operator+(const AnalyticField& o) const;

  const std::vector<SmoothTerm>& terms() const { return terms_; }

private:
  enum class Kind { Smooth, Pointwise };

  /// Derivative along sum_v coef[v] * d_v with polynomial coefficients.
  AnalyticField directional(const std::vector<Poly>& coef) const;
  AnalyticField substituted(const std::vector<Poly>& repl, const Box& new_box) const;
  void merge_terms();
  void require_smooth(const char* op) const;

  Kind kind_ = Kind::Smooth;
  int nv_ = 0;
  std::vector<SmoothTerm> terms_;
  std::function<double(const Eigen::VectorXd&)> eval_fn_;
  Box box_;
};

/// Left-translation bounding box helper: range of (e^{tB} xi)_c over a
/// t-interval, estimated by dense sampling of the (polynomial) entries.
Box translated_box(const Geometry& g, const Box& box, const GroupPoint& zeta);

}  // namespace kfp
