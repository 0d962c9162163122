#pragma once

#include "kfp/common.hpp"
#include "kfp/fields.hpp"
#include "kfp/geometry.hpp"
#include "kfp/grid.hpp"

#include <map>
#include <optional>
#include <variant>

namespace kfp {

struct NormOptions {
  /// Per-axis resolution of the outer quadrature (empty: default_npts each).
  std::vector<int> npts;
  int default_npts = 40;
  /// Dyadic bands of the singular h-quadrature and midpoints per band.
  int h_bands = 20;
  int h_per_band = 1;
  /// Primary definition integrates |h| <= 1; FullLine is the equivalent
  /// unrestricted seminorm (exact under dilations, tail in closed form).
  enum class HDomain { HalfUnit, FullLine };
  HDomain hdomain = HDomain::HalfUnit;
  /// Holder sup estimation sample sizes.
  int holder_npts = 9;
  int holder_h_bands = 14;
};

enum class SeminormRoute {
  Recursive,  // the inductive definition
  Canonical,  // sum over intrinsic derivatives Y^k d^beta (norm-equivalent form ii)
  OddEven,    // the odd/even split (norm-equivalent form iii)
};

enum class SobolevVariant { Full, Triple };

/// A field together with the machinery to take intrinsic derivatives and
/// compute quasi-norms. Wraps either an exact analytic field or a sampled
/// grid function (finite-difference derivative route).
class DField {
public:
  DField(const Geometry& g, AnalyticField f, NormOptions opts = {});
  DField(const Geometry& g, GridFunction f, NormOptions opts = {});

  const Geometry& geometry() const { return *g_; }
  const NormOptions& options() const { return opts_; }
  bool analytic() const { return std::holds_alternative<AnalyticField>(f_); }
  const Box& box() const;

  /// Value truncated to the support box (the compact-support surrogate used
  /// by the integral norms).
  double eval(const Eigen::VectorXd& z) const;
  /// Untruncated value; used by the sup-type Holder estimates where the box
  /// cut would introduce artificial jumps.
  double eval_raw(const Eigen::VectorXd& z) const;

  DField dx(int i) const;
  DField dy() const;
  DField intrinsic(const MultiIndex& m) const;

  double lp(double p) const;
  double slobodeckij(double p, double s = 0.5) const;
  double sup_abs() const;

private:
  const Geometry* g_;
  std::variant<AnalyticField, GridFunction> f_;
  NormOptions opts_;
};

double lp_norm(const DField& u, double p);
double slobodeckij_y(const DField& u, double p, double s = 0.5);
double sobolev_seminorm(const DField& u, int n, double p,
                        SeminormRoute route = SeminormRoute::Recursive);
double sobolev_norm(const DField& u, int n, double p,
                    SobolevVariant variant = SobolevVariant::Full);
/// Sup-quotient Holder estimate (a sampled lower bound of the true sup).
double holder_norm(const DField& u, int k, double alpha);

/// Sampled sup of |u(e^{hX} z) - u(z)| / |h|^expo along one field.
/// field_index < N picks d_{x_i}, field_index == N picks Y.
double holder_quotient(const DField& u, int field_index, double expo);

/// All multi-indices (k, beta) with 2k + <beta>_B equal to `order`.
std::vector<MultiIndex> intrinsic_multiindices(const Geometry& g, int order);

/// The exact constant of the half/full sandwich check:
/// floor(u) <= [u] + c_{p,s} ||u||_p with c_{p,s} = (4/(p s))^{1/p}.
double slobodeckij_tail_constant(double p, double s);

/// Structured collection of the quasi-norms of one function.
struct NormReport {
  double lp = 0.0;
  double slobodeckij_y = 0.0;
  std::map<int, double> seminorms;                  // n -> |u|_{n,p,B}
  std::map<int, double> sobolev;                    // n -> ||u||_{W^{n,p}_B}
  std::map<int, double> triple;                     // n -> triple-bar norm
  std::map<std::pair<int, double>, double> holder;  // (k, alpha) -> C^{k,alpha}_B
  double p = 0.0;
  std::vector<int> quad_npts;
  int h_bands = 0;
  std::string h_domain;
};

NormReport norm_report(const DField& u, double p, const std::vector<int>& orders,
                       const std::vector<std::pair<int, double>>& holder_orders = {});

}  // namespace kfp
