#pragma once

#include "kfp/common.hpp"
#include "kfp/fields.hpp"
#include "kfp/geometry.hpp"
#include "kfp/grid.hpp"
#include "kfp/norms.hpp"
#include "kfp/taylor.hpp"

#include <vector>

namespace kfp {

/// Decreasing rearrangement of a grid function, stored as a step function:
/// u* equals level_[i] on [ cum_[i], cum_[i+1] ) with cum_[0] = 0.
/// Levels are strictly decreasing and positive; the distribution function
/// mu_u is recovered from the same data.
class Rearrangement {
public:
  static Rearrangement from_grid(const GridFunction& u);
  /// Synthetic step data: levels with their individual measures, in the
  /// given order (will be sorted decreasingly, equal levels merged).
  static Rearrangement from_steps(const std::vector<double>& levels,
                                  const std::vector<double>& measures);

  /// u*(t), right-continuous; 0 beyond the total measure.
  double ustar(double t) const;
  /// Left limit u*(t-); u*(0-) is defined as u*(0).
  double ustar_left(double t) const;
  /// mu_u(lambda) = Leb(|u| > lambda), right-continuous.
  double mu(double lambda) const;
  /// Left limit mu_u(lambda-) = Leb(|u| >= lambda) for lambda > 0.
  double mu_left(double lambda) const;

  /// Exact piecewise integral (int u*^p)^{1/p}.
  double lp(double p) const;
  double max_value() const { return levels_.empty() ? 0.0 : levels_.front(); }
  double total_measure() const { return cum_.empty() ? 0.0 : cum_.back(); }

  const std::vector<double>& levels() const { return levels_; }
  const std::vector<double>& cumulative() const { return cum_; }

private:
  std::vector<double> levels_;  // strictly decreasing, positive
  std::vector<double> cum_;     // cum_[i] = measure of { u* >= levels_[i-1] }; cum_[0] = 0
};

/// Lorentz quasi-norm ||u||_{L^{p,q}} = || t^{1/p} u*(t) ||_{L^q_*}, exact on
/// the step representation; q = infinity gives the weak-L^p quasi-norm.
double lorentz_norm(const Rearrangement& r, double p, double q);

/// Levels a_k = u*(e^k) over a window of k, clipped where a_k hits 0 or the
/// maximal value. The construction inequalities are verified internally.
struct TartarSequence {
  std::vector<int> ks;
  std::vector<double> a;     // a_k = u*(e^k)
  std::vector<double> gaps;  // a_k - a_{k+1} (one shorter than a)
};

TartarSequence tartar_sequence(const Rearrangement& r, int k_min = -40, int k_max = 40);

/// Tartar truncation phi_k(u): 0 below a_{k+1}, |v| - a_{k+1} in between,
/// capped at a_k - a_{k+1}.
double truncation_map(double v, double a_hi, double a_lo);
GridFunction truncate(const GridFunction& u, const TartarSequence& ts, int k);

/// Mollifier upper bound of the K-functional between L^p and either L^inf or
/// W^{m,p}_B. The reported curve is an upper bound: the infimum runs over the
/// mollifier decompositions u = (u - u_{1,eps}) + u_{1,eps} plus the trivial
/// splittings.
struct KFunctionalCurve {
  std::vector<double> t;
  std::vector<double> K;          // measured mollifier upper bound
  std::vector<double> bound_envelope;  // (eps + t eps^{-d/p}) ||u||_{W^{1,p}} envelope
  std::string label;
};

enum class KPair { LpLinf, LpWmp };

KFunctionalCurve k_functional(const AnalyticField& u, const Geometry& g, double p, KPair pair,
                              int m, const std::vector<double>& t_grid,
                              const std::vector<double>& eps_grid, const BumpKernel& bump,
                              const MollifyOptions& opts = {});

}  // namespace kfp
