#pragma once

#include "kfp/common.hpp"
#include "kfp/fields.hpp"
#include "kfp/geometry.hpp"
#include "kfp/grid.hpp"
#include "kfp/norms.hpp"

#include <map>
#include <vector>

namespace kfp {

/// Coefficients of a B-Taylor polynomial around a fixed base point.
struct TaylorData {
  GroupPoint base;
  int order = 0;
  /// (k, beta) -> Y^k d^beta u(base) for all intrinsic orders <= order.
  std::map<std::pair<int, std::vector<int>>, double> coeff;
};

/// Reusable buffers for the hot Taylor evaluation loops.
struct TaylorScratch {
  Eigen::VectorXd base_flat;
  Eigen::VectorXd incr;
};

/// Exact derivative oracle for the B-Taylor polynomial of an analytic field:
/// holds the derived fields Y^k d^beta u for every intrinsic order <= order.
class TaylorOracle {
public:
  TaylorOracle(const AnalyticField& u, const Geometry& g, int order);

  int order() const { return order_; }
  const Geometry& geometry() const { return *g_; }

  /// T_order u(base, z). An optional precomputed e^{(t-s)B} avoids the
  /// matrix exponential in inner loops with a fixed time offset.
  double eval(const GroupPoint& base, const GroupPoint& z,
              const Eigen::MatrixXd* exp_dt = nullptr, TaylorScratch* scratch = nullptr) const;

  TaylorData data_at(const GroupPoint& base) const;

private:
  const Geometry* g_;
  int order_;
  struct Entry {
    MultiIndex m;
    double factorial;  // k! * beta!
    AnalyticField field;
  };
  std::vector<Entry> entries_;
};

/// Evaluate a frozen TaylorData at z; throws on missing coefficients.
double taylor_eval(const TaylorData& td, const Geometry& g, const GroupPoint& z);

struct ExponentFit {
  std::vector<double> scale;
  std::vector<double> value;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// L^p remainder ||u - T_n u(. o zeta, .)||_p for zeta = D_sigma zeta0 over a
/// sigma grid, with the fitted log-log slope (expected about n+1).
ExponentFit taylor_remainder_rate(const AnalyticField& u, const Geometry& g, int n, double p,
                                  const GroupPoint& zeta0, const std::vector<double>& sigmas,
                                  const NormOptions& opts = {});

/// Smooth bump supported in the unit homogeneous ball with unit integral.
struct BumpKernel {
  Eigen::VectorXd widths;
  double norm_const = 1.0;
  Box box;

  double eval_flat(const Eigen::VectorXd& eta) const;
  /// Quadrature mass (should be 1 within the calibration tolerance).
  double mass(int npts_per_axis = 4096) const;
  /// Budgeted box: |t|^{1/2} and each layer block contribute 1/(r+2) to the
  /// homogeneous norm, so the support box sits inside the unit ball.
  static BumpKernel standard(const Geometry& g);
};

struct MollifyOptions {
  int inner_npts = 10;   // per-axis midpoint nodes over the bump support
  NormOptions norm;      // outer quadrature for error norms
};

/// The group mollifier u_{n,eps} evaluated at one point.
double mollify_eval(const TaylorOracle& taylor_nm1, const Geometry& g, double eps,
                    const BumpKernel& bump, const GroupPoint& z, int inner_npts);

/// u_{n,eps} sampled on a grid.
GridFunction mollify(const AnalyticField& u, const Geometry& g, int n, double eps,
                     const BumpKernel& bump, const GridSpec& out_spec,
                     const MollifyOptions& opts = {});

/// ||u - u_{n,eps}||_p by quadrature.
double mollify_error_lp(const AnalyticField& u, const Geometry& g, int n, double eps,
                        const BumpKernel& bump, double p, const MollifyOptions& opts = {});

/// Fit of log ||u - u_{n,eps}||_p against log eps (expected slope about n).
ExponentFit mollify_rate(const AnalyticField& u, const Geometry& g, int n, double p,
                         const std::vector<double>& eps_grid, const BumpKernel& bump,
                         const MollifyOptions& opts = {}, int discard_largest = 2);

/// Fit of log ||u_{n,eps}||_{W^{m,p}_B} against log eps (expected slope >= n-m).
ExponentFit mollify_inverse_rate(const AnalyticField& u, const Geometry& g, int n, int m, double p,
                                 const std::vector<double>& eps_grid, const BumpKernel& bump,
                                 const MollifyOptions& opts = {});

/// One flow segment of a horizontal chain: either a layer-0 straight move
/// x += delta * v or a drift move e^{delta Y}.
struct ChainSegment {
  bool is_y = false;
  Eigen::VectorXd v;  // layer-0 direction (unused for Y segments)
  double delta = 0.0;
};

struct ChainPath {
  std::vector<ChainSegment> segments;
  GroupPoint start;
  GroupPoint end;
  std::vector<double> deltas;  // per-layer step sizes delta_k
  double chat = 0.0;           // max_k delta_k / |xi|_B
};

/// Applies one segment.
GroupPoint chain_step(const Geometry& g, const GroupPoint& z, const ChainSegment& seg);
GroupPoint chain_apply(const Geometry& g, const GroupPoint& z, const std::vector<ChainSegment>& segs);

/// Horizontal chain connecting z to (t, x + xi) through flows of the layer-0
/// directions and Y only, built layer by layer from iterated commutator
/// moves. Endpoint is certified to 1e-10.
ChainPath connect_chain(const Geometry& g, const GroupPoint& z, const Eigen::VectorXd& xi);

}  // namespace kfp
