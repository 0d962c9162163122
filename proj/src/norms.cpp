#include "kfp/norms.hpp"

#include <cmath>
#include <functional>

namespace kfp {

namespace {

std::vector<int> resolve_npts(const NormOptions& opts, int dims) {
  if (!opts.npts.empty()) {
    if (static_cast<int>(opts.npts.size()) != dims)
      throw ValidationError("NormOptions: npts dimension mismatch");
    return opts.npts;
  }
  return std::vector<int>(static_cast<std::size_t>(dims), opts.default_npts);
}

struct HNode {
  double h;
  double weight;  // band width assigned to this node
};

/// Geometric band grid on (0, top]: bands [top 2^{-(j+1)}, top 2^{-j}],
/// each split into `per_band` midpoint sub-intervals. Signs are handled by
/// the caller.
std::vector<HNode> make_hgrid(double top, int bands, int per_band) {
  std::vector<HNode> nodes;
  nodes.reserve(static_cast<std::size_t>(bands * per_band));
  for (int j = 0; j < bands; ++j) {
    const double hi = top * std::pow(2.0, -j);
    const double lo = 0.5 * hi;
    const double w = (hi - lo) / per_band;
    for (int m = 0; m < per_band; ++m) nodes.push_back({lo + (m + 0.5) * w, w});
  }
  return nodes;
}

}  // namespace

std::vector<MultiIndex> intrinsic_multiindices(const Geometry& g, int order) {
  std::vector<MultiIndex> out;
  const int n_space = g.N();
  // Enumerate beta by walking coordinates; weight of coordinate c is 2*layer+1.
  std::function<void(int, int, Eigen::VectorXi&)> rec = [&](int c, int remaining,
                                                            Eigen::VectorXi& beta) {
    if (c == n_space) {
      if (remaining % 2 == 0) {
        MultiIndex m;
        m.beta = beta;
        m.k = remaining / 2;
        out.push_back(m);
      }
      return;
    }
    const int w = g.weight_of(c);
    for (int e = 0; e * w <= remaining; ++e) {
      beta[c] = e;
      rec(c + 1, remaining - e * w, beta);
      beta[c] = 0;
    }
  };
  Eigen::VectorXi beta = Eigen::VectorXi::Zero(n_space);
  rec(0, order, beta);
  return out;
}

double slobodeckij_tail_constant(double p, double s) {
  return std::pow(4.0 / (p * s), 1.0 / p);
}

// --- DField --------------------------------------------------------------------

DField::DField(const Geometry& g, AnalyticField f, NormOptions opts)
    : g_(&g), f_(std::move(f)), opts_(std::move(opts)) {}

DField::DField(const Geometry& g, GridFunction f, NormOptions opts)
    : g_(&g), f_(std::move(f)), opts_(std::move(opts)) {}

const Box& DField::box() const {
  if (analytic()) return std::get<AnalyticField>(f_).support();
  return std::get<GridFunction>(f_).spec.box;
}

double DField::eval(const Eigen::VectorXd& z) const {
  if (analytic()) {
    const AnalyticField& af = std::get<AnalyticField>(f_);
    if (!af.support().contains(z)) return 0.0;
    return af.eval_flat(z);
  }
  return interpolate_or_zero(std::get<GridFunction>(f_), z);
}

double DField::eval_raw(const Eigen::VectorXd& z) const {
  if (analytic()) return std::get<AnalyticField>(f_).eval_flat(z);
  return interpolate_or_zero(std::get<GridFunction>(f_), z);
}

DField DField::dx(int i) const {
  if (analytic()) return DField(*g_, std::get<AnalyticField>(f_).dx(i), opts_);
  MultiIndex m;
  m.beta = Eigen::VectorXi::Zero(g_->N());
  m.beta[i] = 1;
  return DField(*g_, intrinsic_derivative_grid(*g_, std::get<GridFunction>(f_), m), opts_);
}

DField DField::dy() const {
  if (analytic()) return DField(*g_, std::get<AnalyticField>(f_).dy(*g_), opts_);
  return DField(*g_, intrinsic_derivative_grid(*g_, std::get<GridFunction>(f_),
                                               MultiIndex::pure_y(1, g_->N())), opts_);
}

DField DField::intrinsic(const MultiIndex& m) const {
  if (analytic()) return DField(*g_, std::get<AnalyticField>(f_).intrinsic_derivative(*g_, m), opts_);
  return DField(*g_, intrinsic_derivative_grid(*g_, std::get<GridFunction>(f_), m), opts_);
}

double DField::lp(double p) const {
  if (p < 1.0) throw ValidationError("lp_norm: p must be >= 1");
  if (!analytic()) {
    const GridFunction& u = std::get<GridFunction>(f_);
    const GridSpec& s = u.spec;
    const std::int64_t n = s.total();
    const double sum = block_sum(n, [&](std::int64_t i) {
      const double v = u.values[static_cast<std::size_t>(i)];
      if (v == 0.0) return 0.0;
      return s.trapezoid_weight(s.unflatten(i)) * std::pow(std::abs(v), p);
    });
    return std::pow(sum, 1.0 / p);
  }
  const AnalyticField& u = std::get<AnalyticField>(f_);
  GridSpec s(box(), resolve_npts(opts_, u.nvars()));
  const std::int64_t n = s.total();
  const double sum = block_sum(n, [&](std::int64_t i) {
    const auto idx = s.unflatten(i);
    const double v = u.eval_flat(s.node(i));
    if (v == 0.0) return 0.0;
    return s.trapezoid_weight(idx) * std::pow(std::abs(v), p);
  });
  return std::pow(sum, 1.0 / p);
}

double DField::sup_abs() const {
  if (!analytic()) return std::get<GridFunction>(f_).max_abs();
  const AnalyticField& u = std::get<AnalyticField>(f_);
  GridSpec s(box(), resolve_npts(opts_, u.nvars()));
  return block_max(s.total(), [&](std::int64_t i) { return std::abs(u.eval_flat(s.node(i))); });
}

double DField::slobodeckij(double p, double s) const {
  if (s <= 0.0 || s >= 1.0) throw ValidationError("slobodeckij: s must be in (0,1)");
  if (p < 1.0) throw ValidationError("slobodeckij: p must be >= 1");

  const Box& bx = box();
  const bool full = opts_.hdomain == NormOptions::HDomain::FullLine;
  // FullLine truncates the numeric part at the time extent of the box; beyond
  // that the two supports are disjoint in time and the tail integrates in
  // closed form.
  const double top = full ? bx.extent(0) : 1.0;
  const auto hnodes = make_hgrid(top, opts_.h_bands, opts_.h_per_band);

  struct Flow {
    double h;
    double weight;
    Eigen::MatrixXd fwd;   // e^{hB}
    Eigen::MatrixXd bwd;   // e^{-hB}
  };
  std::vector<Flow> flows;
  flows.reserve(hnodes.size() * 2);
  for (const auto& hn : hnodes) {
    for (const double sign : {1.0, -1.0}) {
      Flow fl;
      fl.h = sign * hn.h;
      fl.weight = hn.weight;
      fl.fwd = g_->matrix_exp(fl.h);
      fl.bwd = g_->matrix_exp(-fl.h);
      flows.push_back(std::move(fl));
    }
  }

  // Outer quadrature grid over the support box.
  GridSpec grid(bx, resolve_npts(opts_, g_->N() + 1));
  const std::int64_t n = grid.total();
  const int nsp = g_->N();

  double lpp = 0.0;  // ||u||_p^p for the closed-form tail
  const double integral = block_sum(n, [&](std::int64_t i) {
    const auto idx = grid.unflatten(i);
    const Eigen::VectorXd z = grid.node(i);
    const double uz = eval(z);
    const double wz = grid.trapezoid_weight(idx);
    double acc = 0.0;
    Eigen::VectorXd zeta(nsp + 1);
    for (const auto& fl : flows) {
      // forward value u(e^{hY} z), truncated to the box
      zeta[0] = z[0] + fl.h;
      zeta.tail(nsp) = fl.fwd * z.tail(nsp);
      const double ufwd = eval(zeta);
      double val = std::pow(std::abs(ufwd - uz), p);
      // pairs with the off-box partner z' = e^{-hY} z (only |u(z)|^p survives)
      if (uz != 0.0) {
        zeta[0] = z[0] - fl.h;
        zeta.tail(nsp) = fl.bwd * z.tail(nsp);
        if (!bx.contains(zeta)) val += std::pow(std::abs(uz), p);
      }
      acc += fl.weight * val / std::pow(std::abs(fl.h), 1.0 + p * s);
    }
    return wz * acc;
  });

  double tail = 0.0;
  if (full) {
    const double sum_lpp = block_sum(n, [&](std::int64_t i) {
      const double v = eval(grid.node(i));
      if (v == 0.0) return 0.0;
      return grid.trapezoid_weight(grid.unflatten(i)) * std::pow(std::abs(v), p);
    });
    lpp = sum_lpp;
    tail = (4.0 / (p * s)) * std::pow(top, -p * s) * lpp;
  }
  return std::pow(integral + tail, 1.0 / p);
}

// --- free functions ------------------------------------------------------------

double lp_norm(const DField& u, double p) { return u.lp(p); }

double slobodeckij_y(const DField& u, double p, double s) { return u.slobodeckij(p, s); }

namespace {

double seminorm_recursive(const DField& u, int n, double p) {
  if (n < 1) throw ValidationError("sobolev_seminorm: order must be >= 1");
  const int d0 = u.geometry().diffusion_dim();
  if (n == 1) {
    double acc = 0.0;
    for (int i = 0; i < d0; ++i) acc += u.dx(i).lp(p);
    return acc + u.slobodeckij(p, 0.5);
  }
  if (n == 2) {
    double acc = u.dy().lp(p);
    for (int i = 0; i < d0; ++i) acc += seminorm_recursive(u.dx(i), 1, p);
    return acc;
  }
  double acc = seminorm_recursive(u.dy(), n - 2, p);
  for (int i = 0; i < d0; ++i) acc += seminorm_recursive(u.dx(i), n - 1, p);
  return acc;
}

double seminorm_canonical(const DField& u, int n, double p) {
  double acc = 0.0;
  for (const auto& m : intrinsic_multiindices(u.geometry(), n)) acc += u.intrinsic(m).lp(p);
  for (const auto& m : intrinsic_multiindices(u.geometry(), n - 1))
    acc += u.intrinsic(m).slobodeckij(p, 0.5);
  return acc;
}

double seminorm_oddeven(const DField& u, int n, double p) {
  double acc = 0.0;
  for (const auto& m : intrinsic_multiindices(u.geometry(), n - 1))
    acc += seminorm_recursive(u.intrinsic(m), 1, p);
  if (n % 2 == 0)
    acc += u.intrinsic(MultiIndex::pure_y(n / 2, u.geometry().N())).lp(p);
  return acc;
}

}  // namespace

double sobolev_seminorm(const DField& u, int n, double p, SeminormRoute route) {
  switch (route) {
    case SeminormRoute::Recursive: return seminorm_recursive(u, n, p);
    case SeminormRoute::Canonical: return seminorm_canonical(u, n, p);
    case SeminormRoute::OddEven: return seminorm_oddeven(u, n, p);
  }
  throw ValidationError("sobolev_seminorm: unknown route");
}

double sobolev_norm(const DField& u, int n, double p, SobolevVariant variant) {
  if (n < 1) throw ValidationError("sobolev_norm: order must be >= 1");
  if (variant == SobolevVariant::Triple) return u.lp(p) + seminorm_recursive(u, n, p);
  if (n == 1) return u.lp(p) + seminorm_recursive(u, 1, p);
  const int d0 = u.geometry().diffusion_dim();
  double acc = u.lp(p);
  for (int i = 0; i < d0; ++i) acc += sobolev_norm(u.dx(i), n - 1, p, SobolevVariant::Full);
  acc += (n == 2) ? u.dy().lp(p) : sobolev_norm(u.dy(), n - 2, p, SobolevVariant::Full);
  return acc;
}

double holder_quotient(const DField& u, int field_index, double expo) {
  const Geometry& g = u.geometry();
  const Box& bx = u.box();
  const NormOptions& opts = u.options();
  const int nv = g.N() + 1;

  GridSpec sample_grid(bx, std::vector<int>(static_cast<std::size_t>(nv), opts.holder_npts));
  std::vector<double> hs;
  for (int j = 0; j <= opts.holder_h_bands; ++j) hs.push_back(std::pow(2.0, -j));

  const std::int64_t n = sample_grid.total();
  return block_max(n, [&](std::int64_t i) {
    const Eigen::VectorXd z = sample_grid.node(i);
    const GroupPoint zp = GroupPoint::from_flat(z);
    const double uz = u.eval_raw(z);
    double best = 0.0;
    for (const double h : hs) {
      for (const double sign : {1.0, -1.0}) {
        const GroupPoint w = flow_eval(g, zp, field_index, sign * h);
        const double q = std::abs(u.eval_raw(w.flat()) - uz) / std::pow(h, expo);
        best = std::max(best, q);
      }
    }
    return best;
  });
}

double holder_norm(const DField& u, int k, double alpha) {
  if (alpha <= 0.0 || alpha > 1.0) throw ValidationError("holder_norm: alpha must be in (0,1]");
  const Geometry& g = u.geometry();
  const int d0 = g.diffusion_dim();
  if (k == 0) {
    double acc = u.sup_abs();
    for (int i = 0; i < d0; ++i) acc += holder_quotient(u, i, alpha);
    acc += holder_quotient(u, g.N(), alpha / 2.0);
    return acc;
  }
  if (k == 1) {
    double acc = u.sup_abs();
    for (int i = 0; i < d0; ++i) acc += holder_norm(u.dx(i), 0, alpha);
    acc += holder_quotient(u, g.N(), (alpha + 1.0) / 2.0);
    return acc;
  }
  double acc = u.sup_abs();
  for (int i = 0; i < d0; ++i) acc += holder_norm(u.dx(i), k - 1, alpha);
  acc += (k - 2 == 0) ? holder_norm(u.dy(), 0, alpha) : holder_norm(u.dy(), k - 2, alpha);
  return acc;
}

NormReport norm_report(const DField& u, double p, const std::vector<int>& orders,
                       const std::vector<std::pair<int, double>>& holder_orders) {
  NormReport rep;
  rep.p = p;
  rep.lp = u.lp(p);
  rep.slobodeckij_y = u.slobodeckij(p, 0.5);
  for (int n : orders) {
    rep.seminorms[n] = sobolev_seminorm(u, n, p);
    rep.sobolev[n] = sobolev_norm(u, n, p, SobolevVariant::Full);
    rep.triple[n] = sobolev_norm(u, n, p, SobolevVariant::Triple);
  }
  for (const auto& [k, alpha] : holder_orders) rep.holder[{k, alpha}] = holder_norm(u, k, alpha);
  rep.quad_npts = u.options().npts.empty()
                      ? std::vector<int>(static_cast<std::size_t>(u.geometry().N() + 1),
                                         u.options().default_npts)
                      : u.options().npts;
  rep.h_bands = u.options().h_bands;
  rep.h_domain = u.options().hdomain == NormOptions::HDomain::HalfUnit ? "half_unit" : "full_line";
  return rep;
}

}  // namespace kfp
