#include "kfp/lab.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kfp {

using nlohmann::json;

double critical_exponent(double p, int hom_dim, int k) {
  const double inv = 1.0 / p - static_cast<double>(k) / hom_dim;
  if (inv <= 0.0) throw ValidationError("critical_exponent: exponent not defined (k p >= hom_dim)");
  return 1.0 / inv;
}

double crude_exponent_theta(double p, double q, int hom_dim) {
  return hom_dim * (1.0 / p - 1.0 / q);
}

double crude_range_r(double p, int hom_dim) { return p * (hom_dim + p) / hom_dim; }

std::vector<FamilyMember> embedding_family(const Geometry& g, const AnalyticField& base,
                                           const std::vector<double>& lambdas,
                                           const std::vector<Eigen::VectorXd>& shifts,
                                           bool include_modulated) {
  std::vector<FamilyMember> fam;
  fam.push_back({"base", base});
  for (const double l : lambdas) {
    if (l == 1.0) continue;
    std::ostringstream os;
    os << "dilate_" << io::format_double(l);
    fam.push_back({os.str(), base.dilated(g, l)});
  }
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    std::ostringstream os;
    os << "translate_" << i;
    fam.push_back({os.str(), base.translated(g, GroupPoint::from_flat(shifts[i]))});
  }
  if (include_modulated) {
    const int nv = g.N() + 1;
    Eigen::VectorXd freq = Eigen::VectorXd::Constant(nv, 1.5);
    fam.push_back({"modulated",
                   AnalyticField::modulated_gaussian(Eigen::VectorXd::Zero(nv),
                                                     Eigen::VectorXd::Constant(nv, 0.5), freq, 0.3,
                                                     1.0, base.support())});
  }
  return fam;
}

namespace {

NormOptions scaling_norm_options(const LabContext& ctx) {
  // The scaling identities are exact for the unrestricted Y-seminorm; the
  // |h| <= 1 form is checked separately against the sandwich constant.
  NormOptions opts = ctx.norm;
  opts.hdomain = NormOptions::HDomain::FullLine;
  return opts;
}

double family_ratio_spread(const std::vector<double>& ratios) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double r : ratios) {
    if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

SweepResult run_scaling_suite(const LabContext& ctx, const std::vector<int>& ns,
                              const std::vector<double>& ps, const std::vector<double>& lambdas,
                              double tol) {
  const Geometry& g = ctx.geometry;
  const NormOptions opts = scaling_norm_options(ctx);
  const double dd = g.hom_dim();

  SweepResult res;
  res.name = "scaling";
  res.columns = {"n", "p", "lambda", "measured", "predicted", "rel_dev"};
  double worst = 0.0;

  for (const double p : ps) {
    DField base(g, ctx.base_function, opts);
    const double base_lp = base.lp(p);
    std::map<int, double> base_semi;
    for (int n : ns) base_semi[n] = sobolev_seminorm(base, n, p);

    for (const double l : lambdas) {
      DField dil(g, ctx.base_function.dilated(g, l), opts);
      {
        const double measured = dil.lp(p) / base_lp;
        const double predicted = std::pow(l, -dd / p);
        const double dev = std::abs(measured / predicted - 1.0);
        worst = std::max(worst, dev);
        res.rows.push_back({0.0, p, l, measured, predicted, dev});
      }
      for (int n : ns) {
        const double measured = sobolev_seminorm(dil, n, p) / base_semi[n];
        const double predicted = std::pow(l, n - dd / p);
        const double dev = std::abs(measured / predicted - 1.0);
        worst = std::max(worst, dev);
        res.rows.push_back({static_cast<double>(n), p, l, measured, predicted, dev});
      }
    }
  }
  res.stats["max_rel_dev"] = worst;
  res.pass = worst <= tol;
  std::ostringstream os;
  os << "scaling factors within " << tol * 100 << "% (worst " << worst << ")";
  res.verdict = os.str();
  return res;
}

namespace {

struct LorentzEval {
  double lorentz_qp;  // ||u||_{L^{q,p}}
  double lq;          // ||u||_q (via the rearrangement)
};

LorentzEval lorentz_of_member(const Geometry& g, const AnalyticField& u, double q, double p,
                              int npts) {
  GridSpec spec(u.support(), std::vector<int>(static_cast<std::size_t>(g.N() + 1), npts));
  GridFunction gf = sample_fn([&u](const Eigen::VectorXd& z) { return u.eval_flat(z); }, spec, 0);
  const Rearrangement r = Rearrangement::from_grid(gf);
  return {lorentz_norm(r, q, p), lorentz_norm(r, q, q)};
}

}  // namespace

SweepResult run_embedding_sweep(const LabContext& ctx, EmbeddingRegime regime, double p,
                                std::optional<double> q_opt, double dilate_tol,
                                double stability_factor) {
  const Geometry& g = ctx.geometry;
  const double dd = g.hom_dim();
  SweepResult res;

  const std::vector<double> lambdas = {0.5, 2.0, 4.0};
  std::vector<Eigen::VectorXd> shifts;
  {
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(g.N() + 1);
    s1[0] = 0.4;
    s1[1] = 0.8;
    shifts.push_back(s1);
  }
  const auto family = embedding_family(g, ctx.base_function, lambdas, shifts, true);
  const NormOptions opts = scaling_norm_options(ctx);
  const int npts = opts.npts.empty() ? opts.default_npts : opts.npts[0];

  if (regime == EmbeddingRegime::Subcritical) {
    if (p >= dd) throw ValidationError("embedding sweep: subcritical regime needs p < hom_dim");
    const double pstar = critical_exponent(p, g.hom_dim());
    const double q = q_opt.value_or(pstar);
    if (q > pstar + 1e-12) {
      std::ostringstream os;
      os << "embedding sweep: q = " << q << " exceeds the critical exponent p* = " << pstar
         << "; p* is optimal for the first-order embedding (scaling obstruction)";
      throw ValidationError(os.str());
    }
    if (q < p) throw ValidationError("embedding sweep: q must be >= p");

    res.name = "embedding_subcritical";
    res.columns = {"member", "lorentz_qp", "lq", "w1p", "seminorm", "ratio_full", "ratio_semi"};
    std::vector<double> dilate_ratios, full_ratios, coarse_ratios;
    int mi = 0;
    for (const auto& fm : family) {
      DField du(g, fm.field, opts);
      const double w1p = sobolev_norm(du, 1, p);
      const double semi = sobolev_seminorm(du, 1, p);
      const LorentzEval le = lorentz_of_member(g, fm.field, q, p, npts);
      const double ratio_full = le.lorentz_qp / w1p;
      const double ratio_semi = le.lorentz_qp / semi;
      res.rows.push_back({static_cast<double>(mi), le.lorentz_qp, le.lq, w1p, semi, ratio_full,
                          ratio_semi});
      full_ratios.push_back(ratio_full);
      if (fm.tag == "base" || fm.tag.rfind("dilate_", 0) == 0) dilate_ratios.push_back(ratio_semi);
      // coarse-resolution stability probe
      NormOptions coarse = opts;
      coarse.npts.clear();
      coarse.default_npts = std::max(12, (npts * 2) / 3);
      DField dc(g, fm.field, coarse);
      const LorentzEval lec = lorentz_of_member(g, fm.field, q, p, coarse.default_npts);
      coarse_ratios.push_back(lec.lorentz_qp / sobolev_norm(dc, 1, p));
      ++mi;
    }
    const double spread = std::abs(q - pstar) < 1e-9 ? family_ratio_spread(dilate_ratios) : 1.0;
    double drift = 1.0;
    for (std::size_t i = 0; i < full_ratios.size(); ++i)
      drift = std::max(drift, std::max(full_ratios[i] / coarse_ratios[i],
                                       coarse_ratios[i] / full_ratios[i]));
    res.stats["pstar"] = pstar;
    res.stats["dilate_spread"] = spread;
    res.stats["max_ratio"] = *std::max_element(full_ratios.begin(), full_ratios.end());
    res.stats["refinement_drift"] = drift;
    res.pass = spread <= 1.0 + dilate_tol && drift <= stability_factor &&
               std::isfinite(res.stats["max_ratio"]);
    std::ostringstream os;
    os << "L^{q,p} ratios bounded (max " << res.stats["max_ratio"] << "), dilate spread "
       << spread << ", drift " << drift;
    res.verdict = os.str();
    return res;
  }

  if (regime == EmbeddingRegime::Supercritical) {
    if (p <= dd) throw ValidationError("embedding sweep: supercritical regime needs p > hom_dim");
    const double alpha = 1.0 - dd / p;
    res.name = "embedding_supercritical";
    res.columns = {"member", "holder", "w1p", "ratio"};
    std::vector<double> ratios, coarse_ratios;
    int mi = 0;
    for (const auto& fm : family) {
      DField du(g, fm.field, opts);
      const double w1p = sobolev_norm(du, 1, p);
      const double hn = holder_norm(du, 0, alpha);
      res.rows.push_back({static_cast<double>(mi), hn, w1p, hn / w1p});
      ratios.push_back(hn / w1p);
      NormOptions coarse = opts;
      coarse.npts.clear();
      coarse.default_npts = std::max(12, (npts * 2) / 3);
      coarse.holder_npts = std::max(5, opts.holder_npts - 2);
      DField dc(g, fm.field, coarse);
      coarse_ratios.push_back(holder_norm(dc, 0, alpha) / sobolev_norm(dc, 1, p));
      ++mi;
    }
    double drift = 1.0;
    for (std::size_t i = 0; i < ratios.size(); ++i)
      drift = std::max(drift, std::max(ratios[i] / coarse_ratios[i], coarse_ratios[i] / ratios[i]));
    res.stats["alpha"] = alpha;
    res.stats["max_ratio"] = *std::max_element(ratios.begin(), ratios.end());
    res.stats["refinement_drift"] = drift;
    res.pass = std::isfinite(res.stats["max_ratio"]) && drift <= stability_factor;
    std::ostringstream os;
    os << "Holder C^{0," << alpha << "} ratios bounded (max " << res.stats["max_ratio"]
       << "), drift " << drift;
    res.verdict = os.str();
    return res;
  }

  // Critical regime p = hom_dim.
  if (std::abs(p - dd) > 1e-9)
    throw ValidationError("embedding sweep: critical regime needs p = hom_dim");
  res.name = "embedding_critical";
  res.columns = {"member", "q", "lorentz_qd", "w1d", "ratio"};
  std::vector<double> ratios;
  const std::vector<double> qs = {dd, dd + 2.0, 2.0 * dd};
  int mi = 0;
  for (const auto& fm : family) {
    DField du(g, fm.field, opts);
    const double w1d = sobolev_norm(du, 1, p);
    for (const double q : qs) {
      const LorentzEval le = lorentz_of_member(g, fm.field, q, dd, npts);
      res.rows.push_back({static_cast<double>(mi), q, le.lorentz_qp, w1d, le.lorentz_qp / w1d});
      ratios.push_back(le.lorentz_qp / w1d);
    }
    ++mi;
  }
  res.stats["max_ratio"] = *std::max_element(ratios.begin(), ratios.end());
  res.pass = std::isfinite(res.stats["max_ratio"]);
  std::ostringstream os2;
  os2 << "critical L^{q,d} ratios bounded (max " << res.stats["max_ratio"] << ")";
  res.verdict = os2.str();
  return res;
}

SweepResult run_higher_order_sweep(const LabContext& ctx, double p, double slope_tol) {
  if (p <= 1.0)
    throw ValidationError("higher-order sweep: the kernel representation route needs p > 1");
  const Geometry& g = ctx.geometry;
  const double dd = g.hom_dim();
  const NormOptions opts = scaling_norm_options(ctx);
  SweepResult res;
  res.name = "higher_order";

  if (p > dd) {
    // Drift-increment regularity at the W^2 level: the sharpness probe is a
    // power of the smooth homogeneous gauge with the critical growth
    // rho^{2 - d/p}; its pole carries the Y-increment exponent 1 - d/(2p)
    // while everything away from the pole is Lipschitz along the flow.
    const double gamma = 2.0 - dd / p;
    const double target = 1.0 - dd / (2.0 * p);
    const int nv = g.N() + 1;
    AnalyticField probe = AnalyticField::gauge_power(
        g, GroupPoint(0.0, Eigen::VectorXd::Zero(g.N())), gamma,
        Eigen::VectorXd::Constant(nv, 3.0), 1.0);
    DField du(g, probe, opts);

    res.columns = {"delta", "sup_increment"};
    std::vector<double> deltas, sups;
    for (int j = 0; j < 10; ++j) deltas.push_back(std::pow(10.0, -1.0 - 0.3 * j));
    GridSpec sgrid(probe.support(), std::vector<int>(static_cast<std::size_t>(nv), 13));
    for (const double d : deltas) {
      const double sup = block_max(sgrid.total(), [&](std::int64_t i) {
        const GroupPoint z = GroupPoint::from_flat(sgrid.node(i));
        double best = 0.0;
        for (const double sign : {1.0, -1.0}) {
          const GroupPoint w = g.flow_y(sign * d, z);
          best = std::max(best, std::abs(du.eval(w.flat()) - du.eval(z.flat())));
        }
        return best;
      });
      sups.push_back(sup);
      res.rows.push_back({d, sup});
    }
    const LineFit lf = fit_loglog(deltas, sups, 1e-14);
    res.has_fit = true;
    res.slope = lf.slope;
    res.intercept = lf.intercept;
    res.r2 = lf.r2;
    res.stats["target_slope"] = target;
    res.pass = std::abs(lf.slope - target) <= slope_tol;
    std::ostringstream os;
    os << "Y-increment slope " << lf.slope << " vs target " << target << " (tol " << slope_tol
       << ")";
    res.verdict = os.str();
    return res;
  }

  if (2.0 * p > dd) {
    // d/2 < p < d: fractional route [u]_{Y,1/2,p*} <= c ||u||_{W^{2,p}} and
    // the W^{2,p} -> W^{1,p*} inclusion.
    const double pstar = critical_exponent(p, g.hom_dim());
    res.columns = {"member", "frac_pstar", "w2p", "ratio_frac", "w1pstar", "ratio_w1"};
    const auto family = embedding_family(g, ctx.base_function, {0.5, 2.0}, {}, false);
    std::vector<double> r1, r2;
    int mi = 0;
    for (const auto& fm : family) {
      DField du(g, fm.field, opts);
      const double w2p = sobolev_norm(du, 2, p);
      const double frac = du.slobodeckij(pstar, 0.5);
      const double w1q = sobolev_norm(du, 1, pstar);
      res.rows.push_back({static_cast<double>(mi), frac, w2p, frac / w2p, w1q, w1q / w2p});
      r1.push_back(frac / w2p);
      r2.push_back(w1q / w2p);
      ++mi;
    }
    res.stats["pstar"] = pstar;
    res.stats["max_ratio_frac"] = *std::max_element(r1.begin(), r1.end());
    res.stats["max_ratio_w1"] = *std::max_element(r2.begin(), r2.end());
    res.pass = std::isfinite(res.stats["max_ratio_frac"]) && std::isfinite(res.stats["max_ratio_w1"]);
    std::ostringstream os;
    os << "fractional ratios bounded (frac " << res.stats["max_ratio_frac"] << ", W1 "
       << res.stats["max_ratio_w1"] << ")";
    res.verdict = os.str();
    return res;
  }

  // p <= d/2: two-step Sobolev route into L^{p*_2}.
  const double pstar2 = critical_exponent(p, g.hom_dim(), 2);
  res.columns = {"member", "lq", "w2p", "ratio"};
  const auto family = embedding_family(g, ctx.base_function, {0.5, 2.0}, {}, false);
  std::vector<double> ratios;
  int mi = 0;
  for (const auto& fm : family) {
    DField du(g, fm.field, opts);
    const double w2p = sobolev_norm(du, 2, p);
    const double lq = du.lp(pstar2);
    res.rows.push_back({static_cast<double>(mi), lq, w2p, lq / w2p});
    ratios.push_back(lq / w2p);
    ++mi;
  }
  res.stats["pstar2"] = pstar2;
  res.stats["max_ratio"] = *std::max_element(ratios.begin(), ratios.end());
  res.pass = std::isfinite(res.stats["max_ratio"]);
  std::ostringstream os;
  os << "L^{p*_2} ratios bounded (max " << res.stats["max_ratio"] << ")";
  res.verdict = os.str();
  return res;
}

SweepResult run_trudinger_check(const LabContext& ctx, double p, const std::vector<double>& lambdas,
                                const std::vector<double>& deltas) {
  const Geometry& g = ctx.geometry;
  const double dd = g.hom_dim();
  if (std::abs(p - dd) > 1e-9)
    throw ValidationError("trudinger check: requires the critical summability p = hom_dim");
  const double expo = dd / (dd - 1.0);

  const NormOptions opts = ctx.norm;
  const int npts = opts.npts.empty() ? opts.default_npts : opts.npts[0];
  GridSpec spec(ctx.base_function.support(),
                std::vector<int>(static_cast<std::size_t>(g.N() + 1), npts));
  GridFunction gf = sample_fn(
      [&](const Eigen::VectorXd& z) { return ctx.base_function.eval_flat(z); }, spec, 0);

  SweepResult res;
  res.name = "trudinger";
  res.columns = {"lambda", "delta", "integral", "pointwise_bound"};
  bool all_finite = true;
  const double sup = gf.max_abs();
  for (const double lam : lambdas) {
    for (const double del : deltas) {
      const double integral = block_sum(spec.total(), [&](std::int64_t i) {
        const double v = std::abs(gf.values[static_cast<std::size_t>(i)]);
        if (v <= del) return 0.0;
        return spec.trapezoid_weight(spec.unflatten(i)) * std::exp(lam * std::pow(v, expo));
      });
      const Rearrangement r = Rearrangement::from_grid(gf);
      const double bound = std::exp(lam * std::pow(sup, expo)) * r.mu(del);
      all_finite = all_finite && std::isfinite(integral) && integral <= bound * (1.0 + 1e-9);
      res.rows.push_back({lam, del, integral, bound});
    }
  }

  // Level-sequence diagnostic: a_k^{d/(d-1)} <= eps |k| + c for k <= 0.
  const Rearrangement r = Rearrangement::from_grid(gf);
  const TartarSequence ts = tartar_sequence(r);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < ts.a.size(); ++i) {
    if (ts.ks[i] > 0 || ts.a[i] <= 0.0) continue;
    xs.push_back(std::abs(static_cast<double>(ts.ks[i])));
    ys.push_back(std::pow(ts.a[i], expo));
  }
  double eps_hat = 0.0;
  if (xs.size() >= 2) {
    const LineFit lf = fit_line(xs, ys);
    eps_hat = std::max(0.0, lf.slope);
  }
  res.stats["eps_hat"] = eps_hat;
  const double lam_max = *std::max_element(lambdas.begin(), lambdas.end());
  res.pass = all_finite && eps_hat < 1.0 / lam_max;
  std::ostringstream os;
  os << "exponential integrals finite, level-sequence slope " << eps_hat << " < 1/lambda_max";
  res.verdict = os.str();
  return res;
}

SweepResult run_crude_embedding(const LabContext& ctx, double p, double q, double dilate_tol) {
  const Geometry& g = ctx.geometry;
  const double r_lim = crude_range_r(p, g.hom_dim());
  if (q < p || q >= r_lim) {
    std::ostringstream os;
    os << "crude embedding: q must lie in [p, r) with r = p(d+p)/d = " << r_lim;
    throw ValidationError(os.str());
  }
  const double theta = crude_exponent_theta(p, q, g.hom_dim());

  const NormOptions opts = scaling_norm_options(ctx);
  SweepResult res;
  res.name = "crude_embedding";
  res.columns = {"member", "lq", "lp", "seminorm", "ratio"};
  const auto family =
      embedding_family(g, ctx.base_function, {0.5, 2.0}, {}, true);
  std::vector<double> ratios, dilate_ratios;
  int mi = 0;
  for (const auto& fm : family) {
    DField du(g, fm.field, opts);
    const double lq = du.lp(q);
    const double lp = du.lp(p);
    const double semi = sobolev_seminorm(du, 1, p);
    const double ratio = lq / (std::pow(lp, 1.0 - theta) * std::pow(semi, theta));
    res.rows.push_back({static_cast<double>(mi), lq, lp, semi, ratio});
    ratios.push_back(ratio);
    if (fm.tag == "base" || fm.tag.rfind("dilate_", 0) == 0) dilate_ratios.push_back(ratio);
    ++mi;
  }
  const double spread = family_ratio_spread(dilate_ratios);
  res.stats["theta"] = theta;
  res.stats["r_limit"] = r_lim;
  res.stats["max_ratio"] = *std::max_element(ratios.begin(), ratios.end());
  res.stats["dilate_spread"] = spread;
  res.pass = std::isfinite(res.stats["max_ratio"]) && spread <= 1.0 + dilate_tol;
  std::ostringstream os;
  os << "crude ratios bounded (max " << res.stats["max_ratio"] << "), dilate spread " << spread;
  res.verdict = os.str();
  return res;
}

SweepResult run_interpolation_check(const LabContext& ctx, int n, int m, double p,
                                    double stability_factor) {
  if (n >= m) throw ValidationError("interpolation check: need n < m");
  const Geometry& g = ctx.geometry;
  const auto family = embedding_family(g, ctx.base_function, {0.5, 2.0}, {}, true);

  auto fitted_constant = [&](const NormOptions& opts) {
    double chat = 0.0;
    for (const auto& fm : family) {
      DField du(g, fm.field, opts);
      const double wn = sobolev_norm(du, n, p);
      const double wm = sobolev_norm(du, m, p);
      const double lp = du.lp(p);
      const double bound = std::pow(wm, static_cast<double>(m - n) / m) *
                           std::pow(lp, static_cast<double>(n) / m);
      chat = std::max(chat, wn / bound);
    }
    return chat;
  };

  const NormOptions base_opts = ctx.norm;
  NormOptions fine = base_opts;
  fine.npts.clear();
  fine.default_npts = base_opts.npts.empty() ? base_opts.default_npts + base_opts.default_npts / 2
                                             : base_opts.npts[0] + base_opts.npts[0] / 2;

  const double c_lo = fitted_constant(base_opts);
  const double c_hi = fitted_constant(fine);
  const double drift = std::max(c_lo / c_hi, c_hi / c_lo);

  SweepResult res;
  res.name = "interpolation";
  res.columns = {"resolution", "fitted_constant"};
  res.rows.push_back({static_cast<double>(base_opts.npts.empty() ? base_opts.default_npts
                                                                 : base_opts.npts[0]),
                      c_lo});
  res.rows.push_back({static_cast<double>(fine.default_npts), c_hi});
  res.stats["c_hat"] = std::max(c_lo, c_hi);
  res.stats["drift"] = drift;
  res.pass = std::isfinite(c_lo) && std::isfinite(c_hi) && drift <= stability_factor;
  std::ostringstream os;
  os << "optimal-eps interpolation constant " << res.stats["c_hat"] << ", refinement drift "
     << drift;
  res.verdict = os.str();
  return res;
}

SweepResult run_taylor_rate(const LabContext& ctx, int n, double p, double slope_tol) {
  const Geometry& g = ctx.geometry;
  GroupPoint zeta0(0.3, Eigen::VectorXd::Zero(g.N()));
  for (int c = 0; c < g.N(); ++c) zeta0.x[c] = 0.4 / (1.0 + c);
  std::vector<double> sigmas;
  for (int j = 0; j < 7; ++j) sigmas.push_back(0.2 * std::pow(1.35, j));

  const ExponentFit fit = taylor_remainder_rate(ctx.base_function, g, n, p, zeta0, sigmas, ctx.norm);
  SweepResult res;
  res.name = "taylor_rate";
  res.columns = {"hom_norm", "remainder"};
  for (std::size_t i = 0; i < fit.scale.size(); ++i) res.rows.push_back({fit.scale[i], fit.value[i]});
  res.has_fit = true;
  res.slope = fit.slope;
  res.intercept = fit.intercept;
  res.r2 = fit.r2;
  res.stats["target"] = n + 1.0;
  res.pass = std::abs(fit.slope - (n + 1.0)) <= slope_tol;
  std::ostringstream os;
  os << "Taylor remainder slope " << fit.slope << " vs " << n + 1 << " (tol " << slope_tol << ")";
  res.verdict = os.str();
  return res;
}

SweepResult run_mollify_rate(const LabContext& ctx, int n, double p, double slope_tol) {
  const Geometry& g = ctx.geometry;
  const BumpKernel bump = BumpKernel::standard(g);
  std::vector<double> eps;
  for (int j = 0; j < 8; ++j) eps.push_back(0.05 * std::pow(0.8 / 0.05, j / 7.0));
  const ExponentFit fit = mollify_rate(ctx.base_function, g, n, p, eps, bump, ctx.mollify);
  SweepResult res;
  res.name = "mollify_rate";
  res.columns = {"eps", "error"};
  for (std::size_t i = 0; i < fit.scale.size(); ++i) res.rows.push_back({fit.scale[i], fit.value[i]});
  res.has_fit = true;
  res.slope = fit.slope;
  res.intercept = fit.intercept;
  res.r2 = fit.r2;
  res.stats["target"] = n;
  res.stats["bump_mass_defect"] = std::abs(bump.mass() - 1.0);
  res.pass = std::abs(fit.slope - n) <= slope_tol && res.stats["bump_mass_defect"] <= 1e-8;
  std::ostringstream os;
  os << "mollifier rate slope " << fit.slope << " vs " << n << " (tol " << slope_tol << ")";
  res.verdict = os.str();
  return res;
}

SweepResult run_mollify_inverse(const LabContext& ctx, int n, int m, double p, double slope_margin) {
  const Geometry& g = ctx.geometry;
  const BumpKernel bump = BumpKernel::standard(g);
  std::vector<double> eps;
  for (int j = 0; j < 6; ++j) eps.push_back(0.08 * std::pow(0.8 / 0.08, j / 5.0));
  const ExponentFit fit = mollify_inverse_rate(ctx.base_function, g, n, m, p, eps, bump, ctx.mollify);
  SweepResult res;
  res.name = "mollify_inverse";
  res.columns = {"eps", "wmp_norm"};
  for (std::size_t i = 0; i < fit.scale.size(); ++i) res.rows.push_back({fit.scale[i], fit.value[i]});
  res.has_fit = true;
  res.slope = fit.slope;
  res.intercept = fit.intercept;
  res.r2 = fit.r2;
  const double floor = n - m - slope_margin;
  res.stats["slope_floor"] = floor;
  res.pass = fit.slope >= floor;
  std::ostringstream os;
  os << "mollifier blow-up slope " << fit.slope << " >= " << floor;
  res.verdict = os.str();
  return res;
}

SweepResult run_tartar_emb5(const LabContext& ctx, double p) {
  const Geometry& g = ctx.geometry;
  const double pstar = critical_exponent(p, g.hom_dim());
  const NormOptions opts = ctx.norm;
  const int npts = opts.npts.empty() ? opts.default_npts : opts.npts[0];

  Box bx = ctx.base_function.support().padded(0.75);
  GridSpec spec(bx, std::vector<int>(static_cast<std::size_t>(g.N() + 1), npts));
  GridFunction gf = sample(ctx.base_function, spec, 2, 1e-5);
  const Rearrangement r = Rearrangement::from_grid(gf);
  const TartarSequence ts = tartar_sequence(r);

  SweepResult res;
  res.name = "tartar_emb5";
  res.columns = {"k", "a_k", "gap", "lhs", "phik_seminorm", "ratio"};
  double chat = 0.0;
  double sum_phik_p = 0.0;
  for (std::size_t i = 0; i + 1 < ts.a.size(); ++i) {
    const int k = ts.ks[i];
    const double gap = ts.gaps[i];
    if (gap <= 0.0) continue;
    const double lhs = std::exp(k / pstar) * gap;
    GridFunction phik = truncate(gf, ts, k);
    DField dphi(g, std::move(phik), opts);
    const double semi = sobolev_seminorm(dphi, 1, p);
    if (semi <= 0.0) continue;
    const double ratio = lhs / semi;
    chat = std::max(chat, ratio);
    sum_phik_p += std::pow(semi, p);
    res.rows.push_back({static_cast<double>(k), ts.a[i], gap, lhs, semi, ratio});
  }
  DField du(g, gf, opts);
  const double semi_u = sobolev_seminorm(du, 1, p);
  res.stats["c_hat"] = chat;
  res.stats["pstar"] = pstar;
  res.stats["phik_lp_sum"] = std::pow(sum_phik_p, 1.0 / p);
  res.stats["u_seminorm"] = semi_u;
  res.stats["emb4_ratio"] = res.stats["phik_lp_sum"] / semi_u;
  res.pass = chat > 0.0 && std::isfinite(chat) && std::isfinite(res.stats["emb4_ratio"]);
  std::ostringstream os;
  os << "truncation inequality constant " << chat << " across the window; emb4 ratio "
     << res.stats["emb4_ratio"];
  res.verdict = os.str();
  return res;
}

SweepResult run_lorentz_lemma(const LabContext& ctx, double p, double q) {
  (void)ctx;
  SweepResult res;
  res.name = "lorentz_lemma";
  res.columns = {"window", "summable_lorentz", "summable_lq_sum", "divergent_lorentz",
                 "divergent_lq_sum"};

  auto build = [&](double decay_exp, int kmax) {
    // u*(t) = t^{-decay_exp} for t >= 1, constant head on [0,1).
    std::vector<double> levels, measures;
    levels.push_back(1.0);
    measures.push_back(1.0);
    double prev = 1.0;
    for (int k = 1; k <= kmax; ++k) {
      const double t = std::exp(static_cast<double>(k));
      levels.push_back(std::pow(t, -decay_exp));
      measures.push_back(t - prev);
      prev = t;
    }
    return Rearrangement::from_steps(levels, measures);
  };

  auto lq_sum = [&](const Rearrangement& r, int kmax) {
    double acc = 0.0;
    for (int k = 0; k <= kmax; ++k)
      acc += std::pow(std::exp(k / p) * r.ustar(std::exp(static_cast<double>(k))), q);
    return std::pow(acc, 1.0 / q);
  };

  std::vector<int> windows = {10, 16, 22};
  std::vector<double> conv_l, conv_s, div_l, div_s;
  for (int w : windows) {
    const Rearrangement conv = build(2.0 / p, w);
    const Rearrangement div = build(1.0 / p, w);
    conv_l.push_back(lorentz_norm(conv, p, q));
    conv_s.push_back(lq_sum(conv, w));
    div_l.push_back(lorentz_norm(div, p, q));
    div_s.push_back(lq_sum(div, w));
    res.rows.push_back({static_cast<double>(w), conv_l.back(), conv_s.back(), div_l.back(),
                        div_s.back()});
  }
  // Summable tail saturates; divergent tail keeps growing, in both
  // characterizations simultaneously.
  const double conv_growth = conv_l.back() / conv_l.front();
  const double conv_growth_s = conv_s.back() / conv_s.front();
  const double div_growth = div_l.back() / div_l.front();
  const double div_growth_s = div_s.back() / div_s.front();
  res.stats["convergent_growth"] = conv_growth;
  res.stats["divergent_growth"] = div_growth;
  res.pass = conv_growth < 1.05 && conv_growth_s < 1.05 && div_growth > 1.15 && div_growth_s > 1.15;
  std::ostringstream os;
  os << "Lorentz finiteness tracks the level-sum: saturating vs growing tails (" << conv_growth
     << " vs " << div_growth << ")";
  res.verdict = os.str();
  return res;
}

SweepResult run_kfunctional(const LabContext& ctx, double p) {
  const Geometry& g = ctx.geometry;
  const BumpKernel bump = BumpKernel::standard(g);
  std::vector<double> t_grid, eps_grid;
  for (int j = 0; j < 25; ++j) t_grid.push_back(std::pow(10.0, -4.0 + 5.0 * j / 24.0));
  for (int j = 0; j < 10; ++j) eps_grid.push_back(0.05 * std::pow(0.9 / 0.05, j / 9.0));

  const KFunctionalCurve curve =
      k_functional(ctx.base_function, g, p, KPair::LpLinf, 2, t_grid, eps_grid, bump, ctx.mollify);

  SweepResult res;
  res.name = "kfunctional";
  res.columns = {"t", "K_upper", "bound_envelope"};
  bool monotone = true, concave = true;
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    res.rows.push_back({curve.t[i], curve.K[i], curve.bound_envelope[i]});
    if (i > 0 && curve.K[i] < curve.K[i - 1] * (1.0 - 1e-9)) monotone = false;
  }
  // Concavity in t: the curve is a minimum of affine functions of t.
  for (std::size_t i = 1; i + 1 < curve.t.size(); ++i) {
    const double lam = (curve.t[i] - curve.t[i - 1]) / (curve.t[i + 1] - curve.t[i - 1]);
    const double chord = (1 - lam) * curve.K[i - 1] + lam * curve.K[i + 1];
    if (curve.K[i] < chord * (1.0 - 1e-9)) concave = false;
  }

  // Slope of the proof-side envelope in its power-law window.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < curve.t.size(); ++i) {
    if (curve.t[i] < 1e-3 || curve.t[i] > 1e-1) continue;
    xs.push_back(curve.t[i]);
    ys.push_back(curve.bound_envelope[i]);
  }
  const LineFit lf = fit_loglog(xs, ys, 0.0);
  const double target = p / (g.hom_dim() + p);
  res.has_fit = true;
  res.slope = lf.slope;
  res.intercept = lf.intercept;
  res.r2 = lf.r2;
  res.stats["target_slope"] = target;
  res.stats["K_at_tmin"] = curve.K.front();
  res.pass = monotone && concave && std::abs(lf.slope - target) <= 0.1;
  std::ostringstream os;
  os << "K-curve concave nondecreasing; envelope slope " << lf.slope << " vs " << target;
  res.verdict = os.str();
  return res;
}

// --- config / registry ------------------------------------------------------------

std::vector<std::string> list_experiments() {
  return {"scaling",       "embedding_subcritical", "embedding_supercritical",
          "embedding_critical", "higher_order",      "trudinger",
          "crude_embedding",    "interpolation",     "taylor_rate",
          "mollify_rate",       "mollify_inverse",   "tartar_emb5",
          "lorentz_lemma",      "kfunctional"};
}

namespace {

LabContext context_from_config(const json& cfg) {
  BlockStructure bs;
  if (cfg.contains("operator") && cfg.at("operator").is_string())
    bs = io::load_operator(cfg.at("operator").get<std::string>());
  else if (cfg.contains("operator"))
    bs = io::operator_from_json(cfg.at("operator"));
  else
    throw ValidationError("config: missing operator");
  Geometry g(bs);

  LabContext ctx{Geometry(bs), AnalyticField(), NormOptions{}, MollifyOptions{}, 1234};
  if (cfg.contains("function"))
    ctx.base_function = io::function_from_json(ctx.geometry, cfg.at("function"));
  else {
    const int nv = ctx.geometry.N() + 1;
    ctx.base_function = AnalyticField::gaussian(
        Eigen::VectorXd::Zero(nv), Eigen::VectorXd::Constant(nv, 0.5), 1.0,
        Box(Eigen::VectorXd::Constant(nv, -6.0), Eigen::VectorXd::Constant(nv, 6.0)));
  }
  if (cfg.contains("norm")) {
    const auto& n = cfg.at("norm");
    ctx.norm.default_npts = n.value("npts", ctx.norm.default_npts);
    ctx.norm.h_bands = n.value("h_bands", ctx.norm.h_bands);
    ctx.norm.h_per_band = n.value("h_per_band", ctx.norm.h_per_band);
    ctx.norm.holder_npts = n.value("holder_npts", ctx.norm.holder_npts);
    const std::string dom = n.value("h_domain", "half_unit");
    ctx.norm.hdomain = dom == "full_line" ? NormOptions::HDomain::FullLine
                                          : NormOptions::HDomain::HalfUnit;
  }
  if (cfg.contains("mollify")) {
    const auto& m = cfg.at("mollify");
    ctx.mollify.inner_npts = m.value("inner_npts", ctx.mollify.inner_npts);
    ctx.mollify.norm.default_npts = m.value("npts", ctx.mollify.norm.default_npts);
  }
  ctx.seed = cfg.value("seed", 1234u);
  return ctx;
}

std::vector<double> doubles_of(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<std::vector<double>>();
}

}  // namespace

std::vector<SweepResult> run_config(const json& cfg) {
  LabContext ctx = context_from_config(cfg);
  std::vector<SweepResult> out;
  if (!cfg.contains("experiments")) throw ValidationError("config: missing experiments array");
  for (const auto& e : cfg.at("experiments")) {
    const std::string name = e.at("name").get<std::string>();
    if (name == "scaling") {
      std::vector<int> ns = e.value("n", std::vector<int>{1, 2});
      out.push_back(run_scaling_suite(ctx, ns, doubles_of(e, "p", {1.5, 2.0, 4.0}),
                                      doubles_of(e, "lambda", {0.5, 1.0, 2.0, 4.0}),
                                      e.value("tol", 0.01)));
    } else if (name == "embedding_subcritical") {
      std::optional<double> q;
      if (e.contains("q")) q = e.at("q").get<double>();
      out.push_back(run_embedding_sweep(ctx, EmbeddingRegime::Subcritical,
                                        e.value("p", 2.0), q));
    } else if (name == "embedding_supercritical") {
      out.push_back(run_embedding_sweep(ctx, EmbeddingRegime::Supercritical, e.value("p", 8.0)));
    } else if (name == "embedding_critical") {
      out.push_back(run_embedding_sweep(ctx, EmbeddingRegime::Critical,
                                        e.value("p", static_cast<double>(ctx.geometry.hom_dim()))));
    } else if (name == "higher_order") {
      out.push_back(run_higher_order_sweep(ctx, e.value("p", 8.0)));
    } else if (name == "trudinger") {
      out.push_back(run_trudinger_check(ctx, e.value("p", static_cast<double>(ctx.geometry.hom_dim())),
                                        doubles_of(e, "lambda", {0.5, 1.0, 2.0}),
                                        doubles_of(e, "delta", {0.1, 1.0})));
    } else if (name == "crude_embedding") {
      out.push_back(run_crude_embedding(ctx, e.value("p", 2.0), e.value("q", 2.5)));
    } else if (name == "interpolation") {
      out.push_back(run_interpolation_check(ctx, e.value("n", 1), e.value("m", 2), e.value("p", 2.0)));
    } else if (name == "taylor_rate") {
      out.push_back(run_taylor_rate(ctx, e.value("n", 1), e.value("p", 2.0)));
    } else if (name == "mollify_rate") {
      out.push_back(run_mollify_rate(ctx, e.value("n", 1), e.value("p", 2.0)));
    } else if (name == "mollify_inverse") {
      out.push_back(run_mollify_inverse(ctx, e.value("n", 1), e.value("m", 2), e.value("p", 2.0)));
    } else if (name == "tartar_emb5") {
      out.push_back(run_tartar_emb5(ctx, e.value("p", 2.0)));
    } else if (name == "lorentz_lemma") {
      out.push_back(run_lorentz_lemma(ctx, e.value("p", 2.0), e.value("q", 2.0)));
    } else if (name == "kfunctional") {
      out.push_back(run_kfunctional(ctx, e.value("p", 2.0)));
    } else {
      throw ValidationError("config: unknown experiment '" + name + "'");
    }
  }
  return out;
}

bool emit_report(const std::vector<SweepResult>& results, const std::string& out_dir) {
  if (results.empty()) throw ValidationError("emit_report: no results");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ValidationError("emit_report: cannot create " + out_dir);

  json summary;
  summary["results"] = json::array();
  bool all_pass = true;
  std::map<std::string, int> seen;
  for (const auto& r : results) {
    std::string stem = r.name;
    const int idx = seen[r.name]++;
    if (idx > 0) stem += "_" + std::to_string(idx);
    const std::string csv_path = (fs::path(out_dir) / (stem + ".csv")).string();
    io::write_csv(csv_path, r.columns, r.rows);

    json jr;
    jr["name"] = r.name;
    jr["csv"] = stem + ".csv";
    jr["pass"] = r.pass;
    jr["verdict"] = r.verdict;
    for (const auto& [k, v] : r.stats) jr["stats"][k] = v;
    if (r.has_fit) {
      jr["fit"]["slope"] = r.slope;
      jr["fit"]["intercept"] = r.intercept;
      jr["fit"]["r2"] = r.r2;
    }
    summary["results"].push_back(jr);
    all_pass = all_pass && r.pass;
  }
  summary["all_pass"] = all_pass;
  io::save_json(summary, (fs::path(out_dir) / "summary.json").string());
  return all_pass;
}

}  // namespace kfp
