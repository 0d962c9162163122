#include "kfp/rearrangement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kfp {

Rearrangement Rearrangement::from_grid(const GridFunction& u) {
  // Each node owns one cell; with the zero margin the trapezoidal boundary
  // weights act on zero values, so cell sums agree with the trapezoid rule.
  const GridSpec& s = u.spec;
  const double cell = s.cell_volume();
  std::vector<std::pair<double, std::int64_t>> vals;
  vals.reserve(u.values.size());
  for (std::int64_t i = 0; i < s.total(); ++i) {
    const double v = std::abs(u.values[static_cast<std::size_t>(i)]);
    if (v > 0.0) vals.emplace_back(v, i);
  }
  // Deterministic order: descending value, ties by cell index.
  std::sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<double> levels, measures;
  for (const auto& [v, idx] : vals) {
    if (!levels.empty() && levels.back() == v) {
      measures.back() += cell;
    } else {
      levels.push_back(v);
      measures.push_back(cell);
    }
  }
  return from_steps(levels, measures);
}

Rearrangement Rearrangement::from_steps(const std::vector<double>& levels,
                                        const std::vector<double>& measures) {
  if (levels.size() != measures.size())
    throw ValidationError("Rearrangement: levels/measures size mismatch");
  std::vector<std::size_t> order(levels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return levels[a] > levels[b];
  });
  Rearrangement r;
  r.cum_.push_back(0.0);
  for (std::size_t oi : order) {
    const double v = levels[oi];
    const double m = measures[oi];
    if (v <= 0.0 || m <= 0.0) continue;
    if (!r.levels_.empty() && r.levels_.back() == v) {
      r.cum_.back() += m;
    } else {
      r.levels_.push_back(v);
      r.cum_.push_back(r.cum_.back() + m);
    }
  }
  return r;
}

double Rearrangement::ustar(double t) const {
  if (t < 0.0) throw ValidationError("ustar: negative argument");
  // u*(t) = level_[i] for t in [cum_[i], cum_[i+1}).
  const auto it = std::upper_bound(cum_.begin() + 1, cum_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - (cum_.begin() + 1));
  if (i >= levels_.size()) return 0.0;
  return levels_[i];
}

double Rearrangement::ustar_left(double t) const {
  if (t <= 0.0) return ustar(0.0);
  // left limit: value on the step immediately before t
  const auto it = std::lower_bound(cum_.begin() + 1, cum_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - (cum_.begin() + 1));
  if (i >= levels_.size()) return 0.0;
  return levels_[i];
}

double Rearrangement::mu(double lambda) const {
  if (lambda < 0.0) throw ValidationError("mu: negative level");
  // mu(lambda) = measure of { |u| > lambda } = cum at the last level > lambda.
  const auto it = std::lower_bound(levels_.begin(), levels_.end(), lambda,
                                   [](double lvl, double lam) { return lvl > lam; });
  const std::size_t i = static_cast<std::size_t>(it - levels_.begin());
  return cum_[i];
}

double Rearrangement::mu_left(double lambda) const {
  if (lambda <= 0.0) return total_measure();
  // Leb(|u| >= lambda): include levels equal to lambda.
  const auto it = std::upper_bound(levels_.begin(), levels_.end(), lambda,
                                   [](double lam, double lvl) { return lvl < lam; });
  const std::size_t i = static_cast<std::size_t>(it - levels_.begin());
  return cum_[i];
}

double Rearrangement::lp(double p) const {
  if (p < 1.0) throw ValidationError("Rearrangement::lp: p must be >= 1");
  double acc = 0.0;
  for (std::size_t i = 0; i < levels_.size(); ++i)
    acc += std::pow(levels_[i], p) * (cum_[i + 1] - cum_[i]);
  return std::pow(acc, 1.0 / p);
}

double lorentz_norm(const Rearrangement& r, double p, double q) {
  if (p < 1.0) throw ValidationError("lorentz_norm: p must be >= 1");
  const auto& levels = r.levels();
  const auto& cum = r.cumulative();
  if (levels.empty()) return 0.0;

  if (std::isinf(q)) {
    // sup_t t^{1/p} u*(t): on [cum_i, cum_{i+1}) the sup is at the right edge.
    double best = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i)
      best = std::max(best, levels[i] * std::pow(cum[i + 1], 1.0 / p));
    return best;
  }
  if (q < 1.0) throw ValidationError("lorentz_norm: q must be >= 1 or infinity");

  // int_0^inf (t^{1/p} u*(t))^q dt/t = sum_i level_i^q (p/q)(cum_{i+1}^{q/p} - cum_i^{q/p})
  const double e = q / p;
  double acc = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i)
    acc += std::pow(levels[i], q) * (std::pow(cum[i + 1], e) - std::pow(cum[i], e)) / e;
  return std::pow(acc, 1.0 / q);
}

TartarSequence tartar_sequence(const Rearrangement& r, int k_min, int k_max) {
  if (k_min > k_max) throw ValidationError("tartar_sequence: empty window");
  TartarSequence ts;
  for (int k = k_min; k <= k_max; ++k) {
    const double ek = std::exp(static_cast<double>(k));
    const double ak = r.ustar(ek);
    // Clip the window where the sequence saturates at max|u| or hits 0.
    if (!ts.a.empty() && ak == 0.0 && ts.a.back() == 0.0) break;
    if (ts.a.empty() && k > k_min && ak == r.max_value()) {
      // still below the saturation edge; keep a single saturated entry
    }
    ts.ks.push_back(k);
    ts.a.push_back(ak);
  }
  // Drop the leading saturated run except one entry.
  std::size_t lead = 0;
  while (lead + 1 < ts.a.size() && ts.a[lead + 1] == ts.a[0] && ts.a[0] == r.max_value()) ++lead;
  if (lead > 0) {
    ts.ks.erase(ts.ks.begin(), ts.ks.begin() + static_cast<std::ptrdiff_t>(lead));
    ts.a.erase(ts.a.begin(), ts.a.begin() + static_cast<std::ptrdiff_t>(lead));
  }

  // Construction inequalities mu(a_k) <= e^k <= mu(a_k -) and the sandwich
  // u*(e^k) <= a_k <= u*(e^k -).
  for (std::size_t i = 0; i < ts.a.size(); ++i) {
    const double ek = std::exp(static_cast<double>(ts.ks[i]));
    const double ak = ts.a[i];
    if (ak > 0.0) {
      if (r.mu(ak) > ek * (1 + 1e-12))
        throw Error("tartar_sequence: mu(a_k) <= e^k violated");
      if (r.mu_left(ak) < ek * (1 - 1e-12) && ak <= r.max_value() && r.mu_left(ak) < r.total_measure())
        throw Error("tartar_sequence: e^k <= mu(a_k-) violated");
    }
    if (i + 1 < ts.a.size() && ts.a[i + 1] > ts.a[i] + 1e-15)
      throw Error("tartar_sequence: sequence not non-increasing");
  }
  for (std::size_t i = 0; i + 1 < ts.a.size(); ++i) ts.gaps.push_back(ts.a[i] - ts.a[i + 1]);
  return ts;
}

double truncation_map(double v, double a_hi, double a_lo) {
  // phi_k with a_hi = a_k, a_lo = a_{k+1}.
  const double av = std::abs(v);
  if (av <= a_lo) return 0.0;
  if (av >= a_hi) return a_hi - a_lo;
  return av - a_lo;
}

GridFunction truncate(const GridFunction& u, const TartarSequence& ts, int k) {
  const auto it = std::find(ts.ks.begin(), ts.ks.end(), k);
  if (it == ts.ks.end() || it + 1 == ts.ks.end())
    throw ValidationError("truncate: k outside the computed window");
  const std::size_t i = static_cast<std::size_t>(it - ts.ks.begin());
  const double a_hi = ts.a[i];
  const double a_lo = ts.a[i + 1];
  GridFunction out = u;
  for (auto& v : out.values) v = truncation_map(v, a_hi, a_lo);
  return out;
}

KFunctionalCurve k_functional(const AnalyticField& u, const Geometry& g, double p, KPair pair,
                              int m, const std::vector<double>& t_grid,
                              const std::vector<double>& eps_grid, const BumpKernel& bump,
                              const MollifyOptions& opts) {
  if (t_grid.empty()) throw ValidationError("k_functional: empty t grid");

  NormOptions nopts = opts.norm;
  DField du(g, u, nopts);
  const double u_lp = du.lp(p);
  const double u_w1p = sobolev_norm(du, 1, p);

  // Per-eps decomposition norms: ||u - u_eps||_p and the Z2 norm of u_eps.
  std::vector<double> part1, part2;
  for (const double eps : eps_grid) {
    part1.push_back(mollify_error_lp(u, g, 1, eps, bump, p, opts));
    const Box bx = u.support().padded(0.5);
    std::vector<int> npts(static_cast<std::size_t>(g.N() + 1), nopts.default_npts);
    GridSpec grid(bx, npts);
    GridFunction ue = mollify(u, g, 1, eps, bump, grid, opts);
    if (pair == KPair::LpLinf) {
      part2.push_back(ue.max_abs());
    } else {
      ue.margin = std::max(2, ue.margin);
      DField dm(g, std::move(ue), nopts);
      part2.push_back(sobolev_norm(dm, m, p));
    }
  }

  const double u_z2 = pair == KPair::LpLinf ? du.sup_abs() : sobolev_norm(du, m, p);
  const double dd = static_cast<double>(g.hom_dim());

  KFunctionalCurve curve;
  curve.label = "mollifier upper bound";
  for (const double t : t_grid) {
    double best = std::min(u_lp, t * u_z2);  // trivial splittings, (ae20) cap
    for (std::size_t i = 0; i < part1.size(); ++i)
      best = std::min(best, part1[i] + t * part2[i]);
    curve.t.push_back(t);
    curve.K.push_back(best);
    // The proof-side envelope min_eps (eps + t eps^{-d/p}) ||u||_{W^{1,p}}.
    double env = std::numeric_limits<double>::infinity();
    for (const double eps : eps_grid)
      env = std::min(env, (eps + t * std::pow(eps, -dd / p)) * u_w1p);
    curve.bound_envelope.push_back(env);
  }
  return curve;
}

}  // namespace kfp
