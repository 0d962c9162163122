#include "kfp/fields.hpp"

#include <algorithm>
#include <cmath>

namespace kfp {

// --- Poly --------------------------------------------------------------------

Poly Poly::constant(int nvars, double c) {
  Poly p(nvars);
  if (c != 0.0) p.terms_[std::vector<int>(static_cast<std::size_t>(nvars), 0)] = c;
  return p;
}

Poly Poly::variable(int nvars, int v) {
  Poly p(nvars);
  std::vector<int> e(static_cast<std::size_t>(nvars), 0);
  e[static_cast<std::size_t>(v)] = 1;
  p.terms_[e] = 1.0;
  return p;
}

Poly Poly::monomial(int nvars, const std::vector<int>& exps, double c) {
  Poly p(nvars);
  if (static_cast<int>(exps.size()) != nvars) throw ValidationError("Poly::monomial: bad exponent size");
  if (c != 0.0) p.terms_[exps] = c;
  return p;
}

int Poly::degree() const {
  int deg = 0;
  for (const auto& [e, c] : terms_) {
    int d = 0;
    for (int ei : e) d += ei;
    deg = std::max(deg, d);
  }
  return deg;
}

void Poly::add_term(const std::vector<int>& exps, double c) {
  auto it = terms_.find(exps);
  if (it == terms_.end()) {
    if (c != 0.0) terms_[exps] = c;
  } else {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Poly::eval(const Eigen::VectorXd& z) const {
  double s = 0.0;
  for (const auto& [e, c] : terms_) {
    double m = c;
    for (std::size_t v = 0; v < e.size(); ++v) {
      const double zv = z[static_cast<Eigen::Index>(v)];
      for (int k = 0; k < e[v]; ++k) m *= zv;
    }
    s += m;
  }
  return s;
}

Poly Poly::derivative(int v) const {
  Poly d(nv_);
  for (const auto& [e, c] : terms_) {
    if (e[static_cast<std::size_t>(v)] == 0) continue;
    std::vector<int> e2 = e;
    const int k = e2[static_cast<std::size_t>(v)];
    e2[static_cast<std::size_t>(v)] = k - 1;
    d.add_term(e2, c * k);
  }
  return d;
}

Poly Poly::substitute(const std::vector<Poly>& repl) const {
  if (static_cast<int>(repl.size()) != nv_) throw ValidationError("Poly::substitute: bad replacement count");
  // Power cache per variable.
  std::vector<std::vector<Poly>> powers(static_cast<std::size_t>(nv_));
  auto power = [&](int v, int e) -> const Poly& {
    auto& cache = powers[static_cast<std::size_t>(v)];
    if (cache.empty()) cache.push_back(Poly::constant(nv_, 1.0));
    while (static_cast<int>(cache.size()) <= e) cache.push_back(cache.back() * repl[static_cast<std::size_t>(v)]);
    return cache[static_cast<std::size_t>(e)];
  };
  Poly out(nv_);
  for (const auto& [e, c] : terms_) {
    Poly m = Poly::constant(nv_, c);
    for (int v = 0; v < nv_; ++v)
      if (e[static_cast<std::size_t>(v)] > 0) m = m * power(v, e[static_cast<std::size_t>(v)]);
    out = out + m;
  }
  return out;
}

Poly Poly::operator+(const Poly& o) const {
  Poly out = *this;
  for (const auto& [e, c] : o.terms_) out.add_term(e, c);
  return out;
}

Poly Poly::operator-(const Poly& o) const { return *this + o * -1.0; }

Poly Poly::operator*(const Poly& o) const {
  Poly out(nv_);
  for (const auto& [e1, c1] : terms_) {
    for (const auto& [e2, c2] : o.terms_) {
      std::vector<int> e = e1;
      for (std::size_t v = 0; v < e.size(); ++v) e[v] += e2[v];
      out.add_term(e, c1 * c2);
    }
  }
  return out;
}

Poly Poly::operator*(double a) const {
  Poly out(nv_);
  if (a == 0.0) return out;
  for (const auto& [e, c] : terms_) out.terms_[e] = c * a;
  return out;
}

// --- AnalyticField -----------------------------------------------------------

namespace {

Box default_box(int nvars) {
  return Box(Eigen::VectorXd::Constant(nvars, -6.0), Eigen::VectorXd::Constant(nvars, 6.0));
}

}  // namespace

AnalyticField AnalyticField::zero(int n_space, const Box& box) {
  AnalyticField f;
  f.kind_ = Kind::Smooth;
  f.nv_ = n_space + 1;
  f.box_ = box;
  return f;
}

AnalyticField AnalyticField::from_terms(int n_space, std::vector<SmoothTerm> terms, const Box& box) {
  AnalyticField f;
  f.kind_ = Kind::Smooth;
  f.nv_ = n_space + 1;
  f.terms_ = std::move(terms);
  f.box_ = box;
  f.merge_terms();
  return f;
}

AnalyticField AnalyticField::gaussian(const Eigen::VectorXd& center, const Eigen::VectorXd& decay,
                                      double amplitude, const Box& box) {
  const int nv = static_cast<int>(center.size());
  if (decay.size() != nv) throw ValidationError("gaussian: center/decay size mismatch");
  Poly q(nv);
  for (int v = 0; v < nv; ++v) {
    if (decay[v] <= 0) throw ValidationError("gaussian: decay must be positive");
    Poly dv = Poly::variable(nv, v) - Poly::constant(nv, center[v]);
    q = q - dv * dv * decay[v];
  }
  SmoothTerm t;
  t.pre = Poly::constant(nv, amplitude);
  t.expo = q;
  t.phase = Poly(nv);
  t.trig = 0;
  return from_terms(nv - 1, {t}, box.dims() == nv ? box : default_box(nv));
}

AnalyticField AnalyticField::monomial(int n_space, int kt, const Eigen::VectorXi& beta,
                                      double amplitude, const Box& box) {
  const int nv = n_space + 1;
  if (beta.size() != n_space) throw ValidationError("monomial: beta size mismatch");
  std::vector<int> e(static_cast<std::size_t>(nv), 0);
  e[0] = kt;
  for (int i = 0; i < n_space; ++i) e[static_cast<std::size_t>(i + 1)] = beta[i];
  SmoothTerm t;
  t.pre = Poly::monomial(nv, e, amplitude);
  t.expo = Poly(nv);
  t.phase = Poly(nv);
  t.trig = 0;
  return from_terms(n_space, {t}, box);
}

AnalyticField AnalyticField::modulated_gaussian(const Eigen::VectorXd& center,
                                                const Eigen::VectorXd& decay,
                                                const Eigen::VectorXd& freq, double phase0,
                                                double amplitude, const Box& box) {
  AnalyticField g = gaussian(center, decay, amplitude, box);
  const int nv = g.nv_;
  Poly phase = Poly::constant(nv, phase0);
  for (int v = 0; v < nv; ++v) phase = phase + Poly::variable(nv, v) * freq[v];
  std::vector<SmoothTerm> terms = g.terms_;
  for (auto& t : terms) {
    t.phase = phase;
    t.trig = 1;
  }
  return from_terms(nv - 1, std::move(terms), box);
}

AnalyticField AnalyticField::bump_product(const Eigen::VectorXd& center,
                                          const Eigen::VectorXd& widths, double amplitude) {
  const int nv = static_cast<int>(center.size());
  Box box(center - widths, center + widths);
  auto fn = [center, widths, amplitude](const Eigen::VectorXd& z) {
    double v = amplitude;
    for (int i = 0; i < center.size(); ++i) {
      const double rho = (z[i] - center[i]) / widths[i];
      const double s = 1.0 - rho * rho;
      if (s <= 0.0) return 0.0;
      v *= std::exp(-1.0 / s);
    }
    return v;
  };
  return pointwise(nv - 1, fn, box);
}

AnalyticField AnalyticField::hom_norm_power(const Geometry& g, const GroupPoint& z0, double gamma,
                                            const Eigen::VectorXd& cutoff_widths, double amplitude) {
  const int nv = g.N() + 1;
  const Eigen::VectorXd c0 = z0.flat();
  Box box(c0 - cutoff_widths, c0 + cutoff_widths);
  auto fn = [&g, z0, gamma, c0, cutoff_widths, amplitude](const Eigen::VectorXd& z) {
    double cut = amplitude;
    for (int i = 0; i < z.size(); ++i) {
      const double rho = (z[i] - c0[i]) / cutoff_widths[i];
      const double s = 1.0 - rho * rho;
      if (s <= 0.0) return 0.0;
      cut *= std::exp(-1.0 / s) * std::exp(1.0);  // normalized to 1 at the center
    }
    const GroupPoint zz = GroupPoint::from_flat(z);
    const double nrm = g.hom_norm(g.compose(g.invert(z0), zz));
    return cut * std::pow(nrm, gamma);
  };
  return pointwise(nv - 1, fn, box);
}

AnalyticField AnalyticField::gauge_power(const Geometry& g, const GroupPoint& z0, double gamma,
                                         const Eigen::VectorXd& cutoff_widths, double amplitude) {
  const int nv = g.N() + 1;
  const Eigen::VectorXd c0 = z0.flat();
  Box box(c0 - cutoff_widths, c0 + cutoff_widths);
  const double m = std::max(4.0, 2.0 * (2.0 * g.r() + 1.0));
  const Geometry* gp = &g;
  auto fn = [gp, z0, gamma, c0, cutoff_widths, amplitude, m](const Eigen::VectorXd& z) {
    double cut = amplitude;
    for (int i = 0; i < z.size(); ++i) {
      const double rho = (z[i] - c0[i]) / cutoff_widths[i];
      const double s = 1.0 - rho * rho;
      if (s <= 0.0) return 0.0;
      cut *= std::exp(-1.0 / s) * std::exp(1.0);
    }
    const GroupPoint w = gp->compose(gp->invert(z0), GroupPoint::from_flat(z));
    double acc = std::pow(std::abs(w.t), 0.5 * m);
    for (int i = 0; i <= gp->r(); ++i) {
      const double block = w.x.segment(gp->layer_offset(i), gp->layer_dim(i)).norm();
      acc += std::pow(block, m / (2.0 * i + 1.0));
    }
    return cut * std::pow(acc, gamma / m);
  };
  return pointwise(nv - 1, fn, box);
}

AnalyticField AnalyticField::pointwise(int n_space, std::function<double(const Eigen::VectorXd&)> f,
                                       const Box& box) {
  AnalyticField out;
  out.kind_ = Kind::Pointwise;
  out.nv_ = n_space + 1;
  out.eval_fn_ = std::move(f);
  out.box_ = box;
  return out;
}

double AnalyticField::eval_flat(const Eigen::VectorXd& z) const {
  if (z.size() != nv_) throw ValidationError("AnalyticField::eval: dimension mismatch");
  if (kind_ == Kind::Pointwise) return eval_fn_(z);
  double s = 0.0;
  for (const auto& t : terms_) {
    double v = t.pre.eval(z);
    if (v == 0.0) continue;
    if (!t.expo.is_zero()) v *= std::exp(t.expo.eval(z));
    if (t.trig == 1) v *= std::cos(t.phase.eval(z));
    else if (t.trig == 2) v *= std::sin(t.phase.eval(z));
    s += v;
  }
  return s;
}

void AnalyticField::require_smooth(const char* op) const {
  if (kind_ != Kind::Smooth)
    throw ValidationError(std::string(op) + ": not available for pointwise fields (order-0 evaluators only)");
}

void AnalyticField::merge_terms() {
  std::vector<SmoothTerm> merged;
  for (const auto& t : terms_) {
    if (t.pre.is_zero()) continue;
    bool found = false;
    for (auto& m : merged) {
      if (m.trig == t.trig && m.expo == t.expo && m.phase == t.phase) {
        m.pre = m.pre + t.pre;
        found = true;
        break;
      }
    }
    if (!found) merged.push_back(t);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const SmoothTerm& t) { return t.pre.is_zero(); }),
               merged.end());
  terms_ = std::move(merged);
}

AnalyticField AnalyticField::directional(const std::vector<Poly>& coef) const {
  require_smooth("derivative");
  std::vector<SmoothTerm> out;
  for (const auto& t : terms_) {
    // (sum_v c_v d_v)(P e^Q T(L)) = (sum_v c_v (d_v P + P d_v Q)) e^Q T(L)
    //                               -/+ (sum_v c_v P d_v L) e^Q T'(L)
    Poly p1(nv_);
    Poly p2(nv_);
    for (int v = 0; v < nv_; ++v) {
      const Poly& cv = coef[static_cast<std::size_t>(v)];
      if (cv.is_zero()) continue;
      p1 = p1 + cv * (t.pre.derivative(v) + t.pre * t.expo.derivative(v));
      if (t.trig != 0) p2 = p2 + cv * (t.pre * t.phase.derivative(v));
    }
    if (!p1.is_zero()) {
      SmoothTerm a = t;
      a.pre = p1;
      out.push_back(a);
    }
    if (t.trig != 0 && !p2.is_zero()) {
      SmoothTerm b = t;
      b.trig = (t.trig == 1) ? 2 : 1;                 // cos -> sin, sin -> cos
      b.pre = (t.trig == 1) ? -p2 : p2;               // d cos = -sin, d sin = +cos
      out.push_back(b);
    }
  }
  return from_terms(nv_ - 1, std::move(out), box_);
}

AnalyticField AnalyticField::dt() const {
  std::vector<Poly> coef(static_cast<std::size_t>(nv_), Poly(nv_));
  coef[0] = Poly::constant(nv_, 1.0);
  return directional(coef);
}

AnalyticField AnalyticField::dx(int i) const {
  if (i < 0 || i >= nv_ - 1) throw ValidationError("dx: coordinate out of range");
  std::vector<Poly> coef(static_cast<std::size_t>(nv_), Poly(nv_));
  coef[static_cast<std::size_t>(i + 1)] = Poly::constant(nv_, 1.0);
  return directional(coef);
}

AnalyticField AnalyticField::dy(const Geometry& g) const {
  if (g.N() != nv_ - 1) throw ValidationError("dy: geometry dimension mismatch");
  std::vector<Poly> coef(static_cast<std::size_t>(nv_), Poly(nv_));
  coef[0] = Poly::constant(nv_, 1.0);
  const Eigen::MatrixXd& B = g.B();
  for (int j = 0; j < g.N(); ++j) {
    Poly bx(nv_);
    for (int c = 0; c < g.N(); ++c)
      if (B(j, c) != 0.0) bx = bx + Poly::variable(nv_, c + 1) * B(j, c);
    coef[static_cast<std::size_t>(j + 1)] = bx;
  }
  return directional(coef);
}

AnalyticField AnalyticField::intrinsic_derivative(const Geometry& g, const MultiIndex& m) const {
  AnalyticField f = *this;
  for (int c = 0; c < m.beta.size(); ++c)
    for (int rep = 0; rep < m.beta[c]; ++rep) f = f.dx(c);
  for (int rep = 0; rep < m.k; ++rep) f = f.dy(g);
  return f;
}

AnalyticField AnalyticField::substituted(const std::vector<Poly>& repl, const Box& new_box) const {
  std::vector<SmoothTerm> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) {
    SmoothTerm s = t;
    s.pre = t.pre.substitute(repl);
    s.expo = t.expo.substitute(repl);
    s.phase = t.phase.substitute(repl);
    out.push_back(std::move(s));
  }
  return from_terms(nv_ - 1, std::move(out), new_box);
}

AnalyticField AnalyticField::dilated(const Geometry& g, double lambda) const {
  if (lambda <= 0) throw ValidationError("dilated: lambda must be positive");
  Box nb = box_;
  nb.lo[0] = box_.lo[0] / (lambda * lambda);
  nb.hi[0] = box_.hi[0] / (lambda * lambda);
  for (int c = 0; c < g.N(); ++c) {
    const double w = std::pow(lambda, g.weight_of(c));
    nb.lo[c + 1] = box_.lo[c + 1] / w;
    nb.hi[c + 1] = box_.hi[c + 1] / w;
  }
  if (kind_ == Kind::Pointwise) {
    auto base = eval_fn_;
    const Eigen::VectorXd w = [&] {
      Eigen::VectorXd ww(nv_);
      ww[0] = lambda * lambda;
      ww.tail(g.N()) = g.dilation_weights(lambda);
      return ww;
    }();
    AnalyticField out = pointwise(nv_ - 1, [base, w](const Eigen::VectorXd& z) {
      return base(w.cwiseProduct(z));
    }, nb);
    return out;
  }
  std::vector<Poly> repl;
  repl.reserve(static_cast<std::size_t>(nv_));
  repl.push_back(Poly::variable(nv_, 0) * (lambda * lambda));
  for (int c = 0; c < g.N(); ++c)
    repl.push_back(Poly::variable(nv_, c + 1) * std::pow(lambda, g.weight_of(c)));
  return substituted(repl, nb);
}

Box translated_box(const Geometry& g, const Box& box, const GroupPoint& zeta) {
  // Support of z -> u(zeta o z): t in [lo_t - s, hi_t - s] and
  // x in [lo - e^{tB} xi, hi - e^{tB} xi] over that t-range.
  Box nb = box;
  nb.lo[0] = box.lo[0] - zeta.t;
  nb.hi[0] = box.hi[0] - zeta.t;
  const int nsample = 65;
  Eigen::VectorXd mins = Eigen::VectorXd::Constant(g.N(), std::numeric_limits<double>::infinity());
  Eigen::VectorXd maxs = -mins;
  for (int s = 0; s < nsample; ++s) {
    const double t = nb.lo[0] + (nb.hi[0] - nb.lo[0]) * s / (nsample - 1);
    const Eigen::VectorXd shift = g.matrix_exp(t) * zeta.x;
    mins = mins.cwiseMin(shift);
    maxs = maxs.cwiseMax(shift);
  }
  const double pad = 1e-9 + 0.02 * (maxs - mins).cwiseAbs().maxCoeff();
  for (int c = 0; c < g.N(); ++c) {
    nb.lo[c + 1] = box.lo[c + 1] - maxs[c] - pad;
    nb.hi[c + 1] = box.hi[c + 1] - mins[c] + pad;
  }
  return nb;
}

AnalyticField AnalyticField::translated(const Geometry& g, const GroupPoint& zeta) const {
  if (zeta.x.size() != g.N()) throw ValidationError("translated: dimension mismatch");
  const Box nb = translated_box(g, box_, zeta);
  if (kind_ == Kind::Pointwise) {
    auto base = eval_fn_;
    const Geometry* gp = &g;
    const GroupPoint zc = zeta;
    return pointwise(nv_ - 1, [base, gp, zc](const Eigen::VectorXd& z) {
      return base(gp->compose(zc, GroupPoint::from_flat(z)).flat());
    }, nb);
  }
  // zeta o z = (s + t, e^{tB} xi + x); (e^{tB} xi)_c is a polynomial in t.
  std::vector<Poly> repl;
  repl.reserve(static_cast<std::size_t>(nv_));
  repl.push_back(Poly::variable(nv_, 0) + Poly::constant(nv_, zeta.t));
  double jfact = 1.0;
  std::vector<Eigen::VectorXd> bjxi;
  for (int j = 0; j <= g.r(); ++j) {
    if (j > 0) jfact *= j;
    bjxi.push_back(g.matrix_power(j) * zeta.x / jfact);
  }
  for (int c = 0; c < g.N(); ++c) {
    Poly shift(nv_);
    for (int j = 0; j <= g.r(); ++j) {
      std::vector<int> e(static_cast<std::size_t>(nv_), 0);
      e[0] = j;
      if (bjxi[static_cast<std::size_t>(j)][c] != 0.0)
        shift = shift + Poly::monomial(nv_, e, bjxi[static_cast<std::size_t>(j)][c]);
    }
    repl.push_back(Poly::variable(nv_, c + 1) + shift);
  }
  return substituted(repl, nb);
}

AnalyticField AnalyticField::scaled(double a) const {
  if (kind_ == Kind::Pointwise) {
    auto base = eval_fn_;
    return pointwise(nv_ - 1, [base, a](const Eigen::VectorXd& z) { return a * base(z); }, box_);
  }
  std::vector<SmoothTerm> out = terms_;
  for (auto& t : out) t.pre = t.pre * a;
  return from_terms(nv_ - 1, std::move(out), box_);
}

AnalyticField AnalyticField::operator+(const AnalyticField& o) const {
  require_smooth("operator+");
  o.require_smooth("operator+");
  if (nv_ != o.nv_) throw ValidationError("operator+: dimension mismatch");
  std::vector<SmoothTerm> all = terms_;
  all.insert(all.end(), o.terms_.begin(), o.terms_.end());
  Box nb = box_;
  for (int i = 0; i < nv_; ++i) {
    nb.lo[i] = std::min(box_.lo[i], o.box_.lo[i]);
    nb.hi[i] = std::max(box_.hi[i], o.box_.hi[i]);
  }
  return from_terms(nv_ - 1, std::move(all), nb);
}

}  // namespace kfp
