#include "kfp/grid.hpp"

#include <cmath>
#include <sstream>

namespace kfp {

GridSpec::GridSpec(Box b, std::vector<int> n) : box(std::move(b)), npts(std::move(n)) {
  if (box.dims() != static_cast<int>(npts.size()))
    throw ValidationError("GridSpec: box/npts dimension mismatch");
  for (int np : npts)
    if (np < 2) throw ValidationError("GridSpec: need at least 2 points per axis");
  for (int i = 0; i < box.dims(); ++i)
    if (!(box.lo[i] < box.hi[i]) || !std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i]))
      throw ValidationError("GridSpec: invalid box bounds");
}

GridSpec GridSpec::cube(int n_space, double half_width, int n) {
  const int nv = n_space + 1;
  Box b(Eigen::VectorXd::Constant(nv, -half_width), Eigen::VectorXd::Constant(nv, half_width));
  return GridSpec(b, std::vector<int>(static_cast<std::size_t>(nv), n));
}

GridSpec GridSpec::for_box(const Box& b, int n) {
  return GridSpec(b, std::vector<int>(static_cast<std::size_t>(b.dims()), n));
}

double GridSpec::spacing(int axis) const {
  return (box.hi[axis] - box.lo[axis]) / (npts[static_cast<std::size_t>(axis)] - 1);
}

std::int64_t GridSpec::total() const {
  std::int64_t t = 1;
  for (int np : npts) t *= np;
  return t;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dims(); ++a) v *= spacing(a);
  return v;
}

std::vector<int> GridSpec::unflatten(std::int64_t flat) const {
  std::vector<int> idx(npts.size());
  for (int a = dims() - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % npts[static_cast<std::size_t>(a)]);
    flat /= npts[static_cast<std::size_t>(a)];
  }
  return idx;
}

std::int64_t GridSpec::flatten(const std::vector<int>& idx) const {
  std::int64_t flat = 0;
  for (int a = 0; a < dims(); ++a) flat = flat * npts[static_cast<std::size_t>(a)] + idx[static_cast<std::size_t>(a)];
  return flat;
}

Eigen::VectorXd GridSpec::node(std::int64_t flat) const {
  const auto idx = unflatten(flat);
  Eigen::VectorXd z(dims());
  for (int a = 0; a < dims(); ++a) z[a] = coord(a, idx[static_cast<std::size_t>(a)]);
  return z;
}

double GridSpec::trapezoid_weight(const std::vector<int>& idx) const {
  double w = 1.0;
  for (int a = 0; a < dims(); ++a) {
    const int i = idx[static_cast<std::size_t>(a)];
    const double h = spacing(a);
    w *= (i == 0 || i == npts[static_cast<std::size_t>(a)] - 1) ? 0.5 * h : h;
  }
  return w;
}

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

namespace {

bool in_margin(const GridSpec& spec, const std::vector<int>& idx, int margin) {
  for (int a = 0; a < spec.dims(); ++a) {
    const int i = idx[static_cast<std::size_t>(a)];
    if (i < margin || i >= spec.npts[static_cast<std::size_t>(a)] - margin) return true;
  }
  return false;
}

}  // namespace

GridFunction sample(const AnalyticField& u, const GridSpec& spec, int margin, double margin_tol) {
  if (u.nvars() != spec.dims()) throw ValidationError("sample: dimension mismatch");
  GridFunction out;
  out.spec = spec;
  out.margin = margin;
  out.values.assign(static_cast<std::size_t>(spec.total()), 0.0);

  const std::int64_t n = spec.total();
  for (std::int64_t i = 0; i < n; ++i) out.values[static_cast<std::size_t>(i)] = u.eval_flat(spec.node(i));

  double peak = out.max_abs();
  if (peak == 0.0) return out;

  // Support check: the declared support must stay off the margin band.
  double worst = 0.0;
  int worst_axis = -1;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = spec.unflatten(i);
    if (!in_margin(spec, idx, margin)) continue;
    const double v = std::abs(out.values[static_cast<std::size_t>(i)]);
    if (v > worst) {
      worst = v;
      for (int a = 0; a < spec.dims(); ++a) {
        const int ii = idx[static_cast<std::size_t>(a)];
        if (ii < margin || ii >= spec.npts[static_cast<std::size_t>(a)] - margin) {
          worst_axis = a;
          break;
        }
      }
    }
    out.values[static_cast<std::size_t>(i)] = 0.0;
  }
  if (worst > margin_tol * peak) {
    std::ostringstream os;
    os << "sample: support overflows the margin on axis " << worst_axis << " (value " << worst
       << " vs peak " << peak << ")";
    throw ValidationError(os.str());
  }
  return out;
}

GridFunction sample_fn(const std::function<double(const Eigen::VectorXd&)>& f,
                       const GridSpec& spec, int margin) {
  GridFunction out;
  out.spec = spec;
  out.margin = margin;
  out.values.assign(static_cast<std::size_t>(spec.total()), 0.0);
  const std::int64_t n = spec.total();
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = spec.unflatten(i);
    if (in_margin(spec, idx, margin)) continue;
    out.values[static_cast<std::size_t>(i)] = f(spec.node(i));
  }
  return out;
}

double interpolate(const GridFunction& u, const Eigen::VectorXd& z) {
  const GridSpec& s = u.spec;
  if (z.size() != s.dims()) throw ValidationError("interpolate: dimension mismatch");
  if (!s.box.contains(z, 1e-12)) throw ValidationError("interpolate: point outside grid box");

  const int nd = s.dims();
  std::vector<int> base(static_cast<std::size_t>(nd));
  std::vector<double> frac(static_cast<std::size_t>(nd));
  for (int a = 0; a < nd; ++a) {
    const double rel = (z[a] - s.box.lo[a]) / s.spacing(a);
    int i0 = static_cast<int>(std::floor(rel));
    i0 = std::max(0, std::min(i0, s.npts[static_cast<std::size_t>(a)] - 2));
    base[static_cast<std::size_t>(a)] = i0;
    frac[static_cast<std::size_t>(a)] = rel - i0;
  }
  double acc = 0.0;
  const int corners = 1 << nd;
  std::vector<int> idx(static_cast<std::size_t>(nd));
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    for (int a = 0; a < nd; ++a) {
      const int bit = (c >> a) & 1;
      idx[static_cast<std::size_t>(a)] = base[static_cast<std::size_t>(a)] + bit;
      w *= bit ? frac[static_cast<std::size_t>(a)] : 1.0 - frac[static_cast<std::size_t>(a)];
    }
    if (w != 0.0) acc += w * u.values[static_cast<std::size_t>(s.flatten(idx))];
  }
  return acc;
}

double interpolate_or_zero(const GridFunction& u, const Eigen::VectorXd& z) {
  if (!u.spec.box.contains(z, 0.0)) return 0.0;
  return interpolate(u, z);
}

GroupPoint flow_eval(const Geometry& g, const GroupPoint& z, int field_index, double h) {
  if (!std::isfinite(h)) throw ValidationError("flow_eval: non-finite step");
  if (field_index == g.N()) return g.flow_y(h, z);
  return g.flow_x(field_index, h, z);
}

namespace {

GridFunction first_derivative_grid(const Geometry& g, const GridFunction& u, int field_index) {
  const GridSpec& s = u.spec;
  GridFunction out;
  out.spec = s;
  out.margin = u.margin;
  out.values.assign(u.values.size(), 0.0);

  const std::int64_t n = s.total();
  if (field_index < g.N()) {
    const int axis = field_index + 1;
    const double h = s.spacing(axis);
    for (std::int64_t i = 0; i < n; ++i) {
      auto idx = s.unflatten(i);
      const int ii = idx[static_cast<std::size_t>(axis)];
      if (ii == 0 || ii == s.npts[static_cast<std::size_t>(axis)] - 1) continue;  // margin is zero anyway
      idx[static_cast<std::size_t>(axis)] = ii + 1;
      const double up = u.values[static_cast<std::size_t>(s.flatten(idx))];
      idx[static_cast<std::size_t>(axis)] = ii - 1;
      const double um = u.values[static_cast<std::size_t>(s.flatten(idx))];
      out.values[static_cast<std::size_t>(i)] = (up - um) / (2.0 * h);
    }
    return out;
  }

  // Y by the symmetric flow difference with h equal to the time spacing, so
  // the displaced time coordinate stays on the lattice.
  const double h = s.spacing(0);
  const Eigen::MatrixXd ep = g.matrix_exp(h);
  const Eigen::MatrixXd em = g.matrix_exp(-h);
  for (std::int64_t i = 0; i < n; ++i) {
    const Eigen::VectorXd z = s.node(i);
    const Eigen::VectorXd x = z.tail(g.N());
    Eigen::VectorXd zp(z.size()), zm(z.size());
    zp[0] = z[0] + h;
    zp.tail(g.N()) = ep * x;
    zm[0] = z[0] - h;
    zm.tail(g.N()) = em * x;
    const double up = interpolate_or_zero(u, zp);
    const double um = interpolate_or_zero(u, zm);
    out.values[static_cast<std::size_t>(i)] = (up - um) / (2.0 * h);
  }
  return out;
}

}  // namespace

GridFunction intrinsic_derivative_grid(const Geometry& g, const GridFunction& u,
                                       const MultiIndex& m) {
  int stencils = m.k;
  for (int c = 0; c < m.beta.size(); ++c) stencils += m.beta[c];
  if (stencils >= u.margin && u.margin > 0)
    throw ValidationError("intrinsic_derivative_grid: stencil depth exceeds the margin");

  GridFunction f = u;
  for (int c = 0; c < m.beta.size(); ++c)
    for (int rep = 0; rep < m.beta[c]; ++rep) f = first_derivative_grid(g, f, c);
  for (int rep = 0; rep < m.k; ++rep) f = first_derivative_grid(g, f, g.N());
  return f;
}

GridFunction group_convolve(const Geometry& g, const GridFunction& f,
                            const std::function<double(const GroupPoint&)>& kernel,
                            const GridSpec& out_spec) {
  GridFunction out;
  out.spec = out_spec;
  out.margin = 0;
  out.values.assign(static_cast<std::size_t>(out_spec.total()), 0.0);

  const GridSpec& fs = f.spec;
  const std::int64_t nf = fs.total();

  // Precompute source nodes, weights and nonzero mask once.
  std::vector<std::int64_t> active;
  active.reserve(static_cast<std::size_t>(nf));
  for (std::int64_t j = 0; j < nf; ++j)
    if (f.values[static_cast<std::size_t>(j)] != 0.0) active.push_back(j);

  const std::int64_t no = out_spec.total();
  std::vector<double> weights(active.size());
  std::vector<GroupPoint> nodes(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto idx = fs.unflatten(active[a]);
    weights[a] = fs.trapezoid_weight(idx) * f.values[static_cast<std::size_t>(active[a])];
    nodes[a] = GroupPoint::from_flat(fs.node(active[a]));
  }

  for (std::int64_t i = 0; i < no; ++i) {
    const GroupPoint z = GroupPoint::from_flat(out_spec.node(i));
    out.values[static_cast<std::size_t>(i)] = block_sum(static_cast<std::int64_t>(active.size()), [&](std::int64_t a) {
      const GroupPoint& zeta = nodes[static_cast<std::size_t>(a)];
      return weights[static_cast<std::size_t>(a)] * kernel(g.compose(g.invert(zeta), z));
    });
  }
  return out;
}

}  // namespace kfp
