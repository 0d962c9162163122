#include "kfp/kernel.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace kfp {

CovariancePolynomial::CovariancePolynomial(const Geometry& g) : g_(&g) {
  const int n = g.N();
  const int r = g.r();
  const int d0 = g.diffusion_dim();
  Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(n, n);
  a0.topLeftCorner(d0, d0).setIdentity();

  // Termwise integration of sum_{j,k} s^{j+k} B^j A0 (B^T)^k / (j! k!).
  coeff_.assign(static_cast<std::size_t>(2 * r + 2), Eigen::MatrixXd::Zero(n, n));
  double jfact = 1.0;
  for (int j = 0; j <= r; ++j) {
    if (j > 0) jfact *= j;
    double kfact = 1.0;
    for (int k = 0; k <= r; ++k) {
      if (k > 0) kfact *= k;
      const int m = j + k + 1;
      coeff_[static_cast<std::size_t>(m)] +=
          g.matrix_power(j) * a0 * g.matrix_power(k).transpose() / (jfact * kfact * m);
    }
  }
  // Construction is symmetric term by term; enforce it exactly.
  for (auto& c : coeff_) c = 0.5 * (c + c.transpose()).eval();
}

Eigen::MatrixXd CovariancePolynomial::eval(double t) const {
  const int n = g_->N();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t m = coeff_.size(); m-- > 0;) acc = acc * t + coeff_[m];
  return acc;
}

Eigen::MatrixXd CovariancePolynomial::eval_derivative(double t) const {
  const int n = g_->N();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t m = coeff_.size(); m-- > 1;) acc = acc * t + coeff_[m] * static_cast<double>(m);
  return acc;
}

KernelValue gamma_eval(const CovariancePolynomial& cp, const GroupPoint& z) {
  const Geometry& g = cp.geometry();
  const int n = g.N();
  KernelValue kv;
  kv.grad_d = Eigen::VectorXd::Zero(g.diffusion_dim());
  if (z.t <= 0.0) return kv;

  const Eigen::MatrixXd ct = cp.eval(z.t);
  Eigen::LLT<Eigen::MatrixXd> llt(ct);
  if (llt.info() != Eigen::Success)
    throw KernelError("gamma_eval: covariance is singular for t > 0 (Hormander condition fails)");

  double logdet = 0.0;
  const auto& lmat = llt.matrixL();
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(lmat(i, i));

  const Eigen::VectorXd cinv_x = llt.solve(z.x);
  const double quad = z.x.dot(cinv_x);
  const double log_gamma = -0.5 * n * std::log(2.0 * M_PI) - 0.5 * logdet - 0.5 * quad;
  if (log_gamma < cp.log_floor()) return kv;

  kv.gamma = std::exp(log_gamma);
  kv.grad_d = -kv.gamma * cinv_x.head(g.diffusion_dim());

  // Y Gamma = <Bx, grad_x Gamma> + d_t Gamma with
  // d_t Gamma = Gamma (-tr(C^{-1} C') + (C^{-1}x)^T C' (C^{-1}x)) / 2.
  const Eigen::MatrixXd cdot = cp.eval_derivative(z.t);
  const double trace_term = llt.solve(cdot).trace();
  const double dt_gamma = kv.gamma * 0.5 * (cinv_x.dot(cdot * cinv_x) - trace_term);
  const Eigen::VectorXd grad_full = -kv.gamma * cinv_x;
  kv.y_gamma = (g.B() * z.x).dot(grad_full) + dt_gamma;
  return kv;
}

KernelBoundReport kernel_bound_check(const CovariancePolynomial& cp, const KernelSampleSpec& spec) {
  const Geometry& g = cp.geometry();
  const int n = g.N();
  const int d = g.hom_dim();

  std::vector<double> ts;
  for (int i = 0; i < spec.nt; ++i) {
    const double f = static_cast<double>(i) / (spec.nt - 1);
    ts.push_back(spec.t_min * std::pow(spec.t_max / spec.t_min, f));
  }

  std::int64_t nx_total = 1;
  for (int a = 0; a < n; ++a) nx_total *= spec.nx;

  KernelBoundReport rep;
  rep.samples = static_cast<std::int64_t>(ts.size()) * nx_total;

  const std::int64_t total = rep.samples;
  // Both bound ratios are homogeneous of degree zero, so every sample is
  // rescaled to the unit homogeneous sphere; the lattice then only selects
  // directions and refinement densifies the sphere.
  auto sample_point = [&](std::int64_t i) {
    const std::int64_t it = i / nx_total;
    std::int64_t rest = i % nx_total;
    GroupPoint z;
    z.t = ts[static_cast<std::size_t>(it)];
    z.x = Eigen::VectorXd(n);
    for (int a = n - 1; a >= 0; --a) {
      const int ia = static_cast<int>(rest % spec.nx);
      rest /= spec.nx;
      z.x[a] = -spec.x_half_width + 2.0 * spec.x_half_width * ia / (spec.nx - 1);
    }
    const double nrm = g.hom_norm(z);
    return nrm > 0 ? g.dilate(1.0 / nrm, z) : z;
  };

  rep.sup_gamma_ratio = block_max(total, [&](std::int64_t i) {
    const GroupPoint z = sample_point(i);
    const double nrm = g.hom_norm(z);
    if (nrm == 0.0) return 0.0;
    return std::pow(nrm, d - 2) * gamma_eval(cp, z).gamma;
  });
  rep.sup_ygamma_ratio = block_max(total, [&](std::int64_t i) {
    const GroupPoint z = sample_point(i);
    const double nrm = g.hom_norm(z);
    if (nrm == 0.0) return 0.0;
    return std::pow(nrm, d) * std::abs(gamma_eval(cp, z).y_gamma);
  });
  return rep;
}

namespace {

/// Integrate kernel(zeta) * f_interp(zeta) over one grid cell containing the
/// singular point by dyadic subdivision toward it.
double singular_cell_integral(const Geometry& g, const GridFunction& f,
                              const std::function<double(const GroupPoint&)>& kernel,
                              const GroupPoint& z, Eigen::VectorXd cell_lo,
                              Eigen::VectorXd cell_hi, int levels) {
  const int nv = static_cast<int>(cell_lo.size());
  double acc = 0.0;
  for (int lvl = 0; lvl < levels; ++lvl) {
    // Split the cell at its center; recurse into the subcell containing z,
    // integrate the remaining subcells by the midpoint rule.
    const Eigen::VectorXd mid = 0.5 * (cell_lo + cell_hi);
    const Eigen::VectorXd zf = z.flat();
    std::vector<int> zbits(static_cast<std::size_t>(nv));
    for (int a = 0; a < nv; ++a) zbits[static_cast<std::size_t>(a)] = zf[a] > mid[a] ? 1 : 0;
    const int corners = 1 << nv;
    for (int c = 0; c < corners; ++c) {
      bool is_z_cell = true;
      for (int a = 0; a < nv; ++a)
        if (((c >> a) & 1) != zbits[static_cast<std::size_t>(a)]) { is_z_cell = false; break; }
      if (is_z_cell) continue;
      Eigen::VectorXd lo(nv), hi(nv);
      double vol = 1.0;
      for (int a = 0; a < nv; ++a) {
        const int bit = (c >> a) & 1;
        lo[a] = bit ? mid[a] : cell_lo[a];
        hi[a] = bit ? cell_hi[a] : mid[a];
        vol *= hi[a] - lo[a];
      }
      const Eigen::VectorXd center = 0.5 * (lo + hi);
      const double fv = interpolate_or_zero(f, center);
      if (fv != 0.0) acc += vol * fv * kernel(g.compose(g.invert(GroupPoint::from_flat(center)), z));
    }
    for (int a = 0; a < nv; ++a) {
      if (zbits[static_cast<std::size_t>(a)]) cell_lo[a] = mid[a];
      else cell_hi[a] = mid[a];
    }
  }
  return acc;
}

GridFunction convolve_singular(const Geometry& g, const GridFunction& f,
                               const std::function<double(const GroupPoint&)>& kernel,
                               const GridSpec& out_spec, int refine_levels) {
  GridFunction out;
  out.spec = out_spec;
  out.margin = 0;
  out.values.assign(static_cast<std::size_t>(out_spec.total()), 0.0);

  const GridSpec& fs = f.spec;
  const std::int64_t nf = fs.total();
  const std::int64_t no = out_spec.total();

  Eigen::VectorXd half_cell(fs.dims());
  for (int a = 0; a < fs.dims(); ++a) half_cell[a] = 0.5 * fs.spacing(a);

  for (std::int64_t i = 0; i < no; ++i) {
    const Eigen::VectorXd zf = out_spec.node(i);
    const GroupPoint z = GroupPoint::from_flat(zf);
    const double sum = block_sum(nf, [&](std::int64_t j) {
      const double fv = f.values[static_cast<std::size_t>(j)];
      if (fv == 0.0) return 0.0;
      const auto idx = fs.unflatten(j);
      const Eigen::VectorXd zeta = fs.node(j);
      bool singular = true;
      for (int a = 0; a < fs.dims(); ++a)
        if (std::abs(zeta[a] - zf[a]) > half_cell[a] * (1.0 + 1e-12)) { singular = false; break; }
      if (singular) return 0.0;  // handled below
      return fs.trapezoid_weight(idx) * fv *
             kernel(g.compose(g.invert(GroupPoint::from_flat(zeta)), z));
    });

    // Graded treatment of the cell around z (if z lies inside the f grid).
    double local = 0.0;
    if (fs.box.contains(zf)) {
      Eigen::VectorXd lo = zf - half_cell;
      Eigen::VectorXd hi = zf + half_cell;
      for (int a = 0; a < fs.dims(); ++a) {
        lo[a] = std::max(lo[a], fs.box.lo[a]);
        hi[a] = std::min(hi[a], fs.box.hi[a]);
      }
      local = singular_cell_integral(g, f, kernel, z, lo, hi, refine_levels);
    }
    out.values[static_cast<std::size_t>(i)] = sum + local;
  }
  return out;
}

}  // namespace

GridFunction riesz_potential(const Geometry& g, double alpha, const GridFunction& f,
                             const GridSpec& out_spec, int refine_levels) {
  if (alpha <= 0.0 || alpha >= g.hom_dim())
    throw ValidationError("riesz_potential: alpha must be in (0, hom_dim)");
  const double expo = alpha - g.hom_dim();
  auto kernel = [&g, expo](const GroupPoint& w) {
    const double nrm = g.hom_norm(w);
    return nrm == 0.0 ? 0.0 : std::pow(nrm, expo);
  };
  return convolve_singular(g, f, kernel, out_spec, refine_levels);
}

AnalyticField apply_operator(const Geometry& g, const AnalyticField& u) {
  AnalyticField acc = u.dy(g).scaled(-1.0);
  for (int i = 0; i < g.diffusion_dim(); ++i) acc = acc + u.dx(i).dx(i).scaled(0.5);
  return acc;
}

namespace {

// Nodes and weights of the n-point Gauss-Hermite rule for int e^{-y^2} f(y) dy,
// by the Golub-Welsch eigenvalue construction.
std::vector<std::pair<double, double>> gauss_hermite(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  std::vector<std::pair<double, double>> nw;
  nw.reserve(static_cast<std::size_t>(n));
  const double mu0 = std::sqrt(M_PI);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    nw.emplace_back(es.eigenvalues()[i], mu0 * v0 * v0);
  }
  return nw;
}

}  // namespace

namespace {

// Quadratic form of a polynomial in the space variables at a fixed time:
// q(x) = c0 + g.x + x^T H x. Throws when the space degree exceeds two.
struct SpaceQuadratic {
  double c0;
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
};

SpaceQuadratic space_quadratic(const Poly& q, double tval, int n_space) {
  for (const auto& [e, c] : q.terms()) {
    int deg = 0;
    for (std::size_t v = 1; v < e.size(); ++v) deg += e[v];
    if (deg > 2)
      throw ValidationError("reconstruct_from_kernel: field exponent is not quadratic in space");
  }
  SpaceQuadratic sq;
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_space + 1);
  zero[0] = tval;
  sq.c0 = q.eval(zero);
  sq.g = Eigen::VectorXd::Zero(n_space);
  sq.h = Eigen::MatrixXd::Zero(n_space, n_space);
  for (int i = 0; i < n_space; ++i) {
    const Poly qi = q.derivative(i + 1);
    sq.g[i] = qi.eval(zero);
    for (int j = i; j < n_space; ++j) {
      const double hij = 0.5 * qi.derivative(j + 1).eval(zero);
      sq.h(i, j) = hij;
      sq.h(j, i) = hij;
    }
  }
  return sq;
}

}  // namespace

ReconstructionResult reconstruct_from_kernel(const CovariancePolynomial& cp,
                                             const AnalyticField& u, int time_nodes,
                                             int gauss_nodes, int out_npts) {
  const Geometry& g = cp.geometry();
  const Box& bx = u.support();
  for (int a = 0; a < bx.dims(); ++a)
    if (!std::isfinite(bx.lo[a]) || !std::isfinite(bx.hi[a]))
      throw ValidationError("reconstruct_from_kernel: non-compact support");
  if (!g.check_hormander().hormander)
    throw KernelError("reconstruct_from_kernel: Hormander condition fails");
  if (!u.supports_derivatives())
    throw ValidationError("reconstruct_from_kernel: needs exact derivatives of u");

  const AnalyticField ku = apply_operator(g, u);
  const int n = g.N();
  for (const auto& term : ku.terms())
    if (term.trig != 0)
      throw ValidationError("reconstruct_from_kernel: oscillatory fields are not supported");

  // Time-sliced form of the representation: with dt = t - s and the change
  // of variable w = x - e^{dt B} xi (unit Jacobian),
  //   u(z) = -int_0^{T} ddt  E_{w ~ N(0, C_dt)} [ K u(t - dt, e^{-dt B}(x - w)) ].
  // Each summand of K u is polynomial-times-Gaussian, so the inner mean is a
  // Gaussian-product integral: completing the square leaves a polynomial
  // moment, integrated exactly by a short Gauss-Hermite rule. Only the
  // outer smooth dt-integral carries quadrature error.
  const auto gh = gauss_hermite(gauss_nodes);
  std::int64_t gh_total = 1;
  for (int a = 0; a < n; ++a) gh_total *= gauss_nodes;
  const double gh_norm = std::pow(M_PI, -0.5 * n);

  // Interior sample of evaluation points.
  Box inner = bx;
  for (int a = 0; a < bx.dims(); ++a) {
    const double shrink = 0.25 * bx.extent(a);
    inner.lo[a] += shrink;
    inner.hi[a] -= shrink;
  }
  GridSpec out_grid(inner, std::vector<int>(static_cast<std::size_t>(n + 1), out_npts));

  // Gauss-Legendre nodes on [0,1].
  std::vector<std::pair<double, double>> gl;
  for (int i = 0; i < time_nodes; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (time_nodes + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= time_nodes; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = time_nodes * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    gl.emplace_back(0.5 * (x + 1.0), 1.0 / ((1.0 - x * x) * dp * dp));
  }

  const double t_floor = bx.lo[0] - 1.0;  // past the declared support the terms are negligible

  ReconstructionResult res;
  double err2 = 0.0, ref2 = 0.0;
  for (std::int64_t i = 0; i < out_grid.total(); ++i) {
    const Eigen::VectorXd zf = out_grid.node(i);
    const GroupPoint z = GroupPoint::from_flat(zf);
    const double tmax = z.t - t_floor;
    double acc = 0.0;
    if (tmax > 0) {
      acc = block_sum(static_cast<std::int64_t>(gl.size()), [&](std::int64_t it) {
        const double dt = gl[static_cast<std::size_t>(it)].first * tmax;
        const double wt = gl[static_cast<std::size_t>(it)].second * tmax;
        const Eigen::MatrixXd cdt = cp.eval(dt);
        Eigen::LDLT<Eigen::MatrixXd> cldlt(cdt);
        if (cldlt.info() != Eigen::Success) return 0.0;
        const Eigen::MatrixXd back = g.matrix_exp(-dt);
        const double tval = z.t - dt;
        const Eigen::VectorXd a_vec = back * z.x;  // xi = a - M w with M = e^{-dt B}
        double slice = 0.0;
        for (const auto& term : ku.terms()) {
          const SpaceQuadratic sq = space_quadratic(term.expo, tval, n);
          // total exponent in w: -w^T C^{-1} w / 2 + q(a - M w)
          const Eigen::MatrixXd mh = back.transpose() * sq.h * back;
          const Eigen::MatrixXd amat = cdt.inverse() - 2.0 * mh;
          const Eigen::VectorXd bvec = -back.transpose() * sq.g - 2.0 * mh.eval() * z.x;
          Eigen::LDLT<Eigen::MatrixXd> aldlt(amat);
          if (aldlt.info() != Eigen::Success) continue;
          const Eigen::VectorXd mean = aldlt.solve(bvec);
          // F(w) = c0 + g.(a - Mw) + (a-Mw)^T H (a-Mw) - w^T C^{-1} w / 2
          //      = const + b.w - w^T A w / 2 with const = c0 + g.a + a^T H a,
          // so the peak value is const + b.m / 2 at m = A^{-1} b.
          const double f_const = sq.c0 + sq.g.dot(a_vec) + a_vec.dot(sq.h * a_vec);
          const double f_peak = f_const + 0.5 * bvec.dot(mean);
          // prefactor (det C det A)^{-1/2}
          double logdet = 0.0;
          {
            const Eigen::VectorXd dc = cldlt.vectorD();
            const Eigen::VectorXd da = aldlt.vectorD();
            for (int kk = 0; kk < n; ++kk) logdet += std::log(dc[kk]) + std::log(da[kk]);
          }
          const double scalar = std::exp(f_peak - 0.5 * logdet);
          if (scalar == 0.0 || !std::isfinite(scalar)) continue;
          // polynomial moment: E P(tval, a - M(mean + v)) with v ~ N(0, A^{-1})
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(amat);
          const Eigen::MatrixXd vroot =
              es.eigenvectors() *
              es.eigenvalues().cwiseMax(1e-300).cwiseInverse().cwiseSqrt().asDiagonal();
          double moment = 0.0;
          Eigen::VectorXd y(n), arg(n + 1);
          for (std::int64_t jj = 0; jj < gh_total; ++jj) {
            std::int64_t rest = jj;
            double wj = gh_norm;
            for (int a2 = 0; a2 < n; ++a2) {
              const auto& [node, weight] = gh[static_cast<std::size_t>(rest % gauss_nodes)];
              rest /= gauss_nodes;
              y[a2] = node;
              wj *= weight;
            }
            const Eigen::VectorXd v = vroot * (std::sqrt(2.0) * y);
            arg[0] = tval;
            arg.tail(n) = a_vec - back * (mean + v);
            moment += wj * term.pre.eval(arg);
          }
          slice += scalar * moment;
        }
        return wt * slice;
      });
    }
    const double approx = -acc;
    const double exact = u.eval_flat(zf);
    res.points.push_back(zf);
    res.values.push_back(approx);
    res.reference.push_back(exact);
    err2 += (approx - exact) * (approx - exact);
    ref2 += exact * exact;
  }
  res.rel_l2_error = ref2 > 0 ? std::sqrt(err2 / ref2) : std::sqrt(err2);
  return res;
}

}  // namespace kfp
