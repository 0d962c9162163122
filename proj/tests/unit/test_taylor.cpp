#include <doctest.h>

#include "kfp/taylor.hpp"

#include <random>

using namespace kfp;

namespace {

Geometry langevin1() {
  BlockStructure bs;
  bs.layer_dims = {1, 1};
  bs.blocks = {Eigen::MatrixXd::Identity(1, 1)};
  return Geometry(bs);
}

Geometry three_layer() {
  BlockStructure bs;
  bs.layer_dims = {2, 1, 1};
  Eigen::MatrixXd b1(1, 2);
  b1 << 1.0, 0.0;
  Eigen::MatrixXd b2(1, 1);
  b2 << 1.0;
  bs.blocks = {b1, b2};
  return Geometry(bs);
}

Box cube(int nv, double h) {
  return Box(Eigen::VectorXd::Constant(nv, -h), Eigen::VectorXd::Constant(nv, h));
}

AnalyticField default_gaussian() {
  return AnalyticField::gaussian(Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(0.5), 1.0,
                                 cube(3, 6.0));
}

}  // namespace

TEST_CASE("taylor polynomial basics") {
  Geometry g = langevin1();
  const AnalyticField u = default_gaussian();

  // order 0 reduces to the base value
  TaylorOracle t0(u, g, 0);
  const GroupPoint zeta(0.3, Eigen::Vector2d(0.4, -0.1));
  const GroupPoint z(1.0, Eigen::Vector2d(-0.7, 0.2));
  CHECK(t0.eval(zeta, z) == doctest::Approx(u.eval(zeta)));

  // u = v has intrinsic degree 1 and is reproduced exactly at order 1
  const AnalyticField v = AnalyticField::monomial(2, 0, Eigen::Vector2i(1, 0), 1.0, cube(3, 6.0));
  TaylorOracle t1(v, g, 1);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const GroupPoint base(dist(rng), Eigen::Vector2d(dist(rng), dist(rng)));
    const GroupPoint at(dist(rng), Eigen::Vector2d(dist(rng), dist(rng)));
    CHECK(t1.eval(base, at) == doctest::Approx(v.eval(at)).epsilon(1e-13));
  }

  // u = p has intrinsic degree 3
  const AnalyticField p = AnalyticField::monomial(2, 0, Eigen::Vector2i(0, 1), 1.0, cube(3, 6.0));
  TaylorOracle t3(p, g, 3);
  for (int rep = 0; rep < 20; ++rep) {
    const GroupPoint base(dist(rng), Eigen::Vector2d(dist(rng), dist(rng)));
    const GroupPoint at(dist(rng), Eigen::Vector2d(dist(rng), dist(rng)));
    CHECK(t3.eval(base, at) == doctest::Approx(p.eval(at)).epsilon(1e-12));
  }
}

TEST_CASE("frozen taylor data evaluates and reports gaps") {
  Geometry g = langevin1();
  const AnalyticField u = default_gaussian();
  TaylorOracle oracle(u, g, 2);
  const GroupPoint base(0.2, Eigen::Vector2d(0.5, -0.3));
  TaylorData td = oracle.data_at(base);
  const GroupPoint z(0.6, Eigen::Vector2d(0.1, 0.4));
  CHECK(taylor_eval(td, g, z) == doctest::Approx(oracle.eval(base, z)).epsilon(1e-13));

  td.coeff.erase(td.coeff.begin());
  CHECK_THROWS_AS(taylor_eval(td, g, z), ValidationError);
}

TEST_CASE("derivatives of the taylor polynomial shift the order") {
  Geometry g = langevin1();
  const AnalyticField u = default_gaussian();
  const AnalyticField du = u.dx(0);
  const AnalyticField yu = u.dy(g);
  TaylorOracle t3(u, g, 3);
  TaylorOracle t2(du, g, 2);
  TaylorOracle t1(yu, g, 1);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const double h = 1e-5;
  for (int rep = 0; rep < 10; ++rep) {
    const GroupPoint base(dist(rng), Eigen::Vector2d(dist(rng), dist(rng)));
    const GroupPoint z(dist(rng), Eigen::Vector2d(dist(rng), dist(rng)));

    // d_{x_1} T_3 u = T_2 (d_1 u) in the second argument
    GroupPoint zp = z, zm = z;
    zp.x[0] += h;
    zm.x[0] -= h;
    const double fd = (t3.eval(base, zp) - t3.eval(base, zm)) / (2 * h);
    CHECK(fd == doctest::Approx(t2.eval(base, z)).epsilon(1e-5));

    // Y_z T_3 u = T_1 (Y u)
    const GroupPoint yp = g.flow_y(h, z), ym = g.flow_y(-h, z);
    const double fdy = (t3.eval(base, yp) - t3.eval(base, ym)) / (2 * h);
    CHECK(fdy == doctest::Approx(t1.eval(base, z)).epsilon(1e-4));
  }
}

TEST_CASE("increment identities behind the remainder proof") {
  Geometry g = langevin1();
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const GroupPoint z(dist(rng), Eigen::Vector2d(dist(rng), dist(rng)));
    const GroupPoint zeta(dist(rng), Eigen::Vector2d(dist(rng), dist(rng)));
    // (e^{sY} z)^{-1} o (z o zeta) = (0, xi) and z^{-1} o (z o zeta) = (s, xi)
    const GroupPoint zz = g.compose(z, zeta);
    const GroupPoint lhs1 = g.compose(g.invert(g.flow_y(zeta.t, z)), zz);
    CHECK(std::abs(lhs1.t) <= 1e-13);
    CHECK((lhs1.x - zeta.x).norm() <= 1e-12 * (1 + zeta.x.norm()));
    const GroupPoint lhs2 = g.compose(g.invert(z), zz);
    CHECK(lhs2.t == doctest::Approx(zeta.t));
    CHECK((lhs2.x - zeta.x).norm() <= 1e-12 * (1 + zeta.x.norm()));
  }
}

TEST_CASE("taylor remainder rates") {
  Geometry g = langevin1();
  const AnalyticField u = default_gaussian();
  GroupPoint zeta0(0.3, Eigen::Vector2d(0.4, 0.2));
  std::vector<double> sigmas;
  for (int j = 0; j < 7; ++j) sigmas.push_back(0.2 * std::pow(1.35, j));

  NormOptions opts;
  opts.default_npts = 24;

  // polynomial reproduction: remainder at the quadrature floor
  const AnalyticField v = AnalyticField::monomial(2, 0, Eigen::Vector2i(1, 0), 1.0, cube(3, 6.0));
  const ExponentFit fv = taylor_remainder_rate(v, g, 1, 2.0, zeta0, sigmas, opts);
  for (double val : fv.value) CHECK(val <= 1e-8);

  const ExponentFit f1 = taylor_remainder_rate(u, g, 1, 2.0, zeta0, sigmas, opts);
  CHECK(f1.slope >= 1.85);
  CHECK(f1.slope <= 2.3);

  const ExponentFit f2 = taylor_remainder_rate(u, g, 2, 2.0, zeta0, sigmas, opts);
  CHECK(f2.slope >= 2.8);
  CHECK(f2.slope <= 3.4);

  CHECK_THROWS_AS(taylor_remainder_rate(u, g, 1, 2.0, zeta0, {0.5}, opts), ValidationError);
}

TEST_CASE("bump kernel mass and support") {
  for (const Geometry& g : {langevin1(), three_layer()}) {
    const BumpKernel bump = BumpKernel::standard(g);
    CHECK(std::abs(bump.mass() - 1.0) <= 1e-8);
    // support box sits inside the unit homogeneous ball
    const int nv = g.N() + 1;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
      Eigen::VectorXd eta(nv);
      for (int a = 0; a < nv; ++a) eta[a] = dist(rng) * bump.widths[a];
      if (bump.eval_flat(eta) > 0) {
        CHECK(g.hom_norm(GroupPoint::from_flat(eta)) <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("mollifier unit mass and linearity") {
  Geometry g = langevin1();
  const BumpKernel bump = BumpKernel::standard(g);

  // constant one on a big box: interior values reproduce the unit mass
  std::vector<SmoothTerm> terms(1);
  terms[0].pre = Poly::constant(3, 1.0);
  terms[0].expo = Poly(3);
  terms[0].phase = Poly(3);
  const AnalyticField one = AnalyticField::from_terms(2, terms, cube(3, 24.0));
  TaylorOracle t0(one, g, 0);
  for (const double eps : {0.3, 0.8}) {
    const double val = mollify_eval(t0, g, eps, bump, GroupPoint(0.1, Eigen::Vector2d(0.2, -0.3)), 64);
    CHECK(val == doctest::Approx(1.0).epsilon(1e-6));
  }

  // u = 0 mollifies to 0
  const AnalyticField zero = AnalyticField::zero(2, cube(3, 6.0));
  GridSpec out = GridSpec::cube(2, 1.0, 3);
  const GridFunction mz = mollify(zero, g, 1, 0.5, bump, out);
  CHECK(mz.max_abs() == 0.0);
  CHECK_THROWS_AS(mollify(zero, g, 1, 1.5, bump, out), ValidationError);
  CHECK_THROWS_AS(mollify(zero, g, 1, -0.1, bump, out), ValidationError);
}

TEST_CASE("mollifier approximation rate") {
  Geometry g = langevin1();
  const BumpKernel bump = BumpKernel::standard(g);
  const AnalyticField u = default_gaussian();
  std::vector<double> eps;
  for (int j = 0; j < 8; ++j) eps.push_back(0.05 * std::pow(0.8 / 0.05, j / 7.0));

  MollifyOptions opts;
  opts.inner_npts = 12;
  opts.norm.default_npts = 16;

  const ExponentFit f1 = mollify_rate(u, g, 1, 2.0, eps, bump, opts);
  CHECK(f1.slope >= 0.7);
  CHECK(f1.slope <= 1.3);

  const ExponentFit f2 = mollify_rate(u, g, 2, 2.0, eps, bump, opts);
  CHECK(f2.slope >= 1.7);
  CHECK(f2.slope <= 2.3);
}

TEST_CASE("mollifier inverse rate stays above the blow-up floor") {
  Geometry g = langevin1();
  const BumpKernel bump = BumpKernel::standard(g);
  const AnalyticField u = default_gaussian();
  std::vector<double> eps;
  for (int j = 0; j < 5; ++j) eps.push_back(0.1 * std::pow(0.8 / 0.1, j / 4.0));

  MollifyOptions opts;
  opts.inner_npts = 12;
  opts.norm.default_npts = 16;

  const ExponentFit fit = mollify_inverse_rate(u, g, 1, 2, 2.0, eps, bump, opts);
  CHECK(fit.slope >= -1.2);
  for (double v : fit.value) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(mollify_inverse_rate(u, g, 2, 2, 2.0, eps, bump, opts), ValidationError);
}

TEST_CASE("horizontal chain construction") {
  Geometry g = langevin1();
  const GroupPoint z(0.4, Eigen::Vector2d(1.0, -2.0));

  // xi = 0: empty path
  ChainPath p0 = connect_chain(g, z, Eigen::Vector2d(0.0, 0.0));
  CHECK(p0.segments.empty());

  // single horizontal displacement
  ChainPath p1 = connect_chain(g, z, Eigen::Vector2d(1.0, 0.0));
  CHECK(p1.segments.size() == 1);
  CHECK_FALSE(p1.segments[0].is_y);
  CHECK(p1.segments[0].delta == doctest::Approx(1.0));

  // drift-layer displacement through the commutator block
  ChainPath p2 = connect_chain(g, z, Eigen::Vector2d(0.0, 1.0));
  CHECK(p2.end.t == doctest::Approx(z.t));
  CHECK(p2.end.x[0] == doctest::Approx(z.x[0]));
  CHECK(p2.end.x[1] == doctest::Approx(z.x[1] + 1.0));
  int y_count = 0;
  for (const auto& s : p2.segments) {
    if (s.is_y) {
      ++y_count;
      // every drift segment uses the parameter +-delta^2
      CHECK(std::abs(s.delta) == doctest::Approx(p2.deltas[1] * p2.deltas[1]));
    }
  }
  CHECK(y_count == 2);

  // general displacement on the three-layer instance, endpoint exact
  Geometry g3 = three_layer();
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  for (int rep = 0; rep < 10; ++rep) {
    GroupPoint z3(dist(rng), Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return dist(rng); }));
    Eigen::VectorXd xi = Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return dist(rng); });
    const ChainPath path = connect_chain(g3, z3, xi);
    CHECK(path.end.t == doctest::Approx(z3.t));
    CHECK((path.end.x - (z3.x + xi)).norm() <= 1e-10 * (1 + xi.norm()));
    CHECK(path.chat < 50.0);
    // the step sizes obey delta_k <= chat * |xi|_B by construction
    for (double dk : path.deltas) CHECK(dk <= path.chat * g3.hom_norm_space(xi) * (1 + 1e-12));
  }

  // commutator moves only touch layers >= k: probe gamma^{(1)} from zero
  const GroupPoint zero(0.0, Eigen::VectorXd::Zero(4));
  const ChainPath probe = connect_chain(g3, zero, Eigen::Vector4d(0.0, 0.0, 1.0, 0.0));
  // the first layer-0 coordinates return to zero
  CHECK(std::abs(probe.end.x[0]) <= 1e-12);
  CHECK(std::abs(probe.end.x[1]) <= 1e-12);

  // Hormander failure is rejected
  Geometry flat = Geometry::from_matrix(Eigen::MatrixXd::Zero(2, 2), {1, 1});
  CHECK_THROWS_AS(connect_chain(flat, z, Eigen::Vector2d(0.0, 1.0)), StructureError);
}

TEST_CASE("mollifier endpoint eps = 1 is finite") {
  Geometry g = langevin1();
  const BumpKernel bump = BumpKernel::standard(g);
  const AnalyticField u = default_gaussian();
  MollifyOptions opts;
  opts.inner_npts = 6;
  opts.norm.default_npts = 12;
  const double err = mollify_error_lp(u, g, 1, 1.0, bump, 2.0, opts);
  CHECK(std::isfinite(err));
  CHECK(err > 0.0);
}
