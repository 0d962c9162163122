#include <doctest.h>

#include "kfp/geometry.hpp"

#include <random>

using namespace kfp;

namespace {

BlockStructure langevin(int d) {
  BlockStructure bs;
  bs.layer_dims = {d, d};
  bs.blocks = {Eigen::MatrixXd::Identity(d, d)};
  return bs;
}

BlockStructure three_layer() {
  // layer dims (2, 1, 1)
  BlockStructure bs;
  bs.layer_dims = {2, 1, 1};
  Eigen::MatrixXd b1(1, 2);
  b1 << 1.0, 0.0;
  Eigen::MatrixXd b2(1, 1);
  b2 << 1.0;
  bs.blocks = {b1, b2};
  return bs;
}

GroupPoint point(double t, std::initializer_list<double> xs) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double v : xs) x[i++] = v;
  return GroupPoint(t, x);
}

}  // namespace

TEST_CASE("geometry of the kinetic model, d = 1") {
  Geometry g(langevin(1));
  CHECK(g.N() == 2);
  CHECK(g.r() == 1);
  CHECK(g.hom_dim() == 6);  // 4d + 2
  CHECK(g.nilpotency_degree() == 2);
  CHECK(g.matrix_power(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single layer and a wide first layer") {
  BlockStructure bs;
  bs.layer_dims = {3};
  Geometry g(bs);
  CHECK(g.N() == 3);
  CHECK(g.r() == 0);
  CHECK(g.hom_dim() == 5);  // 2 + 3
  CHECK(g.B().cwiseAbs().maxCoeff() == 0.0);

  BlockStructure bs2;
  bs2.layer_dims = {2, 1};
  Eigen::MatrixXd b1(1, 2);
  b1 << 1.0, 0.0;
  bs2.blocks = {b1};
  Geometry g2(bs2);
  CHECK(g2.N() == 3);
  CHECK(g2.hom_dim() == 7);  // 2 + 2 + 3
}

TEST_CASE("three layer example") {
  Geometry g(three_layer());
  CHECK(g.N() == 4);
  CHECK(g.r() == 2);
  CHECK(g.hom_dim() == 12);  // 2 + 2 + 3 + 5
  CHECK(g.matrix_power(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.matrix_power(2).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("block validation errors") {
  BlockStructure bad;
  bad.layer_dims = {1, 1};
  bad.blocks = {Eigen::MatrixXd::Zero(1, 1)};
  CHECK_THROWS_AS(Geometry{bad}, StructureError);  // rank-deficient block

  BlockStructure grow;
  grow.layer_dims = {1, 2};
  grow.blocks = {Eigen::MatrixXd::Ones(2, 1)};
  CHECK_THROWS_AS(Geometry{grow}, ValidationError);  // non-monotone dims
}

TEST_CASE("Kalman rank certificate") {
  Geometry g1(langevin(1));
  auto c1 = g1.check_hormander(true);
  CHECK(c1.hormander);
  CHECK(c1.rank == 2);
  CHECK(c1.min_eig_c1 > 0.0);

  Geometry g2(langevin(2));
  auto c2 = g2.check_hormander();
  CHECK(c2.hormander);
  CHECK(c2.rank == 4);

  // Diagnostic instance: no mixing, the Lie algebra cannot span.
  Geometry flat = Geometry::from_matrix(Eigen::MatrixXd::Zero(2, 2), {1, 1});
  auto cf = flat.check_hormander(true);
  CHECK_FALSE(cf.hormander);
  CHECK(cf.rank == 1);
  CHECK(cf.min_eig_c1 <= 1e-14);
}

TEST_CASE("group law on the kinetic model") {
  Geometry g(langevin(1));
  const GroupPoint z = point(1.0, {2.0, -1.0});

  // z o (0,0) = z
  const GroupPoint id = point(0.0, {0.0, 0.0});
  GroupPoint w = g.compose(z, id);
  CHECK(w.t == doctest::Approx(z.t));
  CHECK((w.x - z.x).norm() == doctest::Approx(0.0));

  // (t,v,p) o (s,nu,pi) = (t+s, v+nu, p+sv+pi)
  const GroupPoint a = point(1.5, {0.5, 2.0});
  const GroupPoint b = point(-0.5, {1.0, 3.0});
  w = g.compose(a, b);
  CHECK(w.t == doctest::Approx(1.0));
  CHECK(w.x[0] == doctest::Approx(1.5));
  CHECK(w.x[1] == doctest::Approx(2.0 + (-0.5) * 0.5 + 3.0));

  // invert((1,(1,0))) = (-1,(-1,1))
  const GroupPoint inv = g.invert(point(1.0, {1.0, 0.0}));
  CHECK(inv.t == doctest::Approx(-1.0));
  CHECK(inv.x[0] == doctest::Approx(-1.0));
  CHECK(inv.x[1] == doctest::Approx(1.0));
}

TEST_CASE("group axioms at random points") {
  for (const auto& bs : {langevin(1), langevin(2), three_layer()}) {
    Geometry g(bs);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    auto rand_point = [&] {
      GroupPoint z;
      z.t = dist(rng);
      z.x = Eigen::VectorXd::NullaryExpr(g.N(), [&](Eigen::Index) { return dist(rng); });
      return z;
    };
    for (int rep = 0; rep < 50; ++rep) {
      const GroupPoint a = rand_point(), b = rand_point(), c = rand_point();
      const GroupPoint ab_c = g.compose(g.compose(a, b), c);
      const GroupPoint a_bc = g.compose(a, g.compose(b, c));
      const double scale = 1.0 + ab_c.x.norm();
      CHECK(std::abs(ab_c.t - a_bc.t) <= 1e-12 * scale);
      CHECK((ab_c.x - a_bc.x).norm() <= 1e-12 * scale);

      const GroupPoint e = g.compose(a, g.invert(a));
      CHECK(std::abs(e.t) <= 1e-12 * scale);
      CHECK(e.x.norm() <= 1e-12 * (1.0 + a.x.norm()));
    }
  }
}

TEST_CASE("dilations") {
  Geometry g(langevin(1));
  const GroupPoint z = point(1.0, {1.0, 1.0});

  GroupPoint w = g.dilate(1.0, z);
  CHECK(w.t == z.t);
  CHECK((w.x - z.x).norm() == 0.0);

  // D_lambda(t,v,p) = (lambda^2 t, lambda v, lambda^3 p)
  w = g.dilate(2.0, z);
  CHECK(w.t == doctest::Approx(4.0));
  CHECK(w.x[0] == doctest::Approx(2.0));
  CHECK(w.x[1] == doctest::Approx(8.0));

  // D_lambda D_mu = D_{lambda mu}
  const GroupPoint lm = g.dilate(0.5, g.dilate(3.0, z));
  const GroupPoint direct = g.dilate(1.5, z);
  CHECK(lm.t == doctest::Approx(direct.t));
  CHECK((lm.x - direct.x).norm() <= 1e-14);

  CHECK_THROWS_AS(g.dilate(0.0, z), ValidationError);
  CHECK_THROWS_AS(g.dilate(-1.0, z), ValidationError);
}

TEST_CASE("homogeneous norm") {
  Geometry g(langevin(1));
  CHECK(g.hom_norm(point(0.0, {0.0, 0.0})) == 0.0);
  CHECK(g.hom_norm(point(4.0, {2.0, 8.0})) == doctest::Approx(6.0));

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int rep = 0; rep < 30; ++rep) {
    GroupPoint z;
    z.t = dist(rng);
    z.x = Eigen::VectorXd::NullaryExpr(2, [&](Eigen::Index) { return dist(rng); });
    const double nz = g.hom_norm(z);
    if (nz == 0.0) continue;
    for (const double lambda : {0.5, 2.0, 3.0}) {
      CHECK(g.hom_norm(g.dilate(lambda, z)) / nz == doctest::Approx(lambda).epsilon(1e-13));
    }
  }
}

TEST_CASE("matrix exponential") {
  Geometry g(langevin(1));
  const Eigen::MatrixXd e0 = g.matrix_exp(0.0);
  CHECK((e0 - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  // B^2 = 0 forces e^{sB} = I + sB
  const double s = 0.7;
  const Eigen::MatrixXd es = g.matrix_exp(s);
  CHECK(es(0, 0) == 1.0);
  CHECK(es(0, 1) == 0.0);
  CHECK(es(1, 0) == doctest::Approx(s));
  CHECK(es(1, 1) == 1.0);

  BlockStructure bs2;
  bs2.layer_dims = {2, 1};
  Eigen::MatrixXd b1(1, 2);
  b1 << 1.0, 0.0;
  bs2.blocks = {b1};
  Geometry g2(bs2);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-4.0, 4.0);
  for (int rep = 0; rep < 10; ++rep) {
    const double sv = dist(rng);
    CHECK(std::abs(g2.matrix_exp(sv).determinant() - 1.0) <= 1e-12);
  }
}

TEST_CASE("commutator fields") {
  Geometry g(langevin(1));
  Eigen::VectorXd v(2);
  v << 1.0, 0.0;
  CHECK((g.commutator_field(v, 0) - v).norm() == 0.0);
  const Eigen::VectorXd bv = g.commutator_field(v, 1);
  CHECK(bv[0] == 0.0);
  CHECK(bv[1] == 1.0);
  CHECK(g.commutator_field(v, 2).norm() == 0.0);  // n > r

  Eigen::VectorXd bad(2);
  bad << 0.0, 1.0;
  CHECK_THROWS_AS(g.commutator_field(bad, 1), ValidationError);
}

TEST_CASE("layer preimages") {
  Geometry g(langevin(1));
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK(g.solve_layer_preimage(1, zero).norm() == 0.0);

  Eigen::VectorXd e2(2);
  e2 << 0.0, 1.0;
  const Eigen::VectorXd w = g.solve_layer_preimage(1, e2);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(0.0));

  BlockStructure bs2;
  bs2.layer_dims = {2, 1};
  Eigen::MatrixXd b1(1, 2);
  b1 << 1.0, 0.0;
  bs2.blocks = {b1};
  Geometry g2(bs2);
  Eigen::VectorXd e3 = Eigen::VectorXd::Zero(3);
  e3[2] = 1.0;
  const Eigen::VectorXd w2 = g2.solve_layer_preimage(1, e3);
  CHECK((g2.matrix_power(1) * w2 - e3).norm() <= 1e-10);

  // Hormander failure: no solution
  Geometry flat = Geometry::from_matrix(Eigen::MatrixXd::Zero(2, 2), {1, 1});
  CHECK_THROWS_AS(flat.solve_layer_preimage(1, e2), StructureError);
}

TEST_CASE("flow invariance and dilation covariance") {
  Geometry g(three_layer());
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dist(-1.5, 1.5);
  auto rand_point = [&] {
    GroupPoint z;
    z.t = dist(rng);
    z.x = Eigen::VectorXd::NullaryExpr(g.N(), [&](Eigen::Index) { return dist(rng); });
    return z;
  };
  for (int rep = 0; rep < 25; ++rep) {
    const GroupPoint z = rand_point(), zeta = rand_point();
    const double delta = dist(rng);
    const GroupPoint zeta_inv = g.invert(zeta);

    // left invariance of the drift flow
    const GroupPoint lhs = g.compose(zeta_inv, g.flow_y(delta, z));
    const GroupPoint rhs = g.flow_y(delta, g.compose(zeta_inv, z));
    CHECK(std::abs(lhs.t - rhs.t) <= 1e-12 * (1 + std::abs(rhs.t)));
    CHECK((lhs.x - rhs.x).norm() <= 1e-11 * (1 + rhs.x.norm()));

    // left invariance of the coordinate flows
    const GroupPoint lx = g.compose(zeta_inv, g.flow_x(0, delta, z));
    const GroupPoint rx = g.flow_x(0, delta, g.compose(zeta_inv, z));
    CHECK((lx.x - rx.x).norm() <= 1e-11 * (1 + rx.x.norm()));

    // dilation covariance: D_l e^{delta Y} z = e^{delta l^2 Y} D_l z
    for (const double l : {0.5, 2.0}) {
      const GroupPoint a = g.dilate(l, g.flow_y(delta, z));
      const GroupPoint b = g.flow_y(delta * l * l, g.dilate(l, z));
      CHECK(std::abs(a.t - b.t) <= 1e-12 * (1 + std::abs(b.t)));
      CHECK((a.x - b.x).norm() <= 1e-11 * (1 + b.x.norm()));
      // coordinate direction in layer j scales with l^{2j+1}
      for (int c = 0; c < g.N(); ++c) {
        const GroupPoint ax = g.dilate(l, g.flow_x(c, delta, z));
        const GroupPoint bx2 = g.flow_x(c, delta * std::pow(l, g.weight_of(c)), g.dilate(l, z));
        CHECK((ax.x - bx2.x).norm() <= 1e-11 * (1 + bx2.x.norm()));
      }
    }
  }
}

TEST_CASE("quasi-triangle inequality constant is stable") {
  Geometry g(langevin(1));
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  auto rand_point = [&] {
    GroupPoint z;
    z.t = dist(rng);
    z.x = Eigen::VectorXd::NullaryExpr(g.N(), [&](Eigen::Index) { return dist(rng); });
    return z;
  };
  auto estimate = [&](int samples) {
    double m = 0.0;
    for (int i = 0; i < samples; ++i) {
      const GroupPoint z = rand_point(), zeta = rand_point();
      const double denom = g.hom_norm(zeta) + g.hom_norm(z);
      if (denom == 0.0) continue;
      m = std::max(m, g.hom_norm(g.compose(g.invert(zeta), z)) / denom);
    }
    return m;
  };
  const double m1 = estimate(200);
  const double m2 = estimate(2000);
  CHECK(m1 > 0.0);
  CHECK(m2 >= m1);   // monotone under sample refinement (same stream continues)
  CHECK(m2 < 10.0);  // bounded
}
