#pragma once

#include "kfp/common.hpp"

#include <Eigen/Dense>

#include <vector>

namespace kfp {

/// Point of the translation group on R^{N+1}: a time coordinate and a space
/// vector of length N.
struct GroupPoint {
  double t = 0.0;
  Eigen::VectorXd x;

  GroupPoint() = default;
  GroupPoint(double t_, Eigen::VectorXd x_) : t(t_), x(std::move(x_)) {}

  Eigen::VectorXd flat() const {
    Eigen::VectorXd z(x.size() + 1);
    z[0] = t;
    z.tail(x.size()) = x;
    return z;
  }

  static GroupPoint from_flat(const Eigen::VectorXd& z) {
    return GroupPoint(z[0], z.tail(z.size() - 1));
  }
};

/// Block description of the drift matrix: layer dimensions d_0 >= ... >= d_r
/// and the sub-diagonal blocks, block j of shape d_{j+1} x d_j (0-based),
/// each of full row rank.
struct BlockStructure {
  std::vector<int> layer_dims;
  std::vector<Eigen::MatrixXd> blocks;

  /// Throws StructureError / ValidationError if the invariants fail.
  void validate() const;

  int total_dim() const;
};

/// Multi-index of an intrinsic derivative Y^k d^beta.
struct MultiIndex {
  Eigen::VectorXi beta;  // length N
  int k = 0;

  static MultiIndex pure_y(int k, int n_space) {
    MultiIndex m;
    m.beta = Eigen::VectorXi::Zero(n_space);
    m.k = k;
    return m;
  }
};

/// The geometric structure induced by a valid drift matrix: translations,
/// dilations, homogeneous norm and dimension, layer decomposition and the
/// commutator fields B^n v.
class Geometry {
public:
  explicit Geometry(const BlockStructure& bs);

  /// Builds directly from an N x N matrix with a declared layer split.
  /// Skips the full-rank validation of the blocks; intended for diagnostic
  /// instances that violate the Hormander condition on purpose.
  static Geometry from_matrix(const Eigen::MatrixXd& B, const std::vector<int>& layer_dims);

  const Eigen::MatrixXd& B() const { return B_; }
  const BlockStructure& blocks() const { return bs_; }
  int N() const { return N_; }
  int r() const { return r_; }
  int hom_dim() const { return hom_dim_; }
  int nilpotency_degree() const { return r_ + 1; }
  int diffusion_dim() const { return bs_.layer_dims[0]; }  // d_0

  int layer_dim(int i) const { return bs_.layer_dims.at(static_cast<std::size_t>(i)); }
  /// Cumulative offset \bar d_{i-1}, i.e. the first coordinate of layer i (0-based).
  int layer_offset(int i) const { return layer_offsets_.at(static_cast<std::size_t>(i)); }
  int layer_of(int coord) const;
  /// Intrinsic weight of a space coordinate: 2j+1 for layer j.
  int weight_of(int coord) const { return 2 * layer_of(coord) + 1; }

  /// B^n, exact for integer-valued blocks (finite products, zero for n > r).
  const Eigen::MatrixXd& matrix_power(int n) const;
  /// e^{sB} as the finite sum I + sum_{j<=r} s^j B^j / j!.
  Eigen::MatrixXd matrix_exp(double s) const;

  /// x^{[i]}: the layer-i part of x, embedded in R^N.
  Eigen::VectorXd layer_part(const Eigen::VectorXd& x, int i) const;

  // --- group operations -----------------------------------------------------

  /// z o w = (t+s, e^{sB} x + xi) for z=(t,x), w=(s,xi).
  GroupPoint compose(const GroupPoint& z, const GroupPoint& w) const;
  /// z^{-1} = (-t, -e^{-tB} x).
  GroupPoint invert(const GroupPoint& z) const;
  /// D_lambda z = (lambda^2 t, D-hat_lambda x); requires lambda > 0.
  GroupPoint dilate(double lambda, const GroupPoint& z) const;
  /// Space dilation weights lambda^{2i+1} per layer, as a diagonal vector.
  Eigen::VectorXd dilation_weights(double lambda) const;

  /// Homogeneous norm |t|^{1/2} + sum_i |x^{[i]}|^{1/(2i+1)}.
  double hom_norm(const GroupPoint& z) const;
  double hom_norm_space(const Eigen::VectorXd& x) const;

  /// Integral curves: e^{hY} z = (t+h, e^{hB} x), e^{h d_i} z = (t, x + h e_i).
  GroupPoint flow_y(double h, const GroupPoint& z) const;
  GroupPoint flow_x(int i, double h, const GroupPoint& z) const;

  // --- Hormander / commutator structure -------------------------------------

  struct RankCertificate {
    bool hormander = false;
    int rank = 0;
    double min_eig_c1 = 0.0;  // only set when requested
    bool has_c1 = false;
  };

  /// Kalman rank test on [A0 | B A0 | ... | B^r A0]; optionally cross-checks
  /// against the minimal eigenvalue of the covariance at t = 1.
  RankCertificate check_hormander(bool with_c1_check = false) const;

  /// Coefficient vector of the iterated commutator field X^{(n)}_v = <B^n v, grad_x>.
  /// Requires v supported on layer 0; returns zero for n > r.
  Eigen::VectorXd commutator_field(const Eigen::VectorXd& v, int n) const;

  /// Product B_n ... B_1 of the layer blocks, i.e. the action of B^n from
  /// layer 0 to layer n written as a d_n x d_0 matrix.
  Eigen::MatrixXd layer_block_product(int n) const;

  /// Minimal-norm w in layer 0 with B^n w = target; target must be supported
  /// on layer n. Certified by a residual check (<= tol).
  Eigen::VectorXd solve_layer_preimage(int n, const Eigen::VectorXd& target,
                                       double tol = 1e-10) const;

  /// Intrinsic length <beta>_B of a spatial multi-index.
  int b_length(const Eigen::VectorXi& beta) const;
  int intrinsic_order(const MultiIndex& m) const { return 2 * m.k + b_length(m.beta); }

private:
  Geometry() = default;
  void finish_setup();

  BlockStructure bs_;
  Eigen::MatrixXd B_;
  int N_ = 0;
  int r_ = 0;
  int hom_dim_ = 0;
  std::vector<int> layer_offsets_;           // \bar d_{-1} = 0, \bar d_0, ..., \bar d_r
  std::vector<Eigen::MatrixXd> powers_;      // B^0 ... B^{r+1}
  std::vector<int> coord_layer_;
  bool validated_blocks_ = false;
};

}  // namespace kfp
