#include "kfp/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace kfp {

namespace {

bool is_integer_matrix(const Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != std::floor(m(i, j))) return false;
  return true;
}

}  // namespace

void BlockStructure::validate() const {
  if (layer_dims.empty()) throw ValidationError("BlockStructure: empty layer_dims");
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    if (layer_dims[i] < 1) throw ValidationError("BlockStructure: layer dimension must be >= 1");
    if (i > 0 && layer_dims[i] > layer_dims[i - 1]) {
      std::ostringstream os;
      os << "BlockStructure: layer dimensions must be non-increasing, got d_" << i - 1 << " = "
         << layer_dims[i - 1] << " < d_" << i << " = " << layer_dims[i];
      throw ValidationError(os.str());
    }
  }
  if (blocks.size() + 1 != layer_dims.size())
    throw ValidationError("BlockStructure: expected one block per layer transition");
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const int rows = layer_dims[j + 1];
    const int cols = layer_dims[j];
    if (blocks[j].rows() != rows || blocks[j].cols() != cols) {
      std::ostringstream os;
      os << "BlockStructure: block " << j + 1 << " must be " << rows << "x" << cols << ", got "
         << blocks[j].rows() << "x" << blocks[j].cols();
      throw StructureError(os.str());
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(blocks[j]);
    if (qr.rank() != rows) {
      std::ostringstream os;
      os << "BlockStructure: block " << j + 1 << " has rank " << qr.rank() << ", expected full row rank "
         << rows;
      throw StructureError(os.str());
    }
  }
}

int BlockStructure::total_dim() const {
  int n = 0;
  for (int d : layer_dims) n += d;
  return n;
}

Geometry::Geometry(const BlockStructure& bs) {
  bs.validate();
  bs_ = bs;
  N_ = bs.total_dim();
  r_ = static_cast<int>(bs.layer_dims.size()) - 1;
  B_ = Eigen::MatrixXd::Zero(N_, N_);
  int row = bs.layer_dims[0];
  int col = 0;
  for (int j = 0; j < r_; ++j) {
    B_.block(row, col, bs.layer_dims[j + 1], bs.layer_dims[j]) = bs.blocks[j];
    col = row;
    row += bs.layer_dims[j + 1];
  }
  validated_blocks_ = true;
  finish_setup();
}

Geometry Geometry::from_matrix(const Eigen::MatrixXd& B, const std::vector<int>& layer_dims) {
  Geometry g;
  g.bs_.layer_dims = layer_dims;
  int n = 0;
  for (int d : layer_dims) {
    if (d < 1) throw ValidationError("Geometry::from_matrix: layer dimension must be >= 1");
    n += d;
  }
  if (B.rows() != n || B.cols() != n)
    throw ValidationError("Geometry::from_matrix: matrix size does not match layer_dims");
  g.B_ = B;
  g.N_ = n;
  g.r_ = static_cast<int>(layer_dims.size()) - 1;
  g.validated_blocks_ = false;
  g.finish_setup();
  return g;
}

void Geometry::finish_setup() {
  layer_offsets_.assign(static_cast<std::size_t>(r_ + 2), 0);
  for (int i = 0; i <= r_; ++i) layer_offsets_[static_cast<std::size_t>(i + 1)] =
      layer_offsets_[static_cast<std::size_t>(i)] + bs_.layer_dims[static_cast<std::size_t>(i)];

  coord_layer_.assign(static_cast<std::size_t>(N_), 0);
  for (int i = 0; i <= r_; ++i)
    for (int c = layer_offsets_[static_cast<std::size_t>(i)]; c < layer_offsets_[static_cast<std::size_t>(i + 1)]; ++c)
      coord_layer_[static_cast<std::size_t>(c)] = i;

  hom_dim_ = 2;
  for (int k = 0; k <= r_; ++k) hom_dim_ += (2 * k + 1) * bs_.layer_dims[static_cast<std::size_t>(k)];

  powers_.clear();
  powers_.push_back(Eigen::MatrixXd::Identity(N_, N_));
  for (int n = 1; n <= r_ + 1; ++n) powers_.push_back(B_ * powers_.back());

  // Nilpotency of degree r+1. Integer-valued blocks make the products exact
  // in double arithmetic, so the zero test is exact in that case.
  const Eigen::MatrixXd& top = powers_.back();
  const double scale = B_.cwiseAbs().maxCoeff();
  const double tol = is_integer_matrix(B_) ? 0.0 : 1e-12 * std::pow(std::max(scale, 1.0), r_ + 1);
  if (top.cwiseAbs().maxCoeff() > tol)
    throw StructureError("Geometry: B^{r+1} != 0; the block structure is not nilpotent of degree r+1");
}

int Geometry::layer_of(int coord) const {
  if (coord < 0 || coord >= N_) throw ValidationError("layer_of: coordinate out of range");
  return coord_layer_[static_cast<std::size_t>(coord)];
}

const Eigen::MatrixXd& Geometry::matrix_power(int n) const {
  if (n < 0) throw ValidationError("matrix_power: negative exponent");
  if (n >= static_cast<int>(powers_.size())) return powers_.back();  // zero matrix
  return powers_[static_cast<std::size_t>(n)];
}

Eigen::MatrixXd Geometry::matrix_exp(double s) const {
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(N_, N_);
  double c = 1.0;
  for (int j = 1; j <= r_; ++j) {
    c *= s / j;
    e += c * powers_[static_cast<std::size_t>(j)];
  }
  return e;
}

Eigen::VectorXd Geometry::layer_part(const Eigen::VectorXd& x, int i) const {
  if (x.size() != N_) throw ValidationError("layer_part: dimension mismatch");
  Eigen::VectorXd part = Eigen::VectorXd::Zero(N_);
  const int off = layer_offset(i);
  part.segment(off, layer_dim(i)) = x.segment(off, layer_dim(i));
  return part;
}

GroupPoint Geometry::compose(const GroupPoint& z, const GroupPoint& w) const {
  if (z.x.size() != N_ || w.x.size() != N_)
    throw ValidationError("compose: dimension mismatch with geometry");
  return GroupPoint(z.t + w.t, matrix_exp(w.t) * z.x + w.x);
}

GroupPoint Geometry::invert(const GroupPoint& z) const {
  if (z.x.size() != N_) throw ValidationError("invert: dimension mismatch with geometry");
  return GroupPoint(-z.t, -(matrix_exp(-z.t) * z.x));
}

Eigen::VectorXd Geometry::dilation_weights(double lambda) const {
  Eigen::VectorXd w(N_);
  for (int c = 0; c < N_; ++c) w[c] = std::pow(lambda, 2 * layer_of(c) + 1);
  return w;
}

GroupPoint Geometry::dilate(double lambda, const GroupPoint& z) const {
  if (lambda <= 0.0) throw ValidationError("dilate: lambda must be positive");
  if (z.x.size() != N_) throw ValidationError("dilate: dimension mismatch with geometry");
  return GroupPoint(lambda * lambda * z.t, dilation_weights(lambda).cwiseProduct(z.x));
}

double Geometry::hom_norm_space(const Eigen::VectorXd& x) const {
  if (x.size() != N_) throw ValidationError("hom_norm_space: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i <= r_; ++i) {
    const double block = x.segment(layer_offset(i), layer_dim(i)).norm();
    s += std::pow(block, 1.0 / (2 * i + 1));
  }
  return s;
}

double Geometry::hom_norm(const GroupPoint& z) const {
  return std::sqrt(std::abs(z.t)) + hom_norm_space(z.x);
}

GroupPoint Geometry::flow_y(double h, const GroupPoint& z) const {
  return GroupPoint(z.t + h, matrix_exp(h) * z.x);
}

GroupPoint Geometry::flow_x(int i, double h, const GroupPoint& z) const {
  if (i < 0 || i >= N_) throw ValidationError("flow_x: coordinate out of range");
  GroupPoint w = z;
  w.x[i] += h;
  return w;
}

Geometry::RankCertificate Geometry::check_hormander(bool with_c1_check) const {
  const int d0 = bs_.layer_dims[0];
  Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(N_, d0);
  a0.topLeftCorner(d0, d0).setIdentity();

  Eigen::MatrixXd kalman(N_, d0 * (r_ + 1));
  for (int n = 0; n <= r_; ++n) kalman.middleCols(n * d0, d0) = matrix_power(n) * a0;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(kalman);
  RankCertificate cert;
  cert.rank = static_cast<int>(qr.rank());
  cert.hormander = (cert.rank == N_);

  if (with_c1_check) {
    // C_1 = int_0^1 e^{sB} A0 A0^T e^{sB^T} ds, integrated exactly term by term.
    Eigen::MatrixXd c1 = Eigen::MatrixXd::Zero(N_, N_);
    const Eigen::MatrixXd a0a0t = a0 * a0.transpose();
    double jfact = 1.0;
    for (int j = 0; j <= r_; ++j) {
      if (j > 0) jfact *= j;
      double kfact = 1.0;
      for (int k = 0; k <= r_; ++k) {
        if (k > 0) kfact *= k;
        c1 += matrix_power(j) * a0a0t * matrix_power(k).transpose() /
              (jfact * kfact * (j + k + 1));
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c1 + c1.transpose()));
    cert.min_eig_c1 = es.eigenvalues().minCoeff();
    cert.has_c1 = true;
  }
  return cert;
}

Eigen::VectorXd Geometry::commutator_field(const Eigen::VectorXd& v, int n) const {
  if (v.size() != N_) throw ValidationError("commutator_field: dimension mismatch");
  if (n < 0) throw ValidationError("commutator_field: negative order");
  const int d0 = bs_.layer_dims[0];
  if (v.tail(N_ - d0).cwiseAbs().maxCoeff() != 0.0 && N_ > d0)
    throw ValidationError("commutator_field: v must be supported on layer 0");
  return matrix_power(n) * v;
}

Eigen::MatrixXd Geometry::layer_block_product(int n) const {
  if (n < 0 || n > r_) throw ValidationError("layer_block_product: order out of range");
  const int d0 = bs_.layer_dims[0];
  // Extract from B^n: rows of layer n, columns of layer 0.
  return matrix_power(n).block(layer_offset(n), 0, layer_dim(n), d0);
}

Eigen::VectorXd Geometry::solve_layer_preimage(int n, const Eigen::VectorXd& target,
                                               double tol) const {
  if (target.size() != N_) throw ValidationError("solve_layer_preimage: dimension mismatch");
  if (n < 0 || n > r_) throw ValidationError("solve_layer_preimage: layer out of range");
  for (int c = 0; c < N_; ++c)
    if (target[c] != 0.0 && layer_of(c) != n)
      throw ValidationError("solve_layer_preimage: target must be supported on layer n");
  if (!check_hormander().hormander)
    throw StructureError("solve_layer_preimage: Hormander condition fails, no solution");

  const Eigen::MatrixXd m = layer_block_product(n);
  const Eigen::VectorXd rhs = target.segment(layer_offset(n), layer_dim(n));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd w0 = svd.solve(rhs);  // minimal-norm solution

  Eigen::VectorXd w = Eigen::VectorXd::Zero(N_);
  w.head(bs_.layer_dims[0]) = w0;
  const double resid = (matrix_power(n) * w - target).norm();
  if (resid > tol * std::max(1.0, target.norm())) {
    std::ostringstream os;
    os << "solve_layer_preimage: residual " << resid << " exceeds tolerance";
    throw StructureError(os.str());
  }
  return w;
}

int Geometry::b_length(const Eigen::VectorXi& beta) const {
  if (beta.size() != N_) throw ValidationError("b_length: dimension mismatch");
  int len = 0;
  for (int c = 0; c < N_; ++c) {
    if (beta[c] < 0) throw ValidationError("b_length: negative entry");
    len += (2 * layer_of(c) + 1) * beta[c];
  }
  return len;
}

}  // namespace kfp
