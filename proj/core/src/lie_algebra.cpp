#include "sktflow/lie_algebra.hpp"

#include <cmath>
#include <stdexcept>

namespace sktflow {

LieAlgebra::LieAlgebra(int dim, const std::vector<BracketTerm>& terms) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("LieAlgebra: dim must be even and >= 2");
  dim_ = dim;
  ad_.assign(static_cast<std::size_t>(dim), Eigen::MatrixXd::Zero(dim, dim));
  for (const auto& t : terms) {
    if (t.i < 0 || t.i >= dim || t.j < 0 || t.j >= dim || t.k < 0 || t.k >= dim)
      throw std::invalid_argument("LieAlgebra: bracket index out of range");
    if (!std::isfinite(t.value)) throw std::invalid_argument("LieAlgebra: non-finite constant");
    ad_[static_cast<std::size_t>(t.i)](t.k, t.j) += t.value;
    ad_[static_cast<std::size_t>(t.j)](t.k, t.i) -= t.value;
  }
  for (const auto& m : ad_) max_abs_c_ = std::max(max_abs_c_, m.cwiseAbs().maxCoeff());
}

LieAlgebra LieAlgebra::from_table(int dim, const Eigen::VectorXd& table) {
  if (table.size() != static_cast<Eigen::Index>(dim) * dim * dim)
    throw std::invalid_argument("LieAlgebra::from_table: wrong table size");
  LieAlgebra a;
  a.dim_ = dim;
  a.ad_.assign(static_cast<std::size_t>(dim), Eigen::MatrixXd::Zero(dim, dim));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k)
        a.ad_[static_cast<std::size_t>(i)](k, j) = table((i * dim + j) * dim + k);
  for (const auto& m : a.ad_) a.max_abs_c_ = std::max(a.max_abs_c_, m.cwiseAbs().maxCoeff());
  return a;
}

LieAlgebra LieAlgebra::abelian(int dim) { return LieAlgebra(dim, {}); }

Eigen::VectorXd LieAlgebra::bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  if (x.size() != dim_ || y.size() != dim_)
    throw std::invalid_argument("bracket: dimension mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    if (x(i) != 0.0) out.noalias() += x(i) * (ad_[static_cast<std::size_t>(i)] * y);
  }
  return out;
}

Eigen::VectorXcd LieAlgebra::bracket(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) const {
  if (x.size() != dim_ || y.size() != dim_)
    throw std::invalid_argument("bracket: dimension mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    if (x(i) != 0.0) out.noalias() += x(i) * (ad_[static_cast<std::size_t>(i)] * y);
  }
  return out;
}

Eigen::VectorXd LieAlgebra::table() const {
  Eigen::VectorXd t(static_cast<Eigen::Index>(dim_) * dim_ * dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k)
        t((i * dim_ + j) * dim_ + k) = ad_[static_cast<std::size_t>(i)](k, j);
  return t;
}

StructureReport check_structure(const LieAlgebra& a, double tol) {
  const int d = a.dim();
  StructureReport r;
  const double scale = std::max(a.max_abs_constant(), 1e-300);

  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        r.antisymmetry_residual = std::max(r.antisymmetry_residual,
                                           std::abs(a.c(i, j, k) + a.c(j, i, k)));
  r.antisymmetry_ok = r.antisymmetry_residual <= tol * scale;

  // Jacobi: [[e_i,e_j],e_l] + [[e_j,e_l],e_i] + [[e_l,e_i],e_j]
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      for (int l = j + 1; l < d; ++l) {
        const Eigen::VectorXd cyc = a.bracket(Eigen::VectorXd(a.ad(i).col(j)), Eigen::VectorXd(id.col(l))) +
                                    a.bracket(Eigen::VectorXd(a.ad(j).col(l)), Eigen::VectorXd(id.col(i))) +
                                    a.bracket(Eigen::VectorXd(a.ad(l).col(i)), Eigen::VectorXd(id.col(j)));
        r.jacobi_residual = std::max(r.jacobi_residual, cyc.cwiseAbs().maxCoeff());
      }
  r.jacobi_ok = r.jacobi_residual <= tol * scale * std::max(scale, 1.0);

  // two-step: [[e_i,e_j], e_l] = 0 for all triples
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const Eigen::VectorXd bij = a.ad(i).col(j);
      for (int l = 0; l < d; ++l) {
        const Eigen::VectorXd dbl = a.bracket(bij, Eigen::VectorXd(id.col(l)));
        r.two_step_residual = std::max(r.two_step_residual, dbl.cwiseAbs().maxCoeff());
      }
    }
  r.two_step = r.two_step_residual <= tol * scale;

  // center: null space of the stacked maps X -> [X, e_j]
  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(d) * d, d);
  for (int j = 0; j < d; ++j) {
    // row block j: B(k,i) = c[i][j][k]
    Eigen::MatrixXd b(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) b(k, i) = a.c(i, j, k);
    stacked.middleRows(static_cast<Eigen::Index>(j) * d, d) = b;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  if (sv.size() > 0 && sv(0) > 0) {
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > tol * sv(0)) ++rank;
  }
  r.center_dim = d - rank;
  r.center_basis = svd.matrixV().rightCols(r.center_dim);
  return r;
}

}  // namespace sktflow
