#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sktflow {

/// One bracket term [e_i, e_j] += value * e_k (0-based); antisymmetric
/// completion is applied on construction.
struct BracketTerm {
  int i, j, k;
  double value;
};

/// Real Lie algebra given by structure constants c[i][j][k],
/// [e_i, e_j] = sum_k c[i][j][k] e_k. Immutable after construction.
class LieAlgebra {
public:
  LieAlgebra(int dim, const std::vector<BracketTerm>& terms);

  /// Raw table, no antisymmetric completion: c(i,j,k) = table[(i*dim+j)*dim+k].
  static LieAlgebra from_table(int dim, const Eigen::VectorXd& table);

  static LieAlgebra abelian(int dim);

  int dim() const { return dim_; }

  double c(int i, int j, int k) const { return ad_[i](k, j); }

  /// ad_{e_i} as a matrix: ad(i).col(j) = [e_i, e_j]
  const Eigen::MatrixXd& ad(int i) const { return ad_[static_cast<std::size_t>(i)]; }

  Eigen::VectorXd bracket(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  Eigen::VectorXcd bracket(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) const;

  double max_abs_constant() const { return max_abs_c_; }

  /// flattened c-table, row-major (i*dim + j)*dim + k
  Eigen::VectorXd table() const;

private:
  LieAlgebra() = default;
  int dim_ = 0;
  std::vector<Eigen::MatrixXd> ad_;
  double max_abs_c_ = 0.0;
};

struct StructureReport {
  bool antisymmetry_ok = false;
  bool jacobi_ok = false;
  bool two_step = false;
  int center_dim = 0;
  double antisymmetry_residual = 0.0;
  double jacobi_residual = 0.0;
  double two_step_residual = 0.0;
  Eigen::MatrixXd center_basis;  // orthonormal columns spanning the center
};

/// Structural predicates with relative tolerance tol * max|c|.
StructureReport check_structure(const LieAlgebra& a, double tol = 1e-9);

}  // namespace sktflow
