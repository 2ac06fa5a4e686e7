#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "sktflow/form.hpp"
#include "sktflow/lie_algebra.hpp"

namespace sktflow {

struct HermitianValidation {
  double j_square_residual = 0.0;    // |J^2 + I|
  double nijenhuis_residual = 0.0;   // max |N(e_i,e_j)|, relative to max|c|
  double symmetry_residual = 0.0;
  double hermitian_residual = 0.0;   // |J^T g J - g| relative
  double min_metric_eigenvalue = 0.0;
  bool ok(double tol = 1e-9) const;
};

HermitianValidation validate_hermitian(const LieAlgebra& a, const Eigen::MatrixXd& j,
                                       const Eigen::MatrixXd& g);

/// (algebra, J, g) with omega = g(J., .) cached. Throws std::invalid_argument
/// when the structure invariants fail (J^2 = -I, integrability, symmetric
/// positive definite J-Hermitian metric).
class HermitianStructure {
public:
  HermitianStructure(LieAlgebra a, Eigen::MatrixXd j, Eigen::MatrixXd g);

  const LieAlgebra& algebra() const { return algebra_; }
  const Eigen::MatrixXd& J() const { return j_; }
  const Eigen::MatrixXd& g() const { return g_; }
  const Form& omega() const { return omega_; }
  int dim() const { return algebra_.dim(); }
  int n() const { return algebra_.dim() / 2; }

  /// max|c| * spectral bound of g; one factor per bracket / metric pairing
  double c_scale() const { return c_scale_; }
  double g_scale() const { return g_scale_; }

  const HermitianValidation& validation() const { return validation_; }

private:
  LieAlgebra algebra_;
  Eigen::MatrixXd j_, g_;
  Form omega_;
  HermitianValidation validation_;
  double c_scale_ = 0.0, g_scale_ = 0.0;
};

/// g-unitary (1,0)-frame: columns Z_r with J Z_r = i Z_r,
/// g(Z_r, conj Z_s) = delta_rs, g(Z_r, Z_s) = 0.
struct UnitaryFrame {
  Eigen::MatrixXcd Z;  // 2n x n
};

UnitaryFrame unitary_frame(const HermitianStructure& h);
/// frame rotated by a seeded random unitary (frame-invariance experiments)
UnitaryFrame unitary_frame(const HermitianStructure& h, std::uint64_t frame_seed);

Eigen::MatrixXcd random_unitary(int n, std::uint64_t seed);

/// residuals of the two frame invariants
double frame_residual(const HermitianStructure& h, const UnitaryFrame& f);

struct BigradeComponent {
  int p, q;
  Form component;  // same basis as the input form
};

/// J-pure (p,q) components; they sum back to phi.
std::vector<BigradeComponent> bigrade(const HermitianStructure& h, const Form& phi);

/// (del phi, delbar phi) for pure-bidegree phi; throws on non-pure input or
/// integrability leakage above 1e-10 * max|c| * |phi|.
std::pair<Form, Form> del_and_delbar(const HermitianStructure& h, const Form& phi);

struct SktReport {
  bool is_skt = false;
  double residual_norm = 0.0;
  double threshold = 0.0;
};

/// residual_norm = g-norm of del delbar omega; SKT iff <= tol * scale^3
SktReport skt_check(const HermitianStructure& h, double tol = 1e-9);

/// del delbar omega as a (2,2)-form over the real basis
Form ddbar_omega(const HermitianStructure& h);

/// Closed-form evaluation of del delbar omega(Z, conj Z, W, conj W) on a
/// 2-step algebra via the exact bracket expansion of the Chevalley-Eilenberg
/// route (including the [J(central), .] cross terms). Equals the
/// ce_differential evaluation to machine precision.
Complex ddbar_pairing(const HermitianStructure& h, const Eigen::VectorXcd& z,
                      const Eigen::VectorXcd& w);

/// positive pairing h(u,v) = g(u, conj v)
Complex hermitian_pairing(const Eigen::MatrixXd& g, const Eigen::VectorXcd& u,
                          const Eigen::VectorXcd& v);

}  // namespace sktflow
