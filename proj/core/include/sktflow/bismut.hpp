#pragma once

#include <Eigen/Dense>

#include "sktflow/hermitian.hpp"

namespace sktflow {

enum class RicciSource { TwoStep, General };

/// Bismut-Ricci form: real coefficients over the real basis.
struct RicciForm {
  Form rho;  // degree 2, real basis
  RicciSource source;
  double imag_residual = 0.0;  // discarded imaginary residue from frame arithmetic
};

/// rho(X,Y) = i sum_r g([X,Y], [Z_r, conj Z_r]); requires a 2-step algebra.
RicciForm rho_two_step(const HermitianStructure& h);
RicciForm rho_two_step(const HermitianStructure& h, const UnitaryFrame& f);

/// rho(X,Y) = -i sum_r { g([[X,Y]^{1,0}, Z_r], conj Z_r)
///                      - g([[X,Y]^{0,1}, conj Z_r], Z_r)
///                      - g([X,Y], [Z_r, conj Z_r]) }
RicciForm rho_general(const HermitianStructure& h);
RicciForm rho_general(const HermitianStructure& h, const UnitaryFrame& f);

/// (1,1)-part: rho11(X,Y) = (rho(X,Y) + rho(JX,JY)) / 2
Form rho_11(const HermitianStructure& h, const Form& rho);

/// rho(Z, conj Z) = -i sum_r |[Z, conj Z_r]|^2 on SKT 2-step algebras.
Complex prop_diagonal(const HermitianStructure& h, const Eigen::VectorXcd& z);

struct SeminegativityReport {
  double max_eigenvalue = 0.0;
  Eigen::VectorXd eigenvalues;
};

/// eigenvalues of b(X,Y) = rho11(X,JY) relative to g (g = L L^T reduction)
SeminegativityReport seminegativity_gap(const HermitianStructure& h);
SeminegativityReport seminegativity_gap(const HermitianStructure& h, const Form& rho);

struct StaticResidualReport {
  double lambda_star = 0.0;
  double residual = 0.0;
};

/// least-squares projection of rho11 on omega in the g-induced norm on 2-forms
StaticResidualReport static_residual(const HermitianStructure& h);
StaticResidualReport static_residual(const HermitianStructure& h, const Form& rho);

}  // namespace sktflow
