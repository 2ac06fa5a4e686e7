#pragma once

#include <Eigen/Dense>
#include <complex>
#include <initializer_list>
#include <span>

#include "sktflow/combinatorics.hpp"
#include "sktflow/lie_algebra.hpp"

namespace sktflow {

using Complex = std::complex<double>;

/// Which basis a form's coefficients refer to: the real basis e_i, or the
/// split frame (Z_1..Z_n, conj Z_1..conj Z_n).
enum class FormBasis { Real, Frame };

/// Invariant alternating k-form; coefficients indexed by strictly increasing
/// k-tuples, phi = sum_I phi_I e^I with (e^i ^ e^j)(e_k, e_l) = d_ik d_jl - d_il d_jk.
class Form {
public:
  Form(int space_dim, int degree, FormBasis basis = FormBasis::Real);

  static Form monomial(int space_dim, std::initializer_list<int> idx, Complex value,
                       FormBasis basis = FormBasis::Real);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  FormBasis basis() const { return basis_; }

  Eigen::VectorXcd& coeffs() { return coeff_; }
  const Eigen::VectorXcd& coeffs() const { return coeff_; }

  /// coefficient at an arbitrary index list (sorted with sign; 0 on repeats)
  Complex coefficient(std::span<const int> idx) const;
  Complex coefficient(std::initializer_list<int> idx) const;

  /// adds value at an arbitrary index list, with alternating sign
  void add_term(std::span<const int> idx, Complex value);

  Form& operator+=(const Form& other);
  Form& operator*=(Complex s);
  friend Form operator+(Form a, const Form& b) { return a += b; }
  friend Form operator*(Complex s, Form a) { return a *= s; }

  double max_abs() const;
  Form conjugated() const;

  const TupleTable& tuples() const;

private:
  int dim_, degree_;
  FormBasis basis_;
  Eigen::VectorXcd coeff_;
};

Form wedge(const Form& a, const Form& b);

/// phi(v_1..v_k); vectors are columns of args
Complex evaluate(const Form& phi, const Eigen::MatrixXcd& args);

/// Coefficients of phi in the basis f_a = sum_i S(i,a) e_i.
Form pullback(const Form& phi, const Eigen::MatrixXcd& s, FormBasis out_basis);

/// Chevalley-Eilenberg differential on invariant forms (real basis),
/// d phi(X_0..X_k) = sum_{i<j} (-1)^{i+j} phi([X_i,X_j], X_0..^i..^j..X_k).
Form ce_differential(const LieAlgebra& a, const Form& phi);

/// Norm induced by g on Lambda^k (coefficient 2-norm in a g-orthonormal basis).
double norm_g(const Form& phi, const Eigen::MatrixXd& g);

/// 2-form <-> antisymmetric matrix m(i,j) = phi(e_i,e_j)
Eigen::MatrixXd two_form_matrix(const Form& phi);
Form matrix_two_form(const Eigen::MatrixXd& m);

}  // namespace sktflow
