#include "sktflow/bismut.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace sktflow {

namespace {

constexpr Complex kI{0.0, 1.0};

RicciForm assemble(const HermitianStructure& h, RicciSource source,
                   const Eigen::MatrixXcd& values) {
  RicciForm out{Form(h.dim(), 2), source, 0.0};
  const auto& tt = out.rho.tuples();
  for (int r = 0; r < tt.size(); ++r) {
    const auto t = tt.tuple(r);
    const Complex v = values(t[0], t[1]);
    out.rho.coeffs()(r) = v.real();
    out.imag_residual = std::max(out.imag_residual, std::abs(v.imag()));
  }
  const double bound = 1e-10 * std::max(h.c_scale() * h.c_scale() * h.g_scale(), 1.0);
  if (out.imag_residual > bound)
    throw std::runtime_error("Ricci form: imaginary residue above tolerance");
  return out;
}

}  // namespace

RicciForm rho_two_step(const HermitianStructure& h) {
  return rho_two_step(h, unitary_frame(h));
}

RicciForm rho_two_step(const HermitianStructure& h, const UnitaryFrame& f) {
  const StructureReport sr = check_structure(h.algebra());
  if (!sr.two_step) throw std::invalid_argument("rho_two_step: algebra is not 2-step nilpotent");
  const LieAlgebra& a = h.algebra();
  const int d = h.dim();
  Eigen::VectorXcd s = Eigen::VectorXcd::Zero(d);
  for (int r = 0; r < h.n(); ++r)
    s += a.bracket(Eigen::VectorXcd(f.Z.col(r)), Eigen::VectorXcd(f.Z.col(r).conjugate()));
  const Eigen::VectorXcd gs = h.g().cast<Complex>() * s;
  Eigen::MatrixXcd vals = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      vals(i, j) = kI * (a.ad(i).col(j).cast<Complex>().transpose() * gs)(0, 0);
  return assemble(h, RicciSource::TwoStep, vals);
}

RicciForm rho_general(const HermitianStructure& h) {
  return rho_general(h, unitary_frame(h));
}

RicciForm rho_general(const HermitianStructure& h, const UnitaryFrame& f) {
  const LieAlgebra& a = h.algebra();
  const int d = h.dim();
  const Eigen::MatrixXcd gc = h.g().cast<Complex>();
  const Eigen::MatrixXcd jc = h.J().cast<Complex>();
  Eigen::MatrixXcd vals = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const Eigen::VectorXcd v = a.ad(i).col(j).cast<Complex>();
      const Eigen::VectorXcd v10 = 0.5 * (v - kI * (jc * v));
      const Eigen::VectorXcd v01 = 0.5 * (v + kI * (jc * v));
      Complex tot = 0.0;
      for (int r = 0; r < h.n(); ++r) {
        const Eigen::VectorXcd zr = f.Z.col(r);
        const Eigen::VectorXcd zbr = f.Z.col(r).conjugate();
        const Complex t1 = (a.bracket(v10, zr).transpose() * gc * zbr)(0, 0);
        const Complex t2 = (a.bracket(v01, zbr).transpose() * gc * zr)(0, 0);
        const Complex t3 = (v.transpose() * gc * a.bracket(zr, zbr))(0, 0);
        tot += t1 - t2 - t3;
      }
      vals(i, j) = -kI * tot;
    }
  return assemble(h, RicciSource::General, vals);
}

Form rho_11(const HermitianStructure& h, const Form& rho) {
  const Eigen::MatrixXd m = two_form_matrix(rho);
  return matrix_two_form(0.5 * (m + h.J().transpose() * m * h.J()));
}

Complex prop_diagonal(const HermitianStructure& h, const Eigen::VectorXcd& z) {
  const StructureReport sr = check_structure(h.algebra());
  if (!sr.two_step) throw std::invalid_argument("prop_diagonal: algebra is not 2-step nilpotent");
  if (!skt_check(h).is_skt) throw std::invalid_argument("prop_diagonal: structure is not SKT");
  const UnitaryFrame f = unitary_frame(h);
  double total = 0.0;
  for (int r = 0; r < h.n(); ++r) {
    const Eigen::VectorXcd w = h.algebra().bracket(z, Eigen::VectorXcd(f.Z.col(r).conjugate()));
    total += hermitian_pairing(h.g(), w, w).real();
  }
  return -kI * total;
}

SeminegativityReport seminegativity_gap(const HermitianStructure& h) {
  return seminegativity_gap(h, rho_general(h).rho);
}

SeminegativityReport seminegativity_gap(const HermitianStructure& h, const Form& rho) {
  const Form r11 = rho_11(h, rho);
  Eigen::MatrixXd b = two_form_matrix(r11) * h.J();
  b = 0.5 * (b + b.transpose()).eval();
  const Eigen::LLT<Eigen::MatrixXd> llt(h.g());
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("seminegativity_gap: metric not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd m =
      l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(
          l.triangularView<Eigen::Lower>().solve(b).transpose())).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  SeminegativityReport rep;
  rep.eigenvalues = es.eigenvalues();
  rep.max_eigenvalue = rep.eigenvalues.maxCoeff();
  return rep;
}

StaticResidualReport static_residual(const HermitianStructure& h) {
  return static_residual(h, rho_general(h).rho);
}

StaticResidualReport static_residual(const HermitianStructure& h, const Form& rho) {
  const Form r11 = rho_11(h, rho);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.g());
  const Eigen::MatrixXd q =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
  const Eigen::MatrixXcd qc = q.cast<Complex>();
  const Eigen::VectorXd rv = pullback(r11, qc, FormBasis::Real).coeffs().real();
  const Eigen::VectorXd ov = pullback(h.omega(), qc, FormBasis::Real).coeffs().real();
  StaticResidualReport rep;
  const double oo = ov.squaredNorm();
  rep.lambda_star = oo > 0 ? rv.dot(ov) / oo : 0.0;
  rep.residual = (rv - rep.lambda_star * ov).norm();
  return rep;
}

}  // namespace sktflow
