#include "sktflow/hermitian.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sktflow/rng.hpp"

namespace sktflow {

namespace {
constexpr Complex kI{0.0, 1.0};
}

bool HermitianValidation::ok(double tol) const {
  return j_square_residual <= 1e-10 && nijenhuis_residual <= std::max(tol, 1e-9) &&
         symmetry_residual <= 1e-10 && hermitian_residual <= 1e-10 &&
         min_metric_eigenvalue > 0.0;
}

HermitianValidation validate_hermitian(const LieAlgebra& a, const Eigen::MatrixXd& j,
                                       const Eigen::MatrixXd& g) {
  const int d = a.dim();
  if (j.rows() != d || j.cols() != d || g.rows() != d || g.cols() != d)
    throw std::invalid_argument("validate_hermitian: matrix shape");
  HermitianValidation v;
  v.j_square_residual = (j * j + Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff();

  const double cscale = std::max(a.max_abs_constant(), 1e-300);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  double nmax = 0.0;
  for (int i = 0; i < d; ++i)
    for (int jj = i + 1; jj < d; ++jj) {
      const Eigen::VectorXd ji = j.col(i), jjv = j.col(jj);
      const Eigen::VectorXd n = a.bracket(ji, jjv) - j * a.bracket(ji, Eigen::VectorXd(id.col(jj))) -
                                j * a.bracket(Eigen::VectorXd(id.col(i)), jjv) -
                                a.ad(i).col(jj);
      nmax = std::max(nmax, n.cwiseAbs().maxCoeff());
    }
  v.nijenhuis_residual = nmax / cscale;

  v.symmetry_residual = (g - g.transpose()).cwiseAbs().maxCoeff() /
                        std::max(g.cwiseAbs().maxCoeff(), 1e-300);
  v.hermitian_residual = (j.transpose() * g * j - g).cwiseAbs().maxCoeff() /
                         std::max(g.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
  v.min_metric_eigenvalue = es.eigenvalues().minCoeff();
  return v;
}

HermitianStructure::HermitianStructure(LieAlgebra a, Eigen::MatrixXd j, Eigen::MatrixXd g)
    : algebra_(std::move(a)), j_(std::move(j)), g_(std::move(g)), omega_(algebra_.dim(), 2) {
  validation_ = validate_hermitian(algebra_, j_, g_);
  if (!validation_.ok()) {
    std::ostringstream os;
    os << "HermitianStructure: invariants violated (J^2 residual " << validation_.j_square_residual
       << ", Nijenhuis " << validation_.nijenhuis_residual << ", symmetry "
       << validation_.symmetry_residual << ", J-Hermitian " << validation_.hermitian_residual
       << ", min metric eigenvalue " << validation_.min_metric_eigenvalue << ")";
    throw std::invalid_argument(os.str());
  }
  omega_ = matrix_two_form(j_.transpose() * g_);
  c_scale_ = std::max(algebra_.max_abs_constant(), 1e-300);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g_);
  g_scale_ = es.eigenvalues().cwiseAbs().maxCoeff();
}

Complex hermitian_pairing(const Eigen::MatrixXd& g, const Eigen::VectorXcd& u,
                          const Eigen::VectorXcd& v) {
  return (u.transpose() * g * v.conjugate())(0, 0);
}

UnitaryFrame unitary_frame(const HermitianStructure& h) {
  const int d = h.dim();
  const int n = h.n();
  const Eigen::MatrixXd& j = h.J();
  const Eigen::MatrixXd& g = h.g();
  Eigen::MatrixXcd z(d, n);
  int found = 0;
  for (int k = 0; k < d && found < n; ++k) {
    Eigen::VectorXcd cand =
        0.5 * (Eigen::VectorXd::Unit(d, k).cast<Complex>() - kI * j.col(k).cast<Complex>());
    // modified Gram-Schmidt, re-orthogonalized twice
    for (int pass = 0; pass < 2; ++pass)
      for (int r = 0; r < found; ++r)
        cand -= hermitian_pairing(g, cand, z.col(r)) * z.col(r);
    const double nn = std::sqrt(std::abs(hermitian_pairing(g, cand, cand)));
    if (nn > 1e-8) {
      z.col(found++) = cand / nn;
    }
  }
  if (found != n) throw std::invalid_argument("unitary_frame: degenerate Gram matrix");
  return {z};
}

Eigen::MatrixXcd random_unitary(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXcd x(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = Complex(rng.normal(), rng.normal());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(x);
  Eigen::MatrixXcd q = qr.householderQ();
  // fix the phase so the factorization is unique-ish
  Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    const Complex di = r(i, i);
    if (std::abs(di) > 0) q.col(i) *= di / std::abs(di);
  }
  return q;
}

UnitaryFrame unitary_frame(const HermitianStructure& h, std::uint64_t frame_seed) {
  UnitaryFrame f = unitary_frame(h);
  f.Z = f.Z * random_unitary(h.n(), frame_seed);
  return f;
}

double frame_residual(const HermitianStructure& h, const UnitaryFrame& f) {
  const int n = h.n();
  const Eigen::MatrixXcd jz = h.J().cast<Complex>() * f.Z - kI * f.Z;
  const Eigen::MatrixXcd gram_h =
      f.Z.transpose() * h.g().cast<Complex>() * f.Z.conjugate() -
      Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd gram_b = f.Z.transpose() * h.g().cast<Complex>() * f.Z;
  return std::max({jz.cwiseAbs().maxCoeff(), gram_h.cwiseAbs().maxCoeff(),
                   gram_b.cwiseAbs().maxCoeff()});
}

namespace {

Eigen::MatrixXcd frame_matrix(const UnitaryFrame& f) {
  const int d = static_cast<int>(f.Z.rows());
  const int n = static_cast<int>(f.Z.cols());
  Eigen::MatrixXcd s(d, d);
  s.leftCols(n) = f.Z;
  s.rightCols(n) = f.Z.conjugate();
  return s;
}

}  // namespace

std::vector<BigradeComponent> bigrade(const HermitianStructure& h, const Form& phi) {
  const int d = h.dim();
  const int n = h.n();
  if (phi.dim() != d) throw std::invalid_argument("bigrade: dimension mismatch");
  const UnitaryFrame f = unitary_frame(h);
  const Eigen::MatrixXcd s = frame_matrix(f);
  const Eigen::MatrixXcd sinv = s.partialPivLu().inverse();

  Form source = phi;
  if (phi.basis() == FormBasis::Frame) {
    source = pullback(phi, sinv, FormBasis::Real);  // frame coeffs -> real coeffs
  }
  const Form framed = pullback(source, s, FormBasis::Frame);
  const int k = phi.degree();
  std::vector<Form> parts(static_cast<std::size_t>(k + 1), Form(d, k, FormBasis::Frame));
  const auto& tt = framed.tuples();
  for (int r = 0; r < tt.size(); ++r) {
    const Complex c = framed.coeffs()(r);
    if (c == 0.0) continue;
    const auto t = tt.tuple(r);
    int p = 0;
    for (int x : t)
      if (x < n) ++p;
    parts[static_cast<std::size_t>(p)].coeffs()(r) = c;
  }
  std::vector<BigradeComponent> out;
  const double cutoff = 1e-14 * std::max(framed.max_abs(), 1e-300);
  for (int p = k; p >= 0; --p) {
    auto& part = parts[static_cast<std::size_t>(p)];
    if (part.max_abs() <= cutoff) continue;
    Form back = phi.basis() == FormBasis::Frame
                    ? part
                    : pullback(part, sinv, FormBasis::Real);
    out.push_back({p, k - p, std::move(back)});
  }
  return out;
}

namespace {

// (p,q)-projection of a real-basis form, real-basis output
Form project_pq(const Form& phi, const Eigen::MatrixXcd& s, const Eigen::MatrixXcd& sinv, int n,
                int p_sel) {
  const Form framed = pullback(phi, s, FormBasis::Frame);
  Form keep(phi.dim(), phi.degree(), FormBasis::Frame);
  const auto& tt = framed.tuples();
  for (int r = 0; r < tt.size(); ++r) {
    const Complex c = framed.coeffs()(r);
    if (c == 0.0) continue;
    const auto t = tt.tuple(r);
    int p = 0;
    for (int x : t)
      if (x < n) ++p;
    if (p == p_sel) keep.coeffs()(r) = c;
  }
  return pullback(keep, sinv, FormBasis::Real);
}

}  // namespace

std::pair<Form, Form> del_and_delbar(const HermitianStructure& h, const Form& phi) {
  const int d = h.dim();
  const int n = h.n();
  const UnitaryFrame f = unitary_frame(h);
  const Eigen::MatrixXcd s = frame_matrix(f);
  const Eigen::MatrixXcd sinv = s.partialPivLu().inverse();

  Form real_phi = phi.basis() == FormBasis::Frame ? pullback(phi, sinv, FormBasis::Real) : phi;

  // purity check
  const Form framed = pullback(real_phi, s, FormBasis::Frame);
  int p_in = -1;
  const auto& tt = framed.tuples();
  const double cutoff = 1e-10 * std::max(framed.max_abs(), 1e-300);
  for (int r = 0; r < tt.size(); ++r) {
    if (std::abs(framed.coeffs()(r)) <= cutoff) continue;
    const auto t = tt.tuple(r);
    int p = 0;
    for (int x : t)
      if (x < n) ++p;
    if (p_in == -1) p_in = p;
    if (p != p_in) throw std::invalid_argument("del_and_delbar: input is not of pure bidegree");
  }
  if (p_in == -1) p_in = 0;  // zero form

  const Form dphi = ce_differential(h.algebra(), real_phi);
  const Form dframed = pullback(dphi, s, FormBasis::Frame);
  const int k1 = dphi.degree();
  Form del_f(d, k1, FormBasis::Frame), delbar_f(d, k1, FormBasis::Frame);
  double leakage = 0.0;
  const auto& tt1 = dframed.tuples();
  for (int r = 0; r < tt1.size(); ++r) {
    const Complex c = dframed.coeffs()(r);
    if (c == 0.0) continue;
    const auto t = tt1.tuple(r);
    int p = 0;
    for (int x : t)
      if (x < n) ++p;
    if (p == p_in + 1)
      del_f.coeffs()(r) = c;
    else if (p == p_in)
      delbar_f.coeffs()(r) = c;
    else
      leakage = std::max(leakage, std::abs(c));
  }
  const double bound = 1e-10 * h.c_scale() * std::max(framed.max_abs(), 1.0);
  if (leakage > bound) {
    std::ostringstream os;
    os << "del_and_delbar: integrability leakage " << leakage << " above " << bound;
    throw std::invalid_argument(os.str());
  }
  if (phi.basis() == FormBasis::Frame) return {del_f, delbar_f};
  return {pullback(del_f, sinv, FormBasis::Real), pullback(delbar_f, sinv, FormBasis::Real)};
}

Form ddbar_omega(const HermitianStructure& h) {
  const int d = h.dim();
  const int n = h.n();
  const UnitaryFrame f = unitary_frame(h);
  const Eigen::MatrixXcd s = frame_matrix(f);
  const Eigen::MatrixXcd sinv = s.partialPivLu().inverse();
  const Form domega = ce_differential(h.algebra(), h.omega());
  const Form delbar = project_pq(domega, s, sinv, n, 1);  // (1,2) part
  const Form ddelbar = ce_differential(h.algebra(), delbar);
  return project_pq(ddelbar, s, sinv, n, 2);  // (2,2) part
}

SktReport skt_check(const HermitianStructure& h, double tol) {
  SktReport r;
  r.residual_norm = norm_g(ddbar_omega(h), h.g());
  const double scale = h.c_scale() * h.g_scale();
  r.threshold = tol * scale * scale * scale;
  r.is_skt = r.residual_norm <= r.threshold;
  return r;
}

Complex ddbar_pairing(const HermitianStructure& h, const Eigen::VectorXcd& z,
                      const Eigen::VectorXcd& w) {
  const StructureReport sr = check_structure(h.algebra());
  if (!sr.two_step)
    throw std::invalid_argument("ddbar_pairing: algebra is not 2-step nilpotent");
  const LieAlgebra& a = h.algebra();
  const Eigen::MatrixXcd gc = h.g().cast<Complex>();
  const Eigen::MatrixXcd jc = h.J().cast<Complex>();
  auto om = [&](const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
    return Complex(((jc * u).transpose() * gc * v)(0, 0));
  };
  auto p01 = [&](const Eigen::VectorXcd& v) {
    return Eigen::VectorXcd(0.5 * (v + kI * (jc * v)));
  };
  const Eigen::VectorXcd zb = z.conjugate();
  const Eigen::VectorXcd wb = w.conjugate();
  const Eigen::VectorXcd v1 = a.bracket(z, zb);
  const Eigen::VectorXcd v2 = a.bracket(w, wb);
  const Eigen::VectorXcd v3 = a.bracket(z, wb);
  const Eigen::VectorXcd v4 = a.bracket(zb, w);
  // exact bracket expansion of the CE evaluation on (Z, conj Z, W, conj W);
  // the [J(central), .] brackets do not drop out in general, they cancel only
  // on special shapes (see the (4,4) fixtures in the tests)
  const Complex t1 = 0.5 * kI * (om(a.bracket(Eigen::VectorXcd(jc * v1), w), wb) -
                                 om(a.bracket(Eigen::VectorXcd(jc * v1), wb), w)) +
                     om(v2, p01(v1));
  const Complex t6 = 0.5 * kI * (om(a.bracket(Eigen::VectorXcd(jc * v2), z), zb) -
                                 om(a.bracket(Eigen::VectorXcd(jc * v2), zb), z)) +
                     om(v1, p01(v2));
  const Complex t3 = 0.5 * kI * (om(a.bracket(Eigen::VectorXcd(jc * v3), zb), w) -
                                 om(a.bracket(Eigen::VectorXcd(jc * v3), w), zb)) +
                     om(v4, p01(v3));
  const Complex t4 = 0.5 * kI * (om(a.bracket(Eigen::VectorXcd(jc * v4), z), wb) -
                                 om(a.bracket(Eigen::VectorXcd(jc * v4), wb), z)) +
                     om(v3, p01(v4));
  const Complex t2 = om(a.bracket(z, w), a.bracket(zb, wb));
  return t1 + t2 + t3 + t4 + t6;
}

}  // namespace sktflow
