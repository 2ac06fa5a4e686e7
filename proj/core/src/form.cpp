#include "sktflow/form.hpp"

#include <map>
#include <stdexcept>
#include <vector>

namespace sktflow {

namespace {

// shared tuple tables per (m, k); immutable after construction
const TupleTable& table_for(int m, int k) {
  static std::map<std::pair<int, int>, TupleTable> cache;
  auto it = cache.find({m, k});
  if (it == cache.end()) it = cache.emplace(std::make_pair(m, k), TupleTable(m, k)).first;
  return it->second;
}

}  // namespace

Form::Form(int space_dim, int degree, FormBasis basis)
    : dim_(space_dim), degree_(degree), basis_(basis) {
  if (degree < 0 || degree > space_dim) throw std::invalid_argument("Form: bad degree");
  coeff_ = Eigen::VectorXcd::Zero(binomial(space_dim, degree));
}

Form Form::monomial(int space_dim, std::initializer_list<int> idx, Complex value,
                    FormBasis basis) {
  Form f(space_dim, static_cast<int>(idx.size()), basis);
  f.add_term(std::span<const int>(idx.begin(), idx.size()), value);
  return f;
}

const TupleTable& Form::tuples() const { return table_for(dim_, degree_); }

Complex Form::coefficient(std::span<const int> idx) const {
  if (static_cast<int>(idx.size()) != degree_) throw std::invalid_argument("coefficient: arity");
  std::vector<int> tmp(idx.begin(), idx.end());
  const int s = sort_sign(tmp);
  if (s == 0) return {0.0, 0.0};
  return static_cast<double>(s) * coeff_(TupleTable::rank(tmp));
}

Complex Form::coefficient(std::initializer_list<int> idx) const {
  return coefficient(std::span<const int>(idx.begin(), idx.size()));
}

void Form::add_term(std::span<const int> idx, Complex value) {
  if (static_cast<int>(idx.size()) != degree_) throw std::invalid_argument("add_term: arity");
  for (int v : idx)
    if (v < 0 || v >= dim_) throw std::invalid_argument("add_term: index range");
  std::vector<int> tmp(idx.begin(), idx.end());
  const int s = sort_sign(tmp);
  if (s == 0) return;
  coeff_(TupleTable::rank(tmp)) += static_cast<double>(s) * value;
}

Form& Form::operator+=(const Form& other) {
  if (dim_ != other.dim_ || degree_ != other.degree_ || basis_ != other.basis_)
    throw std::invalid_argument("Form +=: mismatched shape");
  coeff_ += other.coeff_;
  return *this;
}

Form& Form::operator*=(Complex s) {
  coeff_ *= s;
  return *this;
}

double Form::max_abs() const {
  return coeff_.size() ? coeff_.cwiseAbs().maxCoeff() : 0.0;
}

Form Form::conjugated() const {
  Form out = *this;
  out.coeff_ = coeff_.conjugate();
  return out;
}

Form wedge(const Form& a, const Form& b) {
  if (a.dim() != b.dim() || a.basis() != b.basis())
    throw std::invalid_argument("wedge: mismatched forms");
  if (a.degree() + b.degree() > a.dim()) throw std::invalid_argument("wedge: degree overflow");
  Form out(a.dim(), a.degree() + b.degree(), a.basis());
  const auto& ta = a.tuples();
  const auto& tb = b.tuples();
  std::vector<int> merged(static_cast<std::size_t>(out.degree()));
  for (int ra = 0; ra < ta.size(); ++ra) {
    const Complex va = a.coeffs()(ra);
    if (va == 0.0) continue;
    const auto ia = ta.tuple(ra);
    for (int rb = 0; rb < tb.size(); ++rb) {
      const Complex vb = b.coeffs()(rb);
      if (vb == 0.0) continue;
      const auto ib = tb.tuple(rb);
      std::copy(ia.begin(), ia.end(), merged.begin());
      std::copy(ib.begin(), ib.end(), merged.begin() + a.degree());
      std::vector<int> tmp = merged;
      const int s = sort_sign(tmp);
      if (s == 0) continue;
      out.coeffs()(TupleTable::rank(tmp)) += static_cast<double>(s) * va * vb;
    }
  }
  return out;
}

Complex evaluate(const Form& phi, const Eigen::MatrixXcd& args) {
  if (args.rows() != phi.dim() || args.cols() != phi.degree())
    throw std::invalid_argument("evaluate: argument shape");
  const int k = phi.degree();
  if (k == 0) return phi.coeffs()(0);
  Complex total = 0.0;
  const auto& tt = phi.tuples();
  Eigen::MatrixXcd sub(k, k);
  for (int r = 0; r < tt.size(); ++r) {
    const Complex c = phi.coeffs()(r);
    if (c == 0.0) continue;
    const auto idx = tt.tuple(r);
    for (int row = 0; row < k; ++row) sub.row(row) = args.row(idx[row]);
    total += c * sub.determinant();
  }
  return total;
}

Form pullback(const Form& phi, const Eigen::MatrixXcd& s, FormBasis out_basis) {
  if (s.rows() != phi.dim() || s.cols() != phi.dim())
    throw std::invalid_argument("pullback: basis matrix shape");
  const int k = phi.degree();
  Form out(phi.dim(), k, out_basis);
  if (k == 0) {
    out.coeffs() = phi.coeffs();
    return out;
  }
  const auto& tt = phi.tuples();
  Eigen::MatrixXcd sub(k, k);
  for (int ra = 0; ra < tt.size(); ++ra) {
    const auto cols = tt.tuple(ra);  // target tuple A: evaluate on columns S(:,A)
    Complex tot = 0.0;
    for (int ri = 0; ri < tt.size(); ++ri) {
      const Complex c = phi.coeffs()(ri);
      if (c == 0.0) continue;
      const auto rows = tt.tuple(ri);
      for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q) sub(p, q) = s(rows[p], cols[q]);
      tot += c * sub.determinant();
    }
    out.coeffs()(ra) = tot;
  }
  return out;
}

Form ce_differential(const LieAlgebra& a, const Form& phi) {
  if (phi.basis() != FormBasis::Real)
    throw std::invalid_argument("ce_differential: real-basis forms only");
  if (phi.dim() != a.dim()) throw std::invalid_argument("ce_differential: dimension mismatch");
  const int k = phi.degree();
  if (k >= a.dim()) throw std::invalid_argument("ce_differential: degree overflow");
  const int d = a.dim();
  Form out(d, k + 1, FormBasis::Real);
  if (phi.max_abs() == 0.0) return out;
  const auto& tt = out.tuples();
  const std::size_t nrest = k > 0 ? static_cast<std::size_t>(k - 1) : 0;
  std::vector<int> rest(nrest);
  std::vector<int> idx(static_cast<std::size_t>(std::max(k, 1)));
  for (int r = 0; r < tt.size(); ++r) {
    const auto t = tt.tuple(r);
    Complex tot = 0.0;
    for (int aa = 0; aa <= k; ++aa) {
      for (int bb = aa + 1; bb <= k; ++bb) {
        // (-1)^{a+b} phi([e_ta, e_tb], rest...)
        int w = 0;
        for (int x = 0; x <= k; ++x)
          if (x != aa && x != bb) rest[static_cast<std::size_t>(w++)] = t[x];
        const double sgn = ((aa + bb) % 2 == 0) ? 1.0 : -1.0;
        const Eigen::VectorXd br = a.ad(t[aa]).col(t[bb]);
        for (int m = 0; m < d; ++m) {
          if (br(m) == 0.0) continue;
          idx[0] = m;
          std::copy(rest.begin(), rest.end(), idx.begin() + 1);
          // idx may be unsorted; coefficient() resolves the sign
          tot += sgn * br(m) *
                 phi.coefficient(std::span<const int>(idx.data(), static_cast<std::size_t>(k)));
        }
      }
    }
    out.coeffs()(r) = tot;
  }
  return out;
}

double norm_g(const Form& phi, const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("norm_g: metric not positive definite");
  const Eigen::MatrixXd q =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
  const Form on = pullback(phi, q.cast<Complex>(), phi.basis());
  return on.coeffs().norm();
}

Eigen::MatrixXd two_form_matrix(const Form& phi) {
  if (phi.degree() != 2) throw std::invalid_argument("two_form_matrix: degree 2 only");
  const int d = phi.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  const auto& tt = phi.tuples();
  for (int r = 0; r < tt.size(); ++r) {
    const auto t = tt.tuple(r);
    const Complex c = phi.coeffs()(r);
    m(t[0], t[1]) = c.real();
    m(t[1], t[0]) = -c.real();
  }
  return m;
}

Form matrix_two_form(const Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  Form out(d, 2, FormBasis::Real);
  const auto& tt = out.tuples();
  for (int r = 0; r < tt.size(); ++r) {
    const auto t = tt.tuple(r);
    out.coeffs()(r) = 0.5 * (m(t[0], t[1]) - m(t[1], t[0]));
  }
  return out;
}

}  // namespace sktflow
