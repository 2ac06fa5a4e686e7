#include "sktflow/generator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "sktflow/form.hpp"
#include "sktflow/hermitian.hpp"
#include "sktflow/rng.hpp"

namespace sktflow {

LieAlgebra gen_two_step(int p, int q, std::uint64_t seed) {
  if (p < 2 || q < 1 || (p + q) % 2 != 0)
    throw std::invalid_argument("gen_two_step: need p >= 2, q >= 1, p + q even");
  Rng rng(seed);
  while (true) {
    std::vector<BracketTerm> terms;
    bool nonzero = false;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        for (int k = 0; k < q; ++k) {
          const double v = rng.uniform(-1.0, 1.0);
          if (v != 0.0) nonzero = true;
          terms.push_back({i, j, p + k, v});
        }
    if (nonzero) return LieAlgebra(p + q, terms);
  }
}

namespace {

// ----- penalty F(J) = |J^2 + I|_F^2 + sum_{i<j} |N_J(e_i,e_j)|^2 and gradient -----

struct PenaltyContext {
  const LieAlgebra* a;
  int d;
  // E_j(:,k) = [e_k, e_j]; adjoint helper tables
  std::vector<Eigen::MatrixXd> e_tables;
};

PenaltyContext make_context(const LieAlgebra& a) {
  PenaltyContext ctx{&a, a.dim(), {}};
  ctx.e_tables.resize(static_cast<std::size_t>(ctx.d));
  for (int j = 0; j < ctx.d; ++j) {
    Eigen::MatrixXd m(ctx.d, ctx.d);
    for (int k = 0; k < ctx.d; ++k) m.col(k) = a.ad(k).col(j);
    ctx.e_tables[static_cast<std::size_t>(j)] = m;
  }
  return ctx;
}

// M_y(:,k) = [e_k, y]
Eigen::MatrixXd bracket_table(const LieAlgebra& a, const Eigen::VectorXd& y) {
  const int d = a.dim();
  Eigen::MatrixXd m(d, d);
  for (int k = 0; k < d; ++k) m.col(k) = a.ad(k) * y;
  return m;
}

double penalty(const PenaltyContext& ctx, const Eigen::MatrixXd& j, Eigen::MatrixXd* grad) {
  const int d = ctx.d;
  const LieAlgebra& a = *ctx.a;
  const Eigen::MatrixXd jj = j * j + Eigen::MatrixXd::Identity(d, d);
  double f = jj.squaredNorm();
  if (grad) *grad = 2.0 * (jj * j.transpose() + j.transpose() * jj);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < d; ++i) {
    const Eigen::VectorXd u = j.col(i);
    const Eigen::MatrixXd mu_table = grad ? bracket_table(a, u) : Eigen::MatrixXd();
    for (int jj2 = i + 1; jj2 < d; ++jj2) {
      const Eigen::VectorXd v = j.col(jj2);
      const Eigen::VectorXd bu_ej = a.bracket(u, Eigen::VectorXd(id.col(jj2)));
      const Eigen::VectorXd bei_v = a.bracket(Eigen::VectorXd(id.col(i)), v);
      const Eigen::VectorXd n = a.bracket(u, v) - j * bu_ej - j * bei_v - a.ad(i).col(jj2);
      f += n.squaredNorm();
      if (!grad) continue;
      const Eigen::VectorXd w = 2.0 * n;
      const Eigen::MatrixXd mv_table = bracket_table(a, v);
      grad->col(i) += mv_table.transpose() * w;          // B(dJ e_i, v)
      grad->col(jj2) -= mu_table.transpose() * w;        // B(u, dJ e_j)
      const Eigen::VectorXd wj = -j.transpose() * w;
      grad->col(i) += ctx.e_tables[static_cast<std::size_t>(jj2)].transpose() * wj;
      grad->col(jj2) -= ctx.e_tables[static_cast<std::size_t>(i)].transpose() * wj;
      grad->noalias() -= w * bu_ej.transpose();
      grad->noalias() -= w * bei_v.transpose();
    }
  }
  return f;
}

// residual system for the least-squares polish: rows = vec(J^2+I), then N blocks
Eigen::VectorXd residual_vector(const LieAlgebra& a, const Eigen::MatrixXd& j) {
  const int d = a.dim();
  const int pairs = d * (d - 1) / 2;
  Eigen::VectorXd r(static_cast<Eigen::Index>(d) * d + static_cast<Eigen::Index>(pairs) * d);
  Eigen::Map<Eigen::MatrixXd>(r.data(), d, d) = j * j + Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  Eigen::Index w = static_cast<Eigen::Index>(d) * d;
  for (int i = 0; i < d; ++i)
    for (int jj = i + 1; jj < d; ++jj) {
      const Eigen::VectorXd u = j.col(i), v = j.col(jj);
      r.segment(w, d) = a.bracket(u, v) - j * a.bracket(u, Eigen::VectorXd(id.col(jj))) -
                        j * a.bracket(Eigen::VectorXd(id.col(i)), v) - a.ad(i).col(jj);
      w += d;
    }
  return r;
}

// Levenberg-Marquardt with forward-difference Jacobian
double lm_polish(const LieAlgebra& a, Eigen::MatrixXd& j, int max_iter = 60) {
  const int d = a.dim();
  const int nvar = d * d;
  Eigen::VectorXd r = residual_vector(a, j);
  double f = r.squaredNorm();
  double lambda = 1e-3;
  for (int it = 0; it < max_iter && f > 1e-28; ++it) {
    const Eigen::Index m = r.size();
    Eigen::MatrixXd jac(m, nvar);
    for (int cidx = 0; cidx < nvar; ++cidx) {
      Eigen::MatrixXd jp = j;
      const double h = 1e-7 * std::max(1.0, std::abs(jp(cidx % d, cidx / d)));
      jp(cidx % d, cidx / d) += h;
      jac.col(cidx) = (residual_vector(a, jp) - r) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 8; ++tries) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal().array() += lambda * (jtj.diagonal().array().abs() + 1e-12);
      const Eigen::VectorXd delta = lhs.ldlt().solve(-jtr);
      Eigen::MatrixXd jn = j;
      for (int cidx = 0; cidx < nvar; ++cidx) jn(cidx % d, cidx / d) += delta(cidx);
      const Eigen::VectorXd rn = residual_vector(a, jn);
      const double fn = rn.squaredNorm();
      if (fn < f) {
        j = jn;
        r = rn;
        f = fn;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return f;
}

// L-BFGS with Armijo backtracking
double lbfgs_minimize(const PenaltyContext& ctx, Eigen::MatrixXd& j, int max_iter) {
  const int d = ctx.d;
  const int nvar = d * d;
  const int hist = 8;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  Eigen::MatrixXd grad(d, d);
  double f = penalty(ctx, j, &grad);
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(j.data(), nvar);
  Eigen::VectorXd g = Eigen::Map<Eigen::VectorXd>(grad.data(), nvar);
  for (int it = 0; it < max_iter; ++it) {
    if (g.norm() < 1e-14 || f < 1e-24) break;
    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      const double rho = 1.0 / y_hist[static_cast<std::size_t>(i)].dot(s_hist[static_cast<std::size_t>(i)]);
      alpha[static_cast<std::size_t>(i)] = rho * s_hist[static_cast<std::size_t>(i)].dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * y_hist[static_cast<std::size_t>(i)];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      q *= s.dot(y) / y.dot(y);
    } else {
      q *= 1.0 / std::max(g.norm(), 1.0);
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
      const double beta = rho * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    double dg = dir.dot(g);
    if (dg > 0) {  // not a descent direction; reset
      dir = -g;
      dg = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
    }
    double step = 1.0;
    double fn = f;
    Eigen::VectorXd xn;
    Eigen::MatrixXd jn(d, d), gn(d, d);
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      xn = x + step * dir;
      jn = Eigen::Map<Eigen::MatrixXd>(xn.data(), d, d);
      fn = penalty(ctx, jn, &gn);
      if (fn <= f + 1e-4 * step * dg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd gn_v = Eigen::Map<Eigen::VectorXd>(gn.data(), nvar);
    const Eigen::VectorXd sv = xn - x;
    const Eigen::VectorXd yv = gn_v - g;
    if (sv.dot(yv) > 1e-16 * sv.norm() * yv.norm()) {
      s_hist.push_back(sv);
      y_hist.push_back(yv);
      if (static_cast<int>(s_hist.size()) > hist) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    x = xn;
    g = gn_v;
    f = fn;
  }
  j = Eigen::Map<Eigen::MatrixXd>(x.data(), d, d);
  return f;
}

Eigen::MatrixXd random_orthogonal_complex_structure(int d, Rng& rng) {
  Eigen::MatrixXd x(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  for (int a = 0; a + 1 < d; a += 2) {
    s(a + 1, a) = 1.0;
    s(a, a + 1) = -1.0;
  }
  return q * s * q.transpose();
}

}  // namespace

JSearchResult find_complex_structure(const LieAlgebra& a, std::uint64_t seed,
                                     const JSearchControls& controls) {
  const PenaltyContext ctx = make_context(a);
  Rng rng(seed);
  JSearchResult res;
  res.best_penalty = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < controls.max_restarts; ++restart) {
    res.restarts_used = restart + 1;
    Eigen::MatrixXd j = random_orthogonal_complex_structure(a.dim(), rng);
    double f = lbfgs_minimize(ctx, j, controls.max_iterations);
    if (f < 1e-2) f = lm_polish(a, j);
    res.best_penalty = std::min(res.best_penalty, f);
    if (f < controls.success_threshold) {
      res.J = j;
      return res;
    }
  }
  return res;
}

namespace {

std::vector<Eigen::MatrixXd> hermitian_symmetric_basis(const Eigen::MatrixXd& j) {
  const int d = static_cast<int>(j.rows());
  std::vector<Eigen::MatrixXd> out;
  for (int i = 0; i < d; ++i)
    for (int k = i; k < d; ++k) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
      e(i, k) = 1.0;
      e(k, i) = 1.0;
      Eigen::MatrixXd s = 0.5 * (e + j.transpose() * e * j);
      s = 0.5 * (s + s.transpose()).eval();
      for (const auto& b : out) s -= (s.cwiseProduct(b)).sum() * b;
      const double n = s.norm();
      if (n > 1e-9) out.push_back(s / n);
    }
  return out;
}

// split basis [Z | conj Z] from the +i eigenspace of J (no metric involved)
Eigen::MatrixXcd j_split_basis(const Eigen::MatrixXd& j) {
  const int d = static_cast<int>(j.rows());
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(j.cast<Complex>());
  Eigen::MatrixXcd z(d, d / 2);
  int w = 0;
  for (int i = 0; i < d && w < d / 2; ++i)
    if (es.eigenvalues()(i).imag() > 0.5) z.col(w++) = es.eigenvectors().col(i);
  if (w != d / 2) throw std::runtime_error("j_split_basis: J has wrong eigenvalue structure");
  Eigen::MatrixXcd s(d, d);
  s.leftCols(d / 2) = z;
  s.rightCols(d / 2) = z.conjugate();
  return s;
}

// stacked real coefficients of the (2,2)-part of del delbar omega_B
Eigen::VectorXd skt_operator_column(const LieAlgebra& a, const Eigen::MatrixXd& j,
                                    const Eigen::MatrixXcd& s, const Eigen::MatrixXcd& sinv,
                                    const Eigen::MatrixXd& b) {
  const int d = a.dim();
  const int n = d / 2;
  const Form omega = matrix_two_form(j.transpose() * b);
  const Form dom = ce_differential(a, omega);
  const Form domf = pullback(dom, s, FormBasis::Frame);
  Form dbar(d, 3, FormBasis::Frame);
  const auto& t3 = domf.tuples();
  for (int r = 0; r < t3.size(); ++r) {
    const Complex c = domf.coeffs()(r);
    if (c == 0.0) continue;
    const auto t = t3.tuple(r);
    int p = 0;
    for (int x : t)
      if (x < n) ++p;
    if (p == 1) dbar.coeffs()(r) = c;
  }
  const Form dd = ce_differential(a, pullback(dbar, sinv, FormBasis::Real));
  const Form ddf = pullback(dd, s, FormBasis::Frame);
  const auto& t4 = ddf.tuples();
  Eigen::VectorXd col(2 * t4.size());
  col.setZero();
  for (int r = 0; r < t4.size(); ++r) {
    const Complex c = ddf.coeffs()(r);
    const auto t = t4.tuple(r);
    int p = 0;
    for (int x : t)
      if (x < n) ++p;
    if (p == 2) {
      col(2 * r) = c.real();
      col(2 * r + 1) = c.imag();
    }
  }
  return col;
}

std::optional<Eigen::MatrixXd> accept_pd(const Eigen::MatrixXd& g, double condition_cap) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
  Eigen::VectorXd w = es.eigenvalues();
  for (const double sgn : {1.0, -1.0}) {
    const double lo = sgn > 0 ? w.minCoeff() : -w.maxCoeff();
    const double hi = sgn > 0 ? w.maxCoeff() : -w.minCoeff();
    if (lo > 1e-12 * std::max(hi, 1.0) && hi / lo <= condition_cap) {
      return sgn * g / std::sqrt(lo * hi);  // spectrum lands inside [0.1, 10]
    }
  }
  return std::nullopt;
}

}  // namespace

SktMetricResult solve_skt_metrics(const LieAlgebra& a, const Eigen::MatrixXd& j,
                                  std::uint64_t seed, const SktMetricControls& controls) {
  SktMetricResult result;
  const auto basis = hermitian_symmetric_basis(j);
  if (basis.empty()) return result;
  const Eigen::MatrixXcd s = j_split_basis(j);
  const Eigen::MatrixXcd sinv = s.partialPivLu().inverse();

  Eigen::MatrixXd op(skt_operator_column(a, j, s, sinv, basis[0]).size(),
                     static_cast<Eigen::Index>(basis.size()));
  for (std::size_t c = 0; c < basis.size(); ++c)
    op.col(static_cast<Eigen::Index>(c)) = skt_operator_column(a, j, s, sinv, basis[c]);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(op, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // absolute floor at the operator's natural c^2 scale, so a numerically-zero
  // operator (every Hermitian metric SKT) yields the full null space
  const double cs = a.max_abs_constant();
  const double floor = 1e-12 * std::max(1.0, cs * cs);
  int rank = 0;
  if (sv.size() > 0 && sv(0) > 0) {
    const double thr = std::max(controls.nullspace_tol * sv(0), floor);
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > thr) ++rank;
  }
  const int nulldim = static_cast<int>(basis.size()) - rank;
  result.nullspace_dim = nulldim;
  if (nulldim == 0) return result;
  const Eigen::MatrixXd null = svd.matrixV().rightCols(nulldim);

  const int d = a.dim();
  auto reconstruct = [&](const Eigen::VectorXd& x) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
    const Eigen::VectorXd c = null * x;
    for (std::size_t i = 0; i < basis.size(); ++i) g += c(static_cast<Eigen::Index>(i)) * basis[i];
    return g;
  };
  auto project_coeffs = [&](const Eigen::MatrixXd& m) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i)
      c(static_cast<Eigen::Index>(i)) = m.cwiseProduct(basis[i]).sum();
    return Eigen::VectorXd(null.transpose() * c);
  };

  Rng rng(seed);
  // null-space basis matrices and their traces (PD requires trace > 0)
  std::vector<Eigen::MatrixXd> nb(static_cast<std::size_t>(nulldim));
  Eigen::VectorXd traces(nulldim);
  for (int i = 0; i < nulldim; ++i) {
    nb[static_cast<std::size_t>(i)] = reconstruct(Eigen::VectorXd::Unit(nulldim, i));
    traces(i) = nb[static_cast<std::size_t>(i)].trace();
  }
  if (traces.norm() < 1e-12) return result;  // all traceless: no definite element

  // alternating projections between the null-space slice {G in span, tr G = d}
  // and the shifted PSD cone {G >= eps I}; both sets are convex, so the
  // iteration reaches the intersection whenever a PD element exists
  const Eigen::MatrixXd t_mat = reconstruct(traces);
  auto project_slice = [&](const Eigen::MatrixXd& m) {
    const Eigen::VectorXd x = project_coeffs(m);
    Eigen::MatrixXd g = reconstruct(x);
    g += ((static_cast<double>(d) - g.trace()) / traces.squaredNorm()) * t_mat;
    return g;
  };
  auto run_pocs = [&](Eigen::MatrixXd g) -> std::optional<Eigen::MatrixXd> {
    const double eps = 0.02;
    double best_min = -std::numeric_limits<double>::infinity();
    double window_best = best_min;
    for (int it = 0; it < 600; ++it) {
      g = project_slice(g);
      if (auto ok = accept_pd(g, controls.condition_cap)) return ok;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
      const double lmin = es.eigenvalues()(0);
      if (lmin > 0) break;  // PD but condition cap rejected
      best_min = std::max(best_min, lmin);
      if (it % 40 == 39) {  // stall detection for an empty intersection
        if (best_min <= window_best + 1e-6) break;
        window_best = best_min;
      }
      g = es.eigenvectors() * es.eigenvalues().cwiseMax(eps).asDiagonal() *
          es.eigenvectors().transpose();
    }
    return std::nullopt;
  };

  std::vector<Eigen::MatrixXd> starts;
  if (controls.hint.size() > 0) starts.push_back(controls.hint);
  starts.push_back(Eigen::MatrixXd::Identity(d, d));
  starts.push_back(t_mat);
  for (int t = 0; t < 3; ++t) {
    Eigen::VectorXd x(nulldim);
    for (int i = 0; i < nulldim; ++i) x(i) = rng.normal();
    starts.push_back(reconstruct(x));
  }
  for (const auto& s0 : starts) {
    if (auto g = run_pocs(s0)) {
      result.g = *g;
      return result;
    }
  }

  // seeded random sampling fallback
  for (int t = 0; t < controls.sample_attempts; ++t) {
    Eigen::VectorXd x(nulldim);
    for (int i = 0; i < nulldim; ++i) x(i) = rng.normal();
    if (auto g = accept_pd(reconstruct(x), controls.condition_cap)) {
      result.g = *g;
      return result;
    }
  }
  return result;
}

namespace {

struct AdaptedStructure {
  Eigen::MatrixXd j;
  Eigen::MatrixXd g_designed;  // normalizing-basis-orthonormal metric, SKT for j
};

std::optional<AdaptedStructure> pencil_adapted(const LieAlgebra& a, int p) {
  const int d = a.dim();
  if (d - p != 2 || p != 4) return std::nullopt;
  Eigen::MatrixXd w1(p, p), w2(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      w1(i, j) = a.c(i, j, p);
      w2(i, j) = a.c(i, j, p + 1);
    }
  bool swapped = false;
  if (std::abs(w1.determinant()) < 1e-10) {
    std::swap(w1, w2);
    swapped = true;
    if (std::abs(w1.determinant()) < 1e-10) return std::nullopt;
  }
  const Eigen::MatrixXd k = w1.partialPivLu().solve(w2);
  Eigen::EigenSolver<Eigen::MatrixXd> es(k);
  if (es.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXcd ev = es.eigenvalues();
  if (ev.imag().cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff()))
    return std::nullopt;  // complex pencil branch: no adapted structure
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return ev(x).real() < ev(y).real(); });

  Eigen::MatrixXd basis(p, p);
  std::vector<double> lams;
  for (int i = 0; i < p; i += 2) {
    const double l0 = ev(order[static_cast<std::size_t>(i)]).real();
    const double l1 = ev(order[static_cast<std::size_t>(i + 1)]).real();
    if (std::abs(l1 - l0) > 1e-6 * std::max(1.0, std::abs(l0))) return std::nullopt;
    const Eigen::VectorXd u = es.eigenvectors().col(order[static_cast<std::size_t>(i)]).real();
    const Eigen::VectorXd v = es.eigenvectors().col(order[static_cast<std::size_t>(i + 1)]).real();
    const double sform = u.dot(w1 * v);
    if (std::abs(sform) < 1e-10) return std::nullopt;
    // balance |u'| = |v'| with w1(u', v') = 1
    const double alpha = std::sqrt(v.norm() / (u.norm() * std::abs(sform)));
    const double beta = 1.0 / (alpha * sform);
    basis.col(i) = alpha * u;
    basis.col(i + 1) = beta * v;
    lams.push_back(0.5 * (l0 + l1));
  }
  if (lams.size() != 2 || std::abs(basis.determinant()) < 1e-12) return std::nullopt;
  Eigen::MatrixXd jv_nf = Eigen::MatrixXd::Zero(p, p);
  for (int a2 = 0; a2 + 1 < p; a2 += 2) {
    jv_nf(a2 + 1, a2) = 1.0;
    jv_nf(a2, a2 + 1) = -1.0;
  }
  // central bracket images z_a = w1(u_a,v_a) e_{p+1} + w2(u_a,v_a) e_{p+2}
  Eigen::MatrixXd m(2, 2);
  if (!swapped) {
    m << 1.0, 1.0, lams[0], lams[1];
  } else {
    m << lams[0], lams[1], 1.0, 1.0;
  }
  if (std::abs(m.determinant()) < 1e-8) return std::nullopt;
  Eigen::MatrixXd r(2, 2);
  r << 0.0, -1.0, 1.0, 0.0;
  AdaptedStructure out;
  const Eigen::MatrixXd binv = basis.partialPivLu().inverse();
  const Eigen::MatrixXd minv = m.partialPivLu().inverse();
  out.j = Eigen::MatrixXd::Zero(d, d);
  out.j.topLeftCorner(p, p) = basis * jv_nf * binv;
  out.j.bottomRightCorner(2, 2) = m * r * minv;
  out.g_designed = Eigen::MatrixXd::Zero(d, d);
  out.g_designed.topLeftCorner(p, p) = binv.transpose() * binv;   // (B B^T)^{-1}
  out.g_designed.bottomRightCorner(2, 2) = minv.transpose() * minv;
  return out;
}

}  // namespace

std::optional<Eigen::MatrixXd> pencil_adapted_J(const LieAlgebra& a, int p) {
  if (auto r = pencil_adapted(a, p)) return r->j;
  return std::nullopt;
}

std::optional<InstanceSpec> generate_skt_instance(int p, int q, std::uint64_t seed,
                                                  int max_draws) {
  for (int draw = 0; draw < max_draws; ++draw) {
    const std::uint64_t draw_seed = Rng::mix(seed, static_cast<std::uint64_t>(draw));
    const LieAlgebra a = gen_two_step(p, q, draw_seed);

    std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> j_candidates;  // (J, hint)
    if (q == 2) {
      if (auto ad = pencil_adapted(a, p)) j_candidates.emplace_back(ad->j, ad->g_designed);
    }
    // several independent searches: distinct basins of the J-variety differ in
    // whether they admit SKT metrics at all
    JSearchControls jc;
    jc.max_restarts = 6;
    for (int jtry = 0; jtry < 5; ++jtry) {
      const JSearchResult jr = find_complex_structure(a, Rng::mix(draw_seed, 10 + jtry), jc);
      if (jr.J) j_candidates.emplace_back(*jr.J, Eigen::MatrixXd());
    }

    for (const auto& [j, hint] : j_candidates) {
      SktMetricControls mc;
      mc.hint = hint;
      const SktMetricResult mr = solve_skt_metrics(a, j, Rng::mix(draw_seed, 2), mc);
      if (!mr.g) continue;
      const HermitianValidation v = validate_hermitian(a, j, *mr.g);
      if (!v.ok()) continue;
      HermitianStructure h(a, j, *mr.g);
      if (!skt_check(h).is_skt) continue;
      InstanceSpec spec{"gen_p" + std::to_string(p) + "q" + std::to_string(q) + "_s" +
                            std::to_string(seed),
                        a, j, *mr.g, "generated(" + std::to_string(seed) + ")"};
      return spec;
    }
  }
  return std::nullopt;
}

}  // namespace sktflow
