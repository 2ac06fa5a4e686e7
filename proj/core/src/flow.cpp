#include "sktflow/flow.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>

#include "sktflow/instance_io.hpp"

namespace sktflow {

namespace {
constexpr Complex kI{0.0, 1.0};
}

Eigen::VectorXd pack_mu(const LieAlgebra& a) {
  const int d = a.dim();
  const TupleTable pairs(d, 2);
  Eigen::VectorXd mu(static_cast<Eigen::Index>(pairs.size()) * d);
  for (int r = 0; r < pairs.size(); ++r) {
    const auto t = pairs.tuple(r);
    for (int k = 0; k < d; ++k) mu(static_cast<Eigen::Index>(r) * d + k) = a.c(t[0], t[1], k);
  }
  return mu;
}

LieAlgebra unpack_mu(int dim, const Eigen::VectorXd& mu) {
  const TupleTable pairs(dim, 2);
  if (mu.size() != static_cast<Eigen::Index>(pairs.size()) * dim)
    throw std::invalid_argument("unpack_mu: wrong length");
  std::vector<BracketTerm> terms;
  terms.reserve(static_cast<std::size_t>(mu.size()));
  for (int r = 0; r < pairs.size(); ++r) {
    const auto t = pairs.tuple(r);
    for (int k = 0; k < dim; ++k) {
      const double v = mu(static_cast<Eigen::Index>(r) * dim + k);
      if (v != 0.0) terms.push_back({t[0], t[1], k, v});
    }
  }
  return LieAlgebra(dim, terms);
}

namespace {

// shared per-run background data; avoids re-validating structures inside the
// right-hand sides
struct Workspace {
  const HermitianStructure* h0 = nullptr;
  Eigen::MatrixXd j, g0;
  Eigen::MatrixXcd frame;     // unitary frame columns of the initial structure
  Eigen::MatrixXcd split;     // [Z | conj Z]
  Eigen::MatrixXcd split_inv;
  Eigen::MatrixXd omega0;     // J^T g0
  Eigen::PartialPivLU<Eigen::MatrixXd> omega0_lu;
  Eigen::MatrixXd q0;         // g0-orthonormal frame columns
  Eigen::MatrixXd center;     // orthonormal center basis of the initial algebra
  int dim = 0, n = 0;
};

Workspace make_workspace(const HermitianStructure& h) {
  Workspace w;
  w.h0 = &h;
  w.dim = h.dim();
  w.n = h.n();
  w.j = h.J();
  w.g0 = h.g();
  const UnitaryFrame f = unitary_frame(h);
  w.frame = f.Z;
  w.split.resize(w.dim, w.dim);
  w.split.leftCols(w.n) = f.Z;
  w.split.rightCols(w.n) = f.Z.conjugate();
  w.split_inv = w.split.partialPivLu().inverse();
  w.omega0 = h.J().transpose() * h.g();
  w.omega0_lu = Eigen::PartialPivLU<Eigen::MatrixXd>(w.omega0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.g());
  w.q0 = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
  w.center = check_structure(h.algebra()).center_basis;
  return w;
}

Eigen::MatrixXd rho11_matrix_for_bracket(const Workspace& w, const LieAlgebra& mu) {
  // Eq-(1) Ricci values against the frozen background frame, then (1,1)-part
  const int d = w.dim;
  Eigen::VectorXcd s = Eigen::VectorXcd::Zero(d);
  for (int r = 0; r < w.n; ++r)
    s += mu.bracket(Eigen::VectorXcd(w.frame.col(r)), Eigen::VectorXcd(w.frame.col(r).conjugate()));
  const Eigen::VectorXcd gs = w.g0.cast<Complex>() * s;
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const Complex v = kI * (mu.ad(i).col(j).cast<Complex>().transpose() * gs)(0, 0);
      rho(i, j) = v.real();
      rho(j, i) = -v.real();
    }
  return 0.5 * (rho + w.j.transpose() * rho * w.j);
}

// (p-part)-selected pullback helpers used by the sample diagnostics
double skt_residual_raw(const Workspace& w, const LieAlgebra& a, const Eigen::MatrixXd& g) {
  const Form omega = matrix_two_form(w.j.transpose() * g);
  const Form domega = ce_differential(a, omega);
  const Form dframed = pullback(domega, w.split, FormBasis::Frame);
  Form delbar(w.dim, 3, FormBasis::Frame);
  const auto& t3 = dframed.tuples();
  for (int r = 0; r < t3.size(); ++r) {
    const Complex c = dframed.coeffs()(r);
    if (c == 0.0) continue;
    const auto t = t3.tuple(r);
    int p = 0;
    for (int x : t)
      if (x < w.n) ++p;
    if (p == 1) delbar.coeffs()(r) = c;
  }
  const Form delbar_real = pullback(delbar, w.split_inv, FormBasis::Real);
  const Form dd = ce_differential(a, delbar_real);
  const Form ddframed = pullback(dd, w.split, FormBasis::Frame);
  Form dd22(w.dim, 4, FormBasis::Frame);
  const auto& t4 = ddframed.tuples();
  for (int r = 0; r < t4.size(); ++r) {
    const Complex c = ddframed.coeffs()(r);
    if (c == 0.0) continue;
    const auto t = t4.tuple(r);
    int p = 0;
    for (int x : t)
      if (x < w.n) ++p;
    if (p == 2) dd22.coeffs()(r) = c;
  }
  return norm_g(pullback(dd22, w.split_inv, FormBasis::Real), g);
}

double max_p_eigenvalue_raw(const Eigen::MatrixXd& rho11, const Eigen::MatrixXd& j,
                            const Eigen::MatrixXd& g) {
  Eigen::MatrixXd b = rho11 * j;
  b = 0.5 * (b + b.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::MatrixXd m =
      l.triangularView<Eigen::Lower>()
          .solve(Eigen::MatrixXd(l.triangularView<Eigen::Lower>().solve(b).transpose()))
          .transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().maxCoeff();
}

double norm_mu_sq_raw(const Workspace& w, const LieAlgebra& mu) {
  double total = 0.0;
  for (int r = 0; r < w.dim; ++r)
    for (int s = r + 1; s < w.dim; ++s) {
      const Eigen::VectorXd b = mu.bracket(Eigen::VectorXd(w.q0.col(r)), Eigen::VectorXd(w.q0.col(s)));
      total += b.dot(w.g0 * b);
    }
  return total;
}

double nijenhuis_raw(const LieAlgebra& a, const Eigen::MatrixXd& j) {
  const int d = a.dim();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  double nmax = 0.0;
  for (int i = 0; i < d; ++i)
    for (int jj = i + 1; jj < d; ++jj) {
      const Eigen::VectorXd n = a.bracket(Eigen::VectorXd(j.col(i)), Eigen::VectorXd(j.col(jj))) -
                                j * a.bracket(Eigen::VectorXd(j.col(i)), Eigen::VectorXd(id.col(jj))) -
                                j * a.bracket(Eigen::VectorXd(id.col(i)), Eigen::VectorXd(j.col(jj))) -
                                a.ad(i).col(jj);
      nmax = std::max(nmax, n.cwiseAbs().maxCoeff());
    }
  return nmax;
}

Eigen::MatrixXd rho11_matrix_for_metric(const Workspace& w, const Eigen::MatrixXd& g) {
  // rho_general against a frame of (J, g), built without structure revalidation
  const int d = w.dim;
  const Eigen::MatrixXd& j = w.j;
  const LieAlgebra& a = w.h0->algebra();
  // Gram-Schmidt frame for the current metric
  Eigen::MatrixXcd z(d, w.n);
  int found = 0;
  for (int k = 0; k < d && found < w.n; ++k) {
    Eigen::VectorXcd cand =
        0.5 * (Eigen::VectorXd::Unit(d, k).cast<Complex>() - kI * j.col(k).cast<Complex>());
    for (int pass = 0; pass < 2; ++pass)
      for (int r = 0; r < found; ++r)
        cand -= hermitian_pairing(g, cand, z.col(r)) * z.col(r);
    const double nn = std::sqrt(std::abs(hermitian_pairing(g, cand, cand)));
    if (nn > 1e-8) z.col(found++) = cand / nn;
  }
  if (found != w.n) throw std::runtime_error("flow frame: degenerate metric");
  const Eigen::MatrixXcd gc = g.cast<Complex>();
  const Eigen::MatrixXcd jc = j.cast<Complex>();
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int jj = i + 1; jj < d; ++jj) {
      const Eigen::VectorXcd v = a.ad(i).col(jj).cast<Complex>();
      const Eigen::VectorXcd v10 = 0.5 * (v - kI * (jc * v));
      const Eigen::VectorXcd v01 = 0.5 * (v + kI * (jc * v));
      Complex tot = 0.0;
      for (int r = 0; r < w.n; ++r) {
        const Eigen::VectorXcd zr = z.col(r);
        const Eigen::VectorXcd zbr = z.col(r).conjugate();
        tot += (a.bracket(v10, zr).transpose() * gc * zbr)(0, 0) -
               (a.bracket(v01, zbr).transpose() * gc * zr)(0, 0) -
               (v.transpose() * gc * a.bracket(zr, zbr))(0, 0);
      }
      const Complex val = -kI * tot;
      rho(i, jj) = val.real();
      rho(jj, i) = -val.real();
    }
  return 0.5 * (rho + j.transpose() * rho * j);
}

// ---- symmetric-matrix packing ----
int sym_size(int d) { return d * (d + 1) / 2; }

void pack_sym(const Eigen::MatrixXd& g, Eigen::Ref<Eigen::VectorXd> out) {
  int w = 0;
  for (int i = 0; i < g.rows(); ++i)
    for (int j = i; j < g.cols(); ++j) out(w++) = g(i, j);
}

Eigen::MatrixXd unpack_sym(int d, const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::MatrixXd g(d, d);
  int w = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      g(i, j) = v(w);
      g(j, i) = v(w);
      ++w;
    }
  return g;
}

// ---- embedded Dormand-Prince 5(4) with PI step control ----
struct OdeResult {
  bool blowup = false;
  bool rhs_failure = false;
};

struct Dopri5 {
  double rtol, atol, min_step;
  std::function<bool(const Eigen::VectorXd&, Eigen::VectorXd&)> rhs;
  // callback on each accepted step; returning false aborts the run
  std::function<bool(double, const Eigen::VectorXd&, bool)> on_accept;

  OdeResult run(Eigen::VectorXd y, double t0, double t_end, const std::vector<double>& grid) {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    OdeResult res;
    const Eigen::Index nn = y.size();
    Eigen::VectorXd k1(nn), k2(nn), k3(nn), k4(nn), k5(nn), k6(nn), k7(nn), ytmp(nn), y5(nn);
    if (!rhs(y, k1)) {
      res.rhs_failure = true;
      return res;
    }
    double t = t0;
    std::size_t gi = 0;
    while (gi < grid.size() && grid[gi] <= t + 1e-15 * std::max(1.0, std::abs(t))) ++gi;
    double h = std::min((t_end - t0) / 20.0, 0.01 * (y.norm() + 1.0) / (k1.norm() + 1.0));
    h = std::max(h, min_step);
    double err_prev = 1.0;
    while (t < t_end) {
      bool clamped = false;
      double target = t_end;
      if (gi < grid.size()) target = std::min(target, grid[gi]);
      if (t + h >= target) {
        h = target - t;
        clamped = true;
      }
      ytmp = y + h * a21 * k1;
      if (!rhs(ytmp, k2)) { res.rhs_failure = true; return res; }
      ytmp = y + h * (a31 * k1 + a32 * k2);
      if (!rhs(ytmp, k3)) { res.rhs_failure = true; return res; }
      ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      if (!rhs(ytmp, k4)) { res.rhs_failure = true; return res; }
      ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      if (!rhs(ytmp, k5)) { res.rhs_failure = true; return res; }
      ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      if (!rhs(ytmp, k6)) { res.rhs_failure = true; return res; }
      y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      if (!rhs(y5, k7)) { res.rhs_failure = true; return res; }

      const Eigen::VectorXd errv =
          h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      double err = 0.0;
      for (Eigen::Index i = 0; i < nn; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y(i)), std::abs(y5(i)));
        const double q = errv(i) / sc;
        err += q * q;
      }
      err = std::sqrt(err / static_cast<double>(nn));

      if (err <= 1.0) {
        const double t_new = clamped ? target : t + h;
        t = t_new;
        y = y5;
        k1 = k7;  // FSAL
        bool on_grid = false;
        if (gi < grid.size() && clamped && target == grid[gi]) {
          on_grid = true;
          ++gi;
        }
        if (!on_accept(t, y, on_grid)) {
          res.rhs_failure = true;
          return res;
        }
        const double fac =
            std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.17) * std::pow(err_prev, 0.04),
                       0.2, 6.0);
        err_prev = std::max(err, 1e-10);
        h = std::max(h * fac, min_step);
      } else {
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        if (h < min_step) {
          res.blowup = true;
          return res;
        }
      }
    }
    return res;
  }
};

}  // namespace

Eigen::MatrixXd P_omega(const HermitianStructure& h) {
  return P_omega(h, rho_general(h).rho);
}

Eigen::MatrixXd P_omega(const HermitianStructure& h, const Form& rho) {
  const Eigen::MatrixXd r11 = two_form_matrix(rho_11(h, rho));
  const Eigen::MatrixXd omega = h.J().transpose() * h.g();
  return omega.partialPivLu().solve(r11);
}

Eigen::MatrixXd P_lambda(const LieAlgebra& mu, const HermitianStructure& background) {
  if (mu.dim() != background.dim()) throw std::invalid_argument("P_lambda: dimension mismatch");
  const Workspace w = make_workspace(background);
  return w.omega0_lu.solve(rho11_matrix_for_bracket(w, mu));
}

Eigen::MatrixXd pcf_rhs(const HermitianStructure& h) {
  const Eigen::MatrixXd r11 = two_form_matrix(rho_11(h, rho_general(h).rho));
  return h.J().transpose() * r11;
}

Eigen::VectorXd bracket_rhs(const LieAlgebra& mu, const HermitianStructure& background) {
  const Eigen::MatrixXd p = P_lambda(mu, background);
  const int d = mu.dim();
  const TupleTable pairs(d, 2);
  Eigen::VectorXd out(static_cast<Eigen::Index>(pairs.size()) * d);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  for (int r = 0; r < pairs.size(); ++r) {
    const auto t = pairs.tuple(r);
    const Eigen::VectorXd dmu = 0.5 * (mu.bracket(Eigen::VectorXd(p.col(t[0])), Eigen::VectorXd(id.col(t[1]))) +
                                       mu.bracket(Eigen::VectorXd(id.col(t[0])), Eigen::VectorXd(p.col(t[1]))));
    out.segment(static_cast<Eigen::Index>(r) * d, d) = dmu;
  }
  return out;
}

Eigen::MatrixXd transporter_rhs(const Eigen::MatrixXd& h, const Eigen::MatrixXd& p) {
  return -0.5 * h * p;
}

Trajectory integrate(const HermitianStructure& initial, FlowKind kind, double t_end,
                     const FlowControls& controls) {
  if (t_end <= 0) throw std::invalid_argument("integrate: t_end must be positive");
  const Workspace w = make_workspace(initial);
  const int d = w.dim;
  const TupleTable pairs(d, 2);
  const Eigen::Index mu_len = static_cast<Eigen::Index>(pairs.size()) * d;
  const Eigen::VectorXd mu0 = pack_mu(initial.algebra());

  Trajectory traj;
  traj.kind = kind;

  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(controls.grid_samples));
  for (int i = 1; i <= controls.grid_samples; ++i)
    grid.push_back(t_end * static_cast<double>(i) / controls.grid_samples);

  const double steady_scale = 1e-12;
  const double c_scale = std::max(initial.algebra().max_abs_constant(), 1e-300);

  // state layout: pcf = [sym(g), h], bracket = [mu, h]
  const Eigen::Index hs = static_cast<Eigen::Index>(d) * d;
  Eigen::VectorXd y0;
  std::function<bool(const Eigen::VectorXd&, Eigen::VectorXd&)> rhs;

  if (kind == FlowKind::Pcf) {
    y0.resize(sym_size(d) + hs);
    pack_sym(initial.g(), y0.head(sym_size(d)));
    Eigen::Map<Eigen::MatrixXd>(y0.data() + sym_size(d), d, d) = Eigen::MatrixXd::Identity(d, d);
    rhs = [&w, d](const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
      const Eigen::MatrixXd g = unpack_sym(d, y.head(sym_size(d)));
      Eigen::MatrixXd r11;
      try {
        r11 = rho11_matrix_for_metric(w, g);
      } catch (const std::exception&) {
        return false;
      }
      const Eigen::MatrixXd dg = w.j.transpose() * r11;
      const Eigen::MatrixXd p = (w.j.transpose() * g).partialPivLu().solve(r11);
      const Eigen::MatrixXd h = Eigen::Map<const Eigen::MatrixXd>(y.data() + sym_size(d), d, d);
      dy.resize(y.size());
      pack_sym(0.5 * (dg + dg.transpose()), dy.head(sym_size(d)));
      Eigen::Map<Eigen::MatrixXd>(dy.data() + sym_size(d), d, d) = -0.5 * h * p;
      return true;
    };
  } else {
    y0.resize(mu_len + hs);
    y0.head(mu_len) = mu0;
    Eigen::Map<Eigen::MatrixXd>(y0.data() + mu_len, d, d) = Eigen::MatrixXd::Identity(d, d);
    rhs = [&w, d, mu_len](const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
      const LieAlgebra mu = unpack_mu(d, y.head(mu_len));
      const Eigen::MatrixXd r11 = rho11_matrix_for_bracket(w, mu);
      const Eigen::MatrixXd p = w.omega0_lu.solve(r11);
      const TupleTable prs(d, 2);
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
      dy.resize(y.size());
      for (int r = 0; r < prs.size(); ++r) {
        const auto t = prs.tuple(r);
        dy.segment(static_cast<Eigen::Index>(r) * d, d) =
            0.5 * (mu.bracket(Eigen::VectorXd(p.col(t[0])), Eigen::VectorXd(id.col(t[1]))) +
                   mu.bracket(Eigen::VectorXd(id.col(t[0])), Eigen::VectorXd(p.col(t[1]))));
      }
      const Eigen::MatrixXd h = Eigen::Map<const Eigen::MatrixXd>(y.data() + mu_len, d, d);
      Eigen::Map<Eigen::MatrixXd>(dy.data() + mu_len, d, d) = -0.5 * p * h;
      return true;
    };
  }

  const double norm_mu0 = norm_mu_sq_raw(w, initial.algebra());
  const bool initially_skt = skt_check(initial).is_skt;

  auto record = [&](double t, const Eigen::VectorXd& y, bool on_grid) {
    FlowSample s;
    s.t = t;
    s.on_grid = on_grid;
    if (kind == FlowKind::Pcf) {
      s.g = unpack_sym(d, y.head(sym_size(d)));
      s.mu = mu0;
      s.h = Eigen::Map<const Eigen::MatrixXd>(y.data() + sym_size(d), d, d);
      s.norm_mu_sq = norm_mu0;
      s.skt_residual = skt_residual_raw(w, initial.algebra(), s.g);
      try {
        s.max_p_eigenvalue = max_p_eigenvalue_raw(rho11_matrix_for_metric(w, s.g), w.j, s.g);
      } catch (const std::exception&) {
        s.max_p_eigenvalue = std::numeric_limits<double>::quiet_NaN();
      }
    } else {
      s.mu = y.head(mu_len);
      s.g = w.g0;
      s.h = Eigen::Map<const Eigen::MatrixXd>(y.data() + mu_len, d, d);
      const LieAlgebra mu = unpack_mu(d, s.mu);
      s.norm_mu_sq = norm_mu_sq_raw(w, mu);
      s.skt_residual = skt_residual_raw(w, mu, w.g0);
      s.max_p_eigenvalue = max_p_eigenvalue_raw(rho11_matrix_for_bracket(w, mu), w.j, w.g0);
    }
    traj.samples.push_back(std::move(s));
    return traj.samples.back();
  };

  // initial sample
  record(0.0, y0, false);

  Dopri5 stepper;
  stepper.rtol = controls.rtol;
  stepper.atol = controls.atol;
  stepper.min_step = controls.min_step;
  stepper.rhs = rhs;
  stepper.on_accept = [&](double t, const Eigen::VectorXd& y, bool on_grid) {
    const FlowSample& s = record(t, y, on_grid);
    // structure drift
    double drift = 0.0;
    if (kind == FlowKind::Pcf) {
      const Eigen::MatrixXd proj = 0.5 * (s.g + w.j.transpose() * s.g * w.j);
      drift = (proj - s.g).cwiseAbs().maxCoeff() / std::max(s.g.cwiseAbs().maxCoeff(), 1e-300);
      Eigen::LLT<Eigen::MatrixXd> llt(s.g);
      if (llt.info() != Eigen::Success) {
        traj.aborted = true;
        traj.abort_reason = "metric lost positive definiteness";
        return false;
      }
    } else {
      const LieAlgebra mu = unpack_mu(d, s.mu);
      const double sc = std::max(mu.max_abs_constant(), 1e-300);
      const StructureReport sr = check_structure(mu);
      drift = std::max(sr.two_step_residual / sc, nijenhuis_raw(mu, w.j) / sc);
      if (initially_skt) {
        const double skt_scale = std::pow(sc * w.h0->g_scale(), 3);
        drift = std::max(drift, s.skt_residual / std::max(skt_scale, 1e-300) * 1e-3);
      }
    }
    traj.max_drift_seen = std::max(traj.max_drift_seen, drift);
    if (drift > controls.max_drift) {
      traj.aborted = true;
      traj.abort_reason = "structure invariant drift above tolerance";
      return false;
    }
    // steady-state detector
    Eigen::VectorXd dy;
    if (stepper.rhs(y, dy) && dy.norm() <= steady_scale * (y.norm() + 1.0) * std::max(c_scale, 1.0))
      traj.steady = true;
    return true;
  };

  const OdeResult res = stepper.run(y0, 0.0, t_end, grid);
  traj.blowup = res.blowup;
  if (res.rhs_failure && !traj.aborted) {
    traj.aborted = true;
    if (traj.abort_reason.empty()) traj.abort_reason = "right-hand side evaluation failed";
  }
  return traj;
}

EquivalenceReport check_equivalence(const Trajectory& pcf, const Trajectory& bracket,
                                    const HermitianStructure& initial, double tol) {
  if (pcf.kind != FlowKind::Pcf || bracket.kind != FlowKind::Bracket)
    throw std::invalid_argument("check_equivalence: expects (pcf, bracket) trajectories");
  const Workspace w = make_workspace(initial);
  const int d = w.dim;
  const Eigen::MatrixXd omega0 = w.omega0;
  const double omega_scale = omega0.cwiseAbs().maxCoeff();
  const double mu_scale = std::max(initial.algebra().max_abs_constant(), 1e-300);
  EquivalenceReport rep;

  // match grid samples by time
  std::size_t ib = 0;
  for (const FlowSample& sp : pcf.samples) {
    if (!sp.on_grid) continue;
    while (ib < bracket.samples.size() &&
           (!bracket.samples[ib].on_grid || bracket.samples[ib].t < sp.t - 1e-12))
      ++ib;
    if (ib >= bracket.samples.size()) break;
    const FlowSample& sb = bracket.samples[ib];
    if (std::abs(sb.t - sp.t) > 1e-9 * std::max(1.0, sp.t)) continue;
    ++rep.compared_samples;

    // omega_t(X,Y) = omega0(h X, h Y), transporter from the bracket run
    const Eigen::MatrixXd omega_t = w.j.transpose() * sp.g;
    const Eigen::MatrixXd omega_rec = sb.h.transpose() * omega0 * sb.h;
    rep.max_omega_deviation = std::max(
        rep.max_omega_deviation, (omega_rec - omega_t).cwiseAbs().maxCoeff() / omega_scale);

    // mu_t(X,Y) = h mu0(h^-1 X, h^-1 Y), transporter from the pcf run
    const Eigen::MatrixXd hinv = sp.h.partialPivLu().inverse();
    const LieAlgebra mu_t = unpack_mu(d, sb.mu);
    const TupleTable prs(d, 2);
    for (int r = 0; r < prs.size(); ++r) {
      const auto t = prs.tuple(r);
      const Eigen::VectorXd rec =
          sp.h * initial.algebra().bracket(Eigen::VectorXd(hinv.col(t[0])), Eigen::VectorXd(hinv.col(t[1])));
      const Eigen::VectorXd diff = rec - mu_t.ad(t[0]).col(t[1]);
      rep.max_mu_deviation =
          std::max(rep.max_mu_deviation, diff.cwiseAbs().maxCoeff() / mu_scale);
    }

    // center rows of g_t and of h_t stay fixed
    for (int c = 0; c < w.center.cols(); ++c) {
      const Eigen::VectorXd x = w.center.col(c);
      rep.max_center_deviation = std::max(
          rep.max_center_deviation,
          ((sp.g - w.g0) * x).cwiseAbs().maxCoeff() / std::max(w.g0.cwiseAbs().maxCoeff(), 1e-300));
      rep.max_center_deviation =
          std::max(rep.max_center_deviation,
                   ((sp.h - Eigen::MatrixXd::Identity(d, d)) * x).cwiseAbs().maxCoeff());
      rep.max_center_deviation =
          std::max(rep.max_center_deviation,
                   ((sb.h - Eigen::MatrixXd::Identity(d, d)) * x).cwiseAbs().maxCoeff());
    }
  }
  if (rep.compared_samples == 0)
    throw std::invalid_argument("check_equivalence: trajectories share no sample times");
  rep.pass = std::max({rep.max_omega_deviation, rep.max_mu_deviation}) <= tol;
  return rep;
}

double monotonicity_derivative(const LieAlgebra& mu, const HermitianStructure& background) {
  const Workspace w = make_workspace(background);
  const Eigen::MatrixXd p = w.omega0_lu.solve(rho11_matrix_for_bracket(w, mu));
  double total = 0.0;
  for (int r = 0; r < w.dim; ++r)
    for (int s = 0; s < w.dim; ++s) {
      if (r == s) continue;
      const Eigen::VectorXd b1 = mu.bracket(Eigen::VectorXd(p * w.q0.col(r)), Eigen::VectorXd(w.q0.col(s)));
      const Eigen::VectorXd b2 = mu.bracket(Eigen::VectorXd(w.q0.col(r)), Eigen::VectorXd(w.q0.col(s)));
      total += b1.dot(w.g0 * b2);
    }
  return 2.0 * total;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  if (traj.samples.empty()) return;
  const int d = static_cast<int>(traj.samples.front().g.rows());
  const TupleTable prs(d, 2);
  out << "t";
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) out << ",g_" << (i + 1) << "_" << (j + 1);
  for (int r = 0; r < prs.size(); ++r) {
    const auto t = prs.tuple(r);
    for (int k = 0; k < d; ++k)
      out << ",mu_" << (t[0] + 1) << "_" << (t[1] + 1) << "_" << (k + 1);
  }
  out << ",norm_mu_sq,skt_residual,max_P_eig\n";
  for (const FlowSample& s : traj.samples) {
    out << format_double(s.t);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) out << "," << format_double(s.g(i, j));
    for (Eigen::Index i = 0; i < s.mu.size(); ++i) out << "," << format_double(s.mu(i));
    out << "," << format_double(s.norm_mu_sq) << "," << format_double(s.skt_residual) << ","
        << format_double(s.max_p_eigenvalue) << "\n";
  }
}

}  // namespace sktflow
