#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "sktflow/catalog.hpp"
#include "sktflow/flow.hpp"
#include "sktflow/generator.hpp"

using namespace sktflow;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

HermitianStructure make(const char* name, int n = 3) {
  const InstanceSpec s = catalog(name, n);
  return HermitianStructure(s.algebra, s.J, s.g);
}

const FlowSample* sample_at(const Trajectory& t, double time) {
  for (const auto& s : t.samples)
    if (s.on_grid && std::abs(s.t - time) < 1e-9) return &s;
  return nullptr;
}

}  // namespace

TEST_CASE("P_omega: abelian zero, kt4 diag(-1,-1,0,0)") {
  CHECK(P_omega(make("abelian2n")).cwiseAbs().maxCoeff() < 1e-14);
  const MatrixXd p = P_omega(make("kt4"));
  MatrixXd expect = MatrixXd::Zero(4, 4);
  expect(0, 0) = expect(1, 1) = -1.0;
  CHECK((p - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("P commutes with J") {
  for (const char* name : {"example1", "example2", "kt4"}) {
    const HermitianStructure h = make(name);
    const MatrixXd p = P_omega(h);
    const double scale = std::max(p.cwiseAbs().maxCoeff(), 1e-300);
    CHECK((p * h.J() - h.J() * p).cwiseAbs().maxCoeff() < 1e-9 * scale);
  }
}

TEST_CASE("P_lambda coincides with P_omega at the initial bracket") {
  const HermitianStructure h = make("kt4");
  const MatrixXd pl = P_lambda(h.algebra(), h);
  CHECK((pl - P_omega(h)).cwiseAbs().maxCoeff() < 1e-12);
  // lambda = 0 gives zero
  CHECK(P_lambda(LieAlgebra::abelian(4), h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pcf_rhs: kt4 closed form da/dt = b/a, abelian stationary, center rows zero") {
  const MatrixXd dg = pcf_rhs(make("kt4"));
  MatrixXd expect = MatrixXd::Zero(4, 4);
  expect(0, 0) = expect(1, 1) = 1.0;  // da/dt = b/a = 1 at a = b = 1
  CHECK((dg - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(pcf_rhs(make("abelian2n")).cwiseAbs().maxCoeff() < 1e-14);

  const auto spec = generate_skt_instance(4, 2, 3);
  REQUIRE(spec.has_value());
  const HermitianStructure h(spec->algebra, spec->J, spec->g);
  const MatrixXd rhs = pcf_rhs(h);
  CHECK((rhs - rhs.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  // J-Hermitian
  CHECK((h.J().transpose() * rhs * h.J() - rhs).cwiseAbs().maxCoeff() <
        1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
  const auto sr = check_structure(spec->algebra);
  for (int c = 0; c < sr.center_basis.cols(); ++c)
    CHECK((rhs * sr.center_basis.col(c)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("bracket_rhs: kt4 at t = 0 gives dmu(e1,e2) = +e4") {
  const HermitianStructure h = make("kt4");
  const VectorXd rhs = bracket_rhs(h.algebra(), h);
  const LieAlgebra dmu = unpack_mu(4, rhs);
  VectorXd expect = VectorXd::Zero(4);
  expect(3) = 1.0;  // [e1,e2] = -e4, P = -I on span(e1,e2): -mu(e1,e2) = +e4
  CHECK((dmu.ad(0).col(1) - expect).cwiseAbs().maxCoeff() < 1e-12);
  // zero bracket is a fixed point
  CHECK(bracket_rhs(LieAlgebra::abelian(4), h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transporter rhs shape") {
  const MatrixXd h = MatrixXd::Identity(4, 4);
  MatrixXd p = MatrixXd::Zero(4, 4);
  p(0, 0) = p(1, 1) = -1.0;
  const MatrixXd dh = transporter_rhs(h, p);
  CHECK(dh(0, 0) == doctest::Approx(0.5));
  CHECK(dh(2, 2) == 0.0);
}

TEST_CASE("kt4 pluriclosed flow reproduces a(t) = sqrt(1+2t)") {
  const HermitianStructure h = make("kt4");
  FlowControls c;
  c.grid_samples = 10;
  const Trajectory traj = integrate(h, FlowKind::Pcf, 10.0, c);
  CHECK_FALSE(traj.blowup);
  CHECK_FALSE(traj.aborted);
  for (double t : {1.0, 5.0, 10.0}) {
    const FlowSample* s = sample_at(traj, t);
    REQUIRE(s != nullptr);
    const double a_exact = std::sqrt(1.0 + 2.0 * t);
    CHECK(std::abs(s->g(0, 0) - a_exact) / a_exact < 1e-6);
    CHECK(std::abs(s->g(1, 1) - a_exact) / a_exact < 1e-6);
    CHECK(std::abs(s->g(2, 2) - 1.0) < 1e-8);
    CHECK(std::abs(s->g(0, 1)) < 1e-8);
    // transporter: diag(s, s, 1, 1) with s = (1+2t)^{1/4}
    const double s_exact = std::pow(1.0 + 2.0 * t, 0.25);
    CHECK(std::abs(s->h(0, 0) - s_exact) / s_exact < 1e-6);
    CHECK(std::abs(s->h(2, 2) - 1.0) < 1e-8);
    // SKT preserved along the run
    CHECK(s->skt_residual < 1e-8);
    CHECK(s->max_p_eigenvalue < 1e-8);
  }
}

TEST_CASE("kt4 bracket flow reproduces mu(t) = mu0 / sqrt(1+2t)") {
  const HermitianStructure h = make("kt4");
  FlowControls c;
  c.grid_samples = 10;
  const Trajectory traj = integrate(h, FlowKind::Bracket, 10.0, c);
  CHECK_FALSE(traj.blowup);
  for (double t : {1.0, 10.0}) {
    const FlowSample* s = sample_at(traj, t);
    REQUIRE(s != nullptr);
    const LieAlgebra mu = unpack_mu(4, s->mu);
    const double expect = -1.0 / std::sqrt(1.0 + 2.0 * t);
    CHECK(std::abs(mu.c(0, 1, 3) - expect) < 1e-6);
    CHECK(std::abs(s->norm_mu_sq - 1.0 / (1.0 + 2.0 * t)) < 1e-6);
  }
  // norm_mu_sq nonincreasing at every accepted step
  for (std::size_t i = 1; i < traj.samples.size(); ++i)
    CHECK(traj.samples[i].norm_mu_sq <= traj.samples[i - 1].norm_mu_sq + 1e-12);
}

TEST_CASE("abelian trajectories are constant and flagged steady") {
  const HermitianStructure h = make("abelian2n", 2);
  for (FlowKind k : {FlowKind::Pcf, FlowKind::Bracket}) {
    const Trajectory traj = integrate(h, k, 5.0);
    CHECK(traj.steady);
    for (const auto& s : traj.samples) {
      CHECK((s.g - h.g()).cwiseAbs().maxCoeff() == 0.0);
      CHECK((s.h - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("check_equivalence on kt4 over [0, 10]") {
  const HermitianStructure h = make("kt4");
  FlowControls c;
  c.grid_samples = 20;
  const Trajectory tp = integrate(h, FlowKind::Pcf, 10.0, c);
  const Trajectory tb = integrate(h, FlowKind::Bracket, 10.0, c);
  const EquivalenceReport rep = check_equivalence(tp, tb, h, 1e-5);
  CHECK(rep.compared_samples == 20);
  CHECK(rep.pass);
  CHECK(rep.max_omega_deviation < 1e-6);
  CHECK(rep.max_mu_deviation < 1e-6);
  CHECK(rep.max_center_deviation < 1e-8);
}

TEST_CASE("check_equivalence requires matching kinds and shared grids") {
  const HermitianStructure h = make("kt4");
  FlowControls c;
  c.grid_samples = 4;
  const Trajectory tp = integrate(h, FlowKind::Pcf, 1.0, c);
  const Trajectory tb = integrate(h, FlowKind::Bracket, 1.0, c);
  CHECK_THROWS_AS(check_equivalence(tb, tb, h, 1e-5), std::invalid_argument);
  FlowControls c2;
  c2.grid_samples = 3;
  const Trajectory tb2 = integrate(h, FlowKind::Bracket, 2.0, c2);
  CHECK_THROWS_AS(check_equivalence(tp, tb2, h, 1e-5), std::invalid_argument);
}

TEST_CASE("monotonicity derivative: kt4 value -4 and the finite-difference oracle") {
  const HermitianStructure h = make("kt4");
  CHECK(monotonicity_derivative(h.algebra(), h) == doctest::Approx(-4.0).epsilon(1e-10));
  CHECK(monotonicity_derivative(LieAlgebra::abelian(4), h) == 0.0);

  // finite difference of the ordered-pair norm 2 * norm_mu_sq along the flow
  FlowControls c;
  c.grid_samples = 400;
  const Trajectory traj = integrate(h, FlowKind::Bracket, 2.0, c);
  for (std::size_t i = 10; i + 10 < traj.samples.size(); i += 40) {
    const auto& s0 = traj.samples[i - 1];
    const auto& s1 = traj.samples[i + 1];
    const auto& mid = traj.samples[i];
    const double fd = 2.0 * (s1.norm_mu_sq - s0.norm_mu_sq) / (s1.t - s0.t);
    const double md = monotonicity_derivative(unpack_mu(4, mid.mu), h);
    CHECK(md <= 1e-12);
    CHECK(std::abs(fd - md) < 1e-3 * std::max(1.0, std::abs(md)));
  }
}

TEST_CASE("global error tracks rtol at design order") {
  // at controller equilibrium the embedded 4(5) pair keeps the global error
  // proportional to rtol; two decades of rtol must buy at least ~1.5 decades
  const HermitianStructure h = make("kt4");
  auto err_at = [&](double rtol) {
    FlowControls c;
    c.rtol = rtol;
    c.atol = 1e-14;
    c.grid_samples = 5;
    const Trajectory t = integrate(h, FlowKind::Pcf, 5.0, c);
    double e = 0.0;
    for (const auto& s : t.samples)
      if (s.on_grid) e = std::max(e, std::abs(s.g(0, 0) - std::sqrt(1.0 + 2.0 * s.t)));
    return e;
  };
  const double coarse = err_at(1e-5);
  const double fine = err_at(1e-7);
  CHECK(fine * 30.0 <= coarse);
  CHECK(coarse < 1e-4);  // proportionality constant is O(1)
}

TEST_CASE("trajectory CSV layout") {
  const HermitianStructure h = make("kt4");
  FlowControls c;
  c.grid_samples = 2;
  const Trajectory traj = integrate(h, FlowKind::Pcf, 1.0, c);
  std::ostringstream os;
  write_trajectory_csv(traj, os);
  const std::string text = os.str();
  CHECK(text.find("t,g_1_1,") == 0);
  CHECK(text.find("mu_1_2_1") != std::string::npos);
  CHECK(text.find(",norm_mu_sq,skt_residual,max_P_eig\n") != std::string::npos);
  CHECK(text.find(';') == std::string::npos);
  // one row per sample plus header
  const auto rows = std::count(text.begin(), text.end(), '\n');
  CHECK(rows == static_cast<long>(traj.samples.size()) + 1);
}

TEST_CASE("generated instance: flows exist long-time, norm decays, equivalence holds") {
  const auto spec = generate_skt_instance(4, 2, 41);
  REQUIRE(spec.has_value());
  const HermitianStructure h(spec->algebra, spec->J, spec->g);
  FlowControls c;
  c.grid_samples = 10;
  const Trajectory tb = integrate(h, FlowKind::Bracket, 100.0, c);
  CHECK_FALSE(tb.blowup);
  CHECK_FALSE(tb.aborted);
  for (std::size_t i = 1; i < tb.samples.size(); ++i)
    CHECK(tb.samples[i].norm_mu_sq <= tb.samples[i - 1].norm_mu_sq + 1e-10);

  FlowControls c2;
  c2.grid_samples = 10;
  const Trajectory tp = integrate(h, FlowKind::Pcf, 5.0, c2);
  const Trajectory tb2 = integrate(h, FlowKind::Bracket, 5.0, c2);
  CHECK_FALSE(tp.blowup);
  const EquivalenceReport rep = check_equivalence(tp, tb2, h, 1e-5);
  CHECK(rep.pass);
  // SKT preservation along pcf: residual within 10x the validation bound
  const double bound = 1e-9 * std::pow(h.c_scale() * h.g_scale(), 3);
  for (const auto& s : tp.samples) CHECK(s.skt_residual <= 10.0 * std::max(bound, 1e-12));
}
