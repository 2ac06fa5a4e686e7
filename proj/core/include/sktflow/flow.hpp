#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "sktflow/bismut.hpp"
#include "sktflow/hermitian.hpp"

namespace sktflow {

enum class FlowKind { Pcf, Bracket };

struct FlowControls {
  double rtol = 1e-8;
  double atol = 1e-10;
  double min_step = 1e-12;
  double max_drift = 1e-6;  // structure-invariant drift abort threshold
  int grid_samples = 50;    // mandatory sample times t_end * i / grid_samples
};

/// One accepted integrator step. Both kinds carry the full state tuple:
/// the evolving half plus the frozen half of (g, mu), and the transporter h.
struct FlowSample {
  double t = 0.0;
  Eigen::MatrixXd g;
  Eigen::VectorXd mu;  // flattened bracket table, pack_mu layout
  Eigen::MatrixXd h;
  double norm_mu_sq = 0.0;     // sum_{i<j} g0(mu(e_i,e_j), mu(e_i,e_j)), g0-orthonormal frame
  double skt_residual = 0.0;
  double max_p_eigenvalue = 0.0;
  bool on_grid = false;
};

struct Trajectory {
  FlowKind kind = FlowKind::Pcf;
  std::vector<FlowSample> samples;
  bool blowup = false;
  bool steady = false;
  bool aborted = false;
  std::string abort_reason;
  double max_drift_seen = 0.0;
};

/// flattened i<j bracket coefficients (pair rank * dim + k)
Eigen::VectorXd pack_mu(const LieAlgebra& a);
LieAlgebra unpack_mu(int dim, const Eigen::VectorXd& mu);

/// P solving omega(P X, Y) = rho11(X, Y); commutes with J
Eigen::MatrixXd P_omega(const HermitianStructure& h);
Eigen::MatrixXd P_omega(const HermitianStructure& h, const Form& rho);

/// same defining relation with the bracket mu and the frozen (J, g, omega)
Eigen::MatrixXd P_lambda(const LieAlgebra& mu, const HermitianStructure& background);

/// metric-side PCF right-hand side: dg(X,Y)/dt = rho11(JX, Y)
Eigen::MatrixXd pcf_rhs(const HermitianStructure& h);

/// bracket flow rhs dmu(X,Y)/dt = (mu(P X, Y) + mu(X, P Y)) / 2, packed layout
Eigen::VectorXd bracket_rhs(const LieAlgebra& mu, const HermitianStructure& background);

/// dh/dt = -h P / 2
Eigen::MatrixXd transporter_rhs(const Eigen::MatrixXd& h, const Eigen::MatrixXd& p);

Trajectory integrate(const HermitianStructure& initial, FlowKind kind, double t_end,
                     const FlowControls& controls = {});

struct EquivalenceReport {
  bool pass = false;
  double max_omega_deviation = 0.0;   // pcf omega_t vs omega0(h., h.) from bracket run
  double max_mu_deviation = 0.0;      // bracket mu_t vs h mu0(h^-1., h^-1.) from pcf run
  double max_center_deviation = 0.0;  // center rows of g_t and h_t vs t = 0
  int compared_samples = 0;
};

/// compares the two formulations at shared grid times
EquivalenceReport check_equivalence(const Trajectory& pcf, const Trajectory& bracket,
                                    const HermitianStructure& initial, double tol);

/// d/dt g(mu_t, mu_t) over ordered pairs of a g-orthonormal frame
/// = 4 sum_{r<s} g(mu(P e_r, e_s), mu(e_r, e_s)); equals d/dt (2 norm_mu_sq)
double monotonicity_derivative(const LieAlgebra& mu, const HermitianStructure& background);

/// CSV: t, g upper triangle, mu (i<j, all k), norm_mu_sq, skt_residual, max_P_eig
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace sktflow
