#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "sktflow/catalog.hpp"
#include "sktflow/lie_algebra.hpp"

namespace sktflow {

/// Random 2-step algebra: brackets of span(e_1..e_p) land in span(e_{p+1}..e_{p+q}),
/// entries uniform in [-1,1]. Jacobi holds identically.
LieAlgebra gen_two_step(int p, int q, std::uint64_t seed);

struct JSearchControls {
  int max_restarts = 30;
  int max_iterations = 300;     // L-BFGS iterations per restart
  double success_threshold = 1e-18;
};

struct JSearchResult {
  std::optional<Eigen::MatrixXd> J;
  double best_penalty = 0.0;
  int restarts_used = 0;
};

/// Minimizes F(J) = |J^2+I|_F^2 + |N_J|_F^2 by L-BFGS from seeded random
/// orthogonal starts, with a Levenberg-Marquardt polish; success iff F < 1e-18.
JSearchResult find_complex_structure(const LieAlgebra& a, std::uint64_t seed,
                                     const JSearchControls& controls = {});

struct SktMetricControls {
  int sample_attempts = 1000;
  double condition_cap = 100.0;
  double nullspace_tol = 1e-10;
  Eigen::MatrixXd hint;  // optional candidate metric, projected onto the null space first
};

struct SktMetricResult {
  std::optional<Eigen::MatrixXd> g;
  int nullspace_dim = 0;
};

/// Null space of the linear map g -> del delbar omega over J-Hermitian
/// symmetric matrices; samples seeded combinations until positive definite
/// with condition <= cap, spectrum rescaled into [0.1, 10].
SktMetricResult solve_skt_metrics(const LieAlgebra& a, const Eigen::MatrixXd& j,
                                  std::uint64_t seed, const SktMetricControls& controls = {});

/// Full pipeline with redraws; for q = 2 tries the pencil-adapted construction
/// first (bracket pencil normal form fixes J on both factors).
std::optional<InstanceSpec> generate_skt_instance(int p, int q, std::uint64_t seed,
                                                  int max_draws = 10);

/// pencil-adapted complex structure for q == 2 (real doubled-eigenvalue branch)
std::optional<Eigen::MatrixXd> pencil_adapted_J(const LieAlgebra& a, int p);

}  // namespace sktflow
