#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sktflow/lie_algebra.hpp"

namespace sktflow {

struct InstanceSpec {
  std::string name;
  LieAlgebra algebra;
  Eigen::MatrixXd J;
  Eigen::MatrixXd g;
  std::string provenance;  // "paper" | "derived" | "generated(seed)"
};

/// Built-in instances: example1, example2, kt4, abelian2n (n complex dims).
InstanceSpec catalog(const std::string& name, int n = 3);

std::vector<std::string> catalog_names();

}  // namespace sktflow
