#include "sktflow/catalog.hpp"

#include <stdexcept>

namespace sktflow {

namespace {

Eigen::MatrixXd block_j(int dim) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(dim, dim);
  for (int a = 0; a + 1 < dim; a += 2) {
    j(a + 1, a) = 1.0;   // J e_{a} = e_{a+1}
    j(a, a + 1) = -1.0;
  }
  return j;
}

}  // namespace

InstanceSpec catalog(const std::string& name, int n) {
  if (name == "example1") {
    // de1 = 0, de2 = -e13, de3 = e12, de4 = -e23  =>  [e1,e3] = e2,
    // [e1,e2] = -e3, [e2,e3] = e4  under d a(X,Y) = -a([X,Y])
    LieAlgebra a(4, {{0, 2, 1, 1.0}, {0, 1, 2, -1.0}, {1, 2, 3, 1.0}});
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(4, 4);
    // orientation of J fixed by the Ricci regression suite (see tests):
    // J e1 = -e4, J e2 = -e3
    j(3, 0) = -1.0;
    j(2, 1) = -1.0;
    j(1, 2) = 1.0;
    j(0, 3) = 1.0;
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(4, 4);
    g(0, 2) = g(2, 0) = 0.5;
    g(1, 3) = g(3, 1) = -0.5;
    return {"example1", a, j, g, "paper"};
  }
  if (name == "example2") {
    // de4 = e12, de5 = -e23, de6 = e13
    LieAlgebra a(6, {{0, 1, 3, -1.0}, {1, 2, 4, 1.0}, {0, 2, 5, -1.0}});
    Eigen::MatrixXd j = block_j(6);  // J e1 = e2, J e3 = e4, J e5 = e6
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(6, 6);
    g(2, 5) = g(5, 2) = 0.5;
    g(3, 4) = g(4, 3) = -0.5;
    return {"example2", a, j, g, "paper"};
  }
  if (name == "kt4") {
    // de4 = e12
    LieAlgebra a(4, {{0, 1, 3, -1.0}});
    return {"kt4", a, block_j(4), Eigen::MatrixXd::Identity(4, 4), "derived"};
  }
  if (name == "abelian2n") {
    if (n < 1) throw std::invalid_argument("catalog: abelian2n needs n >= 1");
    const int dim = 2 * n;
    return {"abelian2n", LieAlgebra::abelian(dim), block_j(dim),
            Eigen::MatrixXd::Identity(dim, dim), "derived"};
  }
  throw std::invalid_argument("catalog: unknown instance '" + name + "'");
}

std::vector<std::string> catalog_names() {
  return {"example1", "example2", "kt4", "abelian2n"};
}

}  // namespace sktflow
