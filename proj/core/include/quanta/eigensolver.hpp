#pragma once

#include <Eigen/Dense>

namespace quanta::linalg {

struct SymmetricEigenResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, matching order
  int ql_iterations = 0;         // total implicit-QL sweeps across eigenvalues
};

// Dense symmetric eigendecomposition: Householder reduction to tridiagonal
// form followed by the implicit-shift QL algorithm with eigenvector
// accumulation (EISPACK tred2/tql2 lineage). Throws if any eigenvalue fails
// to converge within the iteration cap; the message carries the iteration
// diagnostics.
SymmetricEigenResult symmetric_eigen(const Eigen::MatrixXd& a);

}  // namespace quanta::linalg
