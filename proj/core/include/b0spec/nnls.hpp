#pragma once

#include <Eigen/Dense>

namespace b0spec {

struct NnlsResult {
    Eigen::VectorXd x;
    double residual_norm = 0.0;
    int iterations = 0;
};

/// Lawson–Hanson active-set solution of min ‖Ax − b‖ subject to x ≥ 0.
NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter = 0);

/// Throws SingularBasisError if the columns of A are linearly dependent.
void require_full_column_rank(const Eigen::MatrixXd& A, const char* what);

}  // namespace b0spec
