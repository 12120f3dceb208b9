#include "b0spec/nnls.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "b0spec/errors.hpp"

namespace b0spec {

void require_full_column_rank(const Eigen::MatrixXd& A, const char* what) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < A.cols()) {
        throw SingularBasisError(std::string(what) + " has rank " + std::to_string(qr.rank()) + " < " +
                                 std::to_string(A.cols()) + " columns");
    }
}

NnlsResult nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter) {
    const Eigen::Index m = A.rows(), n = A.cols();
    if (b.size() != m) throw ShapeError("nnls: right-hand side length differs from row count");
    if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    Eigen::VectorXd w = A.transpose() * b;
    const double tol = 10.0 * static_cast<double>(std::max(m, n)) * std::numeric_limits<double>::epsilon() *
                       std::max(w.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());

    auto solve_passive = [&](Eigen::VectorXd& s) {
        std::vector<Eigen::Index> cols;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
        Eigen::MatrixXd Ap(m, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
        const Eigen::VectorXd sp = Ap.colPivHouseholderQr().solve(b);
        s.setZero(n);
        for (std::size_t k = 0; k < cols.size(); ++k) s(cols[k]) = sp(static_cast<Eigen::Index>(k));
    };

    int iter = 0;
    while (iter < max_iter) {
        Eigen::Index best = -1;
        double best_w = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
                best_w = w(j);
                best = j;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;

        Eigen::VectorXd s;
        for (;;) {
            ++iter;
            solve_passive(s);
            double alpha = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - s(j)));
            }
            if (!std::isfinite(alpha)) break;
            x += alpha * (s - x);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0.0;
                }
            }
            if (iter >= max_iter) break;
        }
        x = s;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)]) x(j) = 0.0;
        x = x.cwiseMax(0.0);
        w = A.transpose() * (b - A * x);
    }
    NnlsResult r;
    r.x = x;
    r.residual_norm = (A * x - b).norm();
    r.iterations = iter;
    return r;
}

}  // namespace b0spec
