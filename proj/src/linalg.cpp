#include "stochwave/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stochwave::numerics {

PsdFactorization factor_psd(const Eigen::MatrixXd& A, const JitterPolicy& policy) {
    if (A.rows() != A.cols() || A.rows() == 0)
        throw std::invalid_argument("factor_psd requires a non-empty square matrix");
    const double max_abs = A.cwiseAbs().maxCoeff();
    if (!std::isfinite(max_abs)) throw std::invalid_argument("factor_psd: matrix has non-finite entries");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * max_abs)
        throw std::invalid_argument("factor_psd: matrix is not symmetric");

    const int n = static_cast<int>(A.rows());
    double scale = A.diagonal().maxCoeff();
    if (!(scale > 0.0)) scale = max_abs > 0.0 ? max_abs : 1.0;

    std::vector<double> ladder{0.0};
    for (double rel = policy.initial_relative; rel <= policy.ceiling_relative * (1.0 + 1e-9);
         rel *= policy.growth)
        ladder.push_back(rel * scale);

    Eigen::MatrixXd work = A;
    for (double jitter : ladder) {
        work.diagonal() = A.diagonal().array() + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(work);
        if (llt.info() != Eigen::Success) continue;
        Eigen::MatrixXd L = llt.matrixL();
        if (!L.allFinite()) continue;
        return {std::move(L), jitter, n};
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    std::ostringstream msg;
    msg << "matrix not PSD within tolerance (jitter ceiling " << policy.ceiling_relative * scale
        << "); most negative pivot " << ldlt.vectorD().minCoeff();
    throw NumericsError(msg.str(), ldlt.vectorD().minCoeff());
}

double schur_conditional_variance(const Eigen::MatrixXd& C, const JitterPolicy& policy) {
    if (C.rows() != C.cols() || C.rows() == 0)
        throw std::invalid_argument("schur_conditional_variance requires a non-empty square matrix");
    const double c00 = C(0, 0);
    const Eigen::Index n = C.rows() - 1;
    if (n == 0) return c00;

    const PsdFactorization f = factor_psd(C.bottomRightCorner(n, n), policy);
    const Eigen::VectorXd y =
        f.lower_factor.triangularView<Eigen::Lower>().solve(C.col(0).tail(n));
    const double residual = c00 - y.squaredNorm();
    if (residual < -1e-9 * std::max(std::abs(c00), 1e-300)) {
        std::ostringstream msg;
        msg << "conditional variance " << residual << " is negative beyond tolerance";
        throw NumericsError(msg.str(), residual);
    }
    return std::max(residual, 0.0);
}

}  // namespace stochwave::numerics
