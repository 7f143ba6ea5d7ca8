#pragma once

#include "diffnet/common.hpp"

namespace diffnet {

/**
 * Two-sample KLIEP problem: sufficient statistics of the x-sample (numerator
 * density) and of the y-sample (reference density), one row per observation
 * and one column per edge.
 */
class KliepProblem {
public:
    KliepProblem(Matrix psi_x, Matrix psi_y);

    const Matrix& psi_x() const { return psi_x_; }
    const Matrix& psi_y() const { return psi_y_; }

    /// Column means of psi_x (divisor n_x).
    const Vector& mean_x() const { return mean_x_; }

    int n_x() const { return static_cast<int>(psi_x_.rows()); }
    int n_y() const { return static_cast<int>(psi_y_.rows()); }
    int n() const { return n_x() + n_y(); }
    int dim() const { return static_cast<int>(psi_x_.cols()); }

private:
    Matrix psi_x_;
    Matrix psi_y_;
    Vector mean_x_;
};

/// Empirical density ratio at a parameter value. mean(rhat) == 1.
struct RatioState {
    double log_zhat = 0.0;
    Vector rhat;
    Vector muhat;
};

/// log of (1/n_y) sum_j exp(theta' psi_y(j)), max-shifted.
double log_partition_hat(const Vector& theta, const Matrix& psi_y);

RatioState ratio_state(const Vector& theta, const Matrix& psi_y);

double loss(const Vector& theta, const KliepProblem& problem);
double loss(const Vector& theta, const KliepProblem& problem, const RatioState& state);

/// -mean_x(psi) + muhat(theta).
Vector gradient(const Vector& theta, const KliepProblem& problem);
Vector gradient(const KliepProblem& problem, const RatioState& state);

/// (1/n_y) sum_j rhat_j psi_j psi_j' - muhat muhat'.
Matrix hessian(const Vector& theta, const Matrix& psi_y);
Matrix hessian(const Matrix& psi_y, const RatioState& state);

/// Pairwise (U-statistic) form of the Hessian. O(n_y^2 p^2); for testing.
Matrix hessian_ustat(const Vector& theta, const Matrix& psi_y);

} // namespace diffnet
