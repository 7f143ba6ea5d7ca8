#include "diffnet/kliep.hpp"

#include <cmath>
#include <string>

namespace diffnet {

namespace {

void check_dims(const Vector& theta, const Matrix& psi, const char* who)
{
    if (theta.size() != psi.cols())
        throw ArgumentError(std::string(who) + ": theta has length " +
                            std::to_string(theta.size()) + ", expected " +
                            std::to_string(psi.cols()));
    if (psi.rows() < 1) throw ArgumentError(std::string(who) + ": empty y-sample");
}

} // namespace

KliepProblem::KliepProblem(Matrix psi_x, Matrix psi_y)
    : psi_x_(std::move(psi_x)), psi_y_(std::move(psi_y))
{
    require(psi_x_.cols() == psi_y_.cols(), "KliepProblem: x and y statistics differ in width");
    require(psi_x_.cols() >= 1, "KliepProblem: no edges");
    require(psi_x_.rows() >= 1, "KliepProblem: need n_x >= 1");
    require(psi_y_.rows() >= 2, "KliepProblem: need n_y >= 2");
    if (!psi_x_.allFinite() || !psi_y_.allFinite())
        throw DataError("KliepProblem: non-finite sufficient statistic");
    mean_x_ = psi_x_.colwise().mean().transpose();
}

double log_partition_hat(const Vector& theta, const Matrix& psi_y)
{
    check_dims(theta, psi_y, "log_partition_hat");
    const Vector s = psi_y * theta;
    const double shift = s.maxCoeff();
    return shift + std::log((s.array() - shift).exp().mean());
}

RatioState ratio_state(const Vector& theta, const Matrix& psi_y)
{
    check_dims(theta, psi_y, "ratio_state");
    const Vector s = psi_y * theta;
    const double shift = s.maxCoeff();
    const Eigen::ArrayXd w = (s.array() - shift).exp();

    RatioState st;
    st.log_zhat = shift + std::log(w.mean());
    st.rhat = (w / w.mean()).matrix();
    st.muhat = psi_y.transpose() * st.rhat / static_cast<double>(psi_y.rows());
    return st;
}

double loss(const Vector& theta, const KliepProblem& problem, const RatioState& state)
{
    return -problem.mean_x().dot(theta) + state.log_zhat;
}

double loss(const Vector& theta, const KliepProblem& problem)
{
    check_dims(theta, problem.psi_y(), "loss");
    return -problem.mean_x().dot(theta) + log_partition_hat(theta, problem.psi_y());
}

Vector gradient(const KliepProblem& problem, const RatioState& state)
{
    return state.muhat - problem.mean_x();
}

Vector gradient(const Vector& theta, const KliepProblem& problem)
{
    return gradient(problem, ratio_state(theta, problem.psi_y()));
}

Matrix hessian(const Matrix& psi_y, const RatioState& state)
{
    const double ny = static_cast<double>(psi_y.rows());
    const Matrix weighted = psi_y.array().colwise() * state.rhat.array().sqrt();
    Matrix h(psi_y.cols(), psi_y.cols());
    h.setZero();
    h.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose(), 1.0 / ny);
    h.selfadjointView<Eigen::Lower>().rankUpdate(state.muhat, -1.0);
    return h.selfadjointView<Eigen::Lower>();
}

Matrix hessian(const Vector& theta, const Matrix& psi_y)
{
    return hessian(psi_y, ratio_state(theta, psi_y));
}

Matrix hessian_ustat(const Vector& theta, const Matrix& psi_y)
{
    require(psi_y.rows() >= 2, "hessian_ustat: need n_y >= 2");
    const RatioState st = ratio_state(theta, psi_y);
    const Eigen::Index ny = psi_y.rows();
    const Eigen::Index p = psi_y.cols();

    Matrix h = Matrix::Zero(p, p);
    for (Eigen::Index j = 0; j < ny; ++j)
        for (Eigen::Index jj = j + 1; jj < ny; ++jj) {
            const Vector d = (psi_y.row(j) - psi_y.row(jj)).transpose();
            h.noalias() += (st.rhat[j] * st.rhat[jj]) * d * d.transpose();
        }
    return h / static_cast<double>(ny * ny);
}

} // namespace diffnet
