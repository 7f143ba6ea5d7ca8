#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace diffnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sorted list of 0-based edge indices.
using Support = std::vector<int>;

/// Raised when a caller passes arguments that violate a documented precondition.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when input data (samples, files) are malformed.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw ArgumentError(msg);
}

/// Indices of the nonzero entries of `v`, ascending.
inline Support support_of(const Vector& v)
{
    Support s;
    for (Eigen::Index k = 0; k < v.size(); ++k)
        if (v[k] != 0.0) s.push_back(static_cast<int>(k));
    return s;
}

/// Sorted union of supports, deduplicated.
Support merge_supports(const Support& a, const Support& b);

} // namespace diffnet
