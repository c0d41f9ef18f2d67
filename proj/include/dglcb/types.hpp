#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dglcb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class LinkKind { linear, logistic, poisson };

// All randomness flows through explicitly passed generators of this type.
using Rng = std::mt19937_64;

/// Raised when a caller hands in mismatched dimensions.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a matrix that must be positive definite is not (numerically).
class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on invalid model or policy parameters, at construction time.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
    if (got != want) {
        throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) +
                             ", got " + std::to_string(got));
    }
}

}  // namespace dglcb
