#pragma once

// Dense symmetric positive-definite matrices with a Cholesky factor kept in
// sync. Every policy stores its Gram / precision matrices as SpdMatrix.

#include <Eigen/Cholesky>

#include "dglcb/types.hpp"

namespace dglcb {

class SpdMatrix {
public:
    /// Pivots below this fraction of the largest diagonal entry count as singular.
    static constexpr double kPivotTolerance = 1e-12;

    /// Factorizes `m` (only the lower triangle is read). Throws SingularMatrixError
    /// if a Cholesky pivot falls below kPivotTolerance * max diagonal.
    explicit SpdMatrix(const Matrix& m);

    static SpdMatrix identity(Eigen::Index dim, double scale = 1.0);

    /// Non-throwing variant of the constructor; false when `m` is not positive definite.
    static bool try_factor(const Matrix& m, SpdMatrix& out);

    Eigen::Index dim() const { return entries_.rows(); }
    const Matrix& entries() const { return entries_; }
    Matrix lower_factor() const { return llt_.matrixL(); }

    /// this += x x^T, O(d^2) via a Cholesky rank-one update.
    void rank1_update(const Vector& x);

    /// sqrt(x^T M^{-1} x) via one triangular solve against the factor.
    double weighted_norm(const Vector& x) const;

    /// Solves M z = b.
    Vector solve(const Vector& b) const;

    /// Smallest Cholesky pivot (squared diagonal of L).
    double min_pivot() const;

private:
    SpdMatrix() = default;
    void check_pivots() const;

    Matrix entries_;
    Eigen::LLT<Matrix> llt_;
};

/// m + x x^T as a new value.
SpdMatrix rank1_update(const SpdMatrix& m, const Vector& x);

/// sqrt(x^T m^{-1} x); note the inverse weight.
double weighted_norm(const SpdMatrix& m, const Vector& x);

/// z with m z = b; rejects non-finite input.
Vector solve_spd(const SpdMatrix& m, const Vector& b);

/// mean + sqrt(cov_scale) * L^{-T} z with z standard normal and L the Cholesky
/// factor of `precision`, i.e. a draw from N(mean, cov_scale * precision^{-1}).
Vector sample_mvn(const Vector& mean, double cov_scale, const SpdMatrix& precision, Rng& rng);

}  // namespace dglcb
