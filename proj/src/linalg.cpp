#include "dglcb/linalg.hpp"

#include <cmath>

namespace dglcb {

namespace {

Matrix symmetrized_lower(const Matrix& m) {
    Matrix out = m.triangularView<Eigen::Lower>();
    out.triangularView<Eigen::StrictlyUpper>() = out.transpose().triangularView<Eigen::StrictlyUpper>();
    return out;
}

bool pivots_ok(const Matrix& entries, const Eigen::LLT<Matrix>& llt) {
    if (llt.info() != Eigen::Success) return false;
    const double max_diag = entries.diagonal().cwiseAbs().maxCoeff();
    const Matrix& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        const double pivot = l(i, i) * l(i, i);
        if (!(pivot > SpdMatrix::kPivotTolerance * max_diag)) return false;
    }
    return true;
}

}  // namespace

SpdMatrix::SpdMatrix(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw DimensionError("SpdMatrix: expected a non-empty square matrix");
    }
    if (!m.allFinite()) throw SingularMatrixError("SpdMatrix: non-finite entries");
    entries_ = symmetrized_lower(m);
    llt_.compute(entries_);
    check_pivots();
}

SpdMatrix SpdMatrix::identity(Eigen::Index dim, double scale) {
    return SpdMatrix(Matrix::Identity(dim, dim) * scale);
}

bool SpdMatrix::try_factor(const Matrix& m, SpdMatrix& out) {
    if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
    SpdMatrix candidate;
    candidate.entries_ = symmetrized_lower(m);
    candidate.llt_.compute(candidate.entries_);
    if (!pivots_ok(candidate.entries_, candidate.llt_)) return false;
    out = std::move(candidate);
    return true;
}

void SpdMatrix::check_pivots() const {
    if (!pivots_ok(entries_, llt_)) {
        throw SingularMatrixError("SpdMatrix: matrix is not positive definite (pivot below tolerance)");
    }
}

void SpdMatrix::rank1_update(const Vector& x) {
    require_dim(x.size(), dim(), "rank1_update");
    if (!x.allFinite()) throw SingularMatrixError("rank1_update: non-finite vector");
    entries_.noalias() += x * x.transpose();
    llt_.rankUpdate(x, 1.0);
    check_pivots();
}

double SpdMatrix::weighted_norm(const Vector& x) const {
    require_dim(x.size(), dim(), "weighted_norm");
    const Vector half = llt_.matrixL().solve(x);
    return half.norm();
}

Vector SpdMatrix::solve(const Vector& b) const {
    require_dim(b.size(), dim(), "solve_spd");
    if (!b.allFinite()) throw SingularMatrixError("solve_spd: non-finite right-hand side");
    return llt_.solve(b);
}

double SpdMatrix::min_pivot() const {
    const Matrix& l = llt_.matrixLLT();
    return (l.diagonal().array() * l.diagonal().array()).minCoeff();
}

SpdMatrix rank1_update(const SpdMatrix& m, const Vector& x) {
    SpdMatrix out = m;
    out.rank1_update(x);
    return out;
}

double weighted_norm(const SpdMatrix& m, const Vector& x) { return m.weighted_norm(x); }

Vector solve_spd(const SpdMatrix& m, const Vector& b) { return m.solve(b); }

Vector sample_mvn(const Vector& mean, double cov_scale, const SpdMatrix& precision, Rng& rng) {
    require_dim(mean.size(), precision.dim(), "sample_mvn");
    if (!(cov_scale > 0.0)) throw ParameterError("sample_mvn: covariance scale v^2 must be positive");
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    // L^T w = z  =>  w = L^{-T} z has covariance (L L^T)^{-1}.
    const Matrix l = precision.lower_factor();
    const Vector w = l.transpose().triangularView<Eigen::Upper>().solve(z);
    return mean + std::sqrt(cov_scale) * w;
}

}  // namespace dglcb
