#pragma once

// Structured equation sum_{j=0}^{d-1} B_j X C^j = E, solved column by column
// after a complex Schur decomposition C = Q T Q^*. The factorization carries
// everything that depends only on (B, C), so one object serves any number of
// right-hand sides.

#include "stochmat/common.hpp"

#include <Eigen/LU>

#include <vector>

namespace stochmat {

/// Column system M_c is declared singular above this condition estimate.
inline constexpr double kColumnConditionLimit = 1e14;

class SingularColumnSystem : public Error {
public:
    SingularColumnSystem(Index column, double condition);
    Index column() const { return column_; }
    double condition() const { return condition_; }

private:
    Index column_;
    double condition_;
};

class SchurFailure : public Error {
public:
    using Error::Error;
};

class ImaginaryLeakage : public Error {
public:
    using Error::Error;
};

/// B_0..B_{d-1} (q x q each) and the right multiplier C (p x p).
struct StructuredOperator {
    std::vector<Matrix> B;
    Matrix C;

    Index q() const { return B.empty() ? 0 : B.front().rows(); }
    Index p() const { return C.rows(); }
    Index terms() const { return static_cast<Index>(B.size()); }
};

/// Throws DimensionMismatch unless the operator is well formed.
void check_operator(const StructuredOperator& op);

/// sum_j B_j X C^j by right Horner: acc <- B_{d-1} X; acc <- B_j X + acc C.
Matrix apply(const StructuredOperator& op, const Matrix& X);

class StructuredFactorization {
public:
    /// Schur-decomposes C and factors the p column systems
    /// M_c = sum_j T_cc^j B_j. Throws SingularColumnSystem or SchurFailure.
    explicit StructuredFactorization(const StructuredOperator& op);

    /// Real X with sum_j B_j X C^j = E. Throws ImaginaryLeakage when the
    /// back-transformed solution carries more than 1e-8 (1 + |Y|) of
    /// imaginary part.
    Matrix solve(const Matrix& E) const;

    Index q() const { return q_; }
    Index p() const { return p_; }
    Index terms() const { return d_; }

    const CMatrix& schur_Q() const { return Q_; }
    const CMatrix& schur_T() const { return T_; }
    const std::vector<CMatrix>& T_powers() const { return T_powers_; }
    /// |Q T Q^* - C|_inf as measured at construction.
    double schur_residual() const { return schur_residual_; }
    /// Reciprocal-condition based estimates of cond(M_c), one per column.
    const std::vector<double>& column_conditions() const { return conditions_; }

private:
    Index q_ = 0;
    Index p_ = 0;
    Index d_ = 0;
    CMatrix Q_;
    CMatrix T_;
    std::vector<CMatrix> T_powers_;
    CMatrix B_tail_;  // [B_1 ... B_{d-1}] side by side, complex
    std::vector<Eigen::PartialPivLU<CMatrix>> column_lu_;
    std::vector<double> conditions_;
    double schur_residual_ = 0.0;
};

inline StructuredFactorization factorize(const StructuredOperator& op)
{
    return StructuredFactorization(op);
}

inline Matrix solve(const StructuredFactorization& f, const Matrix& E)
{
    return f.solve(E);
}

}  // namespace stochmat
