#include "stochmat/sylvester.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace stochmat {

namespace {

std::string singular_message(Index column, double condition)
{
    std::ostringstream os;
    os << "column system " << column << " is numerically singular (condition estimate "
       << condition << ")";
    return os.str();
}

}  // namespace

SingularColumnSystem::SingularColumnSystem(Index column, double condition)
    : Error(singular_message(column, condition)), column_(column), condition_(condition)
{
}

void check_operator(const StructuredOperator& op)
{
    if (op.B.empty()) throw DimensionMismatch("structured operator needs at least one B_j");
    const Index q = op.q();
    if (q <= 0) throw DimensionMismatch("structured operator: B_j must be non-empty");
    for (const auto& b : op.B) {
        if (b.rows() != q || b.cols() != q) {
            throw DimensionMismatch("structured operator: every B_j must be q x q");
        }
    }
    if (op.C.rows() <= 0 || op.C.rows() != op.C.cols()) {
        throw DimensionMismatch("structured operator: C must be square and non-empty");
    }
}

Matrix apply(const StructuredOperator& op, const Matrix& X)
{
    check_operator(op);
    if (X.rows() != op.q() || X.cols() != op.p()) {
        throw DimensionMismatch("apply: X must be q x p");
    }
    Matrix acc = op.B.back() * X;
    Matrix tmp(acc.rows(), acc.cols());
    for (Index j = op.terms() - 2; j >= 0; --j) {
        tmp.noalias() = acc * op.C;
        acc.noalias() = op.B[static_cast<std::size_t>(j)] * X;
        acc += tmp;
    }
    return acc;
}

StructuredFactorization::StructuredFactorization(const StructuredOperator& op)
{
    check_operator(op);
    q_ = op.q();
    p_ = op.p();
    d_ = op.terms();

    const CMatrix C = op.C.cast<std::complex<double>>();
    Eigen::ComplexSchur<CMatrix> schur(C, true);
    if (schur.info() != Eigen::Success) {
        throw SchurFailure("complex Schur iteration did not converge");
    }
    Q_ = schur.matrixU();
    T_ = schur.matrixT();
    T_.triangularView<Eigen::StrictlyLower>().setZero();

    schur_residual_ = norm_inf(Q_ * T_ * Q_.adjoint() - C);
    if (!(schur_residual_ <= 1e-12 * (1.0 + norm_inf(op.C)))) {
        std::ostringstream os;
        os << "Schur reconstruction residual " << schur_residual_ << " exceeds bound";
        throw SchurFailure(os.str());
    }

    T_powers_.reserve(static_cast<std::size_t>(d_));
    T_powers_.push_back(CMatrix::Identity(p_, p_));
    for (Index j = 1; j < d_; ++j) {
        CMatrix next = T_powers_.back().triangularView<Eigen::Upper>() * T_;
        next.triangularView<Eigen::StrictlyLower>().setZero();
        T_powers_.push_back(std::move(next));
    }

    if (d_ > 1) {
        B_tail_.resize(q_, q_ * (d_ - 1));
        for (Index j = 1; j < d_; ++j) {
            B_tail_.middleCols((j - 1) * q_, q_) = op.B[static_cast<std::size_t>(j)].cast<std::complex<double>>();
        }
    }

    column_lu_.reserve(static_cast<std::size_t>(p_));
    conditions_.reserve(static_cast<std::size_t>(p_));
    CMatrix M(q_, q_);
    for (Index c = 0; c < p_; ++c) {
        const std::complex<double> t = T_(c, c);
        // Horner in the scalar t: M = B_0 + t (B_1 + t (B_2 + ...)).
        M = op.B.back().cast<std::complex<double>>();
        for (Index j = d_ - 2; j >= 0; --j) {
            M *= t;
            M += op.B[static_cast<std::size_t>(j)].cast<std::complex<double>>();
        }
        Eigen::PartialPivLU<CMatrix> lu(M);
        const double rcond = lu.rcond();
        const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
        if (!std::isfinite(cond) || cond > kColumnConditionLimit) {
            throw SingularColumnSystem(c, cond);
        }
        conditions_.push_back(cond);
        column_lu_.push_back(std::move(lu));
    }
}

Matrix StructuredFactorization::solve(const Matrix& E) const
{
    if (E.rows() != q_ || E.cols() != p_) {
        throw DimensionMismatch("structured solve: E must be q x p");
    }
    const CMatrix F = E.cast<std::complex<double>>() * Q_;
    CMatrix Y(q_, p_);
    CMatrix coeffs;
    CMatrix W;
    CVector rhs(q_);
    for (Index c = 0; c < p_; ++c) {
        rhs = F.col(c);
        if (c > 0 && d_ > 1) {
            // Coupling to earlier columns: sum_j B_j sum_{l<c} Y_l (T^j)_{l,c}.
            coeffs.resize(c, d_ - 1);
            for (Index j = 1; j < d_; ++j) {
                coeffs.col(j - 1) = T_powers_[static_cast<std::size_t>(j)].col(c).head(c);
            }
            W.noalias() = Y.leftCols(c) * coeffs;
            rhs.noalias() -= B_tail_ * W.reshaped();
        }
        Y.col(c) = column_lu_[static_cast<std::size_t>(c)].solve(rhs);
    }
    const CMatrix Z = Y * Q_.adjoint();
    const double leak = Z.size() ? Z.imag().cwiseAbs().maxCoeff() : 0.0;
    if (!(leak <= 1e-8 * (1.0 + norm_inf(Y)))) {
        std::ostringstream os;
        os << "structured solve leaked imaginary part " << leak;
        throw ImaginaryLeakage(os.str());
    }
    return Z.real();
}

}  // namespace stochmat
