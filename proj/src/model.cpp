#include "stochmat/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stochmat {

namespace {

void require_square_blocks(const std::vector<Matrix>& blocks, const char* who)
{
    if (blocks.empty()) {
        throw DimensionMismatch(std::string(who) + ": model has no blocks");
    }
    const Index m = blocks.front().rows();
    for (const auto& b : blocks) {
        if (b.rows() != m || b.cols() != m) {
            throw DimensionMismatch(std::string(who) + ": blocks must all be m x m");
        }
    }
}

std::string fmt_diag(const char* what, Index block, Index row, double value)
{
    std::ostringstream os;
    os.precision(17);
    os << what;
    if (block >= 0) os << " in block " << block;
    if (row >= 0) os << " at row " << row;
    os << " (value " << value << ")";
    return os.str();
}

void check_factor(const Matrix& F, const char* name, std::vector<Diagnostic>& out)
{
    for (Index i = 0; i < F.rows(); ++i) {
        for (Index j = 0; j < F.cols(); ++j) {
            const double v = F(i, j);
            if (!std::isfinite(v) || v < 0.0) {
                out.push_back({Diagnostic::Kind::Factor, -1, i, j,
                               std::string("factor ") + name + " has a negative or non-finite entry"});
                return;
            }
        }
    }
}

}  // namespace

std::string to_string(Diagnostic::Kind kind)
{
    switch (kind) {
        case Diagnostic::Kind::Shape: return "shape";
        case Diagnostic::Kind::NonFinite: return "non-finite";
        case Diagnostic::Kind::Negative: return "negative";
        case Diagnostic::Kind::RowSum: return "row-sum";
        case Diagnostic::Kind::ZeroTopBlock: return "zero-top-block";
        case Diagnostic::Kind::Factor: return "factor";
    }
    return "unknown";
}

std::string to_string(RecurrenceClass c)
{
    switch (c) {
        case RecurrenceClass::PositiveRecurrent: return "PositiveRecurrent";
        case RecurrenceClass::NullRecurrent: return "NullRecurrent";
        case RecurrenceClass::Transient: return "Transient";
    }
    return "Unknown";
}

MG1Model LowRankDownModel::to_full() const
{
    MG1Model full;
    full.A.reserve(upper.size() + 1);
    full.A.push_back(A0_hat * Gamma);
    for (const auto& b : upper) full.A.push_back(b);
    return full;
}

MG1Model LowRankUpModel::to_full() const
{
    MG1Model full;
    full.A.reserve(A_hat.size() + 1);
    full.A.push_back(A0);
    for (const auto& b : A_hat) full.A.push_back(Gamma * b);
    return full;
}

std::vector<Diagnostic> validate(const MG1Model& model, ValidationMode mode,
                                 const ValidationTolerances& tol)
{
    std::vector<Diagnostic> out;
    if (model.A.empty()) {
        out.push_back({Diagnostic::Kind::Shape, -1, -1, -1, "model has no blocks"});
        return out;
    }
    const Index m = model.dim();
    if (m <= 0) {
        out.push_back({Diagnostic::Kind::Shape, 0, -1, -1, "block dimension must be positive"});
        return out;
    }
    for (Index b = 0; b <= model.degree(); ++b) {
        const auto& A = model.A[static_cast<std::size_t>(b)];
        if (A.rows() != m || A.cols() != m) {
            out.push_back({Diagnostic::Kind::Shape, b, -1, -1,
                           "block " + std::to_string(b) + " is not " + std::to_string(m) + "x" +
                               std::to_string(m)});
        }
    }
    if (!out.empty()) return out;

    bool finite = true;
    for (Index b = 0; b <= model.degree(); ++b) {
        const auto& A = model.A[static_cast<std::size_t>(b)];
        for (Index i = 0; i < m; ++i) {
            bool reported = false;
            for (Index j = 0; j < m && !reported; ++j) {
                const double v = A(i, j);
                if (!std::isfinite(v)) {
                    out.push_back({Diagnostic::Kind::NonFinite, b, i, j,
                                   fmt_diag("non-finite entry", b, i, v)});
                    finite = false;
                    reported = true;
                } else if (v < 0.0) {
                    out.push_back({Diagnostic::Kind::Negative, b, i, j,
                                   fmt_diag("negative entry", b, i, v)});
                    reported = true;
                }
            }
        }
    }
    if (!finite) return out;

    const Vector sums = [&] {
        Vector s = Vector::Zero(m);
        for (const auto& A : model.A) s += A.rowwise().sum();
        return s;
    }();
    for (Index i = 0; i < m; ++i) {
        const double dev = sums(i) - 1.0;
        const bool bad = mode == ValidationMode::Strict ? std::abs(dev) > tol.strict_row_sum
                                                        : dev > tol.permissive_row_sum;
        if (bad) {
            out.push_back({Diagnostic::Kind::RowSum, -1, i, -1,
                           fmt_diag("row sum of sum_i A_i deviates from 1", -1, i, sums(i))});
        }
    }

    if ((model.A.back().array() == 0.0).all()) {
        out.push_back({Diagnostic::Kind::ZeroTopBlock, model.degree(), -1, -1,
                       "top block A_N is identically zero; reduce N"});
    }
    return out;
}

std::vector<Diagnostic> validate(const LowRankDownModel& model, ValidationMode mode,
                                 const ValidationTolerances& tol)
{
    std::vector<Diagnostic> out;
    const Index m = model.dim();
    const Index r = model.rank();
    if (r <= 0 || r > m || model.Gamma.rows() != r || model.Gamma.cols() != m) {
        out.push_back({Diagnostic::Kind::Shape, -1, -1, -1,
                       "down-mode factors must be A0_hat m x r and Gamma r x m with 0 < r <= m"});
        return out;
    }
    check_factor(model.A0_hat, "A0_hat", out);
    check_factor(model.Gamma, "Gamma", out);
    auto rest = validate(model.to_full(), mode, tol);
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

std::vector<Diagnostic> validate(const LowRankUpModel& model, ValidationMode mode,
                                 const ValidationTolerances& tol)
{
    std::vector<Diagnostic> out;
    const Index m = model.dim();
    const Index r = model.rank();
    bool shapes = r > 0 && r <= m && model.Gamma.rows() == m && model.A0.cols() == m;
    for (const auto& a : model.A_hat) shapes = shapes && a.rows() == r && a.cols() == m;
    if (!shapes) {
        out.push_back({Diagnostic::Kind::Shape, -1, -1, -1,
                       "up-mode factors must be Gamma m x r and A_hat r x m with 0 < r <= m"});
        return out;
    }
    check_factor(model.Gamma, "Gamma", out);
    for (const auto& a : model.A_hat) check_factor(a, "A_hat", out);
    auto rest = validate(model.to_full(), mode, tol);
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

Vector stationary_vector(const Matrix& P)
{
    if (P.rows() != P.cols() || P.rows() == 0) {
        throw DimensionMismatch("stationary_vector: matrix must be square and non-empty");
    }
    const Index n = P.rows();
    Matrix W = P;
    // Censor states n-1, ..., 1 in turn. Only off-diagonal mass of the
    // remaining states is used, so no like-signed subtraction occurs.
    for (Index k = n - 1; k > 0; --k) {
        double s = 0.0;
        for (Index j = 0; j < k; ++j) s += W(k, j);
        if (!(s >= 1e-300)) {
            throw ReducibleChain("stationary_vector: reduction pivot vanished at state " +
                                 std::to_string(k) + "; chain is reducible");
        }
        for (Index i = 0; i < k; ++i) W(i, k) /= s;
        for (Index i = 0; i < k; ++i) {
            const double wik = W(i, k);
            if (wik == 0.0) continue;
            for (Index j = 0; j < k; ++j) W(i, j) += wik * W(k, j);
        }
    }
    Vector p(n);
    p(0) = 1.0;
    for (Index k = 1; k < n; ++k) {
        double acc = 0.0;
        for (Index i = 0; i < k; ++i) acc += p(i) * W(i, k);
        p(k) = acc;
    }
    return p / p.sum();
}

DriftReport drift(const MG1Model& model)
{
    require_square_blocks(model.A, "drift");
    const Index m = model.dim();
    Matrix total = Matrix::Zero(m, m);
    for (const auto& A : model.A) total += A;

    DriftReport rep;
    rep.p = stationary_vector(total);
    rep.beta = Vector::Zero(m);
    for (Index i = 1; i <= model.degree(); ++i) {
        rep.beta += static_cast<double>(i) * model.A[static_cast<std::size_t>(i)].rowwise().sum();
    }
    rep.rho = rep.p.dot(rep.beta);
    if (std::abs(rep.rho - 1.0) <= kNullRecurrenceWindow) {
        rep.recurrence = RecurrenceClass::NullRecurrent;
    } else if (rep.rho < 1.0) {
        rep.recurrence = RecurrenceClass::PositiveRecurrent;
    } else {
        rep.recurrence = RecurrenceClass::Transient;
    }
    return rep;
}

Matrix poly_eval(const MG1Model& model, const Matrix& X)
{
    require_square_blocks(model.A, "poly_eval");
    const Index m = model.dim();
    if (X.rows() != m || X.cols() != m) {
        throw DimensionMismatch("poly_eval: X must be m x m");
    }
    Matrix P = model.A.back();
    Matrix tmp(m, m);
    for (Index v = model.degree() - 1; v >= 0; --v) {
        tmp.noalias() = P * X;
        P = model.A[static_cast<std::size_t>(v)] + tmp;
    }
    return P;
}

Matrix residual(const MG1Model& model, const Matrix& X)
{
    Matrix R = poly_eval(model, X);
    R -= X;
    return R;
}

MG1Model gim1_to_transposed(const GIM1Model& model)
{
    MG1Model out;
    out.A.reserve(model.A.size());
    for (const auto& a : model.A) out.A.push_back(a.transpose());
    return out;
}

GIM1Model mg1_to_transposed(const MG1Model& model)
{
    GIM1Model out;
    out.A.reserve(model.A.size());
    for (const auto& a : model.A) out.A.push_back(a.transpose());
    return out;
}

namespace {

void drop_negligible_tail(std::vector<Matrix>& blocks, std::size_t keep, double threshold)
{
    if (!(threshold >= 0.0)) throw std::invalid_argument("trim_degree: threshold must be nonnegative");
    while (blocks.size() > keep && (blocks.back().size() == 0 || blocks.back().cwiseAbs().maxCoeff() <= threshold)) {
        blocks.pop_back();
    }
}

}  // namespace

MG1Model trim_degree(const MG1Model& model, double threshold)
{
    MG1Model out = model;
    drop_negligible_tail(out.A, 1, threshold);
    return out;
}

LowRankDownModel trim_degree(const LowRankDownModel& model, double threshold)
{
    LowRankDownModel out = model;
    drop_negligible_tail(out.upper, 0, threshold);
    return out;
}

LowRankUpModel trim_degree(const LowRankUpModel& model, double threshold)
{
    LowRankUpModel out = model;
    drop_negligible_tail(out.A_hat, 0, threshold);
    return out;
}

}  // namespace stochmat
