#include "stochmat/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace stochmat::oracle {

namespace {

void require_square(const Matrix& X, Index m, const char* who)
{
    if (X.rows() != m || X.cols() != m) {
        throw DimensionMismatch(std::string(who) + ": operand must be m x m");
    }
}

std::vector<Matrix> powers(const Matrix& X, Index count)
{
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(std::max<Index>(count, 1)));
    out.push_back(Matrix::Identity(X.rows(), X.cols()));
    for (Index i = 1; i < count; ++i) out.push_back(out.back() * X);
    return out;
}

}  // namespace

Vector vec(const Matrix& X)
{
    return X.reshaped();
}

Matrix unvec(const Vector& x, Index rows, Index cols)
{
    if (x.size() != rows * cols) throw DimensionMismatch("unvec: size mismatch");
    return x.reshaped(rows, cols);
}

Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

KronSystem kron_system(const std::vector<Matrix>& B, const Matrix& C, const Matrix& E)
{
    if (B.empty()) throw DimensionMismatch("kron_system: no B_j");
    const Index q = B.front().rows();
    const Index p = C.rows();
    if (C.cols() != p || E.rows() != q || E.cols() != p) {
        throw DimensionMismatch("kron_system: inconsistent shapes");
    }
    for (const auto& b : B) {
        if (b.rows() != q || b.cols() != q) throw DimensionMismatch("kron_system: B_j must be q x q");
    }
    if (q * p > kSizeGuard) {
        throw SizeGuard("kron_system: vec dimension " + std::to_string(q * p) + " exceeds 4096");
    }
    KronSystem sys;
    sys.matrix = Matrix::Zero(q * p, q * p);
    Matrix Cj = Matrix::Identity(p, p);
    for (std::size_t j = 0; j < B.size(); ++j) {
        sys.matrix += kron(Cj.transpose(), B[j]);
        Cj = Cj * C;
    }
    sys.rhs = vec(E);
    return sys;
}

Matrix kron_solve(const std::vector<Matrix>& B, const Matrix& C, const Matrix& E)
{
    const KronSystem sys = kron_system(B, C, E);
    Eigen::FullPivLU<Matrix> lu(sys.matrix);
    if (!lu.isInvertible()) throw SingularSystem("kron_solve: Kronecker system is singular");
    return unvec(lu.solve(sys.rhs), E.rows(), E.cols());
}

Matrix frechet_apply(const MG1Model& model, const Matrix& X, const Matrix& Z)
{
    const Index m = model.dim();
    require_square(X, m, "frechet_apply");
    require_square(Z, m, "frechet_apply");
    const auto P = powers(X, model.degree());
    Matrix out = -Z;
    for (Index v = 1; v <= model.degree(); ++v) {
        const Matrix& Av = model.A[static_cast<std::size_t>(v)];
        for (Index j = 0; j <= v - 1; ++j) {
            out += Av * P[static_cast<std::size_t>(j)] * Z * P[static_cast<std::size_t>(v - 1 - j)];
        }
    }
    return out;
}

Matrix jacobian_kron(const MG1Model& model, const Matrix& X)
{
    const Index m = model.dim();
    require_square(X, m, "jacobian_kron");
    if (m * m > kSizeGuard) {
        throw SizeGuard("jacobian_kron: vec dimension " + std::to_string(m * m) + " exceeds 4096");
    }
    const auto P = powers(X, model.degree());
    Matrix J = Matrix::Identity(m * m, m * m);
    for (Index v = 1; v <= model.degree(); ++v) {
        const Matrix& Av = model.A[static_cast<std::size_t>(v)];
        for (Index j = 0; j <= v - 1; ++j) {
            J -= kron(P[static_cast<std::size_t>(v - 1 - j)].transpose(), Av * P[static_cast<std::size_t>(j)]);
        }
    }
    return J;
}

std::string to_string(MMatrixClass c)
{
    switch (c) {
        case MMatrixClass::NonsingularM: return "NonsingularM";
        case MMatrixClass::SingularM: return "SingularM";
        case MMatrixClass::NotZMatrix: return "NotZMatrix";
        case MMatrixClass::NotMMatrix: return "NotMMatrix";
    }
    return "Unknown";
}

double spectral_radius(const Matrix& A)
{
    if (A.rows() != A.cols()) throw DimensionMismatch("spectral_radius: matrix must be square");
    if (A.size() == 0) return 0.0;
    if (A.rows() > kSizeGuard) throw SizeGuard("spectral_radius: matrix too large");
    Eigen::EigenSolver<Matrix> es(A, false);
    if (es.info() != Eigen::Success) throw Error("spectral_radius: eigensolver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

MMatrixClass m_matrix_check(const Matrix& A)
{
    if (A.rows() != A.cols() || A.rows() == 0) {
        throw DimensionMismatch("m_matrix_check: matrix must be square and non-empty");
    }
    const Index n = A.rows();
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (i != j && A(i, j) > 1e-14) return MMatrixClass::NotZMatrix;
        }
    }
    const double s = A.diagonal().maxCoeff();
    const Matrix B = s * Matrix::Identity(n, n) - A;
    const double rho = spectral_radius(B);
    const double tol = 1e-10 * std::max(1.0, std::abs(s));
    if (s - rho > tol) return MMatrixClass::NonsingularM;
    if (std::abs(s - rho) <= tol) return MMatrixClass::SingularM;
    return MMatrixClass::NotMMatrix;
}

FunctionalResult functional_oracle(const MG1Model& model, long iters, double tol)
{
    const Index m = model.dim();
    FunctionalResult out;
    out.G = Matrix::Zero(m, m);
    for (long t = 0; t < iters; ++t) {
        Matrix next = poly_eval(model, out.G);
        const double step = norm_inf(next - out.G);
        out.G = std::move(next);
        out.iterations = t + 1;
        if (step <= tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace stochmat::oracle
