#pragma once

// Dense brute-force references. None of these share code paths with the
// production solvers beyond poly_eval; they exist to check them.

#include "stochmat/model.hpp"

#include <vector>

namespace stochmat::oracle {

/// Dense form of sum_j B_j X C^j = E under column-stacking vec:
/// sum_j (C^j)^T (x) B_j applied to vec(X).
struct KronSystem {
    Matrix matrix;
    Vector rhs;
};

/// Column-stacking vectorization, and its inverse.
Vector vec(const Matrix& X);
Matrix unvec(const Vector& x, Index rows, Index cols);

Matrix kron(const Matrix& a, const Matrix& b);

KronSystem kron_system(const std::vector<Matrix>& B, const Matrix& C, const Matrix& E);

/// Solves sum_j B_j X C^j = E with one dense LU of the Kronecker system.
/// Throws SizeGuard when q p > 4096 and SingularSystem on a singular system.
Matrix kron_solve(const std::vector<Matrix>& B, const Matrix& C, const Matrix& E);

/// sum_{v=1}^N sum_{j=0}^{v-1} A_v X^j Z X^{v-1-j} - Z, evaluated term by term.
Matrix frechet_apply(const MG1Model& model, const Matrix& X, const Matrix& Z);

/// I - sum_v sum_j (X^{v-1-j})^T (x) A_v X^j, i.e. the matrix of -G'_X on vec.
Matrix jacobian_kron(const MG1Model& model, const Matrix& X);

enum class MMatrixClass { NonsingularM, SingularM, NotZMatrix, NotMMatrix };

std::string to_string(MMatrixClass c);

/// Z-check on off-diagonal signs (tolerance 1e-14), then with s = max diag and
/// B = sI - A compares rho(B) to s (tolerance 1e-10 max(1, |s|)).
MMatrixClass m_matrix_check(const Matrix& A);

/// Largest eigenvalue modulus, from a dense nonsymmetric eigensolver.
double spectral_radius(const Matrix& A);

struct FunctionalResult {
    Matrix G;
    long iterations = 0;
    bool converged = false;
};

/// G <- poly_eval(G) from zero until |G_{t+1} - G_t|_inf <= tol or `iters`
/// steps. The last iterate is returned either way.
FunctionalResult functional_oracle(const MG1Model& model, long iters, double tol);

}  // namespace stochmat::oracle
