#pragma once

// Block data of M/G/1-type and GI/M/1-type chains, validation, the
// matrix polynomial / residual map, and the drift classification.

#include "stochmat/common.hpp"

#include <string>
#include <vector>

namespace stochmat {

/// Blocks A_0..A_N of G = sum_i A_i G^i. All blocks are m x m.
struct MG1Model {
    std::vector<Matrix> A;

    Index dim() const { return A.empty() ? 0 : A.front().rows(); }
    /// Highest block index N.
    Index degree() const { return static_cast<Index>(A.size()) - 1; }
};

/// Blocks of R = sum_i R^i A_i. Same shape rules as MG1Model.
struct GIM1Model {
    std::vector<Matrix> A;

    Index dim() const { return A.empty() ? 0 : A.front().rows(); }
    Index degree() const { return static_cast<Index>(A.size()) - 1; }
};

/// A_0 = A0_hat * Gamma with A0_hat m x r, Gamma r x m. `upper` holds A_1..A_N.
struct LowRankDownModel {
    Matrix A0_hat;
    Matrix Gamma;
    std::vector<Matrix> upper;

    Index dim() const { return A0_hat.rows(); }
    Index rank() const { return A0_hat.cols(); }
    Index degree() const { return static_cast<Index>(upper.size()); }
    MG1Model to_full() const;
};

/// A_i = Gamma * A_hat[i-1] for i >= 1, with Gamma m x r and each A_hat r x m.
struct LowRankUpModel {
    Matrix A0;
    Matrix Gamma;
    std::vector<Matrix> A_hat;

    Index dim() const { return A0.rows(); }
    Index rank() const { return Gamma.cols(); }
    Index degree() const { return static_cast<Index>(A_hat.size()); }
    MG1Model to_full() const;
};

enum class ValidationMode { Strict, Permissive };

struct ValidationTolerances {
    double strict_row_sum = 1e-12;
    double permissive_row_sum = 1e-6;
};

struct Diagnostic {
    enum class Kind { Shape, NonFinite, Negative, RowSum, ZeroTopBlock, Factor };

    Kind kind;
    Index block = -1;  // -1 when the diagnostic is not tied to one block
    Index row = -1;
    Index col = -1;
    std::string message;
};

std::string to_string(Diagnostic::Kind kind);

std::vector<Diagnostic> validate(const MG1Model& model,
                                 ValidationMode mode = ValidationMode::Strict,
                                 const ValidationTolerances& tol = {});
std::vector<Diagnostic> validate(const LowRankDownModel& model,
                                 ValidationMode mode = ValidationMode::Strict,
                                 const ValidationTolerances& tol = {});
std::vector<Diagnostic> validate(const LowRankUpModel& model,
                                 ValidationMode mode = ValidationMode::Strict,
                                 const ValidationTolerances& tol = {});

enum class RecurrenceClass { PositiveRecurrent, NullRecurrent, Transient };

std::string to_string(RecurrenceClass c);

/// |rho - 1| at or below this is reported as null recurrent.
inline constexpr double kNullRecurrenceWindow = 1e-10;

struct DriftReport {
    Vector p;
    Vector beta;
    double rho = 0.0;
    RecurrenceClass recurrence = RecurrenceClass::PositiveRecurrent;
};

/// Stationary vector of an irreducible stochastic matrix by GTH state
/// reduction. Throws ReducibleChain when a reduction pivot falls below 1e-300.
Vector stationary_vector(const Matrix& P);

DriftReport drift(const MG1Model& model);

/// sum_v A_v X^v by the Horner recurrence P <- A_N; P <- A_v + P X.
Matrix poly_eval(const MG1Model& model, const Matrix& X);

/// poly_eval(model, X) - X.
Matrix residual(const MG1Model& model, const Matrix& X);

/// Transposed blocks. R solves the GI/M/1 equation iff R^T is the G-solution
/// of the returned model.
MG1Model gim1_to_transposed(const GIM1Model& model);
GIM1Model mg1_to_transposed(const MG1Model& model);

/// Drops trailing level blocks whose entries are all <= threshold in absolute
/// value. A_0 is always kept. The dropped mass is not redistributed.
MG1Model trim_degree(const MG1Model& model, double threshold);
LowRankDownModel trim_degree(const LowRankDownModel& model, double threshold);
LowRankUpModel trim_degree(const LowRankUpModel& model, double threshold);

}  // namespace stochmat
