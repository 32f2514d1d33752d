#pragma once

// Newton-Shamanskii iteration for G = sum_i A_i G^i and its variants.
//
// Every variant runs the same outer/inner loop: at the start of outer step k
// the frozen derivative is assembled into a StructuredOperator and factored
// once; the n_k inner steps then only re-evaluate the residual and call
// StructuredFactorization::solve. Pure Newton is the Fixed(1) schedule of the
// same loop, so the two share every floating-point operation.

#include "stochmat/model.hpp"
#include "stochmat/sylvester.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace stochmat {

enum class Algorithm { NewtonShamanskii, Newton, FunctionalIteration };

std::string to_string(Algorithm a);

struct FixedSchedule {
    int n = 3;
};

/// Keep stepping with the current factorization while s < cap and each step
/// shrinks the residual by at least `eta`.
struct AdaptiveSchedule {
    double eta = 0.2;
    int cap = 10;
};

using InnerSchedule = std::variant<FixedSchedule, AdaptiveSchedule>;

/// Passed to SolverConfig::inspect for every structured system solved.
struct InnerSystemView {
    int outer;  // 1-based
    int inner;  // 1-based
    const StructuredOperator& op;
    const Matrix& rhs;
    const Matrix& solution;
};

struct SolverConfig {
    double tol = 1e-12;
    int max_outer = 100;
    InnerSchedule inner_schedule = FixedSchedule{};
    /// Starting iterate in the unknown's own shape (G: m x m; low-rank down:
    /// G_hat m x r; U: m x m; low-rank up: U_hat r x m). Zero when empty.
    std::optional<Matrix> initial;
    Algorithm algorithm = Algorithm::NewtonShamanskii;
    /// Keep a copy of every iterate (in full m x m space) in the report.
    bool record_iterates = false;
    std::function<void(const InnerSystemView&)> inspect;
};

/// One row per inner step.
struct IterationRecord {
    int outer = 0;          // 1-based outer index
    int inner = 0;          // 1-based inner index within the outer step
    double residual_inf = 0.0;
    int factorizations = 0; // cumulative
    std::int64_t wall_ns = 0;  // elapsed since the solve started
};

struct PhaseTimes {
    std::int64_t setup_ns = 0;      // S/R coefficient assembly
    std::int64_t factorize_ns = 0;
    std::int64_t solve_ns = 0;
    std::int64_t residual_ns = 0;
    std::int64_t total_ns = 0;
};

struct SolveReport {
    /// The iterated unknown in full space: G, or U for the U-iteration.
    Matrix solution;
    /// G itself (equal to `solution` for G-iterations, (I-U)^{-1} A_0 otherwise).
    Matrix G;
    /// |G(G)|_inf of the returned G.
    double g_residual = 0.0;
    Algorithm algorithm = Algorithm::NewtonShamanskii;
    int outer_count = 0;
    std::vector<int> inner_counts;
    /// Stopping-residual norm after each inner step.
    std::vector<double> residual_history;
    double initial_residual = 0.0;
    int factorization_count = 0;
    PhaseTimes times;
    bool converged = false;
    std::vector<std::string> warnings;
    std::vector<IterationRecord> trace;
    /// Shape of the unknown in the structured inner equation.
    Index unknown_rows = 0;
    Index unknown_cols = 0;
    /// Filled when SolverConfig::record_iterates is set; starts with the initial iterate.
    std::vector<Matrix> iterates;

    int inner_total() const;
};

class NotConverged : public Error {
public:
    explicit NotConverged(SolveReport report);
    const SolveReport& report() const { return report_; }

private:
    SolveReport report_;
};

class NearSingularIminusU : public Error {
public:
    using Error::Error;
};

/// S_N = A_N, S_i = A_i + S_{i+1} Gk for i = N-1..1. Returns [S_1..S_N].
std::vector<Matrix> build_S(const MG1Model& model, const Matrix& Gk);

/// Minimal nonnegative solution of G = sum_i A_i G^i. Throws NotConverged
/// (carrying the report) when max_outer is exhausted.
SolveReport solve_G(const MG1Model& model, const SolverConfig& cfg = {});

/// Same equation with A_0 = A0_hat Gamma; iterates G = G_hat Gamma.
SolveReport solve_G_lowrank_down(const LowRankDownModel& model, const SolverConfig& cfg = {});

/// U = sum_i A_i ((I-U)^{-1} A_0)^{i-1}, then G = (I-U)^{-1} A_0.
SolveReport solve_U(const MG1Model& model, const SolverConfig& cfg = {});

/// U-iteration with A_i = Gamma A_hat_i; iterates U = Gamma U_hat.
SolveReport solve_U(const LowRankUpModel& model, const SolverConfig& cfg = {});

/// R for R = sum_i R^i A_i, via the transposed G-equation.
SolveReport solve_R(const GIM1Model& model, const SolverConfig& cfg = {});

/// The U-equation residual U - sum_i A_i ((I-U)^{-1} A_0)^{i-1}.
Matrix u_residual(const MG1Model& model, const Matrix& U);

}  // namespace stochmat
