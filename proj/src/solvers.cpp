#include "stochmat/solvers.hpp"

#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace stochmat {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ns_since(Clock::time_point t0)
{
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

/// Residual of the current iterate: the right-hand side of the next inner
/// equation (-F in the unknown's own shape) and the full-space stopping norm.
struct Evaluation {
    Matrix rhs;
    double norm = 0.0;
};

/// One equation family driven by run_iteration.
class Variant {
public:
    virtual ~Variant() = default;
    virtual Matrix zero_start() const = 0;
    virtual Evaluation evaluate(const Matrix& x) const = 0;
    /// Frozen derivative at the start of an outer step.
    virtual StructuredOperator linearize(const Matrix& xk) const = 0;
    /// x <- fixed-point map, used by FunctionalIteration.
    virtual Matrix fixed_point(const Matrix& x) const = 0;
    /// The iterate as an m x m matrix (G or U).
    virtual Matrix full(const Matrix& x) const = 0;
    /// G recovered from the final iterate.
    virtual Matrix recover_G(const Matrix& x) const = 0;
};

Matrix identity_like(const Matrix& a)
{
    return Matrix::Identity(a.rows(), a.cols());
}

/// H = sum_{j=1}^N A_j G^{j-1}, by Horner.
Matrix upper_series(const std::vector<Matrix>& A, const Matrix& G)
{
    const Index N = static_cast<Index>(A.size()) - 1;
    Matrix H = A.back();
    for (Index j = N - 1; j >= 1; --j) {
        Matrix next = H * G;
        next += A[static_cast<std::size_t>(j)];
        H = std::move(next);
    }
    return H;
}

class FullG final : public Variant {
public:
    explicit FullG(const MG1Model& model) : model_(model) {}

    Matrix zero_start() const override { return Matrix::Zero(model_.dim(), model_.dim()); }

    Evaluation evaluate(const Matrix& x) const override
    {
        Evaluation e;
        e.rhs = -residual(model_, x);
        e.norm = norm_inf(e.rhs);
        return e;
    }

    StructuredOperator linearize(const Matrix& Gk) const override
    {
        auto S = build_S(model_, Gk);
        StructuredOperator op;
        op.B.reserve(S.size());
        op.B.push_back(S[0] - identity_like(S[0]));
        for (std::size_t j = 1; j < S.size(); ++j) op.B.push_back(std::move(S[j]));
        op.C = Gk;
        return op;
    }

    Matrix fixed_point(const Matrix& x) const override { return poly_eval(model_, x); }
    Matrix full(const Matrix& x) const override { return x; }
    Matrix recover_G(const Matrix& x) const override { return x; }

private:
    const MG1Model& model_;
};

class LowRankDownG final : public Variant {
public:
    explicit LowRankDownG(const LowRankDownModel& model) : model_(model), full_(model.to_full()) {}

    Matrix zero_start() const override { return Matrix::Zero(model_.dim(), model_.rank()); }

    Evaluation evaluate(const Matrix& Ghat) const override
    {
        const Matrix G = Ghat * model_.Gamma;
        const Matrix H = upper_series(full_.A, G);
        Evaluation e;
        // (I - sum_j A_j G^{j-1}) G_hat - A0_hat, which is -G(G) with Gamma stripped.
        e.rhs = Ghat - H * Ghat - model_.A0_hat;
        e.norm = norm_inf(residual(full_, G));
        return e;
    }

    StructuredOperator linearize(const Matrix& Ghat) const override
    {
        auto S = build_S(full_, Ghat * model_.Gamma);
        StructuredOperator op;
        op.B.reserve(S.size());
        op.B.push_back(S[0] - identity_like(S[0]));
        for (std::size_t j = 1; j < S.size(); ++j) op.B.push_back(std::move(S[j]));
        op.C = model_.Gamma * Ghat;
        return op;
    }

    Matrix fixed_point(const Matrix& Ghat) const override
    {
        const Matrix H = upper_series(full_.A, Ghat * model_.Gamma);
        return model_.A0_hat + H * Ghat;
    }

    Matrix full(const Matrix& Ghat) const override { return Ghat * model_.Gamma; }
    Matrix recover_G(const Matrix& Ghat) const override { return Ghat * model_.Gamma; }

private:
    const LowRankDownModel& model_;
    MG1Model full_;
};

/// LU of (I - U) with the condition guard shared by both U variants.
Eigen::PartialPivLU<Matrix> factor_I_minus(const Matrix& U)
{
    Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(U.rows(), U.cols()) - U);
    const double rc = lu.rcond();
    const double cond = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (!std::isfinite(cond) || cond > 1e14) {
        std::ostringstream os;
        os << "I - U is numerically singular (condition estimate " << cond << ")";
        throw NearSingularIminusU(os.str());
    }
    return lu;
}

/// sum_{i=1}^N coeff_i W^{i-1}, Horner over the given blocks (coeff_1..coeff_N).
Matrix horner_tail(const std::vector<Matrix>& coeffs, const Matrix& W)
{
    Matrix acc = coeffs.back();
    for (Index i = static_cast<Index>(coeffs.size()) - 2; i >= 0; --i) {
        Matrix next = acc * W;
        next += coeffs[static_cast<std::size_t>(i)];
        acc = std::move(next);
    }
    return acc;
}

/// Shared body of the full and low-rank U iterations. With Gamma absent the
/// unknown is U itself and `coeffs` are A_1..A_N; otherwise the unknown is
/// U_hat (r x m), U = Gamma U_hat and `coeffs` are A_hat_1..A_hat_N.
class UIteration final : public Variant {
public:
    UIteration(Matrix A0, std::vector<Matrix> coeffs, std::optional<Matrix> Gamma)
        : A0_(std::move(A0)), coeffs_(std::move(coeffs)), Gamma_(std::move(Gamma))
    {
    }

    Matrix zero_start() const override
    {
        const Index m = A0_.rows();
        return Matrix::Zero(Gamma_ ? Gamma_->cols() : m, m);
    }

    Evaluation evaluate(const Matrix& x) const override
    {
        const Matrix U = full(x);
        const auto lu = factor_I_minus(U);
        const Matrix W = lu.solve(A0_);
        Evaluation e;
        e.rhs = horner_tail(coeffs_, W) - x;
        e.norm = Gamma_ ? norm_inf(*Gamma_ * e.rhs) : norm_inf(e.rhs);
        return e;
    }

    StructuredOperator linearize(const Matrix& xk) const override
    {
        const Matrix U = full(xk);
        const auto lu = factor_I_minus(U);
        const Index m = A0_.rows();
        const Matrix inv = lu.inverse();
        const Matrix W = inv * A0_;
        // Right factor applied to every R_j: (I-U)^{-1}, or (I-U)^{-1} Gamma.
        const Matrix right = Gamma_ ? Matrix(inv * *Gamma_) : inv;

        const Index N = static_cast<Index>(coeffs_.size());
        StructuredOperator op;
        op.B.resize(static_cast<std::size_t>(N));
        const Index q = Gamma_ ? Gamma_->cols() : m;
        op.B[0] = Matrix::Identity(q, q);
        if (N > 1) {
            // T_j = sum_{i=j+1}^N coeff_i W^{i-1-j}: T_{N-1} = coeff_N, T_j = coeff_{j+1} + T_{j+1} W.
            Matrix T = coeffs_.back();
            for (Index j = N - 1; j >= 1; --j) {
                if (j < N - 1) {
                    Matrix next = T * W;
                    next += coeffs_[static_cast<std::size_t>(j)];
                    T = std::move(next);
                }
                op.B[static_cast<std::size_t>(j)] = -(T * right);
            }
        }
        op.C = W;
        return op;
    }

    Matrix fixed_point(const Matrix& x) const override
    {
        const auto lu = factor_I_minus(full(x));
        return horner_tail(coeffs_, lu.solve(A0_));
    }

    Matrix full(const Matrix& x) const override { return Gamma_ ? Matrix(*Gamma_ * x) : x; }

    Matrix recover_G(const Matrix& x) const override
    {
        return factor_I_minus(full(x)).solve(A0_);
    }

private:
    Matrix A0_;
    std::vector<Matrix> coeffs_;
    std::optional<Matrix> Gamma_;
};

std::string format_rho(double rho)
{
    std::ostringstream os;
    os.precision(17);
    os << rho;
    return os.str();
}

/// Adds drift warnings; returns false when residual stopping must be disabled.
bool screen_drift(const MG1Model& full, SolveReport& rep)
{
    try {
        const DriftReport d = drift(full);
        if (d.recurrence == RecurrenceClass::NullRecurrent) {
            rep.warnings.push_back("NullRecurrent: rho=" + format_rho(d.rho) +
                                   " is within 1e-10 of 1; the residual test does not certify "
                                   "the solution, running to max_outer");
            return false;
        }
    } catch (const ReducibleChain& e) {
        rep.warnings.push_back(std::string("drift unavailable: ") + e.what());
    }
    return true;
}

SolveReport run_iteration(const Variant& var, const MG1Model& full_model, const SolverConfig& cfg,
                          const MG1Model& drift_model)
{
    if (!(cfg.tol > 0.0)) throw Error("SolverConfig: tol must be positive");
    if (cfg.max_outer <= 0) throw Error("SolverConfig: max_outer must be positive");

    const auto t0 = Clock::now();
    SolveReport rep;
    rep.algorithm = cfg.algorithm;

    Matrix x = var.zero_start();
    if (cfg.initial) {
        if (cfg.initial->rows() != x.rows() || cfg.initial->cols() != x.cols()) {
            throw DimensionMismatch("SolverConfig: initial iterate has the wrong shape");
        }
        x = *cfg.initial;
    }
    rep.unknown_rows = x.rows();
    rep.unknown_cols = x.cols();

    const bool may_stop = screen_drift(drift_model, rep);

    int fixed_n = 1;
    std::optional<AdaptiveSchedule> adaptive;
    if (cfg.algorithm == Algorithm::NewtonShamanskii) {
        if (const auto* f = std::get_if<FixedSchedule>(&cfg.inner_schedule)) {
            if (f->n <= 0) throw Error("SolverConfig: fixed inner schedule needs n >= 1");
            fixed_n = f->n;
        } else {
            adaptive = std::get<AdaptiveSchedule>(cfg.inner_schedule);
            if (adaptive->cap <= 0) throw Error("SolverConfig: adaptive cap must be >= 1");
        }
    }

    auto tr = Clock::now();
    Evaluation ev = var.evaluate(x);
    rep.times.residual_ns += ns_since(tr);
    rep.initial_residual = ev.norm;
    if (cfg.record_iterates) rep.iterates.push_back(var.full(x));

    auto record = [&](int outer, int inner) {
        rep.residual_history.push_back(ev.norm);
        rep.trace.push_back({outer, inner, ev.norm, rep.factorization_count, ns_since(t0)});
        if (cfg.record_iterates) rep.iterates.push_back(var.full(x));
    };

    bool broke_nonfinite = false;
    for (int k = 0; k < cfg.max_outer; ++k) {
        if (may_stop && ev.norm <= cfg.tol) break;
        if (!std::isfinite(ev.norm)) {
            broke_nonfinite = true;
            break;
        }
        const int outer = k + 1;

        if (cfg.algorithm == Algorithm::FunctionalIteration) {
            tr = Clock::now();
            x = var.fixed_point(x);
            rep.times.solve_ns += ns_since(tr);
            tr = Clock::now();
            ev = var.evaluate(x);
            rep.times.residual_ns += ns_since(tr);
            rep.outer_count = outer;
            rep.inner_counts.push_back(1);
            record(outer, 1);
            continue;
        }

        auto ts = Clock::now();
        const StructuredOperator op = var.linearize(x);
        rep.times.setup_ns += ns_since(ts);
        ts = Clock::now();
        const StructuredFactorization fact(op);
        rep.times.factorize_ns += ns_since(ts);
        ++rep.factorization_count;
        rep.outer_count = outer;

        int s = 0;
        while (true) {
            ++s;
            ts = Clock::now();
            Matrix step = fact.solve(ev.rhs);
            rep.times.solve_ns += ns_since(ts);
            if (cfg.inspect) cfg.inspect(InnerSystemView{outer, s, op, ev.rhs, step});
            x += step;
            const double prev = ev.norm;
            ts = Clock::now();
            ev = var.evaluate(x);
            rep.times.residual_ns += ns_since(ts);
            record(outer, s);

            if (!std::isfinite(ev.norm)) break;
            if (may_stop && ev.norm <= cfg.tol) break;
            if (adaptive) {
                if (s >= adaptive->cap || !(ev.norm <= adaptive->eta * prev)) break;
            } else if (s >= fixed_n) {
                break;
            }
        }
        rep.inner_counts.push_back(s);
    }

    rep.solution = var.full(x);
    rep.G = var.recover_G(x);
    rep.g_residual = norm_inf(residual(full_model, rep.G));
    rep.converged = may_stop && std::isfinite(ev.norm) && ev.norm <= cfg.tol;
    if (broke_nonfinite || !std::isfinite(ev.norm)) {
        rep.warnings.push_back("iteration produced a non-finite residual");
    }
    rep.times.total_ns = ns_since(t0);
    if (!rep.converged) throw NotConverged(std::move(rep));
    return rep;
}

/// N = 0: G = A_0 with no iteration.
SolveReport trivial_report(const MG1Model& full, Index rows, Index cols, Algorithm algo)
{
    SolveReport rep;
    rep.algorithm = algo;
    rep.G = full.A.front();
    rep.solution = rep.G;
    rep.g_residual = norm_inf(residual(full, rep.G));
    rep.converged = true;
    rep.unknown_rows = rows;
    rep.unknown_cols = cols;
    return rep;
}

void require_valid_shapes(const MG1Model& model)
{
    if (model.A.empty()) throw DimensionMismatch("model has no blocks");
    const Index m = model.dim();
    for (const auto& a : model.A) {
        if (a.rows() != m || a.cols() != m) throw DimensionMismatch("blocks must all be m x m");
    }
}

}  // namespace

std::string to_string(Algorithm a)
{
    switch (a) {
        case Algorithm::NewtonShamanskii: return "ns";
        case Algorithm::Newton: return "newton";
        case Algorithm::FunctionalIteration: return "fi";
    }
    return "unknown";
}

int SolveReport::inner_total() const
{
    int total = 0;
    for (int n : inner_counts) total += n;
    return total;
}

NotConverged::NotConverged(SolveReport report)
    : Error("iteration did not converge within max_outer=" + std::to_string(report.outer_count) +
            " outer steps (last residual " +
            format_rho(report.residual_history.empty() ? report.initial_residual
                                                       : report.residual_history.back()) +
            ")"),
      report_(std::move(report))
{
}

std::vector<Matrix> build_S(const MG1Model& model, const Matrix& Gk)
{
    require_valid_shapes(model);
    const Index m = model.dim();
    if (Gk.rows() != m || Gk.cols() != m) throw DimensionMismatch("build_S: Gk must be m x m");
    const Index N = model.degree();
    std::vector<Matrix> S(static_cast<std::size_t>(std::max<Index>(N, 0)));
    if (N == 0) return S;
    S[static_cast<std::size_t>(N - 1)] = model.A[static_cast<std::size_t>(N)];
    for (Index i = N - 1; i >= 1; --i) {
        Matrix next = S[static_cast<std::size_t>(i)] * Gk;
        next += model.A[static_cast<std::size_t>(i)];
        S[static_cast<std::size_t>(i - 1)] = std::move(next);
    }
    return S;
}

SolveReport solve_G(const MG1Model& model, const SolverConfig& cfg)
{
    require_valid_shapes(model);
    if (model.degree() == 0) return trivial_report(model, model.dim(), model.dim(), cfg.algorithm);
    FullG var(model);
    return run_iteration(var, model, cfg, model);
}

static SolveReport solve_G_screened(const MG1Model& model, const SolverConfig& cfg, const MG1Model& drift_model)
{
    require_valid_shapes(model);
    if (model.degree() == 0) return trivial_report(model, model.dim(), model.dim(), cfg.algorithm);
    FullG var(model);
    return run_iteration(var, model, cfg, drift_model);
}

SolveReport solve_G_lowrank_down(const LowRankDownModel& model, const SolverConfig& cfg)
{
    const MG1Model full = model.to_full();
    require_valid_shapes(full);
    if (model.Gamma.rows() != model.rank() || model.Gamma.cols() != model.dim()) {
        throw DimensionMismatch("low-rank down model: Gamma must be r x m");
    }
    if (model.degree() == 0) return trivial_report(full, model.dim(), model.rank(), cfg.algorithm);
    LowRankDownG var(model);
    return run_iteration(var, full, cfg, full);
}

SolveReport solve_U(const MG1Model& model, const SolverConfig& cfg)
{
    require_valid_shapes(model);
    if (model.degree() == 0) return trivial_report(model, model.dim(), model.dim(), cfg.algorithm);
    std::vector<Matrix> coeffs(model.A.begin() + 1, model.A.end());
    UIteration var(model.A.front(), std::move(coeffs), std::nullopt);
    return run_iteration(var, model, cfg, model);
}

SolveReport solve_U(const LowRankUpModel& model, const SolverConfig& cfg)
{
    const MG1Model full = model.to_full();
    require_valid_shapes(full);
    if (model.Gamma.rows() != model.dim()) throw DimensionMismatch("low-rank up model: Gamma must be m x r");
    for (const auto& a : model.A_hat) {
        if (a.rows() != model.rank() || a.cols() != model.dim()) {
            throw DimensionMismatch("low-rank up model: A_hat blocks must be r x m");
        }
    }
    if (model.degree() == 0) return trivial_report(full, model.rank(), model.dim(), cfg.algorithm);
    UIteration var(model.A0, model.A_hat, model.Gamma);
    return run_iteration(var, full, cfg, full);
}

SolveReport solve_R(const GIM1Model& model, const SolverConfig& cfg)
{
    SolverConfig tcfg = cfg;
    if (cfg.initial) tcfg.initial = Matrix(cfg.initial->transpose());
    auto transpose_report = [](SolveReport rep) {
        rep.solution.transposeInPlace();
        rep.G.transposeInPlace();
        for (auto& it : rep.iterates) it.transposeInPlace();
        return rep;
    };
    try {
        // Null recurrence is the same condition for the chain and its transposed
        // equation, but the drift must be computed on the row-stochastic blocks.
        return transpose_report(solve_G_screened(gim1_to_transposed(model), tcfg, MG1Model{model.A}));
    } catch (const NotConverged& e) {
        throw NotConverged(transpose_report(e.report()));
    }
}

Matrix u_residual(const MG1Model& model, const Matrix& U)
{
    require_valid_shapes(model);
    const Index m = model.dim();
    if (U.rows() != m || U.cols() != m) throw DimensionMismatch("u_residual: U must be m x m");
    if (model.degree() == 0) return U;
    const Matrix W = factor_I_minus(U).solve(model.A.front());
    std::vector<Matrix> coeffs(model.A.begin() + 1, model.A.end());
    return U - horner_tail(coeffs, W);
}

}  // namespace stochmat
