#include "stochmat/generator.hpp"

#include <cmath>
#include <random>

namespace stochmat {

namespace {

Matrix draw(std::mt19937_64& rng, Index rows, Index cols)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) out(i, j) = unif(rng);
    }
    return out;
}

/// Scales rows of the upper blocks so that each row of sum_{i>=1} A_i carries
/// `mass`; returns the resulting row sums.
Vector normalize_upper(std::vector<Matrix>& upper, Index m, double mass)
{
    Vector sums = Vector::Zero(m);
    for (const auto& a : upper) sums += a.rowwise().sum();
    for (auto& a : upper) {
        for (Index k = 0; k < m; ++k) a.row(k) *= mass / sums(k);
    }
    Vector out = Vector::Zero(m);
    for (const auto& a : upper) out += a.rowwise().sum();
    return out;
}

void check_params(const GeneratorParams& p)
{
    if (p.m <= 0) throw Error("generator: m must be positive");
    if (p.N < 0) throw Error("generator: N must be nonnegative");
    if (!(p.decay > 0.0)) throw Error("generator: decay must be positive");
    if (p.N > 0 && !(p.mass0 > 0.0 && p.mass0 < 1.0)) {
        throw Error("generator: mass0 must lie strictly between 0 and 1");
    }
    if (p.mode != GeneratorMode::Full) {
        if (p.r <= 0 || p.r > p.m) throw Error("generator: r must satisfy 0 < r <= m");
        if (p.mode == GeneratorMode::Up && p.N == 0) throw Error("generator: mode up needs N >= 1");
    }
}

}  // namespace

io::AnyModel generate(const GeneratorParams& p)
{
    check_params(p);
    std::mt19937_64 rng(p.seed);
    const Index m = p.m;
    const double upper_mass = p.N > 0 ? 1.0 - p.mass0 : 0.0;

    switch (p.mode) {
        case GeneratorMode::Full: {
            MG1Model model;
            for (Index i = 0; i <= p.N; ++i) model.A.push_back(draw(rng, m, m) * std::pow(p.decay, static_cast<double>(i)));
            std::vector<Matrix> upper(model.A.begin() + 1, model.A.end());
            const Vector used = p.N > 0 ? normalize_upper(upper, m, upper_mass) : Vector::Zero(m);
            for (Index i = 1; i <= p.N; ++i) model.A[static_cast<std::size_t>(i)] = upper[static_cast<std::size_t>(i - 1)];
            Matrix& A0 = model.A.front();
            for (Index k = 0; k < m; ++k) A0.row(k) *= (1.0 - used(k)) / A0.row(k).sum();
            return model;
        }
        case GeneratorMode::Down: {
            LowRankDownModel model;
            model.A0_hat = draw(rng, m, p.r);
            model.Gamma = draw(rng, p.r, m);
            for (Index i = 1; i <= p.N; ++i) model.upper.push_back(draw(rng, m, m) * std::pow(p.decay, static_cast<double>(i)));
            const Vector used = p.N > 0 ? normalize_upper(model.upper, m, upper_mass) : Vector::Zero(m);
            const Vector gamma_sums = model.Gamma.rowwise().sum();
            for (Index k = 0; k < m; ++k) {
                model.A0_hat.row(k) *= (1.0 - used(k)) / model.A0_hat.row(k).dot(gamma_sums);
            }
            return model;
        }
        case GeneratorMode::Up: {
            LowRankUpModel model;
            model.A0 = draw(rng, m, m);
            model.Gamma = draw(rng, m, p.r);
            for (Index i = 1; i <= p.N; ++i) model.A_hat.push_back(draw(rng, p.r, m) * std::pow(p.decay, static_cast<double>(i)));
            Vector hat_sums = Vector::Zero(p.r);
            for (const auto& a : model.A_hat) hat_sums += a.rowwise().sum();
            for (Index k = 0; k < m; ++k) model.Gamma.row(k) *= upper_mass / model.Gamma.row(k).dot(hat_sums);
            const MG1Model full = model.to_full();
            Vector used = Vector::Zero(m);
            for (Index i = 1; i <= p.N; ++i) used += full.A[static_cast<std::size_t>(i)].rowwise().sum();
            for (Index k = 0; k < m; ++k) model.A0.row(k) *= (1.0 - used(k)) / model.A0.row(k).sum();
            return model;
        }
    }
    throw Error("generator: unknown mode");
}

MG1Model generate_full(const GeneratorParams& params)
{
    GeneratorParams p = params;
    p.mode = GeneratorMode::Full;
    return std::get<MG1Model>(generate(p));
}

MG1Model as_full(const io::AnyModel& model)
{
    return std::visit(
        [](const auto& mdl) -> MG1Model {
            using T = std::decay_t<decltype(mdl)>;
            if constexpr (std::is_same_v<T, MG1Model>) {
                return mdl;
            } else if constexpr (std::is_same_v<T, GIM1Model>) {
                return gim1_to_transposed(mdl);
            } else {
                return mdl.to_full();
            }
        },
        model);
}

io::AnyModel generate_with_drift(GeneratorParams params, double target_rho)
{
    if (params.N == 0) throw Error("generate_with_drift: N = 0 has zero drift");
    auto rho_at = [&](double mass0) {
        params.mass0 = mass0;
        return drift(as_full(generate(params))).rho;
    };
    // rho decreases as mass moves into A_0.
    double lo = 1e-6;
    double hi = 1.0 - 1e-6;
    const double rho_lo = rho_at(lo);
    const double rho_hi = rho_at(hi);
    if (!(target_rho <= rho_lo && target_rho >= rho_hi)) {
        throw Error("generate_with_drift: target drift outside the reachable range");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double rho = rho_at(mid);
        if (std::abs(rho - target_rho) <= 1e-9) break;
        if (rho > target_rho) lo = mid;
        else hi = mid;
    }
    return generate(params);
}

}  // namespace stochmat
