#pragma once

// Seeded random model generator used by `stochmat gen`, the benchmark suite
// and the tests.

#include "stochmat/io.hpp"

#include <cstdint>

namespace stochmat {

enum class GeneratorMode { Full, Down, Up };

struct GeneratorParams {
    Index m = 4;
    Index N = 2;
    std::uint64_t seed = 1;
    /// Block i is damped by decay^i before normalization.
    double decay = 0.5;
    /// Fraction of each row's mass assigned to A_0 (the drift knob).
    double mass0 = 0.6;
    GeneratorMode mode = GeneratorMode::Full;
    Index r = 1;
};

/// Uniform entries, block i scaled by decay^i; A_1..A_N rows scaled to carry
/// 1 - mass0, then A_0 (or its factor) rescaled last so every row of sum A_i
/// sums to 1. Deterministic for fixed parameters. Throws Error on infeasible
/// parameters.
io::AnyModel generate(const GeneratorParams& params);

/// Convenience for mode Full.
MG1Model generate_full(const GeneratorParams& params);

/// Bisects mass0 until the drift of the generated model is within 1e-9 of
/// `target_rho`. Throws Error when the target is not reachable.
io::AnyModel generate_with_drift(GeneratorParams params, double target_rho);

/// The full block form of any model (GI/M/1 models are transposed).
MG1Model as_full(const io::AnyModel& model);

}  // namespace stochmat
