"""Minimal nonnegative solutions of M/G/1- and GI/M/1-type matrix equations."""

from ._core import (  # noqa: F401
    MG1Model,
    GIM1Model,
    LowRankDownModel,
    LowRankUpModel,
    SolverConfig,
    SolveReport,
    NotConverged,
    drift,
    stationary_vector,
    poly_eval,
    residual,
    trim_degree,
    validate,
    build_S,
    solve_G,
    solve_G_lowrank_down,
    solve_U,
    solve_R,
    sylvester_solve,
    sylvester_apply,
    kron_solve,
    frechet_apply,
    jacobian_kron,
    m_matrix_check,
    functional_oracle,
    parse_model,
    serialize_model,
    generate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
