import numpy as np
import pytest

import stochmat


def scalar(*values):
    return stochmat.MG1Model([np.array([[v]]) for v in values])


def minimal_root(a0, a1, a2):
    b = a1 - 1.0
    return 2.0 * a0 / (-b + np.sqrt(b * b - 4.0 * a2 * a0))


def test_scalar_quadratic():
    model = scalar(0.2, 0.3, 0.5)
    g = minimal_root(0.2, 0.3, 0.5)
    for algo in ("ns", "newton"):
        rep = stochmat.solve_G(model, stochmat.SolverConfig(algorithm=algo))
        assert rep.converged
        assert abs(rep.G[0, 0] - g) <= 1e-12
    rep = stochmat.solve_G(model, stochmat.SolverConfig(nk="auto"))
    assert abs(rep.G[0, 0] - g) <= 1e-12
    assert abs(stochmat.solve_U(model).G[0, 0] - g) <= 1e-12

    d = stochmat.drift(model)
    assert abs(d["rho"] - 1.3) <= 1e-15
    assert d["class"] == "Transient"


def test_generated_model_round_trip():
    model = stochmat.generate(5, 3, seed=4)
    assert stochmat.validate(model) == []
    text = stochmat.serialize_model(model)
    back = stochmat.parse_model(text)
    for a, b in zip(model.A, back.A):
        assert np.array_equal(a, b)

    rep = stochmat.solve_G(model)
    assert np.abs(stochmat.residual(model, rep.G)).max() <= 1e-12
    assert rep.factorization_count == rep.outer_count
    ref = stochmat.functional_oracle(model)
    assert np.abs(rep.G - ref).max() <= 1e-10


def test_structured_solve_against_dense():
    rng = np.random.default_rng(3)
    B = [rng.standard_normal((3, 3)) + 6 * np.eye(3), rng.standard_normal((3, 3))]
    C = rng.standard_normal((4, 4))
    E = rng.standard_normal((3, 4))
    X = stochmat.sylvester_solve(B, C, E)
    assert np.allclose(stochmat.sylvester_apply(B, C, X), E, atol=1e-12)
    assert np.allclose(stochmat.kron_solve(B, C, E), X, rtol=1e-10, atol=1e-14)
    assert np.allclose(stochmat.sylvester_solve([np.array([[2.0]]), np.array([[1.0]])],
                                                np.array([[0.5]]), np.array([[5.0]])), [[2.0]])


def test_oracles():
    model = scalar(0.2, 0.3, 0.5)
    g = minimal_root(0.2, 0.3, 0.5)
    J = stochmat.jacobian_kron(model, np.array([[g]]))
    assert abs(J[0, 0] - (1.0 - (0.3 + 2 * 0.5 * g))) <= 1e-15
    assert stochmat.m_matrix_check(np.eye(3)) == "NonsingularM"
    assert stochmat.m_matrix_check(np.array([[0.0, -1.0], [-1.0, 0.0]])) == "NotMMatrix"
    Z = np.array([[1.0]])
    assert abs(stochmat.frechet_apply(model, np.array([[g]]), Z)[0, 0] + J[0, 0]) <= 1e-15


def test_low_rank_and_R():
    down = stochmat.generate(4, 3, seed=2, mode="down", r=1)
    full = down.to_full()
    g = stochmat.solve_G(full).G
    assert np.abs(stochmat.solve_G_lowrank_down(down).G - g).max() <= 1e-10

    up = stochmat.generate(4, 3, seed=2, mode="up", r=2)
    rep = stochmat.solve_U(up)
    assert (rep.unknown_rows, rep.unknown_cols) == (2, 4)
    assert np.abs(rep.G - stochmat.solve_G(up.to_full()).G).max() <= 1e-10

    gim = stochmat.GIM1Model([np.array([[v]]) for v in (0.2, 0.3, 0.5)])
    assert abs(stochmat.solve_R(gim).G[0, 0] - minimal_root(0.2, 0.3, 0.5)) <= 1e-12


def test_not_converged_carries_report():
    model = scalar(0.2, 0.3, 0.5)
    with pytest.raises(stochmat.NotConverged) as info:
        stochmat.solve_G(model, stochmat.SolverConfig(algorithm="fi", max_outer=3))
    assert info.value.report.outer_count == 3


def test_stationary_and_poly():
    p = stochmat.stationary_vector(np.array([[0.9, 0.1], [0.4, 0.6]]))
    assert np.allclose(p, [0.8, 0.2], atol=1e-15)
    model = scalar(0.2, 0.3, 0.5)
    assert stochmat.poly_eval(model, np.zeros((1, 1)))[0, 0] == 0.2
    S = stochmat.build_S(model, np.array([[0.4]]))
    assert abs(S[0][0, 0] - 0.5) <= 1e-16


def test_trim_degree():
    trimmed = stochmat.trim_degree(scalar(0.4, 0.6, 1e-18, 0.0), 1e-16)
    assert len(trimmed.A) == 2
