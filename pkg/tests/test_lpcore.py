import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pvbatt import lpcore
from pvbatt.lpcore import (
    CyclingError, LinearProgram, LpError, LpStatus, Tolerances, dump_lp, load_lp, solve,
)

from oracles import enumerate_vertices, random_bounded_lp


def test_single_bound_example():
    lp = LinearProgram.from_dense([1.0], [[1.0]], [">="], [3.0], 0.0, 10.0)
    sol = solve(lp)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective_value == pytest.approx(3.0, abs=1e-12)
    assert sol.x[0] == pytest.approx(3.0, abs=1e-12)


def test_contradictory_rows_infeasible():
    lp = LinearProgram.from_dense([-1.0], [[1.0], [1.0]], ["<=", ">="], [1.0, 2.0], 0.0, np.inf)
    assert solve(lp).status is LpStatus.INFEASIBLE


def test_unbounded_detected():
    lp = LinearProgram.from_dense([-1.0, 0.0], [[1.0, -1.0]], ["<="], [1.0], 0.0, np.inf)
    assert solve(lp).status is LpStatus.UNBOUNDED


def test_construction_rejects_bad_indices():
    with pytest.raises(LpError):
        LinearProgram(c=[1.0], rows=[1], cols=[0], vals=[1.0], senses=["<="], b=[1.0],
                      lower=0.0, upper=1.0)
    with pytest.raises(LpError):
        LinearProgram(c=[1.0], rows=[0], cols=[3], vals=[1.0], senses=["<="], b=[1.0],
                      lower=0.0, upper=1.0)


def test_construction_rejects_crossed_bounds_and_nan():
    with pytest.raises(LpError):
        LinearProgram.from_dense([1.0], [[1.0]], ["<="], [1.0], 2.0, 1.0)
    with pytest.raises(LpError):
        LinearProgram.from_dense([np.nan], [[1.0]], ["<="], [1.0], 0.0, 1.0)
    with pytest.raises(LpError):
        LinearProgram.from_dense([1.0], [[1.0]], ["<="], [1.0], -np.inf, 1.0)


def test_sense_count_mismatch():
    with pytest.raises(LpError):
        LinearProgram(c=[1.0], rows=[0], cols=[0], vals=[1.0], senses=["<=", "="], b=[1.0],
                      lower=0.0, upper=1.0)


def test_matches_vertex_enumeration():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(60):
        c, A, senses, b, lo, up = random_bounded_lp(rng)
        ref = enumerate_vertices(c, A, senses, b, lo, up)
        sol = solve(LinearProgram.from_dense(c, A, senses, b, lo, up), method="simplex")
        if ref is None:
            assert sol.status is LpStatus.INFEASIBLE
        else:
            assert sol.optimal
            assert sol.objective_value == pytest.approx(ref, abs=1e-8)
            checked += 1
    assert checked >= 40


def test_optimal_solution_is_feasible():
    rng = np.random.default_rng(5)
    tol = Tolerances()
    for _ in range(40):
        c, A, senses, b, lo, up = random_bounded_lp(rng)
        lp = LinearProgram.from_dense(c, A, senses, b, lo, up)
        sol = solve(lp)
        if sol.optimal:
            scale = 1 + np.abs(A).sum(axis=1).max() * np.abs(sol.x).max()
            assert lp.residuals(sol.x).max() <= tol.feasibility * scale
            assert np.all(sol.x >= lo - 1e-9) and np.all(sol.x <= up + 1e-9)


def test_weak_duality_certificate():
    """Dual objective from the final basis never exceeds the primal objective."""
    rng = np.random.default_rng(11)
    for _ in range(40):
        c, A, senses, b, lo, up = random_bounded_lp(rng)
        sol = solve(LinearProgram.from_dense(c, A, senses, b, lo, up), method="simplex")
        if not sol.optimal:
            continue
        y = sol.duals
        d = np.asarray(c) - A.T @ y
        # a bounded-variable dual: y_i sign by row sense, reduced costs priced at bounds
        dual = float(b @ y) + float(np.sum(np.where(d > 0, d * lo, d * up)))
        assert dual <= sol.objective_value + 1e-8
        assert dual == pytest.approx(sol.objective_value, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), factor=st.floats(1e-3, 1e3))
def test_objective_scaling_keeps_argmin(seed, factor):
    rng = np.random.default_rng(seed)
    c, A, senses, b, lo, up = random_bounded_lp(rng)
    s1 = solve(LinearProgram.from_dense(c, A, senses, b, lo, up))
    s2 = solve(LinearProgram.from_dense(np.asarray(c) * factor, A, senses, b, lo, up))
    assert s1.status == s2.status
    if s1.optimal:
        np.testing.assert_array_equal(s1.x, s2.x)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_equality_rows_satisfied(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    m = int(rng.integers(1, n))
    A = rng.uniform(-3, 3, (m, n))
    x0 = rng.uniform(0, 2, n)
    lp = LinearProgram.from_dense(rng.uniform(-1, 1, n), A, ["="] * m, A @ x0, 0.0, 5.0)
    sol = solve(lp)
    assert sol.optimal
    assert np.abs(A @ sol.x - A @ x0).max() <= 1e-7 * (1 + np.abs(A @ x0).max())


def test_deterministic():
    rng = np.random.default_rng(3)
    c, A, senses, b, lo, up = random_bounded_lp(rng, 8, 6)
    lp = LinearProgram.from_dense(c, A, senses, b, lo, up)
    a, b2 = solve(lp), solve(lp)
    assert a.status == b2.status
    if a.optimal:
        np.testing.assert_array_equal(a.x, b2.x)


def test_iteration_guard_raises_with_count():
    rng = np.random.default_rng(8)
    n, m = 30, 20
    A = rng.uniform(0, 1, (m, n))
    lp = LinearProgram.from_dense(-rng.uniform(0, 1, n), A, ["<="] * m, np.ones(m), 0.0, 10.0)
    with pytest.raises(CyclingError) as err:
        solve(lp, Tolerances(max_iterations=2), method="simplex")
    assert err.value.iterations == 2
    assert "2" in str(err.value)


def test_highs_backend_agrees():
    rng = np.random.default_rng(99)
    for _ in range(20):
        c, A, senses, b, lo, up = random_bounded_lp(rng)
        lp = LinearProgram.from_dense(c, A, senses, b, lo, up)
        s1, s2 = solve(lp, method="simplex"), solve(lp, method="highs")
        assert s1.status == s2.status
        if s1.optimal:
            assert s1.objective_value == pytest.approx(s2.objective_value, abs=1e-7)


def test_dump_and_load_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    c, A, senses, b, lo, up = random_bounded_lp(rng)
    lp = LinearProgram.from_dense(c, A, senses, b, lo, up)
    path = tmp_path / "lp.txt"
    dump_lp(lp, path)
    back = load_lp(path)
    np.testing.assert_array_equal(back.c, lp.c)
    np.testing.assert_array_equal(back.A.toarray(), lp.A.toarray())
    np.testing.assert_array_equal(back.b, lp.b)
    np.testing.assert_array_equal(back.senses, lp.senses)
    assert path.read_text().splitlines()[0] == f"LP {lp.n_vars} {lp.n_rows}"


def test_unknown_method():
    lp = LinearProgram.from_dense([1.0], [[1.0]], [">="], [0.0], 0.0, 1.0)
    with pytest.raises(ValueError):
        lpcore.solve(lp, method="interior")
