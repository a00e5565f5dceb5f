import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import root

from hardylab.errors import ArgumentError, BracketError, PicardError
from hardylab.mesh import build_mesh
from hardylab.operators import l2_squared
from hardylab.parabolic import (
    BLOW_UP,
    DECAYED,
    GLOBAL,
    SOLVER_FAILURE,
    EvolutionConfig,
    bump,
    evolve,
    step_implicit,
    sweep_lambda,
    truncation_family_study,
)
from hardylab.weights import Constant, DistanceBoundary, WeightPair

from conftest import random_field, scenario

UNIT_PAIR = WeightPair(Constant(1.0), Constant(1.0))


def test_zero_is_fixed_point():
    mesh = build_mesh(0, 1, 16)
    cfg = EvolutionConfig(p=3, lam=1.0, dt=0.01, T=0.1)
    np.testing.assert_array_equal(step_implicit(np.zeros(17), cfg, UNIT_PAIR, mesh), 0)
    tr = evolve(np.zeros(17), cfg, UNIT_PAIR, mesh)
    assert tr.status.kind == GLOBAL
    np.testing.assert_array_equal(tr.l2sq, 0)
    np.testing.assert_array_equal(tr.dirichlet, 0)
    np.testing.assert_array_equal(tr.final, 0)


def test_step_matches_independent_solver():
    # p = 3, omega2 = 1, uniform n = 16: lumped mass h, flux |g| g per element
    n = 16
    mesh = build_mesh(0, 1, n)
    h, dt = 1.0 / n, 0.01
    un = mesh.pin(1 - np.abs(2 * mesh.nodes - 1))
    cfg = EvolutionConfig(p=3, dt=dt, T=dt, eps=0.0, picard_tol=1e-14, picard_max=2000)

    def residual(v):
        u = np.concatenate([[0.0], v, [0.0]])
        g = np.diff(u) / h
        flux = np.abs(g) * g
        return h * (v - un[1:-1]) / dt + flux[:-1] - flux[1:]

    sol = root(residual, un[1:-1], method="hybr", tol=1e-13)
    assert np.max(np.abs(residual(sol.x))) < 1e-10
    u = step_implicit(un, cfg, UNIT_PAIR, mesh)
    np.testing.assert_allclose(u[1:-1], sol.x, rtol=0, atol=1e-10)


def test_step_rejects_unpinned():
    mesh = build_mesh(0, 1, 8)
    with pytest.raises(ArgumentError):
        step_implicit(np.ones(9), EvolutionConfig(p=3), UNIT_PAIR, mesh)


def test_step_raises_picard_error():
    mesh = build_mesh(0, 1, 16)
    cfg = EvolutionConfig(p=3, dt=0.01, T=0.01, picard_max=1, picard_tol=1e-14)
    with pytest.raises(PicardError):
        step_implicit(bump(mesh), cfg, UNIT_PAIR, mesh)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-6, 1.0), st.floats(1e-3, 1e3), st.sampled_from([2.0, 3.0, 4.0]))
def test_dissipation_single_step(seed, dt, scale, p):
    cfg_, mesh, weights = scenario("distance-pair")
    mesh = build_mesh(0, 1, 32, 2)
    u_n = random_field(np.random.default_rng(seed), mesh, scale)
    cfg = EvolutionConfig(p=p, dt=dt, T=dt)
    u = step_implicit(u_n, cfg, weights, mesh)
    assert l2_squared(u, mesh) <= l2_squared(u_n, mesh) * (1 + 1e-12)


def test_dissipation_along_trace(rng):
    _, mesh, weights = scenario("distance-pair")
    tr = evolve(random_field(rng, mesh), EvolutionConfig(p=3, dt=1e-3, T=0.05), weights, mesh)
    assert tr.status.kind == GLOBAL
    assert np.all(np.diff(tr.l2sq) <= 1e-12 * tr.l2sq[0])


def test_trace_invariants(rng):
    mesh = build_mesh(0, 1, 32)
    tr = evolve(bump(mesh), EvolutionConfig(p=3, dt=0.01, T=0.2), UNIT_PAIR, mesh)
    assert tr.times[0] == 0 and tr.times[-1] == pytest.approx(0.2)
    assert np.all(np.diff(tr.times) > 0)
    assert len({tr.times.size, tr.l2sq.size, tr.dirichlet.size, tr.mass.size}) == 1
    assert tr.energy_budget == 0.5 * tr.l2sq[0]
    assert tr.energy_residual is None


def test_blow_up_status():
    mesh = build_mesh(0, 1, 32)
    cfg = EvolutionConfig(p=3, lam=200.0, dt=1e-3, T=1.0)
    tr = evolve(bump(mesh, 5.0), cfg, UNIT_PAIR, mesh)
    assert tr.status.kind == BLOW_UP
    assert tr.l2sq[-1] >= cfg.blowup_factor * tr.l2sq[0]
    assert tr.status.time == tr.times[-1] < 1.0


def test_solver_failure_status():
    mesh = build_mesh(0, 1, 32)
    cfg = EvolutionConfig(p=3, lam=200.0, dt=1e-3, T=1.0, dt_min=1e-4, picard_max=3)
    tr = evolve(bump(mesh, 5.0), cfg, UNIT_PAIR, mesh)
    assert tr.status.kind == SOLVER_FAILURE and tr.grows()


def test_decay_status():
    mesh = build_mesh(0, 1, 32)
    cfg = EvolutionConfig(p=3, dt=1e-2, T=10.0, decay_factor=0.5)
    tr = evolve(bump(mesh), cfg, UNIT_PAIR, mesh)
    assert tr.status.kind == DECAYED and tr.l2sq[-1] <= 0.5 * tr.l2sq[0]


@pytest.mark.parametrize("kwargs", [
    dict(p=1.5), dict(p=3, lam=-1), dict(p=3, m=0.0), dict(p=3, dt=0.0), dict(p=3, dt=2.0, T=1.0),
    dict(p=3, dt_min=1.0, dt=0.1), dict(p=3, picard_tol=0), dict(p=3, blowup_factor=1.0),
    dict(p=3, relax=1.5), dict(p=3, eps=-1.0),
])
def test_config_validation(kwargs):
    with pytest.raises(ArgumentError):
        EvolutionConfig(**kwargs)


def test_energy_inequality_below_threshold(lambda_hat):
    _, mesh, weights = scenario("distance-pair")
    lam1 = lambda_hat["distance-pair"]
    for frac in (0.3, 0.9):
        tr = evolve(bump(mesh), EvolutionConfig(p=3, lam=frac * lam1, dt=2e-3, T=0.5),
                    weights, mesh, hardy_constant=lam1)
        assert tr.status.kind == GLOBAL
        lhs = 0.5 * tr.l2sq[-1] + (1 - frac) * tr.dissipation
        assert lhs <= tr.energy_budget * (1 + 1e-6)
        assert np.max(tr.l2sq) <= tr.l2sq[0] * (1 + 1e-12)


def test_time_accuracy_first_order():
    mesh = build_mesh(0, 1, 64)
    finals = []
    for dt in (0.01, 0.005, 0.0025):
        tr = evolve(bump(mesh), EvolutionConfig(p=2, dt=dt, T=0.1), UNIT_PAIR, mesh)
        finals.append(tr.l2sq[-1])
    ratio = (finals[0] - finals[1]) / (finals[1] - finals[2])
    assert ratio == pytest.approx(2.0, rel=0.1)


def test_sweep_width_and_bracket_error():
    mesh = build_mesh(0, 1, 32)
    cfg = EvolutionConfig(p=2, dt=0.01, T=0.5)
    f = bump(mesh)
    res = sweep_lambda(f, cfg, UNIT_PAIR, mesh, 5.0, 20.0, 4)
    assert res.width == pytest.approx(15.0 / 2 ** 4, rel=1e-12)
    assert res.bracket[0] < res.lambda_crit < res.bracket[1]
    assert len(res.traces) == 6
    with pytest.raises(BracketError) as err:
        sweep_lambda(f, cfg, UNIT_PAIR, mesh, 20.0, 30.0, 2)
    assert err.value.lo_status is not None
    with pytest.raises(ArgumentError):
        sweep_lambda(f, cfg, UNIT_PAIR, mesh, 3.0, 1.0, 2)


def test_sweep_threshold_independent_of_data_size_p2(lambda_hat):
    # linear case: decay or growth of |u|^2 does not depend on the size of f
    mesh = build_mesh(0, 1, 32)
    cfg = EvolutionConfig(p=2, dt=0.01, T=0.5)
    f = bump(mesh)
    big = sweep_lambda(f, cfg, UNIT_PAIR, mesh, 5.0, 20.0, 8)
    small = sweep_lambda(0.01 * f, cfg, UNIT_PAIR, mesh, 5.0, 20.0, 8)
    assert abs(big.lambda_crit - small.lambda_crit) < big.width


def test_family_study(rng):
    mesh = build_mesh(0, 1, 64, 2)
    w = WeightPair(DistanceBoundary(-4), DistanceBoundary(-1))
    top = float(np.max(w.omega1(mesh.midpoints)))
    cfg = EvolutionConfig(p=3, dt=1e-3, T=0.02)
    lam = 0.1
    study = truncation_family_study(bump(mesh), lam, [10.0, 100.0, 2 * top], cfg, w, mesh,
                                    hardy_constant=0.2)
    assert set(study.traces) == {10.0, 100.0, 2 * top}
    full = evolve(bump(mesh), EvolutionConfig(p=3, lam=lam, dt=1e-3, T=0.02), w, mesh)
    np.testing.assert_array_equal(study.traces[2 * top].l2sq, full.l2sq)
    np.testing.assert_array_equal(study.traces[2 * top].final, full.final)
    for tr in study.traces.values():
        assert tr.dissipation <= tr.energy_budget / (1 - lam / 0.2)
    assert len(study.comparison) == 2 * study.traces[10.0].times.size
    assert all(len(row) == 4 for row in study.comparison)
    with pytest.raises(ArgumentError):
        truncation_family_study(bump(mesh), lam, [10.0, 1.0], cfg, w, mesh)
