import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardylab.errors import ArgumentError, DomainError
from hardylab.mesh import Radial, build_mesh
from hardylab.weights import (
    ANALYTIC,
    FAIL,
    PASS,
    Constant,
    DistanceBoundary,
    PowerRadial,
    Scaled,
    Tabulated,
    check_admissibility,
    eval_weight,
    local_extent,
    truncate,
    truncate_weight,
    weight_from_dict,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)
level = st.floats(1e-3, 1e6)


def test_eval_examples():
    assert eval_weight(Constant(3), 0.5) == 3
    assert eval_weight(PowerRadial(-3), 0.5) == pytest.approx(8.0, rel=1e-15)
    assert eval_weight(PowerRadial(-3), -0.5) == pytest.approx(8.0, rel=1e-15)
    assert eval_weight(DistanceBoundary(-1), 0.25) == pytest.approx(4.0, rel=1e-15)
    assert eval_weight(DistanceBoundary(-1), 0.75) == pytest.approx(4.0, rel=1e-15)


def test_eval_outside_domain():
    with pytest.raises(DomainError):
        eval_weight(DistanceBoundary(-1), 1.5)
    with pytest.raises(DomainError):
        eval_weight(DistanceBoundary(-1), 0.0)
    tab = Tabulated((0.0, 1.0), (1.0, 3.0))
    assert eval_weight(tab, 1.0) == 3.0
    assert eval_weight(tab, 0.25) == pytest.approx(1.5)
    with pytest.raises(DomainError):
        eval_weight(tab, 1.01)


def test_truncate_examples():
    assert eval_weight(truncate_weight(Constant(3), 5), 0.7) == 3
    assert eval_weight(truncate_weight(PowerRadial(-3), 5), 0.1) == 5
    assert truncate_weight(PowerRadial(-3), 5)(np.array([0.0]))[0] == 5
    with pytest.raises(ArgumentError):
        truncate_weight(Constant(1), 0)
    with pytest.raises(ArgumentError):
        truncate([1.0], -1)


@given(finite, level)
def test_truncation_clamps(v, k):
    t = truncate([v], k)[0]
    assert abs(t) <= k
    if abs(v) <= k:
        assert t == v
    else:
        assert t == np.sign(v) * k


@given(finite, level, level)
def test_truncation_monotone_in_level(v, k1, k2):
    lo, hi = sorted((k1, k2))
    a, b = truncate([v], lo)[0], truncate([v], hi)[0]
    assert abs(a) <= abs(b) <= abs(v)
    if v >= 0:
        assert a <= b <= v


@settings(max_examples=50)
@given(st.floats(1e-4, 1.0), st.floats(-6, -0.5), level, level)
def test_truncated_weight_bounded_by_weight(x, exponent, k1, k2):
    w = PowerRadial(exponent)
    lo, hi = sorted((k1, k2))
    a = truncate_weight(w, lo)(np.array([x]))[0]
    b = truncate_weight(w, hi)(np.array([x]))[0]
    assert a <= b <= w(np.array([x]))[0]


def test_truncation_converges_to_weight():
    x = np.linspace(0.01, 1, 50)
    w = DistanceBoundary(-4)
    top = float(np.max(w(x)))
    np.testing.assert_array_equal(truncate_weight(w, top)(x), w(x))


def test_weight_descriptors(tmp_path):
    (tmp_path / "w.csv").write_text("node,value\n0,1\n1,2\n")
    w = weight_from_dict({"kind": "tabulated", "table": "w.csv"}, tmp_path)
    assert w(np.array([0.5]))[0] == pytest.approx(1.5)
    assert w.to_dict() == {"kind": "tabulated", "table": "w.csv"}
    (tmp_path / "bare.csv").write_text("0,4\n2,0\n")
    assert Tabulated.from_csv(tmp_path / "bare.csv")(np.array([1.0]))[0] == pytest.approx(2.0)
    for w in (Constant(2.0), PowerRadial(-3.0), DistanceBoundary(-4.0),
              truncate_weight(PowerRadial(-3.0), 10.0), Scaled(DistanceBoundary(-1.0), 7.0),
              Tabulated((0.0, 1.0), (2.0, 5.0))):
        assert weight_from_dict(json.loads(json.dumps(w.to_dict()))) == w
    with pytest.raises(ArgumentError):
        weight_from_dict({"kind": "mystery"})
    with pytest.raises(ArgumentError):
        weight_from_dict({"kind": "power_radial"})
    with pytest.raises(ArgumentError):
        Constant(-1.0)
    with pytest.raises(ArgumentError):
        Tabulated((0.0, 0.0), (1.0, 1.0))


def test_admissibility_preconditions():
    mesh = build_mesh(0, 1, 16)
    one = Constant(1.0)
    with pytest.raises(ArgumentError):
        check_admissibility(one, one, 2.0, 4, 6, mesh)
    with pytest.raises(ArgumentError):
        check_admissibility(one, one, 3.0, 6, 4, mesh)
    with pytest.raises(ArgumentError):
        check_admissibility(one, one, 3.0, 3, 6, mesh)


def test_admissibility_constants():
    rep = check_admissibility(Constant(1.0), Constant(1.0), 3.0, 4.0, 6.0, build_mesh(0, 1, 64))
    assert rep.passed
    assert {k: e.status for k, e in rep.entries.items()} == {
        "W1": PASS, "W2": PASS, "W3": PASS, "W4": ANALYTIC, "W5": ANALYTIC, "W6": PASS}
    assert rep.entries["W2"].evidence["global"] == pytest.approx(1.0, rel=1e-14)


def test_admissibility_radial_pair_small_mesh():
    # n=4 is far too coarse for 1% accuracy, but integrability is still decided
    rep = check_admissibility(PowerRadial(-3), Constant(1.0), 3, 4, 6, build_mesh(0, 1, 4, 1, Radial(4)))
    assert rep.entries["W2"].status == PASS
    assert np.isfinite(rep.entries["W2"].evidence["global"])


def test_admissibility_radial_pair():
    mesh = build_mesh(0, 1, 512, 2, Radial(4))
    rep = check_admissibility(PowerRadial(-3), Constant(1.0), 3, 4, 6, mesh)
    assert rep.passed
    for key in ("W1", "W2", "W3", "W6"):
        assert rep.entries[key].status == PASS
    # int_0^1 r^6 r^3 dr
    assert rep.entries["W2"].evidence["global"] == pytest.approx(0.1, rel=0.01)


def test_admissibility_distance_pair():
    mesh = build_mesh(0, 1, 512, 2)
    rep = check_admissibility(DistanceBoundary(-4), DistanceBoundary(-1), 3, 4, 6, mesh)
    assert rep.passed
    # int_0^1 d^8 = 2 * 0.5^9 / 9 = 1/2304
    assert rep.entries["W2"].evidence["global"] == pytest.approx(1 / 2304, rel=0.01)
    assert rep.entries["W3"].evidence["min_omega2_local"] == pytest.approx(2.0, rel=0.01)


def test_admissibility_detects_divergence():
    # omega1 = r^3 gives omega1^(-2) = r^-6, not integrable against r dr near 0
    mesh = build_mesh(0, 1, 256, 2, Radial(2))
    rep = check_admissibility(PowerRadial(3.0), Constant(1.0), 3, 4, 6, mesh)
    assert rep.entries["W2"].status == FAIL
    assert not rep.passed
    # borderline: omega1 = r gives r^-2 * r, a logarithmic divergence
    rep = check_admissibility(PowerRadial(1.0), Constant(1.0), 3, 4, 6, mesh)
    assert rep.entries["W2"].status == FAIL
    rep = check_admissibility(Constant(1.0), Constant(0.0), 3, 4, 6, build_mesh(0, 1, 32))
    assert rep.entries["W3"].status == FAIL


def test_admissibility_is_deterministic():
    mesh = build_mesh(0, 1, 128, 2)
    args = (DistanceBoundary(-4), DistanceBoundary(-1), 3, 4, 6, mesh)
    a = json.dumps(check_admissibility(*args).to_dict(), sort_keys=True)
    b = json.dumps(check_admissibility(*args).to_dict(), sort_keys=True)
    assert a == b


def test_local_extent_keeps_margin():
    lo, hi = local_extent(build_mesh(0, 1, 512, 2))
    assert 0.1 - 0.004 < lo < 0.1 + 0.004 and 0.9 - 0.004 < hi < 0.9 + 0.004
    lo, _ = local_extent(build_mesh(0, 1, 512, 2, Radial(4)))
    assert lo == 0.0
