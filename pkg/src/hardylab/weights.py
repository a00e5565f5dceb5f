"""Weight functions, their truncations, and numerical admissibility checks.

Weights are immutable callables evaluated at points of a 1D domain (for a
radial mesh the point is the radius).  Evaluation is vectorised and does
no domain checking; use :func:`eval_weight` for a checked scalar lookup.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, DomainError
from .mesh import Radial, element_weights


class Weight:
    """Base class.  Subclasses implement ``__call__`` on arrays."""

    def __call__(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def domain(self):
        return (-np.inf, np.inf)

    @property
    def singular_points(self):
        return ()

    def to_dict(self):  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Weight):
    value: float

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value >= 0):
            raise ArgumentError(f"constant weight must be finite and >= 0, got {self.value}")

    def __call__(self, x):
        return np.full(np.shape(x), float(self.value))

    def to_dict(self):
        return {"kind": "constant", "value": float(self.value)}


@dataclass(frozen=True)
class PowerRadial(Weight):
    """``|x| ** exponent``; singular at the origin when the exponent is negative."""

    exponent: float

    def __call__(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(np.asarray(x, dtype=float)) ** self.exponent

    @property
    def singular_points(self):
        return (0.0,) if self.exponent < 0 else ()

    def to_dict(self):
        return {"kind": "power_radial", "exponent": float(self.exponent)}


@dataclass(frozen=True)
class DistanceBoundary(Weight):
    """``dist(x, boundary) ** exponent`` for a finite set of boundary points.

    For an interval ``(a, b)`` the boundary is ``(a, b)``; for the radial
    reduction of a ball of radius ``R`` it is ``(R,)``.
    """

    exponent: float
    boundary: tuple = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "boundary", tuple(float(b) for b in self.boundary))
        if not self.boundary:
            raise ArgumentError("distance weight needs at least one boundary point")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        dist = np.min(np.abs(x[..., None] - np.asarray(self.boundary)), axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return dist ** self.exponent

    @property
    def domain(self):
        if len(self.boundary) >= 2:
            return (min(self.boundary), max(self.boundary))
        return (-np.inf, self.boundary[0])

    @property
    def singular_points(self):
        return self.boundary if self.exponent < 0 else ()

    def to_dict(self):
        return {"kind": "distance_boundary", "exponent": float(self.exponent),
                "boundary": list(self.boundary)}


@dataclass(frozen=True)
class Tabulated(Weight):
    """Piecewise-linear interpolation of ``(node, value)`` samples."""

    nodes: tuple
    values: tuple
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        nodes = tuple(float(v) for v in self.nodes)
        values = tuple(float(v) for v in self.values)
        if len(nodes) != len(values) or len(nodes) < 2:
            raise ArgumentError("tabulated weight needs >= 2 (node, value) pairs")
        if np.any(np.diff(nodes) <= 0):
            raise ArgumentError("tabulated nodes must be strictly increasing")
        if not all(np.isfinite(values)) or min(values) < 0:
            raise ArgumentError("tabulated values must be finite and nonnegative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#",
                          skiprows=_header_rows(path))
        return cls(tuple(data[:, 0]), tuple(data[:, 1]), source=str(path))

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.nodes, self.values)

    @property
    def domain(self):
        return (self.nodes[0], self.nodes[-1])

    def to_dict(self):
        if self.source is not None:
            return {"kind": "tabulated", "table": self.source}
        return {"kind": "tabulated", "nodes": list(self.nodes), "values": list(self.values)}


@dataclass(frozen=True)
class Truncated(Weight):
    """``T_m`` applied pointwise: values clamped to ``[-level, level]``."""

    base: Weight
    level: float

    def __post_init__(self):
        if not self.level > 0:
            raise ArgumentError(f"truncation level must be > 0, got {self.level}")

    def __call__(self, x):
        v = self.base(x)
        # the singular set evaluates to +inf or nan (0 * inf); both clamp to the level
        v = np.where(np.isnan(v), np.inf, v)
        return np.clip(v, -self.level, self.level)

    @property
    def domain(self):
        return self.base.domain

    def to_dict(self):
        return {"kind": "truncated", "level": float(self.level), "base": self.base.to_dict()}


@dataclass(frozen=True)
class Scaled(Weight):
    base: Weight
    factor: float

    def __post_init__(self):
        if not (np.isfinite(self.factor) and self.factor >= 0):
            raise ArgumentError(f"scale factor must be finite and >= 0, got {self.factor}")

    def __call__(self, x):
        return self.factor * self.base(x)

    @property
    def domain(self):
        return self.base.domain

    @property
    def singular_points(self):
        return self.base.singular_points

    def to_dict(self):
        return {"kind": "scaled", "factor": float(self.factor), "base": self.base.to_dict()}


class WeightPair(NamedTuple):
    omega1: Weight
    omega2: Weight


def _header_rows(path):
    with open(path) as fh:
        first = fh.readline().split(",")[0].strip()
    try:
        float(first)
    except ValueError:
        return 1
    return 0


def eval_weight(w, x):
    """Checked scalar evaluation of ``w`` at ``x``."""
    x = float(x)
    lo, hi = w.domain
    closed = isinstance(_innermost(w), Tabulated)
    inside = lo <= x <= hi if closed else lo < x < hi
    if not inside:
        raise DomainError(f"x={x} is outside the domain {w.domain} of {w!r}")
    return float(w(np.array([x]))[0])


def _innermost(w):
    while isinstance(w, (Truncated, Scaled)):
        w = w.base
    return w


def truncate(values, k):
    """``T_k`` on raw values: identity on ``[-k, k]``, ``k * sign`` outside."""
    if not k > 0:
        raise ArgumentError(f"truncation level must be > 0, got {k}")
    return np.clip(np.asarray(values, dtype=float), -k, k)


def truncate_weight(w, m):
    """The bounded approximant ``W_m = T_m(w)``."""
    if not m > 0:
        raise ArgumentError(f"truncation level must be > 0, got {m}")
    return Truncated(w, float(m))


def weight_from_dict(d, base_dir=None):
    """Build a weight from a config descriptor such as ``{kind, exponent}``."""
    d = dict(d)
    kind = d.pop("kind", None)
    try:
        if kind == "constant":
            return Constant(float(d["value"]))
        if kind == "power_radial":
            return PowerRadial(float(d["exponent"]))
        if kind == "distance_boundary":
            return DistanceBoundary(float(d["exponent"]), tuple(d.get("boundary", (0.0, 1.0))))
        if kind == "tabulated":
            if "table" in d:
                path = d["table"]
                if base_dir is not None and not Path(path).is_absolute():
                    path = str(Path(base_dir) / path)
                w = Tabulated.from_csv(path)
                return Tabulated(w.nodes, w.values, source=d["table"])
            return Tabulated(tuple(d["nodes"]), tuple(d["values"]))
        if kind == "truncated":
            return Truncated(weight_from_dict(d["base"], base_dir), float(d["level"]))
        if kind == "scaled":
            return Scaled(weight_from_dict(d["base"], base_dir), float(d["factor"]))
    except KeyError as exc:
        raise ArgumentError(f"weight descriptor of kind {kind!r} is missing {exc}") from None
    raise ArgumentError(f"unknown weight kind {kind!r}")


# --- admissibility -----------------------------------------------------------

PASS, FAIL, ANALYTIC = "pass", "fail", "analytic-only"
CONDITIONS = ("W1", "W2", "W3", "W4", "W5", "W6")

#: interior region keeps this fraction of the diameter away from the boundary
LOCAL_MARGIN = 0.1
#: an integral is accepted as finite if refining the mesh moves it by less than this
REFINEMENT_RTOL = 0.05
#: successive refinement differences must shrink at least this fast
CONTRACTION = 0.6


@dataclass
class ConditionEntry:
    status: str
    evidence: dict
    note: str = ""

    def to_dict(self):
        return {"status": self.status, "evidence": dict(self.evidence), "note": self.note}


@dataclass
class AdmissibilityReport:
    p: float
    q: float
    s: float
    entries: dict

    @property
    def passed(self):
        return all(e.status != FAIL for e in self.entries.values())

    def to_dict(self):
        return {
            "p": self.p,
            "q": self.q,
            "s": self.s,
            "passed": self.passed,
            "conditions": {k: self.entries[k].to_dict() for k in CONDITIONS},
        }


def local_mask(mesh):
    """Elements whose midpoints stay ``LOCAL_MARGIN * diameter`` away from the boundary.

    The origin of a radial mesh is an interior point of the ball, so it is
    not excluded.
    """
    margin = LOCAL_MARGIN * mesh.diameter
    x = mesh.midpoints
    mask = x <= mesh.b - margin
    if not (isinstance(mesh.metric, Radial) and mesh.a == 0):
        mask &= x >= mesh.a + margin
    return mask


def local_extent(mesh):
    """``(left, right)`` end nodes of the element union selected by :func:`local_mask`."""
    idx = np.flatnonzero(local_mask(mesh))
    if idx.size == 0:
        return float("nan"), float("nan")
    return float(mesh.nodes[idx[0]]), float(mesh.nodes[idx[-1] + 1])


def _power(w, power):
    """``w ** power`` as a weight, with ``0 ** negative = inf``."""
    def f(x):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.asarray(w(x), dtype=float) ** power
    return f


def _quadrature(f, mesh, mask):
    with np.errstate(invalid="ignore", over="ignore"):
        vals = element_weights(f, mesh)
    return float(np.sum(vals[mask]))


def _integrability(f, mesh, local):
    """Quadrature of ``f`` plus a refinement test for finiteness.

    The integral is judged finite when one refinement changes it by at most
    ``REFINEMENT_RTOL`` or when successive refinement differences contract
    by ``CONTRACTION`` (a divergent integral keeps changing by a
    non-shrinking amount).  Returns ``(estimate, refined_estimate, finite)``.
    """
    meshes = [mesh, mesh.refined(), mesh.refined().refined()]
    est = [_quadrature(f, m, local_mask(m) if local else slice(None)) for m in meshes]
    finite = bool(np.all(np.isfinite(est)))
    if finite:
        d1, d2 = abs(est[1] - est[0]), abs(est[2] - est[1])
        scale = max(abs(est[0]), abs(est[1]), np.finfo(float).tiny)
        finite = d1 <= REFINEMENT_RTOL * scale or d2 <= CONTRACTION * d1
    return est[0], est[1], finite


def check_admissibility(omega1, omega2, p, q, s, mesh):
    """Decide the numerically decidable admissibility conditions on ``mesh``.

    Integrability is judged by quadrature on the given mesh together with a
    once-refined copy: a divergent integral keeps growing under refinement
    toward its singular point, a convergent one settles.
    """
    if not p > 2:
        raise ArgumentError(f"admissibility needs p > 2, got p={p}")
    if not p < q < s:
        raise ArgumentError(f"need p < q < s, got p={p}, q={q}, s={s}")
    entries = {}

    # W1: nonnegative, locally integrable
    mids = mesh.midpoints
    w1_mid, w2_mid = omega1(mids), omega2(mids)
    nonneg = bool(np.all(w1_mid[~np.isnan(w1_mid)] >= 0) and np.all(w2_mid[~np.isnan(w2_mid)] >= 0))
    i1, _, ok1 = _integrability(omega1, mesh, local=True)
    i2, _, ok2 = _integrability(omega2, mesh, local=True)
    entries["W1"] = ConditionEntry(
        PASS if (nonneg and ok1 and ok2) else FAIL,
        {"omega1_local": i1, "omega2_local": i2},
        "nonnegative at all midpoints" if nonneg else "negative weight value sampled",
    )

    # W2: global, with the local scope reported alongside
    f2 = _power(omega1, -2.0 / (p - 2.0))
    g_est, g_fine, g_ok = _integrability(f2, mesh, local=False)
    l_est, _, l_ok = _integrability(f2, mesh, local=True)
    entries["W2"] = ConditionEntry(
        PASS if g_ok else FAIL,
        {"global": g_est, "global_refined": g_fine, "local": l_est},
        f"omega1^(-2/(p-2)) in L1 globally: {g_ok}; locally: {l_ok}",
    )

    # W3: omega2 bounded below on the interior region
    lm = local_mask(mesh)
    w3_min = float(np.min(w2_mid[lm])) if np.any(lm) else float("nan")
    entries["W3"] = ConditionEntry(
        PASS if np.isfinite(w3_min) and w3_min > 0 else FAIL,
        {"min_omega2_local": w3_min},
        "minimum of omega2 over interior midpoints",
    )

    entries["W4"] = ConditionEntry(
        ANALYTIC, {},
        "Hardy inequality; its constant is estimated by the Rayleigh-quotient eigensolver",
    )
    entries["W5"] = ConditionEntry(
        ANALYTIC, {},
        "compact embedding; no finite-dimensional content",
    )

    # W6
    a_est, _, a_ok = _integrability(_power(omega1, -q / (s - q)), mesh, local=True)
    b_est, _, b_ok = _integrability(_power(omega2, q / (q - p)), mesh, local=True)
    entries["W6"] = ConditionEntry(
        PASS if (a_ok and b_ok) else FAIL,
        {"omega1_local": a_est, "omega2_local": b_est, "local_extent": list(local_extent(mesh))},
        f"omega1^(-q/(s-q)) locally integrable: {a_ok}; omega2^(q/(q-p)): {b_ok}",
    )
    return AdmissibilityReport(float(p), float(q), float(s), entries)
