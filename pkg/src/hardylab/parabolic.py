"""Backward-Euler evolution of the truncated parabolic problems.

Each step solves::

    M (u - u_n) / dt + A(u) = lam * R(u)

with ``M`` the lumped mass, ``A`` the weighted p-Laplacian (positive form)
and ``R(u) = c_W |u|^(p-2) u`` the lumped reaction for ``W = T_m(omega1)``.
The nonlinear system is solved by Picard lagging: both ``|u'|^(p-2)`` and
``|u|^(p-2)`` are frozen at the previous iterate, so every inner problem is
one tridiagonal symmetric solve.  For ``p > 2`` the plain lagged map
oscillates (a diffusion-dominated amplitude ``s`` maps to about
``s^-(p-2)``), so iterates are relaxed with factor ``2/p`` by default,
which balances the extremes of the linearised spectrum.

At ``lam = 0`` every Picard iterate, hence every accepted step, satisfies
``|u|_M <= |u_n|_M`` exactly up to rounding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from .errors import ArgumentError, BracketError, PicardError
from .mesh import Radial, element_weights, lumped_weights
from .operators import UNIT, default_eps, stiffness_banded
from .weights import truncate_weight

log = logging.getLogger(__name__)

GLOBAL, BLOW_UP, SOLVER_FAILURE, DECAYED = "global", "blow-up", "solver-failure", "decayed"
#: consecutive accepted steps before a halved dt may grow again
REGROW_AFTER = 3


@dataclass(frozen=True)
class EvolutionConfig:
    p: float
    lam: float = 0.0
    m: float | None = None
    dt: float = 1e-3
    T: float = 1.0
    eps: float | None = None
    picard_max: int = 200
    picard_tol: float = 1e-10
    blowup_factor: float = 1e6
    dt_min: float = 1e-30
    relax: float | None = None
    decay_factor: float | None = None

    def __post_init__(self):
        if not self.p >= 2:
            raise ArgumentError(f"evolution needs p >= 2, got p={self.p}")
        if not self.lam >= 0:
            raise ArgumentError(f"lam must be >= 0, got {self.lam}")
        if self.m is not None and not self.m > 0:
            raise ArgumentError(f"truncation level must be > 0, got {self.m}")
        if not (self.dt > 0 and self.T >= self.dt and 0 < self.dt_min <= self.dt):
            raise ArgumentError("need 0 < dt_min <= dt <= T")
        if not (self.picard_tol > 0 and self.picard_max >= 1 and self.blowup_factor > 1):
            raise ArgumentError("need picard_tol > 0, picard_max >= 1, blowup_factor > 1")
        if self.eps is not None and self.eps < 0:
            raise ArgumentError("eps must be >= 0")
        if self.relax is not None and not 0 < self.relax <= 1:
            raise ArgumentError("relax must lie in (0, 1]")
        if self.decay_factor is not None and not 0 < self.decay_factor < 1:
            raise ArgumentError("decay_factor must lie in (0, 1)")


@dataclass(frozen=True)
class Status:
    kind: str
    time: float | None = None

    def to_dict(self):
        return {"kind": self.kind, "time": self.time}

    def __str__(self):
        return self.kind if self.time is None else f"{self.kind}(t={self.time:.6g})"


@dataclass
class EvolutionTrace:
    times: np.ndarray
    l2sq: np.ndarray
    dirichlet: np.ndarray
    mass: np.ndarray
    status: Status
    lam: float
    m: float | None
    hardy_constant: float | None = None
    final: np.ndarray | None = None
    fields: list | None = None
    rejected_steps: int = 0

    @property
    def energy_budget(self):
        """``0.5 * |f|^2``."""
        return 0.5 * float(self.l2sq[0])

    @property
    def dissipation(self):
        """``sum dt_k * dirichlet_k`` over accepted steps (right-endpoint rule)."""
        return float(np.sum(np.diff(self.times) * self.dirichlet[1:]))

    @property
    def energy_residual(self):
        """``0.5 l2sq(T) + (1 - lam/K) sum dt D - 0.5 l2sq(0)``; ``None`` without ``K``."""
        if self.hardy_constant is None:
            return None
        factor = 1.0 - self.lam / self.hardy_constant
        return 0.5 * float(self.l2sq[-1]) + factor * self.dissipation - self.energy_budget

    def grows(self):
        if self.status.kind in (BLOW_UP, SOLVER_FAILURE):
            return True
        return bool(self.l2sq[-1] >= self.l2sq[0])

    def summary(self):
        return {
            "status": self.status.to_dict(),
            "lam": self.lam,
            "m": self.m,
            "steps": int(self.times.size - 1),
            "rejected_steps": self.rejected_steps,
            "t_final": float(self.times[-1]),
            "l2sq_initial": float(self.l2sq[0]),
            "l2sq_final": float(self.l2sq[-1]),
            "energy_budget": self.energy_budget,
            "dissipation": self.dissipation,
            "hardy_constant": self.hardy_constant,
            "energy_residual": self.energy_residual,
        }


class _Stepper:
    """Quadrature data shared by all steps of one evolution."""

    def __init__(self, cfg, weights, mesh):
        omega1, omega2 = weights
        self.cfg = cfg
        self.mesh = mesh
        self.p = cfg.p
        self.h = mesh.h
        self.free = mesh.free
        self.ew2 = element_weights(omega2, mesh)
        self.reaction_weight = omega1 if cfg.m is None else truncate_weight(omega1, cfg.m)
        self.cw = lumped_weights(self.reaction_weight, mesh)
        self.mlump = lumped_weights(UNIT, mesh)
        self.eps = default_eps(mesh) if cfg.eps is None else cfg.eps
        self.relax = 2.0 / cfg.p if cfg.relax is None else cfg.relax
        if not (np.all(np.isfinite(self.ew2)) and np.all(np.isfinite(self.cw[self.free]))):
            raise ArgumentError("weights are not finite at the quadrature points")

    def energies(self, u):
        g = np.diff(u) / self.h
        p = self.p
        return (
            float(self.mlump @ (u * u)),
            float(self.ew2 @ np.abs(g) ** p),
            float(self.cw @ np.abs(u) ** p),
        )

    def step(self, u_n, dt):
        cfg, p, free = self.cfg, self.p, self.free
        b = self.mlump[free] / dt
        rhs = b * u_n[free]
        u = u_n.copy()
        scale = max(float(np.max(np.abs(u_n))), np.finfo(float).tiny)
        for _ in range(cfg.picard_max):
            g = np.diff(u) / self.h
            if p == 2:
                coef = self.ew2 / self.h ** 2
            else:
                coef = self.ew2 * (g * g + self.eps ** 2) ** (0.5 * (p - 2)) / self.h ** 2
            ab = stiffness_banded(coef, self.mesh)
            ab[1] += b
            if cfg.lam:
                ab[1] -= cfg.lam * self.cw[free] * np.abs(u[free]) ** (p - 2)
            try:
                v_free = solveh_banded(ab, rhs, check_finite=False)
            except (LinAlgError, ValueError) as exc:
                raise PicardError(f"inner system not positive definite at dt={dt:.3g}") from exc
            if not np.all(np.isfinite(v_free)):
                raise PicardError("non-finite Picard iterate")
            v = np.zeros_like(u)
            v[free] = v_free
            diff = v - u
            scale = max(scale, float(np.max(np.abs(v))))
            u = u + self.relax * diff
            if float(np.max(np.abs(diff))) <= cfg.picard_tol * scale:
                return u
        raise PicardError(f"Picard iteration did not converge in {cfg.picard_max} iterations")


def step_implicit(u_n, cfg, weights, mesh, dt=None):
    """One backward-Euler step of size ``dt`` (default ``cfg.dt``).

    Raises :class:`PicardError` when the lagged iteration fails; halving the
    step is left to the caller.
    """
    u_n = np.asarray(u_n, dtype=float)
    if not mesh.is_field(u_n):
        raise ArgumentError("u_n must be a finite field pinned at the Dirichlet nodes")
    return _Stepper(cfg, weights, mesh).step(u_n, cfg.dt if dt is None else dt)


def bump(mesh, amplitude=1.0):
    """Sine bump vanishing at the Dirichlet nodes (cosine quarter-wave from a radial origin)."""
    s = (mesh.nodes - mesh.a) / mesh.diameter
    if isinstance(mesh.metric, Radial) and not mesh.dirichlet_left:
        shape = np.cos(0.5 * np.pi * s)
    else:
        shape = np.sin(np.pi * s)
    return mesh.pin(amplitude * shape)


def evolve(f, cfg, weights, mesh, hardy_constant=None, keep_fields=False):
    """Integrate from ``u(0) = f`` to ``cfg.T`` with halving-on-failure step control.

    Stops early on blow-up (``l2sq >= blowup_factor * l2sq(0)``), on decay
    below ``decay_factor * l2sq(0)`` when that is configured, or with
    ``solver-failure`` once the step would drop below ``dt_min``.
    """
    f = np.asarray(f, dtype=float)
    if not mesh.is_field(f):
        raise ArgumentError("initial data must be a finite field pinned at the Dirichlet nodes")
    stepper = _Stepper(cfg, weights, mesh)
    u = f.copy()
    l2, dn, ms = stepper.energies(u)
    times, l2s, dns, mss = [0.0], [l2], [dn], [ms]
    fields = [u.copy()] if keep_fields else None
    l2_0 = l2
    t, dt = 0.0, cfg.dt
    status = Status(GLOBAL)
    ok_streak = rejected = 0
    t_end_tol = 1e-12 * cfg.T

    while cfg.T - t > t_end_tol:
        dt_try = min(dt, cfg.T - t)
        try:
            u_new = stepper.step(u, dt_try)
        except PicardError as exc:
            rejected += 1
            ok_streak = 0
            dt = 0.5 * dt_try
            if dt < cfg.dt_min:
                log.info("evolve: %s; dt %.3g < dt_min at t=%.6g", exc, dt, t)
                status = Status(SOLVER_FAILURE, t)
                break
            continue
        u = u_new
        t = cfg.T if cfg.T - (t + dt_try) <= t_end_tol else t + dt_try
        l2, dn, ms = stepper.energies(u)
        times.append(t)
        l2s.append(l2)
        dns.append(dn)
        mss.append(ms)
        if keep_fields:
            fields.append(u.copy())
        ok_streak += 1
        if dt < cfg.dt and ok_streak >= REGROW_AFTER:
            dt = min(2.0 * dt, cfg.dt)
            ok_streak = 0
        if l2_0 > 0 and (not np.isfinite(l2) or l2 >= cfg.blowup_factor * l2_0):
            status = Status(BLOW_UP, t)
            break
        if cfg.decay_factor is not None and l2 <= cfg.decay_factor * l2_0:
            status = Status(DECAYED, t)
            break

    return EvolutionTrace(
        times=np.array(times),
        l2sq=np.array(l2s),
        dirichlet=np.array(dns),
        mass=np.array(mss),
        status=status,
        lam=cfg.lam,
        m=cfg.m,
        hardy_constant=hardy_constant,
        final=u,
        fields=fields,
        rejected_steps=rejected,
    )


@dataclass
class SweepResult:
    lambda_crit: float
    bracket: tuple
    traces: list = field(default_factory=list)

    @property
    def width(self):
        return self.bracket[1] - self.bracket[0]


def sweep_lambda(f, cfg, weights, mesh, lam_lo, lam_hi, bisection_steps, hardy_constant=None):
    """Bisect for the ``lam`` where the terminal L2 norm switches from decay to growth.

    A run grows if it blows up, fails, or ends with ``l2sq(T) >= l2sq(0)``.
    Returns the bracket midpoint and every ``(lam, trace)`` evaluated.
    """
    if not (0 <= lam_lo < lam_hi):
        raise ArgumentError(f"need 0 <= lam_lo < lam_hi, got {lam_lo}, {lam_hi}")
    if bisection_steps < 0:
        raise ArgumentError("bisection_steps must be >= 0")

    def run(lam):
        return evolve(f, replace(cfg, lam=lam), weights, mesh, hardy_constant)

    lo_trace, hi_trace = run(lam_lo), run(lam_hi)
    traces = [(lam_lo, lo_trace), (lam_hi, hi_trace)]
    if lo_trace.grows() or not hi_trace.grows():
        raise BracketError(
            f"bracket [{lam_lo}, {lam_hi}] does not separate decay from growth: "
            f"lo -> {lo_trace.status} (l2sq {lo_trace.l2sq[0]:.3g} -> {lo_trace.l2sq[-1]:.3g}), "
            f"hi -> {hi_trace.status} (l2sq {hi_trace.l2sq[0]:.3g} -> {hi_trace.l2sq[-1]:.3g})",
            str(lo_trace.status), str(hi_trace.status),
        )
    lo, hi = lam_lo, lam_hi
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        tr = run(mid)
        traces.append((mid, tr))
        if tr.grows():
            hi = mid
        else:
            lo = mid
        log.debug("sweep: lam=%.8g -> %s, bracket [%.8g, %.8g]", mid, tr.status, lo, hi)
    return SweepResult(0.5 * (lo + hi), (lo, hi), traces)


@dataclass
class FamilyStudy:
    traces: dict
    comparison: list

    def violations(self):
        """Comparison rows where the larger truncation level gives a smaller field somewhere."""
        return [row for row in self.comparison if row[3] < 0]


def truncation_family_study(f, lam, m_list, cfg, weights, mesh, hardy_constant=None):
    """Evolve every truncation level and compare consecutive members.

    Each comparison row is ``(m, m_next, t, min_x(u_{m_next} - u_m))`` over
    the time samples the two traces share.  Monotonicity in ``m`` is
    measured here, not assumed.
    """
    m_list = [float(m) for m in m_list]
    if not m_list or np.any(np.diff(m_list) <= 0):
        raise ArgumentError("m_list must be nonempty and strictly increasing")
    traces = {}
    for m in m_list:
        traces[m] = evolve(f, replace(cfg, lam=lam, m=m), weights, mesh, hardy_constant,
                           keep_fields=True)
    comparison = []
    for m0, m1 in zip(m_list, m_list[1:]):
        a, b = traces[m0], traces[m1]
        # exact float equality: both traces step on the same grid unless a step was rejected
        common, ia, ib = np.intersect1d(a.times, b.times, return_indices=True)
        for t, i, j in zip(common, ia, ib):
            comparison.append((m0, m1, float(t), float(np.min(b.fields[j] - a.fields[i]))))
    return FamilyStudy(traces, comparison)
