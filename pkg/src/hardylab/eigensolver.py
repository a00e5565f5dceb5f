"""First eigenvalue of the weighted p-Laplacian by Rayleigh-quotient descent.

The quotient ``Q(u) = int w2 |u'|^p / int w1 |u|^p`` is minimised by descent
on ``log Q`` over the free nodes.  The search direction is the gradient
taken in the inner product of the lagged stiffness matrix (frozen
coefficients ``w2 (|u'|^2 + delta^2)^((p-2)/2)``); for ``p = 2`` a unit step
is exactly one inverse-iteration step.  Steps are accepted by Armijo
backtracking, so the recorded quotient history never increases, and the
iterate is renormalised to unit mass after every step.

The quotient is nonconvex for ``p != 2``; the result is the best local
minimum found from the given start, never a certified global one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded

from .errors import ArgumentError, DivergenceError, InitializationError
from .mesh import Radial, element_weights, lumped_weights
from .operators import element_flux, scatter_flux, stiffness_banded
from .weights import truncate_weight

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 20000
ARMIJO_FACTOR = 0.5
SUFFICIENT_DECREASE = 1e-4
STALL_WINDOW = 5
NOISE_AMPLITUDE = 0.01
MIN_STEP = 1e-14
PRECOND_FLOOR = 1e-3


@dataclass
class RayleighReport:
    lambda_est: float
    minimizer: np.ndarray
    iterations: int
    history: list
    converged: bool
    p: float
    m: float | None = None
    mesh_id: str = ""
    note: str = ""

    def to_dict(self):
        return {
            "lambda": self.lambda_est,
            "iterations": self.iterations,
            "converged": self.converged,
            "p": self.p,
            "m": self.m,
            "mesh": self.mesh_id,
            "note": self.note,
        }


@dataclass
class StudyRow:
    m: float
    report: RayleighReport

    @property
    def lam(self):
        return self.report.lambda_est


@dataclass
class EigenStudy:
    rows: list
    untruncated: RayleighReport
    weights_reused: bool = False
    extras: dict = field(default_factory=dict)

    def table(self):
        return [(r.m, r.lam) for r in self.rows]


def initial_guess(mesh, seed):
    """Positive sine bump with 1% multiplicative seeded noise, pinned."""
    rng = np.random.default_rng(seed)
    s = (mesh.nodes - mesh.a) / mesh.diameter
    if isinstance(mesh.metric, Radial) and not mesh.dirichlet_left:
        bump = np.cos(0.5 * np.pi * s)
    else:
        bump = np.sin(np.pi * s)
    u = bump * (1.0 + NOISE_AMPLITUDE * rng.standard_normal(mesh.n + 1))
    return mesh.pin(u)


class _Quotient:
    """Precomputed quadrature for ``log D - log M`` and its gradient."""

    def __init__(self, omega1, omega2, p, mesh):
        self.p = p
        self.mesh = mesh
        self.h = mesh.h
        self.ew = element_weights(omega2, mesh)
        self.c = lumped_weights(omega1, mesh)
        self.free = mesh.free
        if not (np.all(np.isfinite(self.ew)) and np.all(np.isfinite(self.c))):
            raise ArgumentError("weights are not finite at the quadrature points; refine or truncate")

    def energies(self, u):
        g = np.diff(u) / self.h
        return float(self.ew @ np.abs(g) ** self.p), float(self.c @ np.abs(u) ** self.p)

    def value(self, u):
        d, m = self.energies(u)
        if not (d > 0 and m > 0 and np.isfinite(d) and np.isfinite(m)):
            return np.inf
        return np.log(d) - np.log(m)

    def gradient(self, u, d, m):
        p = self.p
        g = np.diff(u) / self.h
        grad_d = p * scatter_flux(element_flux(g, self.ew, p, 0.0, self.h), u.size)
        grad_m = p * self.c * np.abs(u) ** (p - 2) * u
        return (grad_d / d - grad_m / m)[self.free]

    def preconditioner(self, u, d):
        """Banded ``(p / D) K_lag`` on the free nodes."""
        p = self.p
        g = np.diff(u) / self.h
        if p == 2:
            a = np.ones_like(g)
        else:
            # floor relative to the median: singular profiles span many decades of |g|,
            # a max-based floor would swamp the small gradients
            ag = np.abs(g)
            delta = PRECOND_FLOOR * float(np.median(ag)) or PRECOND_FLOOR * float(np.max(ag))
            delta = max(delta, np.finfo(float).tiny)
            a = (g * g + delta * delta) ** (0.5 * (p - 2))
        return (p / d) * stiffness_banded(self.ew * a / self.h ** 2, self.mesh)

    def normalize(self, u):
        _, m = self.energies(u)
        return u / m ** (1.0 / self.p)


def minimize_rayleigh(omega1, omega2, p, mesh, *, max_iters=DEFAULT_MAX_ITERS, tol=DEFAULT_TOL,
                      seed=0, initial=None, m=None):
    """Estimate ``inf Q`` over fields pinned at the Dirichlet nodes.

    ``initial`` warm-starts the descent; otherwise a seeded positive bump is
    used.  ``m`` is only echoed in the report.
    """
    if not p >= 2:
        raise ArgumentError(f"minimize_rayleigh needs p >= 2, got p={p}")
    if not (tol > 0 and max_iters >= 1):
        raise ArgumentError("need tol > 0 and max_iters >= 1")
    quo = _Quotient(omega1, omega2, p, mesh)
    u = initial_guess(mesh, seed) if initial is None else mesh.pin(initial)
    d, mass = quo.energies(u)
    if not (mass > 0 and np.isfinite(mass)):
        raise InitializationError("initial guess has zero (or non-finite) weighted mass")
    u = quo.normalize(u)
    d, mass = quo.energies(u)
    f = np.log(d) - np.log(mass)
    history = [d / mass]

    converged = False
    stalls = 0
    it = 0
    for it in range(1, max_iters + 1):
        grad = quo.gradient(u, d, mass)
        try:
            direction = -solveh_banded(quo.preconditioner(u, d), grad, check_finite=False)
        except (LinAlgError, ValueError):
            direction = -grad
        slope = float(grad @ direction)
        step = 1.0
        accepted = False
        if slope < 0:
            while step >= MIN_STEP:
                trial = u.copy()
                trial[quo.free] += step * direction
                f_trial = quo.value(trial)
                if f_trial <= f + SUFFICIENT_DECREASE * step * slope:
                    accepted = True
                    break
                step *= ARMIJO_FACTOR
        if accepted:
            u = quo.normalize(trial)
            d_new, m_new = quo.energies(u)
            if not (np.isfinite(d_new) and np.isfinite(m_new) and m_new > 0):
                raise DivergenceError(
                    f"non-finite energy at iteration {it}",
                    _report(u, quo, history, it - 1, False, p, m, mesh, "diverged"),
                )
            q_new = d_new / m_new
            # renormalisation can shift the quotient by rounding; never record an increase
            q_new = min(q_new, history[-1])
            d, mass = d_new, m_new
            f = np.log(d) - np.log(mass)
        else:
            q_new = history[-1]
        rel = (history[-1] - q_new) / abs(q_new)
        history.append(q_new)
        stalls = stalls + 1 if rel < tol else 0
        if stalls >= STALL_WINDOW:
            converged = True
            break

    note = ""
    interior = u[quo.free]
    interior = interior[interior != 0]
    if interior.size and np.sign(interior.min()) != np.sign(interior.max()):
        converged = False
        note = "minimizer changes sign on interior nodes; local minimum suspected"
    elif not converged:
        note = f"max_iters={max_iters} reached"
    if np.all(u[quo.free] <= 0):
        u = -u
    log.debug("rayleigh: p=%s m=%s iters=%d lambda=%.12g", p, m, it, history[-1])
    return _report(u, quo, history, it, converged, p, m, mesh, note)


def _report(u, quo, history, iterations, converged, p, m, mesh, note):
    d, mass = quo.energies(u)
    return RayleighReport(
        lambda_est=d / mass,
        minimizer=u,
        iterations=iterations,
        history=list(history),
        converged=converged,
        p=p,
        m=m,
        mesh_id=mesh.fingerprint(),
        note=note,
    )


def truncated_eigen_study(omega1, omega2, p, mesh, m_list, *, max_iters=DEFAULT_MAX_ITERS,
                          tol=DEFAULT_TOL, seed=0):
    """Eigenvalues of the truncated problems ``W_m = T_m(omega1)`` for increasing ``m``.

    Each run warm-starts from the previous minimizer; the untruncated
    estimate is computed last, from the final row's minimizer.  When the last
    truncation is inactive at every quadrature point the untruncated problem
    is the same discrete problem and that row's report is reused.
    """
    m_list = [float(m) for m in m_list]
    if not m_list or np.any(np.diff(m_list) <= 0):
        raise ArgumentError("m_list must be nonempty and strictly increasing")
    rows = []
    start = None
    for m in m_list:
        rep = minimize_rayleigh(truncate_weight(omega1, m), omega2, p, mesh, max_iters=max_iters,
                                tol=tol, seed=seed, initial=start, m=m)
        if not rep.converged:
            log.warning("eigen study row m=%g did not converge: %s", m, rep.note)
        rows.append(StudyRow(m, rep))
        start = rep.minimizer

    last = truncate_weight(omega1, m_list[-1])
    c_last = lumped_weights(last, mesh)
    c_full = lumped_weights(omega1, mesh)
    if np.array_equal(c_last, c_full):
        return EigenStudy(rows, rows[-1].report, weights_reused=True)
    full = minimize_rayleigh(omega1, omega2, p, mesh, max_iters=max_iters, tol=tol, seed=seed,
                             initial=start)
    return EigenStudy(rows, full)


def generalized_eigen_oracle(omega1, omega2, mesh):
    """Smallest eigenvalue of ``K x = lam C x`` for ``p = 2`` by a dense solve.

    ``K`` is the weighted stiffness matrix and ``C`` the lumped weighted mass,
    both restricted to the free nodes.  Independent of the descent.
    """
    from scipy.linalg import eigh

    n_nodes = mesh.n + 1
    ew = element_weights(omega2, mesh) / mesh.h ** 2
    K = np.zeros((n_nodes, n_nodes))
    for e in range(mesh.n):
        K[e:e + 2, e:e + 2] += ew[e] * np.array([[1.0, -1.0], [-1.0, 1.0]])
    C = np.diag(lumped_weights(omega1, mesh))
    free = mesh.free
    vals = eigh(K[free, free], C[free, free], eigvals_only=True)
    return float(vals[0])
