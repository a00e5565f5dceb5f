"""Discrete weighted energies and the weighted p-Laplacian in weak form.

Fields are nodal arrays on a :class:`~hardylab.mesh.Mesh1D`.  Gradients are
element-constant, so the Dirichlet energy is integrated exactly per
element; the zero-order energies use the lumped (trapezoid-like) rule of
:func:`~hardylab.mesh.nodal_integrate`.

Sign convention: :func:`apply_plap` returns the positive form, i.e. the
weak action of ``-div(w |grad u|^(p-2) grad u)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .mesh import Mesh1D, check_length, element_weights, gradient, lumped_weights
from .weights import Constant

UNIT = Constant(1.0)


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float
    mass: float
    l2sq: float

    @property
    def quotient(self):
        """Rayleigh quotient, or ``None`` when the mass vanishes."""
        return self.dirichlet / self.mass if self.mass > 0 else None


def default_eps(mesh):
    return 1e-8 / mesh.diameter


def _check_p(p, minimum=1.0, strict=True):
    if not (p > minimum if strict else p >= minimum):
        op = ">" if strict else ">="
        raise ArgumentError(f"need p {op} {minimum}, got p={p}")


def _abs_pow(x, p):
    return np.abs(x) ** p


def dirichlet_energy(u, omega2, p, mesh):
    """``int omega2 |grad u|^p`` (radial metric included)."""
    _check_p(p)
    g = gradient(u, mesh)
    return float(np.sum(_abs_pow(g, p) * element_weights(omega2, mesh)))


def mass_energy(u, omega1, p, mesh):
    """``int omega1 |u|^p`` with the lumped nodal rule."""
    _check_p(p)
    u = np.asarray(u, dtype=float)
    check_length(u, mesh.n + 1, "field")
    return float(lumped_weights(omega1, mesh) @ _abs_pow(u, p))


def l2_squared(u, mesh):
    u = np.asarray(u, dtype=float)
    check_length(u, mesh.n + 1, "field")
    return float(lumped_weights(UNIT, mesh) @ (u * u))


def energy_breakdown(u, omega1, omega2, p, mesh):
    return EnergyBreakdown(
        dirichlet_energy(u, omega2, p, mesh),
        mass_energy(u, omega1, p, mesh),
        l2_squared(u, mesh),
    )


def quotient(u, omega1, omega2, p, mesh):
    return energy_breakdown(u, omega1, omega2, p, mesh).quotient


def element_flux(g, ew, p, eps, h):
    """``ew * (g^2 + eps^2)^((p-2)/2) * g / h``: the weak-form flux per element."""
    if p == 2:
        coef = 1.0
    elif eps == 0:
        coef = _abs_pow(g, p - 2)
    else:
        coef = (g * g + eps * eps) ** (0.5 * (p - 2))
    return ew * coef * g / h


def scatter_flux(flux, n_nodes):
    """Assemble ``r_j = flux_{j-1} - flux_j`` (hat-function test functions)."""
    r = np.zeros(n_nodes)
    r[1:] += flux
    r[:-1] -= flux
    return r


def apply_plap(u, omega2, p, mesh, eps=0.0):
    """Residual vector of the weighted p-Laplacian tested with every hat function.

    Dirichlet rows return the boundary value itself (identity rows), so for a
    pinned field ``apply_plap(u) @ u == dirichlet_energy(u)`` when ``eps == 0``.
    """
    if p < 2:
        raise ArgumentError(f"apply_plap needs p >= 2, got p={p}")
    if eps < 0:
        raise ArgumentError(f"eps must be >= 0, got {eps}")
    u = np.asarray(u, dtype=float)
    g = gradient(u, mesh)
    r = scatter_flux(element_flux(g, element_weights(omega2, mesh), p, eps, mesh.h), mesh.n + 1)
    r[mesh.dirichlet_mask] = u[mesh.dirichlet_mask]
    return r


def pairing_L_lambda(u, lam, omega1, omega2, p, mesh):
    """``<L_lambda u, u> = int omega2 |grad u|^p - lam int omega1 |u|^p``."""
    return dirichlet_energy(u, omega2, p, mesh) - lam * mass_energy(u, omega1, p, mesh)


def stiffness_banded(coef, mesh):
    """Tridiagonal ``sum_e coef_e * [[1, -1], [-1, 1]]`` restricted to the free nodes.

    Returned in the upper banded layout of :func:`scipy.linalg.solveh_banded`.
    """
    n_nodes = mesh.n + 1
    diag = np.zeros(n_nodes)
    diag[:-1] += coef
    diag[1:] += coef
    off = -np.asarray(coef, dtype=float)
    free = mesh.free
    d = diag[free]
    o = off[free.start:free.stop - 1]
    ab = np.zeros((2, d.size))
    ab[0, 1:] = o
    ab[1] = d
    return ab


def rescale(u, mesh, mu, p):
    """Spatial rescaling ``u_mu(x) = mu^(N/p) u(mu x)`` on the mesh with nodes ``x / mu``.

    Only meaningful for weights that are homogeneous under dilation (power
    weights); used to probe how the pairing behaves under concentration.
    """
    if not mu > 0:
        raise ArgumentError(f"scale must be > 0, got {mu}")
    dim = mesh.metric.dim
    scaled = Mesh1D(mesh.nodes / mu, mesh.metric, mesh.dirichlet_left,
                    mesh.dirichlet_right, mesh.grading)
    return mu ** (dim / p) * np.asarray(u, dtype=float), scaled
