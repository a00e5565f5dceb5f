"""Graded 1D meshes, piecewise-linear fields and midpoint quadrature.

A mesh is either a plain interval or the radial reduction of a ball in
dimension ``N``, in which case every integrand picks up the factor
``r**(N - 1)``.  All quadrature is one-point (element midpoints), so a
singular weight is never sampled at its singular point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ArgumentError


@dataclass(frozen=True)
class Interval:
    name = "interval"

    def factor(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    @property
    def dim(self):
        return 1


@dataclass(frozen=True)
class Radial:
    """Radial reduction of a ball in ``dim`` space dimensions."""

    dim: int
    name = "radial"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ArgumentError(f"radial dimension must be a positive integer, got {self.dim}")

    def factor(self, r):
        r = np.asarray(r, dtype=float)
        if self.dim == 1:
            return np.ones_like(r)
        return r ** (self.dim - 1)


@dataclass(frozen=True, eq=False)
class Mesh1D:
    nodes: np.ndarray
    metric: Interval | Radial = field(default_factory=Interval)
    dirichlet_left: bool = True
    dirichlet_right: bool = True
    grading: float = 1.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ArgumentError("a mesh needs at least 2 elements")
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0):
            raise ArgumentError("mesh nodes must be finite and strictly increasing")
        if isinstance(self.metric, Radial):
            if nodes[0] < 0:
                raise ArgumentError("radial meshes need a nonnegative left endpoint")
            if nodes[0] == 0 and self.dirichlet_left:
                raise ArgumentError("the origin of a radial mesh is a symmetry node, not a Dirichlet node")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n(self):
        """Number of elements."""
        return self.nodes.size - 1

    @property
    def a(self):
        return float(self.nodes[0])

    @property
    def b(self):
        return float(self.nodes[-1])

    @property
    def diameter(self):
        return self.b - self.a

    @cached_property
    def h(self):
        return np.diff(self.nodes)

    @cached_property
    def midpoints(self):
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @cached_property
    def measure(self):
        """Per-element ``h * metric_factor(midpoint)``."""
        return self.h * self.metric.factor(self.midpoints)

    @cached_property
    def free(self):
        """Slice of the nodes that are not pinned by a Dirichlet condition."""
        return slice(1 if self.dirichlet_left else 0, self.n if self.dirichlet_right else self.n + 1)

    @cached_property
    def dirichlet_mask(self):
        mask = np.zeros(self.n + 1, dtype=bool)
        mask[0] = self.dirichlet_left
        mask[-1] = self.dirichlet_right
        return mask

    def pin(self, u):
        """Copy of ``u`` with the Dirichlet nodes set to zero."""
        u = np.array(u, dtype=float)
        check_length(u, self.n + 1, "field")
        u[self.dirichlet_mask] = 0.0
        return u

    def is_field(self, u):
        u = np.asarray(u)
        return (
            u.shape == (self.n + 1,)
            and bool(np.all(np.isfinite(u)))
            and bool(np.all(u[self.dirichlet_mask] == 0.0))
        )

    def refined(self):
        """Same family of mesh with twice as many elements."""
        return build_mesh(self.a, self.b, 2 * self.n, self.grading, self.metric,
                          dirichlet_left=self.dirichlet_left,
                          dirichlet_right=self.dirichlet_right)

    def to_dict(self):
        return {
            "a": self.a,
            "b": self.b,
            "n": self.n,
            "grading": self.grading,
            "metric": self.metric.name,
            "N": self.metric.dim,
        }

    def fingerprint(self):
        """Short identifier used in report echoes."""
        d = self.to_dict()
        return "{metric}(N={N})[{a},{b}] n={n} g={grading}".format(**d)


def build_mesh(a, b, n, grading=1.0, metric=None, *, dirichlet_left=None, dirichlet_right=True):
    """Nodes ``a + (b - a) * (i / n) ** grading``, refined toward ``a``.

    By default both ends of an interval are Dirichlet nodes; a radial mesh
    starting at the origin leaves the origin free.
    """
    metric = Interval() if metric is None else metric
    if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
        raise ArgumentError(f"need a < b, got a={a}, b={b}")
    if int(n) != n or n < 2:
        raise ArgumentError(f"need n >= 2 elements, got {n}")
    if not grading >= 1:
        raise ArgumentError(f"grading must be >= 1, got {grading}")
    n = int(n)
    if dirichlet_left is None:
        dirichlet_left = not (isinstance(metric, Radial) and a == 0)
    nodes = a + (b - a) * (np.arange(n + 1) / n) ** grading
    nodes[0], nodes[-1] = a, b
    return Mesh1D(nodes, metric, dirichlet_left, dirichlet_right, float(grading))


def mesh_from_dict(d):
    metric = Radial(int(d.get("N", 1))) if d.get("metric", "interval") == "radial" else Interval()
    return build_mesh(float(d["a"]), float(d["b"]), int(d["n"]), float(d.get("grading", 1.0)), metric)


def check_length(arr, expected, what):
    if np.shape(arr) != (expected,):
        raise ArgumentError(f"{what} has shape {np.shape(arr)}, expected ({expected},)")


def gradient(u, mesh):
    """Element-wise derivative of the piecewise-linear interpolant of ``u``."""
    u = np.asarray(u, dtype=float)
    check_length(u, mesh.n + 1, "field")
    return np.diff(u) / mesh.h


def element_weights(w, mesh):
    """``w(midpoint) * h * metric`` per element: the one-point quadrature weights."""
    return np.asarray(w(mesh.midpoints), dtype=float) * mesh.measure


def integrate(g, w, mesh):
    """Midpoint rule for ``sum_i g_i w(x_{i+1/2}) h_i metric(x_{i+1/2})``."""
    g = np.asarray(g, dtype=float)
    check_length(g, mesh.n, "element array")
    return float(np.sum(g * element_weights(w, mesh)))


def lumped_weights(w, mesh):
    """Per-node weights ``c`` with ``nodal_integrate(g, w, mesh) == c @ g``."""
    ew = element_weights(w, mesh)
    c = np.zeros(mesh.n + 1)
    c[:-1] += 0.5 * ew
    c[1:] += 0.5 * ew
    return c


def nodal_integrate(g, w, mesh):
    """Midpoint rule where the midpoint value is the mean of the two nodal values."""
    g = np.asarray(g, dtype=float)
    check_length(g, mesh.n + 1, "nodal array")
    return integrate(0.5 * (g[:-1] + g[1:]), w, mesh)


def save_field(path, u, mesh):
    u = np.asarray(u, dtype=float)
    check_length(u, mesh.n + 1, "field")
    np.savetxt(path, np.column_stack([mesh.nodes, u]), delimiter=",",
               header="node,value", comments="", fmt="%.17g")


def load_field(path):
    """Return ``(nodes, values)`` from a two-column CSV with a header row."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def save_mesh(path, mesh):
    Path(path).write_text(json.dumps(mesh.to_dict(), indent=2))


def load_mesh(path):
    return mesh_from_dict(json.loads(Path(path).read_text()))
