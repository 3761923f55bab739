"""Composite Gauss-Legendre quadrature shared by the integrators and the
error-bound integrals (one quadrature implementation for everything)."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite Gauss-Legendre rule: ``substeps`` equal panels with
    ``nodes_per_interval`` nodes each."""

    nodes_per_interval: int = 12
    substeps: int = 8

    def __post_init__(self):
        if self.nodes_per_interval < 2:
            raise ValueError("nodes_per_interval must be >= 2")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


@lru_cache(maxsize=32)
def _leggauss(n):
    return np.polynomial.legendre.leggauss(n)


def panel_nodes(a, b, spec):
    """Nodes and weights of the composite rule on ``[a, b]``."""
    if b < a:
        raise ValueError(f"empty interval [{a}, {b}]")
    x, w = _leggauss(spec.nodes_per_interval)
    edges = np.linspace(a, b, spec.substeps + 1)
    nodes = []
    weights = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        nodes.append(0.5 * (lo + hi) + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def integrate(f, a, b, spec):
    """Integrate a scalar- or array-valued ``f`` over ``[a, b]``."""
    if b == a:
        probe = np.asarray(f(a))
        return np.zeros_like(probe, dtype=float) if probe.ndim else 0.0
    nodes, weights = panel_nodes(a, b, spec)
    acc = None
    for t, w in zip(nodes, weights):
        val = w * np.asarray(f(t), dtype=float)
        acc = val if acc is None else acc + val
    return acc
