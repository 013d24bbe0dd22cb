"""The conserved covariant current J(phi, x) as a double quadrature sum.

With a_i = w_i phi(p_i) and u_i = a_i exp(-i p_i.x) the pair sum
  J^mu = (2 pi)^-3 sum_ij conj(u_i) u_j (p_i + p_j)^mu / 2 g(p_i.p_j)
collapses to (2 pi)^-3 sum_i p_i^mu Re(conj(u_i) (G u)_i) because G is real
symmetric; G u for a batch of events is one matrix product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, _g, shell_product_matrix
from .minkowski import PoincareElement, act, covering_map, inverse, on_shell
from .states import MassShellState, QuadratureGrid, _check_mass, apply_rep

PREFACTOR = (2.0 * np.pi) ** -3
EVENT_BLOCK = 256


@dataclass(frozen=True)
class CurrentValue:
    J0: float
    J: np.ndarray
    imag_residue: float = 0.0

    @property
    def four_vector(self) -> np.ndarray:
        return np.concatenate([[self.J0], self.J])

    @property
    def margin(self) -> float:
        return float(self.J0 - np.linalg.norm(self.J))


def _setup(phi: MassShellState, grid: QuadratureGrid, spec: KernelSpec):
    _check_mass(phi.m, grid.m)
    _check_mass(phi.m, spec.m)
    P = on_shell(grid.nodes, grid.m)
    a = grid.weights * phi(grid.nodes)
    return P, a


def gram_matrix(grid: QuadratureGrid, spec: KernelSpec) -> np.ndarray:
    return _g(spec, shell_product_matrix(grid.nodes, grid.nodes, spec.m))


def current_many(
    phi: MassShellState,
    events,
    grid: QuadratureGrid,
    spec: KernelSpec,
    G: np.ndarray | None = None,
) -> np.ndarray:
    """J^mu at every event; returns an (n_events, 4) array."""
    events = np.atleast_2d(np.asarray(events, dtype=float))
    P, a = _setup(phi, grid, spec)
    G = gram_matrix(grid, spec) if G is None else G
    out = np.empty((len(events), 4))
    for s in range(0, len(events), EVENT_BLOCK):
        x = events[s : s + EVENT_BLOCK]
        # p.x in the Minkowski product
        phase = np.outer(x[:, 0], P[:, 0]) - x[:, 1:] @ P[:, 1:].T
        u = a[None, :] * np.exp(-1j * phase)
        # BLAS is only used on contiguous operands; strided .real views are ~300x slower
        ur, ui = np.ascontiguousarray(u.real), np.ascontiguousarray(u.imag)
        yr, yi = ur @ G, ui @ G
        out[s : s + EVENT_BLOCK] = (ur * yr + ui * yi) @ P
    return PREFACTOR * out


def current(phi: MassShellState, x, grid: QuadratureGrid, spec: KernelSpec) -> CurrentValue:
    x = np.asarray(x, dtype=float)
    P, a = _setup(phi, grid, spec)
    G = gram_matrix(grid, spec)
    u = a * np.exp(-1j * (x[0] * P[:, 0] - P[:, 1:] @ x[1:]))
    y = G @ np.ascontiguousarray(u.real) + 1j * (G @ np.ascontiguousarray(u.imag))
    s = np.conj(u) * y
    J = PREFACTOR * (s.real @ P)
    # u^H G u is real for symmetric G; its computed imaginary part measures rounding
    resid = PREFACTOR * abs(np.sum(s).imag) * float(np.max(P[:, 0]))
    return CurrentValue(float(J[0]), J[1:].copy(), float(resid))


def current_naive(phi: MassShellState, x, grid: QuadratureGrid, spec: KernelSpec) -> CurrentValue:
    """Straight double loop over node pairs; the oracle for the fast evaluator."""
    x = np.asarray(x, dtype=float)
    P, a = _setup(phi, grid, spec)
    m2 = spec.m**2
    acc = np.zeros(4, dtype=complex)
    n = len(a)
    for i in range(n):
        ki = P[i]
        for j in range(n):
            pj = P[j]
            t = max(ki[0] * pj[0] - ki[1] * pj[1] - ki[2] * pj[2] - ki[3] * pj[3], m2)
            q = ki - pj
            ph = q[0] * x[0] - q[1] * x[1] - q[2] * x[2] - q[3] * x[3]
            acc += np.conj(a[i]) * a[j] * 0.5 * (ki + pj) * float(_g(spec, np.float64(t))) * np.exp(1j * ph)
    acc *= PREFACTOR
    return CurrentValue(float(acc[0].real), acc[1:].real.copy(), float(np.max(np.abs(acc.imag))))


def divergence(phi: MassShellState, x, grid: QuadratureGrid, spec: KernelSpec, h: float) -> float:
    """Central-difference four-divergence d_mu J^mu at x."""
    if h <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    shifts = np.concatenate([np.eye(4), -np.eye(4)]) * h
    J = current_many(phi, x + shifts, grid, spec)
    return float(sum((J[mu, mu] - J[mu + 4, mu]) / (2 * h) for mu in range(4)))


def causality_margin(phi: MassShellState, x, grid: QuadratureGrid, spec: KernelSpec) -> float:
    return current(phi, x, grid, spec).margin


def causality_margins(phi: MassShellState, events, grid: QuadratureGrid, spec: KernelSpec) -> np.ndarray:
    J = current_many(phi, events, grid, spec)
    return J[:, 0] - np.linalg.norm(J[:, 1:], axis=1)


def event_lattice(n_per_axis: int = 6, half_width: float = 2.0) -> np.ndarray:
    """Regular lattice of events in [-half_width, half_width]^4."""
    s = np.linspace(-half_width, half_width, n_per_axis)
    return np.stack(np.meshgrid(s, s, s, s, indexing="ij"), axis=-1).reshape(-1, 4)


def covariance_residual(
    phi: MassShellState, g: PoincareElement, x, grid: QuadratureGrid, spec: KernelSpec
) -> float:
    """max |J(W(g)phi, x) - Lambda(A) J(phi, g^-1 x)|, relative to |J0|.

    The left side is evaluated on the grid transported by A, the right side
    on the original grid.
    """
    x = np.asarray(x, dtype=float)
    lhs = current(apply_rep(g, phi), x, grid.transported(g.A), spec).four_vector
    rhs = covering_map(g.A) @ current(phi, act(inverse(g), x), grid, spec).four_vector
    scale = max(abs(lhs[0]), abs(rhs[0]), np.finfo(float).tiny)
    return float(np.max(np.abs(lhs - rhs)) / scale)
