"""Wavefunctions on the mass shell and quadrature rules for the invariant measure.

A state is a complex amplitude phi(p) on 3-momentum space; the norm is
||phi||^2 = int |phi(p)|^2 d^3p / eps(p).  Quadrature weights in this module
always include the 1/eps factor, so that sum_i w_i f(p_i) approximates
int f do.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .minkowski import (
    IDENTITY_SPINOR,
    PoincareElement,
    SpinorMatrix,
    compose,
    covering_map,
    energy,
    minkowski_product,
    on_shell,
)


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n < 1:
        raise ValueError("need at least one Gauss-Legendre node")
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_interval(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


# --------------------------------------------------------------------------
# momentum profiles


@dataclass(frozen=True)
class BumpProfile:
    """exp(-1/(1 - |(p-p0)/width|^2)) inside the ball |p - p0| < width."""

    center: tuple[float, float, float]
    width: float

    def __call__(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        q = np.sum((p - np.asarray(self.center)) ** 2, axis=-1) / self.width**2
        out = np.zeros(q.shape)
        inside = q < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - q[inside]))
        return out

    @property
    def support(self) -> tuple[np.ndarray, float]:
        return np.asarray(self.center, dtype=float), float(self.width)


@dataclass(frozen=True)
class GaussianProfile:
    """exp(-|p-p0|^2 / (2 sigma^2)) cut off at |p - p0| >= cutoff."""

    center: tuple[float, float, float]
    sigma: float
    cutoff: float

    def __call__(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        d2 = np.sum((p - np.asarray(self.center)) ** 2, axis=-1)
        return np.where(d2 < self.cutoff**2, np.exp(-0.5 * d2 / self.sigma**2), 0.0)

    @property
    def support(self) -> tuple[np.ndarray, float]:
        return np.asarray(self.center, dtype=float), float(self.cutoff)


@dataclass(frozen=True)
class ZeroProfile:
    def __call__(self, p: np.ndarray) -> np.ndarray:
        return np.zeros(np.asarray(p).shape[:-1])

    @property
    def support(self) -> tuple[np.ndarray, float]:
        return np.zeros(3), 0.0


# --------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class MassShellState:
    """phi = scale * W(history) profile, evaluated lazily.

    The accumulated Poincare element is composed rather than resampled, so
    repeated boosts do not lose precision.
    """

    m: float
    profile: Callable[[np.ndarray], np.ndarray]
    p_max: float
    scale: complex = 1.0
    history: PoincareElement = field(default_factory=PoincareElement.identity)

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m}")

    def amplitude(self, p) -> np.ndarray:
        """(W(a, A) phi0)(p) = e^{i a.p} phi0(A^-1 . p) with p on shell."""
        p = np.asarray(p, dtype=float)
        g = self.history
        if g.A == IDENTITY_SPINOR:
            arg = p
        else:
            lam_inv = covering_map(g.A.inverse())
            arg = on_shell(p, self.m) @ lam_inv[1:, :].T
        out = self.scale * self.profile(arg).astype(complex)
        if np.any(g.a != 0.0):
            out = out * np.exp(1j * minkowski_product(g.a, on_shell(p, self.m)))
        return out

    __call__ = amplitude

    @property
    def rotation_only(self) -> bool:
        """True when the accumulated Lorentz part is a rotation (support stays a ball)."""
        return self.history.A.is_unitary()

    def support_ball(self) -> tuple[np.ndarray, float]:
        """Center and radius of a ball containing the momentum support."""
        if not self.rotation_only:
            raise ValueError("support of a boosted state is not a ball; use a transported grid")
        center, radius = getattr(self.profile, "support", (np.zeros(3), self.p_max))
        center = covering_map(self.history.A)[1:, 1:] @ center
        return center, radius

    def scaled(self, c: complex) -> "MassShellState":
        return replace(self, scale=self.scale * c)

    def is_zero(self) -> bool:
        return self.scale == 0 or isinstance(self.profile, ZeroProfile)


def zero_state(m: float = 1.0, p_max: float = 1.0) -> MassShellState:
    return MassShellState(m=m, profile=ZeroProfile(), p_max=p_max, scale=0.0)


def bump_state(
    m: float = 1.0,
    p_max: float = 2.0,
    center=(0.0, 0.0, 0.0),
    width: float = 2.0,
    normalize: bool = True,
) -> MassShellState:
    """Smooth compactly supported state; the reference state is the default."""
    center = tuple(float(c) for c in np.asarray(center, dtype=float))
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    if np.linalg.norm(center) + width > p_max * (1 + 1e-12):
        raise ValueError(f"support |p0| + width = {np.linalg.norm(center) + width} exceeds p_max = {p_max}")
    state = MassShellState(m=m, profile=BumpProfile(center, float(width)), p_max=float(p_max))
    return normalized(state) if normalize else state


def gaussian_state(
    m: float = 1.0,
    p_max: float = 2.0,
    center=(0.0, 0.0, 0.0),
    sigma: float | None = None,
    normalize: bool = True,
) -> MassShellState:
    """Gaussian truncated where it drops below 1e-16 relative to its peak."""
    center = tuple(float(c) for c in np.asarray(center, dtype=float))
    radius = p_max - float(np.linalg.norm(center))
    if radius <= 0:
        raise ValueError("center lies outside the p_max ball")
    cut_sigma = radius / np.sqrt(2 * np.log(1e16))
    if sigma is not None and sigma > cut_sigma * (1 + 1e-12):
        raise ValueError(f"sigma = {sigma} too wide for p_max: the cutoff needs sigma <= {cut_sigma:.6g}")
    sigma = cut_sigma if sigma is None else float(sigma)
    state = MassShellState(m=m, profile=GaussianProfile(center, sigma, radius), p_max=float(p_max))
    return normalized(state) if normalize else state


# --------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes p_i and weights w_i with sum_i w_i f(p_i) ~ int f(p) d^3p / eps(p)."""

    m: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 3 or weights.shape != (nodes.shape[0],):
            raise ValueError("nodes must be (N, 3) and weights (N,)")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def energies(self) -> np.ndarray:
        return energy(self.nodes, self.m)

    def transported(self, A: SpinorMatrix) -> "QuadratureGrid":
        """Nodes mapped by Lambda(A), weights kept (do is Lorentz invariant)."""
        lam = covering_map(A)
        nodes = on_shell(self.nodes, self.m) @ lam[1:, :].T
        return QuadratureGrid(self.m, nodes, self.weights)

    def restricted(self, mask: np.ndarray) -> "QuadratureGrid":
        return QuadratureGrid(self.m, self.nodes[mask], self.weights[mask])


def make_grid(m: float, p_max: float, n_per_axis: int) -> QuadratureGrid:
    """Tensor Gauss-Legendre rule on [-p_max, p_max]^3 for the measure d^3p/eps."""
    if n_per_axis < 2:
        raise ValueError("n_per_axis must be at least 2")
    x, w = gl_interval(n_per_axis, -p_max, p_max)
    nodes = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)
    weights = np.einsum("i,j,k->ijk", w, w, w).reshape(-1)
    return QuadratureGrid(m, nodes, weights / energy(nodes, m))


def ball_grid(m: float, center, radius: float, n_radial: int = 48, n_polar: int = 32, n_azimuth: int = 32) -> QuadratureGrid:
    """Spherical product rule on a ball: GL in r and cos(theta), trapezoid in phi."""
    r, wr = gl_interval(n_radial, 0.0, radius)
    c, wc = gauss_legendre(n_polar)
    phi = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    s = np.sqrt(1 - c * c)
    R, (C, S), PHI = r[:, None, None], (c[None, :, None], s[None, :, None]), phi[None, None, :]
    nodes = np.stack(np.broadcast_arrays(R * S * np.cos(PHI), R * S * np.sin(PHI), R * C), axis=-1).reshape(-1, 3)
    nodes = nodes + np.asarray(center, dtype=float)
    weights = (wr[:, None, None] * r[:, None, None] ** 2 * wc[None, :, None] * (2 * np.pi / n_azimuth)) * np.ones((1, 1, n_azimuth))
    return QuadratureGrid(m, nodes, weights.reshape(-1) / energy(nodes, m))


def reference_grid(state: MassShellState) -> QuadratureGrid:
    """High-accuracy rule matched to the state's support ball."""
    if state.rotation_only:
        center, radius = state.support_ball()
        if radius > 0:
            return ball_grid(state.m, center, radius)
    return make_grid(state.m, state.p_max, 48)


def norm_squared(phi: MassShellState, grid: QuadratureGrid | None = None) -> float:
    grid = reference_grid(phi) if grid is None else grid
    _check_mass(phi.m, grid.m)
    return float(np.sum(grid.weights * np.abs(phi(grid.nodes)) ** 2))


def inner_product(phi: MassShellState, psi: MassShellState, grid: QuadratureGrid) -> complex:
    """<phi, psi> = sum_i w_i conj(phi(p_i)) psi(p_i)."""
    _check_mass(phi.m, psi.m)
    _check_mass(phi.m, grid.m)
    return complex(np.sum(grid.weights * np.conj(phi(grid.nodes)) * psi(grid.nodes)))


def normalized(state: MassShellState) -> MassShellState:
    n2 = norm_squared(state)
    if n2 <= 0:
        raise ValueError("cannot normalize the zero state")
    return state.scaled(1.0 / np.sqrt(n2))


def apply_rep(g: PoincareElement, phi: MassShellState) -> MassShellState:
    """W(g) phi; histories compose so W(g)W(h) = W(gh)."""
    return replace(phi, history=compose(g, phi.history))


def _check_mass(m1: float, m2: float) -> None:
    if abs(m1 - m2) > 1e-14 * max(1.0, abs(m1)):
        raise ValueError(f"mass mismatch: {m1} vs {m2}")
