"""Density kernels K and K_chi built from the admissible family g_r, with
positive-definiteness checks and a finite-rank (Nystrom) feature map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.stats import qmc

from .minkowski import energy

FAMILIES = ("power", "cos")


class KernelNotPSDError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """g_r(t) = (2 m^2 / (m^2 + t))^r for the 'power' family.

    The 'cos' family g(t) = cos(t / m^2) is not admissible and exists only to
    exhibit causality violations.
    """

    m: float = 1.0
    r: float = 1.5
    family: str = "power"

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "power" and self.r < 1.5:
            raise ValueError(f"r must be >= 3/2, got {self.r}")

    @property
    def admissible(self) -> bool:
        return self.family == "power"


def _g(spec: KernelSpec, t: np.ndarray) -> np.ndarray:
    m2 = spec.m * spec.m
    if spec.family == "power":
        return (2.0 * m2 / (m2 + t)) ** spec.r
    return np.cos(t / m2)


def g_eval(spec: KernelSpec, t):
    """g(t) on the physical range t >= m^2 (t is a product of two on-shell momenta)."""
    t = np.asarray(t, dtype=float)
    m2 = spec.m * spec.m
    # k.p >= m^2 holds exactly; allow rounding from the energy products
    if np.any(t < m2 * (1 - 1e-12)):
        raise ValueError(f"g is defined for t >= m^2 = {m2}; got min t = {t.min()}")
    out = _g(spec, np.maximum(t, m2))
    return out if out.ndim else float(out)


def shell_product(k: np.ndarray, p: np.ndarray, m: float) -> np.ndarray:
    """k.p = eps(k) eps(p) - k.p for on-shell momenta (broadcasting)."""
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    return energy(k, m) * energy(p, m) - np.sum(k * p, axis=-1)


def shell_product_matrix(k: np.ndarray, p: np.ndarray, m: float) -> np.ndarray:
    """Pairwise k_i.p_j, clamped at m^2 (its exact lower bound)."""
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    t = np.outer(energy(k, m), energy(p, m)) - k @ p.T
    return np.maximum(t, m * m)


def kernel_K(spec: KernelSpec, k, p):
    """K(k, p) = (eps(k) + eps(p)) g(k.p) / 2; K(p, p) = eps(p)."""
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    t = np.maximum(shell_product(k, p, spec.m), spec.m**2)
    return 0.5 * (energy(k, spec.m) + energy(p, spec.m)) * _g(spec, t)


def kernel_Kchi(spec: KernelSpec, k, p):
    """K_chi(k, p) = (eps(k) - k3 + eps(p) - p3) g(k.p) / 2."""
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    t = np.maximum(shell_product(k, p, spec.m), spec.m**2)
    h = light_cone_weight(k, spec.m) + light_cone_weight(p, spec.m)
    return 0.5 * h * _g(spec, t)


def light_cone_weight(p, m: float) -> np.ndarray:
    """eps(p) - p3, written as m_perp^2 / (eps + p3) where that is stabler."""
    p = np.asarray(p, dtype=float)
    eps = energy(p, m)
    p3 = p[..., 2]
    mperp2 = m * m + p[..., 0] ** 2 + p[..., 1] ** 2
    return np.where(p3 > 0, mperp2 / (eps + p3), eps - p3)


def gram_K(spec: KernelSpec, k: np.ndarray, p: np.ndarray | None = None) -> np.ndarray:
    p = k if p is None else p
    eps_k, eps_p = energy(k, spec.m), energy(p, spec.m)
    return 0.5 * (eps_k[:, None] + eps_p[None, :]) * _g(spec, shell_product_matrix(k, p, spec.m))


def gram_normalized_Kchi(spec: KernelSpec, k: np.ndarray, p: np.ndarray | None = None) -> np.ndarray:
    """K_chi(k, p) / sqrt(h(k) h(p)) with h = eps - p3; unit diagonal."""
    p = k if p is None else p
    hk, hp = light_cone_weight(k, spec.m), light_cone_weight(p, spec.m)
    G = _g(spec, shell_product_matrix(k, p, spec.m))
    return 0.5 * (hk[:, None] + hp[None, :]) * G / np.sqrt(np.outer(hk, hp))


@dataclass(frozen=True)
class PSDReport:
    min_eig: float
    trace: float

    @property
    def accepted(self) -> bool:
        return self.min_eig >= -1e-8 * self.trace


def psd_check(kernel, points) -> PSDReport:
    """Smallest eigenvalue of the Gram matrix of `kernel` on `points`.

    `kernel(k, p)` must broadcast over leading axes.
    """
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        raise ValueError("psd_check needs at least two points")
    G = kernel(points[:, None, :], points[None, :, :])
    G = 0.5 * (G + G.T)
    return PSDReport(float(np.linalg.eigvalsh(G)[0]), float(np.trace(G)))


def normalized_kchi(spec: KernelSpec):
    """The unit-diagonal kernel K_chi(k,p)/sqrt(h(k)h(p)) as a broadcasting callable."""

    def kern(k, p):
        return kernel_Kchi(spec, k, p) / np.sqrt(light_cone_weight(k, spec.m) * light_cone_weight(p, spec.m))

    return kern


# --------------------------------------------------------------------------
# Nystrom feature map


@dataclass(frozen=True)
class NystromFactor:
    """Anchors q_j and lower-triangular L with L L^T = Gram(anchors) + jitter I."""

    spec: KernelSpec
    anchors: np.ndarray
    L: np.ndarray
    jitter: float

    @property
    def rank(self) -> int:
        return len(self.anchors)


def nystrom_factor(spec: KernelSpec, anchors) -> NystromFactor:
    anchors = np.asarray(anchors, dtype=float)
    G = gram_normalized_Kchi(spec, anchors)
    tr = float(np.trace(G))
    for rel in (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6):
        try:
            L = cholesky(G + rel * tr * np.eye(len(G)), lower=True)
        except np.linalg.LinAlgError:
            continue
        return NystromFactor(spec, anchors, L, rel * tr)
    raise KernelNotPSDError(f"Cholesky failed with jitter up to 1e-6 * trace on {len(G)} anchors")


def rkhs_vector(factor: NystromFactor, p) -> np.ndarray:
    """v(p) = L^-1 k(anchors, p); rows of the result are v(p_i)."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    col = gram_normalized_Kchi(factor.spec, factor.anchors, p)
    return solve_triangular(factor.L, col, lower=True).T


def ball_anchors(n: int, center, radius: float, seed: int = 0) -> np.ndarray:
    """n points of a scrambled Sobol sequence mapped into a ball.

    The smallest power-of-two block holding n points inside the inscribed
    ball is drawn, keeping the sequence order.
    """
    if n < 1:
        raise ValueError("need at least one anchor")
    k = int(np.ceil(np.log2(n))) + 1
    while True:
        u = 2.0 * qmc.Sobol(d=3, scramble=True, seed=seed).random_base2(k) - 1.0
        u = u[np.sum(u * u, axis=1) < 1.0]
        if len(u) >= n:
            return np.asarray(center, dtype=float) + radius * u[:n]
        k += 1


def anchor_factor(spec: KernelSpec, center, radius: float, n_anchors: int = 512, seed: int = 0) -> NystromFactor:
    return nystrom_factor(spec, ball_anchors(n_anchors, center, radius, seed))
