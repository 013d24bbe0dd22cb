"""Achronal surfaces given as graphs x0 = tau(x) and regions on them.

Regions are described by their spatial projection; a point (tau(x), x) lies
in the region iff x lies in the projection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .minkowski import PoincareElement, act, boost, covering_map

LIPSCHITZ_TOL = 1e-12


def _vec3(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


# --------------------------------------------------------------------------
# surfaces


@dataclass(frozen=True, eq=False)
class FlatSurface:
    """The hyperplane x0 = offset + slope . x."""

    slope: np.ndarray
    offset: float = 0.0

    def tau(self, x) -> np.ndarray:
        return self.offset + np.asarray(x, dtype=float) @ self.slope

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.slope, x.shape).copy()

    def embed(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([self.tau(x)[..., None], x], axis=-1)

    @property
    def is_lightlike(self) -> bool:
        return abs(float(np.linalg.norm(self.slope)) - 1.0) < 1e-12

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FlatSurface)
            and np.allclose(self.slope, other.slope, rtol=0, atol=1e-14)
            and abs(self.offset - other.offset) < 1e-14
        )

    def __hash__(self) -> int:
        return hash((tuple(np.round(self.slope, 14)), round(self.offset, 14)))


@dataclass(frozen=True, eq=False)
class SpacelikePlane(FlatSurface):
    """x0 = t0 + v . x with |v| < 1."""

    def __post_init__(self):
        v = _vec3(self.slope)
        if np.linalg.norm(v) >= 1.0:
            raise ValueError(f"spacelike plane needs |v| < 1, got |v| = {np.linalg.norm(v)}")
        object.__setattr__(self, "slope", v)
        object.__setattr__(self, "offset", float(self.offset))

    def __repr__(self) -> str:
        return f"SpacelikePlane(v={self.slope.tolist()}, t0={self.offset})"


@dataclass(frozen=True, eq=False)
class LightPlane(FlatSurface):
    """The lightlike hyperplane {x : x.(1, e) = tau0}, i.e. x0 = tau0 + e . x."""

    def __post_init__(self):
        e = _vec3(self.slope)
        if abs(np.linalg.norm(e) - 1.0) > 1e-9:
            raise ValueError("light plane direction must be a unit vector")
        object.__setattr__(self, "slope", e / np.linalg.norm(e))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def direction(self) -> np.ndarray:
        return self.slope

    def __repr__(self) -> str:
        return f"LightPlane(e={self.slope.tolist()}, tau0={self.offset})"


def spacelike_plane(v=(0.0, 0.0, 0.0), t0: float = 0.0) -> SpacelikePlane:
    return SpacelikePlane(np.asarray(v, dtype=float), t0)


def light_plane(e=(0.0, 0.0, 1.0), tau0: float = 0.0) -> LightPlane:
    return LightPlane(np.asarray(e, dtype=float), tau0)


def boosted_plane(rho: float, axis=(0.0, 0.0, 1.0), t0: float = 0.0) -> SpacelikePlane:
    """The image of {x0 = 0} under the boost of rapidity rho along axis, shifted by t0 in time."""
    return spacelike_plane(math.tanh(rho) * np.asarray(axis, dtype=float), t0)


EPSILON = spacelike_plane()
CHI = light_plane()


@dataclass(frozen=True, eq=False)
class GraphSurface:
    """A general 1-Lipschitz graph; flux is only available through x-quadrature."""

    tau_fn: Callable[[np.ndarray], np.ndarray]
    grad_fn: Callable[[np.ndarray], np.ndarray]

    def tau(self, x) -> np.ndarray:
        return np.asarray(self.tau_fn(np.asarray(x, dtype=float)), dtype=float)

    def grad(self, x) -> np.ndarray:
        return np.asarray(self.grad_fn(np.asarray(x, dtype=float)), dtype=float)

    def embed(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([self.tau(x)[..., None], x], axis=-1)


# --------------------------------------------------------------------------
# projections


@dataclass(frozen=True)
class Box:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("box bounds must have three entries")
        if any(h < l for l, h in zip(lo, hi)):
            raise ValueError(f"box has hi < lo: {lo} {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, half: float, center=(0.0, 0.0, 0.0)) -> "Box":
        c = np.asarray(center, dtype=float)
        return cls(tuple(c - half), tuple(c + half))

    @property
    def is_empty(self) -> bool:
        return any(h <= l for l, h in zip(self.lo, self.hi))

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo) & (x <= self.hi), axis=-1)


@dataclass(frozen=True)
class Strip:
    """{x : lo <= x . axis <= hi}, unbounded across the axis."""

    axis: tuple[float, float, float]
    lo: float
    hi: float

    def __post_init__(self):
        u = np.asarray(self.axis, dtype=float)
        if u.shape != (3,) or abs(np.linalg.norm(u) - 1) > 1e-9:
            raise ValueError("strip axis must be a unit 3-vector")
        if self.hi < self.lo:
            raise ValueError(f"strip has hi < lo: [{self.lo}, {self.hi}]")
        object.__setattr__(self, "axis", tuple(float(c) for c in u / np.linalg.norm(u)))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @classmethod
    def along_z(cls, lo: float, hi: float) -> "Strip":
        return cls((0.0, 0.0, 1.0), lo, hi)

    @property
    def is_empty(self) -> bool:
        return self.hi <= self.lo

    def contains(self, x) -> np.ndarray:
        s = np.asarray(x, dtype=float) @ np.asarray(self.axis)
        return (s >= self.lo) & (s <= self.hi)


@dataclass(frozen=True)
class HalfSpace:
    """{x : x . axis >= bound} when upper is True, else {x . axis <= bound}."""

    axis: tuple[float, float, float]
    bound: float
    upper: bool = True

    def __post_init__(self):
        u = np.asarray(self.axis, dtype=float)
        if u.shape != (3,) or abs(np.linalg.norm(u) - 1) > 1e-9:
            raise ValueError("half-space axis must be a unit 3-vector")
        object.__setattr__(self, "axis", tuple(float(c) for c in u / np.linalg.norm(u)))
        object.__setattr__(self, "bound", float(self.bound))

    @property
    def is_empty(self) -> bool:
        return False

    def complement(self) -> "HalfSpace":
        return HalfSpace(self.axis, self.bound, not self.upper)

    def contains(self, x) -> np.ndarray:
        s = np.asarray(x, dtype=float) @ np.asarray(self.axis)
        return s >= self.bound if self.upper else s <= self.bound


@dataclass(frozen=True)
class All:
    @property
    def is_empty(self) -> bool:
        return False

    def contains(self, x) -> np.ndarray:
        return np.ones(np.asarray(x).shape[:-1], dtype=bool)


@dataclass(frozen=True)
class DilatedBox:
    """Points within Euclidean distance `radius` of a box."""

    box: Box
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("dilation radius must be nonnegative")

    @property
    def is_empty(self) -> bool:
        return self.box.is_empty and self.radius == 0

    def distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = np.maximum(np.maximum(np.asarray(self.box.lo) - x, x - np.asarray(self.box.hi)), 0.0)
        return np.sqrt(np.sum(d * d, axis=-1))

    def contains(self, x) -> np.ndarray:
        return self.distance(x) <= self.radius

    def bounding_box(self) -> Box:
        return Box(tuple(np.asarray(self.box.lo) - self.radius), tuple(np.asarray(self.box.hi) + self.radius))


Projection = Union[Box, Strip, HalfSpace, All, DilatedBox]


@dataclass(frozen=True)
class Region:
    surface: object
    projection: Projection = field(default_factory=All)

    def contains(self, x4, atol: float = 1e-9) -> np.ndarray:
        """Membership of spacetime points (..., 4)."""
        x4 = np.asarray(x4, dtype=float)
        on = np.abs(x4[..., 0] - self.surface.tau(x4[..., 1:])) <= atol
        return on & self.projection.contains(x4[..., 1:])


# --------------------------------------------------------------------------
# piecewise flat surfaces


@dataclass(frozen=True)
class PiecewiseFlat:
    """Flat pieces whose projection cells partition R^3 up to null sets."""

    pieces: tuple[tuple[FlatSurface, Projection], ...]
    names: tuple[str, ...] = ()

    def _piece_index(self, x: np.ndarray) -> np.ndarray:
        idx = np.full(x.shape[:-1], -1)
        for i, (_, cell) in enumerate(self.pieces):
            idx = np.where((idx < 0) & cell.contains(x), i, idx)
        return idx

    def tau(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = self._piece_index(x)
        if np.any(idx < 0):
            raise ValueError("point outside every cell")
        out = np.empty(x.shape[:-1])
        for i, (surf, _) in enumerate(self.pieces):
            sel = idx == i
            out[sel] = surf.tau(x[sel])
        return out

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = self._piece_index(x)
        out = np.empty(x.shape)
        for i, (surf, _) in enumerate(self.pieces):
            sel = idx == i
            out[sel] = surf.slope
        return out

    def embed(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([self.tau(x)[..., None], x], axis=-1)

    def regions(self) -> list[Region]:
        return [Region(s, c) for s, c in self.pieces]


def aet_surface(alpha: float, beta: float) -> PiecewiseFlat:
    """{x0 = alpha, x3 <= alpha} u {x0 = x3, alpha < x3 <= beta} u {x0 = beta, x3 > beta}."""
    if not alpha < beta:
        raise ValueError(f"need alpha < beta, got {alpha}, {beta}")
    z = (0.0, 0.0, 1.0)
    return PiecewiseFlat(
        (
            (spacelike_plane(t0=alpha), HalfSpace(z, alpha, upper=False)),
            (CHI, Strip(z, alpha, beta)),
            (spacelike_plane(t0=beta), HalfSpace(z, beta, upper=True)),
        ),
        names=("Delta", "X", "Gamma"),
    )


# --------------------------------------------------------------------------
# geometry checks and maps


def lipschitz_check(surface, n_pairs: int = 10_000, scale: float = 4.0, seed: int = 0) -> float:
    """Largest sampled |tau(x) - tau(y)| / |x - y|; at most 1 for achronal graphs.

    Pairs are drawn both globally and at short range so kinks are probed.
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(-scale, scale, (n_pairs, 3))
    far = rng.uniform(-scale, scale, (n_pairs // 2, 3))
    near = x[n_pairs // 2 :] + rng.normal(scale=0.05, size=(n_pairs - n_pairs // 2, 3))
    y = np.concatenate([far, near])
    d = np.linalg.norm(x - y, axis=1)
    keep = d > 1e-12
    return float(np.max(np.abs(surface.tau(x[keep]) - surface.tau(y[keep])) / d[keep]))


def l_rho(rho: float, x) -> np.ndarray:
    """Deformation of {x0 = 0} onto the plane of slope tanh(rho); rho may be inf."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    x = np.asarray(x, dtype=float)
    f = 0.0 if math.isinf(rho) else math.exp(-2.0 * rho)
    x3 = x[..., 2]
    return np.stack([0.5 * (1 - f) * x3, x[..., 0], x[..., 1], 0.5 * (1 + f) * x3], axis=-1)


def l_infty(x) -> np.ndarray:
    return l_rho(math.inf, x)


def boost_strip_image(rho: float, lo: float, hi: float) -> Region:
    """l_rho of the strip {lo <= x3 <= hi} on {x0 = 0}.

    For finite rho this is the boost of {lo e^-rho <= x3 <= hi e^-rho}; its
    projection on the plane of slope tanh(rho) is scaled by cosh(rho) e^-rho.
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if math.isinf(rho):
        return Region(CHI, Strip.along_z(lo / 2, hi / 2))
    s = 0.5 * (1 + math.exp(-2 * rho))
    return Region(boosted_plane(rho), Strip.along_z(s * lo, s * hi))


def region_of_influence(region: Region, sigma: FlatSurface) -> Region:
    """Points of the later plane sigma causally reachable from region.

    Both planes must be constant-time planes {x0 = alpha} and {x0 = beta}.
    """
    src = region.surface
    for s in (src, sigma):
        if not isinstance(s, FlatSurface) or np.any(s.slope != 0):
            raise ValueError("region of influence is only supported between constant-time planes")
    d = sigma.offset - src.offset
    if d < 0:
        raise ValueError("target plane must not precede the source plane")
    proj = region.projection
    if isinstance(proj, All):
        new = proj
    elif isinstance(proj, HalfSpace):
        new = HalfSpace(proj.axis, proj.bound + (d if not proj.upper else -d), proj.upper)
    elif isinstance(proj, Strip):
        new = Strip(proj.axis, proj.lo - d, proj.hi + d)
    elif isinstance(proj, Box):
        new = proj if d == 0 else DilatedBox(proj, d)
    elif isinstance(proj, DilatedBox):
        new = DilatedBox(proj.box, proj.radius + d)
    else:
        raise ValueError(f"unsupported projection {proj!r}")
    return Region(sigma, new)


def transform_flat_region(g: PoincareElement, region: Region) -> Region:
    """g . region for a flat region.

    The projection map S(x) = spatial part of g.(tau(x), x) is affine, so
    strips and half-spaces map to strips and half-spaces; boxes are
    supported when S keeps the coordinate axes.
    """
    surf = region.surface
    if not isinstance(surf, FlatSurface):
        raise ValueError("only flat regions can be transformed")
    lam = covering_map(g.A)
    M, c = _projection_affine(g, surf)
    # image plane: y0 = a0 + lam0 . (tau(x), x) written as a function of y = S(x)
    row0 = lam[0, 1:] + lam[0, 0] * surf.slope
    const0 = g.a[0] + lam[0, 0] * surf.offset
    slope = np.linalg.solve(M.T, row0)
    offset = float(const0 - slope @ c)
    new_surface = LightPlane(slope, offset) if surf.is_lightlike else SpacelikePlane(slope, offset)
    proj = region.projection
    if isinstance(proj, All):
        return Region(new_surface, proj)
    if isinstance(proj, (Strip, HalfSpace)):
        w = np.linalg.solve(M.T, np.asarray(proj.axis))
        nw = float(np.linalg.norm(w))
        shift = float(w @ c)
        axis = tuple(w / nw)
        if isinstance(proj, Strip):
            return Region(new_surface, Strip(axis, (proj.lo + shift) / nw, (proj.hi + shift) / nw))
        return Region(new_surface, HalfSpace(axis, (proj.bound + shift) / nw, proj.upper))
    if isinstance(proj, Box):
        off = M - np.diag(np.diag(M))
        if np.max(np.abs(off)) > 1e-12 * max(1.0, np.max(np.abs(M))):
            raise ValueError("image of the box is not an axis-aligned box")
        ends = np.stack([np.diag(M) * np.asarray(proj.lo), np.diag(M) * np.asarray(proj.hi)]) + c
        return Region(new_surface, Box(tuple(ends.min(0)), tuple(ends.max(0))))
    raise ValueError(f"unsupported projection {proj!r}")


def _projection_affine(g: PoincareElement, surface: FlatSurface) -> tuple[np.ndarray, np.ndarray]:
    lam = covering_map(g.A)
    M = lam[1:, 1:] + np.outer(lam[1:, 0], surface.slope)
    c = g.a[1:] + lam[1:, 0] * surface.offset
    return M, c


def projection_map(g: PoincareElement, surface) -> Callable[[np.ndarray], np.ndarray]:
    """S(x) = spatial part of g . (tau(x), x): the projection of the image surface."""
    return lambda x: act(g, surface.embed(x))[..., 1:]


def invert_projection_map(g: PoincareElement, surface: FlatSurface, y) -> np.ndarray:
    """Solve S(x) = y for a flat surface; S is affine, so one linear solve is exact."""
    M, c = _projection_affine(g, surface)
    return np.linalg.solve(M, (np.asarray(y, dtype=float) - c).T).T
