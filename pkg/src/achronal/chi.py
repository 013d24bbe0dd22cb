"""Localization on the lightlike plane chi = {x0 = x3} through Fourier analysis.

The state is carried to s = H(p) = (p1, p2, p3 - eps(p)) and multiplied by
the feature vector v(p) of the normalized kernel K_chi, giving a vector
field j phi(s) with |j phi|^2 ds = |phi|^2 d^3p / eps.  Position probabilities
on chi are then |F^-1 j phi|^2 integrated over the projection of the region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .flux import FluxResult, UnsupportedRegion
from .kernels import KernelSpec, NystromFactor, anchor_factor, light_cone_weight, rkhs_vector
from .minkowski import energy
from .states import MassShellState, QuadratureGrid, gl_interval, reference_grid
from .surfaces import CHI, All, Box, HalfSpace, LightPlane, Region, Strip

CHUNK = 4096


def H_map(p, m: float = 1.0) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    s = p.copy()
    s[..., 2] = -light_cone_weight(p, m)
    return s


def H_inverse(s, m: float = 1.0) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    s3 = s[..., 2]
    if np.any(s3 >= 0):
        raise ValueError("H^-1 is defined only for s3 < 0")
    p = s.copy()
    p[..., 2] = (s3 * s3 - (m * m + s[..., 0] ** 2 + s[..., 1] ** 2)) / (2 * s3)
    return p


@dataclass(frozen=True)
class FFTGrid:
    """Uniform s-grid spacings and the position-space rule.

    Bounded position intervals are covered by GL panels of length `panel`;
    a half-bounded interval is cut at half of the period 2 pi / ds.
    """

    ds_perp: float = 0.125
    ds3: float = 0.0625
    panel: float = 1.0
    panel_nodes: int = 10

    def coarse(self) -> "FFTGrid":
        return replace(self, ds_perp=2 * self.ds_perp, ds3=2 * self.ds3)

    def period(self, axis: int) -> float:
        return 2 * math.pi / (self.ds3 if axis == 2 else self.ds_perp)


@dataclass(frozen=True)
class MomentumField:
    """j phi sampled on the nonzero nodes of a uniform s-grid.

    axes: the three uniform coordinate arrays; index: (n, 3) integer node
    positions of the support; values: (n, r) complex components.
    """

    axes: tuple[np.ndarray, np.ndarray, np.ndarray]
    index: np.ndarray
    values: np.ndarray
    cell: float

    @property
    def rank(self) -> int:
        return self.values.shape[1]

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.cell)

    def dense(self) -> np.ndarray:
        shape = tuple(len(a) for a in self.axes) + (self.rank,)
        out = np.zeros(shape, dtype=complex)
        out[self.index[:, 0], self.index[:, 1], self.index[:, 2]] = self.values
        return out

    def subsampled(self) -> "MomentumField":
        """Every other node on every axis, i.e. spacing doubled."""
        keep = np.all(self.index % 2 == 0, axis=1)
        axes = tuple(a[::2] for a in self.axes)
        return MomentumField(axes, self.index[keep] // 2, self.values[keep], self.cell * 8)

    def remixed(self, Q: np.ndarray) -> "MomentumField":
        """Apply a unitary change of basis of the feature space."""
        return replace(self, values=self.values @ Q)


def _uniform_axis(lo: float, hi: float, d: float) -> np.ndarray:
    # nodes at integer multiples of d covering [lo, hi], anchored at 0 so subsampling nests
    i0, i1 = math.floor(lo / d), math.ceil(hi / d)
    if i0 % 2:
        i0 -= 1
    return np.arange(i0, i1 + 1) * d


def _support_ball(phi: MassShellState) -> tuple[np.ndarray, float]:
    if not phi.rotation_only:
        raise UnsupportedRegion("the Fourier route needs a state whose support is a ball")
    return phi.support_ball()


def state_factor(phi: MassShellState, spec: KernelSpec, n_anchors: int = 512, seed: int = 0) -> NystromFactor:
    center, radius = _support_ball(phi)
    return anchor_factor(spec, center, radius, n_anchors, seed)


def embed_j(phi: MassShellState, factor: NystromFactor, grid: FFTGrid = FFTGrid(), compress: bool = True) -> MomentumField:
    """(j phi)(s) = v(p) phi(p) / sqrt(eps(p) - p3) at p = H^-1(s), zero off the support.

    With compress, the components are rotated into the eigenbasis of the
    field's Gram matrix and negligible directions dropped; probabilities are
    invariant under such changes of basis.
    """
    m = phi.m
    center, radius = _support_ball(phi)
    # H maps the ball into s3 in [min(p3 - eps), max(p3 - eps)] < 0
    ptop = center + radius * np.array([0.0, 0.0, 1.0])
    pbot = center - radius * np.array([0.0, 0.0, 1.0])
    s3_hi = -float(light_cone_weight(ptop, m)) + 1e-12
    s3_lo = -float(energy(pbot, m) - pbot[2])
    if s3_hi >= 0:
        raise ValueError("support image touches s3 = 0")
    a1 = _uniform_axis(center[0] - radius, center[0] + radius, grid.ds_perp)
    a2 = _uniform_axis(center[1] - radius, center[1] + radius, grid.ds_perp)
    a3 = _uniform_axis(s3_lo, min(s3_hi + grid.ds3, -1e-3 * grid.ds3), grid.ds3)
    a3 = a3[a3 < 0]
    I = np.stack(np.meshgrid(np.arange(len(a1)), np.arange(len(a2)), np.arange(len(a3)), indexing="ij"), axis=-1).reshape(-1, 3)
    S = np.stack([a1[I[:, 0]], a2[I[:, 1]], a3[I[:, 2]]], axis=1)
    P = H_inverse(S, m)
    inside = np.sum((P - center) ** 2, axis=1) < radius * radius
    I, P = I[inside], P[inside]
    amp = phi(P) / np.sqrt(light_cone_weight(P, m))
    nz = amp != 0
    I, P, amp = I[nz], P[nz], amp[nz]
    cell = grid.ds_perp**2 * grid.ds3
    V = np.empty((len(P), factor.rank))
    for s in range(0, len(P), CHUNK):
        V[s : s + CHUNK] = rkhs_vector(factor, P[s : s + CHUNK])
    if compress:
        w = np.abs(amp) ** 2 * cell
        C = V.T @ (w[:, None] * V)
        lam, U = np.linalg.eigh(C)
        # drop the weakest directions while their total weight stays below 1e-12
        drop = np.cumsum(np.clip(lam, 0, None)) <= 1e-12 * lam.sum()
        V = V @ U[:, ~drop][:, ::-1]
    values = amp[:, None] * V
    return MomentumField((a1, a2, a3), I, values, cell)


def stage_norms(phi: MassShellState, factor: NystromFactor, grid: FFTGrid = FFTGrid(), pgrid: QuadratureGrid | None = None) -> dict:
    """Norms after each stage X, V, Y of the embedding.

    X and V are evaluated on a momentum rule, Y on the s-grid.
    """
    pgrid = reference_grid(phi) if pgrid is None else pgrid
    eps = pgrid.energies
    leb = pgrid.weights * eps  # Lebesgue weights
    f = np.abs(phi(pgrid.nodes)) ** 2
    v2 = np.sum(rkhs_vector(factor, pgrid.nodes) ** 2, axis=1)
    field = embed_j(phi, factor, grid, compress=False)
    return {
        "phi": float(np.sum(pgrid.weights * f)),
        "X": float(np.sum(leb * f / eps)),
        "VX": float(np.sum(leb * v2 * f / eps)),
        "YVX": field.norm_squared(),
    }


# --------------------------------------------------------------------------
# position space


def _axis_intervals(region: Region) -> list[tuple[float, float] | None]:
    """Per-axis interval of the projection; None for an unbounded axis."""
    proj = region.projection
    if isinstance(proj, All):
        return [None, None, None]
    if isinstance(proj, Box):
        return [(proj.lo[j], proj.hi[j]) for j in range(3)]
    if isinstance(proj, (Strip, HalfSpace)):
        u = np.asarray(proj.axis)
        j = int(np.argmax(np.abs(u)))
        if abs(abs(u[j]) - 1.0) > 1e-12:
            raise UnsupportedRegion("the Fourier route needs strips along a coordinate axis")
        out: list[tuple[float, float] | None] = [None, None, None]
        if isinstance(proj, Strip):
            lo, hi = proj.lo, proj.hi
            out[j] = (lo, hi) if u[j] > 0 else (-hi, -lo)
        else:
            b = proj.bound * u[j]
            upper = proj.upper == (u[j] > 0)
            out[j] = (b, math.inf) if upper else (-math.inf, b)
        return out
    raise UnsupportedRegion(f"unsupported projection {type(proj).__name__}")


def _position_rule(lo: float, hi: float, axis: int, grid: FFTGrid, ds: float) -> tuple[np.ndarray, np.ndarray]:
    """Composite GL nodes for one position axis; half-lines are cut at half a period."""
    T = 2 * math.pi / ds
    if math.isinf(hi):
        hi = lo + T / 2
    elif math.isinf(lo):
        lo = hi - T / 2
    if hi - lo > T:
        # the periodic field repeats; a full period is the whole axis
        hi = lo + T
    n_panels = max(1, math.ceil((hi - lo) / grid.panel))
    edges = np.linspace(lo, hi, n_panels + 1)
    xs, ws = zip(*(gl_interval(grid.panel_nodes, a, b) for a, b in zip(edges[:-1], edges[1:])))
    return np.concatenate(xs), np.concatenate(ws)


def _transform_matrix(iv, axis: int, s: np.ndarray, grid: FFTGrid) -> np.ndarray:
    ds = s[1] - s[0]
    x, w = _position_rule(iv[0], iv[1], axis, grid, ds)
    # drop the carrier exp(i s_mid x): a pure phase in position space
    s_c = s - 0.5 * (s[0] + s[-1])
    return np.exp(1j * np.outer(x, s_c)) * (ds / math.sqrt(2 * math.pi)) * np.sqrt(w)[:, None]


def _transform(data: np.ndarray, axis: int, iv, s: np.ndarray, grid: FFTGrid) -> np.ndarray:
    """Inverse Fourier sum along one axis onto weighted position nodes.

    Rows carry sqrt(GL weight), so summing |.|^2 integrates over the interval.
    """
    E = _transform_matrix(iv, axis, s, grid)
    return np.moveaxis(np.tensordot(E, data, axes=([1], [axis])), 0, axis)


def _probability(field: MomentumField, intervals, grid: FFTGrid, chunk: int = 4) -> float:
    """Sum of |F^-1 j phi|^2 over the region.

    Bounded axes are transformed; an unbounded axis keeps its s index and
    contributes a factor ds (Parseval over one period).  Axis 0 is processed
    in chunks so the dense array never holds all s1 slices at once.
    """
    n1, n2, n3 = (len(a) for a in field.axes)
    r = field.rank
    ds = [a[1] - a[0] if len(a) > 1 else 1.0 for a in field.axes]
    acc0 = None
    total = 0.0
    order = np.argsort(field.index[:, 0], kind="stable")
    idx, vals = field.index[order], field.values[order]
    starts = np.searchsorted(idx[:, 0], np.arange(0, n1 + chunk, chunk))
    for c, i0 in enumerate(range(0, n1, chunk)):
        sel = slice(starts[c], starts[c + 1])
        if starts[c] == starts[c + 1]:
            continue
        block = np.zeros((min(chunk, n1 - i0), n2, n3, r), dtype=complex)
        ii = idx[sel]
        block[ii[:, 0] - i0, ii[:, 1], ii[:, 2]] = vals[sel]
        for axis in (2, 1):
            if intervals[axis] is not None:
                block = _transform(block, axis, intervals[axis], field.axes[axis], grid)
        if intervals[0] is None:
            total += float(np.sum(np.abs(block) ** 2))
        else:
            E = _transform_matrix(intervals[0], 0, field.axes[0], grid)[:, i0 : i0 + block.shape[0]]
            part = np.tensordot(E, block, axes=([1], [0]))
            acc0 = part if acc0 is None else acc0 + part
    if acc0 is not None:
        total = float(np.sum(np.abs(acc0) ** 2))
    for axis in range(3):
        if intervals[axis] is None:
            total *= ds[axis]
    return total


def chi_probability(field: MomentumField, region: Region, grid: FFTGrid = FFTGrid()) -> float:
    if not isinstance(region.surface, LightPlane) or region.surface != CHI:
        raise UnsupportedRegion("the Fourier route is implemented on chi = {x0 = x3}")
    intervals = _axis_intervals(region)
    if all(iv is None for iv in intervals):
        return field.norm_squared()
    return _probability(field, intervals, grid)


def chi_probability_fft(
    phi: MassShellState,
    region: Region,
    factor: NystromFactor,
    grid: FFTGrid = FFTGrid(),
    field: MomentumField | None = None,
) -> FluxResult:
    """<phi, T(region) phi> on chi from |F^-1 j phi|^2.

    error_estimate is the change under doubling the s-spacing plus the
    isometry defect of the finite-rank embedding.
    """
    field = embed_j(phi, factor, grid) if field is None else field
    value = chi_probability(field, region, grid)
    coarse = chi_probability(field.subsampled(), region, grid)
    norm = float(np.sum(reference_grid(phi).weights * np.abs(phi(reference_grid(phi).nodes)) ** 2))
    defect = abs(field.norm_squared() - norm)
    meta = {"ds_perp": grid.ds_perp, "ds3": grid.ds3, "rank": field.rank, "anchors": factor.rank}
    return FluxResult(value, abs(value - coarse) + defect, "generic_x_quadrature", meta)


def position_density(field: MomentumField, pad: int = 2) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
    """|F^-1 j phi(x)|^2 on the uniform periodic position grid, by FFT.

    pad multiplies the number of s-nodes per axis (zero padding), refining
    the position spacing.
    """
    data = field.dense()
    n = [pad * len(a) for a in field.axes]
    ds = [a[1] - a[0] for a in field.axes]
    f = np.fft.ifftn(data, s=n, axes=(0, 1, 2)) * np.prod(n) * np.prod(ds) / (2 * math.pi) ** 1.5
    dens = np.sum(np.abs(f) ** 2, axis=-1)
    xs = tuple(np.fft.fftfreq(k, d=d / (2 * math.pi)) for k, d in zip(n, ds))
    order = [np.argsort(x) for x in xs]
    dens = dens[np.ix_(*order)]
    return tuple(x[o] for x, o in zip(xs, order)), dens
