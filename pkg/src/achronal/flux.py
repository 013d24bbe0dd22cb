"""Flux of the current through regions of achronal surfaces.

On a flat surface x0 = t0 + v.x the flux through a region with projection B
is the pair sum
    sum_{k,p} conj(a_k) a_p K_v(k, p) Z_B(k, p),
    K_v = (eps(k) + eps(p) - v.(k + p)) g(k.p) / 2,
    Z_B = (2 pi)^-3 int_B exp(i (eps(k) - eps(p)) tau(x) - i (k - p).x) d^3x,
and Z_B has a closed form for boxes.  Strips and half-spaces use the
transverse delta k_perp = p_perp, which leaves one line sum per transverse
node.  The whole surface uses the delta in all three directions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _numerics
from .current import current_many, gram_matrix
from .kernels import KernelSpec, _g, shell_product_matrix
from .minkowski import IDENTITY_SPINOR, SpinorMatrix, boost, covering_map, energy, rotation_between
from .states import (
    MassShellState,
    QuadratureGrid,
    _check_mass,
    apply_rep,
    gauss_legendre,
    gl_interval,
    make_grid,
)
from .minkowski import PoincareElement
from .surfaces import (
    All,
    Box,
    DilatedBox,
    FlatSurface,
    GraphSurface,
    HalfSpace,
    PiecewiseFlat,
    Region,
    Strip,
)

ROUTES = ("closed_form_6d", "strip_reduced_4d", "delta_reduced", "generic_x_quadrature", "brute_force")
WINDOW_CAP = 128.0
E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class GridSpec:
    """Resolution of the momentum quadratures.

    n: nodes per axis of the cube rule used by the pair-sum routes.
    n_radial, n_angle: transverse polar rule of the line routes.
    n_line: minimum nodes per line; wide windows raise it automatically.
    """

    n: int = 20
    n_radial: int = 24
    n_angle: int = 16
    n_line: int = 48
    estimate_error: bool = True

    def coarse(self) -> "GridSpec":
        return replace(
            self,
            n=max(2, self.n // 2),
            n_radial=max(4, (3 * self.n_radial) // 4),
            n_angle=max(4, (3 * self.n_angle) // 4),
            n_line=max(8, (3 * self.n_line) // 4),
        )


@dataclass(frozen=True)
class FluxResult:
    value: float
    error_estimate: float
    route: str
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValueError(f"unknown route {self.route!r}")


class UnsupportedRegion(ValueError):
    pass


# --------------------------------------------------------------------------
# region factors


def interval_factor(omega, lo: float, hi: float):
    """int_lo^hi exp(i omega x) dx, stable as omega -> 0."""
    omega = np.asarray(omega, dtype=float)
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return np.exp(1j * omega * c) * (2.0 * h) * np.sinc(omega * h / np.pi)


def region_factor(box: Box, k, p, surface: FlatSurface, m: float = 1.0):
    """Z_B(k, p) for a box projection on a flat surface (broadcasting over k, p)."""
    if not isinstance(surface, FlatSurface):
        raise UnsupportedRegion("closed-form region factors need a flat surface")
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    de = energy(k, m) - energy(p, m)
    z = np.exp(1j * de * surface.offset) / (2 * np.pi) ** 3
    for j in range(3):
        omega = surface.slope[j] * de - (k[..., j] - p[..., j])
        z = z * interval_factor(omega, box.lo[j], box.hi[j])
    return z


# --------------------------------------------------------------------------
# momentum grids attached to a state


def state_grid(phi: MassShellState, n: int) -> QuadratureGrid:
    """Cube rule carried along with the state's accumulated Lorentz transform."""
    grid = make_grid(phi.m, phi.p_max, n)
    A = phi.history.A
    return grid if A == IDENTITY_SPINOR else grid.transported(A)


def _amplitudes(phi: MassShellState, grid: QuadratureGrid) -> np.ndarray:
    return (grid.weights * phi(grid.nodes)).astype(complex)


def _check_flat(surface) -> FlatSurface:
    if not isinstance(surface, FlatSurface):
        raise UnsupportedRegion(f"route needs a flat surface, got {type(surface).__name__}")
    return surface


def flux_delta(phi: MassShellState, surface: FlatSurface, spec: KernelSpec, grid: QuadratureGrid) -> float:
    """Flux through the whole flat surface.

    The x-integral gives (2 pi)^3 delta(omega) with omega = v (eps_k - eps_p) - (k - p),
    which vanishes only at k = p with Jacobian 1 - v.p/eps; what remains is
    sum_i w_i |phi_i|^2 K_v(p_i, p_i) / (eps_i - v.p_i).
    """
    eps = grid.energies
    h = eps - grid.nodes @ surface.slope
    kv = h * _g(spec, np.full_like(eps, spec.m**2))
    return float(np.sum(grid.weights * np.abs(phi(grid.nodes)) ** 2 * kv / h))


def flux_box_6d(phi: MassShellState, surface: FlatSurface, box: Box, spec: KernelSpec, grid: QuadratureGrid) -> float:
    a = _amplitudes(phi, grid)
    centers = 0.5 * (np.asarray(box.lo) + np.asarray(box.hi))
    halves = 0.5 * (np.asarray(box.hi) - np.asarray(box.lo))
    return float(
        _numerics.pair_flux_box(
            grid.nodes, grid.energies, a, np.asarray(surface.slope, dtype=float), float(surface.offset),
            centers, halves, spec.m, float(spec.r), _numerics.FAMILY_CODES[spec.family],
        )
    )


def flux_box_naive(phi: MassShellState, surface: FlatSurface, box: Box, spec: KernelSpec, grid: QuadratureGrid) -> float:
    """Dense-matrix evaluation of the same pair sum; the oracle for flux_box_6d."""
    a = _amplitudes(phi, grid)
    p = grid.nodes
    eps = grid.energies
    v = surface.slope
    G = _g(spec, shell_product_matrix(p, p, spec.m))
    K = 0.5 * (eps[:, None] + eps[None, :] - (p @ v)[:, None] - (p @ v)[None, :]) * G
    Z = region_factor(box, p[:, None, :], p[None, :, :], surface, spec.m)
    return float(np.real(np.conj(a) @ (K * Z) @ a))


# --------------------------------------------------------------------------
# line grids for the strip route


@dataclass(frozen=True)
class LineGrid:
    """Lines parallel to p3 through a transverse polar rule.

    q2: squared transverse momentum per line; lw: transverse weights;
    p3: along-line nodes; mw: along-line weights including 1/eps.
    """

    m: float
    perp: np.ndarray
    q2: np.ndarray
    lw: np.ndarray
    p3: np.ndarray
    mw: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        nl, n3 = self.p3.shape
        return np.concatenate([np.broadcast_to(self.perp[:, None, :], (nl, n3, 2)), self.p3[:, :, None]], axis=2)

    def boosted_along_3(self, rho: float) -> "LineGrid":
        """Nodes mapped by the boost of rapidity rho along 3; dp3/eps is invariant."""
        if rho == 0:
            return self
        eps = np.sqrt(self.m**2 + self.q2[:, None] + self.p3**2)
        p3 = math.sinh(rho) * eps + math.cosh(rho) * self.p3
        return replace(self, p3=p3)

    def amplitudes(self, phi: MassShellState) -> np.ndarray:
        return (self.mw * phi(self.nodes)).astype(complex)

    def norm_squared(self, phi: MassShellState) -> float:
        return float(np.sum(self.lw[:, None] * self.mw * np.abs(phi(self.nodes)) ** 2))


def ball_lines(m: float, center, radius: float, n_radial: int, n_angle: int, n3: int) -> LineGrid:
    """Polar transverse rule on the disc of the ball, GL chords along p3."""
    center = np.asarray(center, dtype=float)
    r, wr = gl_interval(n_radial, 0.0, radius)
    th = 2 * np.pi * np.arange(n_angle) / n_angle
    rr = np.repeat(r, n_angle)
    perp = np.stack([rr * np.cos(np.tile(th, n_radial)), rr * np.sin(np.tile(th, n_radial))], axis=1) + center[:2]
    lw = np.repeat(wr * r, n_angle) * (2 * np.pi / n_angle)
    half = np.sqrt(np.maximum(radius**2 - rr**2, 0.0))
    y, wy = gauss_legendre(n3)
    p3 = center[2] + half[:, None] * y[None, :]
    q2 = np.sum(perp**2, axis=1)
    eps = np.sqrt(m * m + q2[:, None] + p3**2)
    return LineGrid(m, perp, q2, lw, p3, half[:, None] * wy[None, :] / eps)


def _split_boost_along_3(B: SpinorMatrix) -> tuple[float, SpinorMatrix] | None:
    """Write B = boost_3(rho) U with U in SU(2), when such a split exists."""
    H = B.matrix @ B.matrix.conj().T
    if abs(H[0, 1]) > 1e-12 * abs(H).max():
        return None
    rho = 0.5 * math.log(H[0, 0].real / H[1, 1].real)
    U = boost(E3, -rho) @ B
    return rho, U


def _support(phi: MassShellState) -> tuple[np.ndarray, float]:
    return getattr(phi.profile, "support", (np.zeros(3), phi.p_max))


def lines_for_state(phi: MassShellState, gs: GridSpec, n3: int) -> LineGrid:
    """Line grid covering the support of phi, lines along p3."""
    c0, r0 = _support(phi)
    split = _split_boost_along_3(phi.history.A)
    if split is not None:
        rho, U = split
        center = covering_map(U)[1:, 1:] @ c0
        return ball_lines(phi.m, center, r0, gs.n_radial, gs.n_angle, n3).boosted_along_3(rho)
    # generic Lorentz part: a ball around the image of the support
    u = _fibonacci_sphere(2000)
    pts = c0 + r0 * u
    lam = covering_map(phi.history.A)
    img = (np.concatenate([energy(pts, phi.m)[:, None], pts], axis=1) @ lam.T)[:, 1:]
    center = 0.5 * (img.min(0) + img.max(0))
    radius = 1.02 * float(np.max(np.linalg.norm(img - center, axis=1)))
    return ball_lines(phi.m, center, radius, gs.n_radial, gs.n_angle, n3)


def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    th = np.pi * (1 + 5**0.5) * i
    return np.stack([r * np.cos(th), r * np.sin(th), z], axis=1)


def _align_to_axis3(phi: MassShellState, axis) -> MassShellState:
    """W(R) phi with R carrying `axis` to e3."""
    R = rotation_between(np.asarray(axis, dtype=float), E3)
    return apply_rep(PoincareElement.lorentz(R), phi) if R != IDENTITY_SPINOR else phi


def _line_n3(phi: MassShellState, gs: GridSpec, t: float, t0: float, lo: float, hi: float) -> int:
    """Nodes per line resolving exp(i omega x3) over the window.

    omega = h(k) - h(p) with h = t eps - p3; the translation history adds its
    own momentum-space oscillation.
    """
    probe = lines_for_state(phi, replace(gs, n_radial=4, n_angle=4), 16)
    eps = np.sqrt(phi.m**2 + probe.q2[:, None] + probe.p3**2)
    h = t * eps - probe.p3
    omega = float(h.max() - h.min()) * 1.15
    x_eff = max(abs(lo), abs(hi)) + abs(t0) + float(np.abs(phi.history.a).sum())
    return max(gs.n_line, int(math.ceil(0.625 * omega * x_eff)) + 16)


def _strip_value(phi, lines: LineGrid, t, t0, lo, hi, spec) -> float:
    a = lines.amplitudes(phi)
    return float(
        _numerics.line_flux(
            lines.q2, lines.lw, lines.p3, a, float(t), float(t0), 0.5 * (lo + hi), 0.5 * (hi - lo),
            spec.m, float(spec.r), _numerics.FAMILY_CODES[spec.family],
        )
    )


def _strip_geometry(region: Region) -> tuple[np.ndarray, float, float]:
    surface = _check_flat(region.surface)
    u = np.asarray(region.projection.axis)
    t = float(surface.slope @ u)
    if np.linalg.norm(surface.slope - t * u) > 1e-12:
        raise UnsupportedRegion("the strip route needs the surface slope parallel to the strip axis")
    return u, t, float(surface.offset)


def _strip_once(phi, u, t, t0, lo, hi, spec, gs):
    psi = _align_to_axis3(phi, u)
    n3 = _line_n3(psi, gs, t, t0, lo, hi)
    lines = lines_for_state(psi, gs, n3)
    return _strip_value(psi, lines, t, t0, lo, hi, spec), lines.norm_squared(psi), n3


def flux_strip(phi: MassShellState, region: Region, spec: KernelSpec, grid: GridSpec = GridSpec()) -> FluxResult:
    """Flux through {lo <= x.u <= hi} on a plane sloped along u (strip_reduced_4d)."""
    if not isinstance(region.projection, Strip):
        raise UnsupportedRegion("flux_strip needs a Strip projection")
    _check_mass(phi.m, spec.m)
    u, t, t0 = _strip_geometry(region)
    lo, hi = region.projection.lo, region.projection.hi
    if hi <= lo:
        return FluxResult(0.0, 0.0, "strip_reduced_4d", {"empty": True})
    deficit = 0.0
    clipped = False
    if max(abs(lo), abs(hi)) > WINDOW_CAP:
        # clipped window: the lost part is bounded by the flux outside [-cap, cap]
        clipped = True
        lo, hi = max(lo, -WINDOW_CAP), min(hi, WINDOW_CAP)
        full, norm, _ = _strip_once(phi, u, t, t0, -WINDOW_CAP, WINDOW_CAP, spec, grid)
        deficit = max(norm - full, 0.0)
        if hi <= lo:
            return FluxResult(0.0, deficit, "strip_reduced_4d", {"clipped": True})
    value, norm, n3 = _strip_once(phi, u, t, t0, lo, hi, spec, grid)
    err = deficit
    meta = {"n_radial": grid.n_radial, "n_angle": grid.n_angle, "n_line": n3, "clipped": clipped}
    if grid.estimate_error:
        c = grid.coarse()
        coarse, _, _ = _strip_once(phi, u, t, t0, lo, hi, spec, replace(c, n_line=max(c.n_line, (3 * n3) // 4)))
        err += abs(value - coarse)
    return FluxResult(value, err, "strip_reduced_4d", meta)


def strip_density(phi: MassShellState, region: Region, spec: KernelSpec, x3, grid: GridSpec = GridSpec()) -> np.ndarray:
    """Marginal flux density along the strip axis at the points x3."""
    u, t, t0 = _strip_geometry(region)
    x3 = np.asarray(x3, dtype=float)
    psi = _align_to_axis3(phi, u)
    n3 = _line_n3(psi, grid, t, t0, float(x3.min()), float(x3.max()))
    lines = lines_for_state(psi, grid, n3)
    return _numerics.line_density(
        lines.q2, lines.lw, lines.p3, lines.amplitudes(psi), float(t), float(t0), x3,
        spec.m, float(spec.r), _numerics.FAMILY_CODES[spec.family],
    )


def flux_halfspace(
    phi: MassShellState,
    region: Region,
    spec: KernelSpec,
    grid: GridSpec = GridSpec(),
    L0: float = 8.0,
    L_max: float = 64.0,
    tail_tol: float = 1e-3,
) -> FluxResult:
    """Half-space flux as a truncated strip plus a certified tail bound.

    For {x.u >= c} the strip [c, c + L] misses {x.u > R} with R = c + L, which
    is contained in {|x.u| > R}; its flux is at most |phi|^2 - flux([-R, R]).
    L doubles until that bound drops below tail_tol or L exceeds L_max.
    """
    proj = region.projection
    if not isinstance(proj, HalfSpace):
        raise UnsupportedRegion("flux_halfspace needs a HalfSpace projection")
    u, t, t0 = _strip_geometry(region)
    c = proj.bound
    L = L0
    while True:
        R = c + L if proj.upper else L - c
        if R > 0:
            lo, hi = (c, c + L) if proj.upper else (c - L, c)
            part = flux_strip(phi, Region(region.surface, Strip(tuple(u), lo, hi)), spec, grid)
            sym = flux_strip(phi, Region(region.surface, Strip(tuple(u), -R, R)), spec, grid)
            norm = flux_delta(phi, region.surface, spec, state_grid(phi, grid.n))
            tail = max(norm - sym.value, 0.0)
            if tail < tail_tol or 2 * L > L_max:
                meta = dict(part.grid, L=L, tail_bound=tail, converged=tail < tail_tol)
                return FluxResult(part.value, part.error_estimate + sym.error_estimate + tail, "strip_reduced_4d", meta)
        elif 2 * L > L_max:
            raise UnsupportedRegion("half-space bound lies beyond the truncation limit")
        L *= 2


# --------------------------------------------------------------------------
# x-space quadrature (generic surfaces and oracles)


def _x_nodes_box(box: Box, n_x: int) -> tuple[np.ndarray, np.ndarray]:
    axes = [gl_interval(n_x, box.lo[j], box.hi[j]) for j in range(3)]
    X = np.stack(np.meshgrid(*[a[0] for a in axes], indexing="ij"), axis=-1).reshape(-1, 3)
    W = np.einsum("i,j,k->ijk", *[a[1] for a in axes]).reshape(-1)
    return X, W


def _x_nodes_dilated(db: DilatedBox, n_x: int) -> tuple[np.ndarray, np.ndarray]:
    """Iterated GL over the Euclidean dilation of a box with exact inner limits.

    Each outer range is split where the inner limits have kinks.
    """
    lo, hi, r = np.asarray(db.box.lo), np.asarray(db.box.hi), db.radius

    def pieces(j):
        return [(lo[j] - r, lo[j]), (lo[j], hi[j]), (hi[j], hi[j] + r)]

    def gap(v, j):
        return max(lo[j] - v, v - hi[j], 0.0)

    pts, wts = [], []
    for a1, b1 in pieces(0):
        if b1 <= a1:
            continue
        for x1, w1 in zip(*gl_interval(n_x, a1, b1)):
            d1 = gap(x1, 0)
            s1 = math.sqrt(max(r * r - d1 * d1, 0.0))
            for a2, b2 in [(lo[1] - s1, lo[1]), (lo[1], hi[1]), (hi[1], hi[1] + s1)]:
                if b2 <= a2:
                    continue
                for x2, w2 in zip(*gl_interval(n_x, a2, b2)):
                    d2 = gap(x2, 1)
                    s2 = math.sqrt(max(r * r - d1 * d1 - d2 * d2, 0.0))
                    x3, w3 = gl_interval(n_x, lo[2] - s2, hi[2] + s2)
                    pts.append(np.stack([np.full(n_x, x1), np.full(n_x, x2), x3], axis=1))
                    wts.append(w1 * w2 * w3)
    return np.concatenate(pts), np.concatenate(wts)


def _x_quadrature(phi, surface, X, W, spec, mgrid) -> float:
    events = np.concatenate([surface.tau(X)[:, None], X], axis=1)
    G = gram_matrix(mgrid, spec)
    J = current_many(phi, events, mgrid, spec, G)
    integrand = J[:, 0] - np.sum(J[:, 1:] * surface.grad(X), axis=1)
    return float(W @ integrand)


def _x_nodes_strip(strip: Strip, n_x: int, transverse: float, n_perp: int) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(strip.axis)
    helper = np.eye(3)[int(np.argmin(np.abs(u)))]
    e1 = np.cross(u, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    s, ws = gl_interval(n_x, strip.lo, strip.hi)
    t, wt = gl_interval(n_perp, -transverse, transverse)
    S, T1, T2 = np.meshgrid(s, t, t, indexing="ij")
    X = S.reshape(-1, 1) * u + T1.reshape(-1, 1) * e1 + T2.reshape(-1, 1) * e2
    W = np.einsum("i,j,k->ijk", ws, wt, wt).reshape(-1)
    return X, W


def flux_bruteforce(
    phi: MassShellState,
    region: Region,
    spec: KernelSpec,
    n_momentum: int = 10,
    n_x: int = 8,
    transverse: float = 6.0,
    n_perp: int = 24,
) -> FluxResult:
    """Outer x-quadrature of J0 - J.grad(tau) with the current evaluated per node.

    Bounded projections only, plus strips, which are cut to |x_perp| <= transverse
    (the cut loses about 4e-4 of a unit strip for the reference state at 6).
    """
    proj = region.projection
    mgrid = state_grid(phi, n_momentum)
    meta = {"n_momentum": n_momentum, "n_x": n_x}
    if isinstance(proj, Box):
        if proj.is_empty:
            return FluxResult(0.0, 0.0, "brute_force", {"empty": True})
        X, W = _x_nodes_box(proj, n_x)
    elif isinstance(proj, DilatedBox):
        X, W = _x_nodes_dilated(proj, n_x)
    elif isinstance(proj, Strip):
        if proj.is_empty:
            return FluxResult(0.0, 0.0, "brute_force", {"empty": True})
        X, W = _x_nodes_strip(proj, n_x, transverse, n_perp)
        meta.update(transverse=transverse, n_perp=n_perp)
    else:
        raise UnsupportedRegion(f"brute force needs a bounded projection or a strip, got {type(proj).__name__}")
    value = _x_quadrature(phi, region.surface, X, W, spec, mgrid)
    return FluxResult(value, float("nan"), "brute_force", meta)


# --------------------------------------------------------------------------
# dispatch


def flux(phi: MassShellState, region: Region, spec: KernelSpec, grid: GridSpec = GridSpec()) -> FluxResult:
    """<phi, T(region) phi> by the most accurate route available for the region."""
    _check_mass(phi.m, spec.m)
    surface, proj = region.surface, region.projection
    if isinstance(surface, PiecewiseFlat):
        raise UnsupportedRegion("use flux_piecewise for piecewise surfaces")
    if isinstance(surface, GraphSurface):
        res = flux_bruteforce(phi, region, spec)
        return replace(res, route="generic_x_quadrature")
    surface = _check_flat(surface)
    if isinstance(proj, All):
        value = flux_delta(phi, surface, spec, state_grid(phi, grid.n))
        err = abs(value - flux_delta(phi, surface, spec, state_grid(phi, grid.coarse().n))) if grid.estimate_error else 0.0
        return FluxResult(value, err, "delta_reduced", {"n": grid.n})
    if isinstance(proj, Box):
        if proj.is_empty:
            return FluxResult(0.0, 0.0, "closed_form_6d", {"empty": True})
        value = flux_box_6d(phi, surface, proj, spec, state_grid(phi, grid.n))
        err = 0.0
        if grid.estimate_error:
            err = abs(value - flux_box_6d(phi, surface, proj, spec, state_grid(phi, grid.coarse().n)))
        return FluxResult(value, err, "closed_form_6d", {"n": grid.n})
    if isinstance(proj, Strip):
        return flux_strip(phi, region, spec, grid)
    if isinstance(proj, HalfSpace):
        return flux_halfspace(phi, region, spec, grid)
    if isinstance(proj, DilatedBox):
        mgrid = state_grid(phi, min(grid.n, 12))
        X, W = _x_nodes_dilated(proj, 6)
        value = _x_quadrature(phi, surface, X, W, spec, mgrid)
        err = abs(value - _x_quadrature(phi, surface, *_x_nodes_dilated(proj, 4), spec, mgrid))
        return FluxResult(value, err, "generic_x_quadrature", {"n": mgrid and min(grid.n, 12), "n_x": 6})
    raise UnsupportedRegion(f"unsupported projection {type(proj).__name__}")


@dataclass(frozen=True)
class PiecewiseFlux:
    names: tuple[str, ...]
    pieces: tuple[FluxResult, ...]

    @property
    def total(self) -> float:
        return float(sum(p.value for p in self.pieces))

    @property
    def error_estimate(self) -> float:
        return float(sum(p.error_estimate for p in self.pieces))


def flux_piecewise(phi: MassShellState, surface: PiecewiseFlat, spec: KernelSpec, grid: GridSpec = GridSpec()) -> PiecewiseFlux:
    results = tuple(flux(phi, r, spec, grid) for r in surface.regions())
    names = surface.names or tuple(f"piece{i}" for i in range(len(results)))
    return PiecewiseFlux(names, results)
