"""Minkowski four-vectors and the action of ISL(2,C) on spacetime.

Natural units (c = 1) and the metric signature (+, -, -, -) are used
throughout.  Lorentz transformations are always carried as 2x2 unimodular
spinor matrices; the 4x4 matrix is obtained through the covering map when it
is needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ETA = np.diag([1.0, -1.0, -1.0, -1.0])

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

DET_TOL = 1e-9
UNIT_TOL = 1e-9


class FourVector(NamedTuple):
    x0: float
    x1: float
    x2: float
    x3: float

    @property
    def spatial(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])

    @classmethod
    def from_array(cls, a) -> "FourVector":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


def minkowski_product(a, b):
    """a0*b0 - a.b, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] - np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def energy(p, m: float):
    """Mass-shell energy sqrt(m^2 + |p|^2)."""
    if m <= 0:
        raise ValueError(f"mass must be positive, got {m}")
    p = np.asarray(p, dtype=float)
    return np.sqrt(m * m + np.sum(p * p, axis=-1))


def on_shell(p, m: float) -> np.ndarray:
    """Lift 3-momenta to four-momenta (eps(p), p)."""
    p = np.asarray(p, dtype=float)
    return np.concatenate([energy(p, m)[..., None], p], axis=-1)


@dataclass(frozen=True, eq=False)
class SpinorMatrix:
    """An element of SL(2,C)."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (2, 2):
            raise ValueError(f"spinor matrix must be 2x2, got shape {mat.shape}")
        det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
        # a*d - b*c cancels terms of size ~|A|^2; allow for that rounding
        tol = DET_TOL + 64 * np.finfo(float).eps * float(np.sum(np.abs(mat) ** 2))
        if abs(det - 1.0) > tol:
            raise ValueError(f"spinor matrix is not unimodular (det = {det})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def __matmul__(self, other: "SpinorMatrix") -> "SpinorMatrix":
        return SpinorMatrix(self.matrix @ other.matrix)

    def inverse(self) -> "SpinorMatrix":
        a, b = self.matrix[0]
        c, d = self.matrix[1]
        return SpinorMatrix(np.array([[d, -b], [-c, a]]))

    def is_unitary(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix @ self.matrix.conj().T, np.eye(2), atol=tol))

    def lorentz(self) -> np.ndarray:
        return covering_map(self)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpinorMatrix) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self) -> int:
        return hash(self.matrix.tobytes())

    def __repr__(self) -> str:
        return f"SpinorMatrix({self.matrix.tolist()!r})"


IDENTITY_SPINOR = SpinorMatrix(np.eye(2))


def covering_map(A: SpinorMatrix | np.ndarray) -> np.ndarray:
    """The 4x4 matrix Lambda(A) acting on x by  x0 + x.sigma -> A (x0 + x.sigma) A^+.

    Entries are Lambda_{mu nu} = tr(sigma_mu A sigma_nu A^+) / 2.
    """
    if not isinstance(A, SpinorMatrix):
        A = SpinorMatrix(A)
    a = A.matrix
    conj = np.einsum("ab,nbc,dc->nad", a, PAULI, a.conj())
    lam = 0.5 * np.einsum("mba,nab->mn", PAULI, conj)
    return lam.real.copy()


def _unit(e) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    if e.shape != (3,) or abs(np.linalg.norm(e) - 1.0) > UNIT_TOL:
        raise ValueError(f"expected a unit 3-vector, got {e!r}")
    return e


def boost(e, rho: float) -> SpinorMatrix:
    """exp(rho/2 * e.sigma): boost with rapidity rho along the unit vector e."""
    e = _unit(e)
    es = np.einsum("i,iab->ab", e, PAULI[1:])
    return SpinorMatrix(np.cosh(rho / 2) * np.eye(2) + np.sinh(rho / 2) * es)


def rotation(axis, angle: float) -> SpinorMatrix:
    """exp(-i angle/2 * n.sigma): right-handed rotation by `angle` about `axis`."""
    n = _unit(axis)
    ns = np.einsum("i,iab->ab", n, PAULI[1:])
    return SpinorMatrix(np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * ns)


def rotation_between(a, b) -> SpinorMatrix:
    """An SU(2) element whose rotation carries the unit vector a onto b."""
    a = _unit(a)
    b = _unit(b)
    axis = np.cross(a, b)
    s = np.linalg.norm(axis)
    c = float(np.dot(a, b))
    if s < 1e-14:
        if c > 0:
            return IDENTITY_SPINOR
        # antiparallel: any axis orthogonal to a
        trial = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        perp = np.cross(a, trial)
        return rotation(perp / np.linalg.norm(perp), np.pi)
    return rotation(axis / s, float(np.arctan2(s, c)))


@dataclass(frozen=True, eq=False)
class PoincareElement:
    """g = (a, A) acting on spacetime by x -> a + Lambda(A) x."""

    a: np.ndarray
    A: SpinorMatrix = IDENTITY_SPINOR

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if a.shape != (4,):
            raise ValueError(f"translation must be a four-vector, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        if not isinstance(self.A, SpinorMatrix):
            object.__setattr__(self, "A", SpinorMatrix(self.A))

    @classmethod
    def identity(cls) -> "PoincareElement":
        return cls(np.zeros(4), IDENTITY_SPINOR)

    @classmethod
    def translation(cls, a) -> "PoincareElement":
        return cls(np.asarray(a, dtype=float), IDENTITY_SPINOR)

    @classmethod
    def lorentz(cls, A: SpinorMatrix) -> "PoincareElement":
        return cls(np.zeros(4), A)

    def __matmul__(self, other: "PoincareElement") -> "PoincareElement":
        return compose(self, other)

    def __repr__(self) -> str:
        return f"PoincareElement(a={self.a.tolist()!r}, A={self.A!r})"


def act(g: PoincareElement, x) -> np.ndarray:
    """g.x = a + Lambda(A) x for x of shape (..., 4)."""
    x = np.asarray(x, dtype=float)
    return g.a + x @ covering_map(g.A).T


def compose(g: PoincareElement, h: PoincareElement) -> PoincareElement:
    """(a, A)(a', A') = (a + A.a', A A')."""
    return PoincareElement(g.a + covering_map(g.A) @ h.a, g.A @ h.A)


def inverse(g: PoincareElement) -> PoincareElement:
    """(a, A)^-1 = (-A^-1.a, A^-1)."""
    Ainv = g.A.inverse()
    return PoincareElement(-(covering_map(Ainv) @ g.a), Ainv)
