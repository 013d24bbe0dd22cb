"""Compiled pair sums for flux evaluation.

Every parallel loop writes one partial sum per outer index into its own slot;
the slots are then added sequentially, so results do not depend on the
number of threads.
"""
from __future__ import annotations

import math

import numba as nb
import numpy as np

FAMILY_CODES = {"power": 0, "cos": 1}


@nb.njit(cache=True, inline="always")
def _g(t, m2, r, family):
    if family == 0:
        return (2.0 * m2 / (m2 + t)) ** r
    return math.cos(t / m2)


@nb.njit(cache=True, inline="always")
def _interval(omega, center, half):
    """int_{center-half}^{center+half} exp(i omega x) dx."""
    z = omega * half
    if abs(z) < 1e-4:
        s = 1.0 - z * z / 6.0
    else:
        s = math.sin(z) / z
    ph = omega * center
    return complex(math.cos(ph), math.sin(ph)) * (2.0 * half * s)


@nb.njit(cache=True, parallel=True)
def pair_flux_box(p, eps, a, v, t0, centers, halves, m, r, family):
    """sum_{k,l} conj(a_k) a_l K_v(k,l) Z(k,l) over all node pairs.

    K_v = (eps_k + eps_l - v.(p_k + p_l)) g(k.l) / 2 and
    Z = (2 pi)^-3 e^{i (eps_k - eps_l) t0} prod_j I(omega_j) with
    omega_j = v_j (eps_k - eps_l) - (p_kj - p_lj).
    The summand for (l,k) is the conjugate of (k,l), so only l >= k is visited.
    """
    n = p.shape[0]
    m2 = m * m
    part = np.zeros(n)
    for k in nb.prange(n):
        acc = 0.0
        ck = a[k].conjugate()
        for l in range(k, n):
            de = eps[k] - eps[l]
            t = eps[k] * eps[l] - (p[k, 0] * p[l, 0] + p[k, 1] * p[l, 1] + p[k, 2] * p[l, 2])
            if t < m2:
                t = m2
            kv = 0.5 * (eps[k] + eps[l] - (v[0] * (p[k, 0] + p[l, 0]) + v[1] * (p[k, 1] + p[l, 1]) + v[2] * (p[k, 2] + p[l, 2])))
            z = complex(math.cos(de * t0), math.sin(de * t0))
            for j in range(3):
                z *= _interval(v[j] * de - (p[k, j] - p[l, j]), centers[j], halves[j])
            term = (ck * a[l] * z).real * kv * _g(t, m2, r, family)
            acc += term if l == k else 2.0 * term
        part[k] = acc
    total = 0.0
    for k in range(n):
        total += part[k]
    return total / (2.0 * math.pi) ** 3


@nb.njit(cache=True, parallel=True)
def line_flux(q2, lw, p3, a, t, t0, center, half, m, r, family):
    """Strip flux after the transverse integrals collapse k_perp = p_perp.

    Line L has transverse momentum squared q2[L] and transverse weight lw[L];
    its nodes p3[L, :] carry amplitudes a[L, :] that already include the
    along-line quadrature weight divided by eps.  Plane: x0 = t0 + t x3.
    """
    nl, n3 = p3.shape
    m2 = m * m
    part = np.zeros(nl)
    for L in nb.prange(nl):
        acc = 0.0
        mt2 = m2 + q2[L]
        for j in range(n3):
            ej = math.sqrt(mt2 + p3[L, j] ** 2)
            cj = a[L, j].conjugate()
            for l in range(j, n3):
                el = math.sqrt(mt2 + p3[L, l] ** 2)
                de = ej - el
                tt = ej * el - q2[L] - p3[L, j] * p3[L, l]
                if tt < m2:
                    tt = m2
                kt = 0.5 * (ej + el - t * (p3[L, j] + p3[L, l]))
                z = _interval(t * de - (p3[L, j] - p3[L, l]), center, half)
                z *= complex(math.cos(de * t0), math.sin(de * t0))
                term = (cj * a[L, l] * z).real * kt * _g(tt, m2, r, family)
                acc += term if l == j else 2.0 * term
        part[L] = lw[L] * acc
    total = 0.0
    for L in range(nl):
        total += part[L]
    return total / (2.0 * math.pi)


@nb.njit(cache=True, parallel=True)
def line_density(q2, lw, p3, a, t, t0, x3, m, r, family):
    """Marginal density in x3 of the strip flux, at each x3 in the array.

    Integrating it over an interval reproduces line_flux on that interval.
    """
    nl, n3 = p3.shape
    nx = x3.shape[0]
    m2 = m * m
    part = np.zeros((nl, nx))
    for L in nb.prange(nl):
        mt2 = m2 + q2[L]
        for j in range(n3):
            ej = math.sqrt(mt2 + p3[L, j] ** 2)
            cj = a[L, j].conjugate()
            for l in range(n3):
                el = math.sqrt(mt2 + p3[L, l] ** 2)
                de = ej - el
                tt = ej * el - q2[L] - p3[L, j] * p3[L, l]
                if tt < m2:
                    tt = m2
                kt = 0.5 * (ej + el - t * (p3[L, j] + p3[L, l])) * _g(tt, m2, r, family)
                w = cj * a[L, l] * kt
                om = t * de - (p3[L, j] - p3[L, l])
                for i in range(nx):
                    ph = om * x3[i] + de * t0
                    part[L, i] += (w * complex(math.cos(ph), math.sin(ph))).real
        for i in range(nx):
            part[L, i] *= lw[L]
    out = np.zeros(nx)
    for L in range(nl):
        for i in range(nx):
            out[i] += part[L, i]
    return out / (2.0 * math.pi)
