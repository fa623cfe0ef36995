"""Sparse multivariate polynomials with exact rational coefficients.

A polynomial in ``n`` variables is a dict mapping exponent tuples of length
``n`` to nonzero :class:`~fractions.Fraction` coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .exact import to_fraction

Poly = dict  # tuple[int, ...] -> Fraction


def clean(p: Mapping) -> Poly:
    return {tuple(int(e) for e in k): to_fraction(v) for k, v in p.items() if to_fraction(v) != 0}


def const(c, n: int) -> Poly:
    c = to_fraction(c)
    return {(0,) * n: c} if c else {}


def var(j: int, n: int) -> Poly:
    return {tuple(int(i == j) for i in range(n)): Fraction(1)}


def affine(coeffs: Sequence, c0, n: int) -> Poly:
    """``c0 + sum_j coeffs[j] * x_j``."""
    p = const(c0, n)
    for j, a in enumerate(coeffs):
        p = add(p, scale(var(j, n), a))
    return p


def add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for k, v in q.items():
        s = out.get(k, 0) + v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def scale(p: Poly, c) -> Poly:
    c = to_fraction(c)
    if c == 0:
        return {}
    return {k: v * c for k, v in p.items()}


def mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for k1, v1 in p.items():
        for k2, v2 in q.items():
            k = tuple(a + b for a, b in zip(k1, k2))
            s = out.get(k, 0) + v1 * v2
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


def power(p: Poly, e: int, n: int) -> Poly:
    out = const(1, n)
    for _ in range(e):
        out = mul(out, p)
    return out


def degree(p: Poly) -> int:
    return max((sum(k) for k in p), default=0)


def derivative(p: Poly, j: int) -> Poly:
    out: Poly = {}
    for k, v in p.items():
        if k[j]:
            nk = list(k)
            nk[j] -= 1
            out[tuple(nk)] = v * k[j]
    return out


def evaluate(p: Poly, x: Sequence[Fraction]) -> Fraction:
    total = Fraction(0)
    for k, v in p.items():
        term = v
        for xi, e in zip(x, k):
            if e:
                term *= xi ** e
        total += term
    return total


def substitute(p: Poly, forms: Sequence[Poly], m: int) -> Poly:
    """Compose ``p(x)`` with ``x_j = forms[j](t)`` for ``t`` in ``m`` variables."""
    cache: dict[tuple[int, int], Poly] = {}

    def pw(j, e):
        key = (j, e)
        if key not in cache:
            cache[key] = const(1, m) if e == 0 else mul(pw(j, e - 1), forms[j])
        return cache[key]

    out: Poly = {}
    for k, v in p.items():
        term = const(v, m)
        for j, e in enumerate(k):
            if e:
                term = mul(term, pw(j, e))
        out = add(out, term)
    return out


def to_arrays(components: Sequence[Poly], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pack components into the ``(exps, coefs)`` layout the kernels use."""
    monos = sorted({k for p in components for k in p})
    if not monos:
        monos = [(0,) * n]
    exps = np.array(monos, dtype=np.int64).reshape(len(monos), n)
    index = {k: i for i, k in enumerate(monos)}
    coefs = np.zeros((len(components), len(monos)))
    for r, p in enumerate(components):
        for k, v in p.items():
            coefs[r, index[k]] = float(v)
    return exps, coefs


def abs_bound(p: Poly, box_abs: Sequence[float]) -> float:
    """Upper bound of ``|p|`` on a box with ``|x_j| <= box_abs[j]``."""
    total = 0.0
    for k, v in p.items():
        term = abs(float(v))
        for m, e in zip(box_abs, k):
            term *= m ** e
        total += term
    return total


def to_json(p: Poly) -> list[dict]:
    def num(v: Fraction):
        return int(v) if v.denominator == 1 else str(v)

    return [{"exp": list(k), "coef": num(v)} for k, v in sorted(p.items())]


def from_json(terms, n: int) -> Poly:
    p: Poly = {}
    for t in terms:
        exp = tuple(int(e) for e in t["exp"])
        if len(exp) != n or any(e < 0 for e in exp):
            raise ValueError(f"bad exponent {t['exp']!r} for {n} variables")
        p = add(p, {exp: to_fraction(t["coef"])})
    return p
