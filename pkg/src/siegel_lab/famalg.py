"""Algebra of polynomial perturbation families.

A family is a truncated power series in z whose coefficients are polynomials
in the perturbation parameter, with constant value and derivative at the base
point.  Degree bookkeeping is exact: a coefficient polynomial's degree is read
off the stored values with an exact zero test, never through a tolerance, so
the quadratic / essentially quadratic / sub-quadratic classification is a pure
integer statement about the truncation at hand.

Families are stored centered (coefficients of (z - z0)^n plus the base point),
so composition is plain series convolution and never manipulates shifted
monomials.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from mpmath import mp, mpc

from .errors import (
    BasePointMismatch,
    DegenerateLinearPart,
    DegenerateSecondCoefficient,
    InputError,
    NonzeroBasePoint,
    NotEssentiallyQuadratic,
)

NEG_INFINITY = float("-inf")

LABEL_QUADRATIC = "quadratic"
LABEL_ESSENTIALLY_QUADRATIC = "essentially_quadratic"
LABEL_SUB_QUADRATIC = "sub_quadratic"
LABEL_GENERAL = "general"

DEFAULT_BASE_POINT_TOL = 1e-10


def _trim(coeffs):
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


@dataclass(frozen=True)
class ParamPoly:
    """Polynomial in the perturbation parameter, canonical (trailing zeros trimmed)."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    @classmethod
    def const(cls, c) -> "ParamPoly":
        return cls((c,))

    @classmethod
    def zero(cls) -> "ParamPoly":
        return cls(())

    @property
    def degree(self):
        """Largest index with a nonzero coefficient; -inf for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else NEG_INFINITY

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_constant(self) -> bool:
        return len(self.coeffs) <= 1

    def constant_value(self):
        return self.coeffs[0] if self.coeffs else 0.0

    def leading_coefficient(self):
        if not self.coeffs:
            raise InputError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def evaluate(self, a):
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * a + c
        return acc

    def __add__(self, other):
        if not isinstance(other, ParamPoly):
            other = ParamPoly.const(other)
        n = max(len(self.coeffs), len(other.coeffs))
        out = [0.0] * n
        for i, c in enumerate(self.coeffs):
            out[i] = out[i] + c
        for i, c in enumerate(other.coeffs):
            out[i] = out[i] + c
        return ParamPoly(out)

    def __neg__(self):
        return ParamPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        if not isinstance(other, ParamPoly):
            other = ParamPoly.const(other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, ParamPoly):
            return self.scale(other)
        if self.is_zero or other.is_zero:
            return ParamPoly.zero()
        out = [0.0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return ParamPoly(out)

    __rmul__ = __mul__

    def scale(self, s):
        if s == 0:
            return ParamPoly.zero()
        return ParamPoly(tuple(c * s for c in self.coeffs))

    def map_coefficients(self, fn) -> "ParamPoly":
        return ParamPoly(tuple(fn(c) for c in self.coeffs))

    def reversed_padded(self, length: int) -> "ParamPoly":
        """Coefficient list padded to ``length`` and reversed: b^(length-1) * p(1/b)."""
        if len(self.coeffs) > length:
            raise InputError(f"cannot pad degree {self.degree} polynomial to length {length}")
        padded = list(self.coeffs) + [0.0] * (length - len(self.coeffs))
        return ParamPoly(tuple(reversed(padded)))


@dataclass(frozen=True)
class PerturbationFamily:
    """f(a, z) = sum f_n(a) (z - z0)^n with constant f_0 and f_1, order >= 2."""

    base_point: complex
    order: int
    coeffs: tuple  # ParamPoly f_0 .. f_order
    flags: tuple = ()

    def __post_init__(self):
        if self.order < 2:
            raise InputError("truncation order must be >= 2 for degree classification")
        coeffs = list(self.coeffs)
        if len(coeffs) > self.order + 1:
            raise InputError("more coefficients than the truncation order allows")
        coeffs += [ParamPoly.zero()] * (self.order + 1 - len(coeffs))
        object.__setattr__(self, "coeffs", tuple(coeffs))
        for n in (0, 1):
            if self.coeffs[n].degree > 0:
                raise InputError(f"f_{n} must be constant in the parameter")

    @classmethod
    def from_scalar_series(cls, base_point, series: Sequence, order: Optional[int] = None,
                           flags=()) -> "PerturbationFamily":
        """Family constant in the parameter, from plain series coefficients."""
        series = list(series)
        order = order if order is not None else len(series) - 1
        return cls(base_point, order, tuple(ParamPoly.const(c) for c in series), flags=flags)

    @property
    def linear_part(self):
        return self.coeffs[1].constant_value()

    @property
    def constant_part(self):
        return self.coeffs[0].constant_value()

    def degrees(self) -> tuple:
        return tuple(p.degree for p in self.coeffs)

    def map_coefficients(self, fn) -> "PerturbationFamily":
        return replace(self, coeffs=tuple(p.map_coefficients(fn) for p in self.coeffs))


@dataclass(frozen=True)
class DegreeClass:
    """Most specific label plus all implied ones, relative to the truncation order."""

    labels: frozenset
    most_specific: str
    witness: Optional[tuple]
    truncation_order: int

    def __contains__(self, label: str) -> bool:
        return label in self.labels


def classify_degree(f: PerturbationFamily) -> DegreeClass:
    """Exact degree classification of a family from its coefficient degrees.

    The verdict is relative to the truncation order: degrees beyond it are not
    observable and are not claimed.
    """
    d = f.degrees()
    M = f.order
    quadratic = d[2] == 1 and all(d[n] <= 1 for n in range(3, M + 1))
    essentially = d[2] == 1 and all(d[n] < n - 1 for n in range(3, M + 1))
    sub = all(d[n] < n - 1 for n in range(2, M + 1))
    labels = set()
    if quadratic:
        labels.add(LABEL_QUADRATIC)
    if essentially:
        labels.add(LABEL_ESSENTIALLY_QUADRATIC)
    if sub:
        labels.add(LABEL_SUB_QUADRATIC)
    witness = None
    if not labels:
        labels.add(LABEL_GENERAL)
        for n in range(2, M + 1):
            if d[n] >= n - 1 and not (n == 2 and d[2] == 1):
                witness = (n, d[n])
                break
    order = [LABEL_QUADRATIC, LABEL_ESSENTIALLY_QUADRATIC, LABEL_SUB_QUADRATIC, LABEL_GENERAL]
    most = next(lbl for lbl in order if lbl in labels)
    return DegreeClass(frozenset(labels), most, witness, M)


def compose(
    g: PerturbationFamily,
    f: PerturbationFamily,
    tol: float = DEFAULT_BASE_POINT_TOL,
    shadow: bool = False,
) -> PerturbationFamily:
    """Composition g(a, f(a, z)) as a family at f's base point.

    h_m = sum_{n=1}^{m} g_n * sum_{k_1+...+k_n=m} f_{k_1}...f_{k_n}, truncated
    at the minimum of the two input orders; h_0 = g_0 and h_1 = g_1 f_1.
    ``shadow=True`` reruns the convolution at doubled precision and flags any
    disagreement in the exact degree profile.
    """
    w0 = g.base_point
    f0 = f.constant_part
    if abs(f0 - w0) > tol * max(1.0, abs(w0)):
        raise BasePointMismatch(
            f"f's constant term {f0} does not match g's base point {w0}"
        )
    if f.coeffs[1].is_zero or g.coeffs[1].is_zero:
        raise DegenerateLinearPart("composition requires nonvanishing linear parts")
    M = min(f.order, g.order)
    h = _compose_coeffs(
        [g.coeffs[n] for n in range(M + 1)],
        [f.coeffs[n] for n in range(M + 1)],
        M,
    )
    flags = tuple(sorted(set(f.flags) | set(g.flags)))
    if shadow:
        with mp.workprec(106):
            gs = [p.map_coefficients(mpc) for p in g.coeffs[:M + 1]]
            fs = [p.map_coefficients(mpc) for p in f.coeffs[:M + 1]]
            h2 = _compose_coeffs(gs, fs, M)
        if [p.degree for p in h] != [p.degree for p in h2]:
            flags = flags + ("shadow-degree-mismatch",)
    return PerturbationFamily(f.base_point, M, tuple(h), flags=flags)


def _compose_coeffs(g, f, M):
    """Core convolution: tail powers of f pushed through g's coefficients."""
    zero = ParamPoly.zero()
    # power[m] = [z^m] (f_tail)^n for the current n
    power = [zero] * (M + 1)
    for m in range(1, M + 1):
        power[m] = f[m]
    h = [zero] * (M + 1)
    h[0] = ParamPoly.const(g[0].constant_value())
    for m in range(1, M + 1):
        h[m] = h[m] + g[1] * power[m]
    for n in range(2, M + 1):
        nxt = [zero] * (M + 1)
        for m in range(n, M + 1):
            acc = zero
            for i in range(1, m - n + 2):
                if not f[i].is_zero and not power[m - i].is_zero:
                    acc = acc + f[i] * power[m - i]
            nxt[m] = acc
        power = nxt
        gn = g[n]
        if gn.is_zero:
            continue
        for m in range(n, M + 1):
            if not power[m].is_zero:
                h[m] = h[m] + gn * power[m]
    return h


def invert_parameter(f: PerturbationFamily, tol: float = DEFAULT_BASE_POINT_TOL) -> PerturbationFamily:
    """Parameter inversion b = 1/a with the rescaling z -> bz.

    Sends f to G(b, z) with g_k(b) = b^(k-1) f_k(1/b): each coefficient list is
    reversed at padding length k, so deg g_k <= k-1, g_k(0) = 0 for k > 2, and
    g_2(0) is the leading coefficient of f_2.  Requires an essentially
    quadratic family fixing the origin.
    """
    if f.base_point != 0 or abs(f.constant_part) > tol:
        raise NonzeroBasePoint("parameter inversion requires a family fixing 0")
    cls = classify_degree(f)
    if LABEL_ESSENTIALLY_QUADRATIC not in cls:
        # Coefficient-list reversal is an involution at fixed padding length,
        # so the image shape (deg f_k <= k-1, f_2 nonzero at 0) is accepted
        # too; that makes a double inversion restore the original exactly.
        image_shape = all(f.coeffs[k].degree <= k - 1 for k in range(2, f.order + 1)) and (
            not f.coeffs[2].is_zero
            and (f.coeffs[2].degree == 1 or f.coeffs[2].coeffs[0] != 0)
        )
        if not image_shape:
            raise NotEssentiallyQuadratic(
                f"family classifies as {cls.most_specific} (witness {cls.witness}) "
                "and is not the image of an inversion"
            )
    out = [ParamPoly.zero(), f.coeffs[1]]
    for k in range(2, f.order + 1):
        out.append(f.coeffs[k].reversed_padded(k))
    return PerturbationFamily(0, f.order, tuple(out),
                              flags=tuple(sorted(set(f.flags) | {"parameter-inverted"})))


def normalize_second_coefficient(f: PerturbationFamily) -> PerturbationFamily:
    """Conjugate by z -> sz so the leading coefficient of f_2 becomes 1.

    The scaling maps f_n to s^(n-1) f_n, so every parameter degree d_n is
    unchanged and the classification is invariant.
    """
    if f.coeffs[2].is_zero:
        raise DegenerateSecondCoefficient("f_2 vanishes identically; nothing to normalize")
    lead = f.coeffs[2].leading_coefficient()
    if lead == 1:
        return f
    s = 1.0 / lead
    new = [f.coeffs[n].scale(s ** (n - 1)) for n in range(f.order + 1)]
    return replace(f, coeffs=tuple(new))


def evaluate_at_parameter(f: PerturbationFamily, a) -> np.ndarray:
    """Single-variable series coefficients f_n(a), n = 0..order, by Horner."""
    return np.array([p.evaluate(a) for p in f.coeffs], dtype=complex)


def family_to_json(f: PerturbationFamily) -> dict:
    return {
        "base_point": [f.base_point.real, f.base_point.imag]
        if isinstance(f.base_point, complex)
        else [float(f.base_point), 0.0],
        "order": f.order,
        "coeffs": [[[complex(c).real, complex(c).imag] for c in p.coeffs] for p in f.coeffs],
        "flags": list(f.flags),
    }


def family_from_json(data: dict) -> PerturbationFamily:
    bp = complex(data["base_point"][0], data["base_point"][1])
    coeffs = tuple(
        ParamPoly(tuple(complex(re, im) for re, im in p)) for p in data["coeffs"]
    )
    return PerturbationFamily(bp, int(data["order"]), coeffs, flags=tuple(data.get("flags", ())))
