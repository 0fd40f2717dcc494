"""Exact continued-fraction arithmetic for rotation numbers and Brjuno partial sums.

Convergents are kept as exact Python integers with the seeding convention

    p[-1] = 1, q[-1] = 0,   p[0] = 0, q[0] = 1,

so that for a number in (0,1) the first convergent is p_1/q_1 = 1/a_1.  The
rotation number itself is carried as an mpmath float together with an explicit
outward error bound; quotient extraction runs in interval arithmetic so every
emitted quotient is certified at the working precision.

The Brjuno terms are t_n = log(q_{n+1}) / q_n (natural log; membership in the
Brjuno set does not depend on the base).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import mpmath
from mpmath import iv, mp

from .errors import (
    InputError,
    InsufficientTerms,
    PrecisionExhausted,
    QuotientOverflow,
    RationalDetected,
)

DEFAULT_PRECISION_BITS = 256

#: hard cap on the bit size of any synthesized denominator
DEFAULT_BIT_LIMIT = 4_000_000

VERDICT_CONVERGENT = "ConvergentLikely"
VERDICT_DIVERGENT = "DivergentLikely"
VERDICT_INCONCLUSIVE = "Inconclusive"

_GEOMETRIC_DECAY_FACTOR = 0.85  # max consecutive term ratio still called "decaying"


def _mpf_to_fraction(x) -> Fraction:
    sign, man, exp, _ = x._mpf_
    num = -man if sign else man
    if exp >= 0:
        return Fraction(int(num) << exp, 1)
    return Fraction(int(num), 1 << (-exp))


@dataclass(frozen=True)
class RotationNumber:
    """A real number in (0,1) at explicit precision, with provenance.

    ``value`` is an mpmath float; ``error_bound`` is an outward bound on
    |true - value| used to certify continued-fraction quotients.
    """

    value: mpmath.mpf
    precision_bits: int
    source: tuple
    error_bound: mpmath.mpf

    def __post_init__(self):
        if not (0 < self.value < 1):
            raise InputError(f"rotation number must lie in (0,1), got {self.value}")

    @classmethod
    def from_algebraic(cls, name: str, precision_bits: int = DEFAULT_PRECISION_BITS) -> "RotationNumber":
        """Named constants: 'golden' = (sqrt5-1)/2, 'sqrt2' = sqrt2-1, 'pi-3'."""
        with mp.workprec(precision_bits + 16):
            if name == "golden":
                v = (mp.sqrt(5) - 1) / 2
            elif name == "sqrt2":
                v = mp.sqrt(2) - 1
            elif name == "pi-3":
                v = mp.pi - 3
            else:
                raise InputError(f"unknown algebraic rotation number {name!r}")
            v = +v  # round to context precision
            err = mp.ldexp(1, int(mp.mag(v)) - precision_bits + 2)
        return cls(value=v, precision_bits=precision_bits, source=("algebraic", name), error_bound=err)

    @classmethod
    def from_decimal(cls, digits: str, precision_bits: int = DEFAULT_PRECISION_BITS) -> "RotationNumber":
        """The decimal literal is taken as an exact rational."""
        exact = Fraction(digits)
        with mp.workprec(precision_bits):
            v = mp.mpf(exact.numerator) / mp.mpf(exact.denominator)
            if _mpf_to_fraction(v) == exact:
                err = mp.mpf(0)
            else:
                err = mp.ldexp(1, int(mp.mag(v)) - precision_bits + 2)
        return cls(value=v, precision_bits=precision_bits, source=("decimal", digits), error_bound=err)

    @classmethod
    def from_quotients(cls, quotients: Sequence[int], bit_limit: int = DEFAULT_BIT_LIMIT) -> "RotationNumber":
        return synthesize_from_quotients(quotients, bit_limit=bit_limit)


@dataclass(frozen=True)
class ContinuedFractionExpansion:
    """Certified quotients a_1..a_N with exact convergents p_0..p_N, q_0..q_N.

    ``exhausted`` marks an expansion that stopped before the requested length
    because the next floor could not be certified.
    """

    quotients: tuple
    p: tuple
    q: tuple
    exhausted: bool = False

    def __post_init__(self):
        n = len(self.quotients)
        if len(self.p) != n + 1 or len(self.q) != n + 1:
            raise InputError("convergent lists must have one more entry than the quotients")
        pp, pc = 1, self.p[0]
        qp, qc = 0, self.q[0]
        if (pc, qc) != (0, 1):
            raise InputError("convergents must be seeded with p_0=0, q_0=1")
        for k, a in enumerate(self.quotients, start=1):
            if a < 1:
                raise InputError(f"quotient a_{k} = {a} is not a positive integer")
            pp, pc = pc, a * pc + pp
            qp, qc = qc, a * qc + qp
            if self.p[k] != pc or self.q[k] != qc:
                raise InputError(f"convergent recurrence violated at index {k}")
            if math.gcd(pc, qc) != 1:
                raise InputError(f"gcd(p_{k}, q_{k}) != 1")

    def __len__(self):
        return len(self.quotients)

    def convergent(self, n: int) -> Fraction:
        return Fraction(self.p[n], self.q[n])


@dataclass(frozen=True)
class BrjunoSumResult:
    """Terms t_n = log(q_{n+1})/q_n and partial sums B_N, with a heuristic verdict."""

    terms: tuple
    partial_sums: tuple
    N: int
    verdict: str = VERDICT_INCONCLUSIVE
    verdict_basis: str = "not classified"


def expand_continued_fraction(alpha: RotationNumber, n_terms: int) -> ContinuedFractionExpansion:
    """Extract up to ``n_terms`` certified quotients of ``alpha``.

    Runs the floor/reciprocal loop in outward-rounded interval arithmetic.
    Raises ``RationalDetected`` if a remainder is exactly zero, and
    ``PrecisionExhausted`` if not even the first quotient can be certified;
    later certification failures return a partial result with the
    ``exhausted`` marker set.
    """
    if n_terms < 1:
        raise InputError("n_terms must be >= 1")
    old_prec = iv.prec
    iv.prec = alpha.precision_bits + 32
    try:
        # endpoints built inside the interval context so nothing rounds to mp.prec
        x = iv.mpf(alpha.value) + iv.mpf([-1, 1]) * iv.mpf(alpha.error_bound)
        quotients = []
        p = [0]
        q = [1]
        pp, qp = 1, 0  # p_{-1}, q_{-1}
        exhausted = False
        for _ in range(n_terms):
            if 0 in x:
                if x.delta == 0:
                    raise RationalDetected(
                        f"remainder exactly zero after {len(quotients)} quotients",
                        quotients,
                    )
                exhausted = True
                break
            y = 1 / x
            fa = mp.floor(y.a)
            fb = mp.floor(y.b)
            if fa != fb:
                exhausted = True
                break
            a = int(fa)
            if a < 1:
                raise PrecisionExhausted("certified floor below 1; value not in (0,1) at working precision")
            quotients.append(a)
            p.append(a * p[-1] + pp)
            q.append(a * q[-1] + qp)
            pp, qp = p[-2], q[-2]
            x = y - a
        if not quotients:
            raise PrecisionExhausted(
                f"could not certify any quotient at {alpha.precision_bits} bits"
            )
        return ContinuedFractionExpansion(tuple(quotients), tuple(p), tuple(q), exhausted=exhausted)
    finally:
        iv.prec = old_prec


def synthesize_from_quotients(quotients: Sequence[int], bit_limit: int = DEFAULT_BIT_LIMIT) -> RotationNumber:
    """Build a rotation number whose expansion reproduces the given quotients.

    The value is placed in the open interval between the last convergent and
    the last-but-one mediant, which is exactly the set of numbers whose
    expansion starts with the given quotients; precision is chosen so that
    every quotient is certifiable on re-expansion.
    """
    quotients = [int(a) for a in quotients]
    if not quotients:
        raise InputError("quotient list must be nonempty")
    if any(a < 1 for a in quotients):
        raise InputError("all quotients must be positive integers")
    if sum(a.bit_length() for a in quotients) > bit_limit:
        raise QuotientOverflow(f"quotients exceed the {bit_limit}-bit limit")
    pp, pc = 1, 0
    qp, qc = 0, 1
    for a in quotients:
        pp, pc = pc, a * pc + pp
        qp, qc = qc, a * qc + qp
        if qc.bit_length() > bit_limit:
            raise QuotientOverflow(f"denominator exceeds the {bit_limit}-bit limit")
    # Numbers whose expansion starts with the given quotients are exactly
    # (p_N + x p_{N-1})/(q_N + x q_{N-1}) for a remainder x in (0,1).  Pinning
    # x to [3/8, 5/8] keeps the value safely inside the gap, so re-expansion
    # certifies every given quotient and then stops (floor 1-vs-2 ambiguity).
    lo = Fraction(8 * pc + 3 * pp, 8 * qc + 3 * qp)
    hi = Fraction(8 * pc + 5 * pp, 8 * qc + 5 * qp)
    if lo > hi:
        lo, hi = hi, lo
    mid = (lo + hi) / 2
    half_width = (hi - lo) / 2
    bits = max(DEFAULT_PRECISION_BITS, 2 * qc.bit_length() + 64)
    with mp.workprec(bits + 16):
        value = mp.mpf(mid.numerator) / mp.mpf(mid.denominator)
        err = mp.mpf(half_width.numerator) / mp.mpf(half_width.denominator)
        err = err * (1 + mp.ldexp(1, -8))  # outward slack for the conversion
    return RotationNumber(
        value=value,
        precision_bits=bits,
        source=("quotients", tuple(quotients)),
        error_bound=err,
    )


def brjuno_partial_sum(
    cf: ContinuedFractionExpansion,
    N: int,
    classify: bool = False,
    window: int = 8,
    ratio_threshold: float = 0.5,
) -> BrjunoSumResult:
    """Partial sums B_N = sum_{n=1}^{N} log(q_{n+1})/q_n from exact denominators."""
    if N < 0:
        raise InputError("N must be >= 0")
    if len(cf) < N + 1:
        raise InsufficientTerms(f"need {N + 1} convergents, expansion has {len(cf)}")
    terms = []
    sums = []
    total = 0.0
    for n in range(1, N + 1):
        qn, qn1 = cf.q[n], cf.q[n + 1]
        if qn.bit_length() < 1000:
            t = math.log(qn1) / qn  # math.log takes arbitrarily large ints
        else:
            t = float(mp.log(qn1) / qn)
        terms.append(t)
        total += t
        sums.append(total)
    result = BrjunoSumResult(tuple(terms), tuple(sums), N)
    if classify:
        result = classify_brjuno_heuristic(result, window=window, ratio_threshold=ratio_threshold)
    return result


def classify_brjuno_heuristic(
    result: BrjunoSumResult,
    window: int = 8,
    ratio_threshold: float = 0.5,
) -> BrjunoSumResult:
    """Heuristic convergence verdict from the last ``window`` terms.

    Divergence of the infinite sum is undecidable from finitely many terms, so
    the verdict always carries the evidence it was based on.
    """
    if len(result.terms) < window:
        raise InsufficientTerms(f"need at least {window} terms, have {len(result.terms)}")
    tail = result.terms[-window:]
    low = min(tail)
    if low >= ratio_threshold:
        return replace(
            result,
            verdict=VERDICT_DIVERGENT,
            verdict_basis=f"min of last {window} terms is {low:.6g} >= {ratio_threshold}",
        )
    ratios = [tail[i + 1] / tail[i] for i in range(len(tail) - 1) if tail[i] > 0]
    if ratios and max(ratios) <= _GEOMETRIC_DECAY_FACTOR:
        return replace(
            result,
            verdict=VERDICT_CONVERGENT,
            verdict_basis=(
                f"last {window} terms decay geometrically "
                f"(max consecutive ratio {max(ratios):.6g} <= {_GEOMETRIC_DECAY_FACTOR})"
            ),
        )
    return replace(
        result,
        verdict=VERDICT_INCONCLUSIVE,
        verdict_basis=(
            f"last {window} terms neither bounded below by {ratio_threshold} "
            f"nor geometrically decaying (min {low:.6g}, max ratio "
            f"{max(ratios):.6g})" if ratios else "degenerate window"
        ),
    )


def multiplier_from_rotation(alpha: RotationNumber) -> mpmath.mpc:
    """lambda = exp(2 pi i alpha) at the rotation number's working precision."""
    with mp.workprec(alpha.precision_bits):
        return mpmath.expjpi(2 * alpha.value)


def unit_multiplier(alpha: RotationNumber) -> complex:
    """Double-precision lambda = exp(2 pi i alpha)."""
    return complex(multiplier_from_rotation(alpha))


def small_divisor_table(alpha: RotationNumber, k_max: int):
    """Complex divisors lambda^k - lambda for k = 0..k_max at high precision.

    Computed from the fractional parts of k*alpha so that near-resonant
    divisors far below double-precision noise still come out accurately
    (magnitudes down to ~1e-300 survive the final conversion to complex).
    """
    import numpy as np

    out = np.zeros(k_max + 1, dtype=complex)
    with mp.workprec(max(alpha.precision_bits, 64) + 32):
        lam = mpmath.expjpi(2 * alpha.value)
        for k in range(2, k_max + 1):
            f = mp.frac(k * alpha.value)
            out[k] = complex(mpmath.expjpi(2 * f) - lam)
    return out


def detect_rational_angle(theta, max_den: int, tol: float = 1e-12):
    """Best rational s/t with t <= max_den matching ``theta`` (in turns), or None.

    Used as the root-of-unity test: at double precision a true rational angle
    reproduces itself to ~1e-16 while the best denominator-capped approximant
    of a typical irrational sits many orders of magnitude further away.
    """
    th = float(theta) % 1.0
    fr = Fraction(th).limit_denominator(max_den)
    if abs(th - float(fr)) <= tol:
        return fr.numerator % fr.denominator if fr.denominator > 1 else 0, fr.denominator
    return None


def power_schedule_quotients(
    n_terms: int,
    seed: int = 1,
    base: int = 2,
    bit_limit: int = DEFAULT_BIT_LIMIT,
) -> list:
    """Explicit quotients of the schedule a_1 = seed, a_{n+1} = base**q_n.

    The denominators grow as a tower, so only a handful of terms fit in exact
    integers; past the bit limit a ``QuotientOverflow`` is raised.
    """
    if n_terms < 1 or seed < 1 or base < 2:
        raise InputError("need n_terms >= 1, seed >= 1, base >= 2")
    a = [seed]
    qp, qc = 1, seed
    for _ in range(n_terms - 1):
        next_bits = qc * max(1, base.bit_length() - 1) + 1
        if next_bits > bit_limit:
            raise QuotientOverflow(
                f"next quotient {base}**{qc} needs ~{next_bits} bits, over the {bit_limit}-bit limit"
            )
        an = base ** qc
        a.append(an)
        qp, qc = qc, an * qc + qp
    return a


def power_schedule_brjuno(N: int, seed: int = 1, base: int = 2, classify: bool = False) -> BrjunoSumResult:
    """Brjuno partial sums for the schedule a_{n+1} = base**q_n, in hybrid log space.

    Denominators are kept exact while they fit and switch to log representation
    afterwards, so B_N is computable for N far beyond what explicit integers
    allow.  Every term satisfies t_n >= log(base) exactly, since
    q_{n+1} >= base**q_n.
    """
    if N < 0 or seed < 1 or base < 2:
        raise InputError("need N >= 0, seed >= 1, base >= 2")
    # Beyond log q_n ~ 1e6 the correction log(q_n)/q_n underflows any float,
    # so every further term is log(base) to full double accuracy and the
    # tower no longer needs to be represented at all.
    log_saturation = 1e6
    with mp.workprec(128):
        logbase = mp.log(base)
        q = [1, seed]  # q_0, q_1; None once only the log survives
        logq = [mp.mpf(0), mp.log(seed)]
        saturated = False
        terms = []
        sums = []
        total = 0.0
        for n in range(1, N + 1):
            while not saturated and len(logq) < n + 2:
                m = len(logq) - 1  # building q_{m+1}
                if logq[m] > log_saturation:
                    saturated = True
                    break
                if q[m] is not None and q[m] <= 200_000:
                    nq = (base ** q[m]) * q[m] + q[m - 1]
                    q.append(nq)
                    logq.append(mp.log(nq))
                else:
                    # log(q_{m+1}) = q_m log(base) + log(q_m) + log1p(q_{m-1}/(base**q_m q_m))
                    qm = mp.mpf(q[m]) if q[m] is not None else mp.exp(logq[m])
                    main = qm * logbase + logq[m]
                    logq.append(main + mp.log1p(mp.exp(logq[m - 1] - main)))
                    q.append(None)
            if len(logq) >= n + 2:
                qn = mp.mpf(q[n]) if q[n] is not None else mp.exp(logq[n])
                t = float(logq[n + 1] / qn)
            else:
                t = float(logbase)
            terms.append(t)
            total += t
            sums.append(total)
    result = BrjunoSumResult(tuple(terms), tuple(sums), N)
    if classify:
        result = classify_brjuno_heuristic(result)
    return result
