"""Formal and numerical linearization of fixed points.

The central recursion solves f(H(z)) = H(lambda z) order by order:

    H_m = R_m / (lambda^m - lambda),

where R_m collects the contributions of H_2..H_{m-1} to the z^m coefficient
of f o H.  Powers of H are maintained incrementally, so the whole run is
O(M^3) and comfortable at the desk scale of a few hundred orders.

Small divisors are the precision hazard.  Divisor magnitudes are checked
against a floor; when the floor is crossed, the multiplier's angle is first
tested for being an exact root of unity (continued-fraction detection, not a
tolerance band), and otherwise the divisors are recomputed in extended
precision from the rotation number when one is attached to the input series.
Near-resonant coefficient growth is the signal of interest, not a failure:
escalation plus a collapsing radius estimate is how Cremer-type behavior
manifests, and results report it rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from mpmath import mp

from . import rotation as rotation_mod
from .errors import (
    InputError,
    NonContracting,
    ParabolicMultiplier,
    SmallDivisorUnderflow,
)
from .famalg import ParamPoly, PerturbationFamily
from .rotation import RotationNumber, detect_rational_angle

DEFAULT_DIVISOR_FLOOR = 1e-14
DEFAULT_ESCALATION_BITS = 256
RESUBSTITUTION_TOL = 1e-8


@dataclass(frozen=True)
class TruncatedSeries:
    """Germ coefficients c_1..c_M at a fixed point at 0 (c_1 = lambda, no c_0).

    ``coeffs[k]`` is c_k; index 0 is kept as an exact zero so indices align
    with powers of z.  An optional rotation number gives the multiplier's
    angle exactly for extended-precision small divisors.
    """

    coeffs: tuple
    order: int
    rotation: Optional[RotationNumber] = None

    def __post_init__(self):
        coeffs = list(self.coeffs)
        if len(coeffs) < 2:
            raise InputError("series needs at least the linear coefficient")
        if coeffs[0] != 0:
            raise InputError("fixed point must be at 0 (no constant term)")
        if self.order < 2:
            raise InputError("order must be >= 2")
        coeffs += [0.0] * (self.order + 1 - len(coeffs))
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in coeffs[: self.order + 1]))

    @classmethod
    def from_terms(cls, lam, terms: dict, order: int, rotation=None) -> "TruncatedSeries":
        """Series lam*z + sum_{k in terms} terms[k] * z^k."""
        coeffs = [0.0] * (order + 1)
        coeffs[1] = lam
        for k, c in terms.items():
            if not 2 <= k <= order:
                raise InputError(f"term exponent {k} outside 2..{order}")
            coeffs[k] = c
        return cls(tuple(coeffs), order, rotation=rotation)

    @classmethod
    def quadratic(cls, rotation: RotationNumber, order: int) -> "TruncatedSeries":
        """The model map lambda z + z^2 with lambda = e^{2 pi i alpha}."""
        lam = rotation_mod.unit_multiplier(rotation)
        return cls.from_terms(lam, {2: 1.0}, order, rotation=rotation)

    @property
    def lam(self) -> complex:
        return self.coeffs[1]

    def __call__(self, z):
        acc = np.zeros_like(np.asarray(z, dtype=complex))
        for c in reversed(self.coeffs[1:]):
            acc = acc * z + c
        return acc * z


class RadiusEstimate(NamedTuple):
    radius: float
    slope: float
    window: tuple


@dataclass(frozen=True)
class LinearizationResult:
    """Linearizing coefficients with small-divisor and radius diagnostics.

    ``H[k]`` is the k-th coefficient (H[1] = 1); ``log_magnitudes[k]`` holds
    log|H_k| and stays finite even when H_k itself overflows a double.
    """

    lam: complex
    order: int
    H: np.ndarray
    log_magnitudes: np.ndarray
    small_divisors: np.ndarray
    radius_root_test: float
    radius_window: tuple
    resubstitution_residual: float
    escalated: bool = False
    precision_bits: int = 53
    method: str = "formal"
    notes: tuple = ()


@dataclass(frozen=True)
class ParamLinearization:
    """Linearization of a polynomial-in-b family: each H_k is a ParamPoly."""

    lam: complex
    order: int
    H: tuple
    degrees: tuple
    small_divisors: np.ndarray


def _root_of_unity(lam: complex, cap: int):
    theta = math.atan2(lam.imag, lam.real) / (2 * math.pi)
    return detect_rational_angle(theta, cap, tol=1e-12)


def _root_of_unity_exact(rot: RotationNumber, cap: int):
    """Certified trichotomy for the angle: ('parabolic', s, t), ('irrational',)
    or ('undecided',).

    A rational with denominator <= cap would terminate its expansion before
    the certified denominators pass cap, so certified growth beyond cap proves
    the angle is no root of unity of relevant order.  Exhaustion at small
    denominators means the attached precision cannot separate the two cases.
    """
    from .errors import PrecisionExhausted, RationalDetected

    try:
        cf = rotation_mod.expand_continued_fraction(rot, 64)
    except RationalDetected as exc:
        pp, pc, qp, qc = 1, 0, 0, 1
        for a in exc.quotients:
            pp, pc = pc, a * pc + pp
            qp, qc = qc, a * qc + qp
        return ("parabolic", pc, qc) if qc <= cap else ("irrational",)
    except PrecisionExhausted:
        return ("undecided",)
    if cf.q[-1] > cap:
        return ("irrational",)
    return ("undecided",)


def _divisors_double(lam: complex, M: int) -> np.ndarray:
    out = np.zeros(M + 1, dtype=complex)
    power = lam
    for k in range(2, M + 1):
        power = power * lam
        out[k] = power - lam
    return out


def _scalar_recursion(c: np.ndarray, divisors: np.ndarray, M: int):
    """Order-by-order solve with an incremental table of H powers.

    T[j, m] = [z^m] H(z)^j uses only H_2..H_{m-1}, so each order m first fills
    column m for j >= 2, reads off the residual, and then commits H_m.
    """
    H = np.zeros(M + 1, dtype=complex)
    H[1] = 1.0
    T = np.zeros((M + 1, M + 1), dtype=complex)
    T[1, 1] = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(2, M + 1):
            for j in range(2, m + 1):
                # sum_{i=1}^{m-j+1} H_i T[j-1, m-i]
                upper = m - j + 1
                T[j, m] = np.dot(H[1 : upper + 1], T[j - 1, m - 1 : m - 1 - upper : -1])
            R = np.dot(c[2 : m + 1], T[2 : m + 1, m])
            H[m] = R / divisors[m]
            T[1, m] = H[m]
    return H


def _horner_compose(f: np.ndarray, g: np.ndarray, M: int) -> np.ndarray:
    """f(g(z)) truncated at order M; f, g indexed 0..M with zero constant terms."""
    S = np.zeros(M + 1, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(M, 0, -1):
            S = np.convolve(S, g)[: M + 1]
            S[0] += f[j]
        S = np.convolve(S, g)[: M + 1]
    return S


def _resubstitution_residual(c: np.ndarray, H: np.ndarray, lam: complex, M: int) -> float:
    """Independent check of f(H(z)) = H(lambda z), coefficient-wise relative."""
    if not np.all(np.isfinite(H)):
        return float("inf")
    lhs = _horner_compose(c, H, M)
    powers = lam ** np.arange(M + 1)
    rhs = H * powers
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return float(np.max(np.abs(lhs - rhs)[1:] / scale[1:]))


def formal_linearize(
    f: TruncatedSeries,
    order: Optional[int] = None,
    divisor_floor: float = DEFAULT_DIVISOR_FLOOR,
    escalation_bits: int = DEFAULT_ESCALATION_BITS,
    window: Optional[tuple] = None,
) -> LinearizationResult:
    """Unique formal linearization H with H_1 = 1 through the given order.

    Raises ``ParabolicMultiplier`` when lambda is detected as an exact root of
    unity of order <= M, and ``SmallDivisorUnderflow`` when a divisor crosses
    the floor and no rotation number is available to recompute it exactly.
    """
    M = order if order is not None else f.order
    c = np.array(f.coeffs, dtype=complex)
    if len(c) < M + 1:
        c = np.concatenate([c, np.zeros(M + 1 - len(c), dtype=complex)])
    lam = complex(c[1])
    if lam == 0 or not np.isfinite(abs(lam)):
        raise InputError("multiplier must be finite and nonzero")

    divisors = _divisors_double(lam, M)
    escalated = False
    bits = 53
    notes = []
    mags = np.abs(divisors[2:])
    if mags.size and mags.min() < divisor_floor:
        k_bad = int(np.argmin(mags)) + 2
        # A Liouville-type angle sits closer to some rational than any floating
        # tolerance, so the exact expansion decides when one is attached.
        if f.rotation is not None:
            verdict = _root_of_unity_exact(f.rotation, M)
            if verdict[0] == "parabolic" and abs(abs(lam) - 1) < 1e-9:
                raise ParabolicMultiplier(
                    f"multiplier is the root of unity e^(2 pi i {verdict[1]}/{verdict[2]})",
                    s=verdict[1], t=verdict[2],
                )
            if verdict[0] == "undecided":
                raise SmallDivisorUnderflow(
                    f"divisor at k={k_bad} below floor and the rotation number's "
                    "precision cannot separate root of unity from near-resonance",
                    k=k_bad,
                )
        else:
            ru = _root_of_unity(lam, M)
            if ru is not None and abs(abs(lam) - 1) < 1e-9:
                raise ParabolicMultiplier(
                    f"multiplier is the root of unity e^(2 pi i {ru[0]}/{ru[1]})",
                    s=ru[0], t=ru[1],
                )
            raise SmallDivisorUnderflow(
                f"|lambda^{k_bad} - lambda| = {mags.min():.3e} below the floor "
                f"{divisor_floor:g} and no rotation number attached",
                k=k_bad,
            )
        rot = f.rotation
        if rot.precision_bits < escalation_bits and rot.source[0] == "algebraic":
            rot = RotationNumber.from_algebraic(rot.source[1], escalation_bits)
        divisors = rotation_mod.small_divisor_table(rot, M)
        bits = rot.precision_bits
        escalated = True
        notes.append(f"divisors recomputed at {bits} bits (min crossed {divisor_floor:g})")
        # certified only while the divisor dominates the angle uncertainty
        hp_floor = max(200.0 * M * float(rot.error_bound), 1e-280)
        hp_mags = np.abs(divisors[2:])
        if hp_mags.min() < hp_floor:
            k_bad = int(np.argmin(hp_mags)) + 2
            raise SmallDivisorUnderflow(
                f"divisor at k={k_bad} is {hp_mags.min():.3e}, below the "
                f"certification floor {hp_floor:.3e} of the attached rotation",
                k=k_bad,
            )

    H = _scalar_recursion(c, divisors, M)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        log_mags = np.full(M + 1, -np.inf)
        nz = np.abs(H) > 0
        log_mags[nz] = np.log(np.abs(H[nz]))
    if not np.all(np.isfinite(H[1:])):
        notes.append("coefficients overflow double precision; magnitudes reported via logs only")

    win = window if window is not None else (max(2, M // 2), M)
    est = radius_estimate(log_mags, win, already_log=True)
    residual = _resubstitution_residual(c, H, lam, M)
    return LinearizationResult(
        lam=lam,
        order=M,
        H=H,
        log_magnitudes=log_mags,
        small_divisors=np.abs(divisors),
        radius_root_test=est.radius,
        radius_window=win,
        resubstitution_residual=residual,
        escalated=escalated,
        precision_bits=bits,
        method="formal",
        notes=tuple(notes),
    )


def koenigs_linearize(
    f: TruncatedSeries,
    order: Optional[int] = None,
    n_iter: int = 40,
) -> LinearizationResult:
    """Linearization of a contracting germ via phi = lim lambda^{-n} f^n.

    Independent of the formal recursion: the limit is computed by iterated
    truncated self-composition and then reverted, giving H = phi^{-1} with
    H_1 = 1.  Requires 0 < |lambda| < 1.
    """
    M = order if order is not None else f.order
    c = np.array(f.coeffs, dtype=complex)
    if len(c) < M + 1:
        c = np.concatenate([c, np.zeros(M + 1 - len(c), dtype=complex)])
    lam = complex(c[1])
    if not 0 < abs(lam) < 1:
        raise NonContracting(f"|lambda| = {abs(lam):.6g} not in (0,1)")
    cur = c[: M + 1].copy()
    scale = lam
    phi = cur / scale
    for n in range(1, n_iter):
        cur = _horner_compose(c[: M + 1], cur, M)
        scale *= lam
        new_phi = cur / scale
        delta = np.max(np.abs(new_phi - phi) / np.maximum(1.0, np.abs(new_phi)))
        phi = new_phi
        if delta < 1e-15:
            break
    H = _series_reverse(phi, M)
    log_mags = np.full(M + 1, -np.inf)
    nz = np.abs(H) > 0
    log_mags[nz] = np.log(np.abs(H[nz]))
    win = (max(2, M // 2), M)
    est = radius_estimate(log_mags, win, already_log=True)
    residual = _resubstitution_residual(c, H, lam, M)
    return LinearizationResult(
        lam=lam,
        order=M,
        H=H,
        log_magnitudes=log_mags,
        small_divisors=np.abs(_divisors_double(lam, M)),
        radius_root_test=est.radius,
        radius_window=win,
        resubstitution_residual=residual,
        method="koenigs",
    )


def _series_reverse(phi: np.ndarray, M: int) -> np.ndarray:
    """Compositional inverse of phi(z) = z + O(z^2), order by order."""
    if abs(phi[1] - 1.0) > 1e-9:
        raise InputError("series reversion here expects phi'(0) = 1")
    H = np.zeros(M + 1, dtype=complex)
    H[1] = 1.0
    for m in range(2, M + 1):
        comp = _horner_compose(phi[: M + 1], H, m)
        H[m] = -comp[m] / phi[1]
    return H


def formal_linearize_family(
    F: PerturbationFamily,
    order: Optional[int] = None,
    divisor_floor: float = DEFAULT_DIVISOR_FLOOR,
) -> ParamLinearization:
    """Linearization of a family with constant linear part; H_k polynomial in b.

    Requires the inverted-family shape deg g_k <= k-1, which by induction makes
    every H_k a polynomial whose degree is recorded exactly.
    """
    M = order if order is not None else F.order
    M = min(M, F.order)
    if not F.coeffs[1].is_constant or F.coeffs[1].is_zero:
        raise InputError("family must have a constant nonzero linear part")
    lam = complex(F.coeffs[1].constant_value())
    for k in range(2, M + 1):
        if F.coeffs[k].degree > k - 1:
            raise InputError(
                f"deg g_{k} = {F.coeffs[k].degree} > {k - 1}; family is not an inversion image"
            )
    divisors = _divisors_double(lam, M)
    mags = np.abs(divisors[2:])
    if mags.size and mags.min() < divisor_floor:
        k_bad = int(np.argmin(mags)) + 2
        ru = _root_of_unity(lam, M)
        if ru is not None and abs(abs(lam) - 1) < 1e-9:
            raise ParabolicMultiplier(
                f"multiplier is the root of unity e^(2 pi i {ru[0]}/{ru[1]})",
                s=ru[0], t=ru[1],
            )
        raise SmallDivisorUnderflow(
            f"family divisor at k={k_bad} below floor {divisor_floor:g}", k=k_bad
        )

    zero = ParamPoly.zero()
    H = [zero] * (M + 1)
    H[1] = ParamPoly.const(1.0)
    # T[j][m] = [z^m] H(b,z)^j, filled column by column like the scalar path
    T = [[zero] * (M + 1) for _ in range(M + 1)]
    T[1][1] = H[1]
    for m in range(2, M + 1):
        for j in range(2, m + 1):
            acc = zero
            for i in range(1, m - j + 2):
                hi = H[i]
                tj = T[j - 1][m - i]
                if not hi.is_zero and not tj.is_zero:
                    acc = acc + hi * tj
            T[j][m] = acc
        R = zero
        for j in range(2, m + 1):
            gj = F.coeffs[j]
            if not gj.is_zero and not T[j][m].is_zero:
                R = R + gj * T[j][m]
        H[m] = R.scale(1.0 / divisors[m])
        T[1][m] = H[m]
    return ParamLinearization(
        lam=lam,
        order=M,
        H=tuple(H),
        degrees=tuple(p.degree for p in H),
        small_divisors=np.abs(divisors),
    )


def radius_estimate(magnitudes, window: tuple, already_log: bool = False) -> RadiusEstimate:
    """Root-test radius 1 / max_{k in window} |H_k|^{1/k}, with a log-slope diagnostic.

    ``magnitudes[k]`` is |H_k| (or log|H_k| with ``already_log``); zero
    coefficients are skipped.  The slope is the least-squares fit of log|H_k|
    against k over the window, a stability indicator for the estimate.
    """
    k_min, k_max = window
    arr = np.asarray(magnitudes, dtype=float)
    if k_max >= len(arr):
        raise InputError(f"window upper end {k_max} beyond available order {len(arr) - 1}")
    if k_min < 1 or k_min > k_max:
        raise InputError(f"bad window {window}")
    ks = np.arange(k_min, k_max + 1)
    vals = arr[k_min : k_max + 1]
    logs = vals if already_log else np.log(np.where(vals > 0, vals, np.nan))
    good = np.isfinite(logs)
    if not np.any(good):
        return RadiusEstimate(float("inf"), 0.0, window)
    rates = logs[good] / ks[good]
    radius = float(np.exp(-np.max(rates)))
    if np.count_nonzero(good) >= 2:
        slope = float(np.polyfit(ks[good], logs[good], 1)[0])
    else:
        slope = 0.0
    return RadiusEstimate(radius, slope, window)


def max_principle_check(H_k: ParamPoly, r: float, n_samples: int = 64):
    """|H_k(0)| <= max over |b| = 1/r of |H_k(b)| (true for any polynomial).

    Returns (ok, margin); a failure beyond sampling noise flags a computation
    defect, since the inequality is exact mathematics.
    """
    if r <= 0:
        raise InputError("r must be positive")
    center = abs(complex(H_k.evaluate(0.0)))
    bs = np.exp(2j * np.pi * np.arange(n_samples) / n_samples) / r
    boundary = max(abs(complex(H_k.evaluate(b))) for b in bs)
    margin = boundary - center
    ok = margin >= -1e-12 * max(1.0, boundary)
    return ok, float(margin)


def debranges_check(H_k, k: int, delta: float, b_radius: float = 1.0, n_samples: int = 64):
    """Sampled check of |H_k(b)| <= k * delta^(-k+1) on |b| = b_radius.

    ``delta`` should come from a radius estimate scaled by a safety factor
    below 1.  A failure indicates the measured delta overestimates the
    univalence radius; this is a diagnostic, not a defect oracle.
    """
    bound = k * delta ** (-k + 1)
    if isinstance(H_k, ParamPoly):
        bs = b_radius * np.exp(2j * np.pi * np.arange(n_samples) / n_samples)
        worst = max(abs(complex(H_k.evaluate(b))) for b in bs)
    else:
        worst = abs(complex(H_k))
    margin = bound - worst
    return worst <= bound, float(margin)


def siegel_orbit_probe(
    mapping,
    lam: Optional[complex] = None,
    radii: Optional[Sequence[float]] = None,
    n_iter: int = 1000,
    n_test: int = 16,
    escape: Optional[float] = None,
    recurrence_fraction: float = 0.3,
    min_return_index: int = 8,
) -> float:
    """Largest grid radius whose circle of test orbits stays bounded and recurrent.

    Scans radii from the smallest up; a radius passes when no orbit point
    leaves the escape bound and every test orbit returns near its start during
    the later half of the iteration.  This is a lower-bound proxy for the
    in-radius of a rotation domain around 0; it returns 0 when even the
    smallest radius fails.
    """
    if lam is not None and abs(abs(lam) - 1) > 1e-6:
        raise InputError("probe expects a unit-modulus multiplier")
    fn = _as_map(mapping)
    if radii is None:
        radii = np.linspace(0.02, 0.8, 40)
    radii = np.sort(np.asarray(radii, dtype=float))
    if escape is None:
        escape = 4.0 * float(radii[-1])
    best = 0.0
    late_start = max(min_return_index, n_iter // 2)
    for r in radii:
        z0 = r * np.exp(2j * np.pi * np.arange(n_test) / n_test)
        z = z0.copy()
        min_return = np.full(n_test, np.inf)
        ok = True
        for n in range(1, n_iter + 1):
            z = fn(z)
            if not np.all(np.isfinite(z)) or np.any(np.abs(z) > escape):
                ok = False
                break
            if n >= late_start:
                min_return = np.minimum(min_return, np.abs(z - z0))
        if not ok or np.max(min_return) > recurrence_fraction * r:
            break
        best = float(r)
    return best


def _as_map(mapping):
    if callable(mapping):
        return mapping
    raise InputError(f"cannot interpret {type(mapping).__name__} as an iterable map")
