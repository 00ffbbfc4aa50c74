"""Blaschke products and quotients commuting with the antipodal involution.

Every map handled here has the shape

    B(z) = z**e * prod_j [kappa_j * (A_j - z**d_j) / (1 - conj(A_j) * z**d_j)] ** m_j

which covers the two-zero family, the ring-of-zeros family (both with the
``z**n`` or ``z**-n`` prefactor) and the general h-commuting product.
Points of the Riemann sphere are Python complex numbers or :data:`INF`.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np
from numpy.polynomial import polynomial as P

UNIT_CIRCLE_TOL = 1e-12
_EPS = np.finfo(float).eps
_LOG_HUGE = 700.0


class _Infinity:
    """The point at infinity of the Riemann sphere (singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __neg__(self):
        return self

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
SpherePoint = Union[complex, _Infinity]


def is_inf(z) -> bool:
    return z is INF


def as_point(z) -> SpherePoint:
    if z is INF:
        return INF
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        if math.isnan(z.real) or math.isnan(z.imag):
            raise ValueError("NaN is not a point of the sphere")
        return INF
    return z


def chordal(z: SpherePoint, w: SpherePoint) -> float:
    """Chordal distance on the Riemann sphere of diameter 2."""
    if z is INF and w is INF:
        return 0.0
    if z is INF:
        z, w = w, z
    if w is INF:
        return 2.0 / math.hypot(1.0, abs(z))
    if max(abs(z), abs(w)) > 1e150:
        # the metric is invariant under z -> 1/z; use that chart far out
        z, w = (1 / z if z else INF), (1 / w if w else INF)
        return chordal(z, w)
    return 2.0 * abs(z - w) / math.hypot(1.0, abs(z)) / math.hypot(1.0, abs(w))


def chordal_array(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Vectorised chordal distance; infinite entries are allowed."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    zi = ~np.isfinite(z)
    wi = ~np.isfinite(w)
    with np.errstate(invalid="ignore", over="ignore"):
        az = np.where(zi, 0.0, np.abs(z))
        aw = np.where(wi, 0.0, np.abs(w))
        d = 2.0 * np.abs(np.where(zi | wi, 0, z - w)) / np.hypot(1, az) / np.hypot(1, aw)
    d = np.where(zi & ~wi, 2.0 / np.hypot(1, aw), d)
    d = np.where(wi & ~zi, 2.0 / np.hypot(1, az), d)
    return np.where(zi & wi, 0.0, d)


def to_sphere(z) -> np.ndarray:
    """Inverse stereographic projection onto the unit sphere; |p - q| is the chordal distance."""
    z = np.asarray(z, dtype=complex)
    inf = ~np.isfinite(z)
    zz = np.where(inf, 0j, z)
    with np.errstate(over="ignore", invalid="ignore"):
        m2 = np.abs(zz) ** 2
        d = 1.0 + m2
        out = np.stack([2 * zz.real / d, 2 * zz.imag / d, (m2 - 1) / d], axis=-1)
    out[inf] = (0.0, 0.0, 1.0)
    # very large |z|: the formula above loses the pole, redo in the reciprocal chart
    big = ~inf & (m2 > 1e300)
    if np.any(big):
        u = 1 / zz[big]
        mu = np.abs(u) ** 2
        out[big] = np.stack([2 * u.real / (1 + mu), -2 * u.imag / (1 + mu), (1 - mu) / (1 + mu)], axis=-1)
    return out


def involution_h(z: SpherePoint) -> SpherePoint:
    """The fixed-point free antianalytic involution z -> -1/conj(z)."""
    if z is INF:
        return 0j
    z = complex(z)
    if z == 0:
        return INF
    with np.errstate(all="ignore"):
        w = -1.0 / z.conjugate()
    return as_point(w) if math.isfinite(abs(w)) else INF


class Family(enum.Enum):
    TWO_ZERO = "two-zero"
    RING_ZEROS = "ring-zeros"


class Sign(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


class _Factor(NamedTuple):
    kappa: complex
    A: complex
    d: int
    m: int


@dataclass(frozen=True)
class BlaschkeSpec:
    family: Family
    n: int
    a: complex
    sign: Sign = Sign.PLUS

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", Family(self.family))
        if isinstance(self.sign, str):
            object.__setattr__(self, "sign", Sign(self.sign))
        object.__setattr__(self, "a", complex(self.a))
        if int(self.n) != self.n or self.n < 1 or self.n % 2 == 0:
            raise ValueError(f"n must be an odd positive integer, got {self.n}")
        r = abs(self.a)
        if r == 0 or not math.isfinite(r):
            raise ValueError("the zero parameter a must be finite and non-zero")
        if abs(r - 1.0) <= UNIT_CIRCLE_TOL:
            raise ValueError(f"|a| = {r!r} lies on the unit circle")

    @classmethod
    def polar(cls, family, n, r, alpha, sign=Sign.PLUS) -> "BlaschkeSpec":
        return cls(family, n, cmath.rect(r, alpha), sign)

    @property
    def r(self) -> float:
        return abs(self.a)

    @property
    def alpha(self) -> float:
        return cmath.phase(self.a)

    @property
    def degree(self) -> int:
        return 3 * self.n

    @property
    def exponent(self) -> int:
        return self.n if self.sign is Sign.PLUS else -self.n

    @property
    def is_product_like(self) -> bool:
        """True when the preimage of the unit circle is the unit circle."""
        return (self.sign is Sign.PLUS) == (self.r < 1)

    @property
    def seed_value(self) -> complex:
        """Value e^{+-i n alpha} whose preimages are the unit-circle seeds."""
        s = 1 if self.sign is Sign.PLUS else -1
        return cmath.exp(1j * s * self.n * self.alpha)

    @property
    def factors(self) -> tuple[_Factor, ...]:
        a, n = self.a, self.n
        c = a.conjugate() / a
        if self.family is Family.TWO_ZERO:
            return (_Factor(c, a * a, 2, n),)
        return (_Factor(c**n, a ** (2 * n), 2 * n, 1),)


@dataclass(frozen=True)
class GeneralSpec:
    """z^(2p+1) times a finite product of h-commuting pair factors."""

    p: int
    zeros: tuple[complex, ...] = field(default=())

    def __post_init__(self):
        zs = tuple(complex(x) for x in self.zeros)
        object.__setattr__(self, "zeros", zs)
        if not zs:
            raise ValueError("GeneralSpec needs at least one factor")
        for x in zs:
            if x == 0 or abs(abs(x) - 1.0) <= UNIT_CIRCLE_TOL:
                raise ValueError(f"invalid factor parameter {x!r}")

    @property
    def exponent(self) -> int:
        return 2 * self.p + 1

    @property
    def factors(self) -> tuple[_Factor, ...]:
        return tuple(_Factor(x.conjugate() / x, x * x, 2, 1) for x in self.zeros)

    @property
    def degree(self) -> int:
        e, k = self.exponent, 2 * len(self.zeros)
        return e + k if e >= 0 else k - e


@dataclass(frozen=True)
class SeedGeometry:
    beta: float
    theta: float
    gamma: float | None

    @classmethod
    def from_radius(cls, r: float, n: int) -> "SeedGeometry":
        beta = math.acos(_clip((1 + r * r) / 2))
        theta = math.acos(_clip((1 + r ** (2 * n)) / 2))
        # factored 1 +- g keeps gamma = pi exact at the threshold r = 1/sqrt(3)
        q = r * r
        plus = (3 * q - 1) * (q + 1) / (2 * q)
        minus = (1 - q) * (1 + 3 * q) / (2 * q)
        plus = 0.0 if abs(plus) < 1e-12 else plus
        minus = 0.0 if abs(minus) < 1e-12 else minus
        if plus < 0 or minus < 0:
            gamma = None
        else:
            gamma = 2 * math.atan2(math.sqrt(max(minus, 0.0)), math.sqrt(max(plus, 0.0)))
        return cls(beta, theta, gamma)


def _clip(x: float) -> float:
    return max(-1.0, min(1.0, x))


# -- evaluation -----------------------------------------------------------

def _eval_arrays(spec, z: np.ndarray, z_inf: np.ndarray) -> np.ndarray:
    """B on an array of finite points ``z`` (entries flagged by ``z_inf``
    are the point at infinity).  Infinity in the output is ``inf+0j``."""
    z = np.asarray(z, dtype=complex)
    big = (np.abs(z) > 1.0) | z_inf
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        zeta = np.where(z_inf, 0j, 1.0 / np.where(big, z, 1.0))
        zero_order = np.zeros(z.shape, dtype=int)
        pole_order = np.zeros(z.shape, dtype=int)
        e = spec.exponent
        at0 = (z == 0) & ~z_inf
        if e > 0:
            zero_order += np.where(at0, e, 0)
            pole_order += np.where(z_inf, e, 0)
        elif e < 0:
            pole_order += np.where(at0, -e, 0)
            zero_order += np.where(z_inf, -e, 0)
        safe_z = np.where(at0 | z_inf, 1.0, z)
        logmag = np.where(big, -np.log(np.where(z_inf, 1.0, np.abs(zeta))), np.log(np.abs(safe_z))) * e
        logmag = np.where(at0 | z_inf, 0.0, logmag)
        phase = np.where(at0 | z_inf, 0.0, np.angle(safe_z) * e)
        for kappa, A, d, m in spec.factors:
            Ac = np.conj(A)
            zd = np.where(big, zeta, z) ** d
            num = np.where(big, A * zd - 1.0, A - zd)
            den = np.where(big, zd - Ac, 1.0 - Ac * zd)
            scale = 1.0 + np.abs(A * zd) + np.abs(zd)
            nz = np.abs(num) <= 8 * _EPS * scale
            dz = np.abs(den) <= 8 * _EPS * scale
            zero_order += np.where(nz, m, 0)
            pole_order += np.where(dz, m, 0)
            F = kappa * np.where(nz | dz, 1.0, num) / np.where(nz | dz, 1.0, den)
            logmag = logmag + m * np.log(np.abs(F))
            phase = phase + m * np.angle(F)
        val = np.exp(np.minimum(logmag, _LOG_HUGE)) * np.exp(1j * phase)
    out = np.where(logmag > _LOG_HUGE, np.inf + 0j, val)
    out = np.where(zero_order > 0, 0j, out)
    out = np.where(pole_order > 0, np.inf + 0j, out)
    return out


def evaluate_array(spec, z) -> np.ndarray:
    """Vectorised B for finite inputs; poles come back as ``inf+0j``."""
    z = np.asarray(z, dtype=complex)
    return _eval_arrays(spec, z, np.zeros(z.shape, dtype=bool))


def evaluate(spec, z: SpherePoint) -> SpherePoint:
    """B(z) on the closed sphere."""
    if z is INF:
        out = _eval_arrays(spec, np.array([0j]), np.array([True]))[0]
    else:
        out = evaluate_array(spec, np.array([complex(z)]))[0]
    return as_point(out)


def log_derivative_array(spec, z: np.ndarray) -> np.ndarray:
    """B'/B at finite points which are neither zeros nor poles of B."""
    z = np.asarray(z, dtype=complex)
    big = np.abs(z) > 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        zeta = 1.0 / np.where(big, z, 1.0)
        out = spec.exponent / z
        for kappa, A, d, m in spec.factors:
            Ac = np.conj(A)
            # d z^{d-1} (Ac A - 1) / ((A - z^d)(1 - Ac z^d)), reciprocal chart for |z| > 1
            small = d * z ** (d - 1) * (Ac * A - 1) / ((A - z**d) * (1 - Ac * z**d))
            large = d * zeta ** (d + 1) * (Ac * A - 1) / ((A * zeta**d - 1) * (zeta**d - Ac))
            out = out + m * np.where(big, large, small)
    return out


def _product_rule(spec, z: complex) -> complex:
    e = spec.exponent
    vals, ders = [], []
    for kappa, A, d, m in spec.factors:
        Ac = A.conjugate()
        den = 1 - Ac * z**d
        F = kappa * (A - z**d) / den
        dF = kappa * d * z ** (d - 1) * (Ac * A - 1) / den**2
        vals.append((F, m))
        ders.append(dF)
    total = 0j
    if e != 0:
        term = e * z ** (e - 1)
        for F, m in vals:
            term *= F**m
        total += term
    for j, ((F, m), dF) in enumerate(zip(vals, ders)):
        term = z**e * m * (F ** (m - 1) if m > 1 else 1.0) * dF
        for i, (G, k) in enumerate(vals):
            if i != j:
                term *= G**k
        total += term
    return total


def derivative(spec, z: SpherePoint) -> SpherePoint:
    """B'(z); INF at poles of B and at z = INF."""
    if z is INF:
        return INF
    z = complex(z)
    b = evaluate(spec, z)
    if b is INF:
        return INF
    if b == 0:
        return _product_rule(spec, z) if abs(z) < 1e30 else 0j
    return as_point(b * log_derivative_array(spec, np.array([z]))[0])


def value_and_derivative_array(spec, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(z, dtype=complex)
    b = evaluate_array(spec, z)
    with np.errstate(invalid="ignore", over="ignore"):
        db = b * log_derivative_array(spec, z)
    zero = b == 0
    if np.any(zero):
        db = np.array(db)
        for i in np.flatnonzero(zero):
            # an underflowed value far out is a zero at infinity, where B' vanishes too
            db[i] = _product_rule(spec, complex(z[i])) if abs(z[i]) < 1e30 else 0j
    return b, db


def commutation_residual(spec, z: SpherePoint) -> float:
    """Chordal distance between B(h(z)) and h(B(z))."""
    return chordal(evaluate(spec, involution_h(z)), involution_h(evaluate(spec, z)))


# -- polynomial form -------------------------------------------------------

class PolynomialForm(NamedTuple):
    coeffs: np.ndarray  # constant term first, length degree + 1
    effective_degree: int


def numerator_denominator(spec) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (constant first) of P and Q with B = P/Q."""
    num = np.array([1.0 + 0j])
    den = np.array([1.0 + 0j])
    for kappa, A, d, m in spec.factors:
        top = np.zeros(d + 1, dtype=complex)
        top[0], top[d] = A, -1.0
        bot = np.zeros(d + 1, dtype=complex)
        bot[0], bot[d] = 1.0, -A.conjugate()
        for _ in range(m):
            num = P.polymul(num, kappa * top)
            den = P.polymul(den, bot)
    e = spec.exponent
    shift = np.zeros(abs(e) + 1, dtype=complex)
    shift[-1] = 1.0
    if e >= 0:
        num = P.polymul(num, shift)
    else:
        den = P.polymul(den, shift)
    return num, den


def _pad(c: np.ndarray, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=complex)
    out[: len(c)] = c
    return out


def _effective_degree(c: np.ndarray) -> int:
    scale = np.max(np.abs(c))
    nz = np.flatnonzero(np.abs(c) > 1e-13 * scale)
    return int(nz[-1]) if len(nz) else 0


def to_polynomial(spec, w: SpherePoint) -> PolynomialForm:
    """Coefficients of P(z) - w Q(z); for w = INF, those of Q(z)."""
    num, den = numerator_denominator(spec)
    deg = spec.degree
    if w is INF:
        c = _pad(den, deg + 1)
    else:
        c = _pad(num, deg + 1) - complex(w) * _pad(den, deg + 1)
    return PolynomialForm(c, _effective_degree(c))


def seed_geometry(spec: BlaschkeSpec) -> SeedGeometry:
    return SeedGeometry.from_radius(spec.r, spec.n)


def sample_sphere(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform points on the sphere, returned through stereographic projection."""
    v = rng.normal(size=(size, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return (v[:, 0] + 1j * v[:, 1]) / (1.0 - v[:, 2])
