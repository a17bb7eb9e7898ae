"""Closed-form Poisson series with book-keeping exponents.

A series is a finite sum of monomials

    c * sigma^k * dL^a * e^b * eta^c * ic^d * is^m * phi1^p * r1^q * J1^u * trig(s . theta)

where ``theta = (f, g, h, E1)`` and ``trig`` is ``cos`` or ``sin``. Terms are stored in a
dict keyed by ``(sigma, (s1, s2, s3, s4), parity, exponents)`` with the float coefficient
as value; the dict is kept sorted by key so iteration, serialization and evaluation are
deterministic.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from typing import Any, Union

import numpy as np

from closed_r3bp.config import ANGLES, OUTPUT_DIGITS, PURGE_THRESHOLD, SYMBOLS
from closed_r3bp.exceptions import ConfigurationError, EvaluationError, SingularEvaluationError

logger = logging.getLogger(__name__)

COS = 0
SIN = 1
PARITY_NAMES = ("cos", "sin")

NSYM = len(SYMBOLS)
SYMBOL_INDEX: dict[str, int] = {name: i for i, name in enumerate(SYMBOLS)}
ANGLE_INDEX: dict[str, int] = {name: i for i, name in enumerate(ANGLES)}

ZERO_TRIG: tuple[int, int, int, int] = (0, 0, 0, 0)
ZERO_EXPS: tuple[int, ...] = (0,) * NSYM

Trig = tuple[int, int, int, int]
Exps = tuple[int, ...]
Key = tuple[int, Trig, int, Exps]
RawTerm = tuple[float, int, Trig, int, Exps]


@dataclass(frozen=True, order=True)
class TrigArg:
    """Harmonic ``cos`` or ``sin`` of ``s1 f + s2 g + s3 h + s4 E1``."""

    s1: int = 0
    s2: int = 0
    s3: int = 0
    s4: int = 0
    parity: int = COS

    @property
    def multipliers(self) -> Trig:
        return (self.s1, self.s2, self.s3, self.s4)

    @property
    def is_canonical(self) -> bool:
        sign, _ = _canonical_sign(self.multipliers)
        if sign < 0:
            return False
        return not (self.parity == SIN and self.multipliers == ZERO_TRIG)

    def __str__(self) -> str:
        return f"{PARITY_NAMES[self.parity]}({self.s1},{self.s2},{self.s3},{self.s4})"


@dataclass(frozen=True)
class TrigMonomial:
    """A single term of a :class:`PoissonSeries`."""

    coeff: float
    sigma: int
    trig: TrigArg
    exponents: Exps

    def exponent(self, symbol: str) -> int:
        return self.exponents[SYMBOL_INDEX[symbol]]

    @property
    def key(self) -> Key:
        return (self.sigma, self.trig.multipliers, self.trig.parity, self.exponents)


def describe_key(key: Key) -> str:
    """Human-readable form of a term key, e.g. ``sigma^2 ic^2 r1^-1 cos(2,2,0,0)``."""
    sigma, trig, parity, exps = key
    powers = " ".join(f"{SYMBOLS[i]}^{p}" for i, p in enumerate(exps) if p != 0)
    harmonic = f"{PARITY_NAMES[parity]}({trig[0]},{trig[1]},{trig[2]},{trig[3]})"
    return " ".join(part for part in (f"sigma^{sigma}", powers, harmonic) if part)


def _canonical_sign(trig: Trig) -> tuple[int, Trig]:
    for value in trig:
        if value > 0:
            return 1, trig
        if value < 0:
            return -1, (-trig[0], -trig[1], -trig[2], -trig[3])
    return 1, trig


def exponents(**powers: int) -> Exps:
    """Build an exponent vector from keyword powers, e.g. ``exponents(e=1, r1=-1)``."""
    vec = [0] * NSYM
    for name, power in powers.items():
        if name not in SYMBOL_INDEX:
            raise ConfigurationError(f"unknown series symbol: {name}")
        vec[SYMBOL_INDEX[name]] = int(power)
    return tuple(vec)


class PoissonSeries:
    """Immutable, canonical, sigma-truncated Poisson series.

    Parameters
    ----------
    terms : mapping
        Canonical key to coefficient mapping. Callers outside this module should build
        series with :func:`canonicalize` or the :meth:`monomial` constructor.
    nbk : int
        Maximum book-keeping order kept.
    """

    __slots__ = ("_arrays", "_terms", "nbk")

    def __init__(self, terms: Mapping[Key, float], nbk: int) -> None:
        self._terms: dict[Key, float] = dict(sorted(terms.items()))
        self.nbk = nbk
        self._arrays: tuple[np.ndarray, ...] | None = None

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def zero(cls, nbk: int) -> PoissonSeries:
        return cls({}, nbk)

    @classmethod
    def constant(cls, value: float, nbk: int, sigma: int = 0) -> PoissonSeries:
        return cls.monomial(value, nbk, sigma=sigma)

    @classmethod
    def monomial(
        cls,
        coeff: float,
        nbk: int,
        *,
        sigma: int = 0,
        trig: Sequence[int] = ZERO_TRIG,
        parity: int | str = COS,
        **powers: int,
    ) -> PoissonSeries:
        """Single-term series; ``powers`` are symbol exponents by name."""
        par = PARITY_NAMES.index(parity) if isinstance(parity, str) else parity
        t = (int(trig[0]), int(trig[1]), int(trig[2]), int(trig[3]))
        return canonicalize([(float(coeff), sigma, t, par, exponents(**powers))], nbk)

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __iter__(self) -> Iterator[TrigMonomial]:
        return self.terms()

    def __repr__(self) -> str:
        return f"PoissonSeries({len(self)} terms, nbk={self.nbk})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PoissonSeries):
            return NotImplemented
        return self.nbk == other.nbk and self._terms == other._terms

    __hash__ = None  # type: ignore[assignment]

    def terms(self) -> Iterator[TrigMonomial]:
        for (sigma, trig, parity, exps), coeff in self._terms.items():
            yield TrigMonomial(coeff, sigma, TrigArg(*trig, parity), exps)

    def items(self) -> Iterable[tuple[Key, float]]:
        return self._terms.items()

    def to_dict(self) -> dict[Key, float]:
        return dict(self._terms)

    def coefficient(
        self,
        *,
        sigma: int = 0,
        trig: Sequence[int] = ZERO_TRIG,
        parity: int | str = COS,
        **powers: int,
    ) -> float:
        """Coefficient of the canonical term with the given key, 0.0 when absent."""
        par = PARITY_NAMES.index(parity) if isinstance(parity, str) else parity
        t = (int(trig[0]), int(trig[1]), int(trig[2]), int(trig[3]))
        sign, t = _canonical_sign(t)
        value = self._terms.get((sigma, t, par, exponents(**powers)), 0.0)
        return -value if (sign < 0 and par == SIN) else value

    def min_order(self) -> int | None:
        return min((k[0] for k in self._terms), default=None)

    def max_order(self) -> int | None:
        return max((k[0] for k in self._terms), default=None)

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    # ------------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------------

    def __add__(self, other: PoissonSeries) -> PoissonSeries:
        return add(self, other)

    def __sub__(self, other: PoissonSeries) -> PoissonSeries:
        return add(self, other.scale(-1.0))

    def __neg__(self) -> PoissonSeries:
        return self.scale(-1.0)

    def __mul__(self, other: Union[PoissonSeries, float, int]) -> PoissonSeries:
        if isinstance(other, PoissonSeries):
            return mul(self, other)
        return self.scale(float(other))

    def __rmul__(self, other: Union[float, int]) -> PoissonSeries:
        return self.scale(float(other))

    def scale(self, factor: float) -> PoissonSeries:
        if factor == 0.0:
            return PoissonSeries.zero(self.nbk)
        out = PoissonSeries.__new__(PoissonSeries)
        out._terms = {k: c * factor for k, c in self._terms.items()}
        out.nbk = self.nbk
        out._arrays = None
        return out

    def shift(self, dsigma: int) -> PoissonSeries:
        """Multiply by ``sigma**dsigma`` and re-truncate."""
        return canonicalize(
            [(c, s + dsigma, t, p, e) for (s, t, p, e), c in self._terms.items()], self.nbk
        )

    def truncate(self, nbk: int) -> PoissonSeries:
        """Same terms under another truncation order; terms above ``nbk`` are dropped."""
        return PoissonSeries({k: c for k, c in self._terms.items() if k[0] <= nbk}, nbk)

    def raw(self) -> list[RawTerm]:
        return [(c, s, t, p, e) for (s, t, p, e), c in self._terms.items()]

    def map_terms(self, fn: Callable[[RawTerm], Iterable[RawTerm]]) -> PoissonSeries:
        """Replace every term by the raw terms ``fn`` returns and re-canonicalize."""
        out: list[RawTerm] = []
        for raw in self.raw():
            out.extend(fn(raw))
        return canonicalize(out, self.nbk)

    def diff_symbol(self, symbol: str | int) -> PoissonSeries:
        """Plain partial derivative with respect to a monomial symbol."""
        idx = SYMBOL_INDEX[symbol] if isinstance(symbol, str) else symbol
        out: dict[Key, float] = {}
        for (s, t, p, e), c in self._terms.items():
            power = e[idx]
            if power == 0:
                continue
            ne = e[:idx] + (power - 1,) + e[idx + 1 :]
            out[(s, t, p, ne)] = c * power
        return PoissonSeries(out, self.nbk)

    def diff_angle(self, angle: str | int) -> PoissonSeries:
        """Plain partial derivative with respect to one of f, g, h, E1."""
        idx = ANGLE_INDEX[angle] if isinstance(angle, str) else angle
        raw: list[RawTerm] = []
        for (s, t, p, e), c in self._terms.items():
            k = t[idx]
            if k == 0:
                continue
            if p == COS:
                raw.append((-c * k, s, t, SIN, e))
            else:
                raw.append((c * k, s, t, COS, e))
        return canonicalize(raw, self.nbk)

    # ------------------------------------------------------------------
    # Numerics
    # ------------------------------------------------------------------

    def _numeric(self) -> tuple[np.ndarray, ...]:
        if self._arrays is None:
            n = len(self._terms)
            coeffs = np.empty(n)
            exps = np.zeros((n, NSYM), dtype=np.int64)
            trig = np.zeros((n, 4), dtype=np.int64)
            parity = np.zeros(n, dtype=bool)
            for i, ((_, t, p, e), c) in enumerate(self._terms.items()):
                coeffs[i] = c
                exps[i] = e
                trig[i] = t
                parity[i] = p == SIN
            self._arrays = (coeffs, exps, trig, parity)
        return self._arrays

    def evaluate(self, point: Mapping[str, float], angles: Any = None) -> float:
        return evaluate(self, point, angles)


# ----------------------------------------------------------------------
# Module-level operations
# ----------------------------------------------------------------------


def canonicalize(
    raw: Iterable[RawTerm], nbk: int, purge: float = PURGE_THRESHOLD
) -> PoissonSeries:
    """Merge, sign-normalize and sigma-truncate a raw term list.

    Raw terms are ``(coeff, sigma, (s1, s2, s3, s4), parity, exponents)``. Terms with
    ``sigma > nbk`` and ``sin(0)`` terms are dropped, as are merged coefficients that
    cancelled below ``purge`` times the magnitudes that were summed into them.
    """
    acc = _Accumulator()
    for coeff, sigma, trig, parity, exps in raw:
        if sigma > nbk or coeff == 0.0:
            continue
        acc.add_term(coeff, sigma, trig, parity, exps)
    return PoissonSeries(acc.purged(purge), nbk)


class _Accumulator:
    """Coefficient sums with the absolute mass that went into each key."""

    __slots__ = ("mass", "sums")

    def __init__(self) -> None:
        self.sums: dict[Key, float] = defaultdict(float)
        self.mass: dict[Key, float] = defaultdict(float)

    def add(self, key: Key, coeff: float) -> None:
        self.sums[key] += coeff
        self.mass[key] += abs(coeff)

    def add_term(
        self, coeff: float, sigma: int, trig: Trig, parity: int, exps: Exps
    ) -> None:
        sign, trig = _canonical_sign(trig)
        if parity == SIN:
            if trig == ZERO_TRIG:
                return
            if sign < 0:
                coeff = -coeff
        self.add((sigma, trig, parity, exps), coeff)

    def purged(self, purge: float) -> dict[Key, float]:
        mass = self.mass
        for key, c in self.sums.items():
            if not math.isfinite(c):
                raise EvaluationError(f"non-finite coefficient {c!r} at {describe_key(key)}")
        return {
            k: c for k, c in self.sums.items() if c != 0.0 and abs(c) > purge * mass[k]
        }


def _check_nbk(a: PoissonSeries, b: PoissonSeries) -> None:
    if a.nbk != b.nbk:
        raise ConfigurationError(f"series truncation mismatch: nbk {a.nbk} != {b.nbk}")


def add(a: PoissonSeries, b: PoissonSeries, purge: float = PURGE_THRESHOLD) -> PoissonSeries:
    """Canonical sum of two series with equal ``nbk``."""
    _check_nbk(a, b)
    if not b:
        return a
    if not a:
        return b
    acc = _Accumulator()
    for key, coeff in a.items():
        acc.add(key, coeff)
    for key, coeff in b.items():
        acc.add(key, coeff)
    return PoissonSeries(acc.purged(purge), a.nbk)


def add_all(series: Sequence[PoissonSeries], nbk: int) -> PoissonSeries:
    """Sum of many series in one pass."""
    acc = _Accumulator()
    for s in series:
        if s.nbk != nbk:
            raise ConfigurationError(f"series truncation mismatch: nbk {s.nbk} != {nbk}")
        for key, coeff in s.items():
            acc.add(key, coeff)
    return PoissonSeries(acc.purged(PURGE_THRESHOLD), nbk)


def mul(a: PoissonSeries, b: PoissonSeries, purge: float = PURGE_THRESHOLD) -> PoissonSeries:
    """Product with exponent/sigma addition and product-to-sum trig linearization."""
    return _product(a, b, None, purge)


def mul_pairwise(
    a: PoissonSeries,
    b: PoissonSeries,
    weight: Callable[[Trig, Trig], float],
    purge: float = PURGE_THRESHOLD,
) -> PoissonSeries:
    """Product where each pair of terms is scaled by ``weight(trig_a, trig_b)``.

    Pairs with zero weight are skipped before any arithmetic, so cancellations that hold
    exactly at the level of harmonics never leave floating-point residues.
    """
    return _product(a, b, weight, purge)


def _product(
    a: PoissonSeries,
    b: PoissonSeries,
    weight: Callable[[Trig, Trig], float] | None,
    purge: float,
) -> PoissonSeries:
    _check_nbk(a, b)
    nbk = a.nbk
    acc = _Accumulator()
    b_items = list(b.items())
    for (sa, ta, pa, ea), ca in a.items():
        limit = nbk - sa
        for (sb, tb, pb, eb), cb in b_items:
            if sb > limit:
                break
            w = 1.0 if weight is None else weight(ta, tb)
            if w == 0.0:
                continue
            sigma = sa + sb
            exps = tuple([x + y for x, y in zip(ea, eb)])
            half = 0.5 * ca * cb * w
            diff = (ta[0] - tb[0], ta[1] - tb[1], ta[2] - tb[2], ta[3] - tb[3])
            summ = (ta[0] + tb[0], ta[1] + tb[1], ta[2] + tb[2], ta[3] + tb[3])
            if pa == COS and pb == COS:
                acc.add_term(half, sigma, diff, COS, exps)
                acc.add_term(half, sigma, summ, COS, exps)
            elif pa == SIN and pb == SIN:
                acc.add_term(half, sigma, diff, COS, exps)
                acc.add_term(-half, sigma, summ, COS, exps)
            elif pa == SIN:
                acc.add_term(half, sigma, summ, SIN, exps)
                acc.add_term(half, sigma, diff, SIN, exps)
            else:
                acc.add_term(half, sigma, summ, SIN, exps)
                acc.add_term(-half, sigma, diff, SIN, exps)
    return PoissonSeries(acc.purged(purge), nbk)


def filter_terms(
    a: PoissonSeries, predicate: Callable[[int, TrigArg, Exps], bool]
) -> PoissonSeries:
    """Subset of terms for which ``predicate(sigma, trig, exponents)`` holds."""
    kept = {
        (s, t, p, e): c for (s, t, p, e), c in a.items() if predicate(s, TrigArg(*t, p), e)
    }
    return PoissonSeries(kept, a.nbk)


def at_order(a: PoissonSeries, sigma: int) -> PoissonSeries:
    return PoissonSeries({k: c for k, c in a.items() if k[0] == sigma}, a.nbk)


def is_fast(trig: Trig) -> bool:
    """True when the harmonic involves a fast angle (f or E1)."""
    return trig[0] != 0 or trig[3] != 0


def _angles_vector(angles: Any) -> np.ndarray:
    if angles is None:
        return np.zeros(4)
    if isinstance(angles, Mapping):
        return np.array([float(angles.get(name, 0.0)) for name in ANGLES])
    vec = np.asarray(angles, dtype=float)
    if vec.shape != (4,):
        raise EvaluationError(f"expected 4 angles (f, g, h, E1), got shape {vec.shape}")
    return vec


def evaluate(a: PoissonSeries, point: Mapping[str, float], angles: Any = None) -> float:
    """Numeric value with sigma := 1.

    Args:
        a: Series to evaluate.
        point: Symbol values by name; must cover every symbol with a nonzero exponent.
        angles: ``(f, g, h, E1)`` in radians, as a sequence or a name mapping.

    Returns:
        The sum of all monomial values in key order.

    Raises:
        EvaluationError: A required symbol is missing.
        SingularEvaluationError: A symbol with a negative exponent is zero.
    """
    if not a:
        return 0.0
    coeffs, exps, trig, parity = a._numeric()
    used = np.any(exps != 0, axis=0)
    values = np.ones(NSYM)
    for i, name in enumerate(SYMBOLS):
        if not used[i]:
            continue
        if name not in point:
            raise EvaluationError(f"missing value for symbol '{name}'")
        values[i] = float(point[name])
        if values[i] == 0.0 and np.any(exps[:, i] < 0):
            raise SingularEvaluationError(
                f"symbol '{name}' is zero but appears with a negative exponent"
            )
    theta = trig @ _angles_vector(angles)
    harmonic = np.where(parity, np.sin(theta), np.cos(theta))
    monomials = np.prod(values[np.newaxis, :] ** exps, axis=1)
    return float(np.sum(coeffs * monomials * harmonic))


# ----------------------------------------------------------------------
# Text serialization
# ----------------------------------------------------------------------


def _format_float(value: float) -> str:
    return f"{value:.{OUTPUT_DIGITS - 1}e}"


def dumps(a: PoissonSeries) -> str:
    """Line-oriented text form: ``coeff sigma [symbol^exp ...] trig(s1,s2,s3,s4)``."""
    lines = [f"# nbk {a.nbk}"]
    for (sigma, trig, parity, exps), coeff in a.items():
        fields = [_format_float(coeff), str(sigma)]
        fields.extend(f"{SYMBOLS[i]}^{p}" for i, p in enumerate(exps) if p != 0)
        fields.append(f"{PARITY_NAMES[parity]}({trig[0]},{trig[1]},{trig[2]},{trig[3]})")
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def loads(text: str) -> PoissonSeries:
    """Parse the output of :func:`dumps`."""
    nbk: int | None = None
    raw: list[RawTerm] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "nbk":
                nbk = int(parts[1])
            continue
        fields = line.split()
        try:
            coeff = float(fields[0])
            sigma = int(fields[1])
            powers: dict[str, int] = {}
            for item in fields[2:-1]:
                name, power = item.split("^")
                powers[name] = int(power)
            harmonic = fields[-1]
            parity = PARITY_NAMES.index(harmonic[:3])
            mult = tuple(int(v) for v in harmonic[4:-1].split(","))
        except (ValueError, IndexError) as exc:
            raise ConfigurationError(f"malformed series line {lineno}: {line!r}") from exc
        if len(mult) != 4:
            raise ConfigurationError(f"malformed harmonic on line {lineno}: {harmonic!r}")
        trig = (mult[0], mult[1], mult[2], mult[3])
        raw.append((coeff, sigma, trig, parity, exponents(**powers)))
    if nbk is None:
        raise ConfigurationError("series text has no '# nbk' header")
    return canonicalize(raw, nbk, purge=0.0)
