"""Exact bounds, the closed-form k-step expansion, the cycle equation and
certificate checking.

All comparisons are between ``int`` or ``fractions.Fraction`` values; no
floating point is involved anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .maps import Variant, check_odd, shortcut_step

SCHEMA_VERSION = 1

K1_CAVEAT = (
    "caveat: at k=1 the tight max bound equals 1 exactly and the trivial cycle (1) "
    "attains it, so the strict inequality a_max < bound fails at k=1; certificates "
    "with k=1 are checked with a_max <= bound instead"
)


@dataclass(frozen=True)
class ExponentSeq:
    exponents: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(int(n) for n in self.exponents))
        if not self.exponents:
            raise ValueError("exponent sequence must be non-empty")
        if any(n < 1 for n in self.exponents):
            raise ValueError(f"exponents must be >= 1: {self.exponents}")

    @property
    def k(self) -> int:
        return len(self.exponents)

    @property
    def partial_sums(self) -> Tuple[int, ...]:
        """``(S_0, S_1, ..., S_k)`` with ``S_0 = 0``."""
        sums = [0]
        for n in self.exponents:
            sums.append(sums[-1] + n)
        return tuple(sums)

    @property
    def total(self) -> int:
        return sum(self.exponents)

    def __iter__(self):
        return iter(self.exponents)

    def __len__(self):
        return len(self.exponents)


def _as_seq(seq) -> ExponentSeq:
    return seq if isinstance(seq, ExponentSeq) else ExponentSeq(tuple(seq))


@dataclass(frozen=True)
class BoundPair:
    kind: str  # "min" or "max"
    k: int
    tight: Fraction
    loose: Fraction


def min_bound(k: int) -> BoundPair:
    """Bounds on the smallest element of a positive cycle of length ``k >= 2``."""
    if k < 2:
        raise ValueError(f"min_bound needs k >= 2, got {k}")
    return BoundPair("min", k, Fraction(k * (3**k + 1), 4), Fraction(k * 3 ** (k - 1)))


def max_bound(k: int) -> BoundPair:
    """Bounds on the largest element of a positive cycle of length ``k >= 1``."""
    if k < 1:
        raise ValueError(f"max_bound needs k >= 1, got {k}")
    tight = (Fraction(k, 6) * Fraction(9, 2) ** k
             + Fraction(2, 9) * (Fraction(7, 4) * k - 1) * Fraction(3, 2) ** k)
    loose = Fraction(4, 3) * k * Fraction(9, 2) ** (k - 1)
    return BoundPair("max", k, tight, loose)


def largest_below(x: Fraction) -> int:
    """Largest integer strictly less than ``x``."""
    if x.denominator == 1:
        return x.numerator - 1
    return x.numerator // x.denominator


def horizon(k: int, loose: bool = False) -> int:
    """Largest candidate a positive ``k``-cycle minimum can take."""
    b = min_bound(k)
    return largest_below(b.loose if loose else b.tight)


def format_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def equation_numerator(seq) -> int:
    """``sum_{i<k} 3^(k-1-i) * 2^(S_i)``, evaluated by Horner's rule."""
    seq = _as_seq(seq)
    total = 0
    s = 0
    for n in seq.exponents:
        total = 3 * total + (1 << s)
        s += n
    return total


def expand_fk(a: int, seq, variant: Variant = Variant.POS) -> Fraction:
    """Evaluate the closed form of ``f^k(a)`` for a given valuation sequence.

    The sequence is taken at face value; it need not be the one ``a`` actually
    produces, in which case the result is generally not an integer.
    """
    seq = _as_seq(seq)
    k = seq.k
    return Fraction(3**k * a + variant.sign * equation_numerator(seq), 1 << seq.total)


@dataclass(frozen=True)
class CycleEquationResult:
    numerator: int
    denominator: int
    solution: Optional[int]


def cycle_equation_solve(seq, variant: Variant = Variant.POS) -> CycleEquationResult:
    """Solve ``f^k(a) = a`` for ``a`` along a fixed valuation sequence.

    Cleared form: ``a * (2^N - 3^k) = numerator`` for POS and
    ``a * (3^k - 2^N) = numerator`` for NEG. Zero, negative, fractional or
    even quotients give ``solution=None``.
    """
    seq = _as_seq(seq)
    num = equation_numerator(seq)
    den = (1 << seq.total) - 3**seq.k
    if variant is Variant.NEG:
        den = -den
    sol = None
    if den > 0:
        q, r = divmod(num, den)
        if r == 0 and q > 0 and q & 1:
            sol = q
    return CycleEquationResult(num, den, sol)


@dataclass(frozen=True)
class Violation:
    rule: str  # "suffix", "total" or "last"
    index: Optional[int] = None

    def __str__(self):
        if self.rule == "suffix":
            i = self.index
            return f"suffix constraint i={i}: 3^{i} >= 2^(sum of the last {i} exponents)"
        if self.rule == "total":
            return "total constraint: 2^N < 3^k + 1"
        return "last exponent n_k < 2"


def check_admissible(seq) -> List[Violation]:
    """Necessary conditions on the valuations of a min-anchored positive cycle.

    With ``n_j`` the valuation of the step arriving at ``a_j`` and ``a_k``
    the minimum, walking ``i`` steps backwards from ``a_k`` multiplies by
    at most ``2^(n_(k-i+1)+...+n_k) / 3^i``, which therefore exceeds 1.
    The ``i = 1`` case is ``n_k >= 2``, reported separately as well.

    Returns the violated constraints; an empty list means admissible.
    """
    seq = _as_seq(seq)
    ns, k = seq.exponents, seq.k
    out = []
    s = 0
    for i in range(1, k):
        s += ns[k - i]
        if 3**i >= 1 << s:
            out.append(Violation("suffix", i))
    if 1 << seq.total < 3**k + 1:
        out.append(Violation("total"))
    if k >= 2 and ns[-1] < 2:
        out.append(Violation("last"))
    return out


def minimal_period(a: int, k: int, variant: Variant = Variant.POS) -> Optional[int]:
    """Least ``d`` dividing ``k`` with ``f^d(a) = a``, or None when ``f^k(a) != a``."""
    x = a
    for d in range(1, k + 1):
        x = shortcut_step(x, variant).output
        if x == a:
            return d if k % d == 0 else None
    return None


@dataclass(frozen=True)
class CycleCertificate:
    """A materialized cycle ``(a_1, ..., a_k)`` with its minimum last.

    ``exponents[i]`` is the valuation of the step that produces
    ``elements[i]``, so ``exponents[0]`` belongs to the step leaving the
    minimum. No invariant is enforced on construction; use
    :func:`verify_certificate`.
    """

    variant: Variant
    k: int
    elements: Tuple[int, ...]
    exponents: Tuple[int, ...]
    min: int
    max: int

    def to_json(self) -> dict:
        return {
            "variant": self.variant.value,
            "k": self.k,
            "elements": [str(e) for e in self.elements],
            "exponents": list(self.exponents),
            "min": str(self.min),
            "max": str(self.max),
            "schema_version": SCHEMA_VERSION,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "CycleCertificate":
        try:
            if doc.get("schema_version") != SCHEMA_VERSION:
                raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
            return cls(
                variant=Variant.parse(doc["variant"]),
                k=int(doc["k"]),
                elements=tuple(int(str(e)) for e in doc["elements"]),
                exponents=tuple(int(n) for n in doc["exponents"]),
                min=int(str(doc["min"])),
                max=int(str(doc["max"])),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed certificate: {exc!r}") from None

    def rotation_key(self) -> Tuple[str, Tuple[int, ...]]:
        """Identical for every rotation of the same cycle."""
        return self.variant.value, tuple(sorted(self.elements))


def canonicalize_cycle(elements: Sequence[int], valuations: Optional[Sequence[int]] = None,
                       variant: Variant = Variant.POS) -> CycleCertificate:
    """Rotate a closed orbit so its minimum is last and build its certificate.

    ``valuations[i]``, if given, is the valuation of the step leaving
    ``elements[i]`` and is checked against the map.
    """
    elements = [check_odd(int(e)) for e in elements]
    if not elements:
        raise ValueError("cycle must have at least one element")
    k = len(elements)
    steps = [shortcut_step(e, variant) for e in elements]
    for i, s in enumerate(steps):
        if s.output != elements[(i + 1) % k]:
            raise ValueError(f"not a closed orbit: f({elements[i]}) = {s.output}, "
                             f"expected {elements[(i + 1) % k]}")
    if len(set(elements)) != k:
        raise ValueError("orbit repeats an element; pass one period only")
    if valuations is not None:
        if list(valuations) != [s.valuation for s in steps]:
            raise ValueError(f"valuations {list(valuations)} do not match the orbit")
    m = elements.index(min(elements))
    # rotate so the minimum sits at the end
    order = [(m + 1 + j) % k for j in range(k)]
    elems = tuple(elements[j] for j in order)
    exps = tuple(steps[(j - 1) % k].valuation for j in order)
    return CycleCertificate(variant, k, elems, exps, elems[-1], max(elems))


def certificate_from_orbit(a: int, k: int, variant: Variant = Variant.POS) -> CycleCertificate:
    """Certificate for the ``k``-cycle through ``a`` (any element, not only the minimum)."""
    orbit = [a]
    for _ in range(k - 1):
        orbit.append(shortcut_step(orbit[-1], variant).output)
    return canonicalize_cycle(orbit, None, variant)


@dataclass
class VerificationReport:
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.ok


def verify_certificate(cert: CycleCertificate) -> VerificationReport:
    """Re-derive every claim of a certificate from its minimum element."""
    rep = VerificationReport()
    fail = rep.failures.append
    k = cert.k
    elems, exps = tuple(cert.elements), tuple(cert.exponents)

    if k < 1:
        fail(f"length k={k} must be >= 1")
        return rep
    if len(elems) != k or len(exps) != k:
        fail(f"length mismatch: k={k}, {len(elems)} elements, {len(exps)} exponents")
        return rep
    bad = [e for e in elems if e < 1 or e % 2 == 0]
    if bad:
        fail(f"elements must be positive odd integers: {bad}")
        return rep
    if any(n < 1 for n in exps):
        fail(f"exponents must be >= 1: {exps}")
        return rep
    if cert.min < 1 or cert.min % 2 == 0:
        fail(f"min {cert.min} is not a positive odd integer")
        return rep

    if cert.min != min(elems):
        fail(f"min field {cert.min} != smallest element {min(elems)}")
    if elems[-1] != min(elems):
        fail(f"misanchored: last element {elems[-1]} is not the minimum {min(elems)}")
    if cert.max != max(elems):
        fail(f"max field {cert.max} != largest element {max(elems)}")

    x = cert.min
    for i in range(k):
        s = shortcut_step(x, cert.variant)
        if s.valuation != exps[i]:
            fail(f"valuation mismatch at step {i + 1}: recorded {exps[i]}, actual {s.valuation}")
        if s.output != elems[i]:
            fail(f"element mismatch at step {i + 1}: recorded {elems[i]}, actual {s.output}")
        x = s.output
    if x != cert.min:
        fail(f"orbit does not close: f^{k}({cert.min}) = {x}")
    else:
        d = minimal_period(cert.min, k, cert.variant)
        if d != k:
            fail(f"minimal period is {d}, not {k}")

    if cert.variant is Variant.POS:
        for v in check_admissible(exps):
            fail(f"inadmissible exponents: {v}")
        mb = max_bound(k).tight
        if k == 1:
            if not cert.max <= mb:
                fail(f"max {cert.max} exceeds bound {format_fraction(mb)}")
        else:
            nb = min_bound(k).tight
            if not cert.min < nb:
                fail(f"min {cert.min} not below bound {format_fraction(nb)}")
            if not cert.max < mb:
                fail(f"max {cert.max} not below bound {format_fraction(mb)}")
            # worst case where every step before the maximum halves once
            if cert.max << (k - 1) > 3 ** (k - 1) * cert.min + (k - 1) * 3 ** (k - 2):
                fail(f"max {cert.max} exceeds (3^(k-1)*min + (k-1)*3^(k-2)) / 2^(k-1)")
    return rep
