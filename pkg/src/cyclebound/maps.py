"""Exact arithmetic for the Collatz function and its odd-only shortcut maps.

Negative odd integers are handled through their absolute values: the
``NEG`` variant applies ``b -> (3b - 1) / 2^n`` to a positive odd ``b``,
which is the shortcut map conjugated by ``a -> -a``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Tuple


class Variant(enum.Enum):
    POS = "pos"
    NEG = "neg"

    @property
    def sign(self) -> int:
        """The constant added to ``3a``: +1 for ``POS``, -1 for ``NEG``."""
        return 1 if self is Variant.POS else -1

    @classmethod
    def parse(cls, text: "str | Variant") -> "Variant":
        if isinstance(text, Variant):
            return text
        try:
            return cls(str(text).lower())
        except ValueError:
            raise ValueError(f"unknown variant {text!r}; expected 'pos' or 'neg'") from None


def check_odd(a: int) -> int:
    """Validate a positive odd integer and return it unchanged."""
    if not isinstance(a, int) or isinstance(a, bool):
        raise TypeError(f"expected an int, got {type(a).__name__}")
    if a < 1:
        raise ValueError(f"input must be positive, got {a}")
    if a % 2 == 0:
        raise ValueError(f"input must be odd, got {a}")
    return a


def v2(m: int) -> int:
    """Return the exponent of the largest power of two dividing ``m``.

    >>> v2(4), v2(22)
    (2, 1)
    """
    if m < 2 or m & 1:
        raise ValueError(f"v2 expects a positive even integer, got {m}")
    return (m & -m).bit_length() - 1


def collatz_step(a: int) -> int:
    return a // 2 if a % 2 == 0 else 3 * a + 1


@dataclass(frozen=True)
class Step:
    input: int
    output: int
    valuation: int


@dataclass
class Trajectory:
    variant: Variant
    start: int
    steps: List[Step] = field(default_factory=list)

    @property
    def valuations(self) -> Tuple[int, ...]:
        return tuple(s.valuation for s in self.steps)

    @property
    def values(self) -> Tuple[int, ...]:
        """Outputs of every step, in order (excludes ``start``)."""
        return tuple(s.output for s in self.steps)

    @property
    def final(self) -> int:
        return self.steps[-1].output if self.steps else self.start


def shortcut_step(a: int, variant: Variant = Variant.POS) -> Step:
    check_odd(a)
    m = 3 * a + variant.sign
    n = (m & -m).bit_length() - 1
    return Step(a, m >> n, n)


def iterate(a: int, k: int, variant: Variant = Variant.POS) -> Trajectory:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    traj = Trajectory(variant, check_odd(a))
    x = a
    for _ in range(k):
        s = shortcut_step(x, variant)
        traj.steps.append(s)
        x = s.output
    return traj


def exponent_sequence(a: int, k: int, variant: Variant = Variant.POS) -> Tuple[Tuple[int, ...], int]:
    """Streaming form of :func:`iterate`: ``(valuations, f^k(a))`` without Step objects."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    check_odd(a)
    sign = variant.sign
    out = []
    x = a
    for _ in range(k):
        x = 3 * x + sign
        n = (x & -x).bit_length() - 1
        x >>= n
        out.append(n)
    return tuple(out), x


def inverse_step(a: int, n: int, variant: Variant = Variant.POS) -> int:
    """Return the odd ``b`` with ``shortcut_step(b).output == a`` and valuation ``n``."""
    check_odd(a)
    if n < 1:
        raise ValueError(f"valuation must be >= 1, got {n}")
    m = (a << n) - variant.sign
    if m % 3:
        raise ValueError(f"no {variant.value} preimage of {a} with valuation {n}: "
                         f"2^{n}*{a} {'-' if variant is Variant.POS else '+'} 1 is not divisible by 3")
    return m // 3
