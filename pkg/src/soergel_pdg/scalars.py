"""Ground rings: the integers, the rationals, and prime fields.

Integers and rationals share one representation (Python ``int`` and
``fractions.Fraction``); the integer ring only differs in what counts as an
exact quotient.  Prime-field elements are plain ints in ``range(p)``.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    q = 3
    while q * q <= p:
        if p % q == 0:
            return False
        q += 2
    return True


class ScalarRing:
    """One of Z, Q or F_p.

    >>> ScalarRing.parse("Fp:5").normalize(7)
    2
    """

    __slots__ = ("kind", "p")

    def __init__(self, kind: str, p: int = 0):
        if kind not in ("Z", "Q", "Fp"):
            raise ValueError(f"unknown scalar ring kind {kind!r}")
        if kind == "Fp":
            if not _is_prime(p):
                raise ValueError(f"characteristic {p} is not prime")
        else:
            p = 0
        self.kind = kind
        self.p = p

    @staticmethod
    def parse(text: str) -> "ScalarRing":
        text = text.strip()
        if text in ("Z", "Q"):
            return ScalarRing(text)
        if text.startswith("Fp:") or text.startswith("F"):
            digits = text[3:] if text.startswith("Fp:") else text[1:]
            try:
                return ScalarRing("Fp", int(digits))
            except ValueError:
                pass
        raise ValueError(f"cannot parse scalar ring {text!r}; use Z, Q or Fp:p")

    # identity -------------------------------------------------------------
    def __eq__(self, other):
        return isinstance(other, ScalarRing) and self.kind == other.kind and self.p == other.p

    def __hash__(self):
        return hash((self.kind, self.p))

    def __repr__(self):
        return f"Fp:{self.p}" if self.kind == "Fp" else self.kind

    @property
    def characteristic(self) -> int:
        return self.p

    @property
    def is_field(self) -> bool:
        return self.kind != "Z"

    def fraction_field(self) -> "ScalarRing":
        return Q if self.kind == "Z" else self

    # element handling -----------------------------------------------------
    def normalize(self, c):
        """Bring a Python number into canonical form for this ring."""
        if self.kind == "Fp":
            if isinstance(c, Fraction):
                return (c.numerator * pow(c.denominator, -1, self.p)) % self.p
            return int(c) % self.p
        if isinstance(c, Fraction) and c.denominator == 1:
            return c.numerator
        if isinstance(c, bool):
            return int(c)
        return c

    def contains(self, c) -> bool:
        """True when a normalized value is an element of this ring."""
        if self.kind == "Z":
            return isinstance(c, int)
        return True

    def inv(self, c):
        if c == 0:
            raise ZeroDivisionError("inverse of zero scalar")
        if self.kind == "Fp":
            return pow(int(c), -1, self.p)
        return self.normalize(Fraction(1) / c)

    def div(self, a, b):
        """Exact quotient a/b in the fraction field (Q for Z)."""
        if self.kind == "Fp":
            return (a * pow(int(b), -1, self.p)) % self.p
        return self.normalize(Fraction(a) / b)

    def exact_div(self, a, b):
        """Quotient a/b that must stay inside the ring; raises ArithmeticError."""
        q = self.div(a, b)
        if not self.contains(q):
            raise ArithmeticError(f"{a} is not divisible by {b} over {self}")
        return q

    def factorial(self, k: int):
        return self.normalize(_factorial(k))

    def format(self, c) -> str:
        return str(c)


@lru_cache(maxsize=None)
def _factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


Z = ScalarRing("Z")
Q = ScalarRing("Q")


def Fp(p: int) -> ScalarRing:
    return ScalarRing("Fp", p)
