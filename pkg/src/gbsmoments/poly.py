"""Dense univariate polynomials in ``k`` with arbitrary-precision integer coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "IntPolynomial",
    "poly_add",
    "poly_mul",
    "poly_scale",
    "poly_eval_exact",
    "poly_eval_log",
    "pack",
    "unpack",
]


def _trim(coeffs: Sequence[int]) -> tuple[int, ...]:
    end = len(coeffs)
    while end and coeffs[end - 1] == 0:
        end -= 1
    return tuple(coeffs[:end])


@dataclass(frozen=True)
class IntPolynomial:
    """Polynomial ``sum(coeffs[i] * k**i)``; the empty tuple is the zero polynomial."""

    coeffs: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        trimmed = _trim(tuple(int(c) for c in self.coeffs))
        object.__setattr__(self, "coeffs", trimmed)

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[int]) -> IntPolynomial:
        return cls(tuple(coeffs))

    @classmethod
    def monomial(cls, degree: int, coeff: int = 1) -> IntPolynomial:
        return cls((0,) * degree + (coeff,))

    @property
    def degree(self) -> int:
        """Degree of the polynomial; -1 for zero."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, i: int) -> int:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return 0

    def __add__(self, other: IntPolynomial) -> IntPolynomial:
        return poly_add(self, other)

    def __mul__(self, other: IntPolynomial | int) -> IntPolynomial:
        if isinstance(other, int):
            return poly_scale(self, other)
        return poly_mul(self, other)

    __rmul__ = __mul__

    def __call__(self, k: int) -> int:
        return poly_eval_exact(self, k)

    def to_text(self) -> str:
        """Degree-ascending decimal coefficients, one per line."""
        return "".join(f"{c}\n" for c in self.coeffs)

    @classmethod
    def from_text(cls, text: str) -> IntPolynomial:
        return cls(tuple(int(line) for line in text.splitlines() if line.strip()))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            if i == 0:
                terms.append(str(c))
            elif i == 1:
                terms.append(f"{c}*k")
            else:
                terms.append(f"{c}*k^{i}")
        return " + ".join(terms)


ZERO = IntPolynomial()


def poly_add(p: IntPolynomial, q: IntPolynomial) -> IntPolynomial:
    a, b = p.coeffs, q.coeffs
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return IntPolynomial(tuple(out))


def poly_mul(p: IntPolynomial, q: IntPolynomial) -> IntPolynomial:
    a, b = p.coeffs, q.coeffs
    if not a or not b:
        return ZERO
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return IntPolynomial(tuple(out))


def poly_scale(p: IntPolynomial, c: int) -> IntPolynomial:
    if c == 0:
        return ZERO
    return IntPolynomial(tuple(c * x for x in p.coeffs))


def poly_eval_exact(p: IntPolynomial, k: int) -> int:
    """Horner evaluation at a nonnegative integer ``k``."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    acc = 0
    for c in reversed(p.coeffs):
        acc = acc * k + c
    return acc


def poly_eval_log(p: IntPolynomial, k: float) -> float:
    """Natural log of ``p(k)`` for real ``k > 0`` without overflow.

    Works term by term in the log domain: ``log(c_i) + i*log(k)`` followed by a
    log-sum-exp. ``math.log`` on a Python int is exact to double precision for
    integers of any size, so the big coefficients never pass through a float.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if not p.coeffs:
        raise ValueError("log of the zero polynomial is undefined")
    if any(c < 0 for c in p.coeffs):
        raise ValueError("log evaluation requires nonnegative coefficients")
    logk = math.log(k)
    logs = [math.log(c) + i * logk for i, c in enumerate(p.coeffs) if c > 0]
    top = max(logs)
    return top + math.log(math.fsum(math.exp(x - top) for x in logs))


# Kronecker packing: a polynomial with coefficients < 2**(8*width) is stored as
# the single integer p(2**(8*width)). Sums and scalar multiples stay valid as
# long as no coefficient overflows its slot; the recursion guarantees that by
# bounding every coefficient by the graph count of its class.


def pack(p: IntPolynomial, width: int) -> int:
    """Encode ``p`` as one integer with ``width`` bytes per coefficient."""
    if not p.coeffs:
        return 0
    return int.from_bytes(b"".join(c.to_bytes(width, "little") for c in p.coeffs), "little")


def unpack(value: int, width: int) -> IntPolynomial:
    if value == 0:
        return ZERO
    nbytes = (value.bit_length() + 7) // 8
    nterms = -(-nbytes // width)
    raw = value.to_bytes(nterms * width, "little")
    return IntPolynomial(
        tuple(int.from_bytes(raw[i * width : (i + 1) * width], "little") for i in range(nterms))
    )
