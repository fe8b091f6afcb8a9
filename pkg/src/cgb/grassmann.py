"""Finite-dimensional Grassmann algebra with Berezin integration.

Elements live in the real algebra generated by anticommuting symbols
theta_0, ..., theta_{N-1} (theta_i theta_j = -theta_j theta_i, so every
generator squares to zero).  A basis monomial is a subset of generators,
encoded as a bitmask; an element is a sparse map from bitmasks to
coefficients.  Coefficients are ordinary floats by default, but any field
that supports +, *, / and exact zero tests works -- ``fractions.Fraction``
gives an exact backend for validating sign conventions.

The two payload operations are

* ``berezin``: projection onto the coefficient of the full top monomial
  theta_0 theta_1 ... theta_{N-1} (in a caller-chosen generator ordering),
  which is the Berezin integral over the purely odd vector space, and
* ``fermionic_gaussian``: the Berezin integral of exp(-q/2)-type Gaussians
  of a skew quadratic form, which equals a Pfaffian.  The embedding
  constant is locked by the block-diagonal golden value
  ``fermionic_gaussian(block_diag(l_1 J, ..., l_n J)) == l_1 * ... * l_n``
  with J = [[0, -1], [1, 0]]; ``pfaffian_combinatorial`` implements the
  same convention by Laplace expansion and serves as an independent
  cross-check.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class DimensionMismatchError(ValueError):
    """Operands live in Grassmann algebras with different generator counts."""


class ParityError(ValueError):
    """An operation required an even (or odd) element and got a mixed one."""


MAX_GENERATORS = 64


def _merge_sign(mask_a: int, mask_b: int) -> int:
    """Sign of sorting the concatenation of two disjoint index sets.

    Equals the parity of the number of pairs (a, b), a in mask_a,
    b in mask_b, with a > b.
    """
    swaps = 0
    b = mask_b
    while b:
        low = b & -b
        j = low.bit_length() - 1
        swaps += (mask_a >> (j + 1)).bit_count()
        b ^= low
    return -1 if swaps & 1 else 1


def permutation_sign(perm: Sequence[int]) -> int:
    """Sign of a permutation of 0..n-1, by cycle decomposition."""
    n = len(perm)
    seen = [False] * n
    sign = 1
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


class GrassmannElement:
    """Immutable sparse element of a Grassmann algebra on N generators.

    ``terms`` maps bitmasks (bit i set = generator i present) to nonzero
    coefficients; the empty mask 0 is the scalar part.  All operations
    return new elements; zero coefficients are pruned, so equality of the
    term maps is equality in the algebra.
    """

    __slots__ = ("generator_count", "terms")

    def __init__(self, generator_count: int, terms: Mapping[int, object] | None = None):
        if not 0 < generator_count <= MAX_GENERATORS:
            raise ValueError(f"generator_count must be in 1..{MAX_GENERATORS}, got {generator_count}")
        self.generator_count = generator_count
        full = (1 << generator_count) - 1
        clean: dict[int, object] = {}
        if terms:
            for mask, coeff in terms.items():
                if mask < 0 or mask > full:
                    raise ValueError(f"mask {mask:#x} uses generators beyond {generator_count}")
                if coeff != 0:
                    clean[mask] = coeff
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, generator_count: int) -> "GrassmannElement":
        return cls(generator_count, {})

    @classmethod
    def scalar(cls, generator_count: int, value) -> "GrassmannElement":
        return cls(generator_count, {0: value})

    @classmethod
    def generator(cls, generator_count: int, index: int) -> "GrassmannElement":
        if not 0 <= index < generator_count:
            raise ValueError(f"generator index {index} out of range")
        return cls(generator_count, {1 << index: 1})

    @classmethod
    def monomial(cls, generator_count: int, indices: Iterable[int], coeff=1) -> "GrassmannElement":
        """Product coeff * theta_{i_1} ... theta_{i_k} in the given order."""
        mask = 0
        sign = 1
        for i in indices:
            i = int(i)
            if not 0 <= i < generator_count:
                raise ValueError(f"generator index {i} out of range")
            bit = 1 << i
            if mask & bit:
                return cls.zero(generator_count)
            sign *= _merge_sign(mask, bit)
            mask |= bit
        return cls(generator_count, {mask: sign * coeff})

    # -- structure queries -------------------------------------------------

    def coefficient(self, mask: int):
        return self.terms.get(mask, 0)

    @property
    def scalar_part(self):
        return self.terms.get(0, 0)

    def degree_part(self, degree: int) -> "GrassmannElement":
        kept = {m: c for m, c in self.terms.items() if m.bit_count() == degree}
        return GrassmannElement(self.generator_count, kept)

    def is_even(self) -> bool:
        return all(m.bit_count() % 2 == 0 for m in self.terms)

    def is_odd(self) -> bool:
        return all(m.bit_count() % 2 == 1 for m in self.terms)

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    # -- arithmetic ----------------------------------------------------------

    def _check_compatible(self, other: "GrassmannElement") -> None:
        if self.generator_count != other.generator_count:
            raise DimensionMismatchError(
                f"generator counts differ: {self.generator_count} vs {other.generator_count}"
            )

    def __add__(self, other):
        if not isinstance(other, GrassmannElement):
            return NotImplemented
        self._check_compatible(other)
        acc = dict(self.terms)
        for mask, coeff in other.terms.items():
            acc[mask] = acc.get(mask, 0) + coeff
        return GrassmannElement(self.generator_count, acc)

    def __sub__(self, other):
        if not isinstance(other, GrassmannElement):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return GrassmannElement(self.generator_count, {m: -c for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, GrassmannElement):
            return multiply(self, other)
        return GrassmannElement(self.generator_count, {m: c * other for m, c in self.terms.items()})

    def __rmul__(self, other):
        # scalars commute with everything; Grassmann * Grassmann goes via __mul__
        return self.__mul__(other)

    def __eq__(self, other):
        if not isinstance(other, GrassmannElement):
            return NotImplemented
        return self.generator_count == other.generator_count and self.terms == other.terms

    def __hash__(self):
        return hash((self.generator_count, frozenset(self.terms.items())))

    def isclose(self, other: "GrassmannElement", tol: float = 1e-12) -> bool:
        self._check_compatible(other)
        masks = set(self.terms) | set(other.terms)
        return all(abs(self.coefficient(m) - other.coefficient(m)) <= tol for m in masks)

    def __repr__(self):
        if not self.terms:
            return "GrassmannElement(0)"
        bits = []
        for mask in sorted(self.terms):
            gens = "".join(f"t{i}" for i in range(self.generator_count) if mask >> i & 1)
            bits.append(f"{self.terms[mask]!r}*{gens}" if gens else repr(self.terms[mask]))
        return f"GrassmannElement({' + '.join(bits)})"


def multiply(a: GrassmannElement, b: GrassmannElement) -> GrassmannElement:
    """Bilinear product; monomials merge with the permutation-sorting sign."""
    a._check_compatible(b)
    acc: dict[int, object] = {}
    for mask_a, ca in a.terms.items():
        for mask_b, cb in b.terms.items():
            if mask_a & mask_b:
                continue
            val = _merge_sign(mask_a, mask_b) * ca * cb
            mask = mask_a | mask_b
            prev = acc.get(mask)
            acc[mask] = val if prev is None else prev + val
    return GrassmannElement(a.generator_count, acc)


def exp_even(a: GrassmannElement) -> GrassmannElement:
    """Exponential of an even element; exact, the nilpotent series terminates.

    With a = b + n (b scalar, n nilpotent), returns
    e^b * sum_{k=0}^{floor(N/2)} n^k / k!.  Exact-coefficient inputs must
    have b = 0 since e^b leaves the field.
    """
    if not a.is_even():
        raise ParityError("exp_even requires an even element")
    b = a.scalar_part
    if b == 0:
        scale = 1
    elif isinstance(b, Fraction):
        raise ValueError("exact backend supports exp only for vanishing scalar part")
    else:
        scale = math.exp(b)
    nilpotent = GrassmannElement(a.generator_count, {m: c for m, c in a.terms.items() if m != 0})
    result = GrassmannElement.scalar(a.generator_count, 1)
    power = result
    kfact = 1
    for k in range(1, a.generator_count // 2 + 1):
        power = multiply(power, nilpotent)
        if not power.terms:
            break
        kfact *= k
        result = result + GrassmannElement(
            a.generator_count, {m: _divide(c, kfact) for m, c in power.terms.items()}
        )
    if scale != 1:
        result = result * scale
    return result


def _divide(coeff, k: int):
    if isinstance(coeff, (int, Fraction)):
        q = Fraction(coeff, k)
        return int(q) if q.denominator == 1 else q
    return coeff / k


def berezin(a: GrassmannElement, ordering: Sequence[int]) -> object:
    """Coefficient of the full top monomial in the given generator ordering.

    ``ordering`` must be a permutation of all generator indices; the result
    is the canonical top coefficient times the sign of that permutation,
    i.e. the Berezin integral with [d theta_{ordering}] orientation.
    """
    n = a.generator_count
    if sorted(ordering) != list(range(n)):
        raise ValueError(f"ordering must be a permutation of 0..{n - 1}, got {list(ordering)}")
    top = (1 << n) - 1
    return permutation_sign(list(ordering)) * a.coefficient(top)


def _as_rows(q) -> list[list]:
    rows = [list(row) for row in q]
    m = len(rows)
    if any(len(row) != m for row in rows):
        raise ValueError("quadratic form must be a square matrix")
    return rows


def _check_skew(rows: list[list], tol: float) -> None:
    m = len(rows)
    scale = max((abs(rows[i][j]) for i in range(m) for j in range(m)), default=0) or 1
    worst = max(abs(rows[i][j] + rows[j][i]) for i in range(m) for j in range(m))
    if worst > tol * scale:
        raise ValueError(f"matrix is not skew-symmetric: max |q + q^T| = {worst}")


def fermionic_gaussian(q, tol: float = 1e-10):
    """Berezin integral of the fermionic Gaussian of a skew form q.

    Builds the even element Q = sum_{i<j} q_ij theta_i theta_j, exponentiates
    with the calibrated embedding constant, and projects onto the top
    monomial.  Calibration: block_diag(l_1 J, ..., l_n J) with
    J = [[0, -1], [1, 0]] maps to the product of the l_i, and the square of
    the result is det(q).

    Q is homogeneous of degree two, so only the n-th power of the series
    reaches the top monomial: the value is the top coefficient of Q^n / n!,
    computed here from two half powers.  This equals
    berezin(exp_even(-Q), range(2n)) exactly.
    """
    rows = _as_rows(q)
    m = len(rows)
    if m % 2 != 0:
        raise ValueError(f"skew form must have even dimension, got {m}")
    _check_skew(rows, tol)
    terms = {}
    for i in range(m):
        for j in range(i + 1, m):
            if rows[i][j] != 0:
                # locked by the block-diagonal golden value: exponent carries -q
                terms[(1 << i) | (1 << j)] = -rows[i][j]
    element = GrassmannElement(m, terms)
    n = m // 2
    low = element
    for _ in range(n // 2 - 1):
        low = multiply(low, element)
    high = multiply(low, element) if n % 2 else low
    if n == 1:
        low_terms, high_terms = {0: 1}, element.terms
    else:
        low_terms, high_terms = low.terms, high.terms
    full = (1 << m) - 1
    top = 0
    for mask, coeff in low_terms.items():
        other = high_terms.get(full ^ mask)
        if other is not None:
            top += _merge_sign(mask, full ^ mask) * coeff * other
    return _divide(top, math.factorial(n))


def pfaffian_combinatorial(q):
    """Pfaffian by Laplace expansion along the first row.

    Exact for integer or Fraction entries; O((2n)!!) terms, intended as the
    independent cross-check for ``fermionic_gaussian`` up to 2n = 12.  Uses
    the same sign convention (block_diag(l_1 J, ..., l_n J) -> prod l_i).
    """
    rows = _as_rows(q)
    m = len(rows)
    if m % 2 != 0:
        raise ValueError(f"Pfaffian needs even dimension, got {m}")
    # same normal-form convention as fermionic_gaussian: expand -q
    negated = [[-x for x in row] for row in rows]
    return _pf_expand(negated, list(range(m)))


def _pf_expand(rows: list[list], active: list[int]):
    if not active:
        return 1
    i0 = active[0]
    rest = active[1:]
    total = 0
    for pos, j in enumerate(rest):
        coeff = rows[i0][j]
        if coeff == 0:
            continue
        sign = 1 if pos % 2 == 0 else -1
        sub = rest[:pos] + rest[pos + 1:]
        total += sign * coeff * _pf_expand(rows, sub)
    return total
