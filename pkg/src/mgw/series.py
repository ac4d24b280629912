"""Small truncated power-series and rational-function toolkit.

Works over any field whose elements support Python arithmetic, so the
same routines run with ``fractions.Fraction`` (exact oracles) and with
floats.  Series are plain lists of coefficients, constant term first.
A pgf with a rational closed form is kept as a numerator/denominator
polynomial pair, which makes composition at arguments with non-zero
constant term well defined (plain truncated composition is not).
"""

from __future__ import annotations

from dataclasses import dataclass


def ser_add(a: list, b: list) -> list:
    n = max(len(a), len(b))
    return [(a[k] if k < len(a) else 0) + (b[k] if k < len(b) else 0) for k in range(n)]


def ser_scale(a: list, c) -> list:
    return [c * x for x in a]


def ser_mul(a: list, b: list, n_coeffs: int | None = None) -> list:
    n = len(a) + len(b) - 1 if a and b else 0
    if n_coeffs is not None:
        n = min(n, n_coeffs)
    out = [0] * n
    for i, ai in enumerate(a):
        if i >= n:
            break
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            if i + j >= n:
                break
            out[i + j] += ai * bj
    return out


def ser_div(num: list, den: list, n_coeffs: int) -> list:
    """Coefficients of num/den; requires den[0] != 0."""
    if not den or den[0] == 0:
        raise ZeroDivisionError("series division needs a unit constant term")
    d0 = den[0]
    out = []
    for k in range(n_coeffs):
        acc = num[k] if k < len(num) else 0
        for j in range(1, min(k, len(den) - 1) + 1):
            acc -= den[j] * out[k - j]
        out.append(acc / d0)
    return out


def poly_eval(poly: list, x):
    """Horner evaluation of a polynomial at a scalar."""
    acc = 0
    for c in reversed(poly):
        acc = acc * x + c
    return acc


def poly_eval_series(poly: list, g: list, n_coeffs: int) -> list:
    """Horner evaluation of a polynomial at a truncated series.

    Valid for any constant term of g because the outer function is a
    polynomial.
    """
    acc = [0]
    for c in reversed(poly):
        acc = ser_mul(acc, g, n_coeffs)
        if not acc:
            acc = [0]
        acc[0] = acc[0] + c
    return acc[:n_coeffs]


@dataclass(frozen=True)
class RationalPGF:
    """A generating function given as a ratio of two polynomials."""

    num: tuple
    den: tuple

    @classmethod
    def polynomial(cls, coeffs) -> "RationalPGF":
        return cls(tuple(coeffs), (1,))

    @classmethod
    def identity(cls) -> "RationalPGF":
        return cls((0, 1), (1,))

    def eval(self, x):
        return poly_eval(list(self.num), x) / poly_eval(list(self.den), x)

    def series(self, n_coeffs: int) -> list:
        return ser_div(list(self.num), list(self.den), n_coeffs)

    def compose(self, inner: "RationalPGF") -> "RationalPGF":
        """self(inner(x)) as a new ratio of polynomials.

        Clearing denominators: with self = P/Q and inner = A/B,
        P(A/B) * B^L = sum_k p_k A^k B^(L-k) for L = max degree.
        """
        a, b = list(inner.num), list(inner.den)
        ell = max(len(self.num), len(self.den)) - 1

        def clear(poly: tuple) -> list:
            acc = [0]
            b_pow = [1]
            # accumulate p_k * A^k * B^(L-k), building powers incrementally
            a_pows = [[1]]
            for _ in range(ell):
                a_pows.append(ser_mul(a_pows[-1], a))
            for k in range(ell, -1, -1):
                coeff = poly[k] if k < len(poly) else 0
                if coeff != 0:
                    term = ser_scale(ser_mul(a_pows[k], b_pow), coeff)
                    acc = ser_add(acc, term)
                if k > 0:
                    b_pow = ser_mul(b_pow, b)
            return acc

        # walk k downward so B-powers grow as A-powers shrink
        num = clear(self.num)
        den = clear(self.den)
        return RationalPGF(tuple(num), tuple(den))
