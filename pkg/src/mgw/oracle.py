"""Exact ground truth on small instances.

Everything here is brute force and exact: tree probabilities through
the per-vertex product formula, exhaustive enumeration of small typed
trees, the Otter-Dwass identity computed along two independent series
routes, and coefficient extraction for composed generating functions.
Rational inputs stay rational end to end; the samplers and experiments
are judged against these numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetError, SpecError, StructureError
from .offspring import (
    FiniteTable,
    Geometric,
    HeavyCount,
    Law,
    OffspringSpec,
    is_alternating,
)
from .series import RationalPGF, poly_eval_series, ser_div, ser_mul
from .trees import TypedForest


def tree_probability(spec: OffspringSpec, t: TypedForest, root_type: int | None = None):
    """P^(i)(T = t): product over vertices of the arrangement factor
    times the offspring probability of the child-count vector.

    Exact (Fraction) whenever the involved laws are rational.  A tree
    outside the law's support gets probability 0, not an error.
    """
    if t.kind != "tree":
        raise StructureError("tree_probability expects a single tree")
    if t.d > spec.d:
        raise SpecError(f"tree carries {t.d} types, spec has {spec.d}")
    if root_type is None:
        root_type = int(t.types[0])
    if int(t.types[0]) != root_type:
        return Fraction(0) if spec.is_rational else 0.0

    counts = t.typed_child_counts
    if t.d < spec.d:  # tree built over a subset of the types
        pad = np.zeros((len(t), spec.d - t.d), dtype=np.int64)
        counts = np.hstack([counts, pad])
    types = t.types
    prob = Fraction(1) if spec.is_rational else 1.0
    for k in range(len(t)):
        z = counts[k]
        law = spec.law(int(types[k]))
        total = int(z.sum())
        if isinstance(law, Geometric):
            if total != int(z[law.child_type - 1]):
                return 0 * prob
            factor = law.prob_total(total)
        elif isinstance(law, FiniteTable):
            mu = law.pmf.get(tuple(int(x) for x in z))
            if mu is None:
                return 0 * prob
            arr = Fraction(1)
            for zj in z:
                arr *= math.factorial(int(zj))
            factor = mu * arr / math.factorial(total)
        else:  # HeavyCount: arrangement factor cancels against the multinomial
            factor = law.prob_total(total)
            for j, zj in enumerate(z):
                if zj:
                    if law.q[j] == 0.0:
                        return 0 * prob
                    factor *= law.q[j] ** int(zj)
        prob = prob * factor
    return prob


def gw_tree_probability(pmf, t: TypedForest):
    """Probability of a plane tree under a one-type law given as a
    sequence/dict of child-count probabilities."""
    if t.kind != "tree":
        raise StructureError("expects a single tree")
    get = pmf.get if isinstance(pmf, dict) else lambda k, d=0: (pmf[k] if k < len(pmf) else d)
    prob = None
    for c in t.child_counts:
        factor = get(int(c), 0)
        prob = factor if prob is None else prob * factor
        if factor == 0:
            break
    return prob


# ---------------------------------------------------------------------------
# enumeration


@dataclass(frozen=True)
class EnumeratedLaw:
    """All positive-probability trees up to a size cap, with their exact
    probabilities; total mass approaches P(#T <= max_size) from below as
    the child-count cap grows."""

    entries: tuple
    root_type: int
    max_size: int
    max_child: int

    @property
    def total_mass(self):
        return sum(p for _, p in self.entries)

    def as_dict(self) -> dict[str, object]:
        return {t.to_text(): p for t, p in self.entries}


def _multiset_permutations(seq: tuple[int, ...]):
    """Distinct permutations of a sorted tuple, lexicographically."""
    if not seq:
        yield ()
        return
    prev = None
    for k, x in enumerate(seq):
        if x == prev:
            continue
        prev = x
        for rest in _multiset_permutations(seq[:k] + seq[k + 1 :]):
            yield (x,) + rest


def _child_sequence_options(spec: OffspringSpec, tau: int, cmax: int) -> list[tuple[tuple[int, ...], object]]:
    """(ordered child-type sequence, probability) pairs with <= cmax
    children.  Sequence probabilities already include the planar
    arrangement factor, so they sum to P(c(u) <= cmax)."""
    law = spec.law(tau)
    out: list[tuple[tuple[int, ...], object]] = []
    if isinstance(law, Geometric):
        for c in range(cmax + 1):
            out.append(((law.child_type,) * c, law.prob_total(c)))
        return out
    if isinstance(law, FiniteTable):
        for counts, mu in law.entries:
            if sum(counts) > cmax:
                continue
            base = tuple(
                j for j, z in enumerate(counts, start=1) for _ in range(z)
            )
            perms = list(_multiset_permutations(base))
            share = mu * Fraction(1, len(perms)) if isinstance(mu, Fraction) else mu / len(perms)
            for seq in perms:
                out.append((seq, share))
        return out
    # heavy count: i.i.d. child types
    alive = sorted(law.child_types())
    for c in range(cmax + 1):
        pc = law.prob_total(c)
        for seq in _sequences(alive, c):
            w = pc
            for tj in seq:
                w = w * law.q[tj - 1]
            out.append((seq, w))
    return out


def _sequences(alphabet: list[int], length: int):
    if length == 0:
        yield ()
        return
    for head in alphabet:
        for rest in _sequences(alphabet, length - 1):
            yield (head,) + rest


def enumerate_trees(
    spec: OffspringSpec,
    i: int,
    max_size: int,
    max_child: int | None = None,
    node_budget: int = 500_000,
) -> EnumeratedLaw:
    """Every typed tree of at most max_size vertices rooted at type i,
    with its exact probability.

    ``max_child`` caps the per-vertex child count for laws with
    unbounded support; the default max_size - 1 keeps the enumeration
    complete (a larger brood cannot fit in the size budget anyway), so
    the only mass missing from the total is P(#T > max_size).
    """
    if max_size < 1:
        raise SpecError("max_size must be >= 1")
    cmax = max_size - 1 if max_child is None else min(max_child, max_size - 1)
    spec.law(i)

    options: dict[int, list] = {}
    produced = 0

    def opts(tau: int) -> list:
        if tau not in options:
            options[tau] = _child_sequence_options(spec, tau, cmax)
        return options[tau]

    trees_memo: dict[tuple[int, int], list] = {}

    def gen(tau: int, budget: int) -> list:
        """(struct, size, prob) for trees rooted at tau with size <= budget."""
        nonlocal produced
        key = (tau, budget)
        if key in trees_memo:
            return trees_memo[key]
        acc = []
        for seq, w in opts(tau):
            if len(seq) > budget - 1:
                continue
            for children, size, prob in _forests(seq, budget - 1):
                produced += 1
                if produced > node_budget:
                    raise BudgetError(
                        f"enumeration exceeded {node_budget} intermediate trees"
                    )
                acc.append(((tau, children), size + 1, w * prob))
        trees_memo[key] = acc
        return acc

    forests_memo: dict[tuple[tuple[int, ...], int], list] = {}

    def _forests(types_seq: tuple[int, ...], budget: int) -> list:
        """(children structs, total size, prob) with every child >= 1 vertex."""
        if not types_seq:
            return [((), 0, Fraction(1) if spec.is_rational else 1.0)]
        key = (types_seq, budget)
        if key in forests_memo:
            return forests_memo[key]
        acc = []
        head, rest = types_seq[0], types_seq[1:]
        room = budget - len(rest)  # each remaining child needs one vertex
        for struct, size, prob in gen(head, room):
            for structs2, size2, prob2 in _forests(rest, budget - size):
                acc.append(((struct,) + structs2, size + size2, prob * prob2))
        forests_memo[key] = acc
        return acc

    entries = []
    for struct, size, prob in gen(i, max_size):
        entries.append((_struct_to_tree(struct, spec.d), prob))
    entries.sort(key=lambda pair: (len(pair[0]), pair[0].to_text()))
    return EnumeratedLaw(tuple(entries), i, max_size, cmax)


def _struct_to_tree(struct, d: int) -> TypedForest:
    items: dict[tuple[int, ...], int] = {}

    def walk(node, label):
        tau, children = node
        items[label] = tau
        for k, child in enumerate(children, start=1):
            walk(child, label + (k,))

    walk(struct, ())
    return TypedForest.from_vertices(items, d=d, kind="tree")


def enumerate_plane_trees(max_size: int) -> list[TypedForest]:
    """All one-type plane trees with at most max_size vertices, in
    canonical (size, serialization) order."""
    memo: dict[int, list] = {}

    def gen(budget: int) -> list:
        if budget in memo:
            return memo[budget]
        acc = []
        for k in range(budget):  # number of children
            for combo in _compose(k, budget - 1):
                acc.append(tuple(combo))
        memo[budget] = acc
        return acc

    def _compose(k: int, budget: int) -> list:
        if k == 0:
            return [()]
        out = []
        for first in gen(budget - (k - 1)):
            size_first = _size(first)
            for rest in _compose(k - 1, budget - size_first):
                out.append((first,) + rest)
        return out

    def _size(node) -> int:
        return 1 + sum(_size(c) for c in node)

    def _typed(node):
        return (1, tuple(_typed(c) for c in node))

    trees = []
    for struct in gen(max_size):
        trees.append(_struct_to_tree(_typed(struct), 1))
    trees.sort(key=lambda t: (len(t), t.to_text()))
    return trees


# ---------------------------------------------------------------------------
# scalar series routes


def _scalar_pgf(mu) -> RationalPGF:
    """A one-type child-count law as a rational generating function."""
    if isinstance(mu, RationalPGF):
        return mu
    if isinstance(mu, Geometric):
        return mu.scalar_pgf()
    if isinstance(mu, FiniteTable):
        coeffs: list = []
        for counts, prob in mu.entries:
            if len(counts) != 1:
                raise SpecError("need a one-type table")
            k = counts[0]
            coeffs.extend([Fraction(0)] * (k + 1 - len(coeffs)))
            coeffs[k] = prob
        return RationalPGF.polynomial(coeffs)
    if isinstance(mu, dict):
        top = max(mu)
        coeffs = [Fraction(0)] * (top + 1)
        for k, prob in mu.items():
            if k < 0:
                raise SpecError("child counts must be non-negative")
            coeffs[k] = prob if isinstance(prob, (Fraction, float)) else Fraction(prob)
        return RationalPGF.polynomial(coeffs)
    raise SpecError(f"no scalar pgf for {mu!r}")


def _compose_at_zero(g: RationalPGF, inner: list, n: int) -> list:
    """g(inner(x)) as a truncated series; inner may have any constant
    term as long as the denominator stays a unit (true for pgfs at
    arguments in [0,1])."""
    num = poly_eval_series(list(g.num), inner, n)
    den = poly_eval_series(list(g.den), inner, n)
    return ser_div(num, den, n)


def otter_dwass(mu, n: int):
    """Both sides of P(#T = n) = P(W_n = -1) / n for a one-type law.

    The left side comes from the size series T(x) = x g(T(x)) solved by
    iteration; the right side is the n-fold convolution of the walk's
    step law, read off g(x)^n.  Exact for rational laws.
    """
    if n < 1:
        raise SpecError("n must be >= 1")
    g = _scalar_pgf(mu)
    one = Fraction(1) if _is_rational_pgf(g) else 1.0

    order = n + 1
    T: list = [0 * one]
    for _ in range(n + 1):
        T = ser_mul([0 * one, one], _compose_at_zero(g, T, order), order)
    lhs = T[n] if n < len(T) else 0 * one

    g_series = g.series(n)  # coefficients 0..n-1 suffice for [x^(n-1)]
    power = [one]
    for _ in range(n):
        power = ser_mul(power, g_series, n)
    rhs_walk = power[n - 1] if n - 1 < len(power) else 0 * one
    rhs = rhs_walk / n if isinstance(rhs_walk, Fraction) else rhs_walk / float(n)
    return lhs, rhs


def _is_rational_pgf(g: RationalPGF) -> bool:
    return all(isinstance(c, (Fraction, int)) for c in g.num + g.den)


def pgf_coefficients(layers, order: int) -> list:
    """Coefficients of the composition layer_1(layer_2(...(x))).

    Layers may be laws, explicit polynomial coefficient lists, the
    string "identity", or ready RationalPGF objects.  Composition is
    carried out on the rational closed forms, so inner constant terms
    are fine.
    """
    if order < 1:
        raise SpecError("order must be >= 1")
    if order > 100_000:
        raise BudgetError("requested series order beyond budget")
    if not layers:
        raise SpecError("need at least one layer")
    rats = []
    for layer in layers:
        if layer == "identity":
            rats.append(RationalPGF.identity())
        elif isinstance(layer, (list, tuple)):
            rats.append(RationalPGF.polynomial([_frac_or_float(c) for c in layer]))
        else:
            rats.append(_scalar_pgf(layer))
    combined = rats[-1]
    for outer in reversed(rats[:-1]):
        combined = outer.compose(combined)
    return combined.series(order)


def _frac_or_float(c):
    if isinstance(c, float):
        return c
    return Fraction(c)


def reduced_pmf_by_convolution(spec: OffspringSpec, i: int, k_max: int, tol: float = 1e-14):
    """Offspring law of the type-i projection of an alternating spec,
    computed as the child-count mixture sum_j P(j other-type children)
    * (their brood size law)^(*j), truncated at a certified tail.

    Returns (coefficients 0..k_max, tail_bound): every coefficient is
    below its true value by at most tail_bound.  This is a route
    independent of the generating-function fixed point and is used to
    cross-check it.
    """
    if not is_alternating(spec):
        raise SpecError("convolution route requires an alternating two-type spec")
    law_i = spec.law(i)
    if not isinstance(law_i, Geometric):
        raise SpecError("convolution route requires a geometric kept type")
    other = spec.law(3 - i)
    p = law_i.p
    exact = isinstance(p, Fraction) and other.is_rational
    n = k_max + 1
    if isinstance(other, (Geometric, FiniteTable)):
        g2 = _scalar_pgf_any(other, n, exact)
    else:
        g2 = [other.prob_total(k) for k in range(n)]
    one = Fraction(1) if exact else 1.0
    p_use = p if exact else float(p)

    out = [(one - p_use) if k == 0 else 0 * one for k in range(n)]
    power = [one] + [0 * one] * (n - 1)
    weight = (one - p_use) * p_use
    j = 1
    while True:
        power = ser_mul(power, g2, n)
        for k in range(min(len(power), n)):
            out[k] = out[k] + weight * power[k]
        tail = float(p_use) ** (j + 1)
        if tail < tol:
            return out, tail
        weight = weight * p_use
        j += 1
        if j > 100_000:
            raise BudgetError("convolution truncation did not certify")


def _scalar_pgf_any(law: Law, n: int, exact: bool) -> list:
    rat = _scalar_pgf(law)
    coeffs = rat.series(n)
    return coeffs if exact else [float(c) for c in coeffs]
