"""Random generation of multitype trees and forests.

Three sampling granularities coexist here:

* depth-first vertex samplers (`sample_tree`, `sample_forest`,
  `sample_conditioned`) that materialize plane trees;
* generation-level population samplers (`sample_height_reach`) that never
  build the tree;
* block-vectorized population samplers used by the experiment harness
  (`height_reach_block`, `type_count_block`, `upsilon_block`) that advance
  many replicas per numpy call.

All of them draw from per-unit Philox streams derived from a 64-bit master
seed, so results are reproducible for any worker count and schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.special import zeta as _hurwitz_zeta

from .errors import SpecError, StructureError, SupportError
from .offspring import (
    FiniteTable,
    Geometric,
    HeavyCount,
    OffspringSpec,
    is_alternating,
    spectral,
)
from .rng import DEFAULT_SEED, stream
from .trees import TypedForest

_BUF = 16384


@dataclass(frozen=True)
class SampleBudget:
    """Caps for a sampling run; exceeding one yields a typed outcome."""

    max_vertices: int = 10**7
    max_tries: int = 10**5
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.max_vertices < 0:
            raise SpecError("max_vertices must be nonnegative")
        if self.max_tries < 1:
            raise SpecError("max_tries must be positive")


@dataclass(frozen=True)
class Truncated:
    """A cap was hit; `placed` vertices existed when sampling stopped."""

    reason: str
    placed: int
    limit: int


@dataclass(frozen=True)
class Exhausted:
    """Rejection sampling gave up after `tries` attempts."""

    tries: int
    target: int


DEFAULT_BUDGET = SampleBudget()


class _Buffer:
    """Consume numpy draws one scalar at a time, refilling in blocks.

    Lazy, and block sizes grow geometrically from 64 up to _BUF: one-shot
    a tree costs tens of draws, bulk runs still amortize to full blocks.
    Growth is invisible to the law because the generators consume one
    stream value per draw regardless of the requested block size.
    """

    __slots__ = ("_fill", "_arr", "_pos", "_size")

    def __init__(self, fill):
        self._fill = fill
        self._arr = None
        self._pos = 0
        self._size = 64

    def next(self):
        arr, pos = self._arr, self._pos
        if arr is None or pos >= len(arr):
            arr = self._arr = self._fill(self._size)
            self._size = min(2 * self._size, _BUF)
            pos = 0
        self._pos = pos + 1
        return arr[pos]


def _alias_table(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Walker alias construction; probs must sum to 1."""
    n = len(probs)
    scaled = probs * n
    accept = np.ones(n)
    alias = np.arange(n)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        accept[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] - (1.0 - scaled[s])
        (small if scaled[l] < 1.0 else large).append(l)
    return accept, alias


class _HeavyDrawer:
    """O(1) HeavyCount child-count draws: alias head + Hurwitz-zeta tail."""

    def __init__(self, law: HeavyCount):
        self.law = law
        alpha, c, k0 = law.alpha, law.c, law.k0
        # head covers all k with tail mass <= 1e-7 past it; the remainder is
        # a single escape outcome resolved by inverse-CDF search
        head = 64
        while float(c * _hurwitz_zeta(1.0 + alpha, head + k0)) > 1e-7:
            head *= 2
        pmf = np.empty(head + 1)
        pmf[0] = 1.0 - float(law.activity())
        ks = np.arange(1, head)
        pmf[1:head] = c * (ks + k0) ** (-1.0 - alpha)
        self.tail_mass = float(c * _hurwitz_zeta(1.0 + alpha, head + k0))
        pmf[head] = self.tail_mass  # escape slot
        self.head = head
        self.accept, self.alias = _alias_table(pmf / pmf.sum())

    def block(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.integers(0, self.head + 1, size=size)
        u = rng.random(size)
        out = np.where(u < self.accept[idx], idx, self.alias[idx])
        escapes = np.flatnonzero(out == self.head)
        for e in escapes:
            out[e] = self._tail_draw(rng)
        return out

    def _tail_draw(self, rng: np.random.Generator) -> int:
        alpha, c, k0 = self.law.alpha, self.law.c, self.law.k0
        v = rng.random() * self.tail_mass
        # bracket around the continuous-tail inverse, then bisect on the
        # exact discrete tail T(k) = c * zeta(1+alpha, k+k0)
        guess = int((v * alpha / c) ** (-1.0 / alpha)) + 1
        lo, hi = self.head, max(self.head + 1, 4 * guess)
        while float(c * _hurwitz_zeta(1.0 + alpha, hi + k0)) > v:
            lo, hi = hi, hi * 4
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if float(c * _hurwitz_zeta(1.0 + alpha, mid + k0)) > v:
                lo = mid
            else:
                hi = mid
        return lo


class _TypeSampler:
    """Buffered draws of one type's child sequence (types in DF order)."""

    def __init__(self, law, rng: np.random.Generator, d: int):
        self.law = law
        self._seq_cache: dict[int, tuple] = {0: ()}
        self._types = None
        if isinstance(law, Geometric):
            p = float(law.p)
            self._counts = _Buffer(lambda size: rng.geometric(1.0 - p, size) - 1)
            self._ct = law.child_type
            self._kind = "count"
        elif isinstance(law, FiniteTable):
            probs = np.array([float(pr) for _, pr in law.entries])
            probs /= probs.sum()
            m = len(law.entries)
            self._entries = _Buffer(lambda size: rng.choice(m, size=size, p=probs))
            self._uni = _Buffer(lambda size: rng.random(size))
            self._perms = [_interleavings(z) for z, _ in law.entries]
            self._kind = "table"
        elif isinstance(law, HeavyCount):
            drawer = _HeavyDrawer(law)
            self._counts = _Buffer(lambda size: drawer.block(rng, size))
            q = np.array([float(x) for x in law.q])
            hot = np.flatnonzero(q > 0)
            if len(hot) == 1:
                self._ct = int(hot[0]) + 1
                self._kind = "count"
            else:
                self._types = _Buffer(
                    lambda size: rng.choice(d, size=size, p=q / q.sum()) + 1
                )
                self._kind = "mixed"
        else:  # pragma: no cover - defended by OffspringSpec validation
            raise SpecError(f"unknown law {type(law).__name__}")

    def draw(self) -> tuple:
        kind = self._kind
        if kind == "count":
            k = int(self._counts.next())
            seq = self._seq_cache.get(k)
            if seq is None:
                seq = self._seq_cache[k] = (self._ct,) * k
            return seq
        if kind == "table":
            perms = self._perms[self._entries.next()]
            if len(perms) == 1:
                return perms[0]
            return perms[int(self._uni.next() * len(perms))]
        k = int(self._counts.next())
        return tuple(int(self._types.next()) for _ in range(k))


def _interleavings(z: tuple) -> list[tuple]:
    """All distinct orderings of the child-type multiset z, each one a
    uniformly choosable planar arrangement."""
    base = []
    for j, cnt in enumerate(z, start=1):
        base.extend([j] * cnt)
    if len(base) <= 1 or len(set(base)) == 1:
        return [tuple(base)]
    out = []

    def rec(prefix, remaining):
        if not remaining:
            out.append(tuple(prefix))
            return
        for t in sorted(set(remaining)):
            rest = list(remaining)
            rest.remove(t)
            rec(prefix + [t], rest)

    rec([], base)
    return out


def _samplers(spec: OffspringSpec, rng: np.random.Generator) -> list[_TypeSampler]:
    return [_TypeSampler(spec.law(i), rng, spec.d) for i in range(1, spec.d + 1)]


def _refuse_supercritical(spec: OffspringSpec) -> None:
    cls = spectral(spec).classification
    if cls == "supercritical":
        raise SpecError("supercritical spec: trees are not almost surely finite")


def sample_tree(
    spec: OffspringSpec,
    root_type: int,
    budget: SampleBudget = DEFAULT_BUDGET,
    rng: np.random.Generator | None = None,
) -> TypedForest | Truncated:
    """One tree under the type-`root_type` law, capped at budget.max_vertices.

    Children of each vertex are drawn from the vertex type's law with a
    uniformly random planar arrangement of the drawn type multiset.
    """
    _refuse_supercritical(spec)
    if rng is None:
        rng = stream(budget.seed)
    parents: list = []
    types: list = []
    ranks: list = []
    out = _grow_component(
        _samplers(spec, rng), root_type, budget.max_vertices, parents, types, ranks, 0
    )
    if out is not None:
        return out
    return TypedForest.from_arrays(
        np.array(parents, dtype=np.int64),
        np.array(types, dtype=np.int64),
        np.array(ranks, dtype=np.int64),
        d=spec.d,
        kind="tree",
        validate=False,
    )


def _grow_component(
    samplers: list[_TypeSampler],
    root_type: int,
    max_vertices: int,
    parents: list,
    types: list,
    ranks: list,
    root_rank: int,
) -> Truncated | None:
    """Append one depth-first component to the arrays; Truncated on cap."""
    if len(parents) >= max_vertices:
        return Truncated("vertex cap", len(parents), max_vertices)
    root = len(parents)
    parents.append(-1)
    types.append(root_type)
    ranks.append(root_rank)
    seq = samplers[root_type - 1].draw()
    if seq:
        stack = [(root, seq, 0)]
    else:
        stack = []
    while stack:
        par, seq, pos = stack[-1]
        if pos == len(seq):
            stack.pop()
            continue
        stack[-1] = (par, seq, pos + 1)
        if len(parents) >= max_vertices:
            return Truncated("vertex cap", len(parents), max_vertices)
        v = len(parents)
        t = seq[pos]
        parents.append(par)
        types.append(t)
        ranks.append(pos + 1)
        child_seq = samplers[t - 1].draw()
        if child_seq:
            stack.append((v, child_seq, 0))
    return None


def sample_trees(
    spec: OffspringSpec,
    root_type: int,
    count: int,
    budget: SampleBudget = DEFAULT_BUDGET,
    rng: np.random.Generator | None = None,
):
    """Yield `count` independent trees (or Truncated outcomes).

    Equivalent to repeated sample_tree but shares draw buffers across the
    whole run, which matters when drawing millions of small trees.
    """
    _refuse_supercritical(spec)
    if rng is None:
        rng = stream(budget.seed)
    samplers = _samplers(spec, rng)
    for _ in range(count):
        parents: list = []
        types: list = []
        ranks: list = []
        out = _grow_component(
            samplers, root_type, budget.max_vertices, parents, types, ranks, 0
        )
        if out is not None:
            yield out
            continue
        yield TypedForest.from_arrays(
            np.array(parents, dtype=np.int64),
            np.array(types, dtype=np.int64),
            np.array(ranks, dtype=np.int64),
            d=spec.d,
            kind="tree",
            validate=False,
        )


def sample_forest(
    spec: OffspringSpec,
    root_types: int | Sequence[int],
    n_min: int,
    budget: SampleBudget = DEFAULT_BUDGET,
    rng: np.random.Generator | None = None,
) -> TypedForest | Truncated:
    """Concatenate independent trees until at least n_min vertices exist.

    root_types is a constant type or a sequence cycled over components;
    at least one component is always produced.
    """
    _refuse_supercritical(spec)
    if rng is None:
        rng = stream(budget.seed)
    if isinstance(root_types, int):
        cycle: Iterable[int] = _constant(root_types)
    else:
        if not root_types:
            raise SpecError("root_types must be nonempty")
        cycle = _cycled(tuple(root_types))
    samplers = _samplers(spec, rng)
    parents: list = []
    types: list = []
    ranks: list = []
    comp = 0
    it = iter(cycle)
    while comp == 0 or len(parents) < n_min:
        comp += 1
        out = _grow_component(
            samplers, next(it), budget.max_vertices, parents, types, ranks, comp
        )
        if out is not None:
            return out
    return TypedForest.from_arrays(
        np.array(parents, dtype=np.int64),
        np.array(types, dtype=np.int64),
        np.array(ranks, dtype=np.int64),
        d=spec.d,
        kind="forest",
        validate=False,
    )


def _constant(x):
    while True:
        yield x


def _cycled(xs):
    while True:
        yield from xs


# ---------------------------------------------------------------------------
# Generation-level population dynamics (no tree structure)
# ---------------------------------------------------------------------------


def _advance_populations(
    rng: np.random.Generator, spec: OffspringSpec, pops: np.ndarray
) -> np.ndarray:
    """One synchronous generation step for a (replicas, d) population matrix.

    Exact in distribution: per-type totals use the closed-form law of a sum
    of i.i.d. draws (negative binomial / multinomial over table entries),
    HeavyCount parents are drawn individually.
    """
    out = np.zeros_like(pops)
    for i in range(1, spec.d + 1):
        z = pops[:, i - 1]
        rows = np.flatnonzero(z > 0)
        if len(rows) == 0:
            continue
        law = spec.law(i)
        if isinstance(law, Geometric):
            tot = rng.negative_binomial(z[rows], 1.0 - float(law.p))
            out[rows, law.child_type - 1] += tot
        elif isinstance(law, FiniteTable):
            probs = np.array([float(pr) for _, pr in law.entries])
            probs = probs / probs.sum()
            mat = np.array([z for z, _ in law.entries], dtype=np.int64)
            counts = rng.multinomial(z[rows], probs)
            out[rows] += counts @ mat
        else:
            drawer = _heavy_drawer_cached(law)
            parents = z[rows]
            owner = np.repeat(np.arange(len(rows)), parents)
            draws = drawer.block(rng, int(parents.sum()))
            tot = np.bincount(owner, weights=draws, minlength=len(rows)).astype(
                np.int64
            )
            q = np.array([float(x) for x in law.q])
            hot = np.flatnonzero(q > 0)
            if len(hot) == 1:
                out[rows, hot[0]] += tot
            else:
                out[rows] += rng.multinomial(tot, q / q.sum())
    return out


_HEAVY_CACHE: dict[HeavyCount, _HeavyDrawer] = {}


def _heavy_drawer_cached(law: HeavyCount) -> _HeavyDrawer:
    drawer = _HEAVY_CACHE.get(law)
    if drawer is None:
        drawer = _HEAVY_CACHE[law] = _HeavyDrawer(law)
    return drawer


def sample_height_reach(
    spec: OffspringSpec,
    root_type: int,
    h: int,
    budget: SampleBudget = DEFAULT_BUDGET,
    rng: np.random.Generator | None = None,
) -> bool | Truncated:
    """Whether generation h of one tree is nonempty (population walk only)."""
    _refuse_supercritical(spec)
    if h < 0:
        raise SpecError("generation cap must be nonnegative")
    if rng is None:
        rng = stream(budget.seed)
    pop = np.zeros((1, spec.d), dtype=np.int64)
    pop[0, root_type - 1] = 1
    for _ in range(h):
        if pop.sum() == 0:
            return False
        pop = _advance_populations(rng, spec, pop)
        if pop.sum() > budget.max_vertices:
            return Truncated("generation population cap", int(pop.sum()), budget.max_vertices)
    return bool(pop.sum() > 0)


def height_reach_block(
    spec: OffspringSpec,
    root_type: int,
    h: int,
    replicas: int,
    rng: np.random.Generator,
    max_population: int = 10**7,
) -> np.ndarray:
    """Vector of booleans: does replica r's tree reach generation h?

    All replicas advance together; each generation is one set of vectorized
    draws over the still-alive rows.
    """
    pops = np.zeros((replicas, spec.d), dtype=np.int64)
    pops[:, root_type - 1] = 1
    alive = np.ones(replicas, dtype=bool)
    for _ in range(h):
        rows = np.flatnonzero(alive)
        if len(rows) == 0:
            break
        nxt = _advance_populations(rng, spec, pops[rows])
        if nxt.sum() > max_population:
            raise StructureError("population explosion beyond block cap")
        pops[rows] = nxt
        alive[rows] = nxt.sum(axis=1) > 0
    return alive


def type_count_block(
    spec: OffspringSpec,
    root_type: int,
    j: int,
    target: int,
    replicas: int,
    rng: np.random.Generator,
    max_population: int = 10**7,
) -> np.ndarray:
    """min(#T^(j), target) for `replicas` independent trees.

    Counts are censored at `target`: a replica stops as soon as its type-j
    total reaches it, so tail probabilities P(#T^(j) >= n) are exact for
    every n <= target.
    """
    pops = np.zeros((replicas, spec.d), dtype=np.int64)
    pops[:, root_type - 1] = 1
    counts = pops[:, j - 1].copy()
    active = np.ones(replicas, dtype=bool)
    active &= counts < target
    while True:
        rows = np.flatnonzero(active)
        if len(rows) == 0:
            break
        nxt = _advance_populations(rng, spec, pops[rows])
        if nxt.sum() > max_population:
            raise StructureError("population explosion beyond block cap")
        pops[rows] = nxt
        counts[rows] += nxt[:, j - 1]
        active[rows] = (nxt.sum(axis=1) > 0) & (counts[rows] < target)
    return np.minimum(counts, target)


def upsilon_block(
    spec: OffspringSpec,
    root_type: int,
    n: int,
    replicas: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Component index of the n-th depth-first vertex (0-based) for
    `replicas` independent forests of constant root type.

    Only component sizes matter, so each replica walks a population chain
    per component; all replicas advance one generation per numpy call.
    """
    pops = np.zeros((replicas, spec.d), dtype=np.int64)
    pops[:, root_type - 1] = 1
    comp_size = np.ones(replicas, dtype=np.int64)
    done_before = np.zeros(replicas, dtype=np.int64)
    # matches trees.component_index: components are numbered from 1
    comp_index = np.ones(replicas, dtype=np.int64)
    result = np.full(replicas, -1, dtype=np.int64)
    # a component containing position n resolves immediately at n = 0
    hit = done_before + comp_size > n
    result[hit] = comp_index[hit]
    while True:
        rows = np.flatnonzero(result < 0)
        if len(rows) == 0:
            break
        nxt = _advance_populations(rng, spec, pops[rows])
        born = nxt.sum(axis=1)
        pops[rows] = nxt
        comp_size[rows] += born
        hit = rows[done_before[rows] + comp_size[rows] > n]
        result[hit] = comp_index[hit]
        dead = rows[(born == 0) & (result[rows] < 0)]
        if len(dead):
            done_before[dead] += comp_size[dead]
            comp_index[dead] += 1
            comp_size[dead] = 1
            pops[dead] = 0
            pops[dead, root_type - 1] = 1
            hit = dead[done_before[dead] + 1 > n]
            result[hit] = comp_index[hit]
    return result


# ---------------------------------------------------------------------------
# Size-conditioned sampling
# ---------------------------------------------------------------------------


def reachable_counts(spec: OffspringSpec, root_type: int, j: int, bound: int) -> set[int]:
    """Achievable values of #T^(j) in [0, bound] for trees rooted at root_type.

    Bitset fixed point over subtree counts; exact because counts only add.
    """
    supports = []
    for i in range(1, spec.d + 1):
        law = spec.law(i)
        if isinstance(law, Geometric):
            # any number of same-type children; encode as the generator set
            supports.append(("geom", law.child_type))
        elif isinstance(law, FiniteTable):
            supports.append(("table", [z for z, _ in law.entries]))
        else:
            supports.append(("heavy", law))
    mask = (1 << (bound + 1)) - 1
    reach = [0] * (spec.d + 1)  # bitsets, index by type
    for _ in range(2 * (bound + 1) + 2):
        prev = list(reach)
        for i in range(1, spec.d + 1):
            base = 1 << (1 if i == j else 0)
            kind = supports[i - 1]
            if kind[0] == "geom":
                child = prev[kind[1]]
                acc = 1  # zero children
                total = 1
                # closure under adding one more child of the same type
                for _ in range(bound + 1):
                    nxt = _bitset_sumset(acc, child, bound)
                    if nxt | total == total:
                        break
                    acc = nxt
                    total |= nxt
                combined = total
            elif kind[0] == "heavy":
                law = kind[1]
                q = [float(x) for x in law.q]
                hot = [t + 1 for t, x in enumerate(q) if x > 0]
                acc = 1
                total = 1
                kids = 0
                for t in hot:
                    kids |= prev[t]
                for _ in range(bound + 1):
                    nxt = _bitset_sumset(acc, kids, bound)
                    if nxt | total == total:
                        break
                    acc = nxt
                    total |= nxt
                combined = total if float(law.prob_total(0)) > 0 else total & ~1
            else:
                combined = 0
                for z in kind[1]:
                    term = 1
                    for t, cnt in enumerate(z, start=1):
                        for _ in range(cnt):
                            term = _bitset_sumset(term, prev[t], bound)
                    combined |= term
            reach[i] = _bitset_sumset(base, combined, bound) & mask
        if reach == prev:
            break
    return {k for k in range(bound + 1) if (reach[root_type] >> k) & 1}


def _bitset_sumset(a: int, b: int, bound: int) -> int:
    """{x + y : x in a, y in b} as bitsets, truncated to [0, bound]."""
    if a == 0 or b == 0:
        return 0
    mask = (1 << (bound + 1)) - 1
    out = 0
    x = a
    while x:
        low = x & -x
        shift = low.bit_length() - 1
        out |= b << shift
        x ^= low
    return out & mask


def _conditioned_fast_ok(spec: OffspringSpec) -> bool:
    return is_alternating(spec) and all(
        isinstance(spec.law(i), Geometric) for i in (1, 2)
    )


def sample_conditioned(
    spec: OffspringSpec,
    j: int,
    n: int,
    tolerance: int = 0,
    budget: SampleBudget = DEFAULT_BUDGET,
    root_type: int | None = None,
    rng: np.random.Generator | None = None,
) -> TypedForest | Exhausted:
    """A tree conditioned on #T^(j) = n (or within +-tolerance).

    Plain rejection, so accepted trees carry exactly the conditional law
    restricted to {#T <= max_vertices}.  Alternating geometric specs use an
    equivalent two-stage sampler: reject on the generation-size chain, then
    materialize the plane tree from the accepted layer sizes (uniform
    stars-and-bars compositions per layer, which is the exact conditional
    arrangement law for geometric offspring).
    """
    _refuse_supercritical(spec)
    if not (is_alternating(spec) or all(
        isinstance(spec.law(i), FiniteTable) for i in range(1, spec.d + 1)
    )):
        raise SpecError("conditioned sampling needs an alternating or table spec")
    if n < 0 or tolerance < 0:
        raise SpecError("target count and tolerance must be nonnegative")
    if root_type is None:
        root_type = spec.root_types[0]
    if rng is None:
        rng = stream(budget.seed)
    window = {m for m in range(max(0, n - tolerance), n + tolerance + 1)}
    reach = reachable_counts(spec, root_type, j, max(window))
    window &= reach
    if not window:
        period = _residue_period(reach)
        raise SupportError(
            f"#T^({j}) = {n} (+-{tolerance}) is unreachable from root type "
            f"{root_type}; reachable counts have period {period}"
        )
    if _conditioned_fast_ok(spec):
        return _conditioned_alternating(spec, j, window, budget, root_type, rng)
    return _conditioned_rejection(spec, j, window, budget, root_type, rng)


def _residue_period(reach: set[int]) -> int:
    vals = sorted(reach)
    if len(vals) < 2:
        return 0
    g = 0
    for a, b in zip(vals, vals[1:]):
        g = np.gcd(g, b - a)
    return int(g)


def _conditioned_rejection(spec, j, window, budget, root_type, rng):
    lo, hi = min(window), max(window)
    samplers = _samplers(spec, rng)
    for _ in range(budget.max_tries):
        parents: list = []
        types: list = []
        ranks: list = []
        got = _grow_component_counted(
            samplers, root_type, budget.max_vertices, parents, types, ranks, j, hi
        )
        if got is None or got not in window:
            continue
        return TypedForest.from_arrays(
            np.array(parents, dtype=np.int64),
            np.array(types, dtype=np.int64),
            np.array(ranks, dtype=np.int64),
            d=spec.d,
            kind="tree",
            validate=False,
        )
    return Exhausted(budget.max_tries, lo)


def _grow_component_counted(samplers, root_type, max_vertices, parents, types, ranks, j, hi):
    """Depth-first growth with early abort once the type-j count passes hi.

    Returns the final type-j count, or None when aborted/truncated.
    """
    count = 0
    parents.append(-1)
    types.append(root_type)
    ranks.append(0)
    if root_type == j:
        count += 1
    seq = samplers[root_type - 1].draw()
    stack = [(0, seq, 0)] if seq else []
    while stack:
        par, seq, pos = stack[-1]
        if pos == len(seq):
            stack.pop()
            continue
        stack[-1] = (par, seq, pos + 1)
        if len(parents) >= max_vertices:
            return None
        v = len(parents)
        t = seq[pos]
        parents.append(par)
        types.append(t)
        ranks.append(pos + 1)
        if t == j:
            count += 1
            if count > hi:
                return None
        child_seq = samplers[t - 1].draw()
        if child_seq:
            stack.append((v, child_seq, 0))
    return count


def _conditioned_alternating(spec, j, window, budget, root_type, rng):
    """Two-stage exact sampler for alternating geometric specs.

    Stage 1 rejects on the layer-size chain (root layer 1, alternating
    types); stage 2 draws, for each accepted transition m -> k, a uniform
    weak composition of k children among m parents.  For geometric offspring
    every plane tree with the same layer sizes has the same probability, so
    the two stages together realize the exact conditioned law.
    """
    hi = max(window)
    other = 3 - root_type
    p_by_layer = (float(spec.law(root_type).p), float(spec.law(other).p))
    count_parity = 0 if j == root_type else 1
    for _ in range(budget.max_tries):
        layers = [1]
        count = 1 if j == root_type else 0
        ok = True
        while layers[-1] > 0:
            p = p_by_layer[(len(layers) - 1) % 2]
            nxt = int(rng.negative_binomial(layers[-1], 1.0 - p))
            layers.append(nxt)
            if (len(layers) - 1) % 2 == count_parity:
                count += nxt
                if count > hi:
                    ok = False
                    break
        if not ok or count not in window:
            continue
        if layers[-1] == 0:
            layers.pop()
        if sum(layers) > budget.max_vertices:
            continue
        return _materialize_layers(spec, layers, root_type, rng)
    return Exhausted(budget.max_tries, min(window))


def _materialize_layers(spec, layers, root_type, rng):
    """Plane tree from alternating layer sizes via uniform compositions."""
    offsets = np.concatenate(([0], np.cumsum(layers)))
    total = int(offsets[-1])
    parents = np.empty(total, dtype=np.int64)
    ranks = np.empty(total, dtype=np.int64)
    types = np.empty(total, dtype=np.int64)
    parents[0] = -1
    ranks[0] = 0
    for g, m in enumerate(layers):
        types[offsets[g] : offsets[g] + m] = root_type if g % 2 == 0 else 3 - root_type
    for g in range(len(layers) - 1):
        m, k = layers[g], layers[g + 1]
        counts = _uniform_composition(rng, k, m)
        child = offsets[g + 1]
        for l in range(m):
            c = counts[l]
            parents[child : child + c] = offsets[g] + l
            ranks[child : child + c] = np.arange(1, c + 1)
            child += c
    # breadth-first arrays -> depth-first vertex order
    order = _df_order_from_parents(parents)
    inv = np.empty(total, dtype=np.int64)
    inv[order] = np.arange(total)
    df_parents = np.where(parents[order] >= 0, inv[parents[order]], -1)
    return TypedForest.from_arrays(
        df_parents,
        types[order],
        ranks[order],
        d=spec.d,
        kind="tree",
        validate=False,
    )


def _uniform_composition(rng, k: int, m: int) -> np.ndarray:
    """Uniform weak composition of k into m ordered nonnegative parts."""
    if m == 1:
        return np.array([k], dtype=np.int64)
    if k == 0:
        return np.zeros(m, dtype=np.int64)
    bars = np.sort(rng.choice(k + m - 1, size=m - 1, replace=False))
    edges = np.concatenate(([-1], bars, [k + m - 1]))
    return (np.diff(edges) - 1).astype(np.int64)


def _df_order_from_parents(parents: np.ndarray) -> np.ndarray:
    """Preorder of vertex ids for a single tree given parent pointers,
    children kept in their stored (already sorted) order."""
    total = len(parents)
    kids: list[list[int]] = [[] for _ in range(total)]
    for v in range(1, total):
        kids[parents[v]].append(v)
    order = np.empty(total, dtype=np.int64)
    pos = 0
    stack = [0]
    while stack:
        v = stack.pop()
        order[pos] = v
        pos += 1
        stack.extend(reversed(kids[v]))
    return order


def acceptance_window(spec: OffspringSpec, j: int, n: int, tolerance: int) -> set[int]:
    """Reachable targets within the tolerance window (diagnostic helper)."""
    root = spec.root_types[0]
    window = {m for m in range(max(0, n - tolerance), n + tolerance + 1)}
    return window & reachable_counts(spec, root, j, n + tolerance)
