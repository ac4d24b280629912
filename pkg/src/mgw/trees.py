"""Ulam-Harris labels, typed plane trees/forests, and per-forest series.

Labels are plain tuples of positive integers; the empty tuple is the
root of a tree.  Python's tuple ordering is exactly the depth-first
(lexicographic, prefix-first) order on labels, so sorted vertex sets
are already in traversal order.

A :class:`TypedForest` stores its vertices in depth-first order as
parallel arrays (parent index, type, child rank).  Labels are
materialized only on demand; the array form is what the samplers and
the projection operators work on, and it stays compact for forests
with millions of vertices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import StructureError

Label = tuple[int, ...]

ROOT: Label = ()


def label_parent(u: Label) -> Label:
    """Drop the last letter.  The root has no parent."""
    if not u:
        raise StructureError("the empty label has no parent")
    return u[:-1]


def is_prefix(u: Label, v: Label) -> bool:
    """True when u is an ancestor-or-self prefix of v."""
    return v[: len(u)] == u


def format_label(u: Label) -> str:
    """Dot-separated letters; the empty label renders as ''."""
    return ".".join(str(k) for k in u)


def parse_label(text: str) -> Label:
    if text == "":
        return ()
    try:
        parts = tuple(int(k) for k in text.split("."))
    except ValueError as exc:
        raise StructureError(f"bad label {text!r}") from exc
    if any(k < 1 for k in parts):
        raise StructureError(f"label letters must be positive: {text!r}")
    return parts


@dataclass(frozen=True)
class HeightSeries:
    """Heights along the depth-first traversal.

    ``mode`` records the convention: "forest" measures from each
    component root (first value of every component is 0), "tree"
    measures from the root of a single tree (also 0 there; the two
    conventions differ by how the underlying labels are rooted, not
    by an offset inside this container).
    """

    values: np.ndarray
    mode: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.int64))
        self.values.flags.writeable = False

    def __len__(self) -> int:
        return len(self.values)


def _as_readonly(arr, dtype=np.int64) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class TypedForest:
    """Plane forest (or tree) with a type mark in ``1..d`` per vertex.

    Vertices are stored in depth-first order.  ``parents[k]`` is the
    storage index of the parent of vertex k, or -1 for a component
    root.  ``child_ranks[k]`` is the 1-based position of k among its
    siblings; for roots it holds the component number (and 0 for the
    root of a tree, whose label is the empty word).

    ``kind`` is "tree" (single component rooted at the empty label)
    or "forest" (components rooted at labels 1..k).
    """

    parents: np.ndarray
    types: np.ndarray
    child_ranks: np.ndarray
    d: int
    kind: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", _as_readonly(self.parents))
        object.__setattr__(self, "types", _as_readonly(self.types))
        object.__setattr__(self, "child_ranks", _as_readonly(self.child_ranks))

    # -- construction ------------------------------------------------

    @classmethod
    def from_arrays(
        cls,
        parents,
        types,
        child_ranks,
        d: int,
        kind: str,
        validate: bool = True,
        depths=None,
    ) -> "TypedForest":
        f = cls(parents, types, child_ranks, int(d), kind)
        if depths is not None:
            f.__dict__["depths"] = _as_readonly(depths)
        if validate:
            f._validate()
        return f

    @classmethod
    def from_vertices(cls, items, d: int | None = None, kind: str | None = None) -> "TypedForest":
        """Build from ``{label: type}`` (or an iterable of pairs).

        Validates the closure condition: every non-root label needs its
        parent present, and every label ending in i > 1 needs the
        sibling ending in i - 1.
        """
        type_of = dict(items)
        if not type_of:
            raise StructureError("empty vertex set")
        for u in type_of:
            if not isinstance(u, tuple) or any(not isinstance(k, int) or k < 1 for k in u):
                raise StructureError(f"bad label {u!r}")
        if kind is None:
            kind = "tree" if ROOT in type_of else "forest"
        if kind == "tree" and ROOT not in type_of:
            raise StructureError("a tree must contain the empty label")
        if kind == "forest" and ROOT in type_of:
            raise StructureError("a forest must not contain the empty label")

        order = sorted(type_of)
        index = {u: k for k, u in enumerate(order)}
        n = len(order)
        parents = np.empty(n, dtype=np.int64)
        ranks = np.empty(n, dtype=np.int64)
        tvals = np.empty(n, dtype=np.int64)
        for k, u in enumerate(order):
            tvals[k] = type_of[u]
            if u == ROOT:
                parents[k], ranks[k] = -1, 0
                continue
            last = u[-1]
            if last > 1 and u[:-1] + (last - 1,) not in type_of:
                raise StructureError(f"missing sibling of {u}")
            p = u[:-1]
            if p == ROOT and kind == "forest":
                parents[k], ranks[k] = -1, last
            else:
                if p not in type_of:
                    raise StructureError(f"missing parent of {u}")
                parents[k], ranks[k] = index[p], last

        if d is None:
            d = int(tvals.max())
        f = cls.from_arrays(parents, tvals, ranks, d, kind, validate=False)
        f._validate()
        return f

    # -- invariants ----------------------------------------------------

    def _validate(self) -> None:
        n = len(self)
        if n == 0:
            raise StructureError("empty forest")
        if self.kind not in ("tree", "forest"):
            raise StructureError(f"unknown kind {self.kind!r}")
        if self.d < 1:
            raise StructureError("d must be >= 1")
        par, rk, ty = self.parents, self.child_ranks, self.types
        if ty.min() < 1 or ty.max() > self.d:
            raise StructureError("vertex type out of range")
        roots = np.flatnonzero(par == -1)
        if self.kind == "tree":
            if len(roots) != 1 or roots[0] != 0 or rk[0] != 0:
                raise StructureError("a tree has a single root stored first")
        else:
            if not np.array_equal(rk[roots], np.arange(1, len(roots) + 1)):
                raise StructureError("forest components must be numbered 1..k in order")
        nonroot = par != -1
        if np.any(par[nonroot] >= np.flatnonzero(nonroot)) or np.any(par < -1):
            raise StructureError("parents must precede children in storage")
        if np.any(rk[nonroot] < 1):
            raise StructureError("child ranks must be positive")
        # storage must be the depth-first order; tuple labels check it exactly
        labs = self.labels
        if any(labs[k] >= labs[k + 1] for k in range(n - 1)):
            raise StructureError("vertices are not in depth-first order")
        # ranks must be consecutive per parent in encounter order
        seen = np.zeros(n + 1, dtype=np.int64)
        root_seen = 0
        for k in range(n):
            p = par[k]
            if p == -1:
                if self.kind == "forest":
                    root_seen += 1
                    if rk[k] != root_seen:
                        raise StructureError("component numbers must be consecutive")
                continue
            seen[p] += 1
            if rk[k] != seen[p]:
                raise StructureError(f"child ranks of parent {p} are not consecutive")

    # -- basic accessors -----------------------------------------------

    def __len__(self) -> int:
        return len(self.parents)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TypedForest):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.d == other.d
            and np.array_equal(self.parents, other.parents)
            and np.array_equal(self.types, other.types)
            and np.array_equal(self.child_ranks, other.child_ranks)
        )

    __hash__ = None  # type: ignore[assignment]

    @cached_property
    def depths(self) -> np.ndarray:
        """Edge distance to the component root (0 at roots)."""
        par = self.parents.tolist()
        out = [0] * len(par)
        for k, p in enumerate(par):
            if p >= 0:
                out[k] = out[p] + 1
        return _as_readonly(out)

    @cached_property
    def labels(self) -> list[Label]:
        par = self.parents.tolist()
        rk = self.child_ranks.tolist()
        out: list[Label] = [()] * len(par)
        for k, p in enumerate(par):
            if p == -1:
                out[k] = () if self.kind == "tree" else (rk[k],)
            else:
                out[k] = out[p] + (rk[k],)
        return out

    @cached_property
    def label_index(self) -> dict[Label, int]:
        return {u: k for k, u in enumerate(self.labels)}

    @cached_property
    def child_counts(self) -> np.ndarray:
        """c(u): number of children of each vertex."""
        par = self.parents
        return _as_readonly(np.bincount(par[par >= 0], minlength=len(self)))

    @cached_property
    def typed_child_counts(self) -> np.ndarray:
        """(n, d) array: column j-1 holds the number of type-j children."""
        out = np.zeros((len(self), self.d), dtype=np.int64)
        mask = self.parents >= 0
        np.add.at(out, (self.parents[mask], self.types[mask] - 1), 1)
        out.flags.writeable = False
        return out

    @cached_property
    def component_of(self) -> np.ndarray:
        """1-based component number of each vertex."""
        return _as_readonly(np.cumsum(self.parents == -1))

    @property
    def n_components(self) -> int:
        return int((self.parents == -1).sum())

    def type_count(self, i: int) -> int:
        self._check_type(i)
        return int(np.count_nonzero(self.types == i))

    def index_of(self, u: Label) -> int:
        try:
            return self.label_index[u]
        except KeyError:
            raise StructureError(f"label {format_label(u) or 'root'} not in forest") from None

    def _check_type(self, i: int) -> None:
        if not 1 <= i <= self.d:
            raise StructureError(f"type {i} out of range 1..{self.d}")

    def _subtree_span(self, k: int) -> int:
        """End of the contiguous storage block holding the subtree at k."""
        depths = self.depths
        rest = depths[k + 1 :]
        beyond = np.flatnonzero(rest <= depths[k])
        return k + 1 + (int(beyond[0]) if len(beyond) else len(rest))

    # -- serialization ---------------------------------------------------

    def to_text(self) -> str:
        """One "label:type" line per vertex, in depth-first order."""
        ty = self.types.tolist()
        lines = [f"{format_label(u)}:{t}" for u, t in zip(self.labels, ty)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, d: int | None = None) -> "TypedForest":
        items: dict[Label, int] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            head, sep, tail = line.rpartition(":")
            if not sep:
                raise StructureError(f"bad vertex line {line!r}")
            u = parse_label(head)
            if u in items:
                raise StructureError(f"duplicate vertex {line!r}")
            try:
                items[u] = int(tail)
            except ValueError as exc:
                raise StructureError(f"bad type in {line!r}") from exc
        return cls.from_vertices(items, d=d)


# -- traversal series -------------------------------------------------


def depth_first_order(f: TypedForest) -> list[Label]:
    """All vertices as labels, sorted by the lexicographic order."""
    return list(f.labels)


def height_process(f: TypedForest, mode: str) -> HeightSeries:
    """Heights of the depth-first vertex sequence.

    Forest mode measures |u| - 1 on a forest (component roots at
    height 0); tree mode measures |u| on a single tree rooted at the
    empty label.  Both coincide with the stored edge-depths; the mode
    argument only selects which shape of input is legal.
    """
    if mode not in ("tree", "forest"):
        raise StructureError(f"unknown height mode {mode!r}")
    if mode != f.kind:
        raise StructureError(f"{mode}-mode height on a {f.kind}")
    return HeightSeries(f.depths, mode)


def component_index_series(f: TypedForest) -> np.ndarray:
    """Upsilon: component number of the n-th depth-first vertex."""
    if f.kind != "forest":
        raise StructureError("component index is a forest-mode series")
    return f.component_of


def component_index(f: TypedForest, n: int) -> int:
    """Upsilon at a single position; past the end it is the component count."""
    ups = component_index_series(f)
    if n < 0:
        raise StructureError("negative position")
    return int(ups[n]) if n < len(ups) else f.n_components


def lambda_series(f: TypedForest, i: int) -> np.ndarray:
    """Lambda_i(n): type-i vertices among the first n+1 in depth-first order."""
    f._check_type(i)
    return np.cumsum(f.types == i, dtype=np.int64)


def g_series(f: TypedForest, i: int) -> np.ndarray:
    """G_i(n): vertices strictly before the (n+1)-th type-i vertex.

    The returned array has length (number of type-i vertices) + 1; its
    last entry is the conventional G_i(#f^(i)) = #f.
    """
    f._check_type(i)
    positions = np.flatnonzero(f.types == i)
    return np.concatenate([positions, [len(f)]]).astype(np.int64)


def ancestor_type_count(f: TypedForest, u: Label, i: int) -> int:
    """Number of strict ancestors of u having type i (u itself excluded)."""
    f._check_type(i)
    k = f.index_of(u)
    par, ty = f.parents, f.types
    count = 0
    p = par[k]
    while p != -1:
        if ty[p] == i:
            count += 1
        p = par[p]
    return count


def subtree(f: TypedForest, u: Label) -> TypedForest:
    """The subtree rooted at u, re-rooted as a tree at the empty label."""
    k = f.index_of(u)
    end = f._subtree_span(k)
    parents = f.parents[k:end] - k
    ranks = f.child_ranks[k:end].copy()
    parents = parents.copy()
    parents[0], ranks[0] = -1, 0
    return TypedForest.from_arrays(
        parents, f.types[k:end], ranks, f.d, "tree", validate=False,
        depths=f.depths[k:end] - f.depths[k],
    )


def prune(f: TypedForest, u: Label) -> TypedForest:
    """Remove the strict descendants of u, keeping u itself."""
    k = f.index_of(u)
    end = f._subtree_span(k)
    gap = end - (k + 1)
    keep = np.concatenate([np.arange(0, k + 1), np.arange(end, len(f))])
    parents = f.parents[keep].copy()
    parents[parents > k] -= gap
    return TypedForest.from_arrays(
        parents, f.types[keep], f.child_ranks[keep], f.d, f.kind, validate=False,
        depths=f.depths[keep],
    )
