"""Type-erasing projections and the alternating-tree bijection.

`project` keeps only type-i vertices and rewires each survivor to its
nearest surviving ancestor, preserving depth-first order; the vertices
deleted along the way are attributed either to the reduced vertex above
them (N counters) or, when no type-i vertex lies above, to their forest
component (Nhat counters).  `collapse_type` removes one type the same way;
composing collapses over all other types reproduces `project`.

`js_bijection` sends an alternating two-type tree rooted at type 1 to a
monotype plane tree of the same size in which every type-1 vertex becomes
a leaf and every type-2 vertex with k children becomes a vertex with k+1
children.  The local orientation (where a vertex's continuation edge sits
among its image children) is fixed here as: continuation last.  That choice
is pinned by the exact law-equivalence tests; `js_inverse` undoes it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import SpecError, StructureError
from .trees import TypedForest

__all__ = [
    "ProjectionOutput",
    "project",
    "collapse_type",
    "js_bijection",
    "js_inverse",
    "nu_offspring",
]


@dataclass(frozen=True)
class ProjectionOutput:
    """Result of projecting onto one type.

    n_counters[r, j-1] counts deleted type-j vertices whose nearest
    surviving ancestor is reduced vertex r; nhat_counters[c, j-1] counts
    deleted type-j vertices of component c with no surviving ancestor.
    """

    reduced: TypedForest
    n_counters: np.ndarray
    nhat_counters: np.ndarray


def _nearest_marked_ancestor_or_self(f: TypedForest, marked: np.ndarray) -> np.ndarray:
    """anchor[v] = v if marked else the nearest marked strict ancestor (-1
    if none).  Computed level by level so each depth is one vectorized step.
    """
    n = len(f)
    depths = f.depths
    parents = f.parents
    anchor = np.full(n, -1, dtype=np.int64)
    order = np.argsort(depths, kind="stable")
    sorted_depths = depths[order]
    # level boundaries inside the sorted permutation
    bounds = np.searchsorted(sorted_depths, np.arange(sorted_depths[-1] + 2))
    idx_self = np.arange(n, dtype=np.int64)
    for lev in range(len(bounds) - 1):
        idx = order[bounds[lev] : bounds[lev + 1]]
        if len(idx) == 0:
            continue
        par = parents[idx]
        inherited = np.where(par >= 0, anchor[par], -1)
        anchor[idx] = np.where(marked[idx], idx_self[idx], inherited)
    return anchor


def _sibling_ranks(new_parents: np.ndarray, kind: str) -> np.ndarray:
    """Consecutive 1-based ranks per parent (roots get component numbers,
    or 0 for the root of a tree), respecting stored order."""
    m = len(new_parents)
    ranks = np.empty(m, dtype=np.int64)
    order = np.argsort(new_parents, kind="stable")
    sp = new_parents[order]
    pos = np.arange(m, dtype=np.int64)
    new_group = np.ones(m, dtype=bool)
    new_group[1:] = sp[1:] != sp[:-1]
    group_start = np.maximum.accumulate(np.where(new_group, pos, 0))
    ranks[order] = pos - group_start + 1
    if kind == "tree":
        ranks[new_parents == -1] = 0
    return ranks


def _rewire(f: TypedForest, keep: np.ndarray, kind: str, d: int) -> TypedForest:
    """Forest on the kept vertices, each wired to its nearest kept ancestor."""
    anchor = _nearest_marked_ancestor_or_self(f, keep)
    survivors = np.flatnonzero(keep)
    m = len(survivors)
    new_index = np.full(len(f), -1, dtype=np.int64)
    new_index[survivors] = np.arange(m)
    par = f.parents[survivors]
    anc = np.where(par >= 0, anchor[par], -1)
    new_parents = np.where(anc >= 0, new_index[np.maximum(anc, 0)], -1)
    new_ranks = _sibling_ranks(new_parents, kind)
    return TypedForest.from_arrays(
        new_parents,
        f.types[survivors],
        new_ranks,
        d=d,
        kind=kind,
        validate=False,
    )


def project(f: TypedForest, i: int) -> ProjectionOutput:
    """Keep type-i vertices, rewire to nearest surviving ancestors, count
    the deleted vertices.

    The reduced forest is a tree exactly when f is a tree rooted at type i;
    otherwise its components are the type-i vertices with no type-i strict
    ancestor, in depth-first order.
    """
    if i < 1 or i > f.d:
        raise StructureError(f"type {i} outside 1..{f.d}")
    marked = f.types == i
    anchor = _nearest_marked_ancestor_or_self(f, marked)
    kind = "tree" if (f.kind == "tree" and f.types[0] == i) else "forest"
    reduced = _rewire(f, marked, kind, f.d)
    survivors = np.flatnonzero(marked)
    new_index = np.full(len(f), -1, dtype=np.int64)
    new_index[survivors] = np.arange(len(survivors))

    n_counters = np.zeros((len(survivors), f.d), dtype=np.int64)
    n_comp = f.n_components if f.kind == "forest" else 1
    nhat_counters = np.zeros((n_comp, f.d), dtype=np.int64)
    deleted = np.flatnonzero(~marked)
    if len(deleted):
        par = f.parents[deleted]
        owner = np.where(par >= 0, anchor[np.maximum(par, 0)], -1)
        jcols = f.types[deleted] - 1
        owned = owner >= 0
        np.add.at(n_counters, (new_index[owner[owned]], jcols[owned]), 1)
        comps = f.component_of[deleted[~owned]] - 1 if f.kind == "forest" else np.zeros(
            int((~owned).sum()), dtype=np.int64
        )
        np.add.at(nhat_counters, (comps, jcols[~owned]), 1)
    return ProjectionOutput(reduced, n_counters, nhat_counters)


def collapse_type(f: TypedForest, k: int) -> TypedForest:
    """Delete type-k vertices, rewiring survivors to their nearest surviving
    ancestors; type labels and the declared d are kept."""
    if f.d < 2:
        raise StructureError("collapse needs at least two types")
    if k < 1 or k > f.d:
        raise StructureError(f"type {k} outside 1..{f.d}")
    keep = f.types != k
    if not keep.any():
        raise StructureError("collapse would delete every vertex")
    kind = "tree" if (f.kind == "tree" and f.types[0] != k) else "forest"
    return _rewire(f, keep, kind, f.d)


# ---------------------------------------------------------------------------
# Alternating-tree bijection
# ---------------------------------------------------------------------------


def _check_alternating_tree(t: TypedForest) -> None:
    if t.kind != "tree":
        raise StructureError("bijection expects a single tree")
    if t.d != 2:
        raise StructureError("bijection expects a two-type tree")
    if t.types[0] != 1:
        raise StructureError("bijection expects a type-1 root")
    want = np.where(t.depths % 2 == 0, 1, 2)
    if not np.array_equal(t.types, want):
        raise StructureError("tree does not alternate types by level")


def _children_lists(t: TypedForest) -> list[list[int]]:
    kids: list[list[int]] = [[] for _ in range(len(t))]
    for v in range(1, len(t)):
        kids[t.parents[v]].append(v)
    return kids


def js_bijection(t: TypedForest) -> TypedForest:
    """Monotype image of an alternating type-1-rooted tree.

    Per type-1 vertex u with type-2 children b_1..b_k: u's subtree hangs
    off the chain b_1 -> b_2 -> ... -> b_k -> u, attached under u's parent;
    each type-2 vertex's image children are the anchors of its own type-1
    children (the child's first type-2 child, or the child itself when it
    has none) followed by its continuation edge, last.
    """
    _check_alternating_tree(t)
    n = len(t)
    kids = _children_lists(t)
    image_kids: list[list[int]] = [[] for _ in range(n)]
    # anchors first: a type-2 vertex adopts one image child per type-1 child
    for b in range(n):
        if t.types[b] != 2:
            continue
        for w in kids[b]:
            anchor = kids[w][0] if kids[w] else w
            image_kids[b].append(anchor)
    # then continuation edges along each type-1 vertex's child chain
    root_img = 0
    for u in range(n):
        if t.types[u] != 1:
            continue
        bs = kids[u]
        for left, right in zip(bs, bs[1:]):
            image_kids[left].append(right)
        if bs:
            image_kids[bs[-1]].append(u)
        if u == 0:
            root_img = bs[0] if bs else u
    return _tree_from_children(root_img, image_kids)


def _tree_from_children(root: int, kids: list[list[int]]) -> TypedForest:
    n = len(kids)
    parents = np.empty(n, dtype=np.int64)
    ranks = np.empty(n, dtype=np.int64)
    order: list[int] = []
    new_index = np.full(n, -1, dtype=np.int64)
    stack = [(root, -1, 0)]
    while stack:
        v, par_new, rank = stack.pop()
        my = len(order)
        new_index[v] = my
        order.append(v)
        parents[my] = par_new
        ranks[my] = rank
        for pos in range(len(kids[v]) - 1, -1, -1):
            stack.append((kids[v][pos], my, pos + 1))
    if len(order) != n:
        raise StructureError("image edges do not span the tree")
    return TypedForest.from_arrays(
        parents,
        np.ones(n, dtype=np.int64),
        ranks,
        d=1,
        kind="tree",
        validate=False,
    )


def js_inverse(g: TypedForest) -> TypedForest:
    """Alternating preimage: leaves become type-1 vertices, internal
    vertices type-2; follows continuation-last chains back to owners."""
    if g.kind != "tree":
        raise StructureError("bijection expects a single tree")
    n = len(g)
    kids = _children_lists(g)

    def owner(v: int) -> int:
        # walk last-child edges from an internal vertex down to the type-1
        # vertex that owns its chain
        while kids[v]:
            v = kids[v][-1]
        return v

    type_kids: list[list[int]] = [[] for _ in range(n)]
    if kids[0]:
        root = owner(0)
        chain_heads = [(root, 0)]
    else:
        root = 0
        chain_heads = []
    # peel chains: (white w, first black of w's chain)
    pending = chain_heads
    while pending:
        w, head = pending.pop()
        chain = []
        v = head
        while v != w:
            chain.append(v)
            v = kids[v][-1]
        type_kids[w] = chain
        for b in chain:
            whites = []
            for c in kids[b][:-1]:
                u = owner(c) if kids[c] else c
                whites.append(u)
                if kids[c]:
                    pending.append((u, c))
            type_kids[b] = whites
    t = _tree_from_children(root, type_kids)
    depths = t.depths
    types = np.where(depths % 2 == 0, 1, 2).astype(np.int64)
    out = TypedForest.from_arrays(
        t.parents, types, t.child_ranks, d=2, kind="tree", validate=False
    )
    return out


def nu_offspring(p, mu2) -> tuple:
    """Offspring law of the bijection image: mass 1-p at zero, then the
    type-2 law shifted up by one (a vertex with k children maps to one with
    k+1).  Accepts a pmf by index; preserves exact arithmetic."""
    if not (0 < p < 1):
        raise SpecError("p must lie in (0, 1)")
    one = Fraction(1) if isinstance(p, Fraction) else 1.0
    return (one - p, *[p * m for m in mu2])
