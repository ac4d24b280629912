"""Projection counters and the alternating-tree bijection.

The bijection's law equivalence is checked exactly: pushing every small
tree's probability through the image must reproduce the monotype law
with zero error, which pins the orientation convention for good.
"""

from fractions import Fraction

import numpy as np
import pytest

from mgw.errors import SpecError, StructureError
from mgw.oracle import enumerate_trees, gw_tree_probability, tree_probability
from mgw.projection import (
    collapse_type,
    js_bijection,
    js_inverse,
    nu_offspring,
    project,
)
from mgw.rng import stream
from mgw.sampler import SampleBudget, Truncated, sample_forest, sample_tree
from mgw.trees import TypedForest

HALF = Fraction(1, 2)


def tv(items, d=2, kind="tree"):
    return TypedForest.from_vertices(items, d=d, kind=kind)


def fork():
    # type-1 root, one type-2 child with two type-1 children, plus a
    # second (leaf) type-2 child of the root
    return tv({(): 1, (1,): 2, (1, 1): 1, (1, 2): 1, (2,): 2})


class TestProject:
    def test_hand_example_type1(self):
        out = project(fork(), 1)
        assert out.reduced.kind == "tree"
        assert out.reduced.labels == [(), (1,), (2,)]
        assert np.all(out.reduced.types == 1)
        # both type-2 vertices hang off the surviving root
        assert out.n_counters.tolist() == [[0, 2], [0, 0], [0, 0]]
        assert out.nhat_counters.tolist() == [[0, 0]]

    def test_hand_example_type2(self):
        out = project(fork(), 2)
        assert out.reduced.kind == "forest"
        assert out.reduced.n_components == 2
        # the (1,) subtree contributed its two type-1 children
        assert out.n_counters.tolist() == [[2, 0], [0, 0]]
        # the deleted root has no surviving ancestor
        assert out.nhat_counters.tolist() == [[1, 0]]

    def test_conservation(self, alt):
        for seed in range(25):
            f = sample_forest(alt, 1, 40, rng=stream(21, seed))
            for i in (1, 2):
                out = project(f, i)
                total = len(out.reduced) + out.n_counters.sum() + out.nhat_counters.sum()
                assert total == len(f)
                assert len(out.reduced) == f.type_count(i)
                assert out.nhat_counters.shape == (f.n_components, 2)

    def test_collapse_composition(self, alt):
        for seed in range(10):
            f = sample_forest(alt, 1, 30, rng=stream(22, seed))
            for i in (1, 2):
                assert collapse_type(f, 3 - i) == project(f, i).reduced

    def test_df_order_preserved(self):
        out = project(fork(), 1)
        # survivors keep their relative depth-first order
        assert out.reduced.labels == sorted(out.reduced.labels)

    def test_projection_of_forest_with_lone_component(self):
        f = tv({(1,): 2, (2,): 1}, kind="forest")
        out = project(f, 1)
        assert out.reduced.n_components == 1
        assert out.nhat_counters.tolist() == [[0, 1], [0, 0]]

    def test_errors(self):
        t = fork()
        with pytest.raises(StructureError):
            project(t, 3)
        with pytest.raises(StructureError):
            collapse_type(t, 0)
        with pytest.raises(StructureError):
            collapse_type(tv({(): 1}, d=1), 1)
        only_ones = tv({(): 1, (1,): 1})
        with pytest.raises(StructureError):
            collapse_type(only_ones, 1)


class TestBijection:
    def nu(self, terms=10):
        # image law: 1/2 at zero, then the type-2 geometric shifted up
        return list(nu_offspring(HALF, [HALF ** (k + 1) for k in range(terms)]))

    def test_nu_head(self):
        assert self.nu(3) == [HALF, Fraction(1, 4), Fraction(1, 8), Fraction(1, 16)]
        with pytest.raises(SpecError):
            nu_offspring(Fraction(3, 2), [HALF])

    def test_three_vertex_path(self):
        t = tv({(): 1, (1,): 2, (1, 1): 1})
        img = js_bijection(t)
        assert img.d == 1 and len(img) == 3
        assert img.child_counts.tolist() == [2, 0, 0]
        assert js_inverse(img) == t

    def test_structure_rules(self, alt):
        for seed in range(40):
            t = sample_tree(alt, 1, budget=SampleBudget(max_vertices=500), rng=stream(23, seed))
            if isinstance(t, Truncated):
                continue
            img = js_bijection(t)
            assert len(img) == len(t)
            # type-1 vertices map to leaves, type-2 vertices gain a child
            n_leaves = int((img.child_counts == 0).sum())
            assert n_leaves == t.type_count(1)
            assert sorted(img.child_counts[img.child_counts > 0] - 1) == sorted(
                t.child_counts[t.types == 2]
            )
            assert js_inverse(img) == t

    def test_exact_law_equivalence(self, alt):
        # the push-forward of every positive-probability tree up to 7
        # vertices must match the monotype law with zero error
        nu = self.nu()
        law = enumerate_trees(alt, 1, 7)
        images = set()
        for t, p in law.entries:
            img = js_bijection(t)
            key = img.to_text()
            assert key not in images
            images.add(key)
            assert gw_tree_probability(nu, img) == p

    def test_inverse_law_equivalence(self, alt):
        # same check through the inverse: every small monotype tree
        # pulls back to an alternating tree of equal probability
        from mgw.oracle import enumerate_plane_trees

        nu = self.nu()
        for g in enumerate_plane_trees(6):
            t = js_inverse(g)
            assert js_bijection(t) == g
            assert tree_probability(alt, t) == gw_tree_probability(nu, g)

    def test_rejects_bad_input(self):
        with pytest.raises(StructureError):
            js_bijection(tv({(): 2}))
        with pytest.raises(StructureError):
            js_bijection(tv({(): 1, (1,): 1}))
        with pytest.raises(StructureError):
            js_bijection(tv({(1,): 1, (2,): 2}, kind="forest"))
        with pytest.raises(StructureError):
            js_inverse(tv({(1,): 1}, d=1, kind="forest"))
