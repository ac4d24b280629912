"""Sampler law checks against the exact oracles, plus budget behavior.

Monte Carlo assertions use fixed seeds and tolerances of at least four
standard errors, so they are deterministic in practice and would only
move if the stream derivation or the samplers changed.
"""

from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from mgw.errors import SpecError, SupportError
from mgw.offspring import FiniteTable, Geometric, OffspringSpec, reduced_offspring_exact
from mgw.oracle import enumerate_trees, otter_dwass
from mgw.rng import stream
from mgw.sampler import (
    Exhausted,
    SampleBudget,
    Truncated,
    height_reach_block,
    reachable_counts,
    sample_conditioned,
    sample_forest,
    sample_height_reach,
    sample_tree,
    sample_trees,
    type_count_block,
    upsilon_block,
)
from mgw.trees import component_index

HALF = Fraction(1, 2)


def binary_spec():
    return OffspringSpec(
        (FiniteTable.from_dict({(0,): HALF, (2,): HALF}),), (2.0,)
    )


class TestSampleTree:
    def test_deterministic(self, alt):
        a = sample_tree(alt, 1, rng=stream(11, 0))
        b = sample_tree(alt, 1, rng=stream(11, 0))
        assert a == b

    def test_types_alternate(self, alt):
        t = sample_tree(alt, 1, rng=stream(5, 1))
        for k in range(len(t)):
            assert t.types[k] == (1 if t.depths[k] % 2 == 0 else 2)

    def test_supercritical_refused(self):
        hot = OffspringSpec(
            (Geometric(Fraction(2, 3), 2), Geometric(Fraction(2, 3), 1)),
            (2.0, 2.0),
        )
        with pytest.raises(SpecError):
            sample_tree(hot, 1)

    def test_truncation_outcome(self):
        spec = binary_spec()
        outcomes = {
            type(sample_tree(spec, 1, budget=SampleBudget(max_vertices=1, seed=s)))
            for s in range(12)
        }
        assert outcomes == {Truncated, type(sample_tree(spec, 1, rng=stream(0)))}
        out = sample_tree(spec, 1, budget=SampleBudget(max_vertices=0))
        assert isinstance(out, Truncated)
        assert out.placed == 0 and out.limit == 0 and "cap" in out.reason

    def test_small_tree_frequencies(self, alt):
        # exact law: P(leaf) = 1/2, P(2-path) = 1/8, each 3-vertex
        # shape 1/32; 20000 draws, tolerances ~5 binomial SE.  The
        # vertex cap only discards trees too large to matter here.
        counts = Counter()
        budget = SampleBudget(max_vertices=6)
        for t in sample_trees(alt, 1, 20000, budget=budget, rng=stream(2024, 0)):
            if not isinstance(t, Truncated) and len(t) <= 3:
                counts[t.to_text()] += 1
        n = 20000
        assert counts[":1\n"] / n == pytest.approx(0.5, abs=0.018)
        assert counts[":1\n1:2\n"] / n == pytest.approx(1 / 8, abs=0.012)
        assert counts[":1\n1:2\n1.1:1\n"] / n == pytest.approx(1 / 32, abs=0.007)
        assert counts[":1\n1:2\n2:2\n"] / n == pytest.approx(1 / 32, abs=0.007)


class TestSampleForest:
    def test_reaches_minimum_with_complete_components(self, alt):
        f = sample_forest(alt, 1, 50, rng=stream(3, 0))
        assert f.kind == "forest"
        assert len(f) >= 50
        last = int(np.sum(f.component_of == f.n_components))
        assert len(f) - last < 50

    def test_root_type_cycle(self, table):
        f = sample_forest(table, (1, 2), 30, rng=stream(4, 0))
        roots = np.flatnonzero(f.parents == -1)
        expected = [1 if k % 2 == 0 else 2 for k in range(len(roots))]
        assert f.types[roots].tolist() == expected

    def test_single_component_even_if_huge(self, alt):
        # n_min = 0 still yields one complete component
        f = sample_forest(alt, 1, 0, rng=stream(5, 0))
        assert f.n_components == 1


class TestPopulationBlocks:
    def test_height_reach_matches_closed_form(self, mono):
        # geometric(1/2): P(generation h nonempty) = 1/(h+1)
        alive = height_reach_block(mono, 1, 4, 4000, stream(6, 0))
        assert alive.mean() == pytest.approx(1 / 5, abs=0.032)

    def test_single_replica_variant(self, mono):
        assert sample_height_reach(mono, 1, 0, rng=stream(7, 0)) is True
        vals = {sample_height_reach(mono, 1, 3, rng=stream(7, k)) for k in range(20)}
        assert vals == {True, False}

    def test_type_count_censoring_and_tail(self, mono):
        target = 8
        vals = type_count_block(mono, 1, 1, target, 20000, stream(8, 0))
        assert vals.min() >= 1 and vals.max() <= target
        # exact: P(#T >= 8) = 1 - sum_{n<8} P(#T = n)
        head = sum(otter_dwass(Geometric(HALF, 1), n)[0] for n in range(1, 8))
        tail = float(1 - head)
        assert (vals >= 8).mean() == pytest.approx(tail, abs=0.015)

    def test_upsilon_block_matches_forest_walk(self, alt):
        # the capped replicas (a ~1% minority) are dropped from the
        # direct walk; the induced bias is far below the tolerance
        n = 6
        block = upsilon_block(alt, 1, n, 20000, stream(9, 0))
        budget = SampleBudget(max_vertices=20000)
        direct = []
        for k in range(2000):
            f = sample_forest(alt, 1, n + 1, budget=budget, rng=stream(10, k))
            if not isinstance(f, Truncated):
                direct.append(component_index(f, n))
        direct = np.array(direct)
        assert len(direct) > 1900
        assert block.min() >= 1
        top = int(max(block.max(), direct.max()))
        for v in range(1, top + 1):
            assert abs((block == v).mean() - (direct == v).mean()) < 0.05


class TestReachability:
    def test_binary_parity(self):
        assert reachable_counts(binary_spec(), 1, 1, 9) == {1, 3, 5, 7, 9}

    def test_alternating_counts(self, alt):
        assert reachable_counts(alt, 1, 1, 4) == {1, 2, 3, 4}
        assert reachable_counts(alt, 1, 2, 4) == {0, 1, 2, 3, 4}


class TestConditioned:
    def test_exact_type_count(self, alt):
        for n in (1, 3, 7):
            t = sample_conditioned(alt, 1, n, rng=stream(11, n))
            assert t.type_count(1) == n

    def test_tolerance_window(self, alt):
        t = sample_conditioned(alt, 2, 10, tolerance=2, rng=stream(12, 0))
        assert 8 <= t.type_count(2) <= 12

    def test_unreachable_raises_support_error(self):
        with pytest.raises(SupportError, match="period 2"):
            sample_conditioned(binary_spec(), 1, 4)

    def test_exhausted(self, table):
        out = sample_conditioned(
            table, 1, 40, budget=SampleBudget(max_tries=3, seed=1)
        )
        assert out == Exhausted(tries=3, target=40)

    def test_law_matches_enumeration(self, alt):
        # conditional law of T given #T^(1) = 2: enumerate everything
        # up to 12 vertices and divide by the exact event probability,
        # which equals P(total reduced progeny = 2) = mu(1) mu(0)^2 ...
        # computed via the size identity on the reduced law
        mu = {k: c for k, c in enumerate(reduced_offspring_exact(alt, 1, 30))}
        denom = otter_dwass(mu, 2)[0]
        assert denom == Fraction(2, 27)
        law = enumerate_trees(alt, 1, 12)
        cond = {
            t.to_text(): p / denom for t, p in law.entries if t.type_count(1) == 2
        }
        deficit = float(1 - sum(cond.values()))
        assert 0 <= deficit < 0.01

        n_draws = 3000
        freq = Counter(
            sample_conditioned(alt, 1, 2, rng=stream(13, k)).to_text()
            for k in range(n_draws)
        )
        for text, p in sorted(cond.items(), key=lambda kv: -kv[1])[:6]:
            se = float(np.sqrt(float(p) * (1 - float(p)) / n_draws))
            assert freq[text] / n_draws == pytest.approx(
                float(p), abs=5 * se + deficit
            )

    def test_two_pipelines_agree(self, alt):
        # the fast layered sampler and plain rejection target the same
        # law; compare size distributions at a small target
        from mgw.sampler import _conditioned_rejection, _samplers

        fast = np.array(
            [len(sample_conditioned(alt, 1, 3, rng=stream(14, k))) for k in range(1500)]
        )
        budget = SampleBudget()
        slow = np.array(
            [
                len(_conditioned_rejection(alt, 1, {3}, budget, 1, stream(15, k)))
                for k in range(800)
            ]
        )
        assert abs(fast.mean() - slow.mean()) < 0.4
        for size in (5, 7, 9):
            assert abs((fast == size).mean() - (slow == size).mean()) < 0.06

    def test_non_alternating_non_table_rejected(self, heavy):
        spec = OffspringSpec(
            (Geometric(HALF, 1), Geometric(HALF, 2)), (2.0, 2.0), root_types=(1, 2)
        )
        with pytest.raises(SpecError):
            sample_conditioned(spec, 1, 3)


class TestBudgets:
    def test_budget_validation(self):
        with pytest.raises(SpecError):
            SampleBudget(max_vertices=-1)
        with pytest.raises(SpecError):
            SampleBudget(max_tries=0)
