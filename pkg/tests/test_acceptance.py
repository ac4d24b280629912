"""Full-scale verification matrix.

Each class checks one advertised guarantee of the library at its stated
sample size and tolerance. The expensive Monte Carlo runs are shared
module fixtures, so the whole module costs a few minutes, dominated by
the two n = 1e5 forest ensembles.

One check is expected to fail honestly: the height-coupling statistic
for size-conditioned trees converges too slowly for its pinned
tolerance at n = 200 (see the ancestor-count row of the same report,
which isolates the slow term; notes/decisions.md in the work log has
the full decomposition).
"""

import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from mgw.experiments import (
    EXPERIMENTS,
    conditioned_profile,
    height_coupling,
    max_height_tail,
    nij_moments,
    size_tail_exponent,
    types_convergence,
    upsilon_scaling,
)
from mgw.offspring import (
    Geometric,
    limit_constants,
    mean_matrix,
    reduced_offspring_exact,
    spectral,
)
from mgw.oracle import (
    enumerate_plane_trees,
    enumerate_trees,
    gw_tree_probability,
    otter_dwass,
    reduced_pmf_by_convolution,
)
from mgw.projection import js_bijection, nu_offspring, project
from mgw.rng import stream
from mgw.sampler import SampleBudget, Truncated, sample_trees

HALF = Fraction(1, 2)


# ---------------------------------------------------------------------------
# shared full-scale runs


@pytest.fixture(scope="module")
def types_report(alt):
    return types_convergence(alt, n=10**5, replicas=50, seed=0)


@pytest.fixture(scope="module")
def height_report(alt):
    return height_coupling(alt, n=10**5, replicas=30, seed=0)


@pytest.fixture(scope="module")
def tail_report(alt):
    return max_height_tail(alt, n_values=(1, 128), reps=10**6, seed=0)


@pytest.fixture(scope="module")
def upsilon_report(alt):
    return upsilon_scaling(alt, n=10**5, replicas=2000, seed=0)


@pytest.fixture(scope="module")
def nij_report(alt):
    return nij_moments(alt, sample_size=10**5, seed=0)


@pytest.fixture(scope="module")
def slope_report_alt(alt):
    return size_tail_exponent(alt, n_grid=(25, 50, 100, 200), reps=2 * 10**5, seed=0)


@pytest.fixture(scope="module")
def slope_report_heavy(heavy):
    return size_tail_exponent(
        heavy, j=2, n_grid=(25, 50, 100, 200), reps=2 * 10**5, seed=0
    )


@pytest.fixture(scope="module")
def conditioned_report(alt):
    return conditioned_profile(alt, j=1, n=200, replicas=300, seed=0)


def row(report, fragment):
    hits = [r for r in report.statistics if fragment in r.label]
    assert hits, f"no row matching {fragment!r} in {report.name}"
    return hits[0]


# ---------------------------------------------------------------------------
# exact tree law at one million samples


class TestExactTreeLaw:
    """Sampled frequencies of every small tree match the enumerated law."""

    N = 10**6

    def _check(self, spec, root_type):
        t0 = time.perf_counter()
        law = enumerate_trees(spec, root_type, 6)
        expected = {}
        for t, p in law.entries:
            expected[(t.parents.tobytes(), t.types.tobytes())] = float(p)

        counts: Counter = Counter()
        budget = SampleBudget(max_vertices=7)
        small = 0
        for t in sample_trees(spec, root_type, self.N, budget=budget, rng=stream(0, 0)):
            if isinstance(t, Truncated) or len(t) > 6:
                continue
            small += 1
            counts[(t.parents.tobytes(), t.types.tobytes())] += 1

        assert set(counts) <= set(expected), "sampled a tree outside the law"
        worst = 0.0
        for key, p in expected.items():
            se = np.sqrt(p * (1 - p) / self.N)
            err = abs(counts[key] / self.N - p)
            worst = max(worst, err - 4 * se)
            assert err <= 4 * se, f"tree law off by {err:.2e} (> 4 se = {4 * se:.2e})"
        # total small-tree mass agrees too
        mass = float(law.total_mass)
        se = np.sqrt(mass * (1 - mass) / self.N)
        assert abs(small / self.N - mass) <= 4 * se
        assert time.perf_counter() - t0 < 120

    def test_alternating_geometric(self, alt):
        self._check(alt, 1)

    def test_finite_table(self, table):
        self._check(table, 1)


# ---------------------------------------------------------------------------
# projection pushforward equals the reduced branching law


class TestProjectionLaw:
    def test_reduced_law_head_is_exact(self, alt):
        mu = reduced_offspring_exact(alt, 1, 8)
        assert mu[0] == Fraction(2, 3)
        assert mu[1] == Fraction(1, 9)

    def test_two_independent_routes_agree(self, alt):
        # fixed-point coefficients vs direct convolution mixture; the
        # certified truncation gap is far below the 1e-10 requirement
        conv, tail = reduced_pmf_by_convolution(alt, 1, 200)
        fixed = reduced_offspring_exact(alt, 1, 201)
        assert tail < 1e-10
        for k in range(201):
            assert abs(float(fixed[k]) - conv[k]) <= tail + 1e-15

    def test_pushforward_brackets_reduced_law(self, alt):
        # push every enumerated tree (<= 6 vertices) through the
        # type-1 projection; the accumulated mass of each reduced
        # shape is a lower bound of its reduced-law probability, with
        # slack at most the un-enumerated mass -- exact rationals
        t0 = time.perf_counter()
        law = enumerate_trees(alt, 1, 6)
        deficit = 1 - law.total_mass
        pushed: dict[str, Fraction] = {}
        for t, p in law.entries:
            r = project(t, 1).reduced
            key = r.to_text()
            pushed[key] = pushed.get(key, Fraction(0)) + p

        mu = reduced_offspring_exact(alt, 1, 12)
        total_gap = Fraction(0)
        for r in enumerate_plane_trees(6):
            target = gw_tree_probability(mu, r)
            got = pushed.pop(r.to_text(), Fraction(0))
            assert Fraction(0) <= target - got <= deficit
            total_gap += target - got
        assert not pushed, "projection produced a shape outside the reduced law"
        assert total_gap <= deficit
        assert time.perf_counter() - t0 < 60


# ---------------------------------------------------------------------------
# size identity, exact for rational laws


class TestSizeIdentity:
    LAWS = [
        Geometric(HALF, 1),
        {0: HALF, 2: HALF},
        {0: Fraction(5, 8), 1: Fraction(1, 4), 3: Fraction(1, 8)},
    ]

    @pytest.mark.parametrize("mu", LAWS, ids=["geometric", "binary", "skewed"])
    def test_walk_equals_size_series(self, mu):
        for n in range(1, 13):
            lhs, rhs = otter_dwass(mu, n)
            assert isinstance(lhs, Fraction)
            assert lhs == rhs


# ---------------------------------------------------------------------------
# cross-type counter moments


class TestCounterMoments:
    def test_mean_ratio(self, nij_report):
        r = row(nij_report, "mean")
        assert r.target == 1.0
        assert r.passed, f"mean {r.estimate} misses 1 by more than 3 se"

    def test_lag_one_autocorrelation(self, nij_report):
        r = row(nij_report, "autocorr")
        assert abs(r.estimate) <= r.tolerance
        assert r.passed


# ---------------------------------------------------------------------------
# type-census convergence to the deterministic profile


class TestTypeCensus:
    def test_p90_within_tolerance(self, types_report):
        r = row(types_report, "90th pct")
        assert r.estimate <= 0.05, f"p90 deviation {r.estimate}"
        assert types_report.all_passed

    def test_runtime(self, types_report):
        assert types_report.runtime_seconds < 300


# ---------------------------------------------------------------------------
# height process coupling against the reduced walk


class TestHeightCoupling:
    def test_final_gap_small(self, height_report):
        r = row(height_report, "at n=100000")
        assert r.estimate < 0.2
        assert r.passed

    def test_gap_decreases_with_n(self, height_report):
        r = row(height_report, "nonincreasing")
        assert r.passed


# ---------------------------------------------------------------------------
# Kolmogorov-type height tail


class TestHeightTail:
    def test_single_type_calibration(self, tail_report):
        cal = tail_report.statistics[0]
        assert cal.label.startswith("calibration")
        assert cal.passed, "the classical single-type tail must calibrate"
        assert 0.8 <= cal.estimate <= 1.2

    def test_multitype_tail(self, tail_report):
        final = [s for s in tail_report.statistics if s.label.endswith("P(ht >= 128)")]
        assert final and final[-1].passed
        assert 0.8 <= final[-1].estimate <= 1.2

    def test_runtime(self, tail_report):
        assert tail_report.runtime_seconds < 600


# ---------------------------------------------------------------------------
# component-index scaling matches the reduced single-type pipeline


class TestComponentIndexScaling:
    def test_ks_distance(self, upsilon_report):
        r = row(upsilon_report, "KS distance")
        assert r.estimate < 0.05
        assert r.passed

    def test_half_normal_moment_reported(self, upsilon_report):
        r = row(upsilon_report, "half-normal")
        assert r.informational
        assert abs(r.estimate - r.target) <= 0.15 * r.target


# ---------------------------------------------------------------------------
# heavy-tail size exponents


class TestSizeTail:
    def test_calibration_and_light_slope(self, slope_report_alt):
        cal = slope_report_alt.statistics[0]
        assert cal.label.startswith("calibration")
        assert cal.passed
        main = row(slope_report_alt, "ccdf slope of #T^(")
        assert abs(main.estimate - (-0.5)) <= 0.1
        assert main.passed

    def test_heavy_slope(self, slope_report_heavy):
        main = row(slope_report_heavy, "ccdf slope of #T^(")
        assert abs(main.estimate - (-2 / 3)) <= 0.1
        assert main.passed


# ---------------------------------------------------------------------------
# bijection law equivalence and conditioned-tree profile


class TestConditionedGeometry:
    def test_bijection_pushforward_is_exact(self, alt):
        nu = list(nu_offspring(HALF, [HALF ** (k + 1) for k in range(8)]))
        law = enumerate_trees(alt, 1, 6)
        for t, p in law.entries:
            assert gw_tree_probability(nu, js_bijection(t)) == p

    def test_type_census_of_conditioned_trees(self, conditioned_report):
        r = row(conditioned_report, "sup |Lambda_j(#T s)/n - s| at n=200")
        assert r.estimate < 0.1
        assert r.passed

    def test_size_concentration(self, conditioned_report):
        r = row(conditioned_report, "fraction of replicas with |#T")
        assert r.estimate <= 0.05
        assert r.passed

    def test_profile_medians_monotone(self, conditioned_report):
        assert row(conditioned_report, "profile medians nonincreasing").passed

    def test_ancestor_count_coupling(self, conditioned_report):
        # the slow term isolated: with the ancestor-count proxy the
        # coupling already sits inside the tolerance at n = 200
        r = row(conditioned_report, "ancestor-count coupling gap at n=200")
        assert r.estimate < 0.25

    def test_height_coupling_within_tolerance(self, conditioned_report):
        # known-red: the raw statistic decays like n^(-1/4) and needs
        # n around 2e4 to pass 0.25; at the pinned n = 200 it does not.
        # This stays an honest failure rather than a loosened bound.
        r = row(conditioned_report, "height coupling gap at n=200")
        assert r.estimate < 0.25, (
            f"conditioned height coupling {r.estimate:.3f} exceeds 0.25 at "
            "n=200; see the ancestor-count row for the isolated slow term"
        )


# ---------------------------------------------------------------------------
# spectral data quality


class TestSpectralQuality:
    def test_perron_residuals(self, alt, mono, table, heavy):
        for spec in (alt, mono, table, heavy):
            M = mean_matrix(spec)
            p = spectral(spec)
            assert np.max(np.abs(M.T @ p.a - p.rho * p.a)) < 1e-10
            assert np.max(np.abs(M @ p.b - p.rho * p.b)) < 1e-10

    def test_reduced_laws_are_critical(self, alt, mono, table):
        for spec, types in ((alt, (1, 2)), (mono, (1,)), (table, (1, 2))):
            for i in types:
                mu = reduced_offspring_exact(spec, i, 200)
                mean = float(sum(k * c for k, c in enumerate(mu)))
                assert abs(mean - 1.0) < 1e-8

    def test_cross_type_scale_constants_agree(self, alt, heavy):
        for spec in (alt, heavy):
            assert limit_constants(spec).cbar_spread < 0.02


# ---------------------------------------------------------------------------
# byte-level reproducibility of every experiment


class TestReproducibility:
    SMALL = {
        "types_convergence": dict(n=2000, replicas=10, p90_tolerance=1.0),
        "height_coupling": dict(n=1000, replicas=8, final_tolerance=5.0),
        "max_height_tail": dict(n_values=(1, 16), reps=20000),
        "upsilon_scaling": dict(n=2000, replicas=200),
        "nij_moments": dict(sample_size=4000),
        "size_tail_exponent": dict(n_grid=(10, 20, 40), reps=20000, slope_tolerance=5.0),
        "conditioned_profile": dict(
            n=40, replicas=40, lambda_tolerance=5.0, coupling_tolerance=5.0
        ),
    }

    @pytest.mark.parametrize("name", sorted(SMALL))
    def test_rerun_and_worker_digests_match(self, name, alt):
        fn = EXPERIMENTS[name]
        kw = self.SMALL[name]
        base = fn(alt, seed=17, workers=1, **kw)
        again = fn(alt, seed=17, workers=1, **kw)
        fanned = fn(alt, seed=17, workers=3, **kw)
        assert base.digest() == again.digest() == fanned.digest()
