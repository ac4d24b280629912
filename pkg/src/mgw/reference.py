"""Built-in reference specifications used by tests, demos, and docs.

All four are critical.  The alternating geometric pair is the workhorse
(every constant is known in closed form: rho = 1, a = (1/2, 1/2),
b = (1, 1), cbar = Lbar = 1); the finite table gives a second exactly
enumerable law; the heavy variant drops the minimal stability index to
3/2; the monotype geometric law is the classical calibration case with
sigma^2 = 2.
"""

from __future__ import annotations

from fractions import Fraction

from .offspring import FiniteTable, Geometric, HeavyCount, OffspringSpec

HALF = Fraction(1, 2)


def alternating_geometric(p: Fraction = HALF) -> OffspringSpec:
    """Two types, each begetting a geometric number of the other type."""
    return OffspringSpec(
        laws=(Geometric(p, child_type=2), Geometric(p, child_type=1)),
        alphas=(2.0, 2.0),
        root_types=(1,),
        name="alternating_geometric",
    )


def finite_table_critical() -> OffspringSpec:
    """d = 2 table spec: type 1 begets (1,1) or nothing, type 2 begets
    (2,0) or nothing, each with probability 1/2.  Critical with
    a = (2/3, 1/3), b = (1, 1)."""
    return OffspringSpec(
        laws=(
            FiniteTable.from_dict({(0, 0): HALF, (1, 1): HALF}),
            FiniteTable.from_dict({(0, 0): HALF, (2, 0): HALF}),
        ),
        alphas=(2.0, 2.0),
        root_types=(1,),
        name="finite_table_critical",
    )


def heavy_alternating() -> OffspringSpec:
    """Alternating pair with a power-tailed type 2 (index 3/2), tuned
    critical: both means are 1."""
    return OffspringSpec(
        laws=(
            Geometric(HALF, child_type=2),
            HeavyCount.solve(alpha=1.5, mean=1.0, p_positive=0.5, q=(1.0, 0.0)),
        ),
        alphas=(2.0, 1.5),
        root_types=(1,),
        name="heavy_alternating",
    )


def monotype_geometric(p: Fraction = HALF) -> OffspringSpec:
    """Single type, geometric offspring; at p = 1/2 critical with
    variance 2 (the Kolmogorov tail constant 2/sigma^2 equals 1)."""
    return OffspringSpec(
        laws=(Geometric(p, child_type=1),),
        alphas=(2.0,),
        root_types=(1,),
        name="monotype_geometric",
    )


REFERENCE_SPECS = {
    "alternating_geometric": alternating_geometric,
    "finite_table_critical": finite_table_critical,
    "heavy_alternating": heavy_alternating,
    "monotype_geometric": monotype_geometric,
}


def get_reference_spec(name: str) -> OffspringSpec:
    try:
        builder = REFERENCE_SPECS[name]
    except KeyError:
        raise KeyError(f"unknown reference spec {name!r}; have {sorted(REFERENCE_SPECS)}") from None
    return builder()
