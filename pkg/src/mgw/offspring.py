"""Offspring-distribution families and their analysis.

Three families cover everything downstream: explicit finite tables
over child-count vectors, geometric total counts with a fixed child
type (the alternating two-type setting), and power-tailed counts with
i.i.d. child types (stable domain of attraction with index in (1,2)).

On top of the families sit the mean matrix, its Perron data, the
type-deletion (reduced) offspring laws obtained by generating-function
fixed points, and the scale constants that drive every asymptotic
check in the experiment harness.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from scipy.optimize import brentq
from scipy.special import zeta as hurwitz_zeta

from .errors import ConsistencyError, NumericalError, SpecError
from .series import RationalPGF, ser_div, ser_mul

Number = Fraction | float

PMF_TOL = 1e-12
CRITICAL_TOL = 1e-8
REDUCED_COEFF_DEFAULT = 200
FIT_GRID = (1e-4, 1e-2, 24)  # geometric grid for tail-exponent fits


def _num(x) -> Number:
    """Accept Fraction/int/str as exact, float as approximate."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise SpecError(f"bad probability {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"bad probability {x!r}") from exc
    if isinstance(x, float):
        return x
    raise SpecError(f"bad probability {x!r}")


def _encode_num(x: Number):
    return str(x) if isinstance(x, Fraction) else x


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class Geometric:
    """Total child count K with P(K = k) = (1-p) p^k, all children of
    one fixed type.  Mean p/(1-p); criticality in the alternating case
    is p1 p2 = (1-p1)(1-p2)."""

    p: Number
    child_type: int

    family = "geometric"

    def validate(self, d: int) -> None:
        if not 0 < self.p < 1:
            raise SpecError(f"geometric p must lie in (0,1), got {self.p}")
        if not 1 <= self.child_type <= d:
            raise SpecError(f"geometric child_type {self.child_type} out of 1..{d}")

    @property
    def is_rational(self) -> bool:
        return isinstance(self.p, Fraction)

    def mean_total(self) -> float:
        return float(self.p / (1 - self.p))

    def var_total(self) -> float:
        return float(self.p / (1 - self.p) ** 2)

    def mean_row(self, d: int) -> np.ndarray:
        row = np.zeros(d)
        row[self.child_type - 1] = self.mean_total()
        return row

    def child_types(self) -> set[int]:
        return {self.child_type}

    def prob_total(self, k: int) -> Number:
        return (1 - self.p) * self.p**k

    def scalar_pgf(self) -> RationalPGF:
        return RationalPGF((1 - self.p,), (1, -self.p))

    def pgf(self, s) -> float:
        x = s[self.child_type - 1]
        return float((1 - self.p) / (1 - self.p * x))

    def params_json(self) -> dict:
        return {"p": _encode_num(self.p), "child_type": self.child_type}


@dataclass(frozen=True)
class FiniteTable:
    """Explicit pmf over child-count vectors with finite support."""

    entries: tuple[tuple[tuple[int, ...], Number], ...]

    family = "finite_table"

    @classmethod
    def from_dict(cls, pmf: dict) -> "FiniteTable":
        entries = []
        for counts, prob in sorted(pmf.items()):
            entries.append((tuple(int(z) for z in counts), _num(prob)))
        return cls(tuple(entries))

    def validate(self, d: int) -> None:
        seen = set()
        for counts, prob in self.entries:
            if len(counts) != d or any(z < 0 for z in counts):
                raise SpecError(f"bad child-count vector {counts}")
            if counts in seen:
                raise SpecError(f"duplicate child-count vector {counts}")
            seen.add(counts)
            if prob <= 0:
                raise SpecError(f"probabilities must be positive, got {prob}")
        total = sum(prob for _, prob in self.entries)
        if self.is_rational:
            if total != 1:
                raise SpecError(f"table pmf sums to {total}, not 1")
        elif abs(float(total) - 1.0) > PMF_TOL:
            raise SpecError(f"table pmf sums to {float(total)}, not 1")

    @property
    def is_rational(self) -> bool:
        return all(isinstance(p, Fraction) for _, p in self.entries)

    @property
    def pmf(self) -> dict[tuple[int, ...], Number]:
        return dict(self.entries)

    def mean_row(self, d: int) -> np.ndarray:
        row = np.zeros(d)
        for counts, prob in self.entries:
            row += float(prob) * np.asarray(counts, dtype=float)
        return row

    def var_total(self) -> float:
        m1 = sum(float(p) * sum(z) for z, p in self.entries)
        m2 = sum(float(p) * sum(z) ** 2 for z, p in self.entries)
        return m2 - m1 * m1

    def child_types(self) -> set[int]:
        return {j + 1 for counts, _ in self.entries for j in range(len(counts)) if counts[j] > 0}

    def pgf(self, s) -> float:
        acc = 0.0
        for counts, prob in self.entries:
            term = float(prob)
            for j, z in enumerate(counts):
                if z:
                    term *= float(s[j]) ** z
            acc += term
        return acc

    def params_json(self) -> dict:
        return {
            "pmf": [
                {"counts": list(counts), "prob": _encode_num(prob)}
                for counts, prob in self.entries
            ]
        }


@dataclass(frozen=True)
class HeavyCount:
    """Total count N with P(N=0) = 1-s and P(N=k) = c (k+k0)^(-1-alpha)
    for k >= 1; each child's type drawn independently from q.

    The (c, k0) pair is solved from the activity s = P(N >= 1) and the
    target mean, which makes criticality exactly tunable.  Tail sums
    have Hurwitz-zeta closed forms: P(N >= k) = c zeta(1+alpha, k+k0).
    """

    alpha: float
    c: float
    k0: float
    q: tuple[float, ...]

    family = "heavy_count"

    @classmethod
    def solve(cls, alpha: float, mean: float, p_positive: float, q) -> "HeavyCount":
        alpha = float(alpha)
        if not 1.0 < alpha < 2.0:
            raise SpecError(f"heavy tail index must lie in (1,2), got {alpha}")
        s, m = float(p_positive), float(mean)
        if not 0 < s <= 1 or m <= 0:
            raise SpecError("need 0 < p_positive <= 1 and mean > 0")

        def ratio(k0: float) -> float:
            return hurwitz_zeta(alpha, 1 + k0) / hurwitz_zeta(1 + alpha, 1 + k0) - k0

        floor = ratio(0.0)
        if m / s <= floor + 1e-12:
            raise SpecError(
                f"mean/p_positive = {m / s:.6g} unreachable; needs > {floor:.6g}"
            )
        hi = 1.0
        while ratio(hi) < m / s:
            hi *= 2
            if hi > 1e9:
                raise NumericalError("heavy-count shift solve failed to bracket")
        k0 = float(brentq(lambda t: ratio(t) - m / s, 0.0, hi, xtol=1e-13, rtol=1e-14))
        c = s / hurwitz_zeta(1 + alpha, 1 + k0)
        return cls(alpha, float(c), k0, tuple(float(x) for x in q))

    def validate(self, d: int) -> None:
        if not 1.0 < self.alpha < 2.0:
            raise SpecError(f"heavy tail index must lie in (1,2), got {self.alpha}")
        if len(self.q) != d:
            raise SpecError("type-probability vector q must have length d")
        if any(x < 0 for x in self.q) or abs(sum(self.q) - 1.0) > PMF_TOL:
            raise SpecError("q must be a probability vector")
        if self.c <= 0 or self.k0 < 0:
            raise SpecError("need c > 0 and k0 >= 0")
        if self.activity() > 1 + PMF_TOL:
            raise SpecError("pmf mass above one")

    is_rational = False

    def activity(self) -> float:
        """P(N >= 1)."""
        return self.c * hurwitz_zeta(1 + self.alpha, 1 + self.k0)

    def prob_total(self, k: int) -> float:
        if k == 0:
            return 1.0 - self.activity()
        return self.c * (k + self.k0) ** (-1.0 - self.alpha)

    def tail(self, k: int) -> float:
        """P(N >= k) for k >= 1."""
        return self.c * hurwitz_zeta(1 + self.alpha, k + self.k0)

    def mean_total(self) -> float:
        z_a = hurwitz_zeta(self.alpha, 1 + self.k0)
        z_b = hurwitz_zeta(1 + self.alpha, 1 + self.k0)
        return self.c * (z_a - self.k0 * z_b)

    def mean_row(self, d: int) -> np.ndarray:
        return self.mean_total() * np.asarray(self.q, dtype=float)

    def child_types(self) -> set[int]:
        return {j + 1 for j, x in enumerate(self.q) if x > 0}

    def scalar_pgf_value(self, y: float) -> float:
        """E[y^N]; series summed through the Lerch transcendent."""
        if y == 0.0:
            return 1.0 - self.activity()
        if y == 1.0:
            return 1.0
        val = mpmath.lerchphi(y, 1 + self.alpha, 1 + self.k0)
        return float(1.0 - self.activity() + self.c * y * val)

    def pgf(self, s) -> float:
        y = float(np.dot(self.q, np.asarray(s, dtype=float)))
        return self.scalar_pgf_value(y)

    def params_json(self) -> dict:
        return {"alpha": self.alpha, "c": self.c, "k0": self.k0, "q": list(self.q)}


Law = Geometric | FiniteTable | HeavyCount

_FAMILIES = {cls.family: cls for cls in (Geometric, FiniteTable, HeavyCount)}


# ---------------------------------------------------------------------------
# the spec


@dataclass(frozen=True)
class OffspringSpec:
    """One offspring law per type, plus declared stability indices."""

    laws: tuple[Law, ...]
    alphas: tuple[float, ...]
    root_types: tuple[int, ...] = (1,)
    name: str = ""

    def __post_init__(self) -> None:
        d = len(self.laws)
        if d < 1:
            raise SpecError("need at least one type")
        if len(self.alphas) != d:
            raise SpecError("one declared alpha per type")
        for i, (law, alpha) in enumerate(zip(self.laws, self.alphas), start=1):
            law.validate(d)
            if not 1.0 < alpha <= 2.0:
                raise SpecError(f"declared alpha for type {i} must lie in (1,2]")
            if isinstance(law, HeavyCount):
                if abs(alpha - law.alpha) > 1e-12:
                    raise SpecError(f"type {i} declares alpha {alpha} but its tail has {law.alpha}")
            elif alpha != 2.0:
                raise SpecError(f"finite-variance type {i} must declare alpha = 2")
        if not self.root_types or any(not 1 <= r <= d for r in self.root_types):
            raise SpecError("root_types must be a nonempty sequence of valid types")
        if all(self._prob_total_one(law) for law in self.laws):
            raise SpecError("degenerate spec: every type has exactly one child a.s.")

    @staticmethod
    def _prob_total_one(law: Law) -> bool:
        if isinstance(law, FiniteTable):
            return all(sum(z) == 1 for z, _ in law.entries)
        return False  # geometric and heavy families always spread the total

    @property
    def d(self) -> int:
        return len(self.laws)

    @property
    def is_rational(self) -> bool:
        return all(law.is_rational for law in self.laws)

    @property
    def heavy_types(self) -> tuple[int, ...]:
        """Types declared with an index strictly below 2."""
        return tuple(i for i, a in enumerate(self.alphas, start=1) if a < 2.0)

    def law(self, i: int) -> Law:
        if not 1 <= i <= self.d:
            raise SpecError(f"type {i} out of range 1..{self.d}")
        return self.laws[i - 1]

    def prob_no_children(self, i: int) -> float:
        law = self.law(i)
        if isinstance(law, FiniteTable):
            return float(law.pmf.get((0,) * self.d, 0))
        if isinstance(law, Geometric):
            return float(1 - law.p)
        return law.prob_total(0)

    def to_json_dict(self) -> dict:
        out = {
            "d": self.d,
            "types": [
                {"family": law.family, "params": law.params_json(), "alpha": alpha}
                for law, alpha in zip(self.laws, self.alphas)
            ],
            "root_types": list(self.root_types),
        }
        if self.name:
            out["name"] = self.name
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SpecError(f"unknown keys {sorted(unknown)} in {where}")


def _law_from_json(entry: dict, d: int, idx: int) -> tuple[Law, float]:
    _check_keys(entry, {"family", "params", "alpha"}, f"types[{idx}]")
    try:
        family = entry["family"]
        params = dict(entry["params"])
        alpha = float(entry["alpha"])
    except KeyError as exc:
        raise SpecError(f"types[{idx}] missing field {exc}") from exc
    if family == "geometric":
        _check_keys(params, {"p", "child_type"}, f"types[{idx}].params")
        law: Law = Geometric(_num(params["p"]), int(params["child_type"]))
    elif family == "finite_table":
        _check_keys(params, {"pmf"}, f"types[{idx}].params")
        pmf = {}
        for row in params["pmf"]:
            _check_keys(row, {"counts", "prob"}, f"types[{idx}].params.pmf")
            pmf[tuple(int(z) for z in row["counts"])] = _num(row["prob"])
        law = FiniteTable.from_dict(pmf)
    elif family == "heavy_count":
        if "c" in params:
            _check_keys(params, {"alpha", "c", "k0", "q"}, f"types[{idx}].params")
            law = HeavyCount(float(params["alpha"]), float(params["c"]),
                             float(params["k0"]), tuple(float(x) for x in params["q"]))
        else:
            _check_keys(params, {"alpha", "mean", "p_positive", "q"}, f"types[{idx}].params")
            law = HeavyCount.solve(float(params["alpha"]), float(params["mean"]),
                                   float(params["p_positive"]), params["q"])
    else:
        raise SpecError(f"unknown family {family!r} (have {sorted(_FAMILIES)})")
    return law, alpha


def spec_from_json_dict(obj: dict) -> OffspringSpec:
    _check_keys(obj, {"d", "types", "root_types", "name"}, "spec")
    try:
        d = int(obj["d"])
        types = obj["types"]
    except KeyError as exc:
        raise SpecError(f"spec missing field {exc}") from exc
    if len(types) != d:
        raise SpecError(f"d = {d} but {len(types)} type entries")
    laws, alphas = [], []
    for idx, entry in enumerate(types):
        law, alpha = _law_from_json(entry, d, idx)
        laws.append(law)
        alphas.append(alpha)
    root_types = tuple(int(r) for r in obj.get("root_types", [1]))
    return OffspringSpec(tuple(laws), tuple(alphas), root_types, str(obj.get("name", "")))


def load_spec(path) -> OffspringSpec:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: not valid JSON ({exc})") from exc
    return spec_from_json_dict(obj)


def save_spec(spec: OffspringSpec, path) -> None:
    with open(path, "w") as fh:
        fh.write(spec.dumps())


def is_alternating(spec: OffspringSpec) -> bool:
    """True when d = 2 and each type begets only the other type."""
    if spec.d != 2:
        return False
    return all(spec.law(i).child_types() <= {3 - i} for i in (1, 2))


# ---------------------------------------------------------------------------
# mean matrix and Perron data


def mean_matrix(spec: OffspringSpec) -> np.ndarray:
    """M[i-1, j-1] = expected number of type-j children of a type-i parent."""
    return np.vstack([law.mean_row(spec.d) for law in spec.laws])


@dataclass(frozen=True)
class PerronData:
    rho: float
    a: np.ndarray
    b: np.ndarray
    classification: str


def _is_irreducible(M: np.ndarray) -> bool:
    pattern = (M > 0).astype(np.int64) + np.eye(len(M), dtype=np.int64)
    reach = np.linalg.matrix_power(pattern, max(len(M) - 1, 1))
    return bool(np.all(reach > 0))


def perron(M) -> PerronData:
    """Perron root and positive left/right eigenvectors of an
    irreducible non-negative matrix, normalized by <a,1> = <a,b> = 1.

    Power iteration runs on M + I: the shift leaves the eigenvectors
    alone and makes the iteration converge even for matrices with
    periodic positivity pattern (the plain iteration cycles on the
    alternating two-type mean matrix).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SpecError("mean matrix must be square")
    if not np.all(np.isfinite(M)) or np.any(M < 0):
        raise SpecError("mean matrix entries must be finite and non-negative")
    if not _is_irreducible(M):
        raise SpecError("mean matrix is reducible")

    d = len(M)
    shifted = M + np.eye(d)
    b = np.full(d, 1.0 / d)
    a = np.full(d, 1.0 / d)
    rho = 1.0
    for _ in range(100_000):
        b_new = shifted @ b
        b_new /= b_new.sum()
        a_new = shifted.T @ a
        a_new /= a_new.sum()
        rho = float(a_new @ M @ b_new / (a_new @ b_new))
        a, b = a_new, b_new
        res = max(
            np.abs(M @ b - rho * b).max(),
            np.abs(M.T @ a - rho * a).max(),
        )
        if res < 1e-13 * max(rho, 1.0):
            break
    else:
        raise NumericalError("power iteration did not converge")

    a = a / a.sum()
    b = b / (a @ b)
    if abs(rho - 1.0) <= CRITICAL_TOL:
        cls = "critical"
    elif rho < 1.0:
        cls = "subcritical"
    else:
        cls = "supercritical"
    a.flags.writeable = False
    b.flags.writeable = False
    return PerronData(rho, a, b, cls)


@lru_cache(maxsize=64)
def spectral(spec: OffspringSpec) -> PerronData:
    return perron(mean_matrix(spec))


def reduced_mean_matrix(M, k: int) -> np.ndarray:
    """Mean matrix after deleting type k and grafting its first-layer
    descendants onto the survivors: m~_jl = m_jl + m_jk m_kl / (1 - m_kk)."""
    M = np.asarray(M, dtype=float)
    d = len(M)
    if not 1 <= k <= d:
        raise SpecError(f"type {k} out of range 1..{d}")
    mkk = M[k - 1, k - 1]
    if mkk >= 1.0:
        raise SpecError(f"cannot delete type {k}: its self-mean {mkk} is >= 1")
    keep = [j for j in range(d) if j != k - 1]
    out = M[np.ix_(keep, keep)] + np.outer(M[keep, k - 1], M[k - 1, keep]) / (1.0 - mkk)
    return out


# ---------------------------------------------------------------------------
# pgf / Laplace machinery


def pgf_eval(spec: OffspringSpec, i: int, s) -> float:
    """phi^(i) as a probability generating function, s in [0,1]^d."""
    s = np.asarray(s, dtype=float)
    if s.shape != (spec.d,):
        raise SpecError(f"pgf argument must have length {spec.d}")
    if np.any(s < 0) or np.any(s > 1):
        raise SpecError("pgf argument must lie in [0,1]^d")
    return spec.law(i).pgf(s)


def laplace_exponent(spec: OffspringSpec, i: int, s) -> float:
    """psi^(i)(s) = -log E exp(-<z, s>) for s >= 0 coordinatewise."""
    s = np.asarray(s, dtype=float)
    if s.shape != (spec.d,):
        raise SpecError(f"Laplace argument must have length {spec.d}")
    if np.any(s < 0):
        raise SpecError("Laplace argument must be non-negative")
    value = spec.law(i).pgf(np.exp(-s))
    if not value > 0:
        raise NumericalError("pgf underflow in Laplace exponent")
    return -math.log(value)


# ---------------------------------------------------------------------------
# reduced offspring law (deleting every type but one)


def _deleted_dependencies(spec: OffspringSpec, i: int) -> dict[int, set[int]]:
    """Which deleted types each deleted type's offspring can contain."""
    return {
        j: (spec.law(j).child_types() - {i})
        for j in range(1, spec.d + 1)
        if j != i
    }


def _toposort(deps: dict[int, set[int]]) -> list[int] | None:
    """Dependency-respecting order, or None if the graph has a cycle."""
    order: list[int] = []
    mark: dict[int, int] = {}

    def visit(v: int) -> bool:
        if mark.get(v) == 2:
            return True
        if mark.get(v) == 1:
            return False
        mark[v] = 1
        for w in deps[v]:
            if not visit(w):
                return False
        mark[v] = 2
        order.append(v)
        return True

    for v in deps:
        if not visit(v):
            return None
    return order


def _law_series(law: Law, i: int, h: dict[int, list], n: int, exact: bool) -> list:
    """Series in x of f^(j) with the type-i slot set to x and every
    other slot set to the series h[k]."""
    one = Fraction(1) if exact else 1.0
    if isinstance(law, Geometric):
        p = law.p if exact else float(law.p)
        c = law.child_type
        if c == i:
            return ser_div([one - p], [one, -p], n)
        den = [one - p * coef if k == 0 else -p * coef for k, coef in enumerate(h[c][:n])]
        return ser_div([one - p], den, n)
    if isinstance(law, FiniteTable):
        acc = [Fraction(0) if exact else 0.0] * 1
        for counts, prob in law.entries:
            prob = prob if exact else float(prob)
            term = [prob]
            for j, z in enumerate(counts, start=1):
                if z == 0:
                    continue
                base = [0, 1] if j == i else h[j]
                for _ in range(z):
                    term = ser_mul(term, base, n)
            acc = [
                (acc[k] if k < len(acc) else 0) + (term[k] if k < len(term) else 0)
                for k in range(max(len(acc), len(term)))
            ]
        return acc[:n] + [Fraction(0) if exact else 0.0] * max(0, n - len(acc))
    raise SpecError("reduced offspring series need finite-table or geometric laws")


def reduced_offspring_exact(spec: OffspringSpec, i: int, max_coeff: int = REDUCED_COEFF_DEFAULT) -> list:
    """First ``max_coeff`` probabilities of the one-type offspring law
    left by deleting every type except i.

    Solves the generating-function system h_j = f^(j)(x at slot i,
    h elsewhere) over the deleted types, then reads coefficients off
    ghat = f^(i) under the same substitution.  When the deleted types
    form an acyclic begets-graph the system is triangular and is solved
    exactly (rational arithmetic for rational specs); otherwise the
    coefficients come from a monotone fixed-point iteration to 1e-12.
    """
    if spectral(spec).classification != "critical":
        raise SpecError("reduced offspring law is defined for critical specs")
    if any(isinstance(law, HeavyCount) for law in spec.laws):
        raise SpecError("reduced offspring series need finite-table or geometric laws")
    spec.law(i)
    n = int(max_coeff)
    deps = _deleted_dependencies(spec, i)
    order = _toposort(deps)
    exact = spec.is_rational and order is not None
    zero = Fraction(0) if exact else 0.0

    h: dict[int, list] = {}
    if order is not None:
        for j in order:
            h[j] = _law_series(spec.law(j), i, h, n, exact)
    else:
        h = {j: [zero] for j in deps}
        for _ in range(100_000):
            delta = 0.0
            for j in deps:
                new = _law_series(spec.law(j), i, h, n, exact)
                old = h[j]
                delta = max(
                    delta,
                    max(
                        abs(float(new[k]) - (float(old[k]) if k < len(old) else 0.0))
                        for k in range(n)
                    ),
                )
                h[j] = new
            if delta < 1e-12:
                break
        else:
            raise NumericalError("reduced offspring fixed point did not converge")

    out = _law_series(spec.law(i), i, h, n, exact)
    return out[:n] + [zero] * max(0, n - len(out))


def reduced_laplace_exponent(spec: OffspringSpec, i: int, s: float) -> float:
    """psibar^(i)(s): Laplace exponent of the reduced offspring law,
    evaluated pointwise through the same substitution fixed point."""
    if s < 0:
        raise SpecError("Laplace argument must be non-negative")
    x = math.exp(-s)
    deleted = [j for j in range(1, spec.d + 1) if j != i]
    vals = {j: 0.0 for j in deleted}

    def law_value(j: int) -> float:
        arg = np.empty(spec.d)
        arg[i - 1] = x
        for k in deleted:
            arg[k - 1] = vals[k]
        return spec.law(j).pgf(arg)

    for _ in range(100_000):
        delta = 0.0
        for j in deleted:
            new = law_value(j)
            delta = max(delta, abs(new - vals[j]))
            vals[j] = new
        if delta < 1e-15:
            break
    else:
        raise NumericalError("reduced Laplace fixed point did not converge")
    value = law_value(i)
    if not value > 0:
        raise NumericalError("pgf underflow in reduced Laplace exponent")
    return -math.log(value)


# ---------------------------------------------------------------------------
# limit constants


@dataclass(frozen=True)
class LimitConstants:
    """Scale data entering every asymptotic statement downstream.

    cbar follows the magnitude convention: expansions are fitted as
    |psi(s) - <m, s>| ~ K s^alpha, so all constants are positive
    regardless of the sign the second-order term carries analytically.
    """

    alpha_min: float
    cbar: float
    cbar_per_type: tuple[float, ...]
    cbar_spread: float
    sigma2_reduced: tuple[float, ...] | None
    Lbar: float | None
    Bn_scale: float | None

    def Bn(self, n: float) -> float:
        if self.Bn_scale is None:
            raise SpecError("B_n is only defined for alternating two-type specs")
        return self.Bn_scale * n ** (1.0 / self.alpha_min)


def _fit_power_coefficient(
    values_fn, expected_slope: float, extra_exponents: tuple[float, ...] = ()
) -> float:
    """Extract K from |f(s)| = K s^slope + corrections on a geometric grid.

    values_fn(s) must return the signed deviation.  A log-log fit first
    sanity-checks the exponent against the declared one, then K comes from
    least squares on the basis {s^slope, s^2, s^(slope+1), extras}: the
    plain log-fit intercept absorbs the quadratic correction term and can
    be off by 10% on this grid.
    """
    lo, hi, count = FIT_GRID
    grid = np.geomspace(lo, hi, count)
    devs = []
    for s in grid:
        v = abs(values_fn(float(s)))
        if v <= 0:
            raise NumericalError("power fit hit an exact zero deviation")
        devs.append(v)
    devs = np.asarray(devs)
    slope, _ = np.polyfit(np.log(grid), np.log(devs), 1)
    if abs(slope - expected_slope) > 0.15:
        raise NumericalError(
            f"fitted tail exponent {slope:.4f} far from declared {expected_slope}"
        )
    exponents = [expected_slope]
    for e in (2.0, expected_slope + 1.0, *extra_exponents):
        if all(abs(e - seen) > 0.01 for seen in exponents):
            exponents.append(e)
    basis = np.column_stack([grid ** e for e in exponents])
    coeffs, *_ = np.linalg.lstsq(basis, devs, rcond=None)
    return float(coeffs[0])


def _scalar_law_variance(law: Law) -> float:
    if isinstance(law, (Geometric, FiniteTable)):
        return law.var_total()
    raise SpecError("variance undefined for heavy-tailed law")


@lru_cache(maxsize=64)
def limit_constants(spec: OffspringSpec, max_coeff: int = REDUCED_COEFF_DEFAULT) -> LimitConstants:
    """alpha_min, cbar, and (for alternating specs) the Lbar / B_n data.

    cbar is computed operationally from the reduced laws: variance route
    for alpha_min = 2, log-log fit of psibar(s) - s for alpha_min < 2.
    Cross-type agreement beyond 5% raises; the observed spread is kept
    in the result so callers can tighten it further.
    """
    sp = spectral(spec)
    if sp.classification != "critical":
        raise SpecError(f"limit constants require a critical spec, got {sp.classification}")
    abar = min(spec.alphas)
    a, b = sp.a, sp.b

    cbar_per_type = []
    sigma2 = []
    if abar == 2.0:
        for i in range(1, spec.d + 1):
            pmf = [float(x) for x in reduced_offspring_exact(spec, i, max_coeff)]
            total = sum(pmf)
            if 1.0 - total > 1e-6:
                raise NumericalError(
                    f"reduced pmf for type {i} leaves mass {1 - total:.3g} beyond {max_coeff} coefficients"
                )
            ks = np.arange(len(pmf))
            mean = float(np.dot(ks, pmf))
            var = float(np.dot(ks * ks, pmf)) - mean * mean
            sigma2.append(var)
            cbar_per_type.append(float(b[i - 1]) * math.sqrt(float(a[i - 1]) * var / 2.0))
    else:
        other = tuple(al for al in spec.alphas if al < 2.0 and al != abar)
        for i in range(1, spec.d + 1):
            K = _fit_power_coefficient(
                lambda s, i=i: reduced_laplace_exponent(spec, i, s) - s, abar, other
            )
            cbar_per_type.append(float(b[i - 1]) * (float(a[i - 1]) * K) ** (1.0 / abar))

    mean_c = sum(cbar_per_type) / len(cbar_per_type)
    spread = max(abs(c - mean_c) / mean_c for c in cbar_per_type) if mean_c else 0.0
    if spread > 0.05:
        raise ConsistencyError(
            f"per-type cbar values {cbar_per_type} disagree by {spread:.1%} (limit 5%)"
        )

    lbar = bn_scale = None
    if is_alternating(spec) and isinstance(spec.law(1), Geometric):
        p1 = float(spec.law(1).p)
        law2 = spec.law(2)
        if spec.alphas[1] == 2.0:
            L2 = _scalar_law_variance(law2) / 2.0
        else:
            # heavy type 2: read the s^alpha coefficient off its own exponent
            m2 = law2.mean_total()
            L2 = _fit_power_coefficient(
                lambda s: -math.log(law2.scalar_pgf_value(math.exp(-s))) - m2 * s,
                spec.alphas[1],
            )
        term1 = 0.5 * (p1 / (1 - p1) ** 2) * float(a[0]) * float(b[1]) ** 2 if abar == 2.0 else 0.0
        lbar = term1 + float(a[1]) * float(b[0]) ** abar * L2
        bn_scale = lbar ** (1.0 / abar)

    return LimitConstants(
        alpha_min=abar,
        cbar=mean_c,
        cbar_per_type=tuple(cbar_per_type),
        cbar_spread=spread,
        sigma2_reduced=tuple(sigma2) if sigma2 else None,
        Lbar=lbar,
        Bn_scale=bn_scale,
    )


def height_tail_constant(spec: OffspringSpec, i: int) -> float:
    """Limit of n P(height >= n) for a tree rooted at type i:
    b_i (abar - 1) ((abar - 1) cbar)^(abar / (1 - abar))."""
    sp = spectral(spec)
    lc = limit_constants(spec)
    abar, cbar = lc.alpha_min, lc.cbar
    return float(sp.b[i - 1]) * (abar - 1.0) * ((abar - 1.0) * cbar) ** (abar / (1.0 - abar))
