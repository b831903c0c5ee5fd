"""Constraint kinds, instances and their concept predicates.

A constraint instance bundles a kind, a scope size n, an integer interval
domain [lo, hi] and an integer parameter p. The concept predicate decides
whether an assignment satisfies the constraint; per-kind closed forms give
the exact Hamming cost where one is known.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np


class ConstraintKind(Enum):
    ALL_DIFFERENT = "alldiff"
    LINEAR_SUM = "linearsum"
    MINIMUM = "minimum"
    NO_OVERLAP_1D = "nooverlap"
    ORDERED = "ordered"


# Accepted spellings in config lines and CLI flags.
_KIND_ALIASES = {
    "alldiff": ConstraintKind.ALL_DIFFERENT,
    "alldifferent": ConstraintKind.ALL_DIFFERENT,
    "linearsum": ConstraintKind.LINEAR_SUM,
    "minimum": ConstraintKind.MINIMUM,
    "nooverlap": ConstraintKind.NO_OVERLAP_1D,
    "nooverlap1d": ConstraintKind.NO_OVERLAP_1D,
    "ordered": ConstraintKind.ORDERED,
}

# Kinds whose parameter is meaningful; the others are pinned to p = 0 so
# that parameter-consuming network operations stay total.
_PARAMETRIC_KINDS = frozenset(
    {ConstraintKind.LINEAR_SUM, ConstraintKind.MINIMUM, ConstraintKind.NO_OVERLAP_1D}
)


def parse_kind(name: str) -> ConstraintKind:
    try:
        return _KIND_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown constraint kind {name!r}") from None


@dataclass(frozen=True)
class ConstraintInstance:
    """One constraint over n integer variables sharing the domain [lo, hi]."""

    kind: ConstraintKind
    n: int
    lo: int
    hi: int
    p: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"scope size must be >= 2, got {self.n}")
        if self.hi < self.lo:
            raise ValueError(f"empty domain [{self.lo}, {self.hi}]")
        if self.d < 2:
            raise ValueError(f"domain must hold at least 2 values, got {self.d}")
        if self.kind not in _PARAMETRIC_KINDS and self.p != 0:
            raise ValueError(f"{self.kind.value} takes no parameter; p must be 0")
        if self.kind is ConstraintKind.NO_OVERLAP_1D and self.p < 1:
            raise ValueError("nooverlap task length p must be >= 1")

    @property
    def d(self) -> int:
        """Domain size."""
        return self.hi - self.lo + 1

    def check_assignment(self, x: Sequence[int]) -> None:
        if len(x) != self.n:
            raise ValueError(f"expected {self.n} values, got {len(x)}")
        for v in x:
            if not self.lo <= v <= self.hi:
                raise ValueError(f"value {v} outside domain [{self.lo}, {self.hi}]")


def concept_holds(c: ConstraintInstance, x: Sequence[int]) -> bool:
    """True iff the assignment x satisfies the constraint c."""
    c.check_assignment(x)
    if c.kind is ConstraintKind.ALL_DIFFERENT:
        return len(set(x)) == len(x)
    if c.kind is ConstraintKind.LINEAR_SUM:
        return sum(x) == c.p
    if c.kind is ConstraintKind.MINIMUM:
        return min(x) >= c.p
    if c.kind is ConstraintKind.NO_OVERLAP_1D:
        # Tasks of equal length p must not overlap; equivalent to pairwise
        # start-time gaps of at least p.
        s = sorted(x)
        return all(s[i + 1] - s[i] >= c.p for i in range(len(s) - 1))
    if c.kind is ConstraintKind.ORDERED:
        return all(x[i] <= x[i + 1] for i in range(len(x) - 1))
    raise AssertionError(c.kind)


def concept_holds_batch(c: ConstraintInstance, xs: np.ndarray) -> np.ndarray:
    """Vectorized concept predicate over a (m, n) assignment matrix."""
    xs = np.asarray(xs)
    if xs.ndim != 2 or xs.shape[1] != c.n:
        raise ValueError(f"expected shape (m, {c.n}), got {xs.shape}")
    if c.kind is ConstraintKind.ALL_DIFFERENT:
        s = np.sort(xs, axis=1)
        return ~np.any(s[:, 1:] == s[:, :-1], axis=1)
    if c.kind is ConstraintKind.LINEAR_SUM:
        return xs.sum(axis=1) == c.p
    if c.kind is ConstraintKind.MINIMUM:
        return xs.min(axis=1) >= c.p
    if c.kind is ConstraintKind.NO_OVERLAP_1D:
        s = np.sort(xs, axis=1)
        return np.all(s[:, 1:] - s[:, :-1] >= c.p, axis=1)
    if c.kind is ConstraintKind.ORDERED:
        return np.all(xs[:, 1:] >= xs[:, :-1], axis=1)
    raise AssertionError(c.kind)


def _longest_nondecreasing_run(x: Sequence[int]) -> int:
    # Patience-style O(n log n): tails[k] = smallest possible tail of a
    # nondecreasing subsequence of length k+1.
    tails: list[int] = []
    for v in x:
        i = bisect.bisect_right(tails, v)
        if i == len(tails):
            tails.append(v)
        else:
            tails[i] = v
    return len(tails)


def _linear_sum_cost(c: ConstraintInstance, x: Sequence[int]) -> int:
    total = sum(x)
    delta = c.p - total
    if delta == 0:
        return 0
    if not c.n * c.lo <= c.p <= c.n * c.hi:
        raise ValueError(f"linearsum with p={c.p} has no solution on {c.n} x [{c.lo}, {c.hi}]")
    if delta > 0:
        room = sorted((c.hi - v for v in x), reverse=True)
    else:
        room = sorted((v - c.lo for v in x), reverse=True)
    need = abs(delta)
    covered = 0
    for k, r in enumerate(room, start=1):
        covered += r
        if covered >= need:
            return k
    raise AssertionError("satisfiability check guarantees coverage")


def hamming_reference(c: ConstraintInstance, x: Sequence[int]) -> int:
    """Exact Hamming cost of x by a per-kind closed form.

    NoOverlap1D has no trusted closed form and is answered by the generic
    enumeration oracle, as is AllDifferent when the domain is too small for
    the counting argument (d < n).
    """
    c.check_assignment(x)
    if c.kind is ConstraintKind.ALL_DIFFERENT and c.d >= c.n:
        return c.n - len(set(x))
    if c.kind is ConstraintKind.MINIMUM:
        if c.p > c.hi:
            raise ValueError(f"minimum with p={c.p} > hi={c.hi} has no solution")
        return sum(1 for v in x if v < c.p)
    if c.kind is ConstraintKind.ORDERED:
        return c.n - _longest_nondecreasing_run(x)
    if c.kind is ConstraintKind.LINEAR_SUM:
        return _linear_sum_cost(c, x)
    # NoOverlap1D, or AllDifferent with d < n: fall back to enumeration.
    from . import hamming

    sols = hamming.exhaustive_solution_set(c)
    return hamming.exact_hamming(x, sols)


def reference_costs_batch(c: ConstraintInstance, xs: np.ndarray) -> np.ndarray:
    """Closed-form Hamming costs for a (m, n) matrix; kinds without a closed
    form are rejected (use the enumeration/sampling oracles instead)."""
    xs = np.asarray(xs, dtype=np.int64)
    if xs.ndim != 2 or xs.shape[1] != c.n:
        raise ValueError(f"expected shape (m, {c.n}), got {xs.shape}")
    if c.kind is ConstraintKind.ALL_DIFFERENT and c.d >= c.n:
        s = np.sort(xs, axis=1)
        distinct = 1 + (s[:, 1:] != s[:, :-1]).sum(axis=1)
        return (c.n - distinct).astype(np.int64)
    if c.kind is ConstraintKind.MINIMUM:
        if c.p > c.hi:
            raise ValueError(f"minimum with p={c.p} > hi={c.hi} has no solution")
        return (xs < c.p).sum(axis=1).astype(np.int64)
    if c.kind is ConstraintKind.ORDERED:
        return np.array([c.n - _longest_nondecreasing_run(row) for row in xs], dtype=np.int64)
    if c.kind is ConstraintKind.LINEAR_SUM:
        if not c.n * c.lo <= c.p <= c.n * c.hi:
            raise ValueError(f"linearsum with p={c.p} has no solution on {c.n} x [{c.lo}, {c.hi}]")
        delta = c.p - xs.sum(axis=1)
        room = np.where(delta[:, None] > 0, c.hi - xs, xs - c.lo)
        room = -np.sort(-room, axis=1)
        reach = np.cumsum(room, axis=1)
        need = np.abs(delta)
        counts = 1 + (reach < need[:, None]).sum(axis=1)
        return np.where(need == 0, 0, counts).astype(np.int64)
    raise ValueError(f"no closed-form Hamming cost for {c.kind.value}")


def has_closed_form(c: ConstraintInstance) -> bool:
    if c.kind is ConstraintKind.ALL_DIFFERENT:
        return c.d >= c.n
    return c.kind in (
        ConstraintKind.MINIMUM,
        ConstraintKind.ORDERED,
        ConstraintKind.LINEAR_SUM,
    )


def parse_constraint_line(line: str) -> ConstraintInstance:
    """Parse a `kind=<name> n=<int> lo=<int> hi=<int> p=<int>` description."""
    fields = {}
    for token in line.split():
        if "=" not in token:
            raise ValueError(f"malformed constraint token {token!r}")
        key, _, value = token.partition("=")
        fields[key] = value
    missing = {"kind", "n", "lo", "hi"} - fields.keys()
    if missing:
        raise ValueError(f"constraint line missing {sorted(missing)}")
    kind = parse_kind(fields["kind"])
    try:
        n = int(fields["n"])
        lo = int(fields["lo"])
        hi = int(fields["hi"])
        p = int(fields.get("p", "0"))
    except ValueError as exc:
        raise ValueError(f"bad integer in constraint line: {exc}") from None
    return ConstraintInstance(kind=kind, n=n, lo=lo, hi=hi, p=p)


def format_constraint_line(c: ConstraintInstance) -> str:
    return f"kind={c.kind.value} n={c.n} lo={c.lo} hi={c.hi} p={c.p}"
