"""Constraint assignment spaces: exhaustive enumeration and LHS sampling.

A labeled space pairs assignments with their concept label and (once
filled) a Hamming cost. Complete spaces enumerate every assignment;
incomplete ones are sampled with Latin hypercube batches until a target
number of solutions and non-solutions is reached.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .concepts import (
    ConstraintInstance,
    ConstraintKind,
    concept_holds_batch,
    format_constraint_line,
    parse_constraint_line,
)

DEFAULT_ENUMERATION_CAP = 10**7
DEFAULT_DRAW_BUDGET = 10**8

# Batches are generated in blocks of this many at once; values are
# identical to one-batch-at-a-time generation because each full batch
# consumes exactly d*n uniform draws in row-major order either way.
_BATCH_BLOCK = 4096


class EnumerationCapError(Exception):
    """Complete enumeration would exceed the configured cap."""


class SamplingExhaustedError(Exception):
    """The draw budget ran out before both class quotas were met."""


@dataclass
class LabeledSpace:
    """Assignments of one constraint with labels and optional costs.

    assignments is an (m, n) int64 matrix, labels an (m,) bool vector and
    costs an (m,) int64 vector or None while costs are still unset.
    """

    constraint: ConstraintInstance
    assignments: np.ndarray
    labels: np.ndarray
    costs: Optional[np.ndarray]
    complete: bool

    def __post_init__(self):
        m = len(self.assignments)
        if self.assignments.ndim != 2 or self.assignments.shape[1] != self.constraint.n:
            raise ValueError("assignment matrix shape does not match constraint scope")
        if self.labels.shape != (m,):
            raise ValueError("labels length mismatch")
        if self.costs is not None and self.costs.shape != (m,):
            raise ValueError("costs length mismatch")

    def __len__(self) -> int:
        return len(self.assignments)

    @property
    def solution_count(self) -> int:
        return int(self.labels.sum())

    @property
    def has_costs(self) -> bool:
        return self.costs is not None

    def entries(self) -> Iterator[tuple[tuple[int, ...], bool, Optional[int]]]:
        """Yield (assignment, label, cost) triples; cost is None when unset."""
        for i in range(len(self)):
            cost = int(self.costs[i]) if self.costs is not None else None
            yield tuple(int(v) for v in self.assignments[i]), bool(self.labels[i]), cost

    def with_costs(self, costs: np.ndarray) -> "LabeledSpace":
        costs = np.asarray(costs, dtype=np.int64)
        return LabeledSpace(self.constraint, self.assignments, self.labels, costs, self.complete)


def enumerate_complete(
    c: ConstraintInstance, cap: int = DEFAULT_ENUMERATION_CAP
) -> LabeledSpace:
    """All d^n assignments in lexicographic order, labeled, costs unset."""
    size = c.d**c.n
    if size > cap:
        raise EnumerationCapError(
            f"complete space holds {size} assignments, above the cap of {cap}"
        )
    # Column j cycles with period d^(n-1-j); lexicographic by construction.
    idx = np.arange(size)
    cols = []
    for j in range(c.n):
        period = c.d ** (c.n - 1 - j)
        cols.append(c.lo + (idx // period) % c.d)
    xs = np.column_stack(cols).astype(np.int64)
    labels = concept_holds_batch(c, xs)
    return LabeledSpace(c, xs, labels, None, complete=True)


def _lhs_batch(c: ConstraintInstance, b: int, rng: np.random.Generator) -> np.ndarray:
    """One Latin hypercube batch of b assignments (b <= d).

    The domain is split per variable into b near-equal strata; every
    stratum is used exactly once per variable, in an independent random
    order per variable.
    """
    d, n = c.d, c.n
    if b == d:
        # Singleton strata: each column is a permutation of the domain.
        order = rng.random((d, n)).argsort(axis=0)
        return (c.lo + order).astype(np.int64)
    bounds = [(i * d) // b for i in range(b + 1)]
    out = np.empty((b, n), dtype=np.int64)
    for j in range(n):
        strata = rng.permutation(b)
        for row, s in enumerate(strata):
            lo_s = c.lo + bounds[s]
            hi_s = c.lo + bounds[s + 1] - 1
            out[row, j] = rng.integers(lo_s, hi_s + 1)
    return out


def _full_batch_block(c: ConstraintInstance, count: int, rng: np.random.Generator) -> np.ndarray:
    """count full batches of size d at once; same stream as repeated _lhs_batch."""
    d, n = c.d, c.n
    order = rng.random((count, d, n)).argsort(axis=1)
    return (c.lo + order).reshape(count * d, n).astype(np.int64)


def lhs_sample(c: ConstraintInstance, count: int, rng_seed: int) -> np.ndarray:
    """count assignments drawn in LHS batches of size d (last batch smaller)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(rng_seed)
    full, rest = divmod(count, c.d)
    parts = []
    done = 0
    while done < full:
        block = min(_BATCH_BLOCK, full - done)
        parts.append(_full_batch_block(c, block, rng))
        done += block
    if rest:
        parts.append(_lhs_batch(c, rest, rng))
    return np.concatenate(parts, axis=0) if len(parts) > 1 else parts[0]


def sample_balanced(
    c: ConstraintInstance,
    k: int,
    rng_seed: int,
    draw_budget: int = DEFAULT_DRAW_BUDGET,
) -> LabeledSpace:
    """Draw LHS batches until k solutions and k non-solutions are collected.

    The earliest-drawn k entries of each class are kept, in draw order.
    Raises SamplingExhaustedError when the budget runs out first; expect
    this for constraints with extremely low (or zero) class rates.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rng = np.random.default_rng(rng_seed)
    kept_rows: list[np.ndarray] = []
    kept_labels: list[np.ndarray] = []
    n_sol = n_non = 0
    drawn = 0
    while n_sol < k or n_non < k:
        if drawn >= draw_budget:
            raise SamplingExhaustedError(
                f"draw budget of {draw_budget} exhausted with {n_sol}/{k} solutions "
                f"and {n_non}/{k} non-solutions for {format_constraint_line(c)}; "
                "the class rate may be too low for balanced sampling"
            )
        block = min(_BATCH_BLOCK, max(1, -(-(draw_budget - drawn) // c.d)))
        xs = _full_batch_block(c, block, rng)
        if drawn + len(xs) > draw_budget:
            xs = xs[: draw_budget - drawn]
        drawn += len(xs)
        labels = concept_holds_batch(c, xs)
        sol_rows = np.flatnonzero(labels)[: k - n_sol]
        non_rows = np.flatnonzero(~labels)[: k - n_non]
        keep = np.zeros(len(xs), dtype=bool)
        keep[sol_rows] = True
        keep[non_rows] = True
        if keep.any():
            sel = np.flatnonzero(keep)
            kept_rows.append(xs[sel])
            kept_labels.append(labels[sel])
        n_sol += len(sol_rows)
        n_non += len(non_rows)
    xs = np.concatenate(kept_rows, axis=0)
    labels = np.concatenate(kept_labels, axis=0)
    return LabeledSpace(c, xs, labels, None, complete=False)


def sample_solutions(c: ConstraintInstance, count: int, rng_seed: int) -> np.ndarray:
    """count solutions drawn directly, uniformly over the solution set.

    Needed for constraints whose solution rate makes rejection hopeless
    (an AllDifferent over 100 variables has a rate near 1e-42). LinearSum
    has no direct sampler here; use rejection at a reachable rate instead.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(rng_seed)
    d, n = c.d, c.n
    if c.kind is ConstraintKind.ALL_DIFFERENT:
        if d < n:
            raise ValueError("alldiff with d < n has no solution")
        domain = np.arange(c.lo, c.hi + 1)
        out = np.empty((count, n), dtype=np.int64)
        for i in range(count):
            out[i] = rng.permutation(domain)[:n]
        return out
    if c.kind is ConstraintKind.MINIMUM:
        if c.p > c.hi:
            raise ValueError(f"minimum with p={c.p} > hi={c.hi} has no solution")
        return rng.integers(max(c.lo, c.p), c.hi + 1, size=(count, n), dtype=np.int64)
    if c.kind is ConstraintKind.ORDERED:
        # Nondecreasing x over [lo, hi] <-> strictly increasing x[i] + i,
        # i.e. an n-subset of a (d + n - 1)-element range.
        picks = np.empty((count, n), dtype=np.int64)
        for i in range(count):
            picks[i] = np.sort(rng.choice(d + n - 1, size=n, replace=False))
        return c.lo + picks - np.arange(n)
    if c.kind is ConstraintKind.NO_OVERLAP_1D:
        # Sorted starts with gaps >= p <-> an n-subset of a shrunken range;
        # a random per-row shuffle then spreads the starts over variables.
        width = d - (n - 1) * (c.p - 1)
        if width < n:
            raise ValueError(f"nooverlap n={n} p={c.p} does not fit in [{c.lo}, {c.hi}]")
        out = np.empty((count, n), dtype=np.int64)
        for i in range(count):
            picks = np.sort(rng.choice(width, size=n, replace=False))
            starts = c.lo + picks + np.arange(n) * (c.p - 1)
            out[i] = rng.permutation(starts)
        return out
    raise ValueError(f"no direct solution sampler for {c.kind.value}")


def sample_balanced_direct(
    c: ConstraintInstance,
    k: int,
    rng_seed: int,
    draw_budget: int = DEFAULT_DRAW_BUDGET,
) -> LabeledSpace:
    """k directly-sampled solutions followed by k LHS-drawn non-solutions.

    The test-set builder for constraints out of rejection's reach; falls
    back to rejection for the solution class when no direct sampler exists.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    try:
        sols = sample_solutions(c, k, rng_seed)
    except ValueError as exc:
        if "no direct solution sampler" not in str(exc):
            raise
        sols = None
    rng = np.random.default_rng(rng_seed + 1)
    non_parts: list[np.ndarray] = []
    need_non = k
    need_sol = 0 if sols is not None else k
    sol_parts: list[np.ndarray] = []
    drawn = 0
    while need_non > 0 or need_sol > 0:
        if drawn >= draw_budget:
            raise SamplingExhaustedError(
                f"draw budget of {draw_budget} exhausted with {k - need_sol}/{k} "
                f"solutions and {k - need_non}/{k} non-solutions for "
                f"{format_constraint_line(c)}"
            )
        block = min(_BATCH_BLOCK, max(1, -(-(draw_budget - drawn) // c.d)))
        xs = _full_batch_block(c, block, rng)
        drawn += len(xs)
        labels = concept_holds_batch(c, xs)
        take_non = np.flatnonzero(~labels)[:need_non]
        if len(take_non):
            non_parts.append(xs[take_non])
            need_non -= len(take_non)
        if need_sol > 0:
            take_sol = np.flatnonzero(labels)[:need_sol]
            if len(take_sol):
                sol_parts.append(xs[take_sol])
                need_sol -= len(take_sol)
    if sols is None:
        sols = np.concatenate(sol_parts, axis=0)
    non = np.concatenate(non_parts, axis=0)
    xs = np.concatenate([sols, non], axis=0)
    labels = np.concatenate([np.ones(k, dtype=bool), np.zeros(k, dtype=bool)])
    return LabeledSpace(c, xs, labels, None, complete=False)


# ---------------------------------------------------------------------------
# File format: header line then one `v1 v2 ... vn | label | cost` per entry.
# ---------------------------------------------------------------------------


def save_space(space: LabeledSpace, path) -> None:
    lines = [
        f"# constraint {format_constraint_line(space.constraint)} "
        f"complete={1 if space.complete else 0}"
    ]
    costs = space.costs
    for i in range(len(space)):
        values = " ".join(str(int(v)) for v in space.assignments[i])
        label = "1" if space.labels[i] else "0"
        cost = str(int(costs[i])) if costs is not None else "-"
        lines.append(f"{values} | {label} | {cost}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_space(path) -> LabeledSpace:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# constraint "):
        raise ValueError(f"{path}: missing space header")
    header = text[0][len("# constraint "):]
    fields = dict(tok.partition("=")[::2] for tok in header.split())
    complete = fields.pop("complete", None)
    if complete not in ("0", "1"):
        raise ValueError(f"{path}: header lacks complete=<0|1>")
    c = parse_constraint_line(" ".join(f"{k}={v}" for k, v in fields.items()))
    rows, labels, costs = [], [], []
    any_cost = False
    for ln, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = [part.strip() for part in line.split("|")]
        if len(parts) != 3:
            raise ValueError(f"{path}:{ln}: expected `values | label | cost`")
        rows.append([int(v) for v in parts[0].split()])
        labels.append(parts[1] == "1")
        if parts[2] == "-":
            costs.append(-1)
        else:
            costs.append(int(parts[2]))
            any_cost = True
    xs = np.array(rows, dtype=np.int64).reshape(len(rows), c.n)
    label_arr = np.array(labels, dtype=bool)
    cost_arr = np.array(costs, dtype=np.int64) if any_cost else None
    if any_cost and (np.array(costs) < 0).any():
        raise ValueError(f"{path}: mixed set and unset costs")
    return LabeledSpace(c, xs, label_arr, cost_arr, complete=complete == "1")
