"""Local-search solver over predicate and error-function models, with the
Sudoku builders used to compare constraint representations.

The search is a tabu-flavoured min-conflicts loop: pick the most
penalized non-tabu variable, move it to its best value, and restart from
scratch after a long plateau. Predicate models are guided by the count of
violated constraints, error-function models by summed constraint errors.
"""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import icn
from .icn import ErrorFunction, EvalContext, Genome

SUDOKU_VARIANTS = ("predicate", "handcrafted", "icn_feedforward", "icn_hardcoded")


def alldiff_primal_violation(x: Sequence[int]) -> int:
    """Number of index pairs sharing a value (primal-graph violation count)."""
    counts: dict[int, int] = {}
    for v in x:
        counts[v] = counts.get(v, 0) + 1
    return sum(c * (c - 1) // 2 for c in counts.values())


def _all_distinct(x: Sequence[int]) -> bool:
    return len(set(x)) == len(x)


def _duplicate_positions(x: Sequence[int]) -> int:
    # Equals Count>0( count_eq_right ): positions with a later duplicate.
    return len(x) - len(set(x))


@dataclass
class Constraint:
    """A scoped constraint with a guidance error and a ground-truth predicate.

    error returns 0 exactly when the predicate is intended to hold; for
    predicate-only models it is the 0/1 violation indicator. error_batch,
    when set, evaluates a (rows, len(scope)) candidate matrix at once.
    """

    scope: tuple[int, ...]
    error: Callable[[Sequence[int]], float]
    predicate: Callable[[Sequence[int]], bool]
    error_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass
class Model:
    domains: list[tuple[int, int]]  # inclusive per-variable intervals
    constraints: list[Constraint]
    kind: str = "efsp"

    @property
    def variable_count(self) -> int:
        return len(self.domains)

    def satisfied(self, assignment: Sequence[int]) -> bool:
        return all(
            con.predicate([assignment[i] for i in con.scope]) for con in self.constraints
        )


def CspModel(domains, constraints) -> Model:
    """Predicate model: guidance is the violated-constraint indicator."""
    wrapped = [
        Constraint(
            scope=con.scope,
            error=(lambda pred: lambda vals: 0.0 if pred(vals) else 1.0)(con.predicate),
            predicate=con.predicate,
        )
        for con in constraints
    ]
    return Model(domains=domains, constraints=wrapped, kind="csp")


def EfspModel(domains, constraints) -> Model:
    return Model(domains=domains, constraints=constraints, kind="efsp")


@dataclass
class SolveOutcome:
    status: str  # "solved" | "timeout"
    assignment: Optional[list[int]]
    elapsed_ms: float
    iterations: int
    restarts: int


def build_sudoku(
    k: int,
    variant: str,
    genome: Optional[Genome] = None,
) -> Model:
    """A k^2 x k^2 Sudoku as 3k^2 all-different constraints over rows,
    columns and k x k boxes, with the chosen constraint representation."""
    if k not in (3, 4):
        raise ValueError(f"supported grid orders are 3 and 4, got {k}")
    if variant not in SUDOKU_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; pick one of {SUDOKU_VARIANTS}")
    n = k * k
    scopes: list[tuple[int, ...]] = []
    for r in range(n):
        scopes.append(tuple(r * n + c for c in range(n)))
    for c in range(n):
        scopes.append(tuple(r * n + c for r in range(n)))
    for br in range(k):
        for bc in range(k):
            scopes.append(
                tuple((br * k + dr) * n + bc * k + dc for dr in range(k) for dc in range(k))
            )
    domains = [(1, n)] * (n * n)

    if variant == "predicate":
        cons = [Constraint(scope=s, error=None, predicate=_all_distinct) for s in scopes]
        return CspModel(domains, cons)
    if variant == "handcrafted":
        cons = [
            Constraint(scope=s, error=alldiff_primal_violation, predicate=_all_distinct)
            for s in scopes
        ]
        return EfspModel(domains, cons)

    reference = icn.alldifferent_reference_genome()
    if genome is None:
        genome = reference
    if variant == "icn_hardcoded" and genome.bits != reference.bits:
        raise ValueError(
            "no hard-coded equivalent for this genome; only "
            f"{icn.describe_genome(reference)} is coded directly"
        )
    if variant == "icn_hardcoded":
        cons = [
            Constraint(scope=s, error=_duplicate_positions, predicate=_all_distinct)
            for s in scopes
        ]
        return EfspModel(domains, cons)
    ef = ErrorFunction(genome, EvalContext(n=n, d=n, p=0, lo=1))
    cons = [
        Constraint(
            scope=s,
            error=ef.evaluate,
            predicate=_all_distinct,
            error_batch=ef.evaluate_batch,
        )
        for s in scopes
    ]
    return EfspModel(domains, cons)


def solve(
    model: Model,
    timeout_ms: int,
    rng_seed: int,
    tabu_tenure: int = 2,
    plateau_budget: Optional[int] = None,
) -> SolveOutcome:
    """Tabu min-conflicts with restarts; stops at total error 0 (re-checked
    with the predicates) or at the deadline."""
    if timeout_ms <= 0:
        raise ValueError("timeout_ms must be positive")
    rng = random.Random(rng_seed)
    nvars = model.variable_count
    if plateau_budget is None:
        plateau_budget = 10 * nvars
    constraints = model.constraints
    ncons = len(constraints)
    var_constraints: list[list[int]] = [[] for _ in range(nvars)]
    for ci, con in enumerate(constraints):
        for v in con.scope:
            var_constraints[v].append(ci)
    scope_pos = [{v: i for i, v in enumerate(con.scope)} for con in constraints]
    domains = model.domains
    # Fancy-index matrix for the per-variable penalty scan; rows are padded
    # with a sentinel slot that always holds error 0.
    max_deg = max((len(lst) for lst in var_constraints), default=1)
    var_cons_idx = np.full((nvars, max_deg), ncons, dtype=np.intp)
    for v, lst in enumerate(var_constraints):
        var_cons_idx[v, : len(lst)] = lst

    start = time.perf_counter()
    deadline = start + timeout_ms / 1000.0
    iterations = 0
    restarts = 0
    errors = np.zeros(ncons + 1)
    tabu_until = np.zeros(nvars, dtype=np.int64)

    def finish(status, assignment):
        elapsed = (time.perf_counter() - start) * 1000.0
        return SolveOutcome(status, assignment, elapsed, iterations, restarts)

    while True:
        assignment = [rng.randint(lo, hi) for lo, hi in domains]
        projections = [
            np.array([assignment[v] for v in con.scope], dtype=np.int64)
            for con in constraints
        ]
        for ci, con in enumerate(constraints):
            errors[ci] = con.error([assignment[v] for v in con.scope])
        errors[ncons] = 0.0
        total = float(errors[:ncons].sum())
        tabu_until[:] = 0
        best_total = total
        since_improvement = 0

        while True:
            if total == 0.0:
                if model.satisfied(assignment):
                    return finish("solved", assignment)
                break  # unfaithful guidance: restart rather than loop forever
            if time.perf_counter() > deadline:
                return finish("timeout", None)
            iterations += 1

            penalties = errors[var_cons_idx].sum(axis=1)
            blocked = tabu_until >= iterations
            penalties[blocked] = -1.0
            worst = penalties.max()
            if worst > 0.0:
                candidates = np.flatnonzero(penalties == worst)
            else:
                # Everything informative is tabu; pick any free variable.
                candidates = np.flatnonzero(~blocked)
                if len(candidates) == 0:
                    candidates = np.arange(nvars)
            var = int(candidates[0]) if len(candidates) == 1 else int(rng.choice(candidates))

            # A move always changes the variable; allowing it to stay put
            # lets non-improving no-ops rotate through the tabu list forever.
            lo, hi = domains[var]
            current = assignment[var]
            values = [val for val in range(lo, hi + 1) if val != current]
            nvalues = len(values)
            cons_here = var_constraints[var]
            cand_errors = np.zeros((nvalues, len(cons_here)))
            groups: dict[tuple, tuple] = {}
            for col, ci in enumerate(cons_here):
                con = constraints[ci]
                pos = scope_pos[ci][var]
                if con.error_batch is not None:
                    # Constraints sharing an evaluator and scope width run as
                    # one stacked call; network overhead is per call, not row.
                    key = (id(con.error_batch), len(con.scope))
                    group = groups.get(key)
                    if group is None:
                        groups[key] = (con.error_batch, [col], [(ci, pos)])
                    else:
                        group[1].append(col)
                        group[2].append((ci, pos))
                else:
                    proj = [assignment[v] for v in con.scope]
                    for row, val in enumerate(values):
                        proj[pos] = val
                        cand_errors[row, col] = con.error(proj)
            sole_group = None
            if len(groups) == 1:
                only = next(iter(groups.values()))
                if len(only[1]) == len(cons_here):
                    sole_group = only
            if sole_group is not None:
                error_batch, cols, places = sole_group
                width = len(constraints[places[0][0]].scope)
                stacked = np.empty((len(cols) * nvalues, width), dtype=np.int64)
                for slot, (ci, pos) in enumerate(places):
                    seg = stacked[slot * nvalues : (slot + 1) * nvalues]
                    seg[:] = projections[ci]
                    seg[:, pos] = values
                out = error_batch(stacked)
                cand_totals = out.reshape(len(cols), nvalues).sum(axis=0)
            else:
                for error_batch, cols, places in groups.values():
                    width = len(constraints[places[0][0]].scope)
                    stacked = np.empty((len(cols) * nvalues, width), dtype=np.int64)
                    for slot, (ci, pos) in enumerate(places):
                        seg = stacked[slot * nvalues : (slot + 1) * nvalues]
                        seg[:] = projections[ci]
                        seg[:, pos] = values
                    out = error_batch(stacked)
                    for slot, col in enumerate(cols):
                        cand_errors[:, col] = out[slot * nvalues : (slot + 1) * nvalues]
                cand_totals = cand_errors.sum(axis=1)
            best_value = cand_totals.min()
            choices = np.flatnonzero(cand_totals == best_value)
            pick = int(choices[0]) if len(choices) == 1 else int(rng.choice(choices))

            current_local = sum(float(errors[ci]) for ci in cons_here)
            picked_value = values[pick]
            assignment[var] = picked_value
            if sole_group is not None:
                for slot, (ci, pos) in enumerate(sole_group[2]):
                    errors[ci] = out[slot * nvalues + pick]
                    projections[ci][pos] = picked_value
            else:
                for col, ci in enumerate(cons_here):
                    errors[ci] = cand_errors[pick, col]
                    projections[ci][scope_pos[ci][var]] = picked_value
            total += float(cand_totals[pick]) - current_local
            tabu_until[var] = iterations + tabu_tenure

            if total < best_total - 1e-9:
                best_total = total
                since_improvement = 0
            else:
                since_improvement += 1
            if since_improvement >= plateau_budget:
                break

        restarts += 1
        if time.perf_counter() > deadline:
            return finish("timeout", None)


@dataclass
class BenchmarkStats:
    variant: str
    k: int
    runs: int
    timeouts: int
    mean_ms: Optional[float]
    median_ms: Optional[float]
    stdev_ms: Optional[float]
    rows: list[tuple] = field(default_factory=list)  # (run, seed, status, ms, iters, restarts)


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Per-run seeds from one master seed, stable across platforms."""
    return [int(s) for s in np.random.SeedSequence(master_seed).generate_state(count)]


def _run_one(args) -> tuple:
    k, variant, genome_bits, timeout_ms, run, seed, tenure, plateau = args
    genome = Genome(genome_bits) if genome_bits is not None else None
    model = build_sudoku(k, variant, genome=genome)
    outcome = solve(model, timeout_ms, seed, tabu_tenure=tenure, plateau_budget=plateau)
    return (run, seed, outcome.status, outcome.elapsed_ms, outcome.iterations, outcome.restarts)


def benchmark_sudoku(
    k: int,
    variant: str,
    runs: int,
    timeout_ms: int,
    seed: int,
    genome: Optional[Genome] = None,
    jobs: int = 1,
    tabu_tenure: int = 2,
    plateau_budget: Optional[int] = None,
) -> BenchmarkStats:
    """runs independent solves with derived sub-seeds; timed-out runs are
    counted but excluded from the runtime statistics."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    build_sudoku(k, variant, genome=genome)  # validate arguments up front
    seeds = derive_seeds(seed, runs)
    tasks = [
        (
            k,
            variant,
            genome.bits if genome is not None else None,
            timeout_ms,
            run,
            seeds[run],
            tabu_tenure,
            plateau_budget,
        )
        for run in range(runs)
    ]
    if jobs > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_one, tasks))
    else:
        rows = [_run_one(task) for task in tasks]
    rows.sort(key=lambda row: row[0])
    solved_ms = [row[3] for row in rows if row[2] == "solved"]
    timeouts = runs - len(solved_ms)
    mean_ms = statistics.fmean(solved_ms) if solved_ms else None
    median_ms = statistics.median(solved_ms) if solved_ms else None
    stdev_ms = statistics.stdev(solved_ms) if len(solved_ms) > 1 else None
    return BenchmarkStats(
        variant=variant,
        k=k,
        runs=runs,
        timeouts=timeouts,
        mean_ms=mean_ms,
        median_ms=median_ms,
        stdev_ms=stdev_ms,
        rows=rows,
    )
