"""The compositional error-function network and its binary genome.

The network has four layers. A genome of 31 bits selects which operation
each layer applies:

  bits  0..17  transformation: element-wise maps from the assignment to a
               vector of n integers (several may be selected);
  bits 18..19  arithmetic: component-wise combination of the selected
               transformation vectors (exactly one);
  bits 20..21  aggregation: vector to scalar (exactly one);
  bits 22..30  comparison: scalar to the final nonnegative error, using
               the evaluation context n, d, p (exactly one).

Selected operations compose into a short, human-readable function; the
describe/parse pair round-trips that rendering.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .concepts import ConstraintInstance, ConstraintKind, parse_kind
from .spaces import LabeledSpace

GENOME_LENGTH = 31
T_SLICE = slice(0, 18)
A_SLICE = slice(18, 20)
G_SLICE = slice(20, 22)
C_SLICE = slice(22, 31)

# Values are clamped to this magnitude after every combining step; counts
# multiplied across transformations can explode at scope 100.
SATURATION_CEILING = 2**31 - 1

# Pairwise transformation scans run in row blocks of at most this many
# matrix cells (rows * n * n) to bound peak memory.
_PAIR_CHUNK_CELLS = 2 * 10**7


@dataclass
class EvalDiagnostics:
    """Mutable counters filled in by evaluation when passed explicitly."""

    saturation_events: int = 0

    @property
    def saturated(self) -> bool:
        return self.saturation_events > 0


@dataclass(frozen=True)
class EvalContext:
    """Scalar inputs the comparison and parameter operations consume."""

    n: int
    d: int
    p: int
    lo: int
    kind: Optional[ConstraintKind] = None


def ctx_from_constraint(c: ConstraintInstance) -> EvalContext:
    return EvalContext(n=c.n, d=c.d, p=c.p, lo=c.lo, kind=c.kind)


@dataclass(frozen=True)
class Genome:
    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != GENOME_LENGTH:
            raise ValueError(f"genome needs {GENOME_LENGTH} bits, got {len(self.bits)}")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("genome bits must be 0 or 1")

    def count(self) -> int:
        return sum(self.bits)

    def selected(self, layer: slice) -> list[int]:
        """Indices set within a layer, relative to the layer start."""
        return [i - layer.start for i in range(layer.start, layer.stop) if self.bits[i]]


def validate(g: Genome) -> bool:
    """At least one transformation; exactly one of each other layer."""
    return (
        len(g.selected(T_SLICE)) >= 1
        and len(g.selected(A_SLICE)) == 1
        and len(g.selected(G_SLICE)) == 1
        and len(g.selected(C_SLICE)) == 1
    )


def repair(g: Genome, rng) -> Genome:
    """Fix layer cardinalities: trim over-full exclusive layers to one kept
    bit chosen uniformly, seed empty layers with one uniform bit."""
    bits = list(g.bits)
    for layer in (T_SLICE, A_SLICE, G_SLICE, C_SLICE):
        chosen = [i for i in range(layer.start, layer.stop) if bits[i]]
        if layer is not T_SLICE and len(chosen) > 1:
            keep = rng.choice(chosen)
            for i in chosen:
                bits[i] = 1 if i == keep else 0
        elif not chosen:
            bits[rng.randrange(layer.start, layer.stop)] = 1
    return Genome(tuple(bits))


# ---------------------------------------------------------------------------
# Operation catalog
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def _pair_mask(n: int, side: str) -> np.ndarray:
    if side == "right":
        return np.triu(np.ones((n, n), dtype=bool), k=1)  # j > i
    if side == "left":
        return np.tril(np.ones((n, n), dtype=bool), k=-1)  # j < i
    return ~np.eye(n, dtype=bool)  # j != i


def _pairwise_block(block: np.ndarray, rel: str, mask: np.ndarray, p: int) -> np.ndarray:
    xi = block[:, :, None]
    xj = block[:, None, :]
    if rel == "eq":
        hits = xj == xi
    elif rel == "lt":
        hits = xj < xi
    elif rel == "gt":
        hits = xj > xi
    else:  # "near": |x_j - x_i| < p
        hits = np.abs(xj - xi) < p
    return (hits & mask).sum(axis=2)


def _pairwise_count(X: np.ndarray, rel: str, side: str, p: int = 0) -> np.ndarray:
    """Counts over index pairs: out[r, i] = |{j in side(i) : rel(x_j, x_i)}|."""
    m, n = X.shape
    mask = _pair_mask(n, side)
    chunk = max(1, _PAIR_CHUNK_CELLS // (n * n))
    if m <= chunk:
        return _pairwise_block(X, rel, mask, p)
    out = np.empty((m, n), dtype=np.int64)
    for start in range(0, m, chunk):
        out[start : start + chunk] = _pairwise_block(X[start : start + chunk], rel, mask, p)
    return out


def _shift_next(X: np.ndarray) -> np.ndarray:
    # x[i+1] with the last column repeating itself.
    return np.concatenate([X[:, 1:], X[:, -1:]], axis=1)


def _shift_prev(X: np.ndarray) -> np.ndarray:
    return np.concatenate([X[:, :1], X[:, :-1]], axis=1)


TRANSFORMATION_NAMES = [
    "identity",
    "count_eq_right",
    "count_eq_left",
    "count_eq_others",
    "count_lt_right",
    "count_gt_right",
    "count_lt_left",
    "count_gt_left",
    "max_with_next",
    "min_with_next",
    "drop_to_next",
    "drop_from_prev",
    "gap_below_p",
    "gap_above_p",
    "count_near_right",
    "count_near_others",
    "eq_p",
    "lt_p",
]

_TRANSFORMATION_FNS: list[Callable[[np.ndarray, EvalContext], np.ndarray]] = [
    lambda X, ctx: X.copy(),
    lambda X, ctx: _pairwise_count(X, "eq", "right"),
    lambda X, ctx: _pairwise_count(X, "eq", "left"),
    lambda X, ctx: _pairwise_count(X, "eq", "all"),
    lambda X, ctx: _pairwise_count(X, "lt", "right"),
    lambda X, ctx: _pairwise_count(X, "gt", "right"),
    lambda X, ctx: _pairwise_count(X, "lt", "left"),
    lambda X, ctx: _pairwise_count(X, "gt", "left"),
    lambda X, ctx: np.maximum(X, _shift_next(X)),
    lambda X, ctx: np.minimum(X, _shift_next(X)),
    lambda X, ctx: np.maximum(X - _shift_next(X), 0),
    lambda X, ctx: np.maximum(_shift_prev(X) - X, 0),
    lambda X, ctx: np.maximum(ctx.p - X, 0),
    lambda X, ctx: np.maximum(X - ctx.p, 0),
    lambda X, ctx: _pairwise_count(X, "near", "right", ctx.p),
    lambda X, ctx: _pairwise_count(X, "near", "all", ctx.p),
    lambda X, ctx: (X == ctx.p).astype(np.int64),
    lambda X, ctx: (X < ctx.p).astype(np.int64),
]

ARITHMETIC_NAMES = ["add", "mul"]
_ARITHMETIC_SYMBOLS = {"add": " + ", "mul": " * "}

AGGREGATION_NAMES = ["Sum", "Count>0"]

COMPARISON_NAMES = [
    "identity",
    "AbsDiff_p",
    "Euclid_p",
    "AbsDiff_n",
    "AbsDiff_d",
    "Excess_p",
    "Shortfall_p",
    "NonZero",
    "Euclid_0",
]

_COMPARISON_FNS: list[Callable[[np.ndarray, EvalContext], np.ndarray]] = [
    lambda y, ctx: np.abs(y),
    lambda y, ctx: np.abs(y - ctx.p),
    lambda y, ctx: (np.abs(y - ctx.p) + ctx.d - 1) // ctx.d,
    lambda y, ctx: np.abs(y - ctx.n),
    lambda y, ctx: np.abs(y - ctx.d),
    lambda y, ctx: np.maximum(y - ctx.p, 0),
    lambda y, ctx: np.maximum(ctx.p - y, 0),
    lambda y, ctx: (y != 0).astype(np.int64),
    lambda y, ctx: (np.abs(y) + ctx.d - 1) // ctx.d,
]


def genome_from_names(
    transformations: Sequence[str],
    arithmetic: str = "add",
    aggregation: str = "Sum",
    comparison: str = "identity",
) -> Genome:
    """Build a genome by operation names; the layer-index bookkeeping stays here."""
    bits = [0] * GENOME_LENGTH
    if not transformations:
        raise ValueError("need at least one transformation name")
    for name in transformations:
        bits[T_SLICE.start + TRANSFORMATION_NAMES.index(name)] = 1
    bits[A_SLICE.start + ARITHMETIC_NAMES.index(arithmetic)] = 1
    bits[G_SLICE.start + AGGREGATION_NAMES.index(aggregation)] = 1
    bits[C_SLICE.start + COMPARISON_NAMES.index(comparison)] = 1
    return Genome(tuple(bits))


def alldifferent_reference_genome() -> Genome:
    """The canonical learned AllDifferent function: Count>0( count_eq_right )."""
    return genome_from_names(["count_eq_right"], "add", "Count>0", "identity")


def linear_sum_reference_genome() -> Genome:
    """The canonical learned LinearSum function: Euclid_p( Sum( identity ) )."""
    return genome_from_names(["identity"], "add", "Sum", "Euclid_p")


# ---------------------------------------------------------------------------
# Feed-forward evaluation
# ---------------------------------------------------------------------------


def _clamp(values: np.ndarray, diagnostics: Optional[EvalDiagnostics]) -> np.ndarray:
    if diagnostics is not None:
        over = int((values > SATURATION_CEILING).sum() + (values < -SATURATION_CEILING).sum())
        diagnostics.saturation_events += over
    return np.clip(values, -SATURATION_CEILING, SATURATION_CEILING)


def _forward(
    t_idx: tuple[int, ...],
    arith: int,
    agg: int,
    comp: int,
    ctx: EvalContext,
    vectors: list[np.ndarray],
    diagnostics: Optional[EvalDiagnostics],
) -> np.ndarray:
    # Addition cannot overflow int64 (at most 18 vectors of domain-sized
    # values), so the add path clamps once after aggregation; the multiply
    # path clamps every step to keep products inside int64.
    if arith == 0 or len(vectors) == 1:
        combined = vectors[0] if len(vectors) == 1 else np.add.reduce(vectors)
    else:
        combined = _clamp(vectors[0], diagnostics)
        for v in vectors[1:]:
            combined = _clamp(combined * np.clip(v, -SATURATION_CEILING, SATURATION_CEILING), diagnostics)
    if agg == 0:
        y = _clamp(combined.sum(axis=1), diagnostics)
    else:
        y = (combined > 0).sum(axis=1)  # bounded by the scope size
    out = _clamp(_COMPARISON_FNS[comp](y, ctx), diagnostics)
    return out if out.dtype == np.int64 else out.astype(np.int64)


def _plan_of(genome: Genome) -> tuple[tuple[int, ...], int, int, int]:
    return (
        tuple(genome.selected(T_SLICE)),
        genome.selected(A_SLICE)[0],
        genome.selected(G_SLICE)[0],
        genome.selected(C_SLICE)[0],
    )


def network_outputs(
    genome: Genome,
    ctx: EvalContext,
    X: np.ndarray,
    t_provider: Optional[Callable[[int], np.ndarray]] = None,
    diagnostics: Optional[EvalDiagnostics] = None,
) -> np.ndarray:
    """Feed a (m, n) matrix through the four layers; returns (m,) int64 >= 0.

    t_provider, when given, supplies precomputed transformation outputs by
    layer-local index (used to share work across many genomes on one space).
    """
    if not validate(genome):
        raise ValueError("genome violates layer cardinality rules")
    if X.ndim != 2 or X.shape[1] != ctx.n:
        raise ValueError(f"expected shape (m, {ctx.n}), got {X.shape}")
    t_idx, arith, agg, comp = _plan_of(genome)
    if t_provider is None:
        vectors = [_TRANSFORMATION_FNS[t](X, ctx) for t in t_idx]
    else:
        vectors = [t_provider(t) for t in t_idx]
    return _forward(t_idx, arith, agg, comp, ctx, vectors, diagnostics)


@dataclass(frozen=True)
class ErrorFunction:
    """A valid genome bound to an evaluation context."""

    genome: Genome
    ctx: EvalContext

    def __post_init__(self):
        if not validate(self.genome):
            raise ValueError("error function requires a valid genome")
        # Layer selections never change; solvers call this in a hot loop.
        object.__setattr__(self, "_plan", _plan_of(self.genome))

    def evaluate(self, x: Sequence[int], diagnostics: Optional[EvalDiagnostics] = None) -> int:
        if len(x) != self.ctx.n:
            raise ValueError(f"expected {self.ctx.n} values, got {len(x)}")
        X = np.asarray(x, dtype=np.int64)[None, :]
        return int(self.evaluate_batch(X, diagnostics=diagnostics)[0])

    def evaluate_batch(
        self, X: np.ndarray, diagnostics: Optional[EvalDiagnostics] = None
    ) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] != self.ctx.n:
            raise ValueError(f"expected shape (m, {self.ctx.n}), got {X.shape}")
        t_idx, arith, agg, comp = self._plan
        vectors = [_TRANSFORMATION_FNS[t](X, self.ctx) for t in t_idx]
        return _forward(t_idx, arith, agg, comp, self.ctx, vectors, diagnostics)

    def describe(self) -> str:
        return describe_genome(self.genome)


def describe_genome(g: Genome) -> str:
    """Symbolic rendering, innermost layer first, identity comparison elided."""
    if not validate(g):
        raise ValueError("cannot describe an invalid genome")
    names = [TRANSFORMATION_NAMES[t] for t in g.selected(T_SLICE)]
    symbol = _ARITHMETIC_SYMBOLS[ARITHMETIC_NAMES[g.selected(A_SLICE)[0]]]
    inner = symbol.join(names)
    agg = AGGREGATION_NAMES[g.selected(G_SLICE)[0]]
    text = f"{agg}( {inner} )"
    comp = COMPARISON_NAMES[g.selected(C_SLICE)[0]]
    if comp != "identity":
        text = f"{comp}( {text} )"
    return text


_DESCRIBE_RE = re.compile(
    r"^(?:(?P<comp>{comps})\(\s*)?(?P<agg>{aggs})\(\s*(?P<inner>[^()]*?)\s*\)(?(comp)\s*\))$".format(
        comps="|".join(re.escape(n) for n in COMPARISON_NAMES if n != "identity"),
        aggs="|".join(re.escape(n) for n in AGGREGATION_NAMES),
    )
)


def parse_describe(text: str) -> Genome:
    """Inverse of describe; omitted layers take their canonical defaults
    (arithmetic `add` for a single transformation, comparison `identity`)."""
    match = _DESCRIBE_RE.match(text.strip())
    if not match:
        raise ValueError(f"unparseable function description {text!r}")
    inner = match.group("inner")
    if " + " in inner and " * " in inner:
        raise ValueError(f"mixed arithmetic symbols in {text!r}")
    arithmetic = "mul" if " * " in inner else "add"
    names = [n.strip() for n in re.split(r" [+*] ", inner)]
    return genome_from_names(
        names,
        arithmetic=arithmetic,
        aggregation=match.group("agg"),
        comparison=match.group("comp") or "identity",
    )


# ---------------------------------------------------------------------------
# Loss and metrics
# ---------------------------------------------------------------------------


def regularization(g: Genome) -> float:
    """Length penalty in [0, 0.9]: 0.9 * selected operations / catalog size."""
    return 0.9 * g.count() / GENOME_LENGTH


class SpaceEvaluator:
    """Shares per-space transformation tensors across many genome losses.

    Transformation outputs depend only on the space and context, so each is
    computed once and reused by every genome the search tries.
    """

    def __init__(self, space: LabeledSpace):
        if not space.has_costs:
            raise ValueError("space costs are unset; fill them before computing losses")
        self.ctx = ctx_from_constraint(space.constraint)
        self.X = np.asarray(space.assignments, dtype=np.int64)
        self.costs = np.asarray(space.costs, dtype=np.int64)
        self._cache: dict[int, np.ndarray] = {}

    def _transformation(self, t: int) -> np.ndarray:
        if t not in self._cache:
            self._cache[t] = _TRANSFORMATION_FNS[t](self.X, self.ctx)
        return self._cache[t]

    def deviation(self, genome: Genome) -> int:
        out = network_outputs(genome, self.ctx, self.X, t_provider=self._transformation)
        return int(np.abs(out - self.costs).sum())

    def loss(self, genome: Genome) -> float:
        return self.deviation(genome) + regularization(genome)


def loss(g: Genome, space: LabeledSpace) -> float:
    """Eq.-style training loss: summed |prediction - cost| plus the length
    penalty. Costs must be present on every entry."""
    if not validate(g):
        raise ValueError("loss requires a valid genome")
    return SpaceEvaluator(space).loss(g)


def normalized_mean_error(f: ErrorFunction, space: LabeledSpace) -> float:
    """Mean |prediction - cost| over the space, divided by its scope size.

    The genome is evaluated under the space's own context, so a function
    learned at one scope can be scored on spaces of any size.
    """
    if len(space) == 0:
        raise ValueError("normalized mean error undefined for an empty space")
    if not space.has_costs:
        raise ValueError("space costs are unset")
    ctx = ctx_from_constraint(space.constraint)
    out = network_outputs(f.genome, ctx, np.asarray(space.assignments, dtype=np.int64))
    dev = np.abs(out - np.asarray(space.costs, dtype=np.int64)).mean()
    return float(dev) / space.constraint.n


# ---------------------------------------------------------------------------
# Genome files
# ---------------------------------------------------------------------------

_GENOME_MAGIC = "icn-genome v1"


def save_genome(f: ErrorFunction, path) -> None:
    ctx = f.ctx
    ctx_line = f"ctx n={ctx.n} d={ctx.d} p={ctx.p} lo={ctx.lo}"
    if ctx.kind is not None:
        ctx_line += f" kind={ctx.kind.value}"
    lines = [
        _GENOME_MAGIC,
        "".join(str(b) for b in f.genome.bits),
        ctx_line,
        f"# {describe_genome(f.genome)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_genome(path) -> ErrorFunction:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 3 or lines[0].strip() != _GENOME_MAGIC:
        raise ValueError(f"{path}: not a {_GENOME_MAGIC} file")
    bit_text = lines[1].strip()
    if len(bit_text) != GENOME_LENGTH or set(bit_text) - {"0", "1"}:
        raise ValueError(f"{path}: bit line must be {GENOME_LENGTH} 0/1 characters")
    genome = Genome(tuple(int(ch) for ch in bit_text))
    ctx_line = lines[2].strip()
    if not ctx_line.startswith("ctx "):
        raise ValueError(f"{path}: third line must start with `ctx `")
    fields = dict(tok.partition("=")[::2] for tok in ctx_line[4:].split())
    try:
        ctx = EvalContext(
            n=int(fields["n"]),
            d=int(fields["d"]),
            p=int(fields["p"]),
            lo=int(fields["lo"]),
            kind=parse_kind(fields["kind"]) if "kind" in fields else None,
        )
    except KeyError as exc:
        raise ValueError(f"{path}: ctx line missing {exc}") from None
    return ErrorFunction(genome, ctx)
