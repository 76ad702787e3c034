"""Admissibility diagnostics for semimetrics on sampled measure spaces.

Three independent signals: block-average traces over finer and finer
equal-measure partitions, the fraction of points whose eps-ball captures
sample mass, and the probability that n random points contain a large
mutually separated index set.  A report aggregates them into a verdict.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynsys import PointSample, SystemSpec, derive_rng, sample_points
from .errors import ParameterError, SizeError
from .semimetric import DistanceMatrix, Semimetric, distance_matrix

MatrixLike = DistanceMatrix | np.ndarray

# verdict thresholds; finite-sample calibration, not sharp constants
ADMISSIBLE_BALL_MASS = 0.9
DEGENERATE_BALL_MASS = 0.1
ADMISSIBLE_PC = 0.1
DEGENERATE_PC = 0.9
TRACE_DROP_FACTOR = 0.5
TRACE_L1_FACTOR = 0.1

MAX_FULL_BLOCK_MATRIX = 4096
_CHUNK_ROWS = 1024


def _as_values(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, DistanceMatrix):
        return matrix.values
    return np.asarray(matrix, dtype=float)


# ---------------------------------------------------------------------------
# partitions of the coordinate space into n equal-measure cells


def _cell_assignment(sample: PointSample, n: int, partition_kind: str) -> np.ndarray:
    if n < 1:
        raise ParameterError("cell count must be >= 1")
    if partition_kind == "DyadicIntervals":
        if sample.coords is None:
            raise ParameterError("dyadic partitioning needs coordinate points")
        level = int(round(math.log2(n)))
        if 2 ** level != n:
            raise ParameterError(f"dyadic partitioning needs a power of 2, got {n}")
        coords = sample.coords
        if coords.shape[1] == 1:
            idx = np.floor(coords[:, 0] * n).astype(int)
            return np.clip(idx, 0, n - 1)
        # split the square into 2^ceil(j/2) x 2^floor(j/2) equal rectangles
        nx = 2 ** ((level + 1) // 2)
        ny = 2 ** (level // 2)
        ix = np.clip(np.floor(coords[:, 0] * nx).astype(int), 0, nx - 1)
        iy = np.clip(np.floor(coords[:, 1] * ny).astype(int), 0, ny - 1)
        return ix * ny + iy
    if partition_kind == "EqualMeasureBlocks":
        if sample.coords is None:
            raise ParameterError("equal-measure blocks need coordinate points")
        order = np.argsort(sample.coords[:, 0], kind="stable")
        cells = np.empty(sample.m, dtype=int)
        for b, chunk in enumerate(np.array_split(order, n)):
            cells[chunk] = b
        return cells
    raise ParameterError(f"unknown partition kind {partition_kind!r}")


def _pair_stats(metric: Semimetric, sub: PointSample) -> tuple[int, float, float]:
    """(count, mean, variance) of metric values over unordered pairs in ``sub``."""
    c = sub.m
    total = 0.0
    total_sq = 0.0
    count = 0
    cols = np.arange(c)
    for start in range(0, c, _CHUNK_ROWS):
        rows = np.arange(start, min(start + _CHUNK_ROWS, c))
        block = metric.pairwise_block(sub, rows)
        vals = block[cols[None, :] > rows[:, None]]
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        count += vals.size
    if count == 0:
        return 0, 0.0, 0.0
    mean = total / count
    var = max(0.0, total_sq / count - mean * mean)
    return count, mean, var


@dataclass(frozen=True)
class BlockAverageMatrix:
    """Cell-pair means of a semimetric over an equal-measure partition."""

    block_count: int
    entries: np.ndarray
    partition_kind: str
    entries_stderr: np.ndarray
    masses: np.ndarray
    pair_counts: np.ndarray

    def __post_init__(self) -> None:
        if self.entries.shape != (self.block_count, self.block_count):
            raise ParameterError("block-average matrix has wrong shape")
        if np.any(self.entries < 0.0):
            raise ParameterError("block averages must be nonnegative")


def block_average_matrix(
    metric: Semimetric, sample: PointSample, n: int,
    partition_kind: str = "DyadicIntervals",
) -> BlockAverageMatrix:
    """Full matrix of empirical cell-pair means (equals the n^2-scaled cell
    integrals when cells carry measure exactly 1/n)."""
    m = sample.m
    if m > MAX_FULL_BLOCK_MATRIX:
        raise SizeError(f"full block matrix capped at m={MAX_FULL_BLOCK_MATRIX}")
    cells = _cell_assignment(sample, n, partition_kind)
    values = metric.pairwise(sample)
    flat = cells[:, None] * n + cells[None, :]
    sums = np.bincount(flat.ravel(), weights=values.ravel(), minlength=n * n)
    sums_sq = np.bincount(flat.ravel(), weights=(values * values).ravel(), minlength=n * n)
    counts = np.bincount(flat.ravel(), minlength=n * n).astype(float)
    cell_sizes = np.bincount(cells, minlength=n).astype(float)
    # remove the diagonal point pairs (k, k) from within-cell counts
    counts[np.arange(n) * n + np.arange(n)] -= cell_sizes
    entries = np.zeros(n * n)
    stderr = np.zeros(n * n)
    ok = counts > 0
    entries[ok] = sums[ok] / counts[ok]
    var = np.zeros(n * n)
    var[ok] = np.maximum(0.0, sums_sq[ok] / counts[ok] - entries[ok] ** 2)
    stderr[ok] = np.sqrt(var[ok] / counts[ok])
    return BlockAverageMatrix(
        block_count=n,
        entries=entries.reshape(n, n),
        partition_kind=partition_kind,
        entries_stderr=stderr.reshape(n, n),
        masses=cell_sizes / m,
        pair_counts=counts.reshape(n, n),
    )


# ---------------------------------------------------------------------------
# trace test


@dataclass(frozen=True)
class TracePoint:
    """One point of the trace curve: mass-weighted mean of within-cell means."""

    n: int
    trace_over_n: float
    stderr: float
    cells_skipped: int
    flagged: bool


def _trace_point(
    n: int, cells: np.ndarray, m: int, cell_stats
) -> TracePoint:
    sizes = np.bincount(cells, minlength=n)
    kept = [i for i in range(n) if sizes[i] >= 2]
    skipped = n - len(kept)
    if not kept:
        raise SizeError(f"all {n} cells have fewer than two points")
    masses = sizes[kept] / m
    weights = masses / masses.sum()
    trace = 0.0
    var_sum = 0.0
    for w, i in zip(weights, kept):
        count, mean, var = cell_stats(np.where(cells == i)[0])
        trace += w * mean
        var_sum += w * w * var / max(count, 1)
    return TracePoint(
        n=int(n), trace_over_n=float(trace), stderr=float(math.sqrt(var_sum)),
        cells_skipped=skipped, flagged=skipped > 0.1 * n,
    )


def trace_test(
    metric: Semimetric, sample: PointSample, n_schedule: Sequence[int],
    partition_kind: str = "DyadicIntervals",
) -> list[TracePoint]:
    """Trace curve of the block-average matrix over a partition schedule.

    Cells with fewer than two points are skipped and the remaining masses
    renormalized; a point is flagged when more than 10% of cells drop out.
    A curve decreasing toward zero is evidence of admissibility.
    """

    def cell_stats(idx: np.ndarray):
        return _pair_stats(metric, sample.subsample(idx))

    return [
        _trace_point(int(n), _cell_assignment(sample, int(n), partition_kind),
                     sample.m, cell_stats)
        for n in n_schedule
    ]


def trace_from_matrix(
    matrix: MatrixLike, sample: PointSample, n_schedule: Sequence[int],
    partition_kind: str = "DyadicIntervals",
) -> list[TracePoint]:
    """Same curve as ``trace_test`` computed from a precomputed value matrix."""
    values = _as_values(matrix)

    def make_stats(idx: np.ndarray):
        sub = values[np.ix_(idx, idx)]
        pairs = sub[np.triu_indices(idx.size, 1)]
        mean = float(pairs.mean())
        var = float(max(0.0, (pairs * pairs).mean() - mean * mean))
        return pairs.size, mean, var

    return [
        _trace_point(int(n), _cell_assignment(sample, int(n), partition_kind),
                     sample.m, make_stats)
        for n in n_schedule
    ]


TRACE_CSV_HEADER = ("metric", "n", "trace_over_n", "stderr")


def append_trace_csv(path, metric_label: str, points: Sequence[TracePoint]) -> None:
    new_file = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(TRACE_CSV_HEADER)
        for p in points:
            writer.writerow([metric_label, p.n, f"{p.trace_over_n:.17g}", f"{p.stderr:.17g}"])


# ---------------------------------------------------------------------------
# ball-mass test


def ball_mass_test(matrix: MatrixLike, eps: float) -> float:
    """Fraction of points whose closed eps-ball captures another sample point."""
    values = _as_values(matrix)
    m = values.shape[0]
    if m < 16:
        raise ParameterError(f"ball-mass test needs at least 16 points, got {m}")
    if not (eps > 0):
        raise ParameterError("eps must be positive")
    neighbors = (values <= eps).sum(axis=1) - 1
    return float((neighbors >= 1).mean())


# ---------------------------------------------------------------------------
# separated-set (random distance matrix) test


def greedy_separated_size(values: np.ndarray, c: float) -> int:
    """Size of the first-fit maximal subset with pairwise distances >= c."""
    chosen: list[int] = []
    for i in range(values.shape[0]):
        if all(values[i, j] >= c for j in chosen):
            chosen.append(i)
    return len(chosen)


def exact_separated_size(values: np.ndarray, c: float) -> int:
    """Largest subset with pairwise distances >= c (exact, for small n)."""
    n = values.shape[0]
    if n > 24:
        raise SizeError("exact separated-set search is capped at n=24")
    adjacency = values >= c
    np.fill_diagonal(adjacency, False)
    neighbor_mask = [0] * n
    for i in range(n):
        mask = 0
        for j in range(n):
            if adjacency[i, j]:
                mask |= 1 << j
        neighbor_mask[i] = mask
    best = 0

    def expand(size: int, candidates: int, excluded: int) -> None:
        nonlocal best
        if candidates == 0 and excluded == 0:
            best = max(best, size)
            return
        if size + bin(candidates).count("1") <= best:
            return
        pool = candidates | excluded
        pivot = (pool & -pool).bit_length() - 1
        rest = candidates & ~neighbor_mask[pivot]
        while rest:
            bit = rest & -rest
            v = bit.bit_length() - 1
            expand(size + 1, candidates & neighbor_mask[v], excluded & neighbor_mask[v])
            candidates &= ~bit
            excluded |= bit
            rest &= ~bit

    expand(0, (1 << n) - 1, 0)
    return best


def random_matrix_test(
    metric: Semimetric, system: SystemSpec, c: float, n: int, trials: int, seed: int,
) -> float:
    """Empirical probability that n i.i.d. points contain ceil(c*n) indices
    pairwise at distance >= c.

    Exact search certifies the event for n <= 16; beyond that a greedy
    maximal separated set is used (sound but possibly incomplete).  When
    c*n <= 1 the event is vacuous and the frequency is 1.
    """
    if not (0.0 < c < 1.0):
        raise ParameterError("separation level c must lie in (0, 1)")
    if n < 2:
        raise ParameterError("need at least two points per trial")
    if trials < 1:
        raise ParameterError("need at least one trial")
    required = max(1, math.ceil(c * n))
    hits = 0
    for t in range(trials):
        trial_seed = int(derive_rng(seed, 977, t).integers(0, 2 ** 62))
        sample = sample_points(system, n, trial_seed)
        values = metric.pairwise(sample)
        if required <= 1:
            hits += 1
            continue
        if n <= 16:
            size = exact_separated_size(values, c)
        else:
            size = greedy_separated_size(values, c)
        if size >= required:
            hits += 1
    return hits / trials


# ---------------------------------------------------------------------------
# aggregate report


@dataclass(frozen=True)
class AdmissibilityReport:
    """Aggregated diagnostics with a calibrated three-way verdict."""

    ball_mass_fraction: float
    pc_probability: float
    trace_curve: list[TracePoint] = field(default_factory=list)
    trace_ok: Optional[bool] = None
    empirical_l1: float = 0.0
    eps: float = 0.1
    c: float = 0.4
    verdict: str = "Inconclusive"

    def to_json(self) -> dict:
        return {
            "ball_mass_fraction": self.ball_mass_fraction,
            "pc_probability": self.pc_probability,
            "trace_curve": [
                {"n": p.n, "trace_over_n": p.trace_over_n, "stderr": p.stderr,
                 "cells_skipped": p.cells_skipped, "flagged": p.flagged}
                for p in self.trace_curve
            ],
            "trace_ok": self.trace_ok,
            "empirical_l1": self.empirical_l1,
            "eps": self.eps,
            "c": self.c,
            "verdict": self.verdict,
        }


def combine_verdict(
    ball_mass: float, pc_probability: float, trace_ok: Optional[bool]
) -> str:
    if ball_mass <= DEGENERATE_BALL_MASS or pc_probability >= DEGENERATE_PC:
        return "NotAdmissibleEvidence"
    if (
        ball_mass >= ADMISSIBLE_BALL_MASS
        and pc_probability <= ADMISSIBLE_PC
        and trace_ok is not False
    ):
        return "AdmissibleEvidence"
    return "Inconclusive"


def trace_evidence(points: Sequence[TracePoint], l1_norm: float) -> bool:
    """Curve dropped below half its start and below a tenth of the L1 norm."""
    first = points[0].trace_over_n
    last = points[-1].trace_over_n
    return last < TRACE_DROP_FACTOR * first and last < TRACE_L1_FACTOR * l1_norm


def admissibility_report(
    system: SystemSpec,
    metric: Semimetric,
    *,
    m: int = 1024,
    seed: int = 0,
    eps: float = 0.1,
    c: float = 0.4,
    pc_n: int = 64,
    pc_trials: int = 50,
    trace_schedule: Sequence[int] = (2, 4, 8, 16, 32),
) -> AdmissibilityReport:
    """Run all three diagnostics on one (system, metric) pair."""
    sample = sample_points(system, m, seed)
    dist = distance_matrix(metric, sample)
    off = ~np.eye(m, dtype=bool)
    l1 = float(dist.values[off].mean())
    ball = ball_mass_test(dist, eps)
    pc = random_matrix_test(metric, system, c, pc_n, pc_trials, seed)
    curve: list[TracePoint] = []
    trace_ok: Optional[bool] = None
    if sample.coords is not None:
        curve = trace_from_matrix(dist, sample, trace_schedule)
        trace_ok = trace_evidence(curve, l1)
    return AdmissibilityReport(
        ball_mass_fraction=ball, pc_probability=pc, trace_curve=curve,
        trace_ok=trace_ok, empirical_l1=l1, eps=eps, c=c,
        verdict=combine_verdict(ball, pc, trace_ok),
    )
