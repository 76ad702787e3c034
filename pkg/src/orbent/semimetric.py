"""Admissible semimetrics and the dynamical operations on them.

A :class:`Semimetric` wraps a descriptor tree (standard metrics, block
semimetrics, cut-offs, pull-backs, orbit averages) and evaluates it either on
single point pairs or, vectorized, on whole samples.  Symmetry is exact by
construction: scalar evaluation canonicalizes the argument order and matrix
evaluation mirrors the upper triangle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Union

import numpy as np

from .dynsys import Point, PointSample, SystemSpec, advance_sample, identity_system
from .errors import HorizonError, MetricTypeError, ParameterError

_REL_TOL = 1e-12


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class Partition:
    """Total assignment of points to blocks {0, ..., block_count-1}."""

    block_count: int
    kind: str = "custom"
    level: Optional[int] = None        # dyadic_intervals
    count: Optional[int] = None        # first_symbols
    alphabet: Optional[int] = None
    custom_assign: Optional[Callable[[Point], int]] = None

    def __post_init__(self) -> None:
        if self.block_count < 1:
            raise ParameterError("a partition needs at least one block")

    @property
    def symbol_need(self) -> int:
        return self.count if self.kind == "first_symbols" else 0

    def assign_indices(self, sample: PointSample) -> np.ndarray:
        if self.kind == "one_block":
            return np.zeros(sample.m, dtype=int)
        if self.kind == "dyadic_intervals":
            if sample.coords is None:
                raise MetricTypeError("dyadic interval partition needs coordinate points")
            idx = np.floor(sample.coords[:, 0] * self.block_count).astype(int)
            return np.clip(idx, 0, self.block_count - 1)
        if self.kind == "first_symbols":
            window = sample.symbol_window
            if window is None:
                raise MetricTypeError("first-symbols partition needs symbolic points")
            if window.shape[1] < self.count:
                raise HorizonError(
                    f"first-symbols partition needs {self.count} symbols, "
                    f"window has {window.shape[1]}"
                )
            idx = np.zeros(sample.m, dtype=int)
            for i in range(self.count):
                idx = idx * self.alphabet + window[:, i].astype(int)
            return idx
        return np.array([self.custom_assign(sample.point(i)) for i in range(sample.m)])

    def assign_point(self, p: Point) -> int:
        sample = _points_to_sample([p])
        return int(self.assign_indices(sample)[0])

    def to_json(self) -> dict:
        if self.kind == "dyadic_intervals":
            return {"kind": self.kind, "level": self.level}
        if self.kind == "first_symbols":
            return {"kind": self.kind, "count": self.count, "alphabet": self.alphabet}
        if self.kind == "one_block":
            return {"kind": self.kind}
        raise ParameterError("custom partitions are not serializable")

    @staticmethod
    def from_json(obj: dict) -> "Partition":
        kind = obj.get("kind")
        if kind == "dyadic_intervals":
            return dyadic_interval_partition(int(obj["level"]))
        if kind == "first_symbols":
            return first_symbols_partition(int(obj["count"]), int(obj["alphabet"]))
        if kind == "one_block":
            return one_block_partition()
        raise ParameterError(f"unknown partition kind {kind!r}")


def dyadic_interval_partition(level: int) -> Partition:
    """2**level equal dyadic intervals of the first coordinate."""
    if level < 0:
        raise ParameterError("dyadic level must be >= 0")
    return Partition(block_count=2 ** level, kind="dyadic_intervals", level=level)


def first_symbols_partition(count: int, alphabet: int = 2) -> Partition:
    """Cylinder partition by the first ``count`` symbols."""
    if count < 1 or alphabet < 2:
        raise ParameterError("need count >= 1 and alphabet >= 2")
    return Partition(
        block_count=alphabet ** count, kind="first_symbols", count=count, alphabet=alphabet
    )


def one_block_partition() -> Partition:
    return Partition(block_count=1, kind="one_block")


def custom_partition(assign: Callable[[Point], int], block_count: int) -> Partition:
    return Partition(block_count=block_count, kind="custom", custom_assign=assign)


# ---------------------------------------------------------------------------
# descriptor tree


@dataclass(frozen=True)
class Euclidean1D:
    """|x - y| on the first coordinate."""


@dataclass(frozen=True)
class CircleArc:
    """Arc distance min(|x-y|, 1-|x-y|) on the first coordinate."""


@dataclass(frozen=True)
class TorusArcL1:
    """Sum of per-coordinate arc distances."""


@dataclass(frozen=True)
class FirstSymbolCut:
    """1 if the leading symbols differ, else 0."""


@dataclass(frozen=True)
class Discrete:
    """1 if the points differ at all, else 0."""


@dataclass(frozen=True)
class Zero:
    """Identically zero."""


@dataclass(frozen=True)
class ClosedForm:
    tag: str


@dataclass(frozen=True)
class Block:
    partition: Partition


@dataclass(frozen=True)
class Cutoff:
    inner: "Descriptor"
    level: float


@dataclass(frozen=True)
class Mix:
    """Convex combination t*a + (1-t)*b; the cone is closed under it."""

    a: "Descriptor"
    b: "Descriptor"
    t: float


@dataclass(frozen=True)
class PullBack:
    inner: "Descriptor"
    system: SystemSpec
    k: int


@dataclass(frozen=True)
class Average:
    inner: "Descriptor"
    system: SystemSpec
    n: int


Descriptor = Union[
    Euclidean1D, CircleArc, TorusArcL1, FirstSymbolCut, Discrete, Zero,
    ClosedForm, Block, Cutoff, Mix, PullBack, Average,
]

_STANDARD_TAGS = {
    "euclidean_1d": Euclidean1D,
    "circle_arc": CircleArc,
    "torus_arc_l1": TorusArcL1,
    "first_symbol_cut": FirstSymbolCut,
    "discrete": Discrete,
    "zero": Zero,
}


def _closed_form_mean_rotated_abs_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Average of |{x+t} - {y+t}| over a full turn: 2*d*(1-d) with d = |x-y|.
    d = np.abs(a - b)
    return 2.0 * d * (1.0 - d)


def _closed_form_abs_plus_square(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a - b) + np.abs(a * a - b * b)


def _closed_form_squared_abs_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Violates the triangle inequality; shipped as a negative control.
    return (a - b) ** 2


CLOSED_FORMS: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "mean_rotated_abs_diff": _closed_form_mean_rotated_abs_diff,
    "abs_plus_square": _closed_form_abs_plus_square,
    "squared_abs_diff": _closed_form_squared_abs_diff,
}


# ---------------------------------------------------------------------------
# evaluation engine


def _coords(sample: PointSample) -> np.ndarray:
    if sample.coords is None:
        raise MetricTypeError("this semimetric needs coordinate points")
    return sample.coords


def _window(sample: PointSample, need: int) -> np.ndarray:
    window = sample.symbol_window
    if window is None:
        raise MetricTypeError("this semimetric needs symbolic points")
    if window.shape[1] < need:
        raise HorizonError(
            f"evaluation needs {need} symbols, window has {window.shape[1]}"
        )
    return window


def _values_block(desc: Descriptor, sample: PointSample, rows: np.ndarray) -> np.ndarray:
    """Values rho(p_r, p_c) for r in rows and all c, shape (len(rows), m)."""
    if isinstance(desc, Zero):
        return np.zeros((len(rows), sample.m))
    if isinstance(desc, Euclidean1D):
        c = _coords(sample)[:, 0]
        return np.abs(c[rows, None] - c[None, :])
    if isinstance(desc, CircleArc):
        c = _coords(sample)[:, 0]
        d = np.abs(c[rows, None] - c[None, :])
        return np.minimum(d, 1.0 - d)
    if isinstance(desc, TorusArcL1):
        c = _coords(sample)
        acc = np.zeros((len(rows), sample.m))
        for j in range(c.shape[1]):
            d = np.abs(c[rows, None, j] - c[None, :, j])
            acc += np.minimum(d, 1.0 - d)
        return acc
    if isinstance(desc, ClosedForm):
        fn = CLOSED_FORMS.get(desc.tag)
        if fn is None:
            raise ParameterError(f"unknown closed-form tag {desc.tag!r}")
        c = _coords(sample)[:, 0]
        return fn(c[rows, None], c[None, :])
    if isinstance(desc, FirstSymbolCut):
        s = _window(sample, 1)[:, 0]
        return (s[rows, None] != s[None, :]).astype(float)
    if isinstance(desc, Discrete):
        if sample.coords is not None:
            c = sample.coords
            return np.any(c[rows, None, :] != c[None, :, :], axis=2).astype(float)
        s = _window(sample, 1)
        return np.any(s[rows, None, :] != s[None, :, :], axis=2).astype(float)
    if isinstance(desc, Block):
        idx = desc.partition.assign_indices(sample)
        return (idx[rows, None] != idx[None, :]).astype(float)
    if isinstance(desc, Cutoff):
        return np.minimum(_values_block(desc.inner, sample, rows), desc.level)
    if isinstance(desc, Mix):
        return desc.t * _values_block(desc.a, sample, rows) \
            + (1.0 - desc.t) * _values_block(desc.b, sample, rows)
    if isinstance(desc, PullBack):
        return _values_block(desc.inner, advance_sample(sample, desc.k, desc.system), rows)
    if isinstance(desc, Average):
        state = sample
        acc = _values_block(desc.inner, state, rows)
        for _ in range(1, desc.n):
            state = advance_sample(state, 1, desc.system)
            acc += _values_block(desc.inner, state, rows)
        acc /= desc.n
        return acc
    raise ParameterError(f"unknown descriptor {type(desc).__name__}")


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Mirror the upper triangle into the lower one and zero the diagonal."""
    iu, ju = np.triu_indices(matrix.shape[0], 1)
    matrix[ju, iu] = matrix[iu, ju]
    np.fill_diagonal(matrix, 0.0)
    return matrix


def _points_to_sample(points: list[Point]) -> PointSample:
    if points[0].coords is not None:
        coords = np.stack([p.coords for p in points]).astype(float)
        return PointSample(identity_system(), 0, coords=coords)
    width = min(p.symbols.shape[0] for p in points)
    symbols = np.stack([p.symbols[:width] for p in points])
    return PointSample(identity_system(), 0, symbols=symbols)


def _point_key(p: Point):
    arr = p.coords if p.coords is not None else p.symbols
    return tuple(arr.tolist())


def _symbol_horizon(desc: Descriptor) -> int:
    if isinstance(desc, (FirstSymbolCut, Discrete)):
        return 1
    if isinstance(desc, Block):
        return desc.partition.symbol_need
    if isinstance(desc, Cutoff):
        return _symbol_horizon(desc.inner)
    if isinstance(desc, Mix):
        return max(_symbol_horizon(desc.a), _symbol_horizon(desc.b))
    if isinstance(desc, PullBack):
        extra = desc.k if desc.system.is_symbolic else 0
        return extra + _symbol_horizon(desc.inner)
    if isinstance(desc, Average):
        extra = desc.n - 1 if desc.system.is_symbolic else 0
        return extra + _symbol_horizon(desc.inner)
    return 0


class Semimetric:
    """A symmetric nonnegative pair evaluator described by a descriptor tree."""

    def __init__(self, descriptor: Descriptor):
        self.descriptor = descriptor

    def evaluate(self, p: Point, q: Point) -> float:
        if _point_key(q) < _point_key(p):
            p, q = q, p
        sample = _points_to_sample([p, q])
        return float(_values_block(self.descriptor, sample, np.array([0]))[0, 1])

    def __call__(self, p: Point, q: Point) -> float:
        return self.evaluate(p, q)

    def pairwise(self, sample: PointSample) -> np.ndarray:
        """Full m-by-m value matrix with exact symmetry and zero diagonal."""
        rows = np.arange(sample.m)
        return _symmetrize(_values_block(self.descriptor, sample, rows))

    def pairwise_block(self, sample: PointSample, rows: np.ndarray) -> np.ndarray:
        """Rectangular block of values against the whole sample (no mirroring)."""
        return _values_block(self.descriptor, sample, np.asarray(rows, dtype=int))

    def symbol_horizon(self) -> int:
        """Symbols needed past the orbit start to evaluate this semimetric."""
        return _symbol_horizon(self.descriptor)

    def to_json(self) -> dict:
        return _descriptor_to_json(self.descriptor)

    @staticmethod
    def from_json(obj: dict) -> "Semimetric":
        return Semimetric(_descriptor_from_json(obj))

    def label(self) -> str:
        return _descriptor_label(self.descriptor)

    def same_descriptor(self, other: "Semimetric") -> bool:
        return _descriptor_label(self.descriptor) == _descriptor_label(other.descriptor)

    def __eq__(self, other) -> bool:
        return isinstance(other, Semimetric) and self.same_descriptor(other)

    def __hash__(self) -> int:
        return hash(self.label())

    def __repr__(self) -> str:
        return f"Semimetric({self.label()})"


# ---------------------------------------------------------------------------
# constructors


def make_standard(tag: Union[str, Descriptor]) -> Semimetric:
    """Named standard semimetrics; also accepts a ready descriptor."""
    if isinstance(tag, str):
        cls = _STANDARD_TAGS.get(tag)
        if cls is None:
            raise ParameterError(
                f"unknown semimetric tag {tag!r}; known: {sorted(_STANDARD_TAGS)}"
            )
        return Semimetric(cls())
    return Semimetric(tag)


def closed_form(tag: str) -> Semimetric:
    if tag not in CLOSED_FORMS:
        raise ParameterError(f"unknown closed-form tag {tag!r}; known: {sorted(CLOSED_FORMS)}")
    return Semimetric(ClosedForm(tag))


def block_semimetric(partition: Partition) -> Semimetric:
    return Semimetric(Block(partition))


def pull_back(metric: Semimetric, system: SystemSpec, k: int) -> Semimetric:
    """The semimetric (x, y) -> rho(T^k x, T^k y)."""
    if k < 0:
        raise ParameterError("pull-back count must be >= 0")
    if k == 0 or system.kind == "Identity":
        return metric
    return Semimetric(PullBack(metric.descriptor, system, k))


def average_metric(metric: Semimetric, system: SystemSpec, n: int) -> Semimetric:
    """Arithmetic mean of the first n pull-backs of ``metric`` along the orbit.

    The identity system is an exact fixed point of averaging, so it returns
    the metric itself.
    """
    if n < 1:
        raise ParameterError("averaging length must be >= 1")
    if n == 1 or system.kind == "Identity":
        return metric
    return Semimetric(Average(metric.descriptor, system, n))


def mix(metric_a: Semimetric, metric_b: Semimetric, t: float) -> Semimetric:
    """Convex combination t*a + (1-t)*b of two semimetrics."""
    if not (0.0 <= t <= 1.0):
        raise ParameterError("mixing weight must lie in [0, 1]")
    return Semimetric(Mix(metric_a.descriptor, metric_b.descriptor, float(t)))


def cutoff(metric: Semimetric, level: float) -> Semimetric:
    """Pointwise cap min(rho, level); still a semimetric."""
    if not (level > 0):
        raise ParameterError("cut-off level must be positive")
    return Semimetric(Cutoff(metric.descriptor, float(level)))


# ---------------------------------------------------------------------------
# serialization


def _descriptor_to_json(desc: Descriptor) -> dict:
    if isinstance(desc, Cutoff):
        return {"type": "Cutoff", "level": desc.level, "inner": _descriptor_to_json(desc.inner)}
    if isinstance(desc, PullBack):
        return {
            "type": "PullBack", "k": desc.k, "system": desc.system.to_json(),
            "inner": _descriptor_to_json(desc.inner),
        }
    if isinstance(desc, Average):
        return {
            "type": "Average", "n": desc.n, "system": desc.system.to_json(),
            "inner": _descriptor_to_json(desc.inner),
        }
    if isinstance(desc, Mix):
        return {
            "type": "Mix", "t": desc.t,
            "a": _descriptor_to_json(desc.a), "b": _descriptor_to_json(desc.b),
        }
    if isinstance(desc, Block):
        return {"type": "Block", "partition": desc.partition.to_json()}
    if isinstance(desc, ClosedForm):
        return {"type": "ClosedForm", "tag": desc.tag}
    return {"type": type(desc).__name__}


def _descriptor_from_json(obj: dict) -> Descriptor:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ParameterError("semimetric JSON must be an object with a 'type' field")
    kind = obj["type"]
    simple = {
        "Euclidean1D": Euclidean1D, "CircleArc": CircleArc, "TorusArcL1": TorusArcL1,
        "FirstSymbolCut": FirstSymbolCut, "Discrete": Discrete, "Zero": Zero,
    }
    if kind in simple:
        return simple[kind]()
    if kind == "ClosedForm":
        return ClosedForm(obj["tag"])
    if kind == "Block":
        return Block(Partition.from_json(obj["partition"]))
    if kind == "Cutoff":
        return Cutoff(_descriptor_from_json(obj["inner"]), float(obj["level"]))
    if kind == "Mix":
        return Mix(
            _descriptor_from_json(obj["a"]), _descriptor_from_json(obj["b"]),
            float(obj["t"]),
        )
    if kind == "PullBack":
        return PullBack(
            _descriptor_from_json(obj["inner"]), SystemSpec.from_json(obj["system"]),
            int(obj["k"]),
        )
    if kind == "Average":
        return Average(
            _descriptor_from_json(obj["inner"]), SystemSpec.from_json(obj["system"]),
            int(obj["n"]),
        )
    raise ParameterError(f"unknown descriptor type {kind!r}")


def _descriptor_label(desc: Descriptor) -> str:
    if isinstance(desc, Cutoff):
        return f"Cutoff[{_descriptor_label(desc.inner)};level={desc.level:.17g}]"
    if isinstance(desc, PullBack):
        return f"PullBack[{_descriptor_label(desc.inner)};k={desc.k};{desc.system.label()}]"
    if isinstance(desc, Average):
        return f"Average[{_descriptor_label(desc.inner)};n={desc.n};{desc.system.label()}]"
    if isinstance(desc, Mix):
        return (f"Mix[{_descriptor_label(desc.a)};{_descriptor_label(desc.b)};"
                f"t={desc.t:.17g}]")
    if isinstance(desc, Block):
        part = desc.partition
        if part.kind == "dyadic_intervals":
            return f"Block[dyadic_intervals;level={part.level}]"
        if part.kind == "first_symbols":
            return f"Block[first_symbols;count={part.count};alphabet={part.alphabet}]"
        return f"Block[{part.kind};blocks={part.block_count}]"
    if isinstance(desc, ClosedForm):
        return f"ClosedForm[{desc.tag}]"
    names = {
        "Euclidean1D": "euclidean_1d", "CircleArc": "circle_arc",
        "TorusArcL1": "torus_arc_l1", "FirstSymbolCut": "first_symbol_cut",
        "Discrete": "discrete", "Zero": "zero",
    }
    return names[type(desc).__name__]


# ---------------------------------------------------------------------------
# distance matrices


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative value matrix of a semimetric on a point sample."""

    values: np.ndarray
    sample_ref: str = ""

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ParameterError("distance matrix must be square")
        if not np.all(np.isfinite(v)):
            raise ParameterError("distance matrix entries must be finite")
        if np.any(v < 0.0):
            raise ParameterError("distance matrix entries must be nonnegative")
        if not np.array_equal(v, v.T):
            raise ParameterError("distance matrix must be exactly symmetric")
        if np.any(np.diagonal(v) != 0.0):
            raise ParameterError("distance matrix diagonal must be exactly zero")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path) -> None:
        np.savetxt(path, self.values, fmt="%.17g", delimiter=",")


def distance_matrix(metric: Semimetric, sample: PointSample) -> DistanceMatrix:
    """Pairwise matrix of ``metric`` on the sample (symmetric, zero diagonal)."""
    if sample.m < 1:
        raise ParameterError("distance matrix needs at least one point")
    return DistanceMatrix(metric.pairwise(sample), sample.fingerprint())


def streamed_average_matrices(
    metric: Semimetric, system: SystemSpec, sample: PointSample, n_values: Iterable[int]
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (n, pairwise matrix of the n-step orbit average) in one orbit pass.

    Accumulation order matches ``average_metric(metric, system, n)`` exactly,
    so the yielded matrices are bit-identical to the one-shot computation.
    """
    schedule = sorted(set(int(n) for n in n_values))
    if not schedule or schedule[0] < 1:
        raise ParameterError("average lengths must be >= 1")
    rows = np.arange(sample.m)
    if system.kind == "Identity":
        base = _symmetrize(_values_block(metric.descriptor, sample, rows))
        for n in schedule:
            yield n, base.copy()
        return
    state = sample
    acc = _values_block(metric.descriptor, state, rows)
    steps = 1
    for n in schedule:
        while steps < n:
            state = advance_sample(state, 1, system)
            acc += _values_block(metric.descriptor, state, rows)
            steps += 1
        yield n, _symmetrize(acc / n)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class AxiomReport:
    """Observed semimetric-axiom violations on a finite sample."""

    symmetry_violation: float
    triangle_defect: float
    triples_checked: int
    tol: float

    @property
    def ok(self) -> bool:
        return self.symmetry_violation <= self.tol and self.triangle_defect <= self.tol


def check_axioms(
    metric: Semimetric, sample: PointSample, tol: float = 1e-9,
    seed: int = 0, max_triples: int = 100_000,
) -> AxiomReport:
    """Measure symmetry and triangle defects; violations are reported, not raised.

    All m^3 triples are scanned when affordable, otherwise a seeded random
    subset of at least ``max_triples``.
    """
    m = sample.m
    if m < 3:
        raise ParameterError("axiom check needs at least three points")
    matrix = metric.pairwise(sample)
    sym = float(np.max(np.abs(matrix - matrix.T)))
    defect = 0.0
    if m ** 3 <= max_triples:
        for j in range(m):
            cand = matrix - matrix[:, j:j + 1] - matrix[j:j + 1, :]
            defect = max(defect, float(cand.max()))
        triples = m ** 3
    else:
        rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, m]))
        i, j, k = (rng.integers(0, m, size=max_triples) for _ in range(3))
        cand = matrix[i, k] - matrix[i, j] - matrix[j, k]
        defect = float(cand.max())
        triples = max_triples
    return AxiomReport(sym, max(0.0, defect), triples, tol)


def empirical_l1(
    m1: Semimetric, m2: Semimetric, sample: PointSample, chunk_rows: int = 2048
) -> float:
    """Mean of |rho1 - rho2| over all ordered pairs of distinct sample points."""
    m = sample.m
    if m < 2:
        raise ParameterError("empirical L1 needs at least two points")
    total = 0.0
    for start in range(0, m, chunk_rows):
        rows = np.arange(start, min(start + chunk_rows, m))
        block = np.abs(m1.pairwise_block(sample, rows) - m2.pairwise_block(sample, rows))
        block[np.arange(len(rows)), rows] = 0.0
        total += float(block.sum())
    return total / (m * (m - 1))


def mnorm_bounds(
    pair: tuple[Semimetric, Semimetric], sample: PointSample
) -> tuple[float, float]:
    """Empirical bracket for the dominating-semimetric norm of rho1 - rho2.

    The lower bound is the empirical L1 distance.  The upper bound is the best
    of three explicit dominating semimetrics: the sum rho1 + rho2, a constant
    cap on the largest observed |difference|, and, for cut-off pairs, the
    two-zone construction anchored at the sample point that minimizes it.
    """
    m1, m2 = pair
    m = sample.m
    if m < 2:
        raise ParameterError("norm bounds need at least two points")
    v1 = m1.pairwise(sample)
    v2 = m2.pairwise(sample)
    off = ~np.eye(m, dtype=bool)
    diff = np.abs(v1 - v2)
    lower = float(diff[off].mean())
    uppers = [float((v1 + v2)[off].mean()), float(diff[off].max())]

    base = _cutoff_base(m1, m2, v1, v2)
    if base is not None:
        base_values, level = base
        radius = level / 2.0
        best = math.inf
        for x in range(m):
            d = base_values[x]
            in_ball = d <= radius
            dominator = np.where(
                in_ball[:, None] & in_ball[None, :], 0.0,
                np.where(
                    ~in_ball[:, None] & ~in_ball[None, :], base_values,
                    np.where(~in_ball[:, None], d[:, None], d[None, :]),
                ),
            )
            best = min(best, float(dominator[off].mean()))
        uppers.append(best)
    return lower, min(uppers)


def _cutoff_base(m1, m2, v1, v2):
    """Detect a (rho, cutoff(rho, level)) pair; return (base matrix, level)."""
    d1, d2 = m1.descriptor, m2.descriptor
    if isinstance(d2, Cutoff) and _descriptor_label(d2.inner) == _descriptor_label(d1):
        return v1, d2.level
    if isinstance(d1, Cutoff) and _descriptor_label(d1.inner) == _descriptor_label(d2):
        return v2, d1.level
    return None
