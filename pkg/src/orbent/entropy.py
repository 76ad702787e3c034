"""Entropy estimators for empirical metric measure spaces.

Two routes to the entropy of a sampled space at resolution eps: a greedy
covering count bracketed by a packing lower bound, and the least entropy of a
finite atomic measure within transport distance eps of the empirical measure.
Transport costs are solved exactly as transportation linear programs.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .dynsys import PointSample, SystemSpec, derive_rng, sample_points
from .errors import InfeasibleError, ParameterError, SizeError
from .semimetric import DistanceMatrix, Semimetric, average_metric, distance_matrix

_REL_TOL = 1e-12
MAX_TRANSPORT_SUPPORT = 4096
MEDOID_RESTARTS = 5

MatrixLike = Union[DistanceMatrix, np.ndarray]


def _as_values(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, DistanceMatrix):
        return matrix.values
    return np.asarray(matrix, dtype=float)


# ---------------------------------------------------------------------------
# atomic measures and transport


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely supported probability measure given by atom indices and weights."""

    atom_indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        idx = np.asarray(self.atom_indices, dtype=int)
        w = np.asarray(self.weights, dtype=float)
        if idx.ndim != 1 or w.shape != idx.shape or idx.size == 0:
            raise ParameterError("atoms and weights must be matching nonempty vectors")
        if np.any(w <= 0.0):
            raise ParameterError("atomic weights must be positive")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ParameterError("atomic weights must sum to 1 within 1e-12")
        # canonicalize: merge duplicate atoms, sort by index
        uniq, inverse = np.unique(idx, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, w)
        object.__setattr__(self, "atom_indices", uniq)
        object.__setattr__(self, "weights", merged)

    @property
    def size(self) -> int:
        return int(self.atom_indices.size)

    @staticmethod
    def uniform(indices) -> "AtomicMeasure":
        idx = np.asarray(indices, dtype=int)
        return AtomicMeasure(idx, np.full(idx.size, 1.0 / idx.size))


def atomic_entropy(measure: AtomicMeasure) -> float:
    """Entropy -sum w log2 w in bits, with 0 log 0 = 0."""
    w = measure.weights
    return float(-(w * np.log2(w)).sum())


def kantorovich_distance(
    mu1: AtomicMeasure,
    mu2: AtomicMeasure,
    ground: Union[MatrixLike, Semimetric],
    sample: Optional[PointSample] = None,
) -> float:
    """Exact optimal transport cost between two atomic measures.

    ``ground`` is a distance matrix indexed by the atoms, or a semimetric
    together with the sample the atom indices refer to.  Solved to optimality
    as a transportation linear program (dual simplex, no regularization).
    """
    if isinstance(ground, Semimetric):
        if sample is None:
            raise ParameterError("a semimetric ground needs the point sample")
        union = np.union1d(mu1.atom_indices, mu2.atom_indices)
        sub = sample.subsample(union)
        values = ground.pairwise(sub)
        pos = {int(g): i for i, g in enumerate(union)}
        rows = np.array([pos[int(i)] for i in mu1.atom_indices])
        cols = np.array([pos[int(j)] for j in mu2.atom_indices])
        cost = values[np.ix_(rows, cols)]
    else:
        values = _as_values(ground)
        cost = values[np.ix_(mu1.atom_indices, mu2.atom_indices)]
    if mu1.size + mu2.size > MAX_TRANSPORT_SUPPORT:
        raise SizeError(
            f"combined support {mu1.size + mu2.size} exceeds {MAX_TRANSPORT_SUPPORT}"
        )
    if np.any(cost < 0.0):
        raise ParameterError("transport needs nonnegative distances")
    return _transport_cost(cost, mu1.weights, mu2.weights)


def _transport_cost(cost: np.ndarray, supply: np.ndarray, demand: np.ndarray) -> float:
    n1, n2 = cost.shape
    if n1 == 1:
        return float((cost[0] * demand).sum())
    if n2 == 1:
        return float((cost[:, 0] * supply).sum())
    # transportation LP: rows emit supply, columns absorb demand
    row_idx = np.repeat(np.arange(n1), n2)
    col_idx = n1 + np.tile(np.arange(n2), n1)
    var = np.arange(n1 * n2)
    a_eq = sparse.coo_matrix(
        (
            np.ones(2 * n1 * n2),
            (np.concatenate([row_idx, col_idx]), np.concatenate([var, var])),
        ),
        shape=(n1 + n2, n1 * n2),
    ).tocsr()
    b_eq = np.concatenate([supply, demand])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, method="highs")
    if not res.success:
        raise InfeasibleError(f"transport LP failed: {res.message}")
    return max(0.0, float(res.fun))


# ---------------------------------------------------------------------------
# estimates


@dataclass(frozen=True)
class EpsEntropyEstimate:
    """One entropy estimate at resolution eps, with provenance."""

    eps: float
    method: str
    value_bits: float
    lower_bound_bits: float
    k: int
    sample_size: int
    seed: int

    def __post_init__(self) -> None:
        if self.lower_bound_bits > self.value_bits + 1e-12:
            raise ParameterError("lower bound must not exceed the estimate")

    def to_json(self) -> dict:
        return {
            "eps": self.eps, "method": self.method, "value_bits": self.value_bits,
            "lower_bound_bits": self.lower_bound_bits, "k": self.k,
            "sample_size": self.sample_size, "seed": self.seed,
        }


def _discard_budget(eps: float, m: int) -> int:
    # empirical mirror of the mass-<eps exceptional set
    return int(math.floor(eps * m))


def eps_entropy_cover(matrix: MatrixLike, eps: float, seed: int = 0) -> EpsEntropyEstimate:
    """Greedy covering estimate of the eps-entropy of the sampled space.

    Greedy max-coverage with closed balls of radius eps/2 until all but
    floor(eps*m) points are covered; the count is an upper bound on the
    minimal number of diameter-<eps sets.  The lower bound comes from a
    greedy eps-separated subset: each admissible set holds at most one
    separated point and the exceptional set can absorb at most the discard
    budget of them.
    """
    values = _as_values(matrix)
    m = values.shape[0]
    if m < 2:
        raise SizeError("covering entropy needs at least two points")
    if not (eps > 0):
        raise ParameterError("eps must be positive")
    discard = _discard_budget(eps, m)
    target = max(1, m - discard)

    if float(values.max()) <= eps * (1.0 + _REL_TOL):
        # the whole sample is one admissible block
        k = 1
    else:
        balls = values <= (eps / 2.0) * (1.0 + _REL_TOL)
        covered = np.zeros(m, dtype=bool)
        n_covered = 0
        k = 0
        while n_covered < target:
            gains = balls[:, ~covered].sum(axis=1)
            best = int(np.argmax(gains))
            gain = int(gains[best])
            if gain <= 1:
                # every remaining ball adds exactly one point (its center)
                k += target - n_covered
                break
            covered |= balls[best]
            n_covered = int(covered.sum())
            k += 1

    separated = values > eps * (1.0 + _REL_TOL)
    chosen: list[int] = []
    for i in range(m):
        if all(separated[i, j] for j in chosen):
            chosen.append(i)
    lower_k = max(1, len(chosen) - discard)

    return EpsEntropyEstimate(
        eps=float(eps), method="Covering",
        value_bits=math.log2(k), lower_bound_bits=math.log2(lower_k),
        k=k, sample_size=m, seed=int(seed),
    )


def _kmedoids(values: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Medoid improvement until no within-cluster swap helps; returns medoid indices."""
    m = values.shape[0]
    medoids = np.sort(rng.choice(m, size=k, replace=False))
    for _ in range(100):
        assign = np.argmin(values[:, medoids], axis=1)
        new_medoids = medoids.copy()
        for label in range(k):
            members = np.where(assign == label)[0]
            if members.size == 0:
                continue
            within = values[np.ix_(members, members)].sum(axis=1)
            new_medoids[label] = members[int(np.argmin(within))]
        new_medoids = np.sort(new_medoids)
        if np.array_equal(new_medoids, medoids):
            break
        medoids = new_medoids
    return medoids


def _medoid_measure(values: np.ndarray, k: int, seed: int) -> AtomicMeasure:
    """Best-of-restarts k-medoid quantization of the empirical measure."""
    m = values.shape[0]
    if k >= m:
        return AtomicMeasure.uniform(np.arange(m))
    best = None
    best_cost = math.inf
    for restart in range(MEDOID_RESTARTS):
        medoids = _kmedoids(values, k, derive_rng(seed, 211, restart))
        cost = float(values[:, medoids].min(axis=1).mean())
        if cost < best_cost:
            best_cost = cost
            best = medoids
    assign = np.argmin(values[:, best], axis=1)
    weights = np.bincount(assign, minlength=best.size) / m
    keep = weights > 0
    return AtomicMeasure(best[keep], weights[keep])


def eps_entropy_kantorovich(
    matrix: MatrixLike, eps: float, seed: int = 0
) -> EpsEntropyEstimate:
    """Least atomic-measure entropy within transport distance eps of the sample.

    Candidate measures are k-medoid quantizations with cluster-mass weights;
    k runs through a doubling-then-bisection schedule and the smallest entropy
    among the feasible candidates is returned (an upper bound on the true
    infimum).  No covering-free lower bound is available, so it is 0.
    """
    values = _as_values(matrix)
    m = values.shape[0]
    if m < 2:
        raise SizeError("quantization entropy needs at least two points")
    if not (eps > 0):
        raise ParameterError("eps must be positive")
    empirical = AtomicMeasure.uniform(np.arange(m))
    slack = eps * (1.0 + _REL_TOL)

    feasible: dict[int, tuple[float, int]] = {}

    def try_k(k: int) -> bool:
        nu = _medoid_measure(values, k, seed)
        dist = kantorovich_distance(empirical, nu, values)
        ok = dist < slack
        if ok:
            feasible[k] = (atomic_entropy(nu), nu.size)
        return ok

    # doubling until feasible, then bisect down to the frontier
    k = 1
    while k < m and not try_k(k):
        k *= 2
    if k >= m:
        if not try_k(m):
            raise InfeasibleError("quantization infeasible even at full support")
        k = m
    lo, hi = k // 2, k
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if try_k(mid):
            hi = mid
        else:
            lo = mid

    best_h, best_size = min(feasible.values())
    return EpsEntropyEstimate(
        eps=float(eps), method="Kantorovich",
        value_bits=best_h, lower_bound_bits=0.0,
        k=best_size, sample_size=m, seed=int(seed),
    )


def entropy_estimate(
    system: SystemSpec,
    metric: Semimetric,
    n: int,
    eps: float,
    m: int,
    seed: int,
    method: str = "Covering",
) -> EpsEntropyEstimate:
    """Full pipeline: sample, average the metric n steps, estimate entropy."""
    sample = sample_points(system, m, seed)
    averaged = average_metric(metric, system, n)
    dist = distance_matrix(averaged, sample)
    return estimate_from_matrix(dist, eps, method, seed)


def estimate_from_matrix(
    matrix: MatrixLike, eps: float, method: str, seed: int = 0
) -> EpsEntropyEstimate:
    name = method.strip().lower()
    if name == "covering":
        return eps_entropy_cover(matrix, eps, seed=seed)
    if name == "kantorovich":
        return eps_entropy_kantorovich(matrix, eps, seed=seed)
    raise ParameterError(f"unknown estimator method {method!r}")


ESTIMATES_CSV_HEADER = (
    "system", "metric", "method", "n", "eps", "m", "seed", "k",
    "value_bits", "lower_bound_bits",
)


def append_estimates_csv(path, rows) -> None:
    """Append (system_label, metric_label, n, estimate) rows to a batch CSV."""
    new_file = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(ESTIMATES_CSV_HEADER)
        for system_label, metric_label, n, est in rows:
            writer.writerow([
                system_label, metric_label, est.method, n, f"{est.eps:.17g}",
                est.sample_size, est.seed, est.k,
                f"{est.value_bits:.17g}", f"{est.lower_bound_bits:.17g}",
            ])
