"""Nearest-alternative projection and Voronoi weights over a box.

The weight of an alternative is the fraction of the box ``S`` whose nearest
alternative (Euclidean) is that one, with ties shared evenly.  Weights are
estimated by Monte Carlo; :func:`grid_weights` gives a deterministic
midpoint-rule quadrature for low-dimensional boxes.

Monte Carlo points are drawn in fixed-size chunks, chunk ``k`` from
``SeedSequence([seed, k])``.  The points depend only on the seed, the sample
count and the box, never on the alternatives, so two sets estimated with the
same seed see identical points (common random numbers).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import AlternativeSet, RewardVector, WinRateMatrix, as_context, log_sigmoid
from .errors import InvalidArgumentError

DEFAULT_TIE_TOL = 1e-12
DEFAULT_SAMPLES = 100_000
CHUNK_SIZE = 1 << 14


@dataclass(frozen=True, eq=False)
class SpaceBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_context(self.lower)
        hi = as_context(self.upper, lo.size)
        if np.any(lo >= hi):
            raise InvalidArgumentError("box needs lower[k] < upper[k] in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lower + (self.upper - self.lower) * rng.random((n, self.dim))

    def __eq__(self, other):
        if not isinstance(other, SpaceBox):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    @classmethod
    def unit_cube(cls, dim: int) -> SpaceBox:
        return cls(np.zeros(dim), np.ones(dim))

    @classmethod
    def factor2(cls, alts: AlternativeSet) -> SpaceBox:
        """Box of points whose coordinates are within a factor 2 of observed ones.

        Per coordinate the box spans ``[min(c/2, 2c), max(c/2, 2c)]`` over all
        alternatives.  A degenerate coordinate (all zero) is widened to
        ``[-1, 1]`` so the box keeps positive volume.
        """
        c = alts.contexts
        lo = np.minimum(c / 2, 2 * c).min(axis=0)
        hi = np.maximum(c / 2, 2 * c).max(axis=0)
        flat = lo >= hi
        lo = np.where(flat, lo - 1.0, lo)
        hi = np.where(flat, hi + 1.0, hi)
        return cls(lo, hi)


@dataclass(frozen=True)
class ProjectionResult:
    ids: tuple[str, ...]
    distance: float


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Per-alternative weights; ``mode`` is ``"voronoi"`` or ``"unit"``."""

    ids: tuple[str, ...]
    w: np.ndarray
    mode: str
    std_errors: np.ndarray | None = None
    n_samples: int | None = None
    seed: int | None = None

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64).reshape(-1)
        if w.size != len(self.ids):
            raise InvalidArgumentError("one weight per alternative is required")
        if self.mode == "unit":
            if np.any(w != 1.0):
                raise InvalidArgumentError("unit-mode weights must all be exactly 1")
        elif self.mode == "voronoi":
            if np.any(~np.isfinite(w)) or np.any(w <= 0.0):
                raise InvalidArgumentError(
                    "voronoi weights must be positive; an alternative with zero "
                    "estimated weight needs more samples or a larger space"
                )
            if abs(w.sum() - 1.0) > 1e-9:
                raise InvalidArgumentError(f"voronoi weights sum to {w.sum()!r}, not 1")
        else:
            raise InvalidArgumentError(f"unknown weight mode {self.mode!r}")
        w.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "w", w)
        if self.std_errors is not None:
            se = np.array(self.std_errors, dtype=np.float64).reshape(-1)
            se.setflags(write=False)
            object.__setattr__(self, "std_errors", se)

    def __getitem__(self, alt_id: str) -> float:
        return float(self.w[self.ids.index(alt_id)])

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.ids, self.w)}

    def __eq__(self, other):
        if not isinstance(other, WeightVector):
            return NotImplemented
        se_eq = (self.std_errors is None and other.std_errors is None) or (
            self.std_errors is not None
            and other.std_errors is not None
            and np.array_equal(self.std_errors, other.std_errors)
        )
        return (
            self.ids == other.ids
            and self.mode == other.mode
            and np.array_equal(self.w, other.w)
            and se_eq
            and self.n_samples == other.n_samples
            and self.seed == other.seed
        )


def unit_weights(alts: AlternativeSet) -> WeightVector:
    return WeightVector(alts.ids, np.ones(alts.m), "unit")


def projection_shares(
    contexts: np.ndarray, points: np.ndarray, tie_tol: float = DEFAULT_TIE_TOL
) -> np.ndarray:
    """``(n_points, m)`` matrix: ``1/|proj(y)|`` where the alternative is in proj(y), else 0."""
    # direct differences: the expanded |a|^2 - 2ab + |b|^2 form loses the
    # precision needed to separate clones closer than ~1e-8
    dist = np.empty((points.shape[0], contexts.shape[0]))
    for j, c in enumerate(contexts):
        dist[:, j] = np.linalg.norm(points - c, axis=1)
    dmin = dist.min(axis=1, keepdims=True)
    near = dist <= dmin * (1.0 + tie_tol) + tie_tol
    return near / near.sum(axis=1, keepdims=True)


def project(alts: AlternativeSet, x, tie_tol: float = DEFAULT_TIE_TOL) -> ProjectionResult:
    """All alternatives at minimal Euclidean distance from ``x`` (ties within ``tie_tol``)."""
    if tie_tol < 0:
        raise InvalidArgumentError("tie_tol must be non-negative")
    x = as_context(x, alts.dim)
    dist = np.linalg.norm(alts.contexts - x, axis=1)
    dmin = dist.min()
    hits = dist <= dmin * (1.0 + tie_tol) + tie_tol
    return ProjectionResult(tuple(k for k, h in zip(alts.ids, hits) if h), float(dmin))


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, chunk])))


def _chunk_sizes(n: int) -> list[int]:
    full, rest = divmod(n, CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def estimate_weights(
    alts: AlternativeSet,
    space: SpaceBox,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    tie_tol: float = DEFAULT_TIE_TOL,
    workers: int = 1,
) -> WeightVector:
    """Monte Carlo Voronoi weights with per-weight standard errors.

    Each uniform point in ``space`` credits ``1/|proj|`` to every tied
    nearest alternative.  Standard errors are the sample standard deviation
    of those per-point credits over ``sqrt(n)``, which reduces to
    ``sqrt(w(1-w)/n)`` when no ties occur.  Chunk totals are combined in
    chunk order, so the result is bitwise identical for any ``workers``.
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be at least 1")
    if space.dim != alts.dim:
        raise InvalidArgumentError(
            f"space has dimension {space.dim}, alternatives have {alts.dim}"
        )

    def run(job):
        k, size = job
        shares = projection_shares(alts.contexts, space.sample(_chunk_rng(seed, k), size), tie_tol)
        return shares.sum(axis=0), np.square(shares).sum(axis=0)

    jobs = list(enumerate(_chunk_sizes(n_samples)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]

    total = np.zeros(alts.m)
    total_sq = np.zeros(alts.m)
    for s, s2 in parts:
        total += s
        total_sq += s2
    w = total / n_samples
    if n_samples > 1:
        var = np.maximum(total_sq - n_samples * w**2, 0.0) / (n_samples - 1)
        se = np.sqrt(var / n_samples)
    else:
        se = np.zeros(alts.m)
    return WeightVector(alts.ids, w, "voronoi", se, n_samples, seed)


def grid_weights(
    alts: AlternativeSet, space: SpaceBox, resolution: int = 1000, tie_tol: float = DEFAULT_TIE_TOL
) -> WeightVector:
    """Midpoint-rule quadrature of the Voronoi weights on a ``resolution**d`` grid.

    Intended for ``d <= 3``; cost grows as ``resolution**d``.
    """
    if resolution < 1:
        raise InvalidArgumentError("resolution must be at least 1")
    if space.dim != alts.dim:
        raise InvalidArgumentError("space and alternatives differ in dimension")
    axes = [
        lo + (hi - lo) * (np.arange(resolution) + 0.5) / resolution
        for lo, hi in zip(space.lower, space.upper)
    ]
    total = np.zeros(alts.m)
    # iterate over the first axis to bound memory
    rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, alts.dim - 1) \
        if alts.dim > 1 else np.zeros((1, 0))
    for x0 in axes[0]:
        pts = np.column_stack([np.full(len(rest), x0), rest])
        total += projection_shares(alts.contexts, pts, tie_tol).sum(axis=0)
    w = total / total.sum()
    return WeightVector(alts.ids, w, "voronoi")


def integral_objective_estimate(
    r: RewardVector,
    p: WinRateMatrix,
    alts: AlternativeSet,
    space: SpaceBox,
    lam: float,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> tuple[float, float]:
    """Monte Carlo estimate of the weighted objective written as integrals over ``S``.

    Draws independent uniform pairs ``(y1, y2)``; each sample contributes
    ``-Lbar(y1, y2) + (lam/2) * r2bar(y1)`` where ``Lbar`` averages
    ``p(x1>x2) log sigmoid(r(x1)-r(x2))`` over the projections of ``y1`` and
    ``y2`` and ``r2bar`` averages ``r(x)^2`` over the projection of ``y1``.
    Pairs projecting onto the same alternative are included, so the target
    is :func:`prefagg.solver.objective` with ``include_self_pairs=True``.

    Returns ``(estimate, standard_error)``.
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be at least 1")
    if lam <= 0:
        raise InvalidArgumentError("lambda must be positive")
    if r.ids != alts.ids or p.ids != alts.ids:
        raise InvalidArgumentError("rewards, win rates and alternatives must share ids")
    if space.dim != alts.dim:
        raise InvalidArgumentError("space and alternatives differ in dimension")
    rv = r.values
    loglik = p.p * log_sigmoid(rv[:, None] - rv[None, :])
    r2 = rv**2

    values = []
    for k, size in enumerate(_chunk_sizes(n_samples)):
        rng = _chunk_rng(seed, k)
        s1 = projection_shares(alts.contexts, space.sample(rng, size), tie_tol)
        s2 = projection_shares(alts.contexts, space.sample(rng, size), tie_tol)
        lbar = np.einsum("ni,ij,nj->n", s1, loglik, s2)
        values.append(-lbar + 0.5 * lam * (s1 @ r2))
    v = np.concatenate(values)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se
