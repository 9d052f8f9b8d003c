"""Alternatives, annotator populations, BTL choice probabilities and datasets.

Contexts are plain ``float64`` numpy arrays; an :class:`AlternativeSet` holds
them row-wise in the order of its ids, and every matrix or vector in the
package is indexed in that same order.

Sampling uses numpy's PCG64 bit generator.  Batched sampling derives one
substream per unordered pair from ``SeedSequence([seed, pair_index])`` so the
output does not depend on how the pairs are scheduled.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IncompleteCoverageError,
    InvalidArgumentError,
    UnknownAlternativeError,
)

LOGIT_CLAMP = 50.0
PROPORTION_TOL = 1e-12
ANTISYMMETRY_TOL = 1e-12


def as_context(coords, dim: int | None = None) -> np.ndarray:
    """Validate ``coords`` as a finite 1-D context vector."""
    x = np.asarray(coords, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise InvalidArgumentError(f"context must be a non-empty 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("context coordinates must be finite")
    if dim is not None and x.size != dim:
        raise InvalidArgumentError(f"context has dimension {x.size}, expected {dim}")
    return x


def sigmoid(z):
    """Logistic function with the argument clamped to +/-50.

    Works on scalars and arrays.  Saturation error at the clamp is below 2e-22.
    """
    z = np.clip(z, -LOGIT_CLAMP, LOGIT_CLAMP)
    return 1.0 / (1.0 + np.exp(-z))


def log_sigmoid(z):
    """``log(sigmoid(z))`` without overflow."""
    return -np.logaddexp(0.0, -np.asarray(z, dtype=np.float64))


def btl_win_prob(r_a: float, r_b: float) -> float:
    """Probability that an alternative with reward ``r_a`` beats one with ``r_b``."""
    if not (math.isfinite(r_a) and math.isfinite(r_b)):
        raise InvalidArgumentError(f"rewards must be finite, got {r_a!r}, {r_b!r}")
    return float(sigmoid(r_a - r_b))


@dataclass(frozen=True)
class AlternativeSet:
    ids: tuple[str, ...]
    contexts: np.ndarray

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        ctx = np.array(self.contexts, dtype=np.float64)
        if ctx.ndim == 1:
            ctx = ctx.reshape(-1, 1)
        if len(ids) < 1:
            raise InvalidArgumentError("an alternative set needs at least one alternative")
        if len(set(ids)) != len(ids):
            raise InvalidArgumentError("alternative ids must be unique")
        if ctx.ndim != 2 or ctx.shape[0] != len(ids) or ctx.shape[1] < 1:
            raise InvalidArgumentError(
                f"contexts must have shape ({len(ids)}, d>=1), got {ctx.shape}"
            )
        if not np.all(np.isfinite(ctx)):
            raise InvalidArgumentError("context coordinates must be finite")
        ctx.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "contexts", ctx)
        object.__setattr__(self, "_index", {k: i for i, k in enumerate(ids)})

    @classmethod
    def from_mapping(cls, items: Mapping[str, Sequence[float]]) -> AlternativeSet:
        return cls(tuple(items), np.array([list(v) for v in items.values()], dtype=np.float64))

    @property
    def m(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.contexts.shape[1]

    def index(self, alt_id: str) -> int:
        try:
            return self._index[alt_id]
        except KeyError:
            raise UnknownAlternativeError(f"unknown alternative {alt_id!r}") from None

    def context(self, alt_id: str) -> np.ndarray:
        return self.contexts[self.index(alt_id)]

    def with_alternative(self, alt_id: str, context) -> AlternativeSet:
        if alt_id in self._index:
            raise InvalidArgumentError(f"alternative {alt_id!r} already exists")
        c = as_context(context, self.dim)
        return AlternativeSet(self.ids + (alt_id,), np.vstack([self.contexts, c]))

    def __eq__(self, other):
        if not isinstance(other, AlternativeSet):
            return NotImplemented
        return self.ids == other.ids and np.array_equal(self.contexts, other.contexts)

    def __hash__(self):
        return hash((self.ids, self.contexts.tobytes()))


@dataclass(frozen=True)
class TabularReward:
    """Reward given as an explicit table over alternative ids."""

    values: Mapping[str, float]

    def __post_init__(self):
        vals = {str(k): float(v) for k, v in self.values.items()}
        if not all(math.isfinite(v) for v in vals.values()):
            raise InvalidArgumentError("tabular rewards must be finite")
        object.__setattr__(self, "values", vals)

    def reward(self, alts: AlternativeSet, alt_id: str) -> float:
        alts.index(alt_id)
        try:
            return self.values[alt_id]
        except KeyError:
            raise UnknownAlternativeError(f"tabular reward has no entry for {alt_id!r}") from None

    def rewards(self, alts: AlternativeSet) -> np.ndarray:
        return np.array([self.reward(alts, k) for k in alts.ids])


@dataclass(frozen=True)
class LinearReward:
    """``r(x) = theta . x + bias``; Lipschitz with constant ``||theta||_2``."""

    theta: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", as_context(self.theta))
        if not math.isfinite(self.bias):
            raise InvalidArgumentError("bias must be finite")
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def lipschitz(self) -> float:
        return float(np.linalg.norm(self.theta))

    def at(self, x) -> float:
        return float(self.theta @ as_context(x, self.theta.size) + self.bias)

    def reward(self, alts: AlternativeSet, alt_id: str) -> float:
        return self.at(alts.context(alt_id))

    def rewards(self, alts: AlternativeSet) -> np.ndarray:
        if alts.dim != self.theta.size:
            raise InvalidArgumentError(
                f"theta has dimension {self.theta.size}, contexts have {alts.dim}"
            )
        return alts.contexts @ self.theta + self.bias

    def __eq__(self, other):
        if not isinstance(other, LinearReward):
            return NotImplemented
        return np.array_equal(self.theta, other.theta) and self.bias == other.bias

    def __hash__(self):
        return hash((self.theta.tobytes(), self.bias))


RewardField = TabularReward | LinearReward


def annotator_reward(reward: RewardField, alts: AlternativeSet, alt_id: str) -> float:
    return reward.reward(alts, alt_id)


@dataclass(frozen=True)
class AnnotatorType:
    proportion: float
    reward: RewardField


@dataclass(frozen=True)
class Population:
    """Mixture of BTL annotator types."""

    types: tuple[AnnotatorType, ...]

    def __post_init__(self):
        types = tuple(
            t if isinstance(t, AnnotatorType) else AnnotatorType(*t) for t in self.types
        )
        if not types:
            raise InvalidArgumentError("a population needs at least one annotator type")
        for t in types:
            if not (0.0 < t.proportion <= 1.0):
                raise InvalidArgumentError(f"proportion {t.proportion} outside (0, 1]")
        total = math.fsum(t.proportion for t in types)
        if abs(total - 1.0) > PROPORTION_TOL:
            raise InvalidArgumentError(f"proportions sum to {total!r}, not 1")
        object.__setattr__(self, "types", types)

    @property
    def proportions(self) -> np.ndarray:
        return np.array([t.proportion for t in self.types])

    def reward_table(self, alts: AlternativeSet) -> np.ndarray:
        """Rewards as a ``(n_types, m)`` array."""
        return np.vstack([t.reward.rewards(alts) for t in self.types])

    def mean_rewards(self, alts: AlternativeSet) -> np.ndarray:
        return self.proportions @ self.reward_table(alts)


@dataclass(frozen=True)
class PreferenceRecord:
    a: str
    b: str
    winner: str

    def __post_init__(self):
        if self.a == self.b:
            raise InvalidArgumentError(f"a record compares {self.a!r} with itself")
        if self.winner not in (self.a, self.b):
            raise InvalidArgumentError(
                f"winner {self.winner!r} is neither {self.a!r} nor {self.b!r}"
            )


@dataclass(frozen=True, eq=False)
class WinRateMatrix:
    """Pairwise win probabilities ``p[i, j] = p(ids[i] beats ids[j])``."""

    ids: tuple[str, ...]
    p: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self):
        ids = tuple(self.ids)
        p = np.array(self.p, dtype=np.float64)
        m = len(ids)
        if p.shape != (m, m):
            raise InvalidArgumentError(f"win-rate matrix must be {m}x{m}, got {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise InvalidArgumentError("win rates must lie in [0, 1]")
        if np.any(np.diag(p) != 0.5):
            raise InvalidArgumentError("diagonal win rates must be exactly 1/2")
        if np.max(np.abs(p + p.T - 1.0)) > ANTISYMMETRY_TOL:
            raise InvalidArgumentError("win rates must satisfy p[i,j] + p[j,i] = 1")
        p.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "p", p)
        if self.counts is not None:
            c = np.array(self.counts)
            if c.shape != (m, m) or np.any(c < 0) or not np.array_equal(c, c.T):
                raise InvalidArgumentError("counts must be a symmetric non-negative matrix")
            c = c.astype(np.int64)
            c.setflags(write=False)
            object.__setattr__(self, "counts", c)

    @property
    def m(self) -> int:
        return len(self.ids)

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(self.p[self.ids.index(a), self.ids.index(b)])

    def __eq__(self, other):
        if not isinstance(other, WinRateMatrix):
            return NotImplemented
        same_counts = (self.counts is None and other.counts is None) or (
            self.counts is not None
            and other.counts is not None
            and np.array_equal(self.counts, other.counts)
        )
        return self.ids == other.ids and np.array_equal(self.p, other.p) and same_counts

    @classmethod
    def from_upper(cls, ids: Sequence[str], upper: np.ndarray, counts=None) -> WinRateMatrix:
        """Build from the strict upper triangle; the lower one is ``1 - upper.T``."""
        m = len(ids)
        iu = np.triu_indices(m, k=1)
        p = np.full((m, m), 0.5)
        p[iu] = np.asarray(upper)[iu]
        p.T[iu] = 1.0 - p[iu]
        return cls(tuple(ids), p, counts)


def _pairwise_probs(rewards: np.ndarray, proportions: np.ndarray) -> np.ndarray:
    diff = rewards[:, :, None] - rewards[:, None, :]
    return np.tensordot(proportions, sigmoid(diff), axes=1)


def population_win_prob(pop: Population, alts: AlternativeSet, a: str, b: str) -> float:
    ra = np.array([annotator_reward(t.reward, alts, a) for t in pop.types])
    rb = np.array([annotator_reward(t.reward, alts, b) for t in pop.types])
    return float(pop.proportions @ sigmoid(ra - rb))


def representative_matrix(pop: Population, alts: AlternativeSet) -> WinRateMatrix:
    """Exact population win rates p* over every pair of alternatives."""
    probs = _pairwise_probs(pop.reward_table(alts), pop.proportions)
    return WinRateMatrix.from_upper(alts.ids, probs)


def sample_comparison(
    pop: Population, alts: AlternativeSet, a: str, b: str, rng: np.random.Generator
) -> PreferenceRecord:
    """Draw an annotator type by proportion, then its BTL preference between a and b."""
    if a == b:
        raise InvalidArgumentError("cannot compare an alternative with itself")
    k = rng.choice(len(pop.types), p=pop.proportions)
    reward = pop.types[k].reward
    pa = btl_win_prob(annotator_reward(reward, alts, a), annotator_reward(reward, alts, b))
    return PreferenceRecord(a, b, a if rng.random() < pa else b)


def pair_rng(seed: int, pair_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, pair_index])))


def sample_dataset(
    pop: Population, alts: AlternativeSet, per_pair: int, seed: int
) -> list[PreferenceRecord]:
    """``per_pair`` sampled comparisons for every unordered pair, in pair order."""
    if per_pair < 1:
        raise InvalidArgumentError("per_pair must be at least 1")
    if alts.m < 2:
        raise InvalidArgumentError("need at least two alternatives to build comparisons")
    rewards = pop.reward_table(alts)
    props = pop.proportions
    records: list[PreferenceRecord] = []
    for k, (i, j) in enumerate(itertools.combinations(range(alts.m), 2)):
        rng = pair_rng(seed, k)
        types = rng.choice(len(props), size=per_pair, p=props)
        p_i = sigmoid(rewards[types, i] - rewards[types, j])
        i_wins = rng.random(per_pair) < p_i
        a, b = alts.ids[i], alts.ids[j]
        records.extend(PreferenceRecord(a, b, a if w else b) for w in i_wins)
    return records


def empirical_matrix(records: Iterable[PreferenceRecord], alts: AlternativeSet) -> WinRateMatrix:
    """Observed win proportions; every unordered pair must appear at least once."""
    m = alts.m
    wins = np.zeros((m, m), dtype=np.int64)
    for rec in records:
        i, j = alts.index(rec.a), alts.index(rec.b)
        if rec.winner == rec.a:
            wins[i, j] += 1
        else:
            wins[j, i] += 1
    counts = wins + wins.T
    iu = np.triu_indices(m, k=1)
    missing = [(alts.ids[i], alts.ids[j]) for i, j in zip(*iu) if counts[i, j] == 0]
    if missing:
        raise IncompleteCoverageError(missing)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(counts > 0, wins / np.maximum(counts, 1), 0.5)
    return WinRateMatrix.from_upper(alts.ids, p, counts)


@dataclass(frozen=True)
class RewardVector:
    ids: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if vals.size != len(self.ids):
            raise InvalidArgumentError("one reward per alternative is required")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("rewards must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "values", vals)

    def __getitem__(self, alt_id: str) -> float:
        return float(self.values[self.ids.index(alt_id)])

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.ids, self.values)}

    def argmax(self) -> str:
        return self.ids[int(np.argmax(self.values))]

    def __eq__(self, other):
        if not isinstance(other, RewardVector):
            return NotImplemented
        return self.ids == other.ids and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.ids, self.values.tobytes()))
