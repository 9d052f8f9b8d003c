"""Win-rate scores, Borda counts and the M-estimator residuals of a solved reward.

All scores include the self-comparison term ``p(x > x) = 1/2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RewardVector, WinRateMatrix, sigmoid
from .errors import InvalidArgumentError
from .voronoi import WeightVector

RANK_TIE_TOL = 1e-9
SCORE_KINDS = ("AWR", "wAWR", "Borda", "ModelAWR", "ModelwAWR", "Residual")


@dataclass(frozen=True, eq=False)
class ScoreVector:
    ids: tuple[str, ...]
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in SCORE_KINDS:
            raise InvalidArgumentError(f"unknown score kind {self.kind!r}")
        vals = np.asarray(self.values, dtype=np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "ids", tuple(self.ids))

    def __getitem__(self, alt_id: str) -> float:
        return float(self.values[self.ids.index(alt_id)])

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.ids, self.values)}

    def argmax(self) -> str:
        return self.ids[int(np.argmax(self.values))]


def _same_ids(*objs):
    ids = objs[0].ids
    if any(o.ids != ids for o in objs[1:]):
        raise InvalidArgumentError("inputs index different alternatives")
    return ids


def average_win_rate(p: WinRateMatrix) -> ScoreVector:
    return ScoreVector(p.ids, p.p.sum(axis=1) / p.m, "AWR")


def weighted_average_win_rate(p: WinRateMatrix, w: WeightVector) -> ScoreVector:
    if w.mode != "voronoi":
        raise InvalidArgumentError("weighted average win rate needs Voronoi (normalized) weights")
    ids = _same_ids(p, w)
    return ScoreVector(ids, p.p @ w.w, "wAWR")


def borda_count(p: WinRateMatrix) -> ScoreVector:
    return ScoreVector(p.ids, p.p.sum(axis=1), "Borda")


def _mixing(w: WeightVector) -> np.ndarray:
    # unit weights use the uniform measure 1/m
    return w.w if w.mode == "voronoi" else np.full(w.w.size, 1.0 / w.w.size)


def model_win_rate(r: RewardVector, w: WeightVector) -> ScoreVector:
    """Win rate implied by rewards ``r``: ``sum_y omega(y) sigmoid(r(x) - r(y))``."""
    ids = _same_ids(r, w)
    omega = _mixing(w)
    v = r.values
    kind = "ModelwAWR" if w.mode == "voronoi" else "ModelAWR"
    return ScoreVector(ids, sigmoid(v[:, None] - v[None, :]) @ omega, kind)


def m_estimator_residual(r: RewardVector, p: WinRateMatrix, w: WeightVector, lam: float) -> ScoreVector:
    """Residual of the win-rate moment equations at ``r``.

    Voronoi weights: ``wAWR(x) - lam r(x) - ModelwAWR(x)``.
    Unit weights: ``AWR(x) - (lam/m) r(x) - ModelAWR(x)``; the objective
    carries no 1/m factor on its likelihood, so dividing its stationarity
    condition by ``m`` moves that factor onto ``lam``.

    Either way the residual equals ``-gradient(x) / (w(x) * scale)`` with
    ``scale = m`` for unit weights and 1 otherwise, so it vanishes exactly
    at the minimizer.
    """
    ids = _same_ids(r, p, w)
    if w.mode == "voronoi":
        score = weighted_average_win_rate(p, w).values
        lam_eff = lam
    else:
        score = average_win_rate(p).values
        lam_eff = lam / p.m
    model = model_win_rate(r, w).values
    return ScoreVector(ids, score - lam_eff * r.values - model, "Residual")


def ranking_consistency(r: RewardVector, scores: ScoreVector, tol: float = RANK_TIE_TOL):
    """Check ``r(x) >= r(y)  <=>  scores(x) >= scores(y)`` for every ordered pair.

    Comparisons treat values within ``tol`` as ties.  Returns
    ``(True, None)`` or ``(False, (x, y))`` for the first violating pair.
    """
    _same_ids(r, scores)
    rv, sv = r.values, scores.values
    for i in range(rv.size):
        for j in range(rv.size):
            if i == j:
                continue
            r_ge = rv[i] >= rv[j] - tol
            s_ge = sv[i] >= sv[j] - tol
            if r_ge != s_ge:
                return False, (r.ids[i], r.ids[j])
    return True, None


def ranking(values: ScoreVector | RewardVector) -> list[str]:
    """Ids sorted from best to worst (stable on exact ties)."""
    order = np.argsort(-np.asarray(values.values), kind="stable")
    return [values.ids[i] for i in order]


def analysis_report(r: RewardVector, p: WinRateMatrix, w: WeightVector, lam: float) -> dict:
    """All score kinds keyed by alternative id, plus ranking and residual sup-norm."""
    resid = m_estimator_residual(r, p, w, lam)
    scores = {
        "AWR": average_win_rate(p).as_dict(),
        "Borda": borda_count(p).as_dict(),
        "ModelAWR": model_win_rate(r, unit_weights_like(w)).as_dict(),
        "Residual": resid.as_dict(),
    }
    if w.mode == "voronoi":
        scores["wAWR"] = weighted_average_win_rate(p, w).as_dict()
        scores["ModelwAWR"] = model_win_rate(r, w).as_dict()
        reference = weighted_average_win_rate(p, w)
    else:
        scores["wAWR"] = None
        scores["ModelwAWR"] = None
        reference = average_win_rate(p)
    consistent, violation = ranking_consistency(r, reference)
    return {
        "weights_mode": w.mode,
        "lambda": lam,
        "scores": scores,
        "ranking": ranking(r),
        "winner": r.argmax(),
        "residual_sup_norm": float(np.abs(resid.values).max()),
        "ranking_consistent": consistent,
        "ranking_violation": list(violation) if violation else None,
    }


def unit_weights_like(w: WeightVector) -> WeightVector:
    return WeightVector(w.ids, np.ones(len(w.ids)), "unit")
