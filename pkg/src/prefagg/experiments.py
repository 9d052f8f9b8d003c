"""Built-in instances and end-to-end clone experiments.

* the three-type cyclic population (40/30/30) whose Borda winner flips from
  ``a`` to ``b`` when ``c`` is duplicated;
* the two-alternative impossibility witness, where two populations with
  very different mean rewards induce the same win rate 1/3;
* approximate-clone sweeps comparing the plain MLE with the Voronoi-weighted
  MLE on representative (exact) win rates;
* a Monte Carlo check that the weighted objective equals its integral form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    AlternativeSet,
    AnnotatorType,
    LinearReward,
    Population,
    RewardVector,
    TabularReward,
    WinRateMatrix,
    as_context,
    population_win_prob,
    representative_matrix,
)
from .errors import InvalidArgumentError, NonConvergenceError, UnsupportedCombinationError
from .solver import SolverConfig, objective, solve
from .voronoi import (
    DEFAULT_SAMPLES,
    SpaceBox,
    estimate_weights,
    grid_weights,
    integral_objective_estimate,
    unit_weights,
)
from .winrate import average_win_rate, borda_count, ranking

LN2_SQUARED = math.log(2.0) ** 2
DEFAULT_EPS = (0.1, 0.05, 0.01, 0.001)


# --- built-in instances -----------------------------------------------------

def cyclic_population() -> Population:
    """Three annotator types with cyclic preferences over a, b, c."""
    ln = math.log
    table = [
        (0.4, {"a": ln(100), "b": ln(10), "c": ln(1)}),
        (0.3, {"a": ln(10), "b": ln(1), "c": ln(100)}),
        (0.3, {"a": ln(1), "b": ln(100), "c": ln(10)}),
    ]
    return Population(tuple(AnnotatorType(q, TabularReward(v)) for q, v in table))


def cyclic_alternatives() -> AlternativeSet:
    # geometry is irrelevant for the unit-weight MLE; this placement in the
    # unit square lets the weighted MLE run on the same instance
    return AlternativeSet(("a", "b", "c"), np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))


def square_alternatives() -> AlternativeSet:
    """Three corners of the unit square: weights 0.375, 0.25, 0.375."""
    return AlternativeSet(("p00", "p10", "p11"), np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))


def linear_population() -> Population:
    """Fixed three-type population with linear rewards on 2-D contexts."""
    return Population((
        AnnotatorType(0.4, LinearReward(np.array([3.0, 1.0]), 0.0)),
        AnnotatorType(0.3, LinearReward(np.array([-2.0, 2.0]), 0.5)),
        AnnotatorType(0.3, LinearReward(np.array([1.0, -3.0]), -0.5)),
    ))


# --- clones -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CloneSpec:
    target: str
    epsilon: float
    direction: np.ndarray
    new_id: str

    def __post_init__(self):
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise InvalidArgumentError("epsilon must be a finite non-negative number")
        d = as_context(self.direction)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise InvalidArgumentError("clone direction must be a unit vector")
        object.__setattr__(self, "direction", d)


def add_clone(alts: AlternativeSet, pop: Population, spec: CloneSpec):
    """Add an alternative at ``c(target) + epsilon * direction``.

    Linear reward fields are evaluated at the new context.  Tabular fields
    can only express exact clones (``epsilon == 0``), for which the target's
    value is copied.
    """
    base = alts.context(spec.target)
    if spec.direction.size != alts.dim:
        raise InvalidArgumentError("clone direction has the wrong dimension")
    new_alts = alts.with_alternative(spec.new_id, base + spec.epsilon * spec.direction)
    types = []
    for t in pop.types:
        reward = t.reward
        if isinstance(reward, TabularReward):
            if spec.epsilon != 0:
                raise UnsupportedCombinationError(
                    "tabular reward fields only support exact clones (epsilon = 0)"
                )
            values = dict(reward.values)
            values[spec.new_id] = reward.reward(alts, spec.target)
            reward = TabularReward(values)
        types.append(AnnotatorType(t.proportion, reward))
    return new_alts, Population(tuple(types))


@dataclass(frozen=True)
class RobustnessRow:
    epsilon: float
    delta_existing: float
    delta_pair: float
    winner_before: str
    winner_after: str
    error_radius: float = 0.0


@dataclass
class RobustnessReport:
    algorithm: str
    rows: list[RobustnessRow]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda row: -row.epsilon)

    def fitted_sqrt_constant(self) -> float:
        """Smallest C with ``delta_existing <= C sqrt(eps)`` at the largest epsilon."""
        top = self.rows[0]
        if top.epsilon <= 0:
            raise InvalidArgumentError("need a positive epsilon to fit C")
        return top.delta_existing / math.sqrt(top.epsilon)


def _weights_for(alts, algorithm, space, n_samples, seed):
    if algorithm == "mle":
        return unit_weights(alts)
    if algorithm == "wmle":
        if space is None:
            raise InvalidArgumentError("the weighted MLE needs a space")
        return estimate_weights(alts, space, n_samples, seed)
    raise InvalidArgumentError(f"unknown algorithm {algorithm!r}")


def clone_robustness_sweep(
    alts: AlternativeSet,
    pop: Population,
    target: str,
    direction,
    algorithm: str,
    eps_list=DEFAULT_EPS,
    space: SpaceBox | None = None,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    solver_config: SolverConfig = SolverConfig(),
    new_id: str | None = None,
) -> RobustnessReport:
    """Solve on M and on M plus one clone of ``target`` for each epsilon.

    Both sets use representative win rates.  For ``wmle`` the weights of
    both sets are estimated over the same box with the same seed, so the
    Monte Carlo points are shared and only geometry separates the two.
    """
    new_id = new_id or f"{target}'"
    direction = np.asarray(direction, dtype=np.float64)
    p = representative_matrix(pop, alts)
    w = _weights_for(alts, algorithm, space, n_samples, seed)
    r, rep = solve(p, w, solver_config)
    rows = []
    for eps in eps_list:
        spec = CloneSpec(target, float(eps), direction, new_id)
        alts2, pop2 = add_clone(alts, pop, spec)
        p2 = representative_matrix(pop2, alts2)
        w2 = _weights_for(alts2, algorithm, space, n_samples, seed)
        try:
            r2, rep2 = solve(p2, w2, solver_config)
        except NonConvergenceError as exc:
            raise NonConvergenceError(f"epsilon={eps}: {exc}", exc.rewards, exc.report) from exc
        existing = np.array([r2[k] for k in alts.ids])
        rows.append(RobustnessRow(
            epsilon=float(eps),
            delta_existing=float(np.max(np.abs(r.values - existing))),
            delta_pair=abs(r2[target] - r2[new_id]),
            winner_before=r.argmax(),
            winner_after=r2.argmax(),
            error_radius=rep.error_radius + rep2.error_radius,
        ))
    meta = {
        "algorithm": algorithm,
        "lambda": solver_config.lam,
        "grad_tol": solver_config.grad_tol,
        "weights_mode": w.mode,
        "seed": seed,
        "n_samples": n_samples if algorithm == "wmle" else None,
        "space": None if space is None else {"lower": space.lower.tolist(), "upper": space.upper.tolist()},
        "target": target,
        "direction": direction.tolist(),
        "base_rewards": r.as_dict(),
    }
    return RobustnessReport(algorithm, rows, meta)


# --- Borda / MLE winner flip ------------------------------------------------

def _table(p: WinRateMatrix) -> dict:
    return {"ids": list(p.ids), "rows": p.p.tolist()}


def reproduce_appendix_d(lam: float = 0.01) -> dict:
    """Win-rate tables, Borda counts and MLE rankings with and without a clone of c."""
    alts, pop = cyclic_alternatives(), cyclic_population()
    alts2, pop2 = add_clone(alts, pop, CloneSpec("c", 0.0, np.array([1.0, 0.0]), "c'"))
    config = SolverConfig(lam=lam)
    out = {"lambda": lam}
    for key, (a, q) in {"original": (alts, pop), "with_clone": (alts2, pop2)}.items():
        p = representative_matrix(q, a)
        r, rep = solve(p, unit_weights(a), config)
        borda = borda_count(p)
        out[key] = {
            "win_rates": _table(p),
            "borda": borda.as_dict(),
            "awr": average_win_rate(p).as_dict(),
            "borda_winner": borda.argmax(),
            "mle_rewards": r.as_dict(),
            "mle_ranking": ranking(r),
            "mle_winner": r.argmax(),
            "error_radius": rep.error_radius,
        }
    orig, cl = out["original"], out["with_clone"]
    out["winner_flipped"] = orig["borda_winner"] != cl["borda_winner"]
    out["mle_matches_borda"] = (
        orig["mle_winner"] == orig["borda_winner"] and cl["mle_winner"] == cl["borda_winner"]
    )
    return out


# --- impossibility witness --------------------------------------------------

@dataclass(frozen=True)
class ImpossibilityInstance:
    C: float
    kappa: float
    alternatives: AlternativeSet
    population_1: Population
    population_2: Population
    p_ab_1: float
    p_ab_2: float
    mean_rb_1: float
    mean_rb_2: float

    @property
    def mean_gap(self) -> float:
        return abs(self.mean_rb_2 - self.mean_rb_1)

    def as_dict(self) -> dict:
        return {
            "C": self.C,
            "kappa": self.kappa,
            "p_ab_population_1": self.p_ab_1,
            "p_ab_population_2": self.p_ab_2,
            "mean_r_b_population_1": self.mean_rb_1,
            "mean_r_b_population_2": self.mean_rb_2,
            "mean_reward_gap": self.mean_gap,
        }


def impossibility_instance(C: float = LN2_SQUARED) -> ImpossibilityInstance:
    """Two equal-mixture populations over {a, b} that both give p(a > b) = 1/3.

    ``kappa = exp(12 sqrt(C))`` is evaluated as ``2 ** (12 sqrt(C) / ln 2)``,
    which is exact (4096) at ``C = ln(2)^2``.
    """
    if not (C >= LN2_SQUARED * (1 - 1e-15)) or not math.isfinite(C):
        raise InvalidArgumentError(f"C must be at least ln(2)^2 = {LN2_SQUARED:.6f}, got {C}")
    kappa = 2.0 ** (12.0 * math.sqrt(C) / math.log(2.0))
    alts = AlternativeSet(("a", "b"), np.array([[0.0], [1.0]]))
    half = 0.5
    pop1 = Population((
        AnnotatorType(half, TabularReward({"a": 0.0, "b": math.log(2.0)})),
        AnnotatorType(half, TabularReward({"a": 0.0, "b": math.log(2.0)})),
    ))
    rb2 = math.log(kappa + 4.0) - math.log(2.0 * kappa - 1.0)
    pop2 = Population((
        AnnotatorType(half, TabularReward({"a": 0.0, "b": math.log(kappa)})),
        AnnotatorType(half, TabularReward({"a": 0.0, "b": rb2})),
    ))
    p1 = population_win_prob(pop1, alts, "a", "b")
    p2 = population_win_prob(pop2, alts, "a", "b")
    for p in (p1, p2):
        if abs(p - 1.0 / 3.0) > 1e-12:
            raise ArithmeticError(f"witness lost precision: p(a>b) = {p!r}")
    return ImpossibilityInstance(
        C=C,
        kappa=kappa,
        alternatives=alts,
        population_1=pop1,
        population_2=pop2,
        p_ab_1=p1,
        p_ab_2=p2,
        mean_rb_1=float(pop1.mean_rewards(alts)[1]),
        mean_rb_2=float(pop2.mean_rewards(alts)[1]),
    )


# --- integral identity ------------------------------------------------------

def random_instance(rng: np.random.Generator, m: int, dim: int = 2):
    """Random alternatives in the unit cube, antisymmetric win rates and rewards."""
    ids = tuple(f"x{i}" for i in range(m))
    alts = AlternativeSet(ids, rng.random((m, dim)))
    p = WinRateMatrix.from_upper(ids, rng.random((m, m)))
    r = RewardVector(ids, rng.normal(0.0, 1.0, m))
    return alts, p, r


def integral_check(
    n_instances: int = 5,
    n_samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    grid_resolution: int = 1000,
    rewards: str = "solved",
) -> list[dict]:
    """Compare the Monte Carlo integral form with the direct weighted objective.

    The direct side uses midpoint-grid weights so its own error is far below
    the Monte Carlo standard error.  ``rewards="solved"`` evaluates both at
    the weighted MLE for those weights, ``"random"`` at Gaussian rewards;
    the identity holds for any reward vector.
    """
    if rewards not in ("solved", "random"):
        raise InvalidArgumentError(f"rewards must be 'solved' or 'random', got {rewards!r}")
    rng = np.random.default_rng(seed)
    space = SpaceBox.unit_cube(2)
    rows = []
    for k in range(n_instances):
        m = int(rng.integers(2, 7))
        alts, p, r = random_instance(rng, m)
        lam = float(rng.choice([0.01, 0.1, 1.0]))
        w = grid_weights(alts, space, grid_resolution)
        if rewards == "solved":
            r, _ = solve(p, w, SolverConfig(lam=lam))
        direct = objective(r, p, w, lam, include_self_pairs=True)
        est, se = integral_objective_estimate(r, p, alts, space, lam, n_samples, seed + 1000 + k)
        rows.append({
            "instance": k,
            "m": m,
            "lambda": lam,
            "direct": direct,
            "estimate": est,
            "std_error": se,
            "z": (est - direct) / se if se > 0 else 0.0,
            "within_3se": abs(est - direct) <= 3 * se,
        })
    return rows
