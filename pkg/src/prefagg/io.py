"""Readers and writers for the on-disk formats.

Every JSON artifact carries ``"format_version": 1``.  Floats are written
with ``repr`` precision so ``load(save(x)) == x`` holds exactly.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .core import (
    AlternativeSet,
    AnnotatorType,
    LinearReward,
    Population,
    PreferenceRecord,
    RewardVector,
    TabularReward,
    WinRateMatrix,
)
from .errors import InvalidArgumentError, PrefAggError, EXIT_IO
from .voronoi import SpaceBox, WeightVector

FORMAT_VERSION = 1


class FormatError(InvalidArgumentError):
    pass


class StorageError(PrefAggError, OSError):
    exit_code = EXIT_IO


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write_text(path, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_json(path, obj: dict) -> None:
    obj = {"format_version": FORMAT_VERSION, **obj}
    _write_text(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def read_json(path) -> dict:
    try:
        obj = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: expected a JSON object")
    version = obj.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format_version {version!r}")
    return obj


# alternatives: CSV "id,c1,...,cd"

def save_alternatives(path, alts: AlternativeSet) -> None:
    lines = ["id," + ",".join(f"c{k + 1}" for k in range(alts.dim))]
    for alt_id, row in zip(alts.ids, alts.contexts):
        if "," in alt_id:
            raise FormatError(f"alternative id {alt_id!r} contains a comma")
        lines.append(alt_id + "," + ",".join(repr(float(v)) for v in row))
    _write_text(path, "\n".join(lines) + "\n")


def load_alternatives(path) -> AlternativeSet:
    rows = list(csv.reader(_read_text(path).splitlines()))
    if not rows or not rows[0] or rows[0][0].strip() != "id":
        raise FormatError(f"{path}: header must start with 'id'")
    dim = len(rows[0]) - 1
    if dim < 1:
        raise FormatError(f"{path}: need at least one context column")
    ids, ctx = [], []
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != dim + 1:
            raise FormatError(f"{path}:{n}: expected {dim + 1} fields, got {len(row)}")
        try:
            ctx.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise FormatError(f"{path}:{n}: {exc}") from exc
        ids.append(row[0])
    return AlternativeSet(tuple(ids), np.array(ctx, dtype=np.float64).reshape(len(ids), dim))


# population: {"types": [{"proportion": q, "reward": {...}}]}

def population_to_dict(pop: Population) -> dict:
    types = []
    for t in pop.types:
        if isinstance(t.reward, TabularReward):
            reward = {"kind": "tabular", "values": dict(t.reward.values)}
        else:
            reward = {"kind": "linear", "theta": t.reward.theta.tolist(), "bias": t.reward.bias}
        types.append({"proportion": t.proportion, "reward": reward})
    return {"types": types}


def population_from_dict(obj: dict) -> Population:
    try:
        types = []
        for entry in obj["types"]:
            spec = entry["reward"]
            kind = spec["kind"]
            if kind == "tabular":
                reward = TabularReward(spec["values"])
            elif kind == "linear":
                reward = LinearReward(np.array(spec["theta"], dtype=np.float64), spec.get("bias", 0.0))
            else:
                raise FormatError(f"unknown reward kind {kind!r}")
            types.append(AnnotatorType(float(entry["proportion"]), reward))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed population: {exc!r}") from exc
    return Population(tuple(types))


def save_population(path, pop: Population) -> None:
    write_json(path, population_to_dict(pop))


def load_population(path) -> Population:
    return population_from_dict(read_json(path))


# comparisons: JSON Lines {"a": ..., "b": ..., "winner": ...}

def save_comparisons(path, records) -> None:
    _write_text(path, "".join(
        json.dumps({"a": r.a, "b": r.b, "winner": r.winner}) + "\n" for r in records
    ))


def load_comparisons(path) -> list[PreferenceRecord]:
    out = []
    for n, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            out.append(PreferenceRecord(str(obj["a"]), str(obj["b"]), str(obj["winner"])))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}:{n}: bad comparison record ({exc})") from exc
    return out


# win-rate matrix

def matrix_to_dict(p: WinRateMatrix) -> dict:
    return {
        "ids": list(p.ids),
        "p": p.p.tolist(),
        "counts": None if p.counts is None else p.counts.tolist(),
    }


def save_matrix(path, p: WinRateMatrix, **extra) -> None:
    write_json(path, {**matrix_to_dict(p), **extra})


def load_matrix(path) -> WinRateMatrix:
    obj = read_json(path)
    try:
        return WinRateMatrix(tuple(obj["ids"]), np.array(obj["p"]), obj.get("counts"))
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from exc


# space: {"lower": [...], "upper": [...]}

def save_space(path, space: SpaceBox) -> None:
    write_json(path, {"lower": space.lower.tolist(), "upper": space.upper.tolist()})


def load_space(path) -> SpaceBox:
    obj = read_json(path)
    try:
        return SpaceBox(np.array(obj["lower"]), np.array(obj["upper"]))
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from exc


def resolve_space(spec: str, alts: AlternativeSet) -> SpaceBox:
    """``unit-cube``, ``factor2`` or a path to a space file."""
    if spec == "unit-cube":
        return SpaceBox.unit_cube(alts.dim)
    if spec == "factor2":
        return SpaceBox.factor2(alts)
    if not os.path.exists(spec):
        raise StorageError(f"space file {spec} does not exist")
    return load_space(spec)


# weights

def weights_to_dict(w: WeightVector) -> dict:
    obj = {"mode": w.mode, "n_samples": w.n_samples, "seed": w.seed, "weights": w.as_dict()}
    obj["std_errors"] = (
        None if w.std_errors is None
        else {k: float(v) for k, v in zip(w.ids, w.std_errors)}
    )
    return obj


def save_weights(path, w: WeightVector, **extra) -> None:
    write_json(path, {**weights_to_dict(w), **extra})


def load_weights(path) -> WeightVector:
    obj = read_json(path)
    try:
        weights = obj["weights"]
        ids = tuple(weights)
        se = obj.get("std_errors")
        return WeightVector(
            ids,
            np.array([weights[k] for k in ids], dtype=np.float64),
            obj["mode"],
            None if se is None else np.array([se[k] for k in ids], dtype=np.float64),
            obj.get("n_samples"),
            obj.get("seed"),
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from exc


# rewards

def save_rewards(path, r: RewardVector, lam: float, weights_mode: str, report: dict | None) -> None:
    write_json(path, {
        "lambda": lam,
        "weights_mode": weights_mode,
        "rewards": r.as_dict(),
        "report": report,
    })


def load_rewards(path) -> tuple[RewardVector, dict]:
    obj = read_json(path)
    try:
        rewards = obj["rewards"]
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from exc
    ids = tuple(rewards)
    return RewardVector(ids, np.array([rewards[k] for k in ids], dtype=np.float64)), obj


def align(p_ids, w: WeightVector) -> WeightVector:
    """Reorder ``w`` to follow ``p_ids``."""
    if set(p_ids) != set(w.ids):
        raise InvalidArgumentError("weights do not cover the same alternatives")
    order = [w.ids.index(k) for k in p_ids]
    se = None if w.std_errors is None else w.std_errors[order]
    return WeightVector(tuple(p_ids), w.w[order], w.mode, se, w.n_samples, w.seed)
