"""JSON experiment configuration.

Top-level blocks: ``model`` (required), ``simulate``, ``experiment`` and
``output``.  Every validation error names the offending field path.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .ma import MaModel, ma_model_from_config
from .mcarma import McarmaModel, model_from_config

KNOWN_BLOCKS = {"model", "simulate", "experiment", "output"}


@dataclass
class Config:
    model: McarmaModel | MaModel
    simulate: dict = field(default_factory=dict)
    experiment: dict | None = None
    output: dict = field(default_factory=dict)
    source: str | None = None

    @property
    def discrete(self) -> bool:
        return isinstance(self.model, MaModel)


def _expect(cond, path, msg):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _number(block, key, path, *, integer=False, positive=True, default=None):
    if key not in block:
        if default is not None:
            return default
        raise ConfigError(f"{path}.{key}: missing")
    v = block[key]
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    _expect(ok and not isinstance(v, bool), f"{path}.{key}",
            f"expected {'an integer' if integer else 'a number'}, got {v!r}")
    if positive:
        _expect(v > 0, f"{path}.{key}", f"must be positive, got {v!r}")
    return v


def _parse_model(block) -> McarmaModel | MaModel:
    _expect(isinstance(block, dict), "model", "expected an object")
    kind = block.get("type", "mcarma")
    if kind == "mcarma":
        return model_from_config(block, "model")
    if kind == "ma":
        return ma_model_from_config(block, "model")
    raise ConfigError(f"model.type: unknown model type {kind!r} (expected 'mcarma' or 'ma')")


def _parse_simulate(block, discrete) -> dict:
    _expect(isinstance(block, dict), "simulate", "expected an object")
    out = {"n": _number(block, "n", "simulate", integer=True)}
    out["delta"] = 1.0 if discrete else float(_number(block, "delta", "simulate"))
    out["seed"] = _number(block, "seed", "simulate", integer=True, positive=False, default=0)
    return out


def _parse_experiment(block, discrete) -> dict:
    p = "experiment"
    _expect(isinstance(block, dict), p, "expected an object")
    sched = block.get("schedule")
    _expect(isinstance(sched, list) and sched, f"{p}.schedule", "expected a non-empty list")
    points = []
    for k, item in enumerate(sched):
        sp = f"{p}.schedule[{k}]"
        if discrete and isinstance(item, int):
            item = [item, 1]
        _expect(isinstance(item, list) and len(item) == 2, sp, "expected [n, delta]")
        _expect(isinstance(item[0], int) and item[0] >= 2, sp, "n must be an integer >= 2")
        _expect(isinstance(item[1], (int, float)) and item[1] > 0, sp, "delta must be positive")
        points.append((int(item[0]), float(item[1])))
    lags = block.get("lags", [0])
    _expect(isinstance(lags, list) and lags, f"{p}.lags", "expected a non-empty list of lags")
    for k, h in enumerate(lags):
        _expect(isinstance(h, (int, float)) and not isinstance(h, bool) and h >= 0,
                f"{p}.lags[{k}]", f"expected a nonnegative number, got {h!r}")
    stat = block.get("statistic", "acvf")
    if isinstance(stat, dict):
        pair = stat.get("cross")
        _expect(isinstance(pair, list) and len(pair) == 2 and all(isinstance(c, int) for c in pair),
                f"{p}.statistic.cross", "expected [i, j]")
        stat = ("cross", pair[0], pair[1])
    else:
        _expect(stat in ("acvf", "acf"), f"{p}.statistic",
                f"expected 'acvf', 'acf' or {{'cross': [i, j]}}, got {stat!r}")
    return {
        "schedule": points,
        "lags": [float(h) for h in lags],
        "replications": _number(block, "replications", p, integer=True, default=2000),
        "base_seed": _number(block, "base_seed", p, integer=True, positive=False, default=0),
        "statistic": stat,
        "tolerance": block.get("tolerance"),
        "rate": bool(block.get("rate", False)),
    }


def _parse_output(block) -> dict:
    _expect(isinstance(block, dict), "output", "expected an object")
    formats = block.get("formats", ["csv", "json"])
    _expect(isinstance(formats, list) and all(f in ("csv", "json") for f in formats),
            "output.formats", "expected a list drawn from 'csv', 'json'")
    return {"dir": str(block.get("dir", "out")), "formats": formats}


def parse_config(data: dict, source: str | None = None) -> Config:
    _expect(isinstance(data, dict), "<root>", "expected a JSON object")
    unknown = set(data) - KNOWN_BLOCKS
    _expect(not unknown, "<root>", f"unknown block(s) {sorted(unknown)}")
    if "model" not in data:
        raise ConfigError("model: missing")
    model = _parse_model(data["model"])
    discrete = isinstance(model, MaModel)
    sim = _parse_simulate(data["simulate"], discrete) if "simulate" in data else {}
    exp = _parse_experiment(data["experiment"], discrete) if "experiment" in data else None
    out = _parse_output(data.get("output", {}))
    return Config(model, sim, exp, out, source)


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    return parse_config(data, str(path))
