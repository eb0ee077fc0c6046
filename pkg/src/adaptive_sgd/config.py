"""Experiment configuration: JSON files, sweeps over run parameters, named presets."""

from __future__ import annotations

import copy
import itertools
import json
from dataclasses import dataclass, field, replace

from .errors import InvalidSpec
from .optimizer import RunConfig

__all__ = ["ExperimentConfig", "PRESETS", "preset", "load_config", "apply_override"]

_EXPERIMENT_KEYS = ("sweep", "n_seeds", "plots", "name")


@dataclass(frozen=True)
class ExperimentConfig:
    """A run configuration plus an optional Cartesian sweep over its fields.

    Sweep keys are dotted paths into the run configuration, e.g. ``"problem.L"``
    or ``"alpha"``; each maps to a non-empty list of values.
    """

    run: RunConfig
    sweep: dict = field(default_factory=dict)
    n_seeds: int = 1
    plots: bool = True
    name: str = "experiment"

    def validate(self):
        if not (isinstance(self.n_seeds, int) and self.n_seeds >= 1):
            raise InvalidSpec("n_seeds must be a positive integer")
        if not isinstance(self.sweep, dict):
            raise InvalidSpec("sweep must map parameter paths to lists of values")
        for key, values in self.sweep.items():
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                raise InvalidSpec(f"sweep axis {key!r} is empty")
        for _ in self.combinations():
            pass
        return self

    def combinations(self):
        """Yield (overrides, RunConfig) for every point of the sweep grid."""
        if not self.sweep:
            yield {}, self.run
            return
        keys = list(self.sweep)
        base = self.run.to_dict()
        for values in itertools.product(*(self.sweep[k] for k in keys)):
            overrides = dict(zip(keys, values))
            d = copy.deepcopy(base)
            for k, v in overrides.items():
                apply_override(d, k, v)
            yield overrides, RunConfig.from_dict(d)

    def to_dict(self):
        d = self.run.to_dict()
        d.update(sweep={k: list(v) for k, v in self.sweep.items()}, n_seeds=self.n_seeds,
                 plots=self.plots, name=self.name)
        return d

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise InvalidSpec("configuration must be a JSON object")
        d = dict(d)
        extra = {k: d.pop(k) for k in _EXPERIMENT_KEYS if k in d}
        run = RunConfig.from_dict(d)
        sweep = extra.get("sweep") or {}
        if "sweep" in extra and not sweep:
            raise InvalidSpec("sweep block is empty")
        return cls(run=run, sweep={k: list(v) if isinstance(v, (list, tuple)) else v for k, v in sweep.items()},
                   n_seeds=extra.get("n_seeds", 1), plots=bool(extra.get("plots", True)),
                   name=str(extra.get("name", "experiment"))).validate()

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def with_overrides(self, **kw):
        return replace(self, **kw)


def apply_override(d, path, value):
    """Set ``d[a][b] = value`` for the dotted path ``"a.b"``."""
    parts = path.split(".")
    node = d
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise InvalidSpec(f"sweep path {path!r} does not name a nested field")
        node = node[p]
    if parts[-1] not in node:
        raise InvalidSpec(f"sweep path {path!r} does not name an existing field")
    node[parts[-1]] = value


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: invalid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(data)


# --------------------------------------------------------------------------
# presets for the random-quadratic benchmarks (n = 50, 10 seeds)

_NONINTERP_NOISE = {"sigma_A": 0.01, "sigma_b": 0.1}
_INTERP_NOISE = {"sigma_A": 0.001, "sigma_b": 0.0}


def _quadratic_preset(name, mu, L, noise, sweep, iterations):
    return {
        "name": name,
        "problem": {"family": "quadratic", "n": 50, "mu": mu, "L": L, "seed": 0, **noise},
        "mode": "adaptive",
        "alpha": 1.0,
        "iterations": iterations,
        "eta": 0.7,
        "eta_alpha": 0.5,
        "switch_fraction": 0.0,
        "smooth_alpha": True,
        "seed": 0,
        "trace_every": 1,
        "n_seeds": 10,
        "plots": True,
        "sweep": sweep,
    }


PRESETS = {
    "scenario1-noninterp": _quadratic_preset(
        "scenario1-noninterp", 1.0, 10.0, _NONINTERP_NOISE, {"problem.L": [10.0, 100.0, 1000.0, 10000.0]}, 100_000),
    "scenario2-noninterp": _quadratic_preset(
        "scenario2-noninterp", 0.1, 1.0, _NONINTERP_NOISE, {"problem.mu": [1e-1, 1e-2, 1e-3, 1e-4]}, 100_000),
    "scenario1-interp": _quadratic_preset(
        "scenario1-interp", 1.0, 10.0, _INTERP_NOISE, {"problem.L": [10.0, 100.0, 1000.0, 10000.0]}, 10_000),
    "scenario2-interp": _quadratic_preset(
        "scenario2-interp", 0.1, 1.0, _INTERP_NOISE, {"problem.mu": [1e-1, 1e-2, 1e-3, 1e-4]}, 10_000),
}


def preset(name) -> ExperimentConfig:
    if name not in PRESETS:
        raise InvalidSpec(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return ExperimentConfig.from_dict(copy.deepcopy(PRESETS[name]))
