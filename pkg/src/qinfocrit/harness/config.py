"""Experiment configuration: JSON in, validated dataclass out.

Unknown keys are rejected and every error names the offending field.
"""
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..criteria import DEFAULT_RCOND, KINDS
from ..fit import DEFAULT_RESTARTS, EBM_BOUND, GTOL, MAX_ITER
from ..qhbm import builtin_model, make_model
from ..seeding import STREAM_TRUE_STATE, derive_rng


class ConfigError(ValueError):
    pass


@dataclass
class ValidationConfig:
    free: list = field(default_factory=lambda: [0])
    replications: int = 500
    n: int = 10000
    n_values: list = field(default_factory=lambda: [1000, 10000])
    restarts: int = 2


@dataclass
class ExperimentConfig:
    qubits: int = 3
    true_model: dict = field(default_factory=lambda: {"model": "M1", "random": {"low": -1.0, "high": 1.0}})
    candidate_models: list = field(default_factory=lambda: ["M1", "M2"])
    n_shots: int = 1000
    trials: int = 50
    restarts: int = DEFAULT_RESTARTS
    criteria: list = field(default_factory=lambda: list(KINDS))
    master_seed: int = 0
    rcond: float = DEFAULT_RCOND
    gtol: float = GTOL
    max_iter: int = MAX_ITER
    ebm_bound: float = EBM_BOUND
    output_dir: str = "results"
    workers: int = 1
    validation: ValidationConfig = field(default_factory=ValidationConfig)

    def __post_init__(self):
        self._check()

    def _check(self):
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(f"{name}: {msg}")

        need(isinstance(self.qubits, int) and 1 <= self.qubits <= 6, "qubits", "must be an integer in 1..6")
        need(isinstance(self.trials, int) and self.trials >= 1, "trials", "must be >= 1")
        need(isinstance(self.n_shots, int) and self.n_shots >= 1, "n_shots", "must be >= 1")
        need(isinstance(self.restarts, int) and self.restarts >= 1, "restarts", "must be >= 1")
        need(isinstance(self.workers, int) and self.workers >= 1, "workers", "must be >= 1")
        need(self.rcond > 0, "rcond", "must be positive")
        need(self.ebm_bound > 0, "ebm_bound", "must be positive")
        need(isinstance(self.candidate_models, list) and self.candidate_models, "candidate_models",
             "must be a non-empty list")
        bad = [c for c in self.criteria if c not in KINDS]
        need(not bad, "criteria", f"unknown kinds {bad}; choose from {list(KINDS)}")
        need(isinstance(self.true_model, dict), "true_model", "must be an object")
        extra = set(self.true_model) - {"model", "theta", "random"}
        need(not extra, "true_model", f"unknown keys {sorted(extra)}")
        need("model" in self.true_model, "true_model.model", "is required")
        need(("theta" in self.true_model) != ("random" in self.true_model), "true_model",
             "give exactly one of 'theta' or 'random'")
        names = [m.name for m in self.models()]
        need(len(set(names)) == len(names), "candidate_models", "model names must be unique")
        theta = self.true_theta()
        need(theta.shape == (self.true_family().p,), "true_model.theta",
             f"expected {self.true_family().p} values")

    def _model(self, spec, where):
        if isinstance(spec, str):
            try:
                return builtin_model(spec, self.qubits)
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{where}: {exc}") from None
        if isinstance(spec, dict):
            extra = set(spec) - {"name", "gates"}
            if extra or "name" not in spec or "gates" not in spec:
                raise ConfigError(f"{where}: custom models need exactly 'name' and 'gates'")
            try:
                return make_model(spec["name"], self.qubits, spec["gates"])
            except (ValueError, IndexError, TypeError) as exc:
                raise ConfigError(f"{where}: {exc}") from None
        raise ConfigError(f"{where}: expected a model name or object")

    def models(self):
        return [self._model(s, f"candidate_models[{i}]") for i, s in enumerate(self.candidate_models)]

    def true_family(self):
        return self._model(self.true_model["model"], "true_model.model")

    def true_theta(self):
        fam = self.true_family()
        if "theta" in self.true_model:
            return np.asarray(self.true_model["theta"], dtype=float)
        rnd = self.true_model["random"]
        extra = set(rnd) - {"low", "high", "seed"}
        if extra:
            raise ConfigError(f"true_model.random: unknown keys {sorted(extra)}")
        seed = rnd.get("seed", self.master_seed)
        rng = derive_rng(seed, STREAM_TRUE_STATE)
        return rng.uniform(rnd.get("low", -1.0), rnd.get("high", 1.0), size=fam.p)

    def true_state(self):
        return self.true_family().evaluate(self.true_theta()).state

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"{sorted(extra)[0]}: unknown field (allowed: {sorted(known)})")
        data = dict(data)
        if "validation" in data:
            v = data["validation"]
            vknown = {f.name for f in fields(ValidationConfig)}
            if not isinstance(v, dict) or set(v) - vknown:
                raise ConfigError(f"validation: unknown or malformed fields (allowed: {sorted(vknown)})")
            data["validation"] = ValidationConfig(**v)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"config: {exc}") from None


def load_config(path, **overrides):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: malformed JSON ({exc})") from None
    for key, val in overrides.items():
        if val is not None:
            data[key] = val
    return ExperimentConfig.from_dict(data)
