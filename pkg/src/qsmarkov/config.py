"""Experiment configuration files (YAML).

Example::

    schema: 1
    measures:
      - name: mu
        lambda: derived            # or an explicit list such as [0.5, 0.5]
        sequence:
          kind: perturbation
          limit: [[0.7, 0.3], [0.4, 0.6]]
          direction: [[-0.1, 0.1], [0.1, -0.1]]
          coefficients: {family: geometric, r: 0.5}
      - name: nu
        family: skewed             # shorthand for a built-in sequence
    params:
      seed: 7
      depth: 6
    out: results/

A ``family`` entry is expanded into its sequence record when parsed, so
``parse(dump(cfg)) == cfg`` holds for every parsed config.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import families
from .errors import ConfigError, ValidationError
from .matseq import sequence_from_record
from .measure import MarkovMeasure

SCHEMA_VERSION = 1


@dataclass
class Params:
    seed: int = 0
    depth: int = 6
    tol: float | None = None  # None: the command's own default
    samples: int = 1000
    eps_F: float = 1e-10
    mc_eps_F: float = 1e-6
    probe_depth: int = 1000
    level: int = 4
    max_n: int = 200
    p: int = 0
    length: int = 32
    k_values: list = field(default_factory=lambda: [0, 1, 2, 5, 10, 20, 50, 100])
    word_length: int = 2

    def validate(self):
        for name in ("tol", "eps_F", "mc_eps_F"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"params.{name} must be positive, got {v!r}")
        for name in ("depth", "samples", "probe_depth", "level", "max_n", "length", "word_length"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ConfigError(f"params.{name} must be a non-negative integer, got {v!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"params.seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not all(isinstance(k, int) and k >= 0 for k in self.k_values):
            raise ConfigError("params.k_values must be non-negative integers")
        return self


@dataclass
class MeasureSpec:
    name: str
    sequence: dict
    lam: str | list = "derived"

    def build(self) -> MarkovMeasure:
        try:
            seq = sequence_from_record(self.sequence)
            lam = None if self.lam == "derived" else self.lam
            return MarkovMeasure.build(seq, lam)
        except ValidationError as exc:
            raise ConfigError(f"measure {self.name!r}: {exc}") from exc

    def to_dict(self) -> dict:
        return {"name": self.name, "lambda": self.lam, "sequence": self.sequence}


@dataclass
class ExperimentConfig:
    measures: list
    params: Params = field(default_factory=Params)
    out: str | None = None
    schema: int = SCHEMA_VERSION

    def built(self) -> list[MarkovMeasure]:
        return [m.build() for m in self.measures]

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "measures": [m.to_dict() for m in self.measures],
            "params": dataclasses.asdict(self.params),
            "out": self.out,
        }


def _measure(rec, k) -> MeasureSpec:
    if not isinstance(rec, dict):
        raise ConfigError(f"measures[{k}] must be a mapping")
    name = str(rec.get("name", f"m{k}"))
    lam = rec.get("lambda", "derived")
    if lam != "derived" and not (isinstance(lam, list) and all(isinstance(x, (int, float)) for x in lam)):
        raise ConfigError(f"measure {name!r}: lambda must be 'derived' or a list of numbers")
    if "family" in rec:
        params = rec.get("params") or {}
        seq = families.family(rec["family"], **params).to_record()
    elif "sequence" in rec:
        seq = rec["sequence"]
    else:
        raise ConfigError(f"measure {name!r} needs a 'sequence' or a 'family'")
    spec = MeasureSpec(name, seq, lam)
    spec.build()  # fail early on bad matrices
    return spec


def from_dict(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    schema = data.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema {schema!r} (expected {SCHEMA_VERSION})")
    unknown = set(data) - {"schema", "measures", "params", "out"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    recs = data.get("measures")
    if not isinstance(recs, list) or not 1 <= len(recs) <= 2:
        raise ConfigError("config needs one or two measures")
    raw = data.get("params") or {}
    names = {f.name for f in dataclasses.fields(Params)}
    bad = set(raw) - names
    if bad:
        raise ConfigError(f"unknown params: {sorted(bad)}")
    raw = dict(raw)
    for name in ("tol", "eps_F", "mc_eps_F"):
        # YAML 1.1 reads "1e-10" (no dot) as a string
        if isinstance(raw.get(name), str):
            try:
                raw[name] = float(raw[name])
            except ValueError:
                raise ConfigError(f"params.{name} must be a number, got {raw[name]!r}") from None
    params = Params(**raw).validate()
    out = data.get("out")
    return ExperimentConfig([_measure(r, k) for k, r in enumerate(recs)], params,
                            None if out is None else str(out), schema)


def parse(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return from_dict(data)


def load(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse(text)


def dump(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)
