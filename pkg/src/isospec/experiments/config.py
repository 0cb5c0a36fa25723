"""Experiment configuration: JSON in, dotted-path overrides, scenario defaults."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, fields
from dataclasses import field as dc_field
from pathlib import Path
from typing import Any

import numpy as np

from ..bounds import ConstantsConfig
from ..errors import ConfigError, IsospecError
from ..linalg import (CoefficientFrame, FieldTag, HermitianMatrix, Spectrum, entry_frame,
                      local_observable_frame, random_traceless_frame)
from ..rng import RngStream

SCENARIOS = ("oracles", "stein", "marginals", "entries", "submatrix", "schurhorn",
             "induced", "invariant", "bounds")

SCENARIO_DEFAULTS: dict[str, dict] = {
    "oracles": {"n": 3, "m": 1_000_000, "spectrum": {"kind": "random"}},
    "stein": {"n": 10, "m": 1_000_000, "epsilon": 1e-3, "spectrum": {"kind": "pm_sqrt_n"},
              "frame": {"kind": "random", "d": 3}},
    "marginals": {"n": 4096, "m": 10_000, "spectrum": {"kind": "pm_sqrt_n"},
                  "frame": {"kind": "entries", "picks": ["R1,2"]}},
    "entries": {"n": 10_000, "m": 4000, "spectrum": {"kind": "pm_sqrt_n"},
                "frame": {"kind": "entries", "picks": ["D1", "R1,2", "I2,3"]}},
    "submatrix": {"n": 65536, "k": 32, "replicas": 200, "spectrum": {"kind": "pm_sqrt_n"}},
    "schurhorn": {"n": 2048, "replicas": 20, "spectrum": {"kind": "pm_sqrt_n"},
                  "n_ladder": [256, 512, 1024], "ladder_replicas": 5},
    "induced": {"n": 8, "s": 4096, "m": 4000, "frame": {"kind": "local"}},
    "invariant": {"n": 8, "m": 4000, "potential": "quadratic",
                  "frame": {"kind": "diag_pm", "d": 1}},
    "bounds": {"n": 100, "theorem": "entries", "spectrum": {"kind": "pm_sqrt_n"},
               "frame": {"kind": "random", "d": 4}},
}


@dataclass
class ExperimentConfig:
    scenario: str
    n: int | None = None
    d: int | None = None
    k: int | None = None
    s: int | None = None
    m: int | None = None
    replicas: int = 1
    spectrum: dict = dc_field(default_factory=lambda: {"kind": "pm_sqrt_n"})
    frame: dict = dc_field(default_factory=lambda: {"kind": "random", "d": 1})
    epsilon: float = 1e-3
    field: str = "complex"
    seed: int = 0
    stream_id: int = 0
    constants: dict = dc_field(default_factory=dict)
    # number of Gaussian-vs-Gaussian control runs used to calibrate W1 bias
    controls: int = 5
    # scenario extras
    theorem: str = "entries"
    t: float = 0.0
    n_ladder: list = dc_field(default_factory=list)
    ladder_replicas: int = 5
    potential: str = "quadratic"
    burn_in: int | None = None
    mcmc_step_size: float | None = None
    exact_gue: bool = False
    bootstrap: int = 200
    schur_horn_k: float = 10.0
    compare_low_srank: bool = False

    # -- construction ---------------------------------------------------
    @classmethod
    def from_dict(cls, data: dict, scenario: str | None = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = copy.deepcopy(data)
        scen = scenario or data.get("scenario")
        if scen not in SCENARIOS:
            raise ConfigError(f"unknown scenario {scen!r}; expected one of {SCENARIOS}")
        if scenario and data.get("scenario") not in (None, scenario):
            raise ConfigError(f"config scenario {data['scenario']!r} does not match {scenario!r}")
        merged = copy.deepcopy(SCENARIO_DEFAULTS[scen])
        merged.update(data)
        merged["scenario"] = scen
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(merged) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            cfg = cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None, scenario: str, overrides: list[str] = ()) -> "ExperimentConfig":
        data: dict = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError("config must be a JSON object")
        for item in overrides:
            apply_override(data, item, scenario)
        return cls.from_dict(data, scenario)

    def validate(self):
        ints = ("n", "d", "k", "s", "m")
        for name in ints:
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or isinstance(v, bool) or v < 0):
                raise ConfigError(f"{name} must be a nonnegative integer")
        if self.n is None or self.n < 1:
            raise ConfigError("n must be a positive integer")
        if self.replicas < 1 or self.controls < 1:
            raise ConfigError("replicas and controls must be >= 1")
        try:
            FieldTag.parse(self.field)
            self.constants_config()
            self.rng()
        except (IsospecError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(self.spectrum, dict) or "kind" not in self.spectrum:
            raise ConfigError("spectrum must be an object with a 'kind'")
        if not isinstance(self.frame, dict) or "kind" not in self.frame:
            raise ConfigError("frame must be an object with a 'kind'")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        scen = self.scenario
        if scen == "oracles" and self.n > 64:
            raise ConfigError("oracle validation is limited to n <= 64")
        if scen == "stein" and not (1e-4 < self.epsilon < 1e-2 and 2 <= self.n <= 64):
            raise ConfigError("stein needs epsilon in (1e-4, 1e-2) and 2 <= n <= 64")
        if scen == "submatrix" and (self.k is None or not 1 <= self.k <= min(64, self.n)):
            raise ConfigError("submatrix needs 1 <= k <= min(64, n)")
        if scen == "induced" and (self.s is None or self.s < 1 or self.n * self.s > 2**22):
            raise ConfigError("induced needs s >= 1 and n*s <= 2^22")
        if scen in ("oracles", "stein", "marginals", "entries", "induced", "invariant") and not self.m:
            raise ConfigError("sample count m must be positive")

    # -- resolution -----------------------------------------------------
    @property
    def field_tag(self) -> FieldTag:
        return FieldTag.parse(self.field)

    def rng(self) -> RngStream:
        return RngStream(int(self.seed), int(self.stream_id))

    def constants_config(self) -> ConstantsConfig:
        return ConstantsConfig(**self.constants)

    def resolve_spectrum(self) -> Spectrum:
        spec = self.spectrum
        kind = spec["kind"]
        n = self.n
        try:
            if kind == "pm_sqrt_n":
                return Spectrum.pm_split(n, spec.get("magnitude"))
            if kind == "explicit":
                vals = np.asarray(spec["values"], dtype=np.float64)
            elif kind == "file":
                vals = np.asarray(json.loads(Path(spec["path"]).read_text()), dtype=np.float64)
            elif kind == "rank_one":
                vals = np.zeros(n)
                vals[0] = 1.0
            elif kind == "random":
                g = self.rng().substream("spectrum").generator()
                vals = np.round(g.standard_normal(n), 6)
            elif kind == "spike":
                # one large eigenvalue balanced by the rest; operator norm of order n
                vals = np.full(n, -n / (n - 1))
                vals[0] = float(n)
            else:
                raise ConfigError(f"unknown spectrum kind {kind!r}")
        except (KeyError, OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad spectrum spec: {exc}") from exc
        if vals.size != n:
            raise ConfigError(f"spectrum has {vals.size} values but n = {n}")
        return Spectrum(vals)

    def resolve_frame(self) -> CoefficientFrame:
        spec = self.frame
        kind = spec["kind"]
        n = self.n
        try:
            if kind == "entries":
                frame, _ = entry_frame(n, spec["picks"], self.field_tag)
                return frame
            if kind == "random":
                d = int(spec.get("d", self.d or 1))
                return random_traceless_frame(n, d, self.field_tag, self.rng().substream("frame"))
            if kind == "local":
                return local_observable_frame(n)
            if kind == "diag_pm":
                # full stable rank diagonal coefficients with +/-1/sqrt(n) entries
                d = int(spec.get("d", self.d or 1))
                mats = []
                for j in range(d):
                    period = 2 ** (j + 1)
                    signs = np.where((np.arange(n) // (period // 2)) % 2 == 0, 1.0, -1.0)
                    mats.append(np.diag(signs / np.sqrt(n)))
                return CoefficientFrame.build(mats)
            if kind == "explicit":
                mats = [HermitianMatrix.from_json(m) for m in spec["matrices"]]
                return CoefficientFrame.build(mats)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad frame spec: {exc}") from exc
        raise ConfigError(f"unknown frame kind {kind!r}")

    def entry_picks(self) -> list:
        if self.frame.get("kind") != "entries":
            raise ConfigError("this scenario needs an 'entries' frame")
        return list(self.frame["picks"])

    def to_dict(self) -> dict:
        return asdict(self)


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(data: dict, item: str, scenario: str | None = None) -> None:
    """Apply ``dotted.path=value`` in place; the value is parsed as JSON when possible."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, text = item.split("=", 1)
    parts = key.strip().split(".")
    known = {f.name for f in fields(ExperimentConfig)}
    if parts[0] not in known:
        raise ConfigError(f"override references unknown key {parts[0]!r}")
    node = data
    for p in parts[:-1]:
        if p not in node:
            base = SCENARIO_DEFAULTS.get(scenario or "", {}).get(p)
            node[p] = copy.deepcopy(base) if isinstance(base, dict) else {}
        if not isinstance(node[p], dict):
            raise ConfigError(f"override path {key!r} crosses a non-object value")
        node = node[p]
    node[parts[-1]] = _parse_value(text)
