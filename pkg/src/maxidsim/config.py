"""Experiment configuration: one JSON document, validated on load.

Every validation failure raises ConfigError naming the offending field by
its dotted path, so a CI log pinpoints the bad entry without a traceback
safari. The canonical form (sorted keys, resolved defaults) feeds the config
hash recorded in run manifests.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

from .clock import MassFunction
from .errors import ConfigError
from .levy import JumpDist, LevySpec, make_levy_spec
from .ppp import IntensityMeasure

__all__ = ["ExperimentConfig", "SUITE_NAMES"]

SUITE_NAMES = (
    "marginal",
    "stationarity",
    "poisson-counts",
    "clock-identity",
    "exceedance-bound",
    "mda",
)

_JUMP_KINDS = ("constant", "normal", "two_point")


def _need(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError(f"{path}.{key}: missing required field")
    return mapping[key]


def _as_real(value, path: str, *, lo: float | None = None, strict: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    x = float(value)
    if not math.isfinite(x):
        raise ConfigError(f"{path}: must be finite, got {x!r}")
    if lo is not None and (x <= lo if strict else x < lo):
        op = ">" if strict else ">="
        raise ConfigError(f"{path}: must be {op} {lo:g}, got {x:g}")
    return x


def _as_int(value, path: str, *, lo: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{path}: must be >= {lo}, got {value}")
    return value


def _check_levy(levy, path: str = "levy") -> dict:
    if not isinstance(levy, dict):
        raise ConfigError(f"{path}: expected an object")
    out = {
        "sigma": _as_real(_need(levy, "sigma", path), f"{path}.sigma", lo=0.0),
        "jump_rate": _as_real(
            levy.get("jump_rate", 0.0), f"{path}.jump_rate", lo=0.0
        ),
    }
    drift = levy.get("drift", "auto")
    if drift != "auto":
        drift = _as_real(drift, f"{path}.drift")
    out["drift"] = drift
    jump = levy.get("jump")
    if out["jump_rate"] > 0:
        if not isinstance(jump, dict):
            raise ConfigError(f"{path}.jump: required when jump_rate > 0")
        kind = _need(jump, "kind", f"{path}.jump")
        if kind not in _JUMP_KINDS:
            raise ConfigError(
                f"{path}.jump.kind: expected one of {_JUMP_KINDS}, got {kind!r}"
            )
        jd = {"kind": kind}
        if kind == "constant":
            jd["value"] = _as_real(_need(jump, "value", f"{path}.jump"),
                                   f"{path}.jump.value")
        elif kind == "normal":
            jd["mean"] = _as_real(_need(jump, "mean", f"{path}.jump"),
                                  f"{path}.jump.mean")
            jd["var"] = _as_real(_need(jump, "var", f"{path}.jump"),
                                 f"{path}.jump.var", lo=0.0)
        else:
            jd["hi"] = _as_real(_need(jump, "hi", f"{path}.jump"), f"{path}.jump.hi")
            jd["lo"] = _as_real(_need(jump, "lo", f"{path}.jump"), f"{path}.jump.lo")
            p = _as_real(_need(jump, "p_hi", f"{path}.jump"), f"{path}.jump.p_hi")
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{path}.jump.p_hi: must lie in [0, 1], got {p:g}")
            jd["p_hi"] = p
        out["jump"] = jd
    else:
        out["jump"] = None
    if out["sigma"] == 0 and out["jump_rate"] == 0:
        raise ConfigError(f"{path}: sigma and jump_rate are both zero")
    return out


def _check_mass(mass, path: str = "mass_function") -> dict:
    if not isinstance(mass, dict):
        raise ConfigError(f"{path}: expected an object")
    kind = _need(mass, "kind", path)
    if kind == "constant":
        return {"kind": "constant",
                "c": _as_real(mass.get("c", 1.0), f"{path}.c", lo=0.0, strict=True)}
    if kind == "logistic_bump":
        a = _as_real(_need(mass, "a", path), f"{path}.a")
        if a <= -1.0:
            raise ConfigError(f"{path}.a: must be > -1, got {a:g}")
        return {"kind": "logistic_bump", "a": a,
                "shift": _as_real(mass.get("shift", 0.0), f"{path}.shift")}
    raise ConfigError(
        f"{path}.kind: expected 'constant' or 'logistic_bump', got {kind!r}"
    )


def _check_suite(entry, idx: int) -> dict:
    path = f"suites[{idx}]"
    if isinstance(entry, str):
        entry = {"name": entry}
    if not isinstance(entry, dict):
        raise ConfigError(f"{path}: expected a name or an object")
    name = _need(entry, "name", path)
    if name not in SUITE_NAMES:
        raise ConfigError(f"{path}.name: unknown suite {name!r}; "
                          f"choose from {SUITE_NAMES}")
    out = {"name": name}
    if "n" in entry:
        out["n"] = _as_int(entry["n"], f"{path}.n", lo=1)
    if "significance" in entry:
        sig = _as_real(entry["significance"], f"{path}.significance")
        if not 0.0 < sig < 1.0:
            raise ConfigError(f"{path}.significance: must lie in (0, 1), got {sig:g}")
        out["significance"] = sig
    if "ladder" in entry:
        if name != "mda":
            raise ConfigError(f"{path}.ladder: only the mda suite takes a ladder")
        lad = entry["ladder"]
        if not isinstance(lad, list) or not lad:
            raise ConfigError(f"{path}.ladder: expected a nonempty list")
        vals = [_as_int(v, f"{path}.ladder[{i}]", lo=1) for i, v in enumerate(lad)]
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError(f"{path}.ladder: must be strictly increasing")
        out["ladder"] = vals
    return out


@dataclass
class ExperimentConfig:
    levy: dict
    mass_function: dict
    grid: dict
    ppp: dict
    suites: list = field(default_factory=list)
    seed: int = 0
    parallelism: int | str = 1
    replicates: int = 100

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root: expected a JSON object")
        unknown = set(raw) - {
            "levy", "mass_function", "grid", "ppp", "suites", "seed",
            "parallelism", "replicates",
        }
        if unknown:
            raise ConfigError(f"config root: unknown fields {sorted(unknown)}")
        levy = _check_levy(_need(raw, "levy", "config"))
        mass = _check_mass(_need(raw, "mass_function", "config"))

        grid = _need(raw, "grid", "config")
        if not isinstance(grid, dict):
            raise ConfigError("grid: expected an object")
        horizon = _as_real(_need(grid, "horizon", "grid"), "grid.horizon",
                           lo=0.0, strict=True)
        base_step = _as_real(grid.get("base_step", 0.025), "grid.base_step",
                             lo=0.0, strict=True)
        times = _need(grid, "eval_times", "grid")
        if not isinstance(times, list) or not times:
            raise ConfigError("grid.eval_times: expected a nonempty list")
        eval_times = []
        for i, t in enumerate(times):
            tv = _as_real(t, f"grid.eval_times[{i}]", lo=0.0)
            if tv > horizon:
                raise ConfigError(
                    f"grid.eval_times[{i}]: {tv:g} exceeds horizon {horizon:g}"
                )
            k = tv / base_step
            if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
                raise ConfigError(
                    f"grid.eval_times[{i}]: {tv:g} is not a multiple of "
                    f"base_step {base_step:g}"
                )
            eval_times.append(tv)
        if sorted(eval_times) != eval_times:
            raise ConfigError("grid.eval_times: must be sorted ascending")
        grid_out = {"horizon": horizon, "base_step": base_step,
                    "eval_times": eval_times}

        ppp = raw.get("ppp", {})
        if not isinstance(ppp, dict):
            raise ConfigError("ppp: expected an object")
        floor = ppp.get("floor", "auto")
        if floor != "auto":
            floor = _as_real(floor, "ppp.floor")
        ppp_out = {
            "floor": floor,
            "max_points": _as_int(ppp.get("max_points", 1_000_000),
                                  "ppp.max_points", lo=1),
        }

        suites_raw = raw.get("suites", [])
        if not isinstance(suites_raw, list):
            raise ConfigError("suites: expected a list")
        suites = [_check_suite(s, i) for i, s in enumerate(suites_raw)]

        seed = _as_int(raw.get("seed", 0), "seed", lo=0)
        if seed >= 2**64:
            raise ConfigError(f"seed: must fit in 64 bits, got {seed}")
        par = raw.get("parallelism", 1)
        if par != "auto":
            par = _as_int(par, "parallelism", lo=1)
        replicates = _as_int(raw.get("replicates", 100), "replicates", lo=1)
        return cls(levy=levy, mass_function=mass, grid=grid_out, ppp=ppp_out,
                   suites=suites, seed=seed, parallelism=par,
                   replicates=replicates)

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(
                f"config {path} is not valid JSON (line {err.lineno}, "
                f"column {err.colno}): {err.msg}"
            ) from err
        return cls.from_dict(raw)

    def levy_spec(self) -> LevySpec:
        jd = None
        if self.levy["jump_rate"] > 0:
            params = dict(self.levy["jump"])
            jd = JumpDist(kind=params.pop("kind"), **params)
        drift = self.levy["drift"]
        if drift == "auto":
            return make_levy_spec(self.levy["sigma"], self.levy["jump_rate"], jd)
        return LevySpec.with_drift(
            self.levy["sigma"], self.levy["jump_rate"], jd, drift
        )

    def mass(self) -> MassFunction:
        m = self.mass_function
        if m["kind"] == "constant":
            return MassFunction(kind="constant", c=m["c"])
        return MassFunction(kind="logistic_bump", a=m["a"], shift=m["shift"])

    def measure(self) -> IntensityMeasure:
        return IntensityMeasure(self.mass())

    def resolved_parallelism(self) -> int:
        if self.parallelism == "auto":
            return max(1, os.cpu_count() or 1)
        return int(self.parallelism)

    def canonical_dict(self) -> dict:
        return {
            "levy": self.levy,
            "mass_function": self.mass_function,
            "grid": self.grid,
            "ppp": self.ppp,
            "suites": self.suites,
            "seed": self.seed,
            "replicates": self.replicates,
        }

    def config_hash(self) -> str:
        # parallelism is execution detail, not identity: excluded on purpose
        blob = json.dumps(self.canonical_dict(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()
