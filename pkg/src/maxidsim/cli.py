"""Config-driven experiment runner.

Subcommands: simulate (replicate bank to samples.csv), verify (named suites
to reports.csv), mda (the convergence ladder alone), report (summarize a
finished output directory). Exit codes: 0 pass, 1 statistical rejection,
2 configuration error, 3 runtime error.

Written artifacts are deterministic functions of (config, seed): replicate
work is split into fixed chunks whose substream keys never involve the
worker count, CSV floats are fixed 17-significant-digit, and manifests hold
no timing. Wall-clock goes to the run_info.json sidecar so manifests stay
byte-identical across parallelism levels.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from . import __version__
from .config import ExperimentConfig
from .engine import EngineParams
from .errors import ConfigError, MaxidError
from .maxid import (
    build_particle_system,
    omitted_mass_bound,
    pick_v,
    pilot_u_ref,
    suggest_floor,
    truncated_max,
)
from .rng import DOMAIN_PILOT, substream
from .suites import SuiteRow, run_suite, suite_passed

_SIM_CHUNK = 64

_REPORT_COLUMNS = (
    "suite", "name", "method", "statistic", "p_value", "p_adjusted",
    "expectation", "passed", "n_a", "n_b", "details",
)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_bytes(path: str, blob: bytes) -> str:
    with open(path, "wb") as fh:
        fh.write(blob)
    return hashlib.sha256(blob).hexdigest()


def _manifest_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode()


def _sim_chunk(payload: dict, span: tuple[int, int]) -> list[tuple]:
    cfg: ExperimentConfig = payload["cfg"]
    spec, mass, measure = cfg.levy_spec(), cfg.mass(), cfg.measure()
    params = EngineParams(dt=cfg.grid["base_step"])
    rows = []
    for rep in range(*span):
        system = build_particle_system(
            spec, mass, measure, cfg.grid["eval_times"], payload["floor"],
            payload["seed"], rep, params=params,
            max_points=cfg.ppp["max_points"],
        )
        samp = truncated_max(system, payload["bound"])
        for t, z in zip(samp.eval_times, samp.z_values):
            rows.append((rep, float(t), float(z), samp.error_cert))
    return rows


def _write_paths_csv(cfg, spec, mass, measure, floor: float, seed: int,
                     out_dir: str) -> None:
    """Replicate 0 on the full cell grid: the 30 highest particle
    trajectories plus the pointwise envelope over every particle."""
    dt = cfg.grid["base_step"]
    n_cells = int(round(cfg.grid["horizon"] / dt))
    fine = [i * dt for i in range(n_cells + 1)]
    system = build_particle_system(
        spec, mass, measure, fine, floor, seed, 0,
        params=EngineParams(dt=dt), max_points=cfg.ppp["max_points"],
    )
    env = system.paths.max(axis=0)
    order = system.paths.max(axis=1).argsort()[::-1][:30]
    buf = io.StringIO()
    buf.write("kind,particle,t,value\n")
    for rank, idx in enumerate(order):
        for t, val in zip(fine, system.paths[idx]):
            buf.write(f"particle,{rank},{_fmt(t)},{_fmt(val)}\n")
    for t, val in zip(fine, env):
        buf.write(f"envelope,-1,{_fmt(t)},{_fmt(val)}\n")
    _write_bytes(os.path.join(out_dir, "paths.csv"), buf.getvalue().encode())


def cmd_simulate(cfg: ExperimentConfig, seed: int, out_dir: str,
                 parallelism: int, emit_paths: bool = False) -> int:
    spec, mass, measure = cfg.levy_spec(), cfg.mass(), cfg.measure()
    horizon = cfg.grid["horizon"]
    params = EngineParams(dt=cfg.grid["base_step"])
    bound = pick_v(spec, mass, horizon,
                   rng=substream(seed, DOMAIN_PILOT, 9001))

    floor = cfg.ppp["floor"]
    floor_mode = "explicit"
    floor_cert = None
    if floor == "auto":
        floor_mode = "auto"
        u_ref = pilot_u_ref(spec, mass, measure, cfg.grid["eval_times"],
                            seed, params=params)
        floor = suggest_floor(bound, u_ref)
        floor_cert = omitted_mass_bound(bound, floor, u_ref)

    payload = {"cfg": cfg, "floor": float(floor), "seed": seed, "bound": bound}
    spans = [(lo, min(lo + _SIM_CHUNK, cfg.replicates))
             for lo in range(0, cfg.replicates, _SIM_CHUNK)]
    if parallelism <= 1 or len(spans) == 1:
        parts = [_sim_chunk(payload, s) for s in spans]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            parts = list(pool.map(partial(_sim_chunk, payload), spans))

    buf = io.StringIO()
    buf.write("replicate,t,Z,error_cert\n")
    rep_certs: dict[int, float] = {}
    n_rows = 0
    for part in parts:
        for rep, t, z, cert in part:
            buf.write(f"{rep},{_fmt(t)},{_fmt(z)},{_fmt(cert)}\n")
            rep_certs[rep] = cert
            n_rows += 1
    csv_sha = _write_bytes(os.path.join(out_dir, "samples.csv"),
                           buf.getvalue().encode())

    all_z = [row[2] for part in parts for row in part]
    z_lo, z_hi = min(all_z) - 0.5, max(all_z) + 0.5
    grid = [z_lo + (z_hi - z_lo) * i / 1200 for i in range(1201)]
    mbuf = io.StringIO()
    mbuf.write("z,tail_integral,cdf\n")
    for z in grid:
        tail = float(measure.tail_integral(z))
        mbuf.write(f"{_fmt(z)},{_fmt(tail)},{_fmt(math.exp(-tail))}\n")
    _write_bytes(os.path.join(out_dir, "margins.csv"), mbuf.getvalue().encode())

    if emit_paths:
        _write_paths_csv(cfg, spec, mass, measure, float(floor), seed, out_dir)

    certs = [rep_certs[r] for r in sorted(rep_certs)]
    manifest = {
        "command": "simulate",
        "config_hash": cfg.config_hash(),
        "seed": seed,
        "version": __version__,
        "floor": _fmt(floor),
        "floor_mode": floor_mode,
        "floor_cert": None if floor_cert is None else _fmt(floor_cert),
        "v": _fmt(bound.v),
        "c_vt": _fmt(bound.c_vt),
        "replicates": cfg.replicates,
        "eval_times": [_fmt(t) for t in cfg.grid["eval_times"]],
        "rows": n_rows,
        "error_certs": [_fmt(c) for c in certs],
        "max_error_cert": _fmt(max(certs)),
        "samples_sha256": csv_sha,
    }
    _write_bytes(os.path.join(out_dir, "manifest.json"),
                 _manifest_bytes(manifest))
    return 0


def _rows_to_csv(rows: list[SuiteRow]) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(_REPORT_COLUMNS) + "\n")
    for r in rows:
        rec = (
            r.suite, r.name, r.method, _fmt(r.statistic), _fmt(r.p_value),
            _fmt(r.p_adjusted), r.expectation, str(r.passed).lower(),
            str(r.n_a), str(r.n_b), '"' + r.details.replace('"', "'") + '"',
        )
        buf.write(",".join(rec) + "\n")
    return buf.getvalue().encode()


def _run_suites(cfg: ExperimentConfig, seed: int, out_dir: str,
                parallelism: int, command: str,
                only: list[dict] | None = None) -> int:
    entries = only if only is not None else cfg.suites
    all_rows: list[SuiteRow] = []
    summary = []
    for entry in entries:
        rows = run_suite(
            entry["name"], seed,
            n=entry.get("n"),
            significance=entry.get("significance", 0.01),
            parallelism=parallelism,
            ladder=tuple(entry["ladder"]) if "ladder" in entry else None,
        )
        all_rows.extend(rows)
        summary.append({
            "name": entry["name"],
            "passed": suite_passed(rows),
            "reports": [
                {
                    "name": r.name,
                    "method": r.method,
                    "statistic": _fmt(r.statistic),
                    "p_value": _fmt(r.p_value),
                    "p_adjusted": _fmt(r.p_adjusted),
                    "expectation": r.expectation,
                    "passed": r.passed,
                    "n_a": r.n_a,
                    "n_b": r.n_b,
                }
                for r in rows
            ],
        })
    csv_sha = _write_bytes(os.path.join(out_dir, "reports.csv"),
                           _rows_to_csv(all_rows))
    manifest = {
        "command": command,
        "config_hash": cfg.config_hash(),
        "seed": seed,
        "version": __version__,
        "suites": summary,
        "rows": len(all_rows),
        "reports_sha256": csv_sha,
    }
    _write_bytes(os.path.join(out_dir, "manifest.json"),
                 _manifest_bytes(manifest))
    return 0 if all(s["passed"] for s in summary) else 1


def cmd_verify(cfg, seed, out_dir, parallelism) -> int:
    return _run_suites(cfg, seed, out_dir, parallelism, "verify")


def cmd_mda(cfg, seed, out_dir, parallelism) -> int:
    override = [e for e in cfg.suites if e["name"] == "mda"] or [{"name": "mda"}]
    return _run_suites(cfg, seed, out_dir, parallelism, "mda", only=override)


def cmd_report(out_dir: str) -> int:
    man_path = os.path.join(out_dir, "manifest.json")
    try:
        with open(man_path) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        print(f"cannot read manifest: {err}", file=sys.stderr)
        return 2
    print(f"command: {manifest.get('command')}  seed: {manifest.get('seed')}  "
          f"config: {str(manifest.get('config_hash'))[:12]}")
    rep_path = os.path.join(out_dir, "reports.csv")
    if not os.path.exists(rep_path):
        print(f"rows: {manifest.get('rows')}  "
              f"max_error_cert: {manifest.get('max_error_cert')}")
        return 0
    failures = 0
    with open(rep_path) as fh:
        header = fh.readline().strip().split(",")
        idx = {c: i for i, c in enumerate(header)}
        for line in fh:
            parts = line.rstrip("\n").split(",", len(header) - 1)
            ok = parts[idx["passed"]] == "true"
            failures += not ok
            stat = float(parts[idx["statistic"]])
            p = float(parts[idx["p_value"]])
            p_txt = "" if math.isnan(p) else f" p={p:.4g}"
            print(f"[{'PASS' if ok else 'FAIL'}] {parts[idx['suite']]}/"
                  f"{parts[idx['name']]} stat={stat:.6g}{p_txt}")
    print(f"{'all rows passed' if failures == 0 else f'{failures} row(s) failed'}")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="maxidsim",
        description="Seeded simulation and verification of time-changed "
                    "max-infinitely divisible particle systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "verify", "mda"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True)
        p.add_argument("--parallelism", type=int, default=None)
        if name == "simulate":
            p.add_argument("--emit-paths", action="store_true")
    p = sub.add_parser("report")
    p.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "report":
        return cmd_report(args.out)

    t0 = time.monotonic()
    try:
        cfg = ExperimentConfig.from_json(args.config)
        seed = cfg.seed if args.seed is None else args.seed
        parallelism = (cfg.resolved_parallelism()
                       if args.parallelism is None else args.parallelism)
        if parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        os.makedirs(args.out, exist_ok=True)
        if args.command == "simulate":
            rc = cmd_simulate(cfg, seed, args.out, parallelism,
                              emit_paths=args.emit_paths)
        else:
            rc = {"verify": cmd_verify, "mda": cmd_mda}[args.command](
                cfg, seed, args.out, parallelism)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except MaxidError as err:
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as err:
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return 3
    info = {"wall_clock_seconds": round(time.monotonic() - t0, 3),
            "parallelism": parallelism}
    with open(os.path.join(args.out, "run_info.json"), "w") as fh:
        json.dump(info, fh, indent=2)
        fh.write("\n")
    return rc


if __name__ == "__main__":
    sys.exit(main())
