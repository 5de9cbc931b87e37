"""Command-line simulator.

Example::

    onebit-hbf --experiment es-compare --config configs/es_compare.json \\
        --trials 500 --seed 1 --out es.csv

Exit codes: 0 success, 2 config error, 3 exhaustive-search guard, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .binaryopt import GuardError
from .channel import ChannelParams
from .evaluate import ExperimentResult, ExperimentSpec, run_monte_carlo, snr_to_power
from .hybrid import DesignConfig, SystemConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_IO = 4

EXPERIMENTS = {
    "snr-sweep": "snr",
    "ns-sweep": "ns",
    "nt-sweep": "nt",
    "es-compare": "es-compare",
    "single": "single",
}

CSV_HEADER = ["experiment", "sweep_var", "sweep_value", "algorithm", "mean_se", "std_err", "trials", "seed"]

DEFAULTS = {
    "nt": 64,
    "nr": 16,
    "n_rf": 4,
    "ns": 4,
    "noise_var": 1.0,
    "snr_db": 20.0,
    "spacing_ratio": 0.5,
    "num_clusters": 10,
    "rays_per_cluster": 10,
    "angle_spread_deg": 2.5,
    "aod_range_deg": [0.0, 360.0],
    "aoa_sector_deg": 60.0,
    "power_decay_base": 0.7,
    "alpha_rel": 1e-6,
    "q1_raw": True,
    "snr_grid_db": [-10, -5, 0, 5, 10, 15, 20],
    "ns_grid": [1, 2, 4],
    "nt_grid": [16, 32, 64, 128, 256],
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSettings:
    snr_grid_db: tuple[float, ...]
    ns_grid: tuple[int, ...]
    nt_grid: tuple[int, ...]
    snr_db: float
    spacing_ratio: float


@dataclass(frozen=True)
class RunSpec:
    experiment: str
    config_path: str | None = None
    trials: int = 200
    seed: int = 0
    output_path: str = "-"
    format: str = "csv"
    alpha_rel: float | None = None
    q1_raw: bool | None = None
    workers: int = 1


def _number(doc: dict, key: str, kind=float):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    if kind is int:
        if v != int(v):
            raise ConfigError(f"{key}: expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _grid(doc: dict, key: str, kind=float) -> tuple:
    v = doc[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{key}: expected a nonempty list")
    return tuple(_number({key: x}, key, kind) for x in v)


def parse_config(text: str) -> tuple[SystemConfig, ChannelParams, DesignConfig, SweepSettings]:
    """Parse a flat JSON object; missing keys take the defaults in ``DEFAULTS``.

    Angles are given in degrees.

    Raises:
        ConfigError: malformed document, unknown key or violated constraint;
            the message names the offending key.
    """
    text = text.strip()
    try:
        user = json.loads(text) if text else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(user) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    doc = {**DEFAULTS, **user}

    if not isinstance(doc["q1_raw"], bool):
        raise ConfigError("q1_raw: expected true or false")
    aod = doc["aod_range_deg"]
    if not isinstance(aod, list) or len(aod) != 2:
        raise ConfigError("aod_range_deg: expected [low, high]")
    aod_lo, aod_hi = (_number({"aod_range_deg": x}, "aod_range_deg") for x in aod)

    ints = {k: _number(doc, k, int) for k in ("nt", "nr", "n_rf", "ns", "num_clusters", "rays_per_cluster")}
    for k, v in ints.items():
        if v < 1:
            raise ConfigError(f"{k}: must be >= 1, got {v}")
    if ints["ns"] != ints["n_rf"]:
        raise ConfigError(f"ns: must equal n_rf (got ns={ints['ns']}, n_rf={ints['n_rf']})")
    if ints["ns"] > min(ints["nt"], ints["nr"]):
        raise ConfigError(f"ns: must not exceed min(nt, nr) = {min(ints['nt'], ints['nr'])}")
    noise_var = _number(doc, "noise_var")
    if not noise_var > 0:
        raise ConfigError("noise_var: must be positive")
    snr_db = _number(doc, "snr_db")
    spread = _number(doc, "angle_spread_deg")
    if not spread > 0:
        raise ConfigError("angle_spread_deg: must be positive")
    if not aod_hi >= aod_lo:
        raise ConfigError("aod_range_deg: expected low <= high")
    sector = _number(doc, "aoa_sector_deg")
    if not sector > 0:
        raise ConfigError("aoa_sector_deg: must be positive")
    decay = _number(doc, "power_decay_base")
    if not 0.0 < decay < 1.0:
        raise ConfigError("power_decay_base: must lie in (0, 1)")
    alpha_rel = _number(doc, "alpha_rel")
    if not 0.0 < alpha_rel < 1.0:
        raise ConfigError("alpha_rel: must lie in (0, 1)")

    system = SystemConfig(
        nt=ints["nt"],
        nr=ints["nr"],
        n_rf=ints["n_rf"],
        ns=ints["ns"],
        power=snr_to_power(snr_db, noise_var),
        noise_var=noise_var,
    )
    channel = ChannelParams(
        num_clusters=ints["num_clusters"],
        rays_per_cluster=ints["rays_per_cluster"],
        angle_spread_rad=math.radians(spread),
        aod_mean_range=(math.radians(aod_lo), math.radians(aod_hi)),
        aoa_mean_sector_width=math.radians(sector),
        power_decay_base=decay,
    )
    design = DesignConfig(alpha_rel=alpha_rel, q1_raw=doc["q1_raw"])
    spacing = _number(doc, "spacing_ratio")
    if not spacing > 0:
        raise ConfigError("spacing_ratio: must be positive")
    sweep = SweepSettings(
        snr_grid_db=_grid(doc, "snr_grid_db"),
        ns_grid=_grid(doc, "ns_grid", int),
        nt_grid=_grid(doc, "nt_grid", int),
        snr_db=snr_db,
        spacing_ratio=spacing,
    )
    return system, channel, design, sweep


def build_experiment(
    experiment: str, system: SystemConfig, channel: ChannelParams, design: DesignConfig, sweep: SweepSettings
) -> ExperimentSpec:
    name = EXPERIMENTS[experiment]
    grid = {
        "snr": sweep.snr_grid_db,
        "es-compare": sweep.snr_grid_db,
        "ns": sweep.ns_grid,
        "nt": sweep.nt_grid,
        "single": (),
    }[name]
    try:
        return ExperimentSpec(
            sweep=name,
            grid=grid,
            system=system,
            channel=channel,
            design=design,
            spacing_ratio=sweep.spacing_ratio,
            snr_db=sweep.snr_db,
        )
    except ValueError as exc:
        key = {"ns": "ns_grid", "nt": "nt_grid"}.get(name, "snr_grid_db")
        raise ConfigError(f"{key}: {exc}") from exc


def _fmt_value(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def format_csv(experiment: str, results: list[ExperimentResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in results:
        writer.writerow(
            [experiment, r.sweep_var, _fmt_value(r.sweep_value), r.algorithm, repr(r.mean_se), repr(r.std_err), r.trials, r.seed]
        )
    return buf.getvalue()


def format_json(experiment: str, results: list[ExperimentResult], metadata: dict) -> str:
    rows = []
    for r in results:
        row = asdict(r)
        row["experiment"] = experiment
        rows.append(row)
    return json.dumps({"metadata": metadata, "results": rows}, indent=2, sort_keys=True) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent if str(target.parent) else ".", prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _summaries(results: list[ExperimentResult]) -> list[str]:
    lines: dict = {}
    for r in results:
        key = (r.sweep_var, _fmt_value(r.sweep_value))
        lines.setdefault(key, []).append(f"{r.algorithm}={r.mean_se:.4f}")
    return [f"{var}={val}: " + " ".join(parts) for (var, val), parts in lines.items()]


def run(spec: RunSpec, out=sys.stdout, err=sys.stderr) -> int:
    """Execute one run; returns the process exit code."""
    if spec.experiment not in EXPERIMENTS:
        print(f"error: unknown experiment {spec.experiment!r}", file=err)
        return EXIT_CONFIG
    if spec.trials < 1:
        print("error: trials must be >= 1", file=err)
        return EXIT_CONFIG
    if spec.seed < 0:
        print("error: seed must be nonnegative", file=err)
        return EXIT_CONFIG
    if spec.format not in ("csv", "json"):
        print(f"error: unknown format {spec.format!r}", file=err)
        return EXIT_CONFIG

    text = ""
    if spec.config_path:
        try:
            text = Path(spec.config_path).read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=err)
            return EXIT_IO
    try:
        system, channel, design, sweep = parse_config(text)
        if spec.alpha_rel is not None:
            try:
                design = replace(design, alpha_rel=spec.alpha_rel)
            except ValueError as exc:
                raise ConfigError(f"alpha_rel: {exc}") from exc
        if spec.q1_raw is not None:
            design = replace(design, q1_raw=spec.q1_raw)
        experiment = build_experiment(spec.experiment, system, channel, design, sweep)
    except ConfigError as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG

    try:
        results = run_monte_carlo(experiment, spec.trials, spec.seed, workers=spec.workers)
    except GuardError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_GUARD

    if spec.format == "csv":
        payload = format_csv(spec.experiment, results)
    else:
        metadata = {
            "experiment": spec.experiment,
            "trials": spec.trials,
            "seed": spec.seed,
            "snr_definition": f"SNR = P / noise_var with noise_var = {system.noise_var!r}; P swept",
            "system": asdict(system),
            "channel": asdict(channel),
            "design": asdict(design),
            "sweep": asdict(sweep),
        }
        payload = format_json(spec.experiment, results, metadata)

    summary_stream = err if spec.output_path == "-" else out
    for line in _summaries(results):
        print(line, file=summary_stream)
    try:
        if spec.output_path == "-":
            out.write(payload)
        else:
            write_atomic(spec.output_path, payload)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=err)
        return EXIT_IO
    return EXIT_OK


def _workers_from_env() -> int:
    raw = os.environ.get("HBF_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"HBF_THREADS: expected a nonnegative integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"HBF_THREADS: expected a nonnegative integer, got {raw!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="onebit-hbf",
        description="Monte-Carlo spectral efficiency of one-bit hybrid precoding/combining.",
    )
    p.add_argument("--experiment", required=True, choices=list(EXPERIMENTS))
    p.add_argument("--config", help="flat JSON config (missing keys take defaults)")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--alpha-rel", type=float, help="regularizer as a fraction of the largest singular value")
    q1 = p.add_mutually_exclusive_group()
    q1.add_argument("--q1-raw", dest="q1_raw", action="store_const", const=True,
                    help="first pair searches the raw channel (default)")
    q1.add_argument("--q1-truncated", dest="q1_raw", action="store_const", const=False,
                    help="first pair searches the ns-term truncated channel")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        workers = _workers_from_env()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    spec = RunSpec(
        experiment=args.experiment,
        config_path=args.config,
        trials=args.trials,
        seed=args.seed,
        output_path=args.out,
        format=args.format,
        alpha_rel=args.alpha_rel,
        q1_raw=args.q1_raw,
        workers=workers,
    )
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
