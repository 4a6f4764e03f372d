"""Command-line front end.

    fbmwalk generate  --hurst 0.7 --n 256 --paths 4 --out runs/walk.csv
    fbmwalk verify    --hurst 0.25 --n 16 --paths 100
    fbmwalk converge  --hurst 0.3 --n 256 --paths 20000
    fbmwalk constants --hurst 0.25

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
Flags override values from ``--config`` (a JSON object), which override the
built-in defaults.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .grid import GridError, bernoulli_stream, make_grid
from .oracle import exact_fbm_batch
from .special import DomainError, as_hurst, coefficient_K, scaling_constant_c, zeta
from .stats import Z_BAND, compare_covariance, estimate_variance, scaling_study
from .walk import (
    DEFAULT_REL_VAR_TOL,
    auto_grid,
    lemma2_bounds,
    lemma2_variance_bounds,
    lemma3_pathwise_bound,
    path_coefficient,
    path_incremental,
    path_kernel,
    increments,
    sample_at_times,
    sandwich_check,
    walk_covariance,
)

log = logging.getLogger("fbmwalk")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
IDENTITY_TOL = 1e-9
DEGENERACY_TOL = 1e-12
MIN_GATED_PATHS = 100
STUDY_SEEDS = 100
DEFAULT_STUDY_NS = (16, 64, 256, 1024)

DEFAULTS = {
    "hurst": None,
    "n": 256,
    "horizon": 1.0,
    "past_steps": "auto",
    "paths": 1,
    "seed": 0,
    "scale": "raw",
    "out": None,
    "format": "csv",
    "study_n": ",".join(map(str, DEFAULT_STUDY_NS)),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    hurst: float
    n: int
    horizon: float
    past_steps: int | str
    paths: int
    seed: int
    scale: str
    out: str | None
    format: str
    study_n: tuple = DEFAULT_STUDY_NS

    def grid(self):
        return auto_grid(self.hurst, self.n, self.horizon, self.past_steps, DEFAULT_REL_VAR_TOL)


def _parse_int(name, value, minimum):
    if isinstance(value, float) and not value.is_integer():
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    try:
        v = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {value!r}") from None
    if v < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {v}")
    return v


def build_config(command: str, flags: dict, config_path: str | None = None) -> RunConfig:
    merged = dict(DEFAULTS)
    if config_path:
        try:
            data = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {config_path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged.update(data)
    merged.update({k: v for k, v in flags.items() if v is not None})

    if merged["hurst"] is None:
        raise ConfigError("--hurst is required")
    try:
        hurst = as_hurst(float(merged["hurst"])).value
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"hurst: {exc}") from None
    n = _parse_int("n", merged["n"], 1)
    paths = _parse_int("paths", merged["paths"], 1)
    seed = _parse_int("seed", merged["seed"], 0)
    try:
        horizon = float(merged["horizon"])
    except (TypeError, ValueError):
        raise ConfigError(f"horizon must be a number, got {merged['horizon']!r}") from None
    past = merged["past_steps"]
    if past != "auto":
        past = _parse_int("past_steps", past, 1)
    if merged["scale"] not in ("raw", "c_H"):
        raise ConfigError(f"scale must be 'raw' or 'c_H', got {merged['scale']!r}")
    if merged["format"] not in ("csv", "jsonl"):
        raise ConfigError(f"format must be 'csv' or 'jsonl', got {merged['format']!r}")
    study = merged["study_n"]
    if isinstance(study, str):
        study = [s for s in study.split(",") if s.strip()]
    study_n = tuple(_parse_int("study_n", s, 1) for s in study)
    cfg = RunConfig(command, hurst, n, horizon, past, paths, seed, merged["scale"],
                    merged["out"], merged["format"], study_n)
    try:
        make_grid(n, horizon, 1)
    except GridError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


# output ------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_path(fh, times, values, fmt: str):
    if fmt == "csv":
        fh.write("t,x\n")
        for t, x in zip(times, values):
            fh.write(f"{_fmt(t)},{_fmt(x)}\n")
    else:
        for t, x in zip(times, values):
            fh.write(json.dumps({"t": float(t), "x": float(x)}) + "\n")


def read_path(path, fmt: str = "csv") -> tuple[np.ndarray, np.ndarray]:
    """Parse a file written by ``generate`` back into (times, values)."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if fmt == "csv":
        if text[0] != "t,x":
            raise ValueError("missing t,x header")
        rows = [line.split(",") for line in text[1:]]
        return np.array([float(r[0]) for r in rows]), np.array([float(r[1]) for r in rows])
    recs = [json.loads(line) for line in text]
    return np.array([r["t"] for r in recs]), np.array([r["x"] for r in recs])


def _path_files(out: str, paths: int, fmt: str) -> list[Path]:
    base = Path(out)
    if paths == 1:
        return [base]
    suffix = base.suffix or f".{fmt}"
    return [base.with_name(f"{base.stem}_{i:04d}{suffix}") for i in range(paths)]


def _emit_json(obj, out: str | None):
    text = json.dumps(obj, indent=2, allow_nan=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# commands ----------------------------------------------------------------


def cmd_generate(cfg: RunConfig) -> int:
    grid = cfg.grid()
    c = scaling_constant_c(cfg.hurst) if cfg.scale == "c_H" else 1.0
    method = "direct" if grid.n_draws * grid.n_steps <= (1 << 24) else "fft"
    samples = []
    for i in range(cfg.paths):
        sample = path_incremental(cfg.hurst, bernoulli_stream(cfg.seed + i, grid), method=method)
        samples.append(sample.values * c)
    if cfg.out is None or cfg.out == "-":
        for vals in samples:
            write_path(sys.stdout, grid.times, vals, cfg.format)
        return EXIT_OK
    files = _path_files(cfg.out, cfg.paths, cfg.format)
    meta = {
        "hurst": cfg.hurst,
        "n_per_unit": grid.n_per_unit,
        "horizon": grid.horizon,
        "past_horizon_steps": grid.past_horizon_steps,
        "seed": cfg.seed,
        "seeds": [cfg.seed + i for i in range(cfg.paths)],
        "scale": cfg.scale,
        "scale_factor": c,
        "generator_form": "incremental",
        "method": method,
        "format": cfg.format,
        "files": [f.name for f in files],
        "version": __version__,
    }
    try:
        for f, vals in zip(files, samples):
            with open(f, "w", encoding="utf-8", newline="\n") as fh:
                write_path(fh, grid.times, vals, cfg.format)
        Path(str(files[0]) if cfg.paths == 1 else cfg.out).with_suffix(".meta.json").write_text(
            json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_USAGE
    return EXIT_OK


def _entry(check, value, bound, passed, **extra):
    return {"check": check, "value": value, "bound": bound, "margin": bound - value,
            "passed": bool(passed), **extra}


def _degeneracy_entries(cfg: RunConfig, seeds) -> list[dict]:
    grid = make_grid(cfg.n, cfg.horizon, 1 if cfg.past_steps == "auto" else cfg.past_steps)
    out = []
    for s in seeds:
        stream = bernoulli_stream(s, grid)
        walk = stream.walk()
        gap = max(float(np.max(np.abs(f(0.5, stream).values - walk)))
                  for f in (path_incremental, path_coefficient, path_kernel))
        out.append(_entry("degeneracy_H_half", gap, DEGENERACY_TOL, gap <= DEGENERACY_TOL, seed=s))
        qv = math.fsum(increments(0.5, stream) ** 2)
        err = abs(qv - grid.horizon)
        out.append(_entry("quadratic_variation", err, DEGENERACY_TOL, err <= DEGENERACY_TOL, seed=s))
    return out


def run_verify(cfg: RunConfig) -> dict:
    h = as_hurst(cfg.hurst)
    seeds = [cfg.seed + i for i in range(cfg.paths)]
    entries = []
    sections = []
    if h.value == 0.5:
        sections.append("degeneracy")
        entries += _degeneracy_entries(cfg, seeds)
    else:
        grid = cfg.grid()
        sections += ["form_identity", "riemann_sandwich"]
        for s in seeds:
            stream = bernoulli_stream(s, grid)
            gap = float(np.max(np.abs(path_incremental(h, stream).values
                                      - path_coefficient(h, stream).values)))
            entries.append(_entry("form_identity", gap, IDENTITY_TOL, gap <= IDENTITY_TOL, seed=s))
        step = max(1, grid.n_steps // 16)
        t_values = [k * grid.dt for k in range(step, grid.n_steps + 1, step)]
        kinds = ("epsilon", "delta") if h.value > 0.5 else ("epsilon_tilde", "delta_tilde")
        if h.value > 0.5 or h.uses_zeta_branch:
            for which in kinds:
                lo, ratio, ok = sandwich_check(h, grid, which, t_values)
                entries.append(_entry(f"sandwich_{which}", ratio, 1.0, ok, min_value=lo))
        if h.value > 0.5:
            sections.append("lemma2")
            for K in sorted({max(1, grid.n_steps // 2), grid.n_steps}):
                t = K * grid.dt
                res = lemma2_variance_bounds(h, t, grid)
                b_eps, b_dlt = lemma2_bounds(h, t, grid.dt)
                entries.append(_entry("lemma2_i", res.eps_variance, b_eps,
                                      res.eps_variance <= b_eps, t=t))
                entries.append(_entry("lemma2_ii", res.delta_variance, b_dlt,
                                      res.delta_variance <= b_dlt, t=t))
        elif h.uses_zeta_branch:
            sections.append("lemma3")
            for s in seeds:
                res = lemma3_pathwise_bound(h, bernoulli_stream(s, grid))
                entries.append(_entry("lemma3", res.max_discrepancy, res.bound, res.passed, seed=s))
        sections.append("degeneracy")
        entries += _degeneracy_entries(cfg, seeds)
    failed = [e for e in entries if not e["passed"]]
    return {"hurst": h.value, "n_per_unit": cfg.n, "horizon": cfg.horizon,
            "sections": sections, "passed": not failed, "n_checks": len(entries),
            "failed": failed, "checks": entries}


def cmd_verify(cfg: RunConfig) -> int:
    report = run_verify(cfg)
    _emit_json(report, cfg.out)
    for e in report["failed"]:
        log.error("check %s failed: value %.3g > bound %.3g", e["check"], e["value"], e["bound"])
    return EXIT_OK if report["passed"] else EXIT_FAIL


def run_converge(cfg: RunConfig) -> dict:
    h = as_hurst(cfg.hurst)
    grid = cfg.grid()
    warnings = []
    probe = [grid.index_of(cfg.horizon * f) * grid.dt for f in (0.25, 0.5, 0.75, 1.0)]
    seeds = np.arange(cfg.seed, cfg.seed + cfg.paths)
    c = scaling_constant_c(h)
    report = {"hurst": h.value, "n_per_unit": grid.n_per_unit, "horizon": grid.horizon,
              "past_horizon_steps": grid.past_horizon_steps, "paths": cfg.paths,
              "seed": cfg.seed, "scale": c, "probe_times": probe}
    gate = cfg.paths >= MIN_GATED_PATHS
    if not gate:
        warnings.append(f"only {cfg.paths} paths (< {MIN_GATED_PATHS}); z-score gate skipped")
    ok = True
    if cfg.paths >= 2:
        batch = sample_at_times(h, grid, probe, seeds)
        var = estimate_variance(batch, probe[-1], c, h.value)
        cov = compare_covariance(batch, probe, c, h.value)
        oracle = compare_covariance(exact_fbm_batch(h, probe, seeds), probe, 1.0, h.value)
        exact = c * c * walk_covariance(h, grid, probe)
        report["variance"] = asdict(var)
        report["covariance"] = cov.to_dict()
        report["oracle_self_test"] = oracle.to_dict()
        report["walk_exact_covariance"] = exact.tolist()
        if gate:
            ok &= var.within(Z_BAND) and cov.within(Z_BAND) and oracle.within(Z_BAND)
    else:
        warnings.append("a single path has no sample variance; moments skipped")
    if h.value != 0.5 and len(cfg.study_n) >= 3:
        study = scaling_study(h, cfg.study_n, STUDY_SEEDS)
        report["scaling_study"] = study.to_dict()
        ok &= study.slope_ok
    report["warnings"] = warnings
    report["passed"] = bool(ok)
    return report


def cmd_converge(cfg: RunConfig) -> int:
    report = run_converge(cfg)
    for w in report["warnings"]:
        log.warning(w)
    _emit_json(report, cfg.out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_constants(cfg: RunConfig) -> int:
    h = as_hurst(cfg.hurst)
    out = {"H": h.value, "K_H": coefficient_K(h), "c_H": scaling_constant_c(h)}
    if h.uses_zeta_branch:
        out["zeta(3/2-H)"] = zeta(1.5 - h.value)
    if h.value > 0.5:
        out["zeta(3-2H)"] = zeta(3.0 - 2.0 * h.value)
    if cfg.format == "jsonl" or cfg.out:
        _emit_json(out, cfg.out)
    else:
        for k, v in out.items():
            print(f"{k} = {v!r}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "verify": cmd_verify,
    "converge": cmd_converge,
    "constants": cmd_constants,
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--hurst", type=float, help="Hurst index in (0, 1)")
    common.add_argument("--n", type=int, help="grid points per unit time (default 256)")
    common.add_argument("--horizon", type=float, help="simulated horizon (default 1)")
    common.add_argument("--past-steps", dest="past_steps",
                        help="past truncation in steps, or 'auto' (default)")
    common.add_argument("--paths", type=int, help="number of paths / seeds (default 1)")
    common.add_argument("--seed", type=int, help="first seed (default 0)")
    common.add_argument("--scale", choices=("raw", "c_H"), help="apply c_H to output")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "jsonl"), help="path file format")
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--study-n", dest="study_n",
                        help="comma-separated grid sizes for the scaling study")
    parser = argparse.ArgumentParser(prog="fbmwalk", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    args = _parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = build_config(args.command, flags, args.config)
        return COMMANDS[args.command](cfg)
    except (ConfigError, DomainError, GridError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
