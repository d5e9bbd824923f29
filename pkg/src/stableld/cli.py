"""Configuration-driven experiment runner.

Configs are INI files (``key = value`` under sections).  Example::

    [experiment]
    kind = dyn-ld
    seed = 7
    samples = 10000000

    [system]
    name = gauss
    alpha = 1.5
    centered = true

    [run]
    n = 100
    N_over_an = 10

Subcommands: ``run CONFIG``, ``validate CONFIG``, ``list-systems``.
Artifacts go to ``--output``, else ``[experiment] output``, else
``$STABLELD_OUTPUT``, else ``./stableld-out``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__

log = logging.getLogger("stableld")

KINDS = ("iid-ld", "dyn-ld", "spectral", "inversion", "sweep", "diagnostics")
OUTPUT_ENV = "STABLELD_OUTPUT"
EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2, 3

# (field, section, type)
_LAYOUT = {
    "kind": ("experiment", str), "seed": ("experiment", int), "samples": ("experiment", int),
    "shards": ("experiment", int), "workers": ("experiment", int), "output": ("experiment", str),
    "alpha": ("model", float), "p": ("model", float), "q": ("model", float), "ell": ("model", str),
    "ell_c": ("model", float), "ell_gamma": ("model", float), "x_min": ("model", float),
    "centered": ("model", bool),
    "system": ("system", str), "observable": ("system", str), "negate": ("system", bool),
    "n": ("run", int), "N_over_an": ("run", float), "n_grid": ("run", "ints"), "N_rule": ("run", str),
    "multipliers": ("run", "floats"), "power": ("run", float), "m": ("run", int),
    "t_min": ("run", float), "t_max": ("run", float), "t_points": ("run", int),
    "n_diag": ("run", "ints"), "epsilon": ("run", float), "alpha_prime": ("run", float),
    "h_fd": ("run", float), "C_D": ("run", float), "slack": ("run", float), "delta": ("run", float),
}
# keys that may also appear under [system] (alpha, centered)
_SYSTEM_ALIASES = ("alpha", "centered")


@dataclass(frozen=True)
class RunConfig:
    """Typed experiment configuration; ``None`` means unset."""

    kind: str = ""
    seed: int | None = None
    samples: int = 10**6
    shards: int = 1
    workers: int | None = None
    output: str | None = None
    alpha: float = 1.5
    p: float = 1.0
    q: float = 0.0
    ell: str = "constant"
    ell_c: float = 1.0
    ell_gamma: float = 0.0
    x_min: float = 1.0
    centered: bool = True
    system: str | None = None
    observable: str = "power"
    negate: bool = False
    n: int = 100
    N_over_an: float = 10.0
    n_grid: tuple[int, ...] = ()
    N_rule: str = "multiples-of-a_n"
    multipliers: tuple[float, ...] = (3.0, 10.0, 30.0)
    power: float = 2.0
    m: int = 4096
    t_min: float = 1e-3
    t_max: float = 1e-1
    t_points: int = 9
    n_diag: tuple[int, ...] = (10, 100, 1000)
    epsilon: float | None = None
    alpha_prime: float | None = None
    h_fd: float = 1e-3
    C_D: float = 1.0
    slack: float = 0.2
    delta: float = 0.1

    # parsing -------------------------------------------------------------------

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp.read_string(text)
        values: dict = {}
        for sec in cp.sections():
            for key, raw in cp.items(sec):
                if sec == "system" and key == "name":
                    continue
                if key not in _LAYOUT or key == "system":
                    raise ValueError(f"{sec}.{key}: unknown key")
                want = _LAYOUT[key][0]
                if sec != want and not (sec == "system" and key in _SYSTEM_ALIASES):
                    raise ValueError(f"{sec}.{key}: belongs in section [{want}]")
                values[key] = _parse(key, raw, sec)
            if sec == "system" and cp.has_option(sec, "name"):
                values["system"] = cp.get(sec, "name")
        return cls(**values)

    @classmethod
    def from_file(cls, path: Path | str) -> "RunConfig":
        return cls.from_ini(Path(path).read_text())

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        kw = {}
        for f in fields(cls):
            if f.name in d:
                v = d[f.name]
                kw[f.name] = tuple(v) if isinstance(v, list) else v
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def to_ini(self) -> str:
        secs: dict[str, list[str]] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            sec = _LAYOUT[f.name][0]
            key = "name" if f.name == "system" else f.name
            if isinstance(v, tuple):
                s = ",".join(repr(x) for x in v)
            elif isinstance(v, bool):
                s = "true" if v else "false"
            elif isinstance(v, float):
                s = repr(v)
            else:
                s = str(v)
            secs.setdefault(sec, []).append(f"{key} = {s}")
        return "\n".join(f"[{sec}]\n" + "\n".join(lines) + "\n" for sec, lines in secs.items())


def _parse(key: str, raw: str, sec: str):
    typ = _LAYOUT[key][1]
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError
            return low in ("true", "yes", "1")
        if typ is int:
            try:
                return int(raw)
            except ValueError:
                f = float(raw)  # allow 1e7
                if not f.is_integer():
                    raise
                return int(f)
        if typ is float:
            return float(raw)
        if typ == "ints":
            return tuple(int(float(x)) for x in raw.split(",") if x.strip())
        if typ == "floats":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        return raw
    except ValueError:
        raise ValueError(f"{sec}.{key}: cannot parse {raw!r}") from None


# validation ---------------------------------------------------------------------


def _uses_model(c: RunConfig) -> bool:
    return c.kind in ("iid-ld", "inversion")


def validate(config: RunConfig) -> list[str]:
    """Violations as ``"section.field: message"`` strings; no side effects."""
    v: list[str] = []
    c = config
    if c.kind not in KINDS:
        v.append(f"experiment.kind: must be one of {', '.join(KINDS)}")
    if c.seed is None:
        v.append("experiment.seed: missing (a seed is required for reproducibility)")
    elif c.seed < 0:
        v.append("experiment.seed: must be >= 0")
    if c.samples < 1:
        v.append("experiment.samples: must be >= 1")
    if c.shards < 1:
        v.append("experiment.shards: must be >= 1")
    if c.workers is not None and c.workers < 1:
        v.append("experiment.workers: must be >= 1")
    sec = "model" if _uses_model(c) else "system"
    if c.alpha == 1.0:
        v.append(f"{sec}.alpha: alpha=1 unsupported (case postponed; not covered by the theory)")
    elif not 0 < c.alpha <= 2:
        v.append(f"{sec}.alpha: must lie in (0,1) or (1,2]")
    if _uses_model(c):
        if c.p < 0 or c.q < 0 or c.p + c.q <= 0 or c.p + c.q > 1 + 1e-12:
            v.append("model.p: need p, q >= 0 with 0 < p + q <= 1")
        if c.ell not in ("constant", "logpower"):
            v.append("model.ell: must be 'constant' or 'logpower'")
        if c.ell_c <= 0:
            v.append("model.ell_c: must be positive")
        if c.x_min <= 0:
            v.append("model.x_min: must be positive")
        if c.alpha == 2.0 and c.ell != "constant":
            v.append("model.ell: alpha=2 supports constant ell only")
    else:
        from .dynamics import SYSTEMS

        if c.kind in KINDS and c.system not in SYSTEMS:
            v.append(f"system.name: must be one of {', '.join(sorted(SYSTEMS))}")
        if c.observable != "power":
            v.append("system.observable: only 'power' is configurable")
        if c.centered and c.alpha < 1:
            v.append("system.centered: centering needs a finite mean (alpha > 1)")
    if c.kind in ("iid-ld", "dyn-ld", "inversion"):
        if c.n < 1:
            v.append("run.n: must be >= 1")
        if c.N_over_an < 3:
            v.append("run.N_over_an: requires N/a_n >= 3")
    if c.kind == "sweep":
        if any(n < 1 for n in c.n_grid):
            v.append("run.n_grid: entries must be >= 1")
        if c.N_rule not in ("multiples-of-a_n", "power-of-n"):
            v.append("run.N_rule: must be 'multiples-of-a_n' or 'power-of-n'")
        if c.N_rule == "multiples-of-a_n" and any(k < 3 for k in c.multipliers):
            v.append("run.multipliers: requires N/a_n >= 3")
        if c.power <= 0:
            v.append("run.power: must be positive")
    if c.kind in ("spectral", "diagnostics"):
        if c.m < 2:
            v.append("run.m: must be >= 2")
        if not 0 < c.t_min < c.t_max:
            v.append("run.t_min: need 0 < t_min < t_max")
        elif c.kind == "spectral" and c.t_max / c.t_min < 100:
            v.append("run.t_max: t grid must span >= 2 decades")
        if c.t_points < 3:
            v.append("run.t_points: must be >= 3")
        if c.epsilon is not None and c.epsilon <= 0:
            v.append("run.epsilon: must be positive")
        if c.kind == "diagnostics":
            if any(n < 1 for n in c.n_diag):
                v.append("run.n_diag: entries must be >= 1")
            if c.alpha_prime is not None and not 1 < c.alpha_prime < c.alpha:
                v.append("run.alpha_prime: must lie in (1, alpha)")
            if c.h_fd <= 0:
                v.append("run.h_fd: must be positive")
    if c.C_D < 0 or c.slack < 0:
        v.append("run.C_D: budget constants must be >= 0")
    if not 0 < c.delta < c.alpha:
        v.append("run.delta: must lie in (0, alpha)")
    return v


# execution ----------------------------------------------------------------------


class _Out:
    """Artifact writer confined to one directory."""

    def __init__(self, root: Path):
        self.root = root.resolve()
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        p = (self.root / name).resolve()
        if self.root not in p.parents:
            raise ValueError(f"artifact {name!r} escapes the output directory")
        self.files.append(p.name)
        return p


def output_dir(config: RunConfig, override: str | None = None) -> Path:
    return Path(override or config.output or os.environ.get(OUTPUT_ENV) or "stableld-out")


def _model(c: RunConfig):
    from .tails import SlowlyVarying, TailModel

    ell = SlowlyVarying(c.ell, c=c.ell_c, gamma=c.ell_gamma)
    return TailModel(c.alpha, c.p, c.q, ell, c.x_min, c.centered)


def _observable(c: RunConfig):
    from .dynamics import PowerObservable, builtin_system

    sysm = builtin_system(c.system)
    return sysm, PowerObservable(sysm, c.alpha, c.centered, c.negate)


def _t_grid(c: RunConfig) -> np.ndarray:
    return np.geomspace(c.t_min, c.t_max, c.t_points)


def _run_iid(c: RunConfig, out: _Out) -> int:
    from .iid_baseline import verify_thm_LD
    from .report import report_stem, write_csv, write_json
    from .tails import NormingPlan

    model = _model(c)
    N = c.N_over_an * NormingPlan(model).a(c.n)
    rep = verify_thm_LD(model, c.n, N, c.samples, c.seed, c.shards, c.workers, c.C_D, c.slack, c.delta)
    stem = report_stem("iid", c.alpha, c.n, c.N_over_an, c.seed)
    write_csv(out.path(stem + ".csv"), [rep])
    write_json(out.path(stem + ".json"), rep)
    log.info("iid-ld ratio %.4f", rep.ratio)
    return EXIT_OK


def _run_dyn(c: RunConfig, out: _Out) -> int:
    from .ld_experiments import run_dynamical_ld
    from .report import report_stem, write_csv, write_json

    sysm, obs = _observable(c)
    rep = run_dynamical_ld(sysm, obs, c.n, c.N_over_an, c.samples, c.seed, c.shards, c.workers,
                           c.C_D, c.slack, c.delta)
    stem = report_stem(sysm.name, c.alpha, c.n, c.N_over_an, c.seed)
    write_csv(out.path(stem + ".csv"), [rep])
    write_json(out.path(stem + ".json"), rep)
    log.info("dyn-ld ratio %.4f", rep.ratio)
    return EXIT_OK


def _run_sweep(c: RunConfig, out: _Out) -> int:
    from .ld_experiments import corollary_range_sweep
    from .report import write_csv, write_json

    sysm, obs = _observable(c)
    table = corollary_range_sweep(sysm, obs, c.n_grid, c.N_rule, c.multipliers, c.power, c.samples,
                                  c.seed, c.shards, c.workers, C_D=c.C_D, slack=c.slack, delta=c.delta)
    stem = f"sweep_{sysm.name}_{c.alpha:g}_{c.seed}"
    write_csv(out.path(stem + ".csv"), table.reports)
    write_json(out.path(stem + ".json"), {"reports": [r.to_dict() for r in table.reports],
                                         "skipped": table.skipped, "trends": table.trends})
    log.info("sweep: %d cells, %d skipped", len(table.reports), len(table.skipped))
    return EXIT_OK


def _run_spectral(c: RunConfig, out: _Out) -> int:
    from .transfer_spectral import build_ulam, scaling_exponent_fit

    sysm, obs = _observable(c)
    U = build_ulam(sysm, c.m)
    fit = scaling_exponent_fit(U, obs, _t_grid(c))
    stem = f"spectral_{sysm.name}_{c.alpha:g}_{c.m}"
    with out.path(stem + ".csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "lambda_re", "lambda_im", "residual", "alpha_hat", "c_hat", "m"])
        for t, lam, r in zip(fit.t, fit.lam, fit.residuals):
            w.writerow([repr(float(t)), repr(lam.real), repr(lam.imag), repr(float(r)),
                        repr(fit.alpha_hat), repr(fit.c_hat), c.m])
    _write_json(out.path(stem + ".json"), fit.to_dict())
    log.info("spectral alpha_hat %.4f", fit.alpha_hat)
    return EXIT_OK


def _run_inversion(c: RunConfig, out: _Out) -> int:
    from .charfn import log_one_minus
    from .iid_baseline import inversion_tail, one_minus_Psi
    from .report import g_of
    from .tails import NormingPlan, tail_prob

    model = _model(c)
    N = c.N_over_an * NormingPlan(model).a(c.n)
    g = g_of(c.n, N)
    Psi_n = lambda t: np.exp(c.n * log_one_minus(one_minus_Psi(model, t)))
    res = inversion_tail(Psi_n, N, g)
    payload = {"N": N, "g": g, "value": res.value, "sensitivity": res.sensitivity, "T": res.T,
               "warning": res.warning, "n_tail_N": c.n * tail_prob(model, N),
               "n_tail_window": c.n * (tail_prob(model, N) - tail_prob(model, N + g))}
    _write_json(out.path(f"inversion_{c.alpha:g}_{c.n}_{c.N_over_an:g}_{c.seed}.json"), payload)
    return EXIT_OK


def _run_diagnostics(c: RunConfig, out: _Out) -> int:
    from .transfer_spectral import U_diagnostic, V_diagnostic, build_ulam, p_prime_zero_check, q_decay

    sysm, obs = _observable(c)
    U = build_ulam(sysm, c.m)
    tg = _t_grid(c)
    stem = f"diagnostics_{sysm.name}_{c.alpha:g}_{c.m}"
    summary, failed = {}, []
    steps = {
        "V": lambda: V_diagnostic(U, obs, tg),
        "U": lambda: U_diagnostic(U, obs, tg, c.n_diag, c.alpha_prime),
        "q_decay": lambda: q_decay(U, obs, float(tg[len(tg) // 2]), 50),
        "p_prime": lambda: p_prime_zero_check(U, obs, c.h_fd),
    }
    for name, fn in steps.items():
        try:
            res = fn()
        except Exception as exc:  # keep completed parts
            failed.append(name)
            summary[name] = {"error": f"{type(exc).__name__}: {exc}"}
            log.error("diagnostic %s failed: %s", name, exc)
            continue
        if name in ("V", "U"):
            res.write_csv(out.path(f"{stem}_{name}.csv"))
            summary[name] = {"max_ratio": res.max_ratio}
        elif name == "q_decay":
            summary[name] = {"rate": res.rate, "one_minus_gap": res.one_minus_gap,
                             "norms": res.norms.tolist()}
        else:
            summary[name] = asdict(res)
    summary["proxy"] = True
    _write_json(out.path(stem + ".json"), summary)
    return EXIT_PARTIAL if failed else EXIT_OK


_RUNNERS = {"iid-ld": _run_iid, "dyn-ld": _run_dyn, "sweep": _run_sweep, "spectral": _run_spectral,
            "inversion": _run_inversion, "diagnostics": _run_diagnostics}


def _write_json(path: Path, payload) -> Path:
    from .report import write_json

    return write_json(path, payload)


def run(config: RunConfig, output: str | Path | None = None) -> int:
    """Validate, execute and write artifacts plus ``manifest.json``."""
    problems = validate(config)
    if problems:
        for p in problems:
            log.error("invalid config: %s", p)
        return EXIT_INVALID
    out = _Out(output_dir(config, str(output) if output else None))
    t0 = time.perf_counter()
    status = _RUNNERS[config.kind](config, out)
    manifest = {"config": config.to_dict(), "version": __version__, "wall_time": time.perf_counter() - t0,
                "artifacts": list(out.files), "status": status}
    (out.root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return status


def load_manifest(path: Path | str) -> RunConfig:
    """RunConfig echoed in a manifest."""
    return RunConfig.from_dict(json.loads(Path(path).read_text())["config"])


def list_systems() -> list[str]:
    from .dynamics import SYSTEMS

    return sorted(SYSTEMS)


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="stableld", description="Stable large-deviation experiments")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)
    pr = sub.add_parser("run", help="run an experiment config")
    pr.add_argument("config")
    pr.add_argument("--output", help="output directory")
    pr.add_argument("--seed", type=int, help="override the config seed")
    pr.add_argument("--shards", type=int, help="override the shard count")
    pv = sub.add_parser("validate", help="check a config without running it")
    pv.add_argument("config")
    sub.add_parser("list-systems", help="list built-in dynamical systems")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    if args.command == "list-systems":
        print("\n".join(list_systems()))
        return EXIT_OK
    try:
        cfg = RunConfig.from_file(args.config)
    except (ValueError, configparser.Error, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.command == "validate":
        problems = validate(cfg)
        for p in problems:
            print(p)
        return EXIT_INVALID if problems else EXIT_OK
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.shards is not None:
        cfg = replace(cfg, shards=args.shards)
    try:
        return run(cfg, args.output)
    except Exception as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
