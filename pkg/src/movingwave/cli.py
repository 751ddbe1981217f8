"""Command-line front end: ``movingwave {solve,verify,observe,control,literature}``.

Every run is described by a :class:`RunConfig`. Values come from the
defaults, then an optional JSON file (``--config``), then command-line flags
named exactly like the keys. Exit codes: 0 pass, 1 check failure, 2 config
error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import characteristics as ch
from . import diagnostics as dg
from . import hum
from . import spectral as sp
from .control import write_control_csv
from .domain import DomainError, literature_times, make_domain
from .initialdata import catalog, sampled_data
from .quadrature import QuadratureRule

OUTPUT_ENV = "MOVINGWAVE_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
DATA_KINDS = ("random", "single", "zero", "bump", "sine", "coefficients", "sampled")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    ell: float = 0.5
    t0: float = 2.0
    n_modes: int = 16
    n_star: int = 8
    panels: int = 16
    nodes_per_panel: int = 8
    samples_per_period: int = 4096
    endpoint: str = "fixed"
    window_multiplier: float = 1.0
    data: str = "random"
    data_params: dict = field(default_factory=dict)
    coefficients_csv: str = ""
    phi0_csv: str = ""
    phi1_csv: str = ""
    tol: float = 1e-8
    cross_tol: float = 1e-6
    control_tol: float = 1e-6
    cost: str = "log"
    ensemble: int = 50
    delta: float = 0.1
    nx: int = 33
    nt: int = 17
    t_span: float = 10.0
    oracle: bool = True
    seed: int = 0
    workers: int = 1
    output_dir: str = ""

    def validate(self):
        make_domain(self.ell, self.t0)
        for name in ("n_modes", "n_star", "panels", "nodes_per_panel", "samples_per_period",
                     "ensemble", "nx", "nt", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        QuadratureRule(self.panels, self.nodes_per_panel)
        if self.endpoint not in ("fixed", "moving"):
            raise ConfigError(f"endpoint must be 'fixed' or 'moving', got {self.endpoint!r}")
        if self.data not in DATA_KINDS:
            raise ConfigError(f"data must be one of {DATA_KINDS}, got {self.data!r}")
        if self.data == "coefficients" and not self.coefficients_csv:
            raise ConfigError("data=coefficients needs coefficients_csv")
        if self.data == "sampled" and not self.phi0_csv:
            raise ConfigError("data=sampled needs phi0_csv")
        if self.cost not in hum.COSTS:
            raise ConfigError(f"cost must be one of {hum.COSTS}")
        for name in ("window_multiplier", "tol", "cross_tol", "control_tol", "delta", "t_span"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number")
        if self.t_span < 1:
            raise ConfigError("t_span must be >= 1")
        return self

    @property
    def domain(self):
        return make_domain(self.ell, self.t0)

    @property
    def rule(self) -> QuadratureRule:
        return QuadratureRule(self.panels, self.nodes_per_panel)

    def output_path(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV, "") or "movingwave-output")


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(name, value):
    default = getattr(RunConfig(), name)
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "1", "yes"):
            return True
        if isinstance(value, str) and value.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{name} must be a boolean")
    if isinstance(default, dict):
        if isinstance(value, str):
            try:
                value = json.loads(value)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{name} must be a JSON object: {exc}") from None
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be a JSON object")
        return value
    try:
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a {type(default).__name__}, got {value!r}") from None
    return str(value)


def load_config(path=None, overrides=None) -> RunConfig:
    values = {}
    if path:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        unknown = sorted(set(raw) - set(_FIELDS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values.update(raw)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in values.items()})
    try:
        return cfg.validate()
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def recorded_config(cfg: RunConfig) -> dict:
    """Config as written next to the outputs; execution-only keys are left out."""
    return {k: v for k, v in asdict(cfg).items() if k not in ("workers", "output_dir")}


# --- outputs -------------------------------------------------------------------

def _fmt(v) -> str:
    return f"{float(v):.17g}"


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(r if isinstance(r, str) else _fmt(r) for r in row) + "\n")


def write_json(path: Path, payload):
    with open(path, "w", newline="") as fh:
        json.dump(_clean(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# --- data ------------------------------------------------------------------------

def make_data(cfg: RunConfig, seed_offset=None):
    """(InitialData, SpectralSolution or None) for the configured data kind."""
    d = cfg.domain
    if cfg.data in ("random", "single", "coefficients"):
        if cfg.data == "random":
            rng = np.random.default_rng(cfg.seed if seed_offset is None else [cfg.seed, seed_offset])
            sol = sp.random_coefficients(d, cfg.n_star, rng, **cfg.data_params)
        elif cfg.data == "single":
            sol = sp.from_positive(d, [cfg.data_params.get("c1", 0.1)])
        else:
            sol = sp.read_coefficients(cfg.coefficients_csv, d)
        return sp.synthesize(sol), sol
    if cfg.data == "sampled":
        data = sampled_data(d, cfg.phi0_csv, cfg.phi1_csv or None)
    else:
        data = catalog(cfg.data, d, **cfg.data_params)
    return data, None


def _spectral(cfg, data, sol):
    return sol if sol is not None else sp.compute_coefficients(data, cfg.n_modes, cfg.rule)


# --- commands ----------------------------------------------------------------------

def cmd_solve(cfg: RunConfig, out: Path) -> int:
    d = cfg.domain
    data, sol = make_data(cfg)
    sol = _spectral(cfg, data, sol)
    sp.write_coefficients(out / "coefficients.csv", sol)
    ts = d.t0 * np.geomspace(1.0, cfg.t_span, cfg.nt)
    frac = np.linspace(0.0, 1.0, cfg.nx)
    T, F = np.meshgrid(ts, frac, indexing="ij")
    X = F * d.ell * T
    X[:, -1] = d.ell * ts
    x, t = X.ravel(), T.ravel()
    phi, px, pt = sol.evaluate(x, t)
    write_csv(out / "field.csv", ["x", "t", "phi", "phi_x", "phi_t"], zip(x, t, phi, px, pt))
    status = EXIT_OK
    summary = {"N": sol.N, "S": sol.S, "points": int(x.size)}
    if cfg.oracle:
        prof = ch.build_profile(data, cfg.samples_per_period)
        c_phi, c_px, c_pt = prof.evaluate(x, t)
        diff = np.max(np.abs(np.stack([phi - c_phi, px - c_px, pt - c_pt])), axis=0)
        write_csv(out / "field_characteristics.csv", ["x", "t", "phi", "phi_x", "phi_t", "diff"],
                  zip(x, t, c_phi, c_px, c_pt, diff))
        scale = max(float(np.max(np.abs(np.stack([phi, px, pt])))), np.finfo(float).tiny)
        rel = float(np.max(diff)) / scale
        summary.update({"max_abs_diff": float(np.max(diff)), "max_rel_diff": rel})
        if rel > cfg.cross_tol:
            status = EXIT_FAIL
    summary["passed"] = status == EXIT_OK
    write_json(out / "solve.json", summary)
    print(f"solve: N={sol.N} S={sol.S:.12g} points={x.size}"
          + (f" max_rel_diff={summary['max_rel_diff']:.3e}" if cfg.oracle else ""))
    return status


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    try:
        data, sol = make_data(cfg)
    except sp.CoefficientError as exc:
        print(f"verify: FAIL: {exc}", file=sys.stderr)
        write_json(out / "identity_report.json", {"passed": False, "error": str(exc)})
        return EXIT_FAIL
    sol = _spectral(cfg, data, sol)
    report = dg.run_identity_suite(sol, dg.default_times(cfg.domain), (1, 2, 3), cfg.tol, cfg.rule,
                                   cfg.workers)
    (out / "identity_report.json").write_text(report.to_json())
    text = report.to_text()
    (out / "identity_report.txt").write_text(text)
    print(text, end="")
    for r in report.failing():
        print(f"verify: FAIL {r.name} {r.at}: rel residual {r.rel_residual:.3e} > {r.tolerance:g}",
              file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def _ensemble_member(cfg, i):
    d = cfg.domain
    rng = np.random.default_rng([cfg.seed, i])
    sol = sp.random_coefficients(d, int(rng.integers(1, cfg.n_star + 1)), rng)
    T0 = cfg.window_multiplier * d.critical_time
    return [dg.observability_report(sol, ep, T0, strict=False) for ep in ("fixed", "moving")]


def cmd_observe(cfg: RunConfig, out: Path) -> int:
    d = cfg.domain
    idx = range(cfg.ensemble)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            members = list(pool.map(lambda i: _ensemble_member(cfg, i), idx))
    else:
        members = [_ensemble_member(cfg, i) for i in idx]
    rows, worst = [], {"fixed": 0.0, "moving": 0.0}
    status = EXIT_OK
    for i, reps in enumerate(members):
        for r in reps:
            ok = r.ratio <= r.constant * (1 + 1e-10)
            worst[r.endpoint] = max(worst[r.endpoint], r.ratio)
            if r.at_or_above_critical and not ok:
                status = EXIT_FAIL
            rows.append([str(i), r.endpoint, r.E0, r.trace_phi_x, r.ratio, r.constant, "yes" if ok else "no"])
    write_csv(out / "observability.csv", ["sample", "endpoint", "E0", "trace", "ratio", "constant", "ok"], rows)

    T0 = cfg.window_multiplier * d.critical_time
    flags = ["below sharp time"] if T0 < d.critical_time * (1 - 1e-12) else []
    sharp = {}
    for ep in ("fixed", "moving"):
        sc = ch.sharpness_scenario(d, cfg.delta, ep)
        prof = ch.build_profile(sc.data, cfg.samples_per_period)
        a, b = sc.quiet_window
        quiet = dg.trace_integral_window(prof, ep, a, b, weighted=False)
        sup2 = sc.data.sup_norm() ** 2
        E0 = dg.energy(prof, d.t0)
        rep = dg.observability_report(prof, ep, sc.T_delta - d.t0, E0, strict=False)
        ok = quiet <= 1e-12 * sup2
        if not ok:
            status = EXIT_FAIL
        ts = d.t0 * np.geomspace(1.0, d.lam, 513)
        ch.write_series_csv(out / f"sharpness_trace_{ep}.csv", ts, prof.trace(ep, ts)[0])
        sharp[ep] = {**sc.as_dict(), "quiet_integral": quiet, "sup_norm_sq": sup2, "E0": E0,
                     "quiet_ok": ok, "report": rep.as_dict()}
    payload = {"window_length": T0, "critical_time": d.critical_time, "flags": flags,
               "constants": {ep: dg.observability_constant(d, ep) for ep in ("fixed", "moving")},
               "worst_ratio": worst, "sharpness": sharp, "passed": status == EXIT_OK}
    write_json(out / "observe.json", payload)
    print(f"observe: T0={T0:.6g} T*={d.critical_time:.6g}" + (" [below sharp time]" if flags else ""))
    for ep in ("fixed", "moving"):
        print(f"  {ep:<6} worst ratio {worst[ep]:.6g}  constant {dg.observability_constant(d, ep):.6g}"
              f"  quiet-window integral {sharp[ep]['quiet_integral']:.3e}")
    return status


def cmd_control(cfg: RunConfig, out: Path) -> int:
    d = cfg.domain
    data, _ = make_data(cfg)
    T = d.t0 + cfg.window_multiplier * d.critical_time
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", hum.ControllabilityWarning)
        design = hum.design_null_control(d, cfg.endpoint, T, cfg.n_modes, data, cfg.cost,
                                         samples_per_period=cfg.samples_per_period)
    for w in caught:
        print(f"control: warning: {w.message}", file=sys.stderr)
    check = hum.verify_control(design.control, data)
    write_control_csv(out / "control.csv", design.control)
    ok = check.energy_ratio <= cfg.control_tol
    payload = {**check.as_dict(), **design.as_dict(), "endpoint": cfg.endpoint, "T": T,
               "warnings": sorted({str(w.message) for w in caught}), "passed": ok}
    write_json(out / "control.json", payload)
    print(f"control: {cfg.endpoint} T={T:.6g} ratio={check.energy_ratio:.3e} cost={check.cost:.6g}"
          f" K={check.K:.6g} condition={design.gramian.condition:.3e}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_literature(cfg: RunConfig, out: Path) -> int:
    grid = np.round(np.linspace(0.01, 0.99, 99), 12)
    rows, ordered = [], True
    for ell in grid:
        lt = literature_times(float(ell))
        ordered &= lt.T0_norm <= lt.T2 * (1 + 1e-12) and lt.T2 <= lt.T3 and lt.T3 <= lt.T1
        rows.append([float(ell), *lt])
    write_csv(out / "literature.csv", ["ell", "T0_norm", "T1", "T2", "T3"], rows)
    lt = literature_times(cfg.ell)
    print(f"{'ell':>6} {'T0':>12} {'T1':>12} {'T2':>12} {'T3':>12}")
    print(f"{cfg.ell:6.3g} {lt.T0_norm:12.6g} {lt.T1:12.6g} {lt.T2:12.6g} {lt.T3:12.6g}")
    print(f"ordering T0 <= T2 <= T3 <= T1 on the 99-point grid: {'holds' if ordered else 'VIOLATED'}")
    write_json(out / "literature.json", {"ell": cfg.ell, **lt._asdict(), "ordered_on_grid": bool(ordered)})
    return EXIT_OK if ordered else EXIT_FAIL


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "observe": cmd_observe,
            "control": cmd_control, "literature": cmd_literature}
HELP = {
    "solve": "write the spectral field (and the characteristic oracle) on a grid",
    "verify": "run the identity suite; exit 0 iff every identity and bound holds",
    "observe": "observability ratios for a random ensemble plus the sharpness scenarios",
    "control": "synthesise and verify a null control",
    "literature": "compare the sharp control time with earlier ones",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="movingwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in HELP.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON file with RunConfig keys")
        for f in fields(RunConfig):
            default = getattr(RunConfig(), f.name)
            kind = type(default).__name__
            p.add_argument(f"--{f.name}", default=None, metavar=kind.upper(),
                           help=f"(default: {json.dumps(default)})")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k in _FIELDS}
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"movingwave: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"movingwave: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    out = cfg.output_path()
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / f"{args.command}_config.json", recorded_config(cfg))
        return COMMANDS[args.command](cfg, out)
    except OSError as exc:
        print(f"movingwave: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
