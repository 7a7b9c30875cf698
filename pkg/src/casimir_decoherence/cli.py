"""Command-line front end.

    casimir-decoherence <coeffs|evolve|pointer|tdscan> [options]

Options come from an optional flat ``key = value`` file (``--config``) and
from flags; flags win.  Every command writes CSV files (UTF-8, ``\\n`` line
endings, a ``# key=value`` metadata block, then a header row) into ``--out``.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import dataclass, field, replace
from importlib import metadata

import numpy as np

from .coefficients import QuadratureConfig, asymptotic_coefficients, coefficients_at
from .errors import CasimirError, ConvergenceError, DomainError, IntegrationError, PreconditionError, TruncationError
from .fockdyn import Trajectory, cat_density, entropy_rate_check, evolve, min_basis_size
from .gaussian import entropy_production_min_uncertainty, pointer_argmin
from .integrator import StepControl
from .phase_space import (
    CatSpec,
    decoherence_time_fit,
    decoherence_time_formula,
    default_axes,
    fringe_series,
    mixture_distance_check,
    period_samples,
    wigner_from_rho,
)
from .spectral import PhysicalParams

log = logging.getLogger("casimir_decoherence")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_REGIME = 4

COMMANDS = ("coeffs", "evolve", "pointer", "tdscan")
COEFF_HEADER = ["t", "omega0_t", "delta_m2", "gamma", "d1", "d2", "gamma_asym", "d1_asym"]

# evolution runs default to a heavy mirror so that t_d spans many periods
_PARAM_DEFAULTS = {
    "coeffs": dict(M=1.0, omega0=1.0, Omega=1e4, hbar=1.0),
    "pointer": dict(M=1.0, omega0=1.0, Omega=1e4, hbar=1.0),
    "evolve": dict(M=2e3, omega0=1.0, Omega=1e4, hbar=1.0),
    "tdscan": dict(M=2e3, omega0=1.0, Omega=1e4, hbar=1.0),
}

#: fraction of the predicted t_d covered by default fringe runs
FRINGE_SPAN = 0.8


class ConfigError(CasimirError, ValueError):
    """Bad command-line or config-file input."""


@dataclass(frozen=True)
class TimeGrid:
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError("tsteps must be >= 1")
        if self.scale not in ("linear", "log"):
            raise ConfigError("tscale must be 'linear' or 'log'")
        if not (0 <= self.start <= self.stop) or not math.isfinite(self.stop):
            raise ConfigError("need 0 <= tmin <= tmax < inf")
        if self.scale == "log" and self.start <= 0:
            raise ConfigError("log grids need tmin > 0")
        if self.count > 1 and self.start == self.stop:
            raise ConfigError("tmin == tmax with more than one point")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)


@dataclass
class RunConfig:
    command: str
    params: PhysicalParams
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)
    grid: TimeGrid | None = None
    basis: int | None = None
    alpha: complex = 2j
    alphas: tuple[float, ...] = (1.0, 2.0, 3.0)
    out: str = "."
    emit_plot: bool = False
    strict: bool = False
    wigner: bool = False
    workers: int = 1

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.basis is not None and self.basis < 2:
            raise ConfigError("basis must be >= 2")
        os.makedirs(self.out, exist_ok=True)
        if not os.access(self.out, os.W_OK):
            raise ConfigError(f"output directory {self.out!r} is not writable")
        return self

    def metadata(self) -> dict:
        p, q = self.params, self.quad
        meta = {
            "command": self.command,
            "version": _version(),
            "M": p.M,
            "omega0": p.omega0,
            "Omega": p.Omega,
            "hbar": p.hbar,
            "recoil": p.recoil,
            "rel_tol": q.rel_tol,
            "abs_tol": q.abs_tol,
            "cutoff_factor": q.cutoff_factor,
        }
        if self.grid is not None:
            meta.update(tmin=self.grid.start, tmax=self.grid.stop, tsteps=self.grid.count, tscale=self.grid.scale)
        return meta


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


# -- config parsing ---------------------------------------------------------


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` pairs; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def parse_alpha(text: str) -> complex:
    parts = [s.strip() for s in str(text).split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"alpha must be 'RE,IM', got {text!r}")


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


_FLOAT_KEYS = ("M", "omega0", "Omega", "hbar", "tmin", "tmax", "rel_tol", "abs_tol", "cutoff_factor")
_INT_KEYS = ("tsteps", "basis", "workers", "per_period")
_BOOL_KEYS = ("strict", "emit_plot", "wigner")
_STR_KEYS = ("tscale", "alpha", "alphas", "out")
KNOWN_KEYS = set(_FLOAT_KEYS + _INT_KEYS + _BOOL_KEYS + _STR_KEYS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="casimir-decoherence",
        description="Damping, diffusion and decoherence of a mirror coupled to the vacuum field.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", metavar="FILE", help="flat key = value file; flags override it")
    for key in ("M", "omega0", "Omega", "hbar"):
        parser.add_argument(f"--{key}", type=float, default=None)
    parser.add_argument("--tmin", type=float, default=None)
    parser.add_argument("--tmax", type=float, default=None)
    parser.add_argument("--tsteps", type=int, default=None)
    parser.add_argument("--tscale", choices=("linear", "log"), default=None)
    parser.add_argument("--alpha", default=None, help="cat amplitude as RE,IM (default 0,2)")
    parser.add_argument("--alphas", default=None, help="tdscan: comma-separated |alpha| values (momentum cats)")
    parser.add_argument("--basis", type=int, default=None, help="number-basis size N")
    parser.add_argument("--out", default=None, help="output directory (default .)")
    parser.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)
    parser.add_argument("--abs-tol", dest="abs_tol", type=float, default=None)
    parser.add_argument("--cutoff-factor", dest="cutoff_factor", type=float, default=None)
    parser.add_argument("--workers", type=int, default=None, help="threads for the coefficient grid")
    parser.add_argument("--per-period", dest="per_period", type=int, default=None, help="evolve: entropy samples per period")
    parser.add_argument("--strict", action="store_const", const=True, default=None, help="regime warnings become errors")
    parser.add_argument("--emit-plot", dest="emit_plot", action="store_const", const=True, default=None)
    parser.add_argument("--wigner", action="store_const", const=True, default=None, help="evolve: also write Wigner grids")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _merge(args: argparse.Namespace) -> dict:
    values: dict = {}
    if args.config:
        file_values = read_config_file(args.config)
        unknown = set(file_values) - KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(file_values)
    for key in KNOWN_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    try:
        for key in _FLOAT_KEYS:
            if key in values:
                values[key] = float(values[key])
        for key in _INT_KEYS:
            if key in values:
                values[key] = int(values[key])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for key in _BOOL_KEYS:
        if key in values:
            values[key] = _as_bool(values[key])
    return values


def config_from_args(argv=None) -> tuple[RunConfig, dict]:
    args = build_parser().parse_args(argv)
    values = _merge(args)
    cmd = args.command
    try:
        pdef = _PARAM_DEFAULTS[cmd]
        params = PhysicalParams(**{k: values.get(k, pdef[k]) for k in ("M", "omega0", "Omega", "hbar")})
        qdef = QuadratureConfig()
        quad = QuadratureConfig(
            rel_tol=values.get("rel_tol", qdef.rel_tol),
            abs_tol=values.get("abs_tol", qdef.abs_tol),
            cutoff_factor=values.get("cutoff_factor", qdef.cutoff_factor),
        )
    except (DomainError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    grid = None
    if cmd == "coeffs":
        scale = values.get("tscale", "linear")
        tmax = values.get("tmax", 50.0 / params.omega0)
        tmin = values.get("tmin", tmax * 1e-4 if scale == "log" else 0.0)
        grid = TimeGrid(tmin, tmax, values.get("tsteps", 501), scale)
    elif cmd == "pointer" and "tmax" in values:
        grid = TimeGrid(0.0, values["tmax"], 2)
    elif cmd in ("evolve", "tdscan") and "tmax" in values:
        grid = TimeGrid(0.0, values["tmax"], max(values.get("tsteps", 2), 2))

    alphas = (1.0, 2.0, 3.0)
    if "alphas" in values:
        try:
            alphas = tuple(float(s) for s in str(values["alphas"]).split(",") if s.strip())
        except ValueError as exc:
            raise ConfigError(f"alphas: {exc}") from exc
        if not alphas or any(a <= 0 for a in alphas):
            raise ConfigError("alphas must be positive")
    cfg = RunConfig(
        command=cmd,
        params=params,
        quad=quad,
        grid=grid,
        basis=values.get("basis"),
        alpha=parse_alpha(values["alpha"]) if "alpha" in values else 2j,
        alphas=alphas,
        out=values.get("out", "."),
        emit_plot=values.get("emit_plot", False),
        strict=values.get("strict", False),
        wigner=values.get("wigner", False),
        workers=values.get("workers", 1),
    )
    extras = {"per_period": values.get("per_period", 64), "verbose": args.verbose}
    return cfg.validate(), extras


# -- CSV output -------------------------------------------------------------


def fmt(x) -> str:
    """Shortest round-trip decimal for floats, plain text otherwise."""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path: str, header, rows, meta: dict | None = None, footer: dict | None = None) -> str:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={fmt(v)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
        for k, v in (footer or {}).items():
            fh.write(f"# {k}={fmt(v)}\n")
    return path


# -- commands ---------------------------------------------------------------


def cmd_coeffs(cfg: RunConfig) -> int:
    params, quad = cfg.params, cfg.quad
    asym = asymptotic_coefficients(params)
    times = cfg.grid.values()
    from concurrent.futures import ThreadPoolExecutor

    def row(t):
        try:
            c = coefficients_at(float(t), params, quad)
            return [t, params.omega0 * t, c.delta_m2, c.gamma, c.d1, c.d2, asym.gamma, asym.d1], None
        except ConvergenceError as exc:
            nan = math.nan
            return [t, params.omega0 * t, nan, nan, nan, nan, asym.gamma, asym.d1], str(exc)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(row, times))
    else:
        results = [row(t) for t in times]
    failed = any(err for _, err in results)
    header = COEFF_HEADER + (["error"] if failed else [])
    rows = [vals + ([err or ""] if failed else []) for vals, err in results]
    path = write_csv(os.path.join(cfg.out, "coeffs.csv"), header, rows, cfg.metadata())
    print(f"wrote {path} ({len(rows)} rows)")
    if cfg.emit_plot:
        _emit_plot(cfg, "coeffs")
    if failed:
        print(f"error: {sum(1 for _, e in results if e)} grid points failed to converge", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def _fringe_run(cfg: RunConfig, alpha: complex, t_end: float | None, dense_until: float = 0.0, per_period: int = 64):
    """Evolve the cat; return (trajectory, period-sample mask, spec, t_d formula)."""
    params = cfg.params
    c = asymptotic_coefficients(params).as_constant()
    spec = CatSpec(alpha, params)
    td = decoherence_time_formula(spec, c.d1, c.gamma) if alpha != 0 else math.inf
    period = 2 * math.pi / params.omega0
    if t_end is None:
        t_end = FRINGE_SPAN * td if alpha != 0 else 10 * period
    coarse = period_samples(t_end, params)
    fine = np.linspace(0.0, dense_until, int(round(dense_until / period * per_period)) + 1) if dense_until > 0 else []
    times = np.unique(np.concatenate([coarse, fine]))
    N = cfg.basis or min_basis_size(alpha)
    rho0 = cat_density(alpha, N, params)
    tr = evolve(rho0, params, c, float(times[-1]), StepControl(rtol=1e-9, atol=1e-12), samples=times)
    is_period = np.isin(times, coarse)
    return tr, is_period, spec, td


def _sub(tr: Trajectory, mask) -> Trajectory:
    idx = np.flatnonzero(mask)
    return replace(tr, times=tr.times[idx], states=[tr.states[i] for i in idx])


def cmd_evolve(cfg: RunConfig, per_period: int = 64) -> int:
    params = cfg.params
    period = 2 * math.pi / params.omega0
    t_end = cfg.grid.stop if cfg.grid is not None else None
    tr, is_period, spec, td = _fringe_run(cfg, cfg.alpha, t_end, dense_until=period, per_period=per_period)
    meta = cfg.metadata() | {"alpha_re": cfg.alpha.real, "alpha_im": cfg.alpha.imag, "basis": tr.states[0].dim}

    dense = _sub(tr, tr.times <= period * (1 + 1e-12))
    records = entropy_rate_check(dense)
    write_csv(
        os.path.join(cfg.out, "entropy.csv"),
        ["t", "s", "ds_dt_direct", "ds_dt_formula"],
        [[r.t, r.s, r.ds_dt_direct, r.ds_dt_formula] for r in records],
        meta,
    )

    coarse = _sub(tr, is_period)
    if cfg.alpha == 0:
        amp = np.ones(len(coarse.times))
        dist = np.zeros(len(coarse.times))
    else:
        amp = fringe_series(coarse, spec)
        dist = np.array([d for _, d in mixture_distance_check(coarse, spec)])
    write_csv(
        os.path.join(cfg.out, "fringe.csv"),
        ["t", "amplitude", "mixture_distance"],
        zip(coarse.times, amp, dist),
        meta,
    )

    if cfg.wigner:
        qa, pa = default_axes(cfg.alpha, params, n=101)
        for t, rho in ((coarse.times[0], coarse.states[0]), (coarse.times[-1], coarse.states[-1])):
            W = wigner_from_rho(rho, qa, pa, check_mass=False)
            rows = ((q, p, W.values[j, i]) for j, p in enumerate(pa) for i, q in enumerate(qa))
            write_csv(os.path.join(cfg.out, f"wigner_t{t:.6g}.csv"), ["q", "p", "W"], rows, meta | {"t": float(t)})

    if tr.positivity_violations:
        worst = min(v for _, v in tr.positivity_violations)
        print(f"note: {len(tr.positivity_violations)} samples with negative eigenvalues (min {worst:.3g})")
    if cfg.alpha == 0:
        print("summary: alpha = 0, no cat; fringe amplitude fixed at 1")
    else:
        fit, _ = decoherence_time_fit(np.c_[coarse.times, amp])
        print(f"summary: t_d fitted={fit!r} formula={td!r} ratio={fit / td!r}")
    if cfg.emit_plot:
        _emit_plot(cfg, "evolve")
    return EXIT_OK


def cmd_pointer(cfg: RunConfig, n_points: int = 41) -> int:
    params = cfg.params
    period = 2 * math.pi / params.omega0
    T = period if cfg.grid is None else max(1, round(cfg.grid.stop / period)) * period
    d1 = asymptotic_coefficients(params).d1
    expected = params.hbar / (2 * params.M * params.omega0)
    dq2 = expected * np.geomspace(1e-2, 1e2, n_points)
    s = entropy_production_min_uncertainty(dq2, d1, T, params)
    best = pointer_argmin(params, d1, T)
    path = write_csv(
        os.path.join(cfg.out, "pointer.csv"),
        ["delta_q_sq", "s_T"],
        zip(dq2, s),
        cfg.metadata() | {"T": T},
        footer={"argmin": best, "hbar_over_2_M_omega0": expected},
    )
    print(f"wrote {path}; argmin={best!r} expected={expected!r}")
    if cfg.emit_plot:
        _emit_plot(cfg, "pointer")
    return EXIT_OK


def cmd_tdscan(cfg: RunConfig) -> int:
    rows = []
    status = EXIT_OK
    t_end = cfg.grid.stop if cfg.grid is not None else None
    for a in cfg.alphas:
        alpha = 1j * a
        try:
            tr, is_period, spec, td = _fringe_run(cfg, alpha, t_end)
            coarse = _sub(tr, is_period)
            fit, _ = decoherence_time_fit(np.c_[coarse.times, fringe_series(coarse, spec)])
            rows.append([a, td, fit, fit / td, ""])
        except (CasimirError, ArithmeticError) as exc:
            log.error("alpha=%g failed: %s", a, exc)
            formula = decoherence_time_formula(CatSpec(alpha, cfg.params), asymptotic_coefficients(cfg.params).d1)
            rows.append([a, formula, math.nan, math.nan, str(exc)])
            status = EXIT_CONVERGENCE
    path = write_csv(
        os.path.join(cfg.out, "tdscan.csv"),
        ["alpha", "td_formula", "td_fit", "ratio", "error"],
        rows,
        cfg.metadata(),
    )
    print(f"wrote {path}")
    if cfg.emit_plot:
        _emit_plot(cfg, "tdscan")
    return status


# -- plot scripts -----------------------------------------------------------

_PLOT_BODY = {
    "coeffs": """d = load("coeffs.csv")
fig, ax = plt.subplots()
for name in ("gamma", "d1"):
    ax.plot(d["omega0_t"], d[name], label=name)
ax.plot(d["omega0_t"], d["gamma_asym"], "k--", lw=0.8, label="asymptote")
ax.set_xlabel("omega0 t")
ax.legend()
fig.savefig("coeffs.png", dpi=150)
""",
    "evolve": """e = load("entropy.csv")
f = load("fringe.csv")
fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))
a1.plot(e["t"], e["ds_dt_direct"], label="finite difference")
a1.plot(e["t"], e["ds_dt_formula"], "--", label="moment formula")
a1.set_xlabel("t")
a1.legend()
a2.plot(f["t"], f["amplitude"], label="coherence")
a2.plot(f["t"], f["mixture_distance"], label="distance to mixture")
a2.set_xlabel("t")
a2.legend()
fig.savefig("evolve.png", dpi=150)
""",
    "pointer": """d = load("pointer.csv")
fig, ax = plt.subplots()
ax.loglog(d["delta_q_sq"], d["s_T"])
ax.set_xlabel("delta q^2")
ax.set_ylabel("s(T)")
fig.savefig("pointer.png", dpi=150)
""",
    "tdscan": """d = load("tdscan.csv")
fig, ax = plt.subplots()
ax.plot(d["alpha"], d["td_formula"], "o-", label="formula")
ax.plot(d["alpha"], d["td_fit"], "s", label="fit")
ax.set_yscale("log")
ax.set_xlabel("|alpha|")
ax.legend()
fig.savefig("tdscan.png", dpi=150)
""",
}

_PLOT_HEAD = '''"""Plot the CSV output of `casimir-decoherence {cmd}` (run from the output directory)."""
import csv

import matplotlib.pyplot as plt


def load(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    head, body = rows[0], rows[1:]
    cols = {{}}
    for i, name in enumerate(head):
        try:
            cols[name] = [float(r[i]) for r in body]
        except ValueError:
            cols[name] = [r[i] for r in body]
    return cols


'''


def _emit_plot(cfg: RunConfig, cmd: str) -> str:
    path = os.path.join(cfg.out, f"plot_{cmd}.py")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_PLOT_HEAD.format(cmd=cmd) + _PLOT_BODY[cmd])
    return path


# -- entry point ------------------------------------------------------------


def main(argv=None) -> int:
    try:
        cfg, extras = config_from_args(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    except (ConfigError, DomainError, PreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if extras["verbose"] else logging.WARNING, format="%(levelname)s %(message)s")

    notes = cfg.params.diagnostics()
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)
    if notes and cfg.strict:
        return EXIT_REGIME

    try:
        if cfg.command == "coeffs":
            return cmd_coeffs(cfg)
        if cfg.command == "evolve":
            return cmd_evolve(cfg, per_period=extras["per_period"])
        if cfg.command == "pointer":
            return cmd_pointer(cfg)
        return cmd_tdscan(cfg)
    except (ConvergenceError, IntegrationError, TruncationError, ArithmeticError) as exc:
        print(f"numerical error in {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (PreconditionError, DomainError, ConfigError) as exc:
        print(f"error in {cfg.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
