"""Command-line front end.

Every subcommand writes delimited data plus a ``<name>.meta.json`` sidecar
holding the resolved configuration and convergence diagnostics.  Feeding a
sidecar back through ``--config`` reproduces the run.

Exit codes: 0 success, 2 configuration error, 3 convergence failure,
4 instability (A4 = 0 past the collapse point).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import metrology, semiclassical, spectrum, wavefunction
from .errors import ConfigError, InstabilityError, QuarticRabiError
from .model import SPIN_DOWN, SPIN_UP, ModelParams, effective_potential
from .ptps import ptps

log = logging.getLogger("quartic_rabi")

COMMANDS = ("spectrum", "potential", "semiclassical", "qfi", "observables", "wavefunction", "gap", "ptps")
SCHEMA = 1


def fmt(x) -> str:
    """17 significant digits: enough for an exact float round trip."""
    return format(float(x), ".17g")


def parse_grid(spec: str) -> np.ndarray:
    """Parse ``start:stop:count[:log]``, or a single number, into an array."""
    if spec is None:
        return None
    parts = str(spec).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) not in (3, 4):
            raise ValueError
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"bad grid {spec!r}; expected start:stop:count[:log]") from None
    if count < 1:
        raise ConfigError(f"grid {spec!r} is empty")
    if len(parts) == 4:
        if parts[3] != "log":
            raise ConfigError(f"unknown grid spacing {parts[3]!r} in {spec!r}")
        if start <= 0 or stop <= 0:
            raise ConfigError(f"log grid {spec!r} needs positive bounds")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


@dataclass
class RunConfig:
    command: str
    omega: float = 1.0
    Omega: float = 1.0
    chi: float = 1.0
    a4: float = 0.0
    g2: float = 0.0
    g2_grid: str | None = None
    g2_ratio_grid: str | None = None
    x_grid: str | None = None
    a4_grid: str | None = None
    alpha4_grid: str | None = None
    levels: int = 10
    tol: float = 1e-8
    cutoff_initial: int = spectrum.INITIAL_CUTOFF
    cutoff_ceiling: int = spectrum.CEILING_CUTOFF
    fixed_cutoff: int | None = None
    delta: float | None = None
    mode: str = "branch"
    g2c_omega: float | None = None
    jobs: int = 1
    out: str = "."
    name: str | None = None
    extra: dict = field(default_factory=dict)

    def params(self, g2=None) -> ModelParams:
        return ModelParams(
            omega=self.omega,
            Omega=self.Omega,
            g2=self.g2 if g2 is None else float(g2),
            chi=self.chi,
            a4=self.a4,
        )

    def g2_values(self, required=True) -> np.ndarray | None:
        base = self.params(0.0)
        if self.g2_grid is not None:
            grid = parse_grid(self.g2_grid)
        elif self.g2_ratio_grid is not None:
            grid = parse_grid(self.g2_ratio_grid) * base.g_t
        elif required:
            grid = np.array([self.g2])
        else:
            return None
        if grid.size == 0:
            raise ConfigError("empty g2 grid")
        return grid

    def cutoff_kwargs(self) -> dict:
        return {"initial_cutoff": self.cutoff_initial, "ceiling": self.cutoff_ceiling}

    def stem(self) -> str:
        return self.name or self.command

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


class Outcome:
    """Collected rows, per-point failures and diagnostics of one run."""

    def __init__(self):
        self.failures = []
        self.diagnostics = {}
        self.files = []

    def fail(self, exc: QuarticRabiError, **coords):
        rec = exc.record()
        rec.update({k: (float(v) if isinstance(v, (int, float, np.floating)) else v) for k, v in coords.items()})
        self.failures.append(rec)

    def exit_code(self) -> int:
        return max((f["exit_code"] for f in self.failures), default=0)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: Path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=True, default=_json_default)
        fh.write("\n")


def _sweep(func, items, jobs: int):
    """Apply ``func`` to every item, keeping input order.

    ``func`` returns a value or raises QuarticRabiError; failures come back
    as the exception object in the same slot.
    """
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_guarded, [func] * len(items), items))
    return [_guarded(func, item) for item in items]


def _guarded(func, item):
    try:
        return func(item)
    except QuarticRabiError as exc:
        return exc


# -- per-point workers (module level so they pickle) -------------------------


def _spectrum_point(args):
    params, levels, tol, fixed, kw = args
    if params.is_unstable():
        raise InstabilityError(f"spectrum unbounded below at g2 = {params.g2}", g2=params.g2)
    if fixed:
        res = spectrum.spectrum_at(params, fixed, levels)
    else:
        res = spectrum.require_converged(spectrum.converged_spectrum(params, levels, tol, **kw))
    return res.eigenvalues, res.cutoff_used, res.convergence_delta


def _ground_point(args):
    params, tol, fixed, kw = args
    if params.is_unstable():
        raise InstabilityError(f"spectrum unbounded below at g2 = {params.g2}", g2=params.g2)
    if fixed:
        return spectrum.spectrum_at(params, fixed, 4)
    return spectrum.require_converged(spectrum.converged_spectrum(params, 4, tol, track=2, **kw))


def _qfi_point(args):
    params, delta, tol, kw = args
    pt = metrology._point(params, delta, tol, **kw)
    return pt.fq, pt.chi_f, pt.cutoff


# -- subcommands --------------------------------------------------------------


def run_spectrum(cfg: RunConfig, out: Outcome, outdir: Path):
    grid = cfg.g2_values()
    jobs = [(cfg.params(g), cfg.levels, cfg.tol, cfg.fixed_cutoff, cfg.cutoff_kwargs()) for g in grid]
    rows, cutoffs = [], []
    for g, res in zip(grid, _sweep(_spectrum_point, jobs, cfg.jobs)):
        if isinstance(res, Exception):
            out.fail(res, g2=g)
            continue
        rows.append([float(g)] + [float(e) for e in res[0]])
        cutoffs.append([float(g), res[1], res[2]])
    header = ["g2"] + [f"E{i}" for i in range(cfg.levels)]
    _emit_csv(out, outdir, f"{cfg.stem()}.csv", header, rows)
    out.diagnostics["cutoffs"] = cutoffs


def run_potential(cfg: RunConfig, out: Outcome, outdir: Path):
    x = parse_grid(cfg.x_grid or "-8:8:401")
    rows = []
    for g in cfg.g2_values():
        p = cfg.params(g)
        vp = effective_potential(p, SPIN_UP, x)
        vm = effective_potential(p, SPIN_DOWN, x)
        rows.extend([float(g), float(xi), float(a), float(b)] for xi, a, b in zip(x, vp, vm))
    _emit_csv(out, outdir, f"{cfg.stem()}.csv", ["g2", "x", "v_plus", "v_minus"], rows)


def run_semiclassical(cfg: RunConfig, out: Outcome, outdir: Path):
    if cfg.mode == "table":
        alphas = parse_grid(cfg.alpha4_grid or "1e-4:1:41:log")
        rows = []
        for a in alphas:
            large = semiclassical.critical_ratio_large(a) if a > 0 else float("nan")
            rows.append([float(a), semiclassical.critical_ratio_exact(a), semiclassical.critical_ratio_small(a), large])
        _emit_csv(out, outdir, f"{cfg.stem()}.csv", ["alpha4", "g2c_exact", "g2c_small", "g2c_large"], rows)
    elif cfg.mode == "phase-diagram":
        a4 = parse_grid(cfg.a4_grid or f"0:{fmt(0.01 * cfg.omega)}:41")
        g2 = cfg.g2_values(required=False)
        if g2 is None:
            g2 = np.linspace(0.0, 4.0, 81) * cfg.params(0.0).g_t
        pd = semiclassical.phase_diagram(cfg.omega, cfg.Omega, a4, g2, chi=cfg.chi)
        rows = [
            [float(a), float(g), float(pd.sigma_x[i, j]), float(pd.x_min[i, j])]
            for i, a in enumerate(pd.a4_grid)
            for j, g in enumerate(pd.g2_grid)
        ]
        _emit_csv(out, outdir, f"{cfg.stem()}.csv", ["a4", "g2", "sigma_x", "x_min"], rows)
        base = cfg.params(0.0)
        bound = [[float(a), float(a * cfg.Omega / cfg.omega**2), float(b), float(b / base.g_t)]
                 for a, b in zip(pd.a4_grid, pd.boundary_g2)]
        _emit_csv(out, outdir, f"{cfg.stem()}_boundary.csv", ["a4", "alpha4", "g2c", "g2c_over_gt"], bound)
        for rec in pd.failures:
            out.failures.append({"error": "InstabilityError", "message": rec["error"], "exit_code": 4,
                                 "a4": rec["a4"], "g2": rec["g2"]})
    elif cfg.mode == "branch":
        x = parse_grid(cfg.x_grid or "0:10:501")
        rows, minima = [], []
        for g in cfg.g2_values():
            p = cfg.params(g)
            eps = semiclassical.lower_branch(p, x)
            rows.extend([float(g), float(xi), float(e)] for xi, e in zip(x, eps))
            try:
                sol = semiclassical.minimize_branch(p)
            except InstabilityError as exc:
                out.fail(exc, g2=g)
                continue
            minima.append({"g2": float(g), "x_min": sol.x_min, "energy_min": sol.energy_min,
                           "energy_origin": sol.energy_origin, "sigma_x_at_min": sol.sigma_x_at_min,
                           "symmetric_phase": sol.symmetric_phase})
        _emit_csv(out, outdir, f"{cfg.stem()}.csv", ["g2", "x", "epsilon"], rows)
        out.diagnostics["minima"] = minima
    elif cfg.mode == "scaled":
        # slow-mode limit: u = (omega/Omega) x^2, energy in units of Omega/2
        u = parse_grid(cfg.x_grid or "0:2:401")
        alpha = cfg.params(0.0).alpha4
        ratios = parse_grid(cfg.g2_ratio_grid or "1.2")
        rows = []
        for r in ratios:
            eps = semiclassical.scaled_lower_branch(alpha, r, u)
            rows.extend([float(r), float(ui), float(e)] for ui, e in zip(u, eps))
        _emit_csv(out, outdir, f"{cfg.stem()}.csv", ["g2_over_gt", "u", "epsilon_scaled"], rows)
    else:
        raise ConfigError(f"unknown semiclassical mode {cfg.mode!r}")


def run_qfi(cfg: RunConfig, out: Outcome, outdir: Path):
    base = cfg.params(0.0)
    delta = cfg.delta or metrology.default_delta(base)
    kw = cfg.cutoff_kwargs()
    tol = min(cfg.tol, 1e-10)
    peak = metrology.find_qfi_peak(base, delta=delta, tol=tol, **kw)
    grid = cfg.g2_values(required=False)
    if grid is None:
        hi = peak.g2 if peak.at_stability_edge else 1.5 * peak.g2
        grid = np.linspace(0.5 * peak.g2, hi, 51)
    jobs = [(cfg.params(g), delta, tol, kw) for g in grid]
    rows = []
    for g, res in zip(grid, _sweep(_qfi_point, jobs, cfg.jobs)):
        if isinstance(res, Exception):
            out.fail(res, g2=g)
            continue
        fq, chi, _ = res
        ln = math.log(fq) if fq > 0 else float("-inf")
        ecr = 1.0 / math.sqrt(fq) if fq > 0 else float("inf")
        rows.append([float(g), float(g / peak.g2), fq, ln, chi, ecr])
    _emit_csv(out, outdir, f"{cfg.stem()}.csv", ["g2", "g2_over_peak", "fq", "ln_fq", "chi_f", "e_cr"], rows)
    summary = {
        "peak_g2": peak.g2,
        "peak_fq": peak.fq,
        "ln_peak_fq": math.log(peak.fq),
        "peak_over_gt": peak.g2 / base.g_t,
        "at_stability_edge": peak.at_stability_edge,
        "alpha4": base.alpha4,
        "g2c_slow_mode": semiclassical.critical_ratio_exact(base.alpha4) * base.g_t,
        "delta_lambda": delta,
    }
    _emit_json(out, outdir, f"{cfg.stem()}_peak.json", summary)


def run_observables(cfg: RunConfig, out: Outcome, outdir: Path):
    grid = cfg.g2_values()
    jobs = [(cfg.params(g), cfg.tol, cfg.fixed_cutoff, cfg.cutoff_kwargs()) for g in grid]
    rows = []
    for g, res in zip(grid, _sweep(_ground_point, jobs, cfg.jobs)):
        if isinstance(res, Exception):
            out.fail(res, g2=g)
            continue
        psi = res.ground_state
        rows.append([float(g), wavefunction.observable_sigma_x(psi, res.basis),
                     wavefunction.observable_x2(psi, res.basis), res.ground_energy])
    _emit_csv(out, outdir, f"{cfg.stem()}.csv", ["g2", "sigma_x", "x2", "E0"], rows)


def run_wavefunction(cfg: RunConfig, out: Outcome, outdir: Path):
    grid = cfg.g2_values()
    jobs = [(cfg.params(g), cfg.tol, cfg.fixed_cutoff, cfg.cutoff_kwargs()) for g in grid]
    x = parse_grid(cfg.x_grid) if cfg.x_grid else None
    norms = []
    for g, res in zip(grid, _sweep(_ground_point, jobs, cfg.jobs)):
        if isinstance(res, Exception):
            out.fail(res, g2=g)
            continue
        try:
            wf = wavefunction.to_position(res.ground_state, res.basis, x)
        except ValueError as exc:
            out.fail(ConfigError(str(exc)), g2=g)
            continue
        rows = zip(wf.x_grid, wf.psi_plus, wf.psi_minus)
        _emit_csv(out, outdir, f"{cfg.stem()}_g2={fmt(g)}.csv", ["x", "psi_plus", "psi_minus"],
                  [[float(a), float(b), float(c)] for a, b, c in rows])
        norms.append({"g2": float(g), "norm_check": wf.norm_check, "cutoff": res.cutoff_used})
    out.diagnostics["norms"] = norms


def run_gap(cfg: RunConfig, out: Outcome, outdir: Path):
    grid = cfg.g2_values()
    jobs = [(cfg.params(g), cfg.tol, cfg.fixed_cutoff, cfg.cutoff_kwargs()) for g in grid]
    rows = []
    for g, res in zip(grid, _sweep(_ground_point, jobs, cfg.jobs)):
        if isinstance(res, Exception):
            out.fail(res, g2=g)
            continue
        rows.append([float(g), res.gap])
    _emit_csv(out, outdir, f"{cfg.stem()}.csv", ["g2", "delta"], rows)


def run_ptps(cfg: RunConfig, out: Outcome, outdir: Path):
    base = cfg.params(0.0)
    res = ptps(base, g2c_omega=cfg.g2c_omega, tol=cfg.extra.get("quad_tol", 1e-6),
               gap_tol=cfg.tol, **cfg.cutoff_kwargs())
    nodes = [[g, g * res.g2c_omega, d, sd, int(p)] for g, d, sd, p in res.nodes]
    _emit_csv(out, outdir, f"{cfg.stem()}_nodes.csv", ["g_bar", "g2", "delta", "sector_delta", "excited_parity"], nodes)
    _emit_json(out, outdir, f"{cfg.stem()}.json", {
        "time": res.time,
        "g2c_omega": res.g2c_omega,
        "quadrature_points": res.quadrature_points,
        "estimated_error": res.estimated_error,
        "parity_crossing": res.parity_crossing,
    })


RUNNERS = {
    "spectrum": run_spectrum,
    "potential": run_potential,
    "semiclassical": run_semiclassical,
    "qfi": run_qfi,
    "observables": run_observables,
    "wavefunction": run_wavefunction,
    "gap": run_gap,
    "ptps": run_ptps,
}


def _emit_csv(out, outdir, name, header, rows):
    path = outdir / name
    write_csv(path, header, rows)
    out.files.append(name)


def _emit_json(out, outdir, name, data):
    path = outdir / name
    write_json(path, data)
    out.files.append(name)


def validate(cfg: RunConfig):
    if cfg.command not in RUNNERS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    cfg.params()  # parameter invariants
    for name in ("g2_grid", "g2_ratio_grid", "x_grid", "a4_grid", "alpha4_grid"):
        parse_grid(getattr(cfg, name))
    if cfg.levels < 1:
        raise ConfigError("levels must be >= 1")
    if not cfg.tol > 0:
        raise ConfigError("tol must be positive")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if cfg.fixed_cutoff is not None and cfg.fixed_cutoff < 4:
        raise ConfigError("fixed cutoff must be >= 4")


def run(cfg: RunConfig) -> int:
    """Execute one configured run and return the process exit code."""
    outdir = Path(cfg.out)
    try:
        validate(cfg)
    except QuarticRabiError as exc:
        log.error("%s", exc)
        print(json.dumps(exc.record(), sort_keys=True), file=sys.stderr)
        return exc.exit_code

    outdir.mkdir(parents=True, exist_ok=True)
    out = Outcome()
    try:
        RUNNERS[cfg.command](cfg, out, outdir)
    except QuarticRabiError as exc:
        out.fail(exc)
        log.error("%s", exc)

    code = out.exit_code()
    meta = {
        "schema": SCHEMA,
        "config": cfg.to_json(),
        "files": out.files,
        "diagnostics": out.diagnostics,
        "failures": out.failures,
        "exit_code": code,
    }
    write_json(outdir / f"{cfg.stem()}.meta.json", meta)
    if out.failures:
        write_json(outdir / f"{cfg.stem()}.failures.json", out.failures)
        print(json.dumps(out.failures[0], sort_keys=True), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="quartic-rabi", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON config, or a .meta.json sidecar from an earlier run")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--omega", type=float, help="mode frequency (default 1)")
        p.add_argument("--qubit-splitting", dest="Omega", type=float, help="qubit splitting (default 1)")
        p.add_argument("--chi", type=float)
        p.add_argument("--a4", type=float, help="quartic coefficient A4")
        p.add_argument("--a4-per-omega", type=float, help="set A4 = value * omega")
        p.add_argument("--g2", type=float, help="single coupling")
        p.add_argument("--g2-grid", help="couplings start:stop:count[:log]")
        p.add_argument("--g2-ratio-grid", help="couplings in units of g_T")
        p.add_argument("--x-grid")
        p.add_argument("--levels", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--cutoff-initial", type=int)
        p.add_argument("--cutoff-ceiling", type=int)
        p.add_argument("--fixed-cutoff", type=int, help="diagonalize at this cutoff, no convergence loop")
        p.add_argument("--jobs", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--name", help="output file stem (default: command name)")
        if name == "semiclassical":
            mode = p.add_mutually_exclusive_group()
            mode.add_argument("--table", dest="mode", action="store_const", const="table")
            mode.add_argument("--phase-diagram", dest="mode", action="store_const", const="phase-diagram")
            mode.add_argument("--scaled", dest="mode", action="store_const", const="scaled")
            p.add_argument("--a4-grid")
            p.add_argument("--alpha4-grid")
        if name == "qfi":
            p.add_argument("--delta", type=float, help="finite-difference step in g2")
        if name == "ptps":
            p.add_argument("--g2c-omega", type=float, help="skip the QFI peak search")
            p.add_argument("--quad-tol", type=float, help="relative quadrature tolerance")
    return ap


def config_from_args(args) -> RunConfig:
    if args.config:
        data = json.loads(Path(args.config).read_text())
        data = data.get("config", data)
        cfg = RunConfig.from_json(data)
        if args.command:
            cfg.command = args.command
    else:
        if not args.command:
            raise ConfigError("no subcommand given")
        cfg = RunConfig(command=args.command)
    overrides = {k: v for k, v in vars(args).items()
                 if v is not None and k not in ("config", "verbose", "command", "a4_per_omega", "quad_tol")}
    for key, value in overrides.items():
        setattr(cfg, key, value)
    if getattr(args, "a4_per_omega", None) is not None:
        cfg.a4 = args.a4_per_omega * cfg.omega
    if getattr(args, "quad_tol", None) is not None:
        cfg.extra = dict(cfg.extra, quad_tol=args.quad_tol)
    return cfg


_NEGATIVE_VALUE = re.compile(r"^-(\d|\.\d)")


def _glue_negative_values(argv):
    """Attach values such as ``-2:2:41`` to their flag so argparse keeps them."""
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE_VALUE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except QuarticRabiError as exc:
        print(json.dumps(exc.record(), sort_keys=True), file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        err = ConfigError(f"cannot read config: {exc}")
        print(json.dumps(err.record(), sort_keys=True), file=sys.stderr)
        return err.exit_code
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
