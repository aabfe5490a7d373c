"""Command-line entry point.

Every run writes its outputs, an effective ``config.txt`` (flat key = value,
re-usable through ``--config``) and a ``manifest.json`` into the output
directory. Exit codes: 0 success, 2 usage error, 1 numerical failure (with
``error.json``).
"""
import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, fileio, kernels
from .eos import EosSpec
from .svg import emit_svg

COMMANDS = ("family", "profile", "spectrum", "phase", "asymptotics", "evolve", "critical")


class UsageError(ValueError):
    """Invalid configuration; maps to exit code 2."""


def _positive(name):
    def check(v):
        if not v > 0:
            raise UsageError(f"{name} must be positive, got {v!r}")
    return check


def _positive_list(name):
    def check(vals):
        if not vals:
            raise UsageError(f"{name} is empty")
        for v in vals:
            if not v > 0:
                raise UsageError(f"{name} entries must be positive, got {v!r}")
    return check


def _at_least(name, low):
    def check(v):
        if v < low:
            raise UsageError(f"{name} must be at least {low}, got {v!r}")
    return check


def _float_list(text):
    return tuple(float(s) for s in str(text).split(",") if s.strip())


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise UsageError(f"seed must be a 64-bit unsigned integer, got {v!r}")
    return v


@dataclass(frozen=True)
class Option:
    key: str
    parse: object
    default: object
    check: object = None
    help: str = ""


OPTIONS = (
    Option("output_dir", str, "hardphase-out", None, "output directory"),
    Option("grid_size", int, 4096, _at_least("grid_size", 64), "grid intervals"),
    Option("cs2", float, 1.0, _positive("cs2"), "sound speed squared"),
    Option("rho0", float, 1.0, _positive("rho0"), "surface density"),
    Option("kappa", _float_list, None, _positive_list("kappa"), "central redshift(s), comma separated"),
    Option("seed", _seed, 20240517, None, "64-bit seed for every random draw"),
    Option("plot", _bool, False, None, "also write SVG plots"),
    Option("boundary_tol", float, 1e-12, _positive("boundary_tol"), "tolerance on ybar(R)"),
    Option("marginal_tol", float, 1e-8, _positive("marginal_tol"), "Marginal band for nu*"),
    Option("alpha1", float, 0.1, _positive("alpha1"), "inner window exponent"),
    Option("alpha2", float, 0.2, _positive("alpha2"), "outer window exponent"),
    Option("eps", float, 1e-8, _positive("eps"), "phase-plane start offset"),
    Option("tau_max", float, 30.0, _positive("tau_max"), "phase-plane final tau"),
    Option("samples", int, 6001, _at_least("samples", 2), "phase-plane samples"),
    Option("rtol", float, 1e-12, _positive("rtol"), "phase-plane relative tolerance"),
    Option("atol", float, 1e-12, _positive("atol"), "phase-plane absolute tolerance"),
    Option("kappa_lo", float, 0.01, _positive("kappa_lo"), "stable end of the bracket"),
    Option("kappa_hi", float, 12.0, _positive("kappa_hi"), "unstable end of the bracket"),
    Option("tol_kappa", float, 1e-4, _positive("tol_kappa"), "bracket width"),
    Option("seed_mode", str, "mode", None, "evolution seed: mode or random"),
    Option("delta", float, 1e-6, _positive("delta"), "initial Mw-norm of the seed"),
    Option("theta0", float, 1e-2, _positive("theta0"), "escape threshold"),
    Option("t_final", float, 0.0, None, "evolution end time; 0 picks a default"),
    Option("dt", float, 0.0, None, "evolution step; 0 picks half the stability bound"),
    Option("snapshots", int, 501, _at_least("snapshots", 2), "evolution snapshot count"),
    Option("dump_operator", _bool, False, None, "write the operator bands CSV"),
)
OPTION_MAP = {o.key: o for o in OPTIONS}
DEFAULT_KAPPA = {
    "family": (0.01, 0.1, 1.0, 5.0, 12.0),
    "profile": (12.0,),
    "spectrum": (0.01, 0.05, 0.1, 8.0, 10.0, 12.0),
    "asymptotics": (8.0, 10.0, 12.0, 14.0),
    "evolve": (12.0,),
}


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one run: the command plus every option value."""

    command: str
    values: tuple

    def __getattr__(self, key):
        for k, v in object.__getattribute__(self, "values"):
            if k == key:
                return v
        raise AttributeError(key)

    def as_dict(self):
        d = {"command": self.command}
        d.update(dict(self.values))
        return d

    @property
    def eos(self):
        return EosSpec(cs2=self.cs2, rho0=self.rho0)

    @property
    def tolerances(self):
        return {k: dict(self.values)[k] for k in ("boundary_tol", "marginal_tol", "rtol", "atol",
                                                   "tol_kappa")}


def _convert(key, raw):
    opt = OPTION_MAP[key]
    try:
        value = opt.parse(raw)
    except UsageError:
        raise
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key}: {raw!r} ({exc})") from exc
    if isinstance(value, float) and not math.isfinite(value):
        raise UsageError(f"{key} must be finite")
    if opt.check is not None and value is not None:
        opt.check(value)
    return value


def build_config(command, file_values=None, cli_values=None):
    """Merge defaults, config-file values and CLI values (that precedence, lowest first)."""
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}")
    merged = {o.key: o.default for o in OPTIONS}
    merged["kappa"] = DEFAULT_KAPPA.get(command)
    for source in (file_values or {}, cli_values or {}):
        for key, raw in source.items():
            if key == "command":
                if raw != command:
                    raise UsageError(f"config file is for {raw!r}, not {command!r}")
                continue
            if key not in OPTION_MAP:
                raise UsageError(f"unknown configuration key {key!r}")
            if raw is None:
                continue
            merged[key] = _convert(key, raw)
    if merged["alpha2"] <= merged["alpha1"]:
        raise UsageError("alpha2 must exceed alpha1")
    if merged["kappa_hi"] <= merged["kappa_lo"]:
        raise UsageError("kappa_hi must exceed kappa_lo")
    if merged["delta"] >= merged["theta0"]:
        raise UsageError("delta must be below theta0")
    if merged["seed_mode"] not in ("mode", "random"):
        raise UsageError("seed_mode must be 'mode' or 'random'")
    if merged["t_final"] < 0 or merged["dt"] < 0:
        raise UsageError("t_final and dt must be non-negative")
    if command in ("profile", "evolve") and merged["kappa"] and len(merged["kappa"]) != 1:
        raise UsageError(f"{command} takes a single kappa")
    return RunConfig(command, tuple(sorted(merged.items())))


def render_config(cfg):
    return fileio.render_config({k: v for k, v in cfg.as_dict().items() if v is not None})


def parse_config(text):
    raw = fileio.parse_config(text)
    command = raw.pop("command", None)
    if command is None:
        raise UsageError("config text has no command")
    return build_config(command, raw)


def make_parser():
    parser = argparse.ArgumentParser(
        prog="hardphase",
        description="Steady states, spectra and linear dynamics of hard-phase fluid stars.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file (CLI flags take precedence)")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--grid", dest="grid_size", help="grid intervals (>= 64)")
    common.add_argument("--cs2")
    common.add_argument("--rho0")
    common.add_argument("--seed")
    common.add_argument("--plot", action="store_const", const="true")
    common.add_argument("--boundary-tol", dest="boundary_tol")
    specific = {
        "family": ["kappa"],
        "profile": ["kappa"],
        "spectrum": ["kappa", "marginal_tol", "dump_operator"],
        "phase": ["eps", "tau_max", "samples", "rtol", "atol"],
        "asymptotics": ["kappa", "alpha1", "alpha2"],
        "evolve": ["kappa", "seed_mode", "delta", "theta0", "t_final", "dt", "snapshots",
                   "marginal_tol"],
        "critical": ["kappa_lo", "kappa_hi", "tol_kappa", "marginal_tol"],
    }
    helps = {
        "family": "tabulate R and M along the family",
        "profile": "one steady state with diagnostics",
        "spectrum": "smallest eigenvalue and stability class",
        "phase": "unstable manifold of the planar system",
        "asymptotics": "deviation from the self-similar point",
        "evolve": "linearized evolution of a seed",
        "critical": "bisect the stability transition",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        for key in specific[name]:
            opt = OPTION_MAP[key]
            flag = "--" + key.replace("_", "-")
            if opt.parse is _bool:
                p.add_argument(flag, dest=key, action="store_const", const="true", help=opt.help)
            else:
                p.add_argument(flag, dest=key, help=opt.help)
    return parser


def config_from_args(argv):
    args = make_parser().parse_args(argv)
    file_values = {}
    if args.config:
        try:
            file_values = fileio.read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        except fileio.FormatError as exc:
            raise UsageError(str(exc)) from exc
    cli = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}
    return build_config(args.command, file_values, cli)


def _prepare_output(cfg):
    out = cfg.output_dir
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out!r}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {out!r} is not writable")
    return out


def _star_config(cfg):
    from .steady_state import StarConfig
    return StarConfig(grid_size=cfg.grid_size, boundary_tol=cfg.boundary_tol)


def _map(fn, items):
    from .steady_state import worker_count
    workers = worker_count()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


class Run:
    """Collects outputs of one command and writes them."""

    def __init__(self, cfg, out):
        self.cfg = cfg
        self.out = out
        self.files = []
        self.results = {}

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.out, name)

    def csv(self, name, kind, rows):
        fileio.write_csv(self.path(name), fileio.HEADERS[kind], rows)

    def columns(self, name, kind, cols):
        fileio.write_columns(self.path(name), fileio.HEADERS[kind], cols)

    def svg(self, name, series, style, **kw):
        fileio.write_text(self.path(name), emit_svg(series, style, **kw))

    def finish(self):
        fileio.write_text(os.path.join(self.out, "config.txt"), render_config(self.cfg))
        manifest = {
            "command": self.cfg.command,
            "config": self.cfg.as_dict(),
            "grid_size": self.cfg.grid_size,
            "tolerances": self.cfg.tolerances,
            "seed": self.cfg.seed,
            "outputs": sorted(self.files + ["config.txt"]),
            "results": self.results,
            "version": __version__,
            "backend": kernels.BACKEND,
        }
        fileio.write_json(os.path.join(self.out, "manifest.json"), manifest)


def cmd_family(run):
    from .steady_state import sweep_family
    cfg = run.cfg
    table = sweep_family(cfg.eos, cfg.kappa, _star_config(cfg))
    run.csv("family.csv", "family", table.rows())
    if cfg.plot and len(cfg.kappa) >= 2:
        run.svg("family.svg", {"M": (table.kappa, table.M), "R": (table.kappa, table.R)},
                "points", xlabel="kappa", ylabel="M, R", title="steady-state family")


def cmd_profile(run):
    from .steady_state import diagnostics, solve_steady_state
    cfg = run.cfg
    prof = solve_steady_state(cfg.eos, cfg.kappa[0], _star_config(cfg))
    run.columns("profile.csv", "profile",
                (prof.r, prof.ybar, prof.rho, prof.p, prof.mass, prof.lam, prof.mu))
    info = prof.metadata()
    info["diagnostics"] = diagnostics(prof).as_dict()
    fileio.write_json(run.path("profile.json"), info)
    run.results = {"R": prof.R, "M": prof.M}
    if cfg.plot:
        run.svg("profile.svg", {"p": (prof.r, prof.p), "m": (prof.r, prof.mass)}, "line",
                xlabel="r", ylabel="p, m", title=f"steady state kappa={cfg.kappa[0]:g}")


def cmd_spectrum(run):
    from .linear_operator import cutoff_window
    from .spectrum import instability_certificate, spectrum_row
    from .steady_state import SolverError
    cfg = run.cfg
    star_cfg = _star_config(cfg)

    def one(k):
        row, prof, asm, res = spectrum_row(cfg.eos, k, star_cfg, tol=cfg.marginal_tol)
        cert = None
        try:
            cert = instability_certificate(prof, asm, cutoff_window(prof))
        except (ValueError, SolverError):
            pass  # window does not fit small stars
        return row, asm, cert

    results = _map(one, list(cfg.kappa))
    run.csv("spectrum.csv", "spectrum", [r.as_tuple() for r, _, _ in results])
    run.results = {"certificates": [{"kappa": r.kappa, "quotient": c} for r, _, c in results]}
    if cfg.dump_operator:
        for r, asm, _ in results:
            run.columns(f"operator_kappa{r.kappa:g}.csv", "operator", asm.bands_table().T)
    if cfg.plot and len(results) >= 2:
        k = np.array([r.kappa for r, _, _ in results])
        nu = np.array([r.nu_star for r, _, _ in results])
        run.svg("spectrum.svg", {"nu*": (k, np.arcsinh(nu))}, "ladder", xlabel="kappa",
                ylabel="asinh(nu*)", title="smallest eigenvalue")


def cmd_phase(run):
    from .phase_plane import decay_fit, dulac_divergence, integrate_unstable_manifold
    cfg = run.cfg
    traj = integrate_unstable_manifold(eps=cfg.eps, tau_max=cfg.tau_max, samples=cfg.samples,
                                       rtol=cfg.rtol, atol=cfg.atol)
    run.columns("trajectory.csv", "trajectory", (traj.tau, traj.w1, traj.w2))
    rate, freq = decay_fit(traj)
    k = traj.entry_index()
    run.results = {
        "final_distance": float(traj.distance_to_sink()[-1]),
        "stays_in_triangle": traj.stays_in_triangle(),
        "decay_rate": rate,
        "frequency": freq,
        "max_dulac": float(np.max(dulac_divergence(traj.w1[k:], traj.w2[k:]))),
    }
    if cfg.plot:
        run.svg("phase.svg", {"unstable manifold": (traj.w1, traj.w2)}, "phase", xlabel="w1",
                ylabel="w2", title="planar system")


def cmd_asymptotics(run):
    from .family_analysis import ASYMPTOTIC_KEYS, asymptotic_ladder
    cfg = run.cfg
    reports, trend = asymptotic_ladder(cfg.eos, cfg.kappa, cfg.alpha1, cfg.alpha2,
                                       _star_config(cfg))
    run.csv("asymptotics.csv", "asymptotics",
            [(r.kappa, r.window[0], r.window[1], r.nodes) + tuple(r.deviations[k]
                                                                   for k in ASYMPTOTIC_KEYS)
             for r in reports])
    run.results = {"strictly_decreasing": trend}
    if cfg.plot and len(reports) >= 2:
        k = np.array([r.kappa for r in reports])
        run.svg("asymptotics.svg",
                {key: (k, np.array([r.deviations[key] for r in reports]))
                 for key in ASYMPTOTIC_KEYS}, "points", logy=True, xlabel="kappa",
                ylabel="window maximum", title="deviation from the self-similar point")


def cmd_evolve(run):
    from .evolution import (evolve_linear, growth_rate_fit, random_seed_vector,
                            stability_bound)
    from .spectrum import escape_time, spectrum_row
    cfg = run.cfg
    _, prof, asm, res = spectrum_row(cfg.eos, cfg.kappa[0], _star_config(cfg),
                                     tol=cfg.marginal_tol)
    nu = res.nu_star
    if cfg.seed_mode == "mode":
        z0 = cfg.delta * res.chi
        v0 = cfg.delta * math.sqrt(-nu) * res.chi if nu < 0 else np.zeros_like(z0)
    else:
        z0 = cfg.delta * random_seed_vector(asm, cfg.seed)
        v0 = np.zeros_like(z0)
    bound = stability_bound(asm)
    dt = cfg.dt or None
    t_final = cfg.t_final
    if not t_final:
        if nu < 0:
            t_final = 1.25 * escape_time(cfg.delta, cfg.theta0, nu)
        else:
            t_final = 10.0 * 2.0 * math.pi / math.sqrt(nu)
    ev = evolve_linear(asm, z0, v0, t_final, dt=dt, samples=cfg.snapshots, bound=bound)
    run.columns("evolution.csv", "evolution", (ev.times, ev.norms, ev.energy))
    results = {"nu_star": nu, "classification": res.classification.value, "dt": ev.dt,
               "steps": ev.steps, "stability_bound": bound}
    if nu < 0:
        results["growth_rate"] = growth_rate_fit(ev, (0.5 * ev.times[-1], ev.times[-1]))
        results["predicted_rate"] = math.sqrt(-nu)
        results["escape_time"] = escape_time(cfg.delta, cfg.theta0, nu)
        try:
            results["crossing_time"] = ev.crossing_time(cfg.theta0)
        except ValueError:
            results["crossing_time"] = None
    else:
        results["energy_drift"] = float(np.max(np.abs(ev.energy / ev.energy[0] - 1.0)))
    run.results = results
    if cfg.plot:
        run.svg("evolution.svg", {"||zeta||": (ev.times, ev.norms)}, "line", logy=nu < 0,
                xlabel="t", ylabel="Mw-norm", title=f"linear evolution kappa={cfg.kappa[0]:g}")


def cmd_critical(run):
    from .spectrum import critical_redshift
    cfg = run.cfg
    c = critical_redshift(cfg.eos, cfg.kappa_lo, cfg.kappa_hi, cfg.tol_kappa, _star_config(cfg))
    run.csv("critical.csv", "critical",
            [(c.kappa_star, c.kappa_lo, c.kappa_hi, c.nu_lo, c.nu_hi, c.evaluations)])
    run.results = {"kappa_star": c.kappa_star}


HANDLERS = {
    "family": cmd_family, "profile": cmd_profile, "spectrum": cmd_spectrum, "phase": cmd_phase,
    "asymptotics": cmd_asymptotics, "evolve": cmd_evolve, "critical": cmd_critical,
}


def run(argv=None):
    """Execute one command; returns the exit code."""
    try:
        cfg = config_from_args(argv)
        out = _prepare_output(cfg)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else 2
    except UsageError as exc:
        print(f"hardphase: error: {exc}", file=sys.stderr)
        return 2
    job = Run(cfg, out)
    try:
        HANDLERS[cfg.command](job)
    except UsageError as exc:
        print(f"hardphase: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        report = {"command": cfg.command, "error": type(exc).__name__, "message": str(exc),
                  "config": cfg.as_dict()}
        fileio.write_json(os.path.join(out, "error.json"), report)
        print(f"hardphase: numerical failure: {exc}", file=sys.stderr)
        return 1
    job.finish()
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
