"""Batch command line front-end.

    kzopen predict  --config exp.cfg
    kzopen sweep    --config exp.cfg --out runs/
    kzopen fit      --config exp.cfg runs/sweep_*.csv

Output root: ``--out`` if given, else ``$KZOPEN_OUT``, else
``output.directory`` from the config, else the current directory.

Exit status: 0 if every requested computation converged (and every
verification met its tolerance), 1 otherwise, 2 for invalid input.
"""
from __future__ import annotations

import argparse
import glob
import logging
import os
import sys
from dataclasses import replace
from typing import Optional

import numpy as np

from . import __version__
from . import csvio
from .analysis import (AnalysisError, ScalingCurve, class_and_exponent,
                       collapse, collapse_kappa, collapse_velocities,
                       default_window, fit_power_law, verify_scaling_identity)
from .bath import BathParams
from .config import ConfigError, ExperimentConfig
from .dynamics import (IntegrationError, excitation_density,
                       excitation_trajectory, fixed_velocity_density,
                       thermal_density)
from .protocol import UnsupportedRegimeError

log = logging.getLogger("kzopen")

IDENTITY_TOL = 5e-3
DEFAULT_AB = ((2.0, 2.0), (0.5, 4.0), (3.0, 1.0))
DEFAULT_SAMPLES = 101
# (kappa factor, gamma factor) for the trajectory variants
VARIANTS = {"full": (1.0, 1.0), "no_kappa": (0.0, 1.0),
            "no_gamma": (1.0, 0.0), "unitary": (0.0, 0.0)}


class UsageError(Exception):
    pass


# -- helpers -------------------------------------------------------------------

def output_root(args, cfg: ExperimentConfig) -> str:
    if args.out:
        return args.out
    env = os.environ.get("KZOPEN_OUT")
    if env:
        return env
    return cfg.output.get("directory", ".")


def _meta(kind, cfg, name=None, **extra):
    meta = {"version": __version__, "kind": kind}
    if name is not None:
        meta["ramp"] = name
        meta["fingerprint"] = cfg.fingerprint(name)
    else:
        meta["fingerprint"] = cfg.fingerprint()
    meta.update(extra)
    return meta


def _ramp_config(cfg: ExperimentConfig, name: str) -> ExperimentConfig:
    """Config restricted to one ramp, as embedded in that ramp's files."""
    sub = ExperimentConfig(model=dict(cfg.model), bath=dict(cfg.bath),
                           dynamics=dict(cfg.dynamics),
                           ramp=dict(cfg.ramps[name]) if cfg.ramps else dict(cfg.ramp),
                           sweep=dict(cfg.sweep), analysis=dict(cfg.analysis),
                           output=dict(cfg.output))
    return sub


def _write_gnuplot(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _bath_with(bath: BathParams, gamma: float) -> BathParams:
    return replace(bath, gamma=gamma)


def _report(lines, path=None):
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# -- commands ------------------------------------------------------------------

def cmd_predict(cfg: ExperimentConfig, args) -> int:
    model = cfg.model_spec()
    bath = cfg.bath_params()
    names = cfg.ramp_names()
    if not names:
        raise UsageError("no ramp configured")
    for name in names:
        ramp = cfg.ramp_spec(name)
        try:
            cls, z = class_and_exponent(ramp, model, bath)
            zs = f"{z:.6g}"
        except UnsupportedRegimeError:
            cls, _ = class_and_exponent(ramp, model, bath, coherent=True)
            zs = "unsupported (s > 1)"
        _, zc = class_and_exponent(ramp, model, bath, coherent=True)
        print(f"{name}: class {cls.value}  zeta = {zs}  zeta_coh = {zc:.6g}")
    return 0


def cmd_ramp(cfg: ExperimentConfig, args) -> int:
    model = cfg.model_spec()
    bath = cfg.bath_params()
    opts = cfg.dynamics_options(args.threads)
    root = output_root(args, cfg)
    n = int(cfg.output.get("samples", DEFAULT_SAMPLES))
    variants = cfg.output.get("variants", [])
    for v in variants:
        if v != "thermal" and v not in VARIANTS:
            raise ConfigError("output.variants",
                              f"unknown variant {v!r}; expected thermal or one of {sorted(VARIANTS)}")
    names = cfg.ramp_names()
    if not names:
        raise UsageError("no ramp configured")
    ok = True
    for name in names:
        t_f = _single_tf(cfg, name)
        ramp = cfg.ramp_spec(name, t_f)
        tr = excitation_trajectory(ramp, model, bath, opts, n)
        cols = ["t", "tau", "dmu", "T", "E"]
        data = [tr.t, tr.tau, tr.dmu, tr.T, tr.E]
        good = tr.density.converged
        for v in variants:
            if v == "thermal":
                cols.append("E_thermal")
                data.append(np.array([thermal_density(model, d, T, opts)
                                      for d, T in zip(tr.dmu, tr.T)]))
                continue
            fk, fg = VARIANTS[v]
            o = replace(opts, kappa=opts.kappa * fk)
            tv = excitation_trajectory(ramp, model,
                                       _bath_with(bath, bath.gamma * fg), o, n)
            cols.append(f"E_{v}")
            data.append(tv.E)
            good = good and tv.density.converged
        rows = [list(map(float, r)) for r in zip(*data)]
        path = os.path.join(root, f"ramp_{name}.csv")
        meta = _meta("ramp", cfg, name, t_f=repr(t_f),
                     status="converged" if good else "partial")
        csvio.write(path, cols, rows, meta, _ramp_config(cfg, name))
        plot = [f"# E(t) for ramp {name}",
                "set datafile separator ','",
                "set xlabel 't'", "set ylabel 'E'", "set logscale y",
                "plot " + ", ".join(
                    f"'{os.path.basename(path)}' using 1:{i + 1} with lines title '{c}'"
                    for i, c in enumerate(cols) if c.startswith("E"))]
        _write_gnuplot(os.path.join(root, f"ramp_{name}.gp"), plot)
        log.info("wrote %s", path)
        if not good:
            log.warning("ramp %s: some modes failed; output flagged partial", name)
        ok = ok and good
    return 0 if ok else 1


def _single_tf(cfg, name):
    tf = (cfg.ramps[name] if cfg.ramps else cfg.ramp).get("t_f")
    if tf is None:
        pts = cfg.sweep_points()
        if len(pts) != 1:
            raise ConfigError("ramp.t_f", "ramp command needs a single t_f")
        tf = pts[0]
    return float(tf)


SWEEP_COLUMNS = ["t_f", "E", "converged", "tail", "depth", "n_modes"]


def _sweep_path(root, name):
    return os.path.join(root, f"sweep_{name}.csv")


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    model = cfg.model_spec()
    bath = cfg.bath_params()
    opts = cfg.dynamics_options(args.threads)
    root = output_root(args, cfg)
    points = cfg.sweep_points()
    if not points:
        raise ConfigError("sweep", "zero-length sweep")
    names = cfg.ramp_names()
    if not names:
        raise UsageError("no ramp configured")
    ok = True
    for name in names:
        path = _sweep_path(root, name)
        fp = cfg.fingerprint(name)
        done = {}
        if os.path.exists(path):
            table = csvio.read(path)
            csvio.check_fingerprint(table, fp, path)
            for r in table.rows:
                row = dict(zip(table.columns, r))
                if row["converged"] == 1.0:
                    done[csvio.fmt(float(row["t_f"]))] = r
        rows = []
        n_new = 0
        for tf in sorted(set(points)):
            key = csvio.fmt(float(tf))
            if key in done:
                rows.append(done[key])
                continue
            ramp = cfg.ramp_spec(name, tf)
            try:
                res = excitation_density(ramp, model, bath, opts)
                rows.append([float(tf), res.E, int(res.converged), res.tail,
                             res.depth, res.n_modes])
            except IntegrationError as exc:
                log.warning("ramp %s, t_f = %g: %s", name, tf, exc)
                rows.append([float(tf), float("nan"), 0, float("nan"), 0, 0])
            n_new += 1
        rows.sort(key=lambda r: float(r[0]))
        good = all(int(r[2]) == 1 for r in rows)
        meta = _meta("sweep", cfg, name,
                     status="converged" if good else "partial")
        csvio.write(path, SWEEP_COLUMNS, rows, meta, _ramp_config(cfg, name))
        _write_gnuplot(os.path.join(root, f"sweep_{name}.gp"), [
            f"# E(t_f) for ramp {name}",
            "set datafile separator ','", "set logscale xy",
            "set xlabel 't_f'", "set ylabel 'E'",
            f"plot '{os.path.basename(path)}' using 1:2 with linespoints title '{name}'"])
        log.info("ramp %s: %d new points, %d reused -> %s", name, n_new,
                 len(rows) - n_new, path)
        ok = ok and good
    return 0 if ok else 1


def _inputs(cfg, args, root):
    paths = list(args.inputs)
    if not paths:
        paths = [_sweep_path(root, n) for n in cfg.ramp_names()]
    expanded = []
    for p in paths:
        hits = sorted(glob.glob(p))
        expanded.extend(hits if hits else [p])
    for p in expanded:
        if not os.path.exists(p):
            raise UsageError(f"input {p} does not exist")
    return expanded


def _load_curve(cfg, path):
    """(name, ScalingCurve, all_converged) of a sweep file matching ``cfg``."""
    table = csvio.read(path)
    if table.meta.get("kind") != "sweep":
        raise UsageError(f"{path} is not a sweep file")
    name = table.meta.get("ramp", "")
    if name not in cfg.ramp_names():
        raise csvio.FingerprintMismatch(f"{path}: ramp {name!r} is not in the configuration")
    csvio.check_fingerprint(table, cfg.fingerprint(name), path)
    tf = np.array(table.column("t_f"), dtype=float)
    E = np.array(table.column("E"), dtype=float)
    conv = np.array(table.column("converged"), dtype=float) == 1.0
    keep = conv & np.isfinite(E) & (E > 0)
    t0 = cfg.analysis.get("t0", 1.0)
    curve = ScalingCurve(tf[keep], E[keep], {"ramp": name, "path": path}, t0)
    return name, curve, bool(np.all(conv))


def cmd_fit(cfg: ExperimentConfig, args) -> int:
    model = cfg.model_spec()
    bath = cfg.bath_params()
    root = output_root(args, cfg)
    window = cfg.analysis.get("window")
    cols = ["ramp", "class", "zeta_pred", "zeta_hat", "prefactor",
            "residual_rms", "window_lo", "window_hi", "n"]
    rows, report = [], []
    ok = True
    for path in _inputs(cfg, args, root):
        name, curve, conv = _load_curve(cfg, path)
        ok = ok and conv
        ramp = cfg.ramp_spec(name)
        try:
            cls, zp = class_and_exponent(ramp, model, bath)
        except UnsupportedRegimeError:
            cls, zp = class_and_exponent(ramp, model, bath, coherent=True)[0], float("nan")
        w = tuple(window) if window else default_window(curve)
        f = fit_power_law(curve, w)
        rows.append([name, cls.value, zp, f.zeta_hat, f.prefactor,
                     f.residual_rms, f.window[0], f.window[1], f.n])
        report.append(f"{name}: class {cls.value}  zeta_hat = {f.zeta_hat:.6f}  "
                      f"predicted = {zp:.6f}  window = [{f.window[0]:.6g}, "
                      f"{f.window[1]:.6g}]  n = {f.n}")
    path = os.path.join(root, "fit.csv")
    csvio.write(path, cols, rows, _meta("fit", cfg), cfg)
    _report(report, os.path.join(root, "fit.txt"))
    plot = ["# sweeps with fitted power laws", "set datafile separator ','",
            "set logscale xy", "set xlabel 't_f'", "set ylabel 'E'"]
    items = []
    for r in rows:
        items.append(f"'sweep_{r[0]}.csv' using 1:2 with points title '{r[0]}'")
        items.append(f"{r[4]!r}*x**(-{r[3]!r}) with lines notitle")
    plot.append("plot " + ", ".join(items))
    _write_gnuplot(os.path.join(root, "fit.gp"), plot)
    return 0 if ok else 1


def cmd_collapse(cfg: ExperimentConfig, args) -> int:
    model = cfg.model_spec()
    bath = cfg.bath_params()
    opts = cfg.dynamics_options(args.threads)
    root = output_root(args, cfg)
    t0 = cfg.analysis.get("t0", 1.0)
    curves, zetas, Ds, names, sources = [], [], [], [], []
    ok = True
    for path in _inputs(cfg, args, root):
        name, curve, conv = _load_curve(cfg, path)
        ok = ok and conv
        ramp = cfg.ramp_spec(name)
        cls, z = class_and_exponent(ramp, model, bath)
        v_mu, v_T = collapse_velocities(ramp, cls, t0)
        D = fixed_velocity_density(
            v_mu, v_T, ramp.alpha, ramp.beta, bath.gamma,
            collapse_kappa(opts.kappa, bath.s), model, bath,
            replace(opts, use_local=True))
        if D.converged:
            D_val, src = D.D, "fixed_velocity"
        else:
            # fall back to the intercept of the slowest-decade fit, labelled
            f = fit_power_law(curve, default_window(curve))
            D_val, src = f.prefactor, "fit_intercept"
            log.warning("ramp %s: fixed-velocity ladder did not converge (%s);"
                        " using the fit intercept", name, D.trend)
            ok = False
        curves.append(curve)
        zetas.append(z)
        Ds.append(D_val)
        sources.append(src)
        names.append(name)
    window = cfg.analysis.get("window")
    res = collapse(curves, zetas, Ds, tuple(window) if window else None,
                   int(cfg.analysis.get("n_bins", 50)))
    rows = []
    for name, c, x, y, z, D, src in zip(names, curves, res.x, res.y, zetas,
                                        Ds, sources):
        for tf, xi, yi in zip(c.t_f, x, y):
            rows.append([name, float(tf), float(xi), float(yi), z, D, src])
    path = os.path.join(root, "collapse.csv")
    csvio.write(path, ["ramp", "t_f", "x", "y", "zeta", "D", "D_source"], rows,
                _meta("collapse", cfg, spread=repr(res.spread),
                      slope=repr(res.slope),
                      window=f"{res.window[0]!r} {res.window[1]!r}"), cfg)
    _report([f"curves: {len(curves)}",
             f"window: [{res.window[0]:.6g}, {res.window[1]:.6g}]",
             f"spread: {res.spread:.6g}",
             f"slope: {res.slope:.6g}"], os.path.join(root, "collapse.txt"))
    plot = ["# collapsed curves: log(E/D)/zeta against log(t0/t_f)",
            "set datafile separator ','",
            "set xlabel 'log(t0/t_f)'", "set ylabel 'log(E/D)/zeta'"]
    items = [f"'collapse.csv' using ((strcol(1) eq '{n}') ? $3 : 1/0):4 "
             f"with linespoints title '{n}'" for n in names]
    items.append("x with lines dt 2 title 'slope 1'")
    plot.append("plot " + ", ".join(items))
    _write_gnuplot(os.path.join(root, "collapse.gp"), plot)
    return 0 if ok else 1


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    model = cfg.model_spec()
    bath = cfg.bath_params()
    opts = cfg.dynamics_options(args.threads)
    root = output_root(args, cfg)
    a_list = cfg.analysis.get("a")
    pairs = list(zip(a_list, cfg.analysis["b"])) if a_list else list(DEFAULT_AB)
    names = cfg.ramp_names()
    if not names:
        raise UsageError("no ramp configured")
    rows, report = [], []
    ok = True
    for name in names:
        t_f = _single_tf(cfg, name)
        ramp = cfg.ramp_spec(name, t_f)
        for a, b in pairs:
            r = verify_scaling_identity(ramp, model, bath, opts, a, b)
            good = r.converged and r.residual < IDENTITY_TOL
            ok = ok and good
            rows.append([name, t_f, a, b, r.lhs, r.rhs, r.residual,
                         int(r.converged)])
            report.append(f"{name} (a, b) = ({a:g}, {b:g}): residual = "
                          f"{r.residual:.3e}  {'ok' if good else 'FAIL'}")
    path = os.path.join(root, "verify.csv")
    csvio.write(path, ["ramp", "t_f", "a", "b", "lhs", "rhs", "residual",
                       "converged"], rows, _meta("verify", cfg), cfg)
    _report(report, os.path.join(root, "verify.txt"))
    _write_gnuplot(os.path.join(root, "verify.gp"), [
        "# scaling-identity residuals", "set datafile separator ','",
        "set logscale y", "set ylabel 'relative residual'",
        f"set arrow from graph 0, first {IDENTITY_TOL!r} to graph 1, first "
        f"{IDENTITY_TOL!r} nohead dt 2",
        "plot 'verify.csv' using 0:7:xtic(1) with points notitle"])
    return 0 if ok else 1


COMMANDS = {"predict": cmd_predict, "ramp": cmd_ramp, "sweep": cmd_sweep,
            "fit": cmd_fit, "collapse": cmd_collapse, "verify": cmd_verify}


# -- RNG guard -------------------------------------------------------------------

def _forbid_rng():
    """Make any random-number generation raise for the rest of the process."""
    import random

    def refuse(*_a, **_k):
        raise RuntimeError("random number generation attempted under --seedless")

    for mod, attrs in ((random, ("random", "seed", "randint", "uniform",
                                 "gauss", "shuffle", "choice")),
                       (np.random, ("default_rng", "seed", "random", "rand",
                                    "randn", "uniform", "normal", "shuffle",
                                    "choice", "RandomState", "Generator"))):
        for a in attrs:
            if hasattr(mod, a):
                setattr(mod, a, refuse)


# -- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kzopen",
        description="Kibble-Zurek ramps in open quadratic chains (batch mode).")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH",
                        help="experiment configuration file")
    common.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (default: $KZOPEN_OUT, "
                             "output.directory, or .)")
    common.add_argument("--threads", type=int, default=None, metavar="N",
                        help="worker threads (default: available cores)")
    common.add_argument("--seedless", action="store_true",
                        help="fail if any random number generator is used")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"predict": "print ramp class and predicted exponent",
             "ramp": "E(t) along single ramps",
             "sweep": "E(t_f) over the sweep (resumable)",
             "fit": "power-law fits of sweep files",
             "collapse": "data collapse of sweep files",
             "verify": "check the (a, b) scaling identity"}
    for name, h in helps.items():
        sp = sub.add_parser(name, parents=[common], help=h)
        if name in ("fit", "collapse"):
            sp.add_argument("inputs", nargs="*",
                            help="sweep CSV files (default: the config's sweeps)")
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "inputs"):
        args.inputs = []
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    if args.seedless:
        _forbid_rng()
    try:
        cfg = ExperimentConfig.load(args.config)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, UsageError, csvio.FingerprintMismatch,
            AnalysisError, OSError) as exc:
        print(f"kzopen {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except UnsupportedRegimeError as exc:
        print(f"kzopen {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
