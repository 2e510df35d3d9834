"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``), applies flag
overrides, writes its artifacts into ``--out`` and embeds a metadata block
with the package version and a hash of the resolved configuration.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ManesError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


# name -> (type, default, help); default None means required unless noted
P = "params"
COMMANDS = {
    "potential": {
        P: (str, None, "parameter JSON (path or inline object)"),
        "y_min": (float, -1.5, "grid start"), "y_max": (float, 1.5, "grid end"),
        "n": (int, 601, "grid points"),
        "g": (float, 0.0, "coupling for the effective potential"), "m": (float, 0.0, "mean field"),
    },
    "selfconsist": {P: (str, None, "parameter JSON"), "g": (float, None, "coupling"),
                    "B": (float, 0.0, "external field")},
    "free-energy": {P: (str, None, "parameter JSON"), "g": (float, None, "coupling"),
                    "B": (float, 0.0, "external field"), "m_min": (float, -1.0, ""),
                    "m_max": (float, 1.0, ""), "n": (int, 401, "")},
    "bifurcate": {P: (str, None, "symmetric parameter JSON"), "g": (float, None, "coupling"),
                  "h_min": (float, 0.05, ""), "h_max": (float, 0.4, ""), "n": (int, 351, "")},
    "phase-diagnostics": {P: (str, None, "symmetric parameter JSON"), "g": (float, None, "coupling")},
    "hetero": {"assets": (str, None, "CSV with columns mu,sigma,B"), "g": (float, None, ""),
               "h": (float, None, ""), "T": (float, 1.0, "")},
    "simulate": {P: (str, None, "parameter JSON"), "g": (float, None, ""), "N": (int, 500, ""),
                 "steps": (int, 10000, ""), "dt": (float, math.nan, "step (default: automatic)"),
                 "seed": (int, 0, ""), "burn_in": (int, -1, "(default: 20% of steps)"),
                 "init_mean": (float, 0.0, ""), "init_sd": (float, 0.0, "0 gives a point mass"),
                 "record_every": (int, 10, ""), "B": (float, 0.0, "")},
    "mckean-vlasov": {P: (str, None, "parameter JSON"), "g": (float, None, ""),
                      "n_cells": (int, 400, ""), "t_end": (float, 50.0, ""),
                      "init_mean": (float, 0.0, ""), "init_sd": (float, 0.1, ""), "B": (float, 0.0, "")},
    "calibrate": {"quotes": (str, None, "quote CSV"), "side": (str, "puts", "calls or puts"),
                  "h": (float, None, "noise amplitude (not identified by prices)"),
                  "seed": (int, 0, ""), "n_starts": (int, 128, ""), "delta_sigma2": (float, 0.05, "")},
    "price": {P: (str, None, "parameter JSON (barred set; T is the tenor)"),
              "spot": (float, None, ""), "rate": (float, 0.0, ""),
              "strikes": (str, None, "comma separated strikes"), "type": (str, "C", "C or P")},
}


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class Artifacts:
    def __init__(self, meta):
        self.meta = meta
        self.files = {}

    def json(self, name, payload):
        doc = {"metadata": self.meta, **_jsonable(payload)}
        self.files[name] = json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def csv(self, name, header, rows):
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
        self.files[name] = buf.getvalue()

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            tmp = out / (name + ".tmp")
            tmp.write_text(text)
            os.replace(tmp, out / name)


def _load_params(src):
    from .gm_potential import NesParams
    if isinstance(src, dict):
        return NesParams.from_dict(src)
    s = str(src).strip()
    if s.startswith("{"):
        return NesParams.from_dict(json.loads(s))
    with open(s) as fh:
        return NesParams.from_dict(json.load(fh))


def resolve_config(sub, args):
    schema = COMMANDS[sub]
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise InputError("config must be a JSON object")
        unknown = set(loaded) - set(schema) - {"out"}
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}; valid: {sorted(schema)}")
        cfg.update(loaded)
    for name in schema:
        v = getattr(args, name.replace("-", "_"), None)
        if v is not None:
            cfg[name] = v
    for name, (typ, default, _) in schema.items():
        if name not in cfg:
            if default is None:
                raise InputError(f"missing required option --{name.replace('_', '-')}")
            cfg[name] = default
        elif name == P and isinstance(cfg[name], dict):
            continue
        else:
            try:
                cfg[name] = typ(cfg[name])
            except (TypeError, ValueError):
                raise InputError(f"option {name} must be of type {typ.__name__}") from None
    if P in cfg:
        cfg[P] = _load_params(cfg[P]).to_dict()  # record the resolved values
    return cfg


def _metadata(sub, cfg):
    canon = json.dumps(cfg, sort_keys=True, default=str)
    return {"version": __version__, "subcommand": sub, "config": cfg,
            "config_hash": hashlib.sha256(canon.encode()).hexdigest()}


# ---------------------------------------------------------------- handlers

def _run_potential(cfg, art):
    from .gm_potential import NesParams, potential, renormalize, stationary_density
    p = NesParams.from_dict(cfg[P])
    y = np.linspace(cfg["y_min"], cfg["y_max"], cfg["n"])
    V = potential(p, y)
    ps = stationary_density(p).pdf(y)
    if cfg["g"] > 0:
        Veff = potential(renormalize(p, cfg["g"], cfg["m"]).as_nes(), y)
    else:
        Veff = V
    art.csv("potential.csv", ["y", "V", "p_s", "V_eff"], zip(y, V, ps, Veff))


def _roots_payload(res):
    return {"roots": [{"m": r.m, "stability": r.stability, "free_energy": r.free_energy,
                       "curvature": r.curvature, "residual": r.residual} for r in res.roots]}


def _run_selfconsist(cfg, art):
    from .gm_potential import NesParams
    from .mean_field import solve_self_consistency
    res = solve_self_consistency(NesParams.from_dict(cfg[P]), cfg["g"], cfg["B"])
    art.json("selfconsist.json", _roots_payload(res))


def _run_free_energy(cfg, art):
    from .gm_potential import NesParams
    from .mean_field import free_energy
    p = NesParams.from_dict(cfg[P])
    m = np.linspace(cfg["m_min"], cfg["m_max"], cfg["n"])
    F = np.asarray(free_energy(p, cfg["g"], m, cfg["B"]))
    F = F - F[np.argmin(np.abs(m))]
    art.csv("free_energy.csv", ["m", "F"], zip(m, F))


def _run_bifurcate(cfg, art):
    from .gm_potential import NesParams
    from .phase import bifurcation_sweep
    p = NesParams.from_dict(cfg[P])
    rows = []
    for bp in bifurcation_sweep(p, cfg["g"], np.linspace(cfg["h_min"], cfg["h_max"], cfg["n"])):
        if bp.error:
            rows.append((bp.h, "nan", "error", 0))
        for m, st in zip(bp.roots, bp.stable):
            rows.append((bp.h, m, "stable" if st else "unstable", bp.n_roots))
    art.csv("bifurcate.csv", ["h", "m_root", "stability", "n_roots"], rows)


def _run_phase(cfg, art):
    from .gm_potential import NesParams
    from .phase import phase_diagnostics
    d = phase_diagnostics(NesParams.from_dict(cfg[P]), cfg["g"])
    art.json("phase_diagnostics.json", {"h_c": d.h_c, "b": d.b, "beta": d.beta_exponent,
                                        "beta_r2": d.beta_r2, "delta_CH": d.delta_CH, "chi": d.chi,
                                        "h": d.h})


def _run_hetero(cfg, art):
    from .hetero_market import HeterogeneousMarket, linear_response, mean_correlation, solve_local_mean_fields
    with open(cfg["assets"], newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        mu = [float(r["mu"]) for r in rows]
        sigma = [float(r["sigma"]) for r in rows]
        B = [float(r.get("B") or 0.0) for r in rows]
    except (KeyError, ValueError):
        raise InputError("assets CSV needs numeric columns mu,sigma[,B]") from None
    mkt = HeterogeneousMarket(mu, sigma, B, cfg["g"], cfg["h"], cfg["T"])
    m = solve_local_mean_fields(mkt)
    lr = linear_response(mkt)
    N = mkt.N
    off = (lr.C.sum() - np.trace(lr.C)) / (N * (N - 1))
    corr = lr.C / np.sqrt(np.outer(np.diag(lr.C), np.diag(lr.C)))
    art.json("hetero.json", {"m": m, "C_diag": np.diag(lr.C), "mean_A": lr.mean_A,
                             "mean_offdiag_covariance": off,
                             "mean_correlation": (corr.sum() - N) / (N * (N - 1)),
                             "mean_correlation_homogeneous_formula": mean_correlation(lr.mean_A, N)})


def _run_simulate(cfg, art):
    from .dynamics import SimConfig, simulate_particles
    from .gm_potential import NesParams
    p = NesParams.from_dict(cfg[P])
    init = ("point", cfg["init_mean"]) if cfg["init_sd"] <= 0 else ("gaussian", cfg["init_mean"], cfg["init_sd"])
    sc = SimConfig(N=cfg["N"], steps=cfg["steps"], seed=cfg["seed"],
                   dt=None if math.isnan(cfg["dt"]) else cfg["dt"],
                   burn_in=None if cfg["burn_in"] < 0 else cfg["burn_in"], init=init,
                   record_every=cfg["record_every"], B=cfg["B"])
    r = simulate_particles(p, cfg["g"], sc)
    art.csv("simulate.csv", ["t", "m_hat", "var_hat"], zip(r.t, r.m_hat, r.var_hat))
    art.json("simulate_summary.json", {"time_avg_m": r.time_avg_m, "time_avg_var": r.time_avg_var,
                                       "mean_offdiag_cov": r.mean_offdiag_cov,
                                       "m_hat_time_var": r.m_hat_time_var, "n_stationary": r.n_stationary})


def _run_mv(cfg, art):
    from .dynamics import GridConfig, boltzmann_density, evolve_mckean_vlasov, gaussian_on_grid
    from .gm_potential import NesParams
    from .mean_field import solve_self_consistency
    p = NesParams.from_dict(cfg[P])
    grid = GridConfig.default(p, cfg["n_cells"])
    p0 = gaussian_on_grid(grid, cfg["init_mean"], cfg["init_sd"])
    r = evolve_mckean_vlasov(p, cfg["g"], grid, p0, cfg["t_end"], B=cfg["B"])
    roots = solve_self_consistency(p, cfg["g"], cfg["B"]).values
    m_star = min(roots, key=lambda x: abs(x - r.means[-1]))
    target = boltzmann_density(p, cfg["g"], grid, m_star, cfg["B"])
    art.csv("mckean_vlasov.csv", ["t", "mean", "mass"], zip(r.t, r.means, r.masses))
    art.csv("mckean_vlasov_density.csv", ["y", "density", "boltzmann"], zip(r.y, r.density, target))
    art.json("mckean_vlasov_summary.json", {
        "final_mean": r.means[-1], "nearest_root": m_star,
        "l1_to_boltzmann": float(np.sum(np.abs(r.density - target)) * grid.dx),
        "max_mass_step_error": r.max_mass_step_error, "min_density": r.min_density, "dt": r.dt})


def _run_calibrate(cfg, art):
    from .calibration import calibrate, read_quotes_csv
    from .gm_potential import potential
    quotes = read_quotes_csv(cfg["quotes"])
    res = calibrate(quotes, cfg["side"], h=cfg["h"], seed=cfg["seed"], n_starts=cfg["n_starts"],
                    delta_sigma2=cfg["delta_sigma2"])
    art.json("calibrate.json", res.to_dict())
    p = res.params
    s = max(p.sigma1, p.sigma2) * math.sqrt(p.T)
    y = np.linspace(min(p.mu1, p.mu2) * p.T - 4 * s, max(p.mu1, p.mu2) * p.T + 4 * s, 401)
    art.csv("calibrate_potential.csv", ["y", "V_eff"], zip(y, potential(p, y)))


def _run_price(cfg, art):
    from .calibration import price_european
    from .gm_potential import NesParams
    p = NesParams.from_dict(cfg[P])
    if cfg["type"] not in ("C", "P"):
        raise InputError("type must be C or P")
    try:
        K = np.array([float(s) for s in cfg["strikes"].split(",") if s.strip()])
    except ValueError:
        raise InputError("strikes must be a comma-separated list of numbers") from None
    if K.size == 0 or np.any(K <= 0) or cfg["spot"] <= 0:
        raise InputError("strikes and spot must be positive")
    prices = np.atleast_1d(price_european(p, cfg["spot"], cfg["rate"], K, cfg["type"]))
    art.json("price.json", {"strikes": K, "prices": prices, "type": cfg["type"]})


HANDLERS = {"potential": _run_potential, "selfconsist": _run_selfconsist, "free-energy": _run_free_energy,
            "bifurcate": _run_bifurcate, "phase-diagnostics": _run_phase, "hetero": _run_hetero,
            "simulate": _run_simulate, "mckean-vlasov": _run_mv, "calibrate": _run_calibrate,
            "price": _run_price}


def build_parser():
    parser = argparse.ArgumentParser(prog="manes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name, schema in COMMANDS.items():
        sp = subs.add_parser(name)
        sp.add_argument("--config", help="JSON config; flags override its values")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="accepted for reproducibility; results do not depend on it")
        for opt, (typ, default, hlp) in schema.items():
            flag = "--" + opt.replace("_", "-")
            sp.add_argument(flag, dest=opt.replace("-", "_"), type=typ, default=None,
                            help=f"{hlp} (default: {default})" if default is not None else hlp)
    return parser


def _diag(kind, exc):
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    if extra:
        valid = ["--config", "--out", "--threads"] + ["--" + k.replace("_", "-") for k in COMMANDS[args.command]]
        _diag("input", InputError(f"unrecognized arguments {extra}; valid flags: {valid}"))
        return EXIT_INPUT
    try:
        cfg = resolve_config(args.command, args)
        art = Artifacts(_metadata(args.command, cfg))
        HANDLERS[args.command](cfg, art)
    except ManesError as exc:
        _diag("numerical", exc)
        return EXIT_NUMERIC
    except (InputError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        _diag("input", exc)
        return EXIT_INPUT
    art.write(args.out)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
