"""``gkp-forge`` command line.

    gkp-forge <command> [--config run.json] [--set key=value ...] [--out DIR]

Each command reads a flat JSON object; keys not known to the command are a
configuration error.  ``--set`` values are parsed as JSON when possible
(``--set steps=100 --set model='"first_order"'`` or simply ``model=first_order``).
Every CSV starts with a ``#`` line carrying the artifact version and the
SHA-256 digest of the effective configuration, which is also written to
``<out>/config.<command>.json``.

Exit codes: 0 success, 2 configuration error, 3 non-finite loss, 4 solver
failure, 5 truncation failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import reference as ref
from .algebra import FMatrix, pauli_expectations
from .codewords import (
    InfeasibleRangeError,
    PerturbationSpec,
    best_conventional,
    conventional_pair,
    robustness_point,
)
from .fock import BLOCH_LABELS, TruncationError, bloch_states, codeword_vector_auto, wigner_grid
from .loss import default_grid, l_eg, l_er_bar, l_er_values, l_st, l_st_terms
from .noise import NoiseScale
from .optimizer import NonFiniteLossError, TrainConfig, codes_from_checkpoint, load_checkpoint, save_checkpoint, train
from .recovery import (
    NOISE_MODELS,
    TraceDriftError,
    full_entanglement_fidelity,
    multi_cycle,
    optimal_recovery,
    state_fidelities,
    transpose_recovery,
)
from .sdp import SDPError

EXIT_CONFIG, EXIT_NAN, EXIT_SOLVER, EXIT_TRUNC = 2, 3, 4, 5


class ConfigError(ValueError):
    pass


class SolverFailure(RuntimeError):
    pass


# -- configuration ------------------------------------------------------------------

_CODE = {"code": "reference", "M": 10, "zeta": None, "checkpoint": None}
_NOISE = {"kappa_tau": 0.0004, "kappa_phi_tau": 0.0004 / 1.5, "model": "exact", "n_trunc": 300}
_GRID = {"grid_points": 6, "grid_max": 0.005}

DEFAULTS = {
    "optimize": {
        **{k: v for k, v in TrainConfig().__dict__.items()},
        "checkpoint_name": "checkpoint.json",
    },
    "sweep": {
        "axis": "zeta",
        "M": 10,
        "r": 1.1,
        "start": 0.1,
        "stop": 0.6,
        "num": 21,
        "values": None,
        "epsilons": [0.005, 0.01, 0.015, 0.02],
        "draws": 100,
        "seed": 0,
        "checkpoint": None,
        "write_baseline": True,
        **_GRID,
    },
    "evaluate": {**_CODE, "r": 1.1, "f": None, "conventional_M": 10, **_GRID},
    "recover": {**_CODE, **_NOISE, "method": "both", "r": 1.1},
    "simulate": {**_CODE, **_NOISE, "r": 1.1, "cycles": 50, "compare_conventional": True, "conventional_M": 10, "trace_state": "+"},
    "wigner": {**_CODE, "r": 1.1, "q_min": -7.0, "q_max": 7.0, "points": 281, "n_trunc": 300, "boundary_tol": 1e-3, "strict": False},
    "verify": {"seed": 0, "codes": 5},
    "report": {},
}


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(command: str, path: str | None, overrides: list[str]) -> dict:
    cfg = dict(DEFAULTS[command])
    supplied = {}
    if path:
        try:
            with open(path) as fh:
                supplied = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(supplied, dict):
            raise ConfigError("config file must hold a JSON object")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        supplied[k.strip()] = _parse_value(v)
    unknown = sorted(set(supplied) - set(cfg))
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
    cfg.update(supplied)
    _validate(command, cfg)
    return cfg


def _validate(command, cfg):
    if "model" in cfg and cfg["model"] not in NOISE_MODELS:
        raise ConfigError(f"model must be one of {NOISE_MODELS}")
    if "code" in cfg and cfg["code"] not in ("reference", "reference_real", "conventional", "checkpoint"):
        raise ConfigError(f"unknown code source {cfg['code']!r}")
    if cfg.get("code") == "checkpoint" and not cfg.get("checkpoint"):
        raise ConfigError("code=checkpoint needs a checkpoint path")
    if command == "sweep":
        if cfg["axis"] not in ("zeta", "r", "M", "epsilon"):
            raise ConfigError(f"unknown sweep axis {cfg['axis']!r}")
        if cfg["axis"] == "epsilon":
            if not cfg["epsilons"]:
                raise ConfigError("empty epsilon list")
        elif cfg["values"] is None and (cfg["num"] < 1 or cfg["stop"] < cfg["start"]):
            raise ConfigError("empty sweep range")
        elif cfg["values"] is not None and len(cfg["values"]) == 0:
            raise ConfigError("empty sweep range")
    if command == "recover" and cfg["method"] not in ("sdp", "transpose", "both"):
        raise ConfigError("method must be sdp, transpose or both")
    if command == "optimize":
        try:
            TrainConfig(**{k: cfg[k] for k in TrainConfig().__dict__})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    for key in ("kappa_tau", "kappa_phi_tau"):
        if key in cfg and (not isinstance(cfg[key], (int, float)) or cfg[key] < 0):
            raise ConfigError(f"{key} must be a non-negative number")


def config_digest(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()


def thread_count() -> int:
    env = os.environ.get("GKP_FORGE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"GKP_FORGE_THREADS={env!r} is not an integer") from exc
        if n < 1:
            raise ConfigError("GKP_FORGE_THREADS must be at least 1")
        return n
    return os.cpu_count() or 1


class Output:
    def __init__(self, out_dir, command, cfg):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.cfg = cfg
        self.digest = config_digest(cfg)
        self.header = f"# gkp-forge {__version__} config_sha256={self.digest}"
        (self.dir / f"config.{command}.json").write_text(json.dumps(cfg, indent=1, sort_keys=True, default=str))

    def csv(self, name, fieldnames, rows):
        path = self.dir / name
        with open(path, "w", newline="") as fh:
            fh.write(self.header + "\n")
            w = csv.DictWriter(fh, fieldnames=fieldnames)
            w.writeheader()
            for row in rows:
                w.writerow(row)
        return path

    def json(self, name, data):
        path = self.dir / name
        path.write_text(json.dumps({"version": __version__, "config_sha256": self.digest, **data}, indent=1, default=str))
        return path


# -- code sources ---------------------------------------------------------------------


def _grid(cfg):
    return default_grid(cfg.get("grid_points", 6), cfg.get("grid_max", 0.005))


def resolve_codes(cfg) -> tuple:
    """(code0, code1, f or None, description)."""
    src = cfg["code"]
    if src == "reference":
        c0, c1 = ref.complex_optimum()
        return c0, c1, ref.complex_optimum_f(), "reference complex M=3"
    if src == "reference_real":
        c0, c1 = ref.real_optimum()
        return c0, c1, ref.real_optimum_f(), "reference real M=3"
    if src == "checkpoint":
        c0, c1, f = codes_from_checkpoint(load_checkpoint(cfg["checkpoint"]))
        return c0, c1, f, f"checkpoint {cfg['checkpoint']}"
    return (*conventional_for(cfg, cfg["M"]), None, "conventional")


def conventional_for(cfg, M):
    r = cfg.get("r", 1.1)
    zeta = cfg.get("zeta")
    if zeta is None:
        try:
            zeta = best_conventional(M, r, grid=_grid(cfg))[0].zeta
        except InfeasibleRangeError as exc:
            raise ConfigError(str(exc)) from exc
    return conventional_pair(M, r, float(zeta))


# -- commands -----------------------------------------------------------------------------


def cmd_optimize(cfg, out: Output):
    tc = TrainConfig(**{k: cfg[k] for k in TrainConfig().__dict__})
    rows = []

    def record(step, lr, p):
        rows.append({"step": step, "lr": lr, "l_tot": p.l_tot, "l_er_bar": p.l_er_bar, "l_er_bar_exact": p.l_er_bar_exact, "l_eg": p.l_eg, "l_st": p.l_st})

    t0 = time.time()
    try:
        res = train(tc, record)
    finally:
        out.csv("history.csv", ["step", "lr", "l_tot", "l_er_bar", "l_er_bar_exact", "l_eg", "l_st"], rows)
    digest = save_checkpoint(res, out.dir / cfg["checkpoint_name"])
    f = res.f_params.to_matrix()
    b = res.best_loss
    summary = {
        "l_er_bar": b.l_er_bar_exact,
        "l_eg": b.l_eg,
        "l_st": b.l_st,
        "l_tot": b.l_tot,
        "f": [[z.real, z.imag] for z in (f.f11, f.f12, f.f21, f.f22)],
        "f_er": abs(f.f11 - 1) + abs(f.f22 - 1) + abs(f.f12) + abs(f.f21),
        "checkpoint_sha256": digest,
        "seconds": time.time() - t0,
    }
    baseline = out.dir / "baseline.json"
    if baseline.exists():
        summary["best_conventional_l_er_bar"] = json.loads(baseline.read_text()).get("l_er_bar")
    out.json("optimize_summary.json", summary)
    print(json.dumps(summary, indent=1))


def _sweep_values(cfg):
    if cfg["values"] is not None:
        return [float(v) for v in cfg["values"]]
    return list(np.linspace(cfg["start"], cfg["stop"], int(cfg["num"])))


def cmd_sweep(cfg, out: Output):
    axis, grid, r, M = cfg["axis"], _grid(cfg), cfg["r"], cfg["M"]
    pool = ThreadPoolExecutor(max_workers=thread_count())
    if axis == "zeta":

        def point(z):
            pair = conventional_pair(M, r, z)
            return {"zeta": z, "l_er_bar": l_er_bar(*pair, grid), "l_eg": l_eg(*pair)}

        rows = list(pool.map(point, _sweep_values(cfg)))
        out.csv("sweep_zeta.csv", ["zeta", "l_er_bar", "l_eg"], rows)
        if cfg["write_baseline"]:
            zp, bd = best_conventional(M, r, (min(_sweep_values(cfg)), max(_sweep_values(cfg))), grid)
            out.json("baseline.json", {"M": M, "r": r, "zeta": zp.zeta, "l_er_bar": bd.l_er_bar, "l_eg": bd.l_eg})
    elif axis == "M":

        def point(m):
            m = int(round(m))
            zp, bd = best_conventional(m, r, grid=grid)
            return {"M": m, "zeta": zp.zeta, "l_er_bar": bd.l_er_bar, "l_eg": bd.l_eg}

        rows = list(pool.map(point, _sweep_values(cfg)))
        out.csv("sweep_M.csv", ["M", "zeta", "l_er_bar", "l_eg"], rows)
    elif axis == "r":
        opt = _opt_pair(cfg)
        zeta = best_conventional(M, opt[0].r, grid=grid)[0].zeta

        def point(rr):
            o = tuple(c.__class__(c.u, c.M, rr, c.coeffs) for c in opt)
            c = conventional_pair(M, rr, zeta)
            lo, lc = l_er_bar(*o, grid), l_er_bar(*c, grid)
            db = 10 * math.log10(math.exp(2 * rr))
            return {"r": rr, "squeezing_db": db, "l_er_bar_optimal": lo, "l_er_bar_conventional": lc, "gain": lc / lo}

        rows = list(pool.map(point, _sweep_values(cfg)))
        out.csv("sweep_r.csv", ["r", "squeezing_db", "l_er_bar_optimal", "l_er_bar_conventional", "gain"], rows)
    else:
        opt = _opt_pair(cfg)
        conv = conventional_for({**cfg, "zeta": None}, M)

        def point(e):
            p = robustness_point(opt, conv, PerturbationSpec(float(e), int(cfg["draws"]), int(cfg["seed"])), grid)
            return {"epsilon": e, "mean_gain": p.mean_gain, "var_conventional": p.var_conventional, "var_optimal": p.var_optimal, "variance_ratio": p.variance_ratio}

        rows = list(pool.map(point, cfg["epsilons"]))
        out.csv("sweep_epsilon.csv", ["epsilon", "mean_gain", "var_conventional", "var_optimal", "variance_ratio"], rows)
    pool.shutdown()
    for row in rows:
        print(row)


def _opt_pair(cfg):
    if cfg.get("checkpoint"):
        c0, c1, _ = codes_from_checkpoint(load_checkpoint(cfg["checkpoint"]))
        return c0, c1
    return ref.complex_optimum()


def cmd_evaluate(cfg, out: Output):
    c0, c1, f, desc = resolve_codes(cfg)
    if cfg["f"] is not None:
        f = FMatrix.from_printed(*[complex(a, b) for a, b in cfg["f"]])
    f = f or FMatrix.identity()
    grid = _grid(cfg)
    summary = {"code": desc, "l_er_bar": l_er_bar(c0, c1, grid), "l_eg": l_eg(c0, c1), "l_st": l_st(c0, c1, f), "l_st_terms": l_st_terms(c0, c1, f)}
    p = pauli_expectations(c0, c1, f)
    summary["pauli"] = {
        "z_diag": [z.real for z in p.z_diag],
        "x_offdiag": [z.real for z in p.x_offdiag],
        "z_norms": list(p.z_norms),
        "x_norms": list(p.x_norms),
    }
    conv = conventional_for({**cfg, "zeta": None}, cfg["conventional_M"])
    summary["best_conventional_l_er_bar"] = l_er_bar(*conv, grid)
    summary["gain"] = summary["best_conventional_l_er_bar"] / summary["l_er_bar"]
    pts = np.linspace(0, 0.01, 5)
    g5 = [NoiseScale(float(a), float(b)) for a in pts for b in pts]
    lo, lc = l_er_values(c0, c1, g5), l_er_values(*conv, g5)
    rows = [{"kappa_tau": s.kappa_tau, "kappa_phi_tau": s.kappa_phi_tau, "l_er_optimal": a, "l_er_conventional": b, "gain": b / a} for s, a, b in zip(g5, lo, lc)]
    out.csv("gain_map.csv", ["kappa_tau", "kappa_phi_tau", "l_er_optimal", "l_er_conventional", "gain"], rows)
    out.json("evaluate_summary.json", summary)
    print(json.dumps(summary, indent=1, default=str))


def _recover_one(pair, scale, cfg):
    res = optimal_recovery(pair, scale, cfg["model"], cfg["n_trunc"])
    sol = res.solution
    if not sol.converged or sol.gap > 1e-8:
        raise SolverFailure(f"SDP stopped after {sol.iterations} iterations: gap {sol.gap:.2e}, kkt {sol.kkt_residual:.2e}")
    return res


def cmd_recover(cfg, out: Output):
    scale = NoiseScale(cfg["kappa_tau"], cfg["kappa_phi_tau"])
    c0, c1, _, desc = resolve_codes(cfg)
    res = _recover_one((c0, c1), scale, cfg)
    rows = []
    if cfg["method"] in ("sdp", "both"):
        full = full_entanglement_fidelity(res.channel, res.basis, cfg["model"])
        rows.append({"method": "sdp", **res.state_fidelity, "objective": res.solution.fidelity, "entanglement_full": full})
    if cfg["method"] in ("transpose", "both"):
        tr = transpose_recovery(res.basis)
        full = full_entanglement_fidelity(tr, res.basis, cfg["model"])
        rows.append({"method": "transpose", **state_fidelities(tr, res.basis, cfg["model"]), "objective": res.transpose_fidelity, "entanglement_full": full})
    out.csv("recover.csv", ["method", *BLOCH_LABELS, "objective", "entanglement_full"], rows)
    sol = res.solution
    dump = {
        "code": desc,
        "scale": [scale.kappa_tau, scale.kappa_phi_tau],
        "model": cfg["model"],
        "n_trunc": res.basis.n_trunc,
        "error_kets": res.basis.n_err,
        "X_real": sol.X.real.tolist(),
        "X_imag": sol.X.imag.tolist(),
        "X_eigenvalues": np.linalg.eigvalsh(sol.X).tolist(),
        "fidelity": sol.fidelity,
        "state_fidelity": res.state_fidelity,
        "transpose_fidelity": res.transpose_fidelity,
        "kkt_residual": sol.kkt_residual,
        "duality_gap": sol.gap,
        "constraint_residual": sol.constraint_residual,
        "iterations": sol.iterations,
    }
    out.json("recover_solution.json", dump)
    for row in rows:
        print(row)


def cmd_simulate(cfg, out: Output):
    scale = NoiseScale(cfg["kappa_tau"], cfg["kappa_phi_tau"])
    c0, c1, _, desc = resolve_codes(cfg)
    pairs = {"optimal": (c0, c1)}
    if cfg["compare_conventional"]:
        pairs["conventional"] = conventional_for({**cfg, "zeta": cfg.get("zeta")}, cfg["conventional_M"])
    trace_rows, mean_inf = [], {}
    for name, pair in pairs.items():
        res = _recover_one(pair, scale, cfg)
        V = res.basis.code_vectors
        finals = []
        for label, psi in zip(BLOCH_LABELS, bloch_states(V[:, 0], V[:, 1])):
            pts = multi_cycle(np.outer(psi, psi.conj()), res.channel, scale, cfg["cycles"], cfg["model"], label)
            for p in pts:
                trace_rows.append({"code": name, "cycle": p.cycle, "time": p.time, "state_label": p.state_label, "fidelity": p.fidelity, "phase": p.phase})
            finals.append(pts[-1].fidelity if pts else 1.0)
        mean_inf[name] = 1 - float(np.mean(finals))
    out.csv("simulate_trace.csv", ["code", "cycle", "time", "state_label", "fidelity", "phase"], trace_rows)
    summary = {"code": desc, "cycles": cfg["cycles"], "model": cfg["model"], "mean_infidelity": mean_inf}
    if "conventional" in mean_inf and mean_inf["optimal"] > 0:
        summary["gain"] = mean_inf["conventional"] / mean_inf["optimal"]
    out.json("simulate_summary.json", summary)
    print(json.dumps(summary, indent=1))


def cmd_wigner(cfg, out: Output):
    c0, c1, _, desc = resolve_codes(cfg)
    axis = np.linspace(cfg["q_min"], cfg["q_max"], int(cfg["points"]))
    status = 0
    for code in (c0, c1):
        vec = codeword_vector_auto(code, cfg["n_trunc"])
        g = wigner_grid(vec, axis, axis)
        rows = ({"q": axis[i], "p": axis[j], "w": g.values[i, j]} for i in range(len(axis)) for j in range(len(axis)))
        out.csv(f"wigner_u{code.u}.csv", ["q", "p", "w"], rows)
        if g.outside_mass > cfg["boundary_tol"]:
            print(f"warning: probability {g.outside_mass:.2e} lies outside the window for u={code.u}", file=sys.stderr)
            status = 1 if cfg["strict"] else status
    return status


def cmd_verify(cfg, out: Output):
    from . import verify

    results = verify.run_all(seed=cfg["seed"], n_codes=cfg["codes"])
    out.json("verify.json", {"groups": results})
    for r in results:
        print(json.dumps(r))
    return 0 if all(r["passed"] for r in results) else 1


def cmd_report(cfg, out: Output):
    lines = ["# gkp-forge report", "", f"version {__version__}", ""]
    for path in sorted(out.dir.glob("*_summary.json")) + sorted(out.dir.glob("baseline.json")):
        lines += [f"## {path.stem}", "", "```json", path.read_text().strip(), "```", ""]
    for path in sorted(out.dir.glob("recover.csv")):
        lines += ["## recovery fidelities", "", "```", path.read_text().strip(), "```", ""]
    (out.dir / "report.md").write_text("\n".join(lines))
    print(out.dir / "report.md")


COMMANDS = {
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "evaluate": cmd_evaluate,
    "recover": cmd_recover,
    "simulate": cmd_simulate,
    "wigner": cmd_wigner,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gkp-forge", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a configuration key")
    parser.add_argument("--out", default="gkp_forge_out", help="output directory")
    parser.add_argument("--real-coefficients", action="store_true", help="optimize: clamp imaginary parts to zero")
    parser.add_argument("--method", choices=["sdp", "transpose", "both"], help="recover: recovery construction")
    parser.add_argument("--axis", choices=["zeta", "r", "M", "epsilon"], help="sweep: swept parameter")
    args = parser.parse_args(argv)
    extra = list(args.set)
    if args.real_coefficients:
        extra.append("real_coefficients=true")
    if args.method:
        extra.append(f"method={args.method}")
    if args.axis:
        extra.append(f"axis={args.axis}")
    try:
        cfg = load_config(args.command, args.config, extra)
        thread_count()
        out = Output(args.out, args.command, cfg)
        status = COMMANDS[args.command](cfg, out)
        return int(status or 0)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteLossError, TraceDriftError, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NAN
    except (SolverFailure, SDPError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except TruncationError as exc:
        print(f"truncation failure: {exc}", file=sys.stderr)
        return EXIT_TRUNC


if __name__ == "__main__":
    sys.exit(main())
