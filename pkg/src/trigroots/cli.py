"""Command-line entry point binding the simulation and analysis modules.

Commands mirror the package layout: ``cg`` (slope quadrature), ``simulate``
(one Monte Carlo experiment), ``sweep`` (slope-vs-n series with CSV/SVG
output), ``scaling`` (variance growth table), ``kacrice-audit`` (scan vs
delta-integral agreement), ``conditions`` (non-resonance reports and the
bad-pair sweep), ``charfn`` (decay scan), ``smallball`` (ball-probability
scan), ``edgeworth`` (corrector limit tables), ``verify`` (the acceptance
suite).  Every artifact embeds the package version, the seed, and a hash
of the resolved configuration; records are JSON, tables are CSV.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

import trigroots
from trigroots import acceptance, ensemble
from trigroots.cganalytic import CgQuadratureConfig, compute_cg
from trigroots.charprobe import decay_scan, small_ball_mc, smallball_1d_scan
from trigroots.diophantine import build_D, check_condition_st, check_condition_t
from trigroots.edgeworth import c_n_alpha, gauss_expect_psi_H, gamma_terms
from trigroots.ensemble import parse_distribution
from trigroots.mcstats import (
    run_experiment,
    scaling_check,
    slope_rows,
    slope_series,
)
from trigroots.polyeval import FULL, WindowSpec
from trigroots.rootcount import count_kacrice, count_roots

ENV_THREADS = "TRIGROOTS_THREADS"


def _default_threads() -> int:
    return int(os.environ.get(ENV_THREADS, "1"))


#: keys with no effect on computed results, excluded from the config hash
_VOLATILE_KEYS = {"threads", "out", "svg", "roots_csv"}


def _config_hash(cfg: dict) -> str:
    semantic = {k: v for k, v in cfg.items() if k not in _VOLATILE_KEYS}
    return hashlib.sha256(
        json.dumps(semantic, sort_keys=True).encode()).hexdigest()[:16]


def _meta(cfg: dict) -> dict:
    return {"build": f"trigroots-{trigroots.__version__}",
            "seed": cfg.get("seed"),
            "config_hash": _config_hash(cfg)}


def _emit_json(payload: dict, path: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    print(text)


def _emit_csv(rows: list[dict], path: str | None, cfg: dict):
    if not rows:
        return
    cols = list(rows[0].keys())
    meta = _meta(cfg)
    lines = [f"# build={meta['build']} seed={meta['seed']} config_hash={meta['config_hash']}"]
    out = [",".join(cols)]
    for r in rows:
        out.append(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c])
                            for c in cols))
    text = "\n".join(lines + out) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def write_sweep_svg(rows: list[dict], path: str):
    """Minimal line chart of var/n against n, one polyline per ensemble."""
    series: dict[str, list] = {}
    for r in rows:
        series.setdefault(r["dist"], []).append((r["n"], r["var_over_n"]))
    W, H, pad = 640, 400, 50
    xs = [n for pts in series.values() for n, _ in pts]
    ys = [v for pts in series.values() for _, v in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys) * 0.9, max(ys) * 1.1

    def sx(x):
        return pad + (W - 2 * pad) * (x - x0) / max(x1 - x0, 1e-12)

    def sy(y):
        return H - pad - (H - 2 * pad) * (y - y0) / max(y1 - y0, 1e-12)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>']
    for i, (name, pts) in enumerate(sorted(series.items())):
        pl = " ".join(f"{sx(n):.1f},{sy(v):.1f}" for n, v in pts)
        c = colors[i % len(colors)]
        parts.append(f'<polyline points="{pl}" fill="none" stroke="{c}" stroke-width="2"/>')
        parts.append(f'<text x="{pad}" y="{pad + 16 * i}" fill="{c}" font-size="13">{name}</text>')
    parts.append(f'<text x="{W/2:.0f}" y="{H - 12}" font-size="12" text-anchor="middle">n</text>')
    parts.append(f'<text x="14" y="{H/2:.0f}" font-size="12" transform="rotate(-90 14 {H/2:.0f})">variance / n</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def _add_common(p):
    p.add_argument("--seed", type=int, default=2026)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default ${ENV_THREADS} or 1)")
    p.add_argument("--out", type=str, default=None, help="output file path")
    p.add_argument("--config", type=str, default=None,
                   help="JSON file of defaults, overridden by flags")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="trigroots",
        description="Monte Carlo and quadrature laboratory for real roots "
                    "of random trigonometric polynomials")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cg", help="slope constant by adaptive quadrature")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--tmax", type=float, default=1e4)
    p.add_argument("--t0", type=float, default=0.05)
    _add_common(p)

    p = sub.add_parser("simulate", help="one Monte Carlo experiment")
    p.add_argument("--dist", type=str, default="gaussian")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--window", choices=["full", "half"], default="full")
    _add_common(p)

    p = sub.add_parser(
        "sweep", help="variance-slope series over n (CSV/SVG)",
        epilog="CSV columns: dist, n, var_over_n, se, mean, se_mean, trials")
    p.add_argument("--dist", type=str, default="gaussian,rademacher",
                   help="comma-separated ensemble list")
    p.add_argument("--n", type=str, default="64,128,256", help="comma-separated n list")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--window", choices=["full", "half"], default="full")
    p.add_argument("--svg", type=str, default=None, help="also write an SVG chart")
    _add_common(p)

    p = sub.add_parser(
        "scaling", help="variance growth table over n",
        epilog="CSV columns: dist, n, variance, var_over_n, var_over_n2, "
               "se_variance")
    p.add_argument("--dist", type=str, default="gaussian")
    p.add_argument("--n", type=str, default="32,128,512")
    p.add_argument("--trials", type=int, default=2000)
    _add_common(p)

    p = sub.add_parser(
        "kacrice-audit", help="scan vs delta-integral agreement",
        epilog="roots CSV columns: trial_index, root, residual")
    p.add_argument("--dist", type=str, default="gaussian")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--roots-csv", type=str, default=None,
                   help="dump per-sample refined roots to CSV")
    _add_common(p)

    p = sub.add_parser(
        "conditions", help="non-resonance checks / bad-pair sweep",
        epilog="sweep CSV columns: n, eps, tau, intervals, bad_fraction")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--pair", type=float, nargs=2, default=None,
                   metavar=("S", "T"), help="check one (s, t) pair")
    p.add_argument("--t", type=float, default=None, help="check one point")
    p.add_argument("--sweep", type=str, default=None,
                   help="comma-separated n list for a bad-fraction CSV")
    _add_common(p)

    p = sub.add_parser(
        "charfn", help="characteristic-function decay scan",
        epilog="CSV columns: radius, worst_log_abs, bound_log, in_regime")
    p.add_argument("--dist", type=str, default="rademacher")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--cstar", type=float, default=1.0)
    p.add_argument("--radii", type=int, default=12)
    p.add_argument("--directions", type=int, default=32)
    _add_common(p)

    p = sub.add_parser(
        "smallball", help="ball-probability Monte Carlo scan",
        epilog="CSV columns: center, probability, se[, p_over_delta2]")
    p.add_argument("--dist", type=str, default="rademacher")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--one-d", action="store_true", help="scan P_n(t) alone")
    _add_common(p)

    p = sub.add_parser("edgeworth", help="corrector limit tables")
    p.add_argument("--check", choices=["cn-limits", "psi-limits", "q-normalization"],
                   default="cn-limits")
    p.add_argument("--dist", type=str, default="rademacher")
    p.add_argument("--n", type=int, default=100000)
    _add_common(p)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--only", type=str, default=None,
                   help="comma-separated criterion ids")
    _add_common(p)
    return ap


def _resolve(args, argv) -> dict:
    """Merge precedence: parser defaults < config file < explicit flags."""
    cfg = {k: v for k, v in vars(args).items() if k != "config"}
    if getattr(args, "config", None):
        explicit = set()
        for k in cfg:
            flag = "--" + k.replace("_", "-")
            if flag in argv:
                explicit.add(k)
        for k, v in json.loads(Path(args.config).read_text()).items():
            if k not in explicit:
                cfg[k] = v
    if cfg.get("threads") is None:
        cfg["threads"] = _default_threads()
    return cfg


def _cmd_cg(cfg):
    res = compute_cg(CgQuadratureConfig(t0=cfg["t0"], tail_start=cfg["tmax"],
                                        abs_tol=cfg["tol"]))
    _emit_json({"meta": _meta(cfg), "value": res.value,
                "error_estimate": res.error_estimate,
                "panels": res.panels, "evaluations": res.evaluations,
                "integral": res.integral, "tail": res.tail,
                "envelope": list(res.envelope)}, cfg.get("out"))
    return 0


def _cmd_simulate(cfg):
    dist = parse_distribution(cfg["dist"])
    window = WindowSpec(cfg["window"])
    cg = acceptance.GAUSSIAN_SLOPE if window.kind == "full" else None
    rec = run_experiment(dist, cfg["n"], window, cfg["trials"], cfg["seed"],
                         parallelism=cfg["threads"], cg=cg)
    _emit_json({"meta": _meta(cfg), "record": rec.to_dict()}, cfg.get("out"))
    return 0


def _cmd_sweep(cfg):
    n_list = [int(x) for x in str(cfg["n"]).split(",")]
    rows = []
    for name in cfg["dist"].split(","):
        dist = parse_distribution(name.strip())
        window = WindowSpec(cfg["window"])
        cg = acceptance.GAUSSIAN_SLOPE if window.kind == "full" else None
        recs = slope_series(dist, n_list, cfg["trials"], cfg["seed"], window,
                            parallelism=cfg["threads"], cg=cg)
        rows.extend(slope_rows(recs))
    _emit_csv(rows, cfg.get("out"), cfg)
    if cfg.get("svg"):
        write_sweep_svg(rows, cfg["svg"])
    return 0


def _cmd_scaling(cfg):
    dist = parse_distribution(cfg["dist"])
    n_list = [int(x) for x in str(cfg["n"]).split(",")]
    rows = scaling_check(dist, n_list, cfg["trials"], cfg["seed"],
                         parallelism=cfg["threads"])
    _emit_csv(rows, cfg.get("out"), cfg)
    return 0


def _cmd_kacrice_audit(cfg):
    dist = parse_distribution(cfg["dist"])
    agree = flagged = 0
    root_rows = []
    for trial in range(cfg["trials"]):
        s = ensemble.sample(dist, cfg["n"], cfg["seed"], trial)
        kr = count_kacrice(s, FULL, delta=cfg["delta"])
        if abs(kr.value - kr.root_count) < 1e-3:
            agree += 1
        if kr.flagged:
            flagged += 1
        if cfg.get("roots_csv"):
            from trigroots.rootcount import roots_csv_rows
            rr = count_roots(s, FULL)
            root_rows.extend({"trial_index": a, "root": b, "residual": c}
                             for a, b, c in roots_csv_rows(rr, trial))
    if cfg.get("roots_csv"):
        _emit_csv(root_rows, cfg["roots_csv"], cfg)
    _emit_json({"meta": _meta(cfg), "trials": cfg["trials"], "agree": agree,
                "flagged": flagged, "delta": cfg["delta"]}, cfg.get("out"))
    return 0 if agree >= 0.99 * cfg["trials"] else 1


def _cmd_conditions(cfg):
    payload = {"meta": _meta(cfg), "n": cfg["n"], "tau": cfg["tau"]}
    if cfg.get("t") is not None:
        r = check_condition_t(cfg["n"], cfg["t"], cfg["tau"])
        payload["point"] = dataclasses.asdict(r)
    if cfg.get("pair") is not None:
        s, t = cfg["pair"]
        r = check_condition_st(cfg["n"], s, t, cfg["tau"])
        payload["pair"] = dataclasses.asdict(r)
    if cfg.get("sweep"):
        rows = []
        for n in (int(x) for x in cfg["sweep"].split(",")):
            D = build_D(n, cfg["eps"], cfg["tau"])
            rows.append({"n": n, "eps": cfg["eps"], "tau": cfg["tau"],
                         "intervals": D.interval_count,
                         "bad_fraction": D.bad_fraction})
        _emit_csv(rows, cfg.get("out"), cfg)
        return 0
    if "point" not in payload and "pair" not in payload:
        D = build_D(cfg["n"], cfg["eps"], cfg["tau"])
        payload["region"] = {"intervals": D.interval_count,
                             "total_pairs": D.total_pairs,
                             "bad_pairs": D.bad_pairs,
                             "bad_fraction": D.bad_fraction}
    _emit_json(payload, cfg.get("out"))
    return 0


def _cmd_charfn(cfg):
    dist = parse_distribution(cfg["dist"])
    n = cfg["n"]
    t = cfg["t"] if cfg.get("t") is not None else acceptance._good_t(n, cfg["tau"])
    rep = decay_scan(n, t, dist, tau=cfg["tau"], c_star=cfg["cstar"],
                     radii_count=cfg["radii"],
                     directions_per_radius=cfg["directions"],
                     seed=cfg["seed"], s=cfg.get("s"))
    rows = [{"radius": float(r), "worst_log_abs": float(w),
             "bound_log": float(b), "in_regime": bool(f)}
            for r, w, b, f in zip(rep.radii, rep.worst_log_abs,
                                  rep.bound_log, rep.regime_flags)]
    _emit_csv(rows, cfg.get("out"), cfg)
    return 0


def _cmd_smallball(cfg):
    dist = parse_distribution(cfg["dist"])
    n = cfg["n"]
    t = cfg["t"] if cfg.get("t") is not None else acceptance._good_t(n)
    if cfg.get("one_d"):
        res = smallball_1d_scan(n, t, dist, cfg["delta"], cfg["trials"], cfg["seed"])
        rows = [{"center": float(c), "probability": float(p), "se": float(s)}
                for c, p, s in zip(res.centers, res.probabilities, res.ses)]
    else:
        rows = []
        for a in np.linspace(-1.0, 1.0, 9):
            est = small_ball_mc(n, t, dist, np.array([a, 0.0]), cfg["delta"],
                                cfg["trials"], cfg["seed"], force=True)
            rows.append({"center": float(a), "probability": est.probability,
                         "se": est.se,
                         "p_over_delta2": est.probability / cfg["delta"]**2})
    _emit_csv(rows, cfg.get("out"), cfg)
    return 0


def _cmd_edgeworth(cfg):
    dist = parse_distribution(cfg["dist"])
    n = cfg["n"]
    check = cfg["check"]
    rows = []
    if check == "cn-limits":
        m4 = ensemble.moments(dist).m4
        t_arg = math.pi * (math.sqrt(2) - 1.0) * n
        s_arg = math.pi * (math.sqrt(3) - 1.0) * n
        for (i, j), coeff in acceptance.CN_CLASS_TARGET.items():
            target = coeff * (m4 - 3.0)
            v = c_n_alpha(n, t_arg, dist, (i, i, j, j), s=s_arg)
            rows.append({"alpha": f"({i},{i},{j},{j})", "computed": v,
                         "target": target, "error": abs(v - target)})
    elif check == "psi-limits":
        for (i, j) in ((1, 3), (1, 4), (2, 3), (2, 4)):
            target = (1 / (3 * math.pi**2)) * (-1) ** (i + j)
            v = gauss_expect_psi_H((i, i, j, j), delta=None)
            rows.append({"alpha": f"({i},{i},{j},{j})", "computed": v,
                         "target": target, "error": abs(v - target)})
    else:  # q-normalization: E Q = 1 since every corrector is mean-zero
        t_arg = math.pi * (math.sqrt(2) - 1.0) * n
        terms = gamma_terms(min(n, 2000), t_arg, dist, np.zeros(2))
        nodes, weights = np.polynomial.hermite.hermgauss(64)
        w = nodes * math.sqrt(2.0)
        mean_q = 0.0
        for wi, xi in zip(weights, w):
            for wj, xj in zip(weights, w):
                mean_q += wi * wj * terms.q_n2_at(np.array([xi, xj]))
        mean_q /= math.pi
        rows.append({"alpha": "E[Q_2]", "computed": mean_q, "target": 1.0,
                     "error": abs(mean_q - 1.0)})
    _emit_json({"meta": _meta(cfg), "check": check, "table": rows}, cfg.get("out"))
    return 0


def _cmd_verify(cfg):
    only = None
    if cfg.get("only"):
        only = {int(x) for x in str(cfg["only"]).split(",")}
    report = acceptance.run_all(seed=cfg["seed"], parallelism=cfg["threads"],
                                only=only, progress=print)
    payload = json.loads(report.to_json(include_runtimes=False))
    payload["meta"] = _meta(cfg)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text + "\n")
    print(text)
    return 0 if report.all_passed else 1


_COMMANDS = {
    "cg": _cmd_cg,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "scaling": _cmd_scaling,
    "kacrice-audit": _cmd_kacrice_audit,
    "conditions": _cmd_conditions,
    "charfn": _cmd_charfn,
    "smallball": _cmd_smallball,
    "edgeworth": _cmd_edgeworth,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    args = build_parser().parse_args(argv)
    cfg = _resolve(args, list(argv))
    try:
        return _COMMANDS[args.command](cfg)
    except (ValueError, RuntimeError) as exc:
        print(json.dumps({"error": str(exc), "command": args.command}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
