"""Batch front-end.

Subcommands: norm-info, gamma-table, cost, cost-scan, verify-bounds,
profile, minimize, vortex-study, entropy-check.

Configuration comes from --config JSON files and/or flags (flags override
file values, one-to-one key mapping). Every run prints the rescale factor
kappa and the resolved config; every output file embeds the config hash
and kappa in a comment header. Exit codes: 0 success, 1 input error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import boundary, costs, entropy, fields, norms, profiles
from .costs import NumericalError


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _resolve_config(args, keys) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as f:
            cfg.update(json.load(f))
    for k in keys:
        v = getattr(args, k.replace("-", "_"), None)
        if v is not None:
            cfg[k] = v
    return cfg


def _get_bp(cfg) -> boundary.BoundaryParam:
    nspec = cfg.get("norm", "euclidean")
    if isinstance(nspec, dict):
        norm = norms.norm_from_config(nspec)
    else:
        norm = norms.norm_from_string(str(nspec))
    return boundary.trace_boundary(norm, resolution=int(cfg.get("resolution", 1024)))


def _emit(cfg, payload, out=None):
    text = json.dumps(payload, indent=2, sort_keys=True, default=float)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
    print(text)


def _header(cfg, bp) -> str:
    return f"config_hash={_config_hash(cfg)} kappa={bp.kappa:.17g}"


def _print_resolved(cfg, bp):
    print(f"# resolved config: {json.dumps(cfg, sort_keys=True, default=float)}")
    print(f"# kappa = {bp.kappa:.17g}")


def cmd_norm_info(args) -> int:
    cfg = _resolve_config(args, ["norm", "resolution"])
    bp = _get_bp(cfg)
    _print_resolved(cfg, bp)
    fit = bp.power_type_estimate(sample_count=256)
    _emit(cfg, {
        "norm": bp.norm.name, "kappa": bp.kappa, "perimeter_original": bp.perimeter,
        "perimeter_rescaled": 2.0 * np.pi, "inradius": bp.alpha0,
        "flatness": bp.flatness, "convexity_warning": bp.convexity_warning,
        "power_type_p": fit.p_hat, "power_type_K": fit.K,
        "config_hash": _config_hash(cfg),
    }, args.out)
    return 0


def cmd_gamma_table(args) -> int:
    cfg = _resolve_config(args, ["norm", "resolution"])
    bp = _get_bp(cfg)
    _print_resolved(cfg, bp)
    bp.to_csv(args.out, header_extra=_header(cfg, bp))
    print(f"wrote {args.out}")
    return 0


def cmd_cost(args) -> int:
    cfg = _resolve_config(args, ["norm", "resolution", "theta-minus", "theta-plus",
                                 "lp-n"])
    bp = _get_bp(cfg)
    _print_resolved(cfg, bp)
    jp = costs.make_jump_theta(bp, float(cfg["theta-minus"]), float(cfg["theta-plus"]))
    rep = costs.cost_report(bp, jp, lp_n=int(cfg.get("lp-n", 512)))
    payload = rep.as_dict()
    payload.update({"kappa": bp.kappa, "config_hash": _config_hash(cfg),
                    "theta_minus": jp.theta_minus, "theta_plus": jp.theta_plus})
    _emit(cfg, payload, args.out)
    return 0


def cmd_cost_scan(args) -> int:
    cfg = _resolve_config(args, ["norm", "resolution", "n-base", "n-widths",
                                 "width-min", "width-max", "lp-n", "jobs"])
    bp = _get_bp(cfg)
    _print_resolved(cfg, bp)
    nb = int(cfg.get("n-base", 16))
    nw = int(cfg.get("n-widths", 16))
    wmin = float(cfg.get("width-min", 1e-3))
    wmax = float(cfg.get("width-max", np.pi * 0.999))
    pairs = costs._pair_grid(nb, nw, (wmin, wmax))
    rows = costs.scan_pairs(bp, pairs, lp_n=int(cfg.get("lp-n", 256)),
                            jobs=int(cfg.get("jobs", 1)))
    with open(args.out, "w") as f:
        f.write(f"# {_header(cfg, bp)}\n")
        f.write("theta_minus,theta_plus,c1d,cent,pi,ratio\n")
        for r in rows:
            f.write(",".join(f"{v:.17g}" for v in r) + "\n")
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def cmd_verify_bounds(args) -> int:
    cfg = _resolve_config(args, ["norm", "resolution", "grid", "lp-n", "jobs"])
    bp = _get_bp(cfg)
    _print_resolved(cfg, bp)
    g = int(cfg.get("grid", 16))
    rep = costs.verify_bounds(bp, n_base=g, n_widths=g,
                              lp_n=int(cfg.get("lp-n", 256)),
                              jobs=int(cfg.get("jobs", 1)))
    rep["config_hash"] = _config_hash(cfg)
    _emit(cfg, rep, args.out)
    return 0


def cmd_profile(args) -> int:
    cfg = _resolve_config(args, ["norm", "resolution", "theta-minus", "theta-plus",
                                 "tol"])
    bp = _get_bp(cfg)
    _print_resolved(cfg, bp)
    jp = costs.make_jump_theta(bp, float(cfg["theta-minus"]), float(cfg["theta-plus"]))
    prof = profiles.solve_profile(bp, jp, tol=float(cfg.get("tol", 1e-8)))
    profiles.profile_to_csv(bp, prof, args.out, header_extra=_header(cfg, bp))
    e = profiles.profile_energy(bp, prof)
    print(f"wrote {args.out}")
    print(json.dumps({"profile_energy": e, "c1d": costs.c1d(bp, jp),
                      "endpoint_errors": list(prof.endpoint_errors),
                      "partial": prof.partial}, indent=2))
    return 0


def cmd_minimize(args) -> int:
    cfg = _resolve_config(args, ["norm", "resolution", "theta-minus", "theta-plus",
                                 "grid-n", "eps-cells", "max-iter", "tol"])
    bp = _get_bp(cfg)
    _print_resolved(cfg, bp)
    n = int(cfg.get("grid-n", 128))
    h = 1.0 / n
    eps = float(cfg.get("eps-cells", 8)) * h
    t1, t2 = float(cfg["theta-minus"]), float(cfg["theta-plus"])
    jp = costs.make_jump_theta(bp, t1, t2)
    prof = profiles.solve_profile(bp, jp, tol=1e-8)
    f0 = fields.build_pasted_jump(bp, prof, line_point=(0.5, 0.5),
                                  domain=(0.0, 0.0, 1.0, 1.0), n=n, eps=eps)
    fmin, info = fields.minimize_field(bp, f0, max_iter=int(cfg.get("max-iter", 300)),
                                       tol=float(cfg.get("tol", 1e-10)))
    if args.out:
        fields.save_field(fmin, args.out)
        print(f"wrote {args.out}")
    print(json.dumps({
        "initial_energy": info.energies[0], "final_energy": info.energies[-1],
        "n_iter": info.n_iter, "converged": info.converged,
        "c1d": costs.c1d(bp, jp), "cent": costs.cent(bp, jp),
        "kappa": bp.kappa, "config_hash": _config_hash(cfg),
    }, indent=2))
    return 0


def cmd_vortex_study(args) -> int:
    cfg = _resolve_config(args, ["norm", "resolution", "eps-list", "h-ratio"])
    bp = _get_bp(cfg)
    _print_resolved(cfg, bp)
    eps_list = [float(t) for t in str(cfg.get("eps-list", "0.1,0.05,0.025")).split(",")]
    rep = fields.vortex_decay_study(bp, eps_list,
                                    h_ratio=int(cfg.get("h-ratio", 8)))
    if args.out:
        with open(args.out, "w") as f:
            f.write(f"# {_header(cfg, bp)}\n")
            f.write("eps,energy\n")
            for e, I in rep["rows"]:
                f.write(f"{e:.17g},{I:.17g}\n")
        print(f"wrote {args.out}")
    print(json.dumps({"rows": rep["rows"], "C_fit": rep["C_fit"],
                      "rel_residual": rep["rel_residual"],
                      "config_hash": _config_hash(cfg)}, indent=2))
    return 0


def cmd_entropy_check(args) -> int:
    cfg = _resolve_config(args, ["norm", "resolution", "delta-list"])
    bp = _get_bp(cfg)
    _print_resolved(cfg, bp)
    deltas = [float(t) for t in str(cfg.get("delta-list", "0.2,0.1,0.05")).split(",")]
    xi = bp.gamma_at(1.0)
    rows = []
    for d in deltas:
        e = entropy.heaviside_entropy(bp, xi, d)
        rows.append({"delta": d, "mu_l1": e.mu_l1, "lip_bound": e.lip_bound})
    _emit(cfg, {"heaviside": rows, "kappa": bp.kappa,
                "config_hash": _config_hash(cfg)}, args.out)
    return 0


_COMMANDS = {
    "norm-info": cmd_norm_info,
    "gamma-table": cmd_gamma_table,
    "cost": cmd_cost,
    "cost-scan": cmd_cost_scan,
    "verify-bounds": cmd_verify_bounds,
    "profile": cmd_profile,
    "minimize": cmd_minimize,
    "vortex-study": cmd_vortex_study,
    "entropy-check": cmd_entropy_check,
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anisoag", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--norm", help="euclidean | lp:P | ellipse:A,B")
        sp.add_argument("--resolution", type=int)
        sp.add_argument("--config", help="JSON config file (flags override)")
        sp.add_argument("--out", required=out_required, help="output path")

    sp = sub.add_parser("norm-info"); common(sp)
    sp = sub.add_parser("gamma-table"); common(sp, out_required=True)

    sp = sub.add_parser("cost"); common(sp)
    sp.add_argument("--theta-minus", type=float)
    sp.add_argument("--theta-plus", type=float)
    sp.add_argument("--lp-n", type=int)

    sp = sub.add_parser("cost-scan"); common(sp, out_required=True)
    sp.add_argument("--n-base", type=int)
    sp.add_argument("--n-widths", type=int)
    sp.add_argument("--width-min", type=float)
    sp.add_argument("--width-max", type=float)
    sp.add_argument("--lp-n", type=int)
    sp.add_argument("--jobs", type=int)

    sp = sub.add_parser("verify-bounds"); common(sp)
    sp.add_argument("--grid", type=int)
    sp.add_argument("--lp-n", type=int)
    sp.add_argument("--jobs", type=int)

    sp = sub.add_parser("profile"); common(sp, out_required=True)
    sp.add_argument("--theta-minus", type=float)
    sp.add_argument("--theta-plus", type=float)
    sp.add_argument("--tol", type=float)

    sp = sub.add_parser("minimize"); common(sp)
    sp.add_argument("--theta-minus", type=float)
    sp.add_argument("--theta-plus", type=float)
    sp.add_argument("--grid-n", type=int)
    sp.add_argument("--eps-cells", type=float)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--tol", type=float)

    sp = sub.add_parser("vortex-study"); common(sp)
    sp.add_argument("--eps-list")
    sp.add_argument("--h-ratio", type=int)

    sp = sub.add_parser("entropy-check"); common(sp)
    sp.add_argument("--delta-list")
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError,
            norms.NormValidationError, boundary.BoundaryTracingError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 1
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
