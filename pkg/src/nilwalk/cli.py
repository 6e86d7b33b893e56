"""Batch experiment runner: presets, config validation, deterministic artifacts.

Subcommands:

  algebra-check   validate a structure tensor and report its filtrations
  walk            Monte Carlo walk -> walk.csv + manifest.json
  fit             concentration fits over a walk CSV -> report + plots
  split-scan      isometry-lift defect scan -> scan.csv + best lift
  replay          rerun a manifest and verify every artifact byte for byte

All randomness flows from --seed; reruns of the same resolved config
produce byte-identical files regardless of NILWALK_THREADS.  Exit codes:
2 config/schema, 3 resource ceiling, 4 numerical validation or replay
mismatch, 5 file I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import jsonschema
import numpy as np

from .algebra import algebra_from_json, validate_algebra, weighted_filtration
from .errors import NumericalValidationError, ResourceCeilingError, SchemaError
from .manifest import (MANIFEST_SCHEMA_VERSION, attach_file_hashes, gauge_hash,
                       jsonify, load_manifest, read_csv_columns, sha256_file,
                       write_manifest, write_scan_csv, write_walk_csv)
from .presets import (ALGEBRA_PRESETS, SPLIT_PRESETS, WALK_PRESETS,
                      assemble_setup, build_split_group, build_walk_setup,
                      stay_diagnostic)
from .semidirect import abelianized_mean, distribution_from_json
from .splitting import delta_ratio_scan
from .stats import (fit_alpha, lil_diagnostic, render_histogram_svg,
                    render_tail_svg, tail_curve)
from .walker import WalkConfig, monte_carlo

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": 1},
        "kind": {"enum": ["algebra-check", "walk", "fit", "split-scan"]},
        "preset": {"type": "string"},
        "algebra": {"type": "object"},
        "distribution": {"type": "object"},
        "v": {"type": "array", "items": {"type": "number"}},
        "eps": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "n": {"type": "integer", "minimum": 1},
        "reps": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "checkpoints": {"type": "array", "items": {"type": "integer", "minimum": 1},
                        "minItems": 1},
        "gauge": {"enum": ["bracket_hull", "scaled_euclidean"]},
        "filtration": {"enum": ["auto", "standard"]},
        "conjugate": {"enum": ["auto", "never"]},
        "cross_check": {"type": "boolean"},
        "max_work": {"type": "integer", "minimum": 1},
        "csv": {"type": "string"},
        "column": {"enum": ["M", "M_scaled", "y_norm"]},
        "lil_alpha": {"type": "number", "exclusiveMinimum": 0},
        "bootstrap": {"type": "integer", "minimum": 0},
        "svg": {"type": "boolean"},
    },
    "required": ["schema_version", "kind"],
    "additionalProperties": False,
}

DEFAULTS = {
    "seed": 0,
    "n": 1024,
    "reps": 1000,
    "gauge": "bracket_hull",
    "filtration": "auto",
    "conjugate": "auto",
    "cross_check": False,
    "column": "M_scaled",
    "bootstrap": 1000,
    "svg": False,
}


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.exceptions.ValidationError as exc:
        raise SchemaError(f"config rejected: {exc.message}") from exc
    out = dict(DEFAULTS)
    out.update(cfg)
    return out


def default_checkpoints(n: int) -> tuple[int, ...]:
    cps = [1 << j for j in range(2, n.bit_length() + 1) if (1 << j) <= n]
    if not cps or cps[-1] != n:
        cps.append(n)
    return tuple(cps)


def _walk_setup_from_config(cfg: dict):
    if cfg.get("preset"):
        if cfg["preset"] not in WALK_PRESETS:
            raise SchemaError(f"unknown walk preset {cfg['preset']!r}")
        return build_walk_setup(cfg["preset"], eps=cfg.get("eps"),
                                seed=cfg["seed"], gauge_mode=cfg["gauge"],
                                filtration_choice=cfg["filtration"],
                                conjugate=cfg["conjugate"])
    if "algebra" in cfg and "distribution" in cfg:
        alg = algebra_from_json(cfg["algebra"])
        dist = distribution_from_json(alg, cfg["distribution"])
        return assemble_setup("custom", alg, dist, eps=cfg.get("eps"),
                              seed=cfg["seed"], gauge_mode=cfg["gauge"],
                              filtration_choice=cfg["filtration"],
                              conjugate=cfg["conjugate"])
    raise SchemaError("walk needs a preset or inline algebra + distribution")


def _resolved_config(cfg: dict, keys) -> dict:
    return {k: cfg[k] for k in keys if k in cfg and cfg[k] is not None}


def cmd_walk(cfg: dict, out_dir: str) -> list[str]:
    setup = _walk_setup_from_config(cfg)
    n = cfg["n"]
    cps = tuple(cfg["checkpoints"]) if cfg.get("checkpoints") else default_checkpoints(n)
    try:
        wcfg = WalkConfig(dist=setup.dist, norm=setup.norm, n_steps=n,
                          checkpoints=cps, replications=cfg["reps"],
                          seed=cfg["seed"],
                          scaling_exponent=setup.scaling_exponent,
                          cross_check=cfg["cross_check"],
                          conjugated=setup.conjugated,
                          **({"max_work": cfg["max_work"]} if cfg.get("max_work") else {}))
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc
    result = monte_carlo(wcfg)

    nh = gauge_hash(setup.norm)
    write_walk_csv(os.path.join(out_dir, "walk.csv"), result, setup,
                   cfg["seed"], nh)

    base, run = setup.base_dist, setup.dist
    derived = {
        "R_mu": run.radius,
        "R_mu_base": base.radius,
        "kappa_mu": "none" if base.kappa_mu is None else base.kappa_mu,
        "v_mu": run.v_mu,
        "centering": base.centering,
        "conjugated": setup.conjugated,
        "abelianized_mean": abelianized_mean(run),
        "scaling_exponent": setup.scaling_exponent,
        "algebra": {"dim": setup.alg.dim, "step": setup.alg.step},
        "filtration": {"kind": setup.filtration.kind,
                       "depth": setup.filtration.depth,
                       "weights": setup.filtration.weights,
                       "layer_dims": setup.filtration.layer_dims()},
        "gauge": {"mode": setup.norm.mode, "sha256": nh,
                  "bilinearity_bound": setup.norm.bilinearity_bound},
        "notes": setup.notes,
    }
    if result.cross_residual is not None:
        derived["cross_check_residual"] = result.cross_residual
    if setup.preset == "r1-flip-eps":
        eps = setup.eps if setup.eps is not None else 0.01
        derived["stay_probability"] = stay_diagnostic(result, run, eps, n)

    keys = ("schema_version", "kind", "preset", "algebra", "distribution",
            "eps", "n", "reps", "seed", "checkpoints", "gauge", "filtration",
            "conjugate", "cross_check", "max_work")
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "kind": "walk",
        "config": dict(_resolved_config(cfg, keys), checkpoints=list(cps)),
        "seed": cfg["seed"],
        "derived": derived,
    }
    doc = attach_file_hashes(doc, out_dir, ["walk.csv"])
    write_manifest(os.path.join(out_dir, "manifest.json"), doc)

    kappa = derived["kappa_mu"]
    kappa_txt = kappa if isinstance(kappa, str) else "%.6g" % kappa
    print(f"walk: {result.replications} replicates, n={n}, "
          f"kappa_mu={kappa_txt}, conjugated={setup.conjugated}")
    print(f"wrote {os.path.join(out_dir, 'walk.csv')}")
    print(f"wrote {os.path.join(out_dir, 'manifest.json')}")
    return ["walk.csv", "manifest.json"]


def cmd_split_scan(cfg: dict, out_dir: str) -> list[str]:
    preset = cfg.get("preset")
    if not preset:
        raise SchemaError("split-scan needs a preset")
    if preset not in SPLIT_PRESETS:
        raise SchemaError(f"unknown split preset {preset!r}")
    group = build_split_group(preset)
    scan = delta_ratio_scan(group, cfg["reps"], cfg["seed"])

    write_scan_csv(os.path.join(out_dir, "scan.csv"), scan, preset,
                   cfg["seed"], group.order)
    with open(os.path.join(out_dir, "best-lift.json"), "w") as fh:
        json.dump(jsonify(scan.argmin_lift.to_json()), fh, sort_keys=True, indent=2)
        fh.write("\n")
    files = ["scan.csv", "best-lift.json"]
    if cfg["svg"]:
        counts, edges = scan.histogram
        svg = render_histogram_svg(counts, edges,
                                   title=f"{preset}: relator defect at unit dispersion",
                                   mark=scan.c_hat)
        with open(os.path.join(out_dir, "scan-hist.svg"), "w") as fh:
            fh.write(svg)
        files.append("scan-hist.svg")

    keys = ("schema_version", "kind", "preset", "reps", "seed", "svg")
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "kind": "split-scan",
        "config": _resolved_config(cfg, keys),
        "seed": cfg["seed"],
        "derived": {
            "c_hat": scan.c_hat,
            "kept": scan.kept,
            "skipped_near_sections": scan.skipped,
            "group_order": group.order,
            "description": SPLIT_PRESETS[preset][1],
            "estimate_note": "empirical lower estimate from finite sampling, "
                             "not a certified infimum",
        },
    }
    doc = attach_file_hashes(doc, out_dir, files)
    write_manifest(os.path.join(out_dir, "manifest.json"), doc)
    files.append("manifest.json")
    print(f"split-scan: c_hat={scan.c_hat:.6g} over {scan.kept} lifts "
          f"({scan.skipped} near-sections skipped)")
    for name in files:
        print(f"wrote {os.path.join(out_dir, name)}")
    return files


def cmd_fit(cfg: dict, out_dir: str) -> list[str]:
    path = cfg.get("csv")
    if not path:
        raise SchemaError("fit needs --csv pointing at a walk CSV")
    data, names = read_csv_columns(path)
    col = cfg["column"]
    if col not in names:
        raise SchemaError(f"column {col!r} not in {path} (has {names})")
    ci, ni = names.index(col), names.index("n")
    ns = np.unique(data[:, ni]).astype(int)
    samples = {int(nv): data[data[:, ni] == nv, ci] for nv in ns}
    fit = fit_alpha(samples, seed=cfg["seed"], n_bootstrap=cfg["bootstrap"])

    report = {
        "column": col,
        "groups": {str(int(nv)): int(v.size) for nv, v in samples.items()},
        "alpha_moments": fit.alpha_moments,
        "alpha_moments_ci": list(fit.alpha_moments_ci),
        "alpha_tail": fit.alpha_tail,
        "alpha_tail_ci": list(fit.alpha_tail_ci),
        "c_moment": fit.c_moment,
        "c1": fit.c1,
        "c2": fit.c2,
        "moment_orders": list(fit.moment_orders),
        "family_norms": list(fit.family_norms),
        "flags": list(fit.flags),
    }

    final = samples[int(ns[-1])]
    pos = np.abs(final[np.abs(final) > 0])
    if pos.size:
        t_grid = np.geomspace(np.quantile(pos, 0.5), pos.max() * 1.05, 33)
    else:
        t_grid = np.linspace(0.0, 1.0, 5)
    p_hat, lo, hi = tail_curve(final, t_grid)
    tail_rows = np.column_stack([t_grid, p_hat, lo, hi])
    np.savetxt(os.path.join(out_dir, "fit-tail.csv"), tail_rows, fmt="%.17g",
               delimiter=",", comments="# ",
               header="nilwalk-tail-csv 1\ncolumns: t p lo hi")
    files = ["fit-tail.csv"]

    if cfg.get("lil_alpha") is not None:
        yi = names.index("y_norm")
        ri = names.index("replicate")
        dyadic = np.array([nv for nv in ns if nv >= 4 and (nv & (nv - 1)) == 0])
        reps = np.unique(data[:, ri])
        mat = np.empty((reps.size, dyadic.size))
        for j, nv in enumerate(dyadic):
            rows = data[data[:, ni] == nv]
            order = np.argsort(rows[:, ri])
            mat[:, j] = rows[order, yi]
        lil = lil_diagnostic(dyadic, mat, alpha=cfg["lil_alpha"])
        report["lil"] = {
            "alpha": lil.alpha,
            "dyadic_n": list(lil.dyadic_n),
            "median_c": lil.median_c,
            "c_hat_quartiles": [float(q) for q in
                                np.percentile(lil.c_hat, [25, 50, 75])],
            "frac_peak_top": lil.frac_peak_top,
            "unbounded_flag": lil.unbounded_flag,
            "median_ratio": list(lil.median_ratio),
        }

    with open(os.path.join(out_dir, "fit-report.json"), "w") as fh:
        json.dump(jsonify(report), fh, sort_keys=True, indent=2)
        fh.write("\n")
    files.append("fit-report.json")

    if cfg["svg"]:
        fitted = None
        if np.isfinite(fit.alpha_tail) and np.isfinite(fit.c1):
            fitted = (fit.c1, fit.c2, fit.alpha_tail)
        svg = render_tail_svg(t_grid, p_hat, lo, hi, fitted=fitted,
                              title=f"tail of {col} (largest n)")
        with open(os.path.join(out_dir, "tail.svg"), "w") as fh:
            fh.write(svg)
        files.append("tail.svg")

    keys = ("schema_version", "kind", "csv", "column", "lil_alpha",
            "bootstrap", "seed", "svg")
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "kind": "fit",
        "config": _resolved_config(cfg, keys),
        "seed": cfg["seed"],
        "derived": {"alpha_moments": fit.alpha_moments,
                    "alpha_tail": fit.alpha_tail,
                    "flags": list(fit.flags)},
        "inputs": {os.path.basename(path): sha256_file(path)},
    }
    doc = attach_file_hashes(doc, out_dir, files)
    write_manifest(os.path.join(out_dir, "manifest.json"), doc)
    files.append("manifest.json")
    print(f"fit: alpha_moments={fit.alpha_moments:.4g} "
          f"alpha_tail={fit.alpha_tail:.4g} flags={list(fit.flags)}")
    for name in files:
        print(f"wrote {os.path.join(out_dir, name)}")
    return files


def cmd_algebra_check(cfg: dict, out_dir: str) -> list[str]:
    if cfg.get("preset"):
        if cfg["preset"] not in ALGEBRA_PRESETS:
            raise SchemaError(f"unknown algebra preset {cfg['preset']!r}")
        alg = ALGEBRA_PRESETS[cfg["preset"]]()
    elif "algebra" in cfg:
        try:
            alg = algebra_from_json(cfg["algebra"])
        except (KeyError, ValueError) as exc:
            raise SchemaError(f"bad algebra payload: {exc}") from exc
    else:
        raise SchemaError("algebra-check needs a preset or inline algebra")

    rep = validate_algebra(alg)
    if not rep.ok:
        raise NumericalValidationError(
            "structure tensor rejected: " + "; ".join(rep.messages))
    v = np.asarray(cfg.get("v", [0.0] * alg.dim), dtype=float)
    if v.size != alg.dim:
        raise SchemaError(f"v has {v.size} entries, algebra dimension is {alg.dim}")
    filt = weighted_filtration(alg, v)

    report = {
        "dim": alg.dim,
        "step": alg.step,
        "antisymmetry_residual": rep.antisymmetry_residual,
        "jacobi_residual": rep.jacobi_residual,
        "v": v,
        "filtration": {"kind": filt.kind, "depth": filt.depth,
                       "weights": filt.weights,
                       "layer_dims": filt.layer_dims()},
    }
    with open(os.path.join(out_dir, "algebra-report.json"), "w") as fh:
        json.dump(jsonify(report), fh, sort_keys=True, indent=2)
        fh.write("\n")

    keys = ("schema_version", "kind", "preset", "algebra", "v")
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "kind": "algebra-check",
        "config": _resolved_config(cfg, keys),
        "seed": cfg["seed"],
        "derived": report,
    }
    doc = attach_file_hashes(doc, out_dir, ["algebra-report.json"])
    write_manifest(os.path.join(out_dir, "manifest.json"), doc)
    print(f"algebra-check: dim={alg.dim} step={alg.step} "
          f"filtration depth={filt.depth} layer_dims={filt.layer_dims()}")
    print(f"wrote {os.path.join(out_dir, 'algebra-report.json')}")
    print(f"wrote {os.path.join(out_dir, 'manifest.json')}")
    return ["algebra-report.json", "manifest.json"]


DISPATCH = {
    "walk": cmd_walk,
    "split-scan": cmd_split_scan,
    "fit": cmd_fit,
    "algebra-check": cmd_algebra_check,
}


def cmd_replay(manifest_path: str, out_dir: str) -> int:
    original = load_manifest(manifest_path)
    cfg = validate_config(original.get("config", {}))
    DISPATCH[cfg["kind"]](cfg, out_dir)
    mismatches = []
    for name, digest in original.get("files", {}).items():
        fresh = sha256_file(os.path.join(out_dir, name))
        status = "ok" if fresh == digest else "MISMATCH"
        if fresh != digest:
            mismatches.append(name)
        print(f"replay {name}: {status}")
    if mismatches:
        raise NumericalValidationError(
            f"replay diverged on {', '.join(mismatches)}")
    print("replay: all artifacts reproduced byte for byte")
    return 0


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nilwalk",
        description="random walks on nilpotent groups with finite twists")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("walk", help="run a Monte Carlo walk")
    _add_common(p)
    p.add_argument("--preset", choices=sorted(WALK_PRESETS))
    p.add_argument("--n", type=int, help="number of steps")
    p.add_argument("--reps", type=int, help="number of replicates")
    p.add_argument("--eps", type=float, help="flip probability for r1-flip-eps")
    p.add_argument("--checkpoints", help="comma-separated times (must end at n)")
    p.add_argument("--gauge", choices=["bracket_hull", "scaled_euclidean"])
    p.add_argument("--filtration", choices=["auto", "standard"])
    p.add_argument("--conjugate", choices=["auto", "never"])
    p.add_argument("--cross-check", action="store_true", default=None,
                   dest="cross_check",
                   help="verify the incremental recursion against direct recentring")
    p.add_argument("--max-work", type=int, dest="max_work")

    p = sub.add_parser("fit", help="concentration fits over a walk CSV")
    _add_common(p)
    p.add_argument("--csv", help="walk CSV to read")
    p.add_argument("--column", choices=["M", "M_scaled", "y_norm"])
    p.add_argument("--lil-alpha", type=float, dest="lil_alpha",
                   help="also run the dyadic growth diagnostic at this exponent")
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--svg", action="store_true", default=None)

    p = sub.add_parser("split-scan", help="scan isometry lifts for defect ratios")
    _add_common(p)
    p.add_argument("--preset", choices=sorted(SPLIT_PRESETS))
    p.add_argument("--reps", type=int)
    p.add_argument("--svg", action="store_true", default=None)

    p = sub.add_parser("algebra-check", help="validate an algebra and its filtrations")
    _add_common(p)
    p.add_argument("--preset", choices=sorted(ALGEBRA_PRESETS))
    p.add_argument("--algebra", help="JSON file with a structure-tensor payload")
    p.add_argument("--v", help="comma-separated drift vector")

    p = sub.add_parser("replay", help="rerun a manifest and verify artifacts")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=".")
    return parser


def _config_from_args(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        with open(args.config) as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"config is not valid JSON: {exc}") from exc
    cfg.setdefault("schema_version", 1)
    cfg["kind"] = args.command
    skip = {"command", "config", "out"}
    for key, val in vars(args).items():
        if key in skip or val is None:
            continue
        cfg[key] = val
    if isinstance(cfg.get("checkpoints"), str):
        try:
            cfg["checkpoints"] = [int(tok) for tok in cfg["checkpoints"].split(",")]
        except ValueError as exc:
            raise SchemaError(f"bad checkpoint list: {exc}") from exc
    if isinstance(cfg.get("v"), str):
        try:
            cfg["v"] = [float(tok) for tok in cfg["v"].split(",")]
        except ValueError as exc:
            raise SchemaError(f"bad drift vector: {exc}") from exc
    if isinstance(cfg.get("algebra"), str):
        with open(cfg["algebra"]) as fh:
            cfg["algebra"] = json.load(fh)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            os.makedirs(args.out, exist_ok=True)
            return cmd_replay(args.manifest, args.out)
        cfg = validate_config(_config_from_args(args))
        os.makedirs(args.out, exist_ok=True)
        DISPATCH[cfg["kind"]](cfg, args.out)
        return 0
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceCeilingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
