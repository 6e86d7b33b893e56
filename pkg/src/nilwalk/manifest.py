"""Deterministic artifact emission: CSV matrices, manifest JSON, hashing.

Every file written here is a pure function of the resolved configuration
and the seed: floats are emitted at 17 significant digits, JSON keys are
sorted, and nothing records wall-clock time or host identity.  The
manifest carries a sha256 per emitted file so a rerun can be checked
byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .norms import HomogeneousNorm, gauge_descriptor
from .splitting import ScanResult
from .walker import SampleMatrix

MANIFEST_SCHEMA_VERSION = 1
FLOAT_FMT = "%.17g"


def jsonify(obj):
    """Recursively convert numpy containers into plain JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(jsonify(obj), sort_keys=True, separators=(",", ":"))


def gauge_hash(norm: HomogeneousNorm) -> str:
    return hashlib.sha256(canonical_json(gauge_descriptor(norm)).encode()).hexdigest()


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


def _vector(v) -> str:
    return " ".join(_fmt(x) for x in np.asarray(v, dtype=float).ravel())


def walk_header(setup, seed: int, norm_hash: str) -> str:
    """Comment block for a walk CSV; one stable line per constant."""
    d = setup.dist
    kappa = "none" if d.kappa_mu is None else _fmt(d.kappa_mu)
    layers = " ".join(f"layer_{i+1}" for i in range(setup.filtration.depth))
    lines = [
        "nilwalk-walk-csv 1",
        f"preset: {setup.preset}",
        f"seed: {seed}",
        f"R_mu: {_fmt(d.radius)}",
        f"kappa_mu: {kappa}",
        f"v_mu: {_vector(d.v_mu)}",
        f"centering: {_vector(setup.base_dist.centering)}",
        f"conjugated: {str(setup.conjugated).lower()}",
        f"scaling_exponent: {_fmt(setup.scaling_exponent)}",
        f"gauge: {setup.norm.mode} sha256:{norm_hash}",
        f"columns: replicate n M M_scaled y_norm q_index {layers}",
    ]
    return "\n".join(lines)


def write_walk_csv(path: str, result: SampleMatrix, setup, seed: int,
                   norm_hash: str) -> None:
    r, k = result.running_max.shape
    nl = result.layer_euclid.shape[2]
    ns = np.asarray(result.checkpoints, dtype=float)
    scaled = result.scaled_max()
    rows = np.empty((r * k, 6 + nl))
    rows[:, 0] = np.repeat(np.arange(r, dtype=float), k)
    rows[:, 1] = np.tile(ns, r)
    rows[:, 2] = result.running_max.ravel()
    rows[:, 3] = scaled.ravel()
    rows[:, 4] = result.y_norm.ravel()
    rows[:, 5] = result.q_index.ravel()
    rows[:, 6:] = result.layer_euclid.reshape(r * k, nl)
    np.savetxt(path, rows, fmt=FLOAT_FMT, delimiter=",",
               header=walk_header(setup, seed, norm_hash), comments="# ")


def scan_header(preset: str, seed: int, group_order: int) -> str:
    lines = [
        "nilwalk-scan-csv 1",
        f"preset: {preset}",
        f"seed: {seed}",
        f"group_order: {group_order}",
        "columns: replicate delta_raw Delta ratio",
    ]
    return "\n".join(lines)


def write_scan_csv(path: str, scan: ScanResult, preset: str, seed: int,
                   group_order: int) -> None:
    np.savetxt(path, scan.rows, fmt=FLOAT_FMT, delimiter=",",
               header=scan_header(preset, seed, group_order), comments="# ")


def write_manifest(path: str, doc: dict) -> None:
    body = json.dumps(jsonify(doc), sort_keys=True, indent=2)
    with open(path, "w") as fh:
        fh.write(body)
        fh.write("\n")


def load_manifest(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def attach_file_hashes(doc: dict, out_dir: str, names) -> dict:
    doc = dict(doc)
    doc["files"] = {name: sha256_file(os.path.join(out_dir, name))
                    for name in names}
    return doc


def read_csv_columns(path: str):
    """(data array, column names) from a header-commented CSV."""
    names = None
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            text = line[1:].strip()
            if text.startswith("columns:"):
                names = text.split(":", 1)[1].split()
    if names is None:
        raise ValueError(f"{path} has no '# columns:' header line")
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: {data.shape[1]} columns, header names {len(names)}")
    return data, names
