"""Homogeneous gauges adapted to a filtration.

A gauge assigns each nonempty layer m_i a norm phi_i; the homogeneous norm
of u is max_i phi_i(u_i)^(1/i).  It scales linearly under the adapted
dilations D_r (r^i on the weight-i layer).  Two constructions:

scaled_euclidean
    phi_i = euclidean / lambda_i.  Layer one is plain euclidean.  The
    scales start from kappa-derived values and are doubled until a sampled
    bilinearity constant drops to <= 1, which is what the concentration
    arguments need.

bracket_hull
    Layer one is euclidean; the weight-i unit ball is the convex hull of
    kappa_i * [u, w] over boundary pairs u in the layer-one sphere and w in
    the boundary of the weight-(i-1) ball, projected to the layer.  With
    the default kappa_i = 2 i^2 A_i (A_i an upper bound for the absolute
    coefficient mass of the degree-i BCH polynomial) the resulting gauge
    has bilinearity constant <= 1 and a subadditive group norm.  Gauge
    evaluation uses the hull's facet description, so it errs on the large
    side when the sampled hull misses extreme points.

Degenerate layers (dimension zero, or a hull that does not span its
layer) fall back to scaled euclidean and are flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import Filtration, NilpotentAlgebra, layer_components
from .bch import TABLE_CAP, bch, degree_masses
from .rng import STREAM_GAUGE, substream

DEFAULT_CALIBRATION_PAIRS = 100_000
DEFAULT_HULL_SAMPLES = 2048


@dataclass(frozen=True)
class HomogeneousNorm:
    filtration: Filtration
    mode: str
    layer_scales: tuple[float, ...]
    kappa: tuple[float, ...]
    hull_vertices: tuple[np.ndarray | None, ...]   # layer coords, per weight
    hull_facets: tuple[np.ndarray | None, ...]     # rows (a..., b): a.x <= b
    fallback_weights: tuple[int, ...]
    bilinearity_bound: float


def coefficient_mass_bound(degree: int) -> float:
    """A_i: crude upper bound for the degree-i BCH coefficient mass.

    Sum of absolute merged coefficients times the surviving word count,
    clamped to at least one.  Deliberately generous; it only ever makes
    kappa larger.  Degrees beyond the table cap fall back to one.
    """
    if degree > TABLE_CAP:
        return 1.0
    mass, count = degree_masses(degree)[degree - 1]
    return max(1.0, mass * count)


def default_kappas(depth: int) -> tuple[float, ...]:
    """kappa_i = 2 i^2 A_i for i = 1..depth (index 1 is unused)."""
    return tuple(2.0 * i * i * coefficient_mass_bound(i) if i >= 2 else 1.0
                 for i in range(1, depth + 1))


def euclidean_bilinearity_bound(alg: NilpotentAlgebra) -> float:
    """Upper bound on sup ||[u, v]|| over euclidean unit vectors."""
    d = alg.dim
    if d == 0:
        return 0.0
    return float(np.linalg.norm(alg.tensor.reshape(d * d, d), 2))


# ---------------------------------------------------------------------------
# evaluation

def _layer_gauge(norm: HomogeneousNorm, weight: int, coords: np.ndarray) -> np.ndarray:
    """phi_i of layer coordinates, batched over leading axes."""
    i = weight - 1
    if coords.shape[-1] == 0:
        return np.zeros(coords.shape[:-1])
    facets = norm.hull_facets[i]
    if facets is None:
        return np.linalg.norm(coords, axis=-1) / norm.layer_scales[i]
    a, b = facets[:, :-1], facets[:, -1]
    return np.max((coords @ a.T) / b, axis=-1)


def hom_norm(norm: HomogeneousNorm, x: np.ndarray) -> np.ndarray | float:
    """|x| = max_i phi_i(x_i)^(1/i); scalar in, scalar out."""
    x = np.asarray(x, dtype=float)
    comps = layer_components(norm.filtration, x)
    out = np.zeros(x.shape[:-1])
    for i, coords in enumerate(comps):
        if coords.shape[-1] == 0:
            continue
        g = _layer_gauge(norm, i + 1, coords)
        out = np.maximum(out, np.maximum(g, 0.0) ** (1.0 / (i + 1)))
    return float(out) if out.ndim == 0 else out


def dilate(filt: Filtration, r: float, x: np.ndarray) -> np.ndarray:
    """Adapted dilation: multiply the weight-i component by r^i."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i, basis in enumerate(filt.layers):
        if basis.shape[0] == 0:
            continue
        out = out + (r ** (i + 1)) * ((x @ basis.T) @ basis)
    return out


# ---------------------------------------------------------------------------
# sampling helpers

def _sample_ball(rng, norm: HomogeneousNorm, count: int, upto_weight: int,
                 on_sphere: bool = False) -> np.ndarray:
    """Points of the unit ball of the partial gauge using layers <= upto_weight."""
    filt = norm.filtration
    d = filt.v.shape[0] if filt.v.ndim else filt.layers[0].shape[1]
    out = np.zeros((count, d))
    for i in range(upto_weight):
        basis = filt.layers[i]
        k = basis.shape[0]
        if k == 0:
            continue
        dirs = rng.standard_normal((count, k))
        dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
        radii = np.ones(count) if on_sphere else rng.random(count) ** (1.0 / k)
        g = _layer_gauge(norm, i + 1, dirs)  # gauge of the unit direction
        coords = dirs * (radii / np.maximum(g, 1e-300))[:, None]
        out += coords @ basis
    return out


def bilinearity_constant(norm: HomogeneousNorm, alg: NilpotentAlgebra,
                         n_pairs: int = 10_000, seed: int = 0) -> float:
    """Sampled sup of phi([u, v]) over unit-ball pairs.

    A lower estimate of the true constant: sampling can only miss the sup.
    """
    rng = substream(seed, STREAM_GAUGE, 1)
    depth = norm.filtration.depth
    u = _sample_ball(rng, norm, n_pairs, depth)
    v = _sample_ball(rng, norm, n_pairs, depth)
    vals = hom_norm(norm, alg.bracket(u, v))
    return float(np.max(vals)) if n_pairs else 0.0


def subadditivity_defect(norm: HomogeneousNorm, alg: NilpotentAlgebra,
                         n_pairs: int = 10_000, box_radius: float = 1.0,
                         seed: int = 0):
    """max |u * v| - |u| - |v| over pairs sampled in a euclidean box.

    Returns (defect, (u, v)) with the maximizing pair; a positive defect
    exhibits a violation of the triangle inequality.
    """
    rng = substream(seed, STREAM_GAUGE, 2)
    d = alg.dim
    u = rng.uniform(-box_radius, box_radius, size=(n_pairs, d))
    v = rng.uniform(-box_radius, box_radius, size=(n_pairs, d))
    defects = hom_norm(norm, bch(alg, u, v)) - hom_norm(norm, u) - hom_norm(norm, v)
    k = int(np.argmax(defects))
    return float(defects[k]), (u[k], v[k])


# ---------------------------------------------------------------------------
# construction

def _hull_facets_from_vertices(vertices: np.ndarray):
    """Facet rows (a, b) with the hull = {x : a.x <= b}; None if degenerate."""
    k = vertices.shape[1]
    if k == 1:
        top = float(np.max(np.abs(vertices)))
        if top <= 0.0:
            return None
        return np.array([[1.0, top], [-1.0, top]])
    rank = np.linalg.matrix_rank(vertices, rtol=1e-10)
    if rank < k:
        return None
    from scipy.spatial import ConvexHull
    hull = ConvexHull(vertices)
    eqs = hull.equations  # a.x + b <= 0
    a, b = eqs[:, :-1], -eqs[:, -1]
    if np.any(b <= 0):  # origin not interior
        return None
    return np.hstack([a, b[:, None]])


def _prune_vertices(vertices: np.ndarray) -> np.ndarray:
    k = vertices.shape[1]
    if k == 1:
        top = float(np.max(np.abs(vertices)))
        return np.array([[top], [-top]])
    from scipy.spatial import ConvexHull
    try:
        hull = ConvexHull(vertices)
    except Exception:
        return vertices
    return vertices[np.sort(hull.vertices)]


def build_gauge(alg: NilpotentAlgebra, filt: Filtration,
                mode: str = "scaled_euclidean",
                kappa: tuple[float, ...] | None = None,
                seed: int = 0,
                calibration_pairs: int = DEFAULT_CALIBRATION_PAIRS,
                hull_samples: int = DEFAULT_HULL_SAMPLES) -> HomogeneousNorm:
    """Construct a homogeneous gauge over the filtration's layers."""
    if mode not in ("scaled_euclidean", "bracket_hull"):
        raise ValueError(f"unknown gauge mode {mode!r}")
    depth = filt.depth
    kap = tuple(kappa) if kappa is not None else default_kappas(depth)
    if len(kap) < depth:
        raise ValueError(f"need {depth} kappa values, got {len(kap)}")
    ce = max(1.0, euclidean_bilinearity_bound(alg))

    scales = [1.0] * depth
    hull_v: list[np.ndarray | None] = [None] * depth
    hull_f: list[np.ndarray | None] = [None] * depth
    fallback: list[int] = []

    norm = HomogeneousNorm(filtration=filt, mode=mode, layer_scales=tuple(scales),
                           kappa=kap, hull_vertices=tuple(hull_v),
                           hull_facets=tuple(hull_f), fallback_weights=(),
                           bilinearity_bound=0.0)

    per_layer_pairs = max(256, calibration_pairs // max(1, depth - 1))
    for w in range(2, depth + 1):
        i = w - 1
        basis = filt.layers[i]
        if basis.shape[0] == 0:
            continue
        if mode == "bracket_hull":
            verts = _build_hull_layer(alg, norm, w, kap[i], hull_samples, seed)
            facets = _hull_facets_from_vertices(verts) if verts is not None else None
            if facets is not None:
                hull_v[i] = _prune_vertices(verts)
                hull_f[i] = facets
                norm = _rebuild(norm, scales, hull_v, hull_f, fallback)
                continue
            fallback.append(w)
        # scaled euclidean path (default mode, or hull fallback)
        scales[i] = max(kap[i] * ce * scales[i - 1], 1e-300)
        norm = _rebuild(norm, scales, hull_v, hull_f, fallback)
        rng = substream(seed, STREAM_GAUGE, 3, w)
        for _ in range(200):
            u = _sample_ball(rng, norm, per_layer_pairs, w - 1)
            v = _sample_ball(rng, norm, per_layer_pairs, w - 1)
            prod_coords = alg.bracket(u, v) @ basis.T
            worst = float(np.max(_layer_gauge(norm, w, prod_coords)))
            if worst <= 1.0:
                break
            scales[i] *= 2.0
            norm = _rebuild(norm, scales, hull_v, hull_f, fallback)
        else:
            raise RuntimeError(f"gauge calibration did not converge at weight {w}")

    bilin = bilinearity_constant(norm, alg, n_pairs=min(20_000, calibration_pairs),
                                 seed=seed)
    return _rebuild(norm, scales, hull_v, hull_f, fallback, bilin)


def _rebuild(norm: HomogeneousNorm, scales, hull_v, hull_f, fallback,
             bilin: float = 0.0) -> HomogeneousNorm:
    return HomogeneousNorm(filtration=norm.filtration, mode=norm.mode,
                           layer_scales=tuple(scales), kappa=norm.kappa,
                           hull_vertices=tuple(hull_v), hull_facets=tuple(hull_f),
                           fallback_weights=tuple(sorted(fallback)),
                           bilinearity_bound=bilin)


def _build_hull_layer(alg: NilpotentAlgebra, norm: HomogeneousNorm, weight: int,
                      kappa_w: float, hull_samples: int, seed: int):
    """Vertices (layer coords) of kappa * [sphere_1, boundary_(w-1)]."""
    filt = norm.filtration
    b1 = filt.layers[0]
    bprev = filt.layers[weight - 2]
    btarget = filt.layers[weight - 1]
    if b1.shape[0] == 0 or bprev.shape[0] == 0:
        return None
    rng = substream(seed, STREAM_GAUGE, 4, weight)
    u = _sample_ball(rng, norm, hull_samples, 1, on_sphere=True)
    dirs = rng.standard_normal((hull_samples, bprev.shape[0]))
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
    g = _layer_gauge(norm, weight - 1, dirs)
    wv = (dirs / np.maximum(g, 1e-300)[:, None]) @ bprev
    # structured pairs: basis directions and previous-layer extreme points
    extremes = norm.hull_vertices[weight - 2]
    if extremes is None:
        prev_pts = np.vstack([bprev, -bprev]) * norm.layer_scales[weight - 2]
    else:
        prev_pts = extremes @ bprev
    base_pts = np.vstack([b1, -b1])
    uu = np.vstack([u, np.repeat(base_pts, len(prev_pts), axis=0)])
    ww = np.vstack([wv, np.tile(prev_pts, (len(base_pts), 1))])
    prods = alg.bracket(uu, ww) @ btarget.T
    verts = kappa_w * np.vstack([prods, -prods])
    keep = np.linalg.norm(verts, axis=1) > 1e-14
    verts = verts[keep]
    if verts.shape[0] == 0:
        return None
    return verts


# ---------------------------------------------------------------------------
# serialization

def gauge_descriptor(norm: HomogeneousNorm) -> dict:
    """JSON-ready description; hashed into run manifests."""
    return {
        "mode": norm.mode,
        "depth": norm.filtration.depth,
        "weights": list(norm.filtration.weights),
        "layer_dims": list(norm.filtration.layer_dims()),
        "kappa": [float(k) for k in norm.kappa],
        "layer_scales": [float(s) for s in norm.layer_scales],
        "hull_vertices": [None if v is None else [[float(c) for c in row] for row in v]
                          for v in norm.hull_vertices],
        "fallback_weights": list(norm.fallback_weights),
    }
