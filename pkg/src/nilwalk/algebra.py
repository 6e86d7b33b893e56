"""Nilpotent Lie algebras given by structure constants.

An algebra lives on R^d with a declared orthonormal basis e_1..e_d and a
structure tensor c, where [e_i, e_j] = sum_k c[i, j, k] e_k.  Everything
else (series, filtrations, layers) is derived from c by numerical linear
algebra.  Subspaces are represented by matrices whose rows are orthonormal
spanning vectors; rank decisions use an SVD cut at RANK_RTOL times the top
singular value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

RANK_RTOL = 1e-10
VALIDATE_TOL = 1e-12


# ---------------------------------------------------------------------------
# subspace arithmetic

def orthonormal_basis(vectors: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """Orthonormal row basis for the span of the given row vectors.

    Returns a (k, d) array, possibly with k = 0.  The rank cut is
    RANK_RTOL relative to the largest singular value; `floor` raises the
    reference scale so a matrix that is nothing but rounding noise from
    an O(floor) computation collapses to rank zero instead of being
    renormalized into a spurious basis.
    """
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    if v.size == 0 or v.shape[0] == 0:
        return np.zeros((0, v.shape[-1] if v.ndim == 2 else 0))
    u, s, vt = np.linalg.svd(v, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, v.shape[1]))
    rank = int(np.sum(s > RANK_RTOL * max(s[0], floor)))
    return vt[:rank]


def subspace_sum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[0] == 0:
        return orthonormal_basis(b) if b.shape[0] else b
    if b.shape[0] == 0:
        return orthonormal_basis(a)
    return orthonormal_basis(np.vstack([a, b]))


def project_onto(basis: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Orthogonal projection of x (shape (..., d)) onto span(basis rows)."""
    if basis.shape[0] == 0:
        return np.zeros_like(x)
    return (x @ basis.T) @ basis


def containment_residual(inner: np.ndarray, outer: np.ndarray) -> float:
    """max_i || v_i - proj_outer v_i || over rows v_i of inner.

    Zero iff span(inner) is contained in span(outer).
    """
    if inner.shape[0] == 0:
        return 0.0
    resid = inner - project_onto(outer, inner)
    return float(np.max(np.linalg.norm(resid, axis=1)))


def complement_within(inner: np.ndarray, outer: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of inner inside outer."""
    if outer.shape[0] == 0:
        return np.zeros((0, outer.shape[1] if outer.ndim == 2 else 0))
    resid = outer - project_onto(inner, outer)
    return orthonormal_basis(resid)


# ---------------------------------------------------------------------------
# algebras

@dataclass(frozen=True)
class NilpotentAlgebra:
    """Structure-constant presentation of a nilpotent Lie algebra.

    dim: dimension d of the underlying space
    step: declared nilpotency step (validated against the computed one)
    tensor: (d, d, d) array, [e_i, e_j] = sum_k tensor[i, j, k] e_k
    labels: basis labels, for messages and serialization
    """

    dim: int
    step: int
    tensor: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        t = np.ascontiguousarray(np.asarray(self.tensor, dtype=float))
        if t.shape != (self.dim, self.dim, self.dim):
            raise ValueError(f"tensor shape {t.shape} does not match dim {self.dim}")
        object.__setattr__(self, "tensor", t)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"e{i+1}" for i in range(self.dim)))

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """[x, y] for single vectors or batches with shape (..., d)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.einsum("...i,...j,ijk->...k", x, y, self.tensor)

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ad_x = [x, .] acting on column vectors."""
        # (ad_x w)_k = sum_{i j} x_i w_j c[i,j,k]
        return np.einsum("i,ijk->kj", np.asarray(x, dtype=float), self.tensor)


def bracket(alg: NilpotentAlgebra, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return alg.bracket(x, y)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    antisymmetry_residual: float
    jacobi_residual: float
    computed_step: int
    messages: tuple[str, ...] = ()


def validate_algebra(alg: NilpotentAlgebra, tol: float = VALIDATE_TOL) -> ValidationReport:
    """Check antisymmetry, the Jacobi identity, and the declared step."""
    c = alg.tensor
    anti = float(np.max(np.abs(c + np.transpose(c, (1, 0, 2))))) if alg.dim else 0.0
    d = alg.dim
    # Jacobi on basis triples: [e_a,[e_b,e_c]] + [e_b,[e_c,e_a]] + [e_c,[e_a,e_b]]
    inner = c  # inner[b,c,m] coefficients of [e_b, e_c]
    term = np.einsum("amk,bcm->abck", c, inner)
    jac = term + np.transpose(term, (1, 2, 0, 3)) + np.transpose(term, (2, 0, 1, 3))
    jacobi = float(np.max(np.abs(jac))) if d else 0.0
    msgs = []
    try:
        series = lower_central_series(alg)
        computed_step = len(series) - 1  # [gamma_1, ..., gamma_s, gamma_{s+1} = 0]
    except ValueError:
        computed_step = -1
        msgs.append("lower central series does not terminate; not nilpotent")
    if anti > tol:
        msgs.append(f"antisymmetry residual {anti:.3e} exceeds {tol:.1e}")
    if jacobi > tol:
        msgs.append(f"jacobi residual {jacobi:.3e} exceeds {tol:.1e}")
    if computed_step >= 0 and computed_step != alg.step:
        msgs.append(f"computed step {computed_step} != declared step {alg.step}")
    return ValidationReport(
        ok=not msgs,
        antisymmetry_residual=anti,
        jacobi_residual=jacobi,
        computed_step=computed_step,
        messages=tuple(msgs),
    )


# ---------------------------------------------------------------------------
# series and filtrations

def _bracket_span(alg: NilpotentAlgebra, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Span of [u, w] over u in rows(a), w in rows(b).

    Rows of a and b are unit vectors, so genuine products live at the
    scale of the structure constants; anchoring the rank cut there keeps
    rounding residue from masquerading as a new ideal direction.
    """
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((0, alg.dim))
    prods = np.einsum("ui,wj,ijk->uwk", a, b, alg.tensor).reshape(-1, alg.dim)
    return orthonormal_basis(prods, floor=float(np.max(np.abs(alg.tensor))))


def lower_central_series(alg: NilpotentAlgebra, max_depth: int | None = None) -> list[np.ndarray]:
    """[gamma_1, gamma_2, ...] down to and including the first zero ideal."""
    full = np.eye(alg.dim)
    series = [full]
    limit = max_depth if max_depth is not None else alg.dim + 1
    for _ in range(limit):
        nxt = _bracket_span(alg, full, series[-1])
        series.append(nxt)
        if nxt.shape[0] == 0:
            return series
    raise ValueError("lower central series did not terminate; algebra is not nilpotent")


@dataclass(frozen=True)
class Filtration:
    """A descending filtration with an orthogonal layer decomposition.

    kind: "lower_central" or "weighted"
    v: the direction vector for weighted filtrations (zero for lower_central)
    ideals: ideals F^(1) >= F^(2) >= ... >= F^(depth+1) = 0 as row bases
    layers: layers[i] spans the orthocomplement of F^(i+2) inside F^(i+1),
            i.e. the weight-(i+1) layer; entries may have zero rows
    depth: largest weight with F^(weight) != 0
    """

    kind: str
    v: np.ndarray
    ideals: tuple[np.ndarray, ...]
    layers: tuple[np.ndarray, ...]
    depth: int

    @property
    def weights(self) -> tuple[int, ...]:
        return tuple(range(1, len(self.layers) + 1))

    def layer_dims(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.layers)


def _filtration_from_ideals(kind: str, v: np.ndarray, ideals: list[np.ndarray]) -> Filtration:
    # ideals[0] = F^(1); append trailing zero ideal if missing
    if ideals[-1].shape[0] != 0:
        raise ValueError("filtration did not terminate at zero")
    depth = max(i + 1 for i, b in enumerate(ideals) if b.shape[0] > 0)
    layers = []
    for i in range(depth):
        nxt = ideals[i + 1] if i + 1 < len(ideals) else np.zeros((0, ideals[0].shape[1]))
        layers.append(complement_within(nxt, ideals[i]))
    return Filtration(kind=kind, v=np.asarray(v, dtype=float),
                      ideals=tuple(ideals), layers=tuple(layers), depth=depth)


def lower_central_filtration(alg: NilpotentAlgebra) -> Filtration:
    series = lower_central_series(alg)
    return _filtration_from_ideals("lower_central", np.zeros(alg.dim), series)


def weighted_filtration(alg: NilpotentAlgebra, v: np.ndarray) -> Filtration:
    """Descending filtration adapted to a drift direction v.

    F^(1) is the whole algebra and
        F^(i+1) = [n, F^(i)] + [v, F^(i-1)]      (with F^(0) = F^(1) = n).
    For v = 0 this reproduces the lower central series.  The depth never
    exceeds twice the step.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (alg.dim,):
        raise ValueError(f"v must have shape ({alg.dim},)")
    full = np.eye(alg.dim)
    if np.linalg.norm(v) == 0.0:
        f = lower_central_filtration(alg)
        return Filtration(kind="weighted", v=v, ideals=f.ideals, layers=f.layers, depth=f.depth)
    vrow = v[None, :] / np.linalg.norm(v)
    ideals = [full, full]  # F^(0), F^(1)
    for i in range(1, 2 * alg.step + 2):
        nxt = subspace_sum(_bracket_span(alg, full, ideals[i]),
                           _bracket_span(alg, vrow, ideals[i - 1]))
        ideals.append(nxt)
        if nxt.shape[0] == 0:
            break
    else:
        raise ValueError("weighted filtration did not terminate")
    return _filtration_from_ideals("weighted", v, ideals[1:])


def layer_project(filt: Filtration, x: np.ndarray) -> list[np.ndarray]:
    """Orthogonal components of x along each layer; they sum back to x."""
    return [project_onto(b, x) for b in filt.layers]


def layer_components(filt: Filtration, x: np.ndarray) -> list[np.ndarray]:
    """Coordinates of x in each layer's orthonormal row basis (shape (..., dim_i))."""
    out = []
    for b in filt.layers:
        if b.shape[0] == 0:
            out.append(np.zeros(np.shape(x)[:-1] + (0,)))
        else:
            out.append(np.asarray(x) @ b.T)
    return out


# ---------------------------------------------------------------------------
# serialization

def algebra_to_json(alg: NilpotentAlgebra) -> dict:
    """Sparse 1-based bracket table, upper triangle (i < j) only."""
    brackets = []
    for i in range(alg.dim):
        for j in range(i + 1, alg.dim):
            coeffs = [[k + 1, float(alg.tensor[i, j, k])]
                      for k in range(alg.dim) if alg.tensor[i, j, k] != 0.0]
            if coeffs:
                brackets.append([i + 1, j + 1, coeffs])
    return {"dim": alg.dim, "step": alg.step, "brackets": brackets,
            "labels": list(alg.labels)}


def algebra_from_json(data: dict) -> NilpotentAlgebra:
    dim = int(data["dim"])
    step = int(data["step"])
    tensor = np.zeros((dim, dim, dim))
    for entry in data.get("brackets", []):
        i, j, coeffs = entry
        for k, c in coeffs:
            tensor[i - 1, j - 1, k - 1] = float(c)
            tensor[j - 1, i - 1, k - 1] = -float(c)
    labels = tuple(data.get("labels") or ())
    return NilpotentAlgebra(dim=dim, step=step, tensor=tensor, labels=labels)


def load_algebra(path: str) -> NilpotentAlgebra:
    with open(path, "r", encoding="utf-8") as fh:
        return algebra_from_json(json.load(fh))
