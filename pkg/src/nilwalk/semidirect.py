"""Semidirect products of a nilpotent group with a finite orthogonal group.

Elements are pairs (xi, kappa): xi in log coordinates on the nilpotent
factor, kappa an index into a finite group Q of orthogonal Lie algebra
automorphisms.  Products twist the nilpotent part:

    (xi1, k1) (xi2, k2) = (xi1 * Ad(k1) xi2,  k1 k2)

with * the BCH product.  A step distribution is a finite atomic measure on
such pairs; its derived data (drift split, spectral constant, centering
element) are computed eagerly at construction and drive the walk module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import groups
from .algebra import (NilpotentAlgebra, complement_within, lower_central_filtration,
                      orthonormal_basis, project_onto)
from .bch import bch

Q_TOL = 1e-10
EIG_TOL = 1e-8


@dataclass(frozen=True)
class FiniteActionGroup:
    """Finite group of orthogonal automorphisms with its Cayley table."""

    matrices: np.ndarray          # (k, d, d)
    table: np.ndarray             # (k, k) indices
    identity: int
    inverse: np.ndarray           # (k,) indices

    @property
    def order(self) -> int:
        return self.matrices.shape[0]

    def ad(self, kappa: int) -> np.ndarray:
        return self.matrices[kappa]


def finite_group(mats: np.ndarray) -> FiniteActionGroup:
    mats = np.asarray(mats, dtype=float)
    table, identity, inverse = groups.cayley_from_matrices(mats)
    return FiniteActionGroup(matrices=mats, table=table, identity=identity,
                             inverse=inverse)


@dataclass(frozen=True)
class QValidation:
    ok: bool
    orthogonality_residual: float
    automorphism_residual: float
    closure_ok: bool
    messages: tuple[str, ...] = ()


def q_validate(alg: NilpotentAlgebra, q: FiniteActionGroup,
               tol: float = Q_TOL) -> QValidation:
    """Check orthogonality, closure, and the automorphism property.

    Automorphism means Ad(k)[x, y] = [Ad(k) x, Ad(k) y] for every k.
    """
    mats = q.matrices
    ortho = float(max(np.max(np.abs(m.T @ m - np.eye(alg.dim))) for m in mats))
    c = alg.tensor
    auto = 0.0
    for m in mats:
        left = np.einsum("ijk,mk->ijm", c, m)
        right = np.einsum("ai,bj,abm->ijm", m, m, c)
        auto = max(auto, float(np.max(np.abs(left - right))))
    closure_ok = True
    try:
        groups.cayley_from_matrices(mats, tol=tol)
    except ValueError:
        closure_ok = False
    msgs = []
    if ortho > tol:
        msgs.append(f"orthogonality residual {ortho:.3e}")
    if auto > tol:
        msgs.append(f"automorphism residual {auto:.3e}")
    if not closure_ok:
        msgs.append("matrix list is not a closed group")
    return QValidation(ok=not msgs, orthogonality_residual=ortho,
                       automorphism_residual=auto, closure_ok=closure_ok,
                       messages=tuple(msgs))


@dataclass(frozen=True)
class GroupElement:
    xi: np.ndarray
    kappa: int

    def __post_init__(self):
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=float))


def identity_element(alg: NilpotentAlgebra, q: FiniteActionGroup) -> GroupElement:
    return GroupElement(xi=np.zeros(alg.dim), kappa=q.identity)


def multiply(alg: NilpotentAlgebra, q: FiniteActionGroup,
             g1: GroupElement, g2: GroupElement) -> GroupElement:
    xi = bch(alg, g1.xi, q.ad(g1.kappa) @ g2.xi)
    return GroupElement(xi=xi, kappa=int(q.table[g1.kappa, g2.kappa]))


def inverse(alg: NilpotentAlgebra, q: FiniteActionGroup,
            g: GroupElement) -> GroupElement:
    kinv = int(q.inverse[g.kappa])
    return GroupElement(xi=q.ad(kinv) @ (-g.xi), kappa=kinv)


# ---------------------------------------------------------------------------
# step distributions

@dataclass(frozen=True)
class StepDistribution:
    """Finite atomic step law on the semidirect product, with derived data.

    Derived fields (all computed at construction):
      radius          largest euclidean atom displacement
      mu_q            marginal law on Q, indexed like q.matrices
      v_basis, w_basis  split of the abelianized layer into vectors fixed
                      by the subgroup generated by supp(mu_q), and its
                      orthocomplement
      v_mu, w_mu      components of the mean abelianized displacement
      kappa_mu        smallest singular value of (I - Ad(mu_q)) on W;
                      None when W = {0} (nothing to contract)
      centering       element y of W solving (I - Ad(mu_q)) y = w_mu; the
                      conjugated law c_y mu has abelianized mean v_mu
    """

    alg: NilpotentAlgebra
    q: FiniteActionGroup
    probs: np.ndarray
    xis: np.ndarray               # (m, d)
    kappas: np.ndarray            # (m,) indices
    radius: float = field(init=False)
    mu_q: np.ndarray = field(init=False)
    v_basis: np.ndarray = field(init=False)
    w_basis: np.ndarray = field(init=False)
    v_mu: np.ndarray = field(init=False)
    w_mu: np.ndarray = field(init=False)
    kappa_mu: float | None = field(init=False)
    centering: np.ndarray = field(init=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        xis = np.atleast_2d(np.asarray(self.xis, dtype=float))
        kappas = np.asarray(self.kappas, dtype=np.int64)
        if probs.ndim != 1 or len(probs) != len(xis) or len(probs) != len(kappas):
            raise ValueError("probs, xis, kappas must have matching lengths")
        if np.any(probs < 0):
            raise ValueError("negative probability")
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities sum to {total!r}, not 1")
        if np.any(kappas < 0) or np.any(kappas >= self.q.order):
            raise ValueError("kappa index out of range")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "xis", xis)
        object.__setattr__(self, "kappas", kappas)
        object.__setattr__(self, "radius", float(np.max(np.linalg.norm(xis, axis=1))))
        mu_q = np.zeros(self.q.order)
        np.add.at(mu_q, kappas, probs)
        object.__setattr__(self, "mu_q", mu_q)

        v_b, w_b = invariant_split(self.alg, self.q, np.nonzero(mu_q > 0)[0])
        object.__setattr__(self, "v_basis", v_b)
        object.__setattr__(self, "w_basis", w_b)

        m1 = _abelianized_layer(self.alg)
        mean_ab = project_onto(m1, probs @ xis)
        v_mu = project_onto(v_b, mean_ab)
        w_mu = project_onto(w_b, mean_ab)
        object.__setattr__(self, "v_mu", v_mu)
        object.__setattr__(self, "w_mu", w_mu)

        if w_b.shape[0] == 0:
            object.__setattr__(self, "kappa_mu", None)
            object.__setattr__(self, "centering", np.zeros(self.alg.dim))
        else:
            # sum mu(k) (I - Ad(k)) equals I - Ad(mu_q) but avoids the
            # cancellation in 1 - sum, keeping clean values exact
            eye = np.eye(self.alg.dim)
            gap_ambient = np.einsum("k,kij->ij", mu_q,
                                    eye[None] - self.q.matrices)
            gap = w_b @ gap_ambient @ w_b.T
            sing = np.linalg.svd(gap, compute_uv=False)
            kappa_mu = float(sing[-1])
            object.__setattr__(self, "kappa_mu", kappa_mu)
            if kappa_mu <= EIG_TOL:
                raise ValueError(
                    "spectral gap on the moving subspace is numerically zero; "
                    "the invariant-vector tolerance may be mis-specified")
            y = np.linalg.solve(gap, w_b @ w_mu) @ w_b
            object.__setattr__(self, "centering", y)

    @property
    def is_centred(self) -> bool:
        return bool(np.linalg.norm(self.v_mu) <= 1e-12)


def _abelianized_layer(alg: NilpotentAlgebra) -> np.ndarray:
    return lower_central_filtration(alg).layers[0]


def invariant_split(alg: NilpotentAlgebra, q: FiniteActionGroup,
                    support) -> tuple[np.ndarray, np.ndarray]:
    """Split the abelianized layer into fixed vectors and their complement.

    Fixed means fixed by every element of the subgroup generated by the
    support indices.  Bases are orthonormal rows in ambient coordinates.
    """
    m1 = _abelianized_layer(alg)
    sub = groups.generated_subgroup(q.table, q.identity, support)
    blocks = []
    for h in sub:
        if h == q.identity:
            continue
        blocks.append(m1 @ (q.matrices[h] - np.eye(alg.dim)).T)
    if not blocks:
        return m1, np.zeros((0, alg.dim))
    stacked = np.concatenate(blocks, axis=1)  # rows follow the m1 basis
    u, s, _ = np.linalg.svd(stacked, full_matrices=False)
    # coordinate directions whose residual under every h is ~ zero
    svals = np.zeros(stacked.shape[0])
    svals[: s.size] = s
    v_coords = u.T[svals <= EIG_TOL]
    v_basis = orthonormal_basis(v_coords @ m1) if v_coords.size else np.zeros((0, alg.dim))
    w_basis = complement_within(v_basis, m1)
    return v_basis, w_basis


def spectral_constant(dist: StepDistribution) -> float | None:
    """Smallest singular value of (I - Ad(mu_q)) on the moving subspace."""
    return dist.kappa_mu


def essential_average(dist: StepDistribution) -> tuple[np.ndarray, np.ndarray]:
    """(invariant drift v_mu, centering element y).

    Conjugating the law by y leaves only the invariant drift: the
    abelianized mean of c_y mu is v_mu, and |y| <= radius / kappa_mu.
    """
    return dist.v_mu, dist.centering


def conjugate_distribution(dist: StepDistribution,
                           y: np.ndarray | None = None) -> StepDistribution:
    """Law of (−y, id) (xi, k) (y, id): atoms become (−y) * xi * Ad(k) y."""
    y = dist.centering if y is None else np.asarray(y, dtype=float)
    new_xis = np.stack([
        bch(dist.alg, bch(dist.alg, -y, xi), dist.q.ad(int(k)) @ y)
        for xi, k in zip(dist.xis, dist.kappas)
    ])
    return StepDistribution(alg=dist.alg, q=dist.q, probs=dist.probs,
                            xis=new_xis, kappas=dist.kappas)


def abelianized_mean(dist: StepDistribution) -> np.ndarray:
    m1 = _abelianized_layer(dist.alg)
    return project_onto(m1, dist.probs @ dist.xis)


# ---------------------------------------------------------------------------
# serialization

def distribution_to_json(dist: StepDistribution) -> dict:
    return {
        "atoms": [
            {"p": float(p), "xi": [float(c) for c in xi], "kappa": int(k)}
            for p, xi, k in zip(dist.probs, dist.xis, dist.kappas)
        ],
        "Q": {"matrices": [[[float(c) for c in row] for row in m]
                           for m in dist.q.matrices]},
    }


def distribution_from_json(alg: NilpotentAlgebra, data: dict) -> StepDistribution:
    q = finite_group(np.asarray(data["Q"]["matrices"], dtype=float))
    atoms = data["atoms"]
    probs = np.array([a["p"] for a in atoms], dtype=float)
    xis = np.array([a["xi"] for a in atoms], dtype=float)
    kappas = np.array([a["kappa"] for a in atoms], dtype=np.int64)
    return StepDistribution(alg=alg, q=q, probs=probs, xis=xis, kappas=kappas)


def load_distribution(alg: NilpotentAlgebra, path: str) -> StepDistribution:
    with open(path, "r", encoding="utf-8") as fh:
        return distribution_from_json(alg, json.load(fh))
