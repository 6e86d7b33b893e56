"""Independent derivation routes used to cross-check the library.

Everything here deliberately avoids the implementation under test:
group products go through faithful matrix representations, series are
summed directly, filtrations are rebuilt by brute-force span closure,
and moment constants come from closed-form Gamma expressions.
"""

import math
from itertools import product

import numpy as np

# ---------------------------------------------------------------------------
# faithful strictly-upper-triangular representations


def heisenberg_rep():
    """e1 -> E12, e2 -> E23, e3 -> E13 inside 3x3 strictly upper matrices."""
    e = np.zeros((3, 3, 3))
    e[0, 0, 1] = 1.0
    e[1, 1, 2] = 1.0
    e[2, 0, 2] = 1.0
    return e


def filiform_rep(dim):
    """Chain algebra [e1, e_i] = e_{i+1}: e1 is the shift, e_j = (-1)^j E_{1j}.

    Valid for any dim >= 3; the image is abelian away from e1, matching
    the structure tensor used by the presets.
    """
    mats = np.zeros((dim, dim, dim))
    for i in range(dim - 1):
        mats[0, i, i + 1] = 1.0
    for j in range(1, dim):
        mats[j, 0, j] = (-1.0) ** (j + 1)
    return mats


def rep_matrix(rep, x):
    return np.einsum("i,ijk->jk", np.asarray(x, dtype=float), rep)


def nilpotent_expm(x):
    """exp of a nilpotent matrix by its terminating power series."""
    d = x.shape[0]
    out = np.eye(d)
    term = np.eye(d)
    for k in range(1, d):
        term = term @ x / k
        out = out + term
        if not term.any():
            break
    return out


def nilpotent_logm(m):
    """log of a unipotent matrix by the terminating Mercator series."""
    d = m.shape[0]
    a = m - np.eye(d)
    out = np.zeros_like(a)
    term = np.eye(d)
    for k in range(1, d):
        term = term @ a
        out = out + ((-1.0) ** (k + 1) / k) * term
        if not term.any():
            break
    return out


def rep_coordinates(rep, z):
    """Solve z = sum_i c_i rep[i]; the residual must vanish for a true product."""
    d = rep.shape[0]
    basis = rep.reshape(d, -1).T
    coeff, *_ = np.linalg.lstsq(basis, z.ravel(), rcond=None)
    resid = float(np.linalg.norm(basis @ coeff - z.ravel()))
    return coeff, resid


def rep_bch(rep, x, y):
    """log(exp X exp Y) pulled back to coordinates; the reference BCH route."""
    z = nilpotent_logm(nilpotent_expm(rep_matrix(rep, x))
                       @ nilpotent_expm(rep_matrix(rep, y)))
    coeff, resid = rep_coordinates(rep, z)
    if resid > 1e-9:
        raise AssertionError(f"product left the representation span: {resid:.3e}")
    return coeff


# ---------------------------------------------------------------------------
# span-closure filtration oracle


def _span_basis(vectors, tol=1e-10):
    vs = [v for v in vectors if np.linalg.norm(v) > tol]
    if not vs:
        return np.zeros((0, len(vectors[0])))
    m = np.array(vs)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    rank = int(np.sum(s > tol * s[0]))
    return vt[:rank]


def _bracket_all(tensor, basis_a, basis_b):
    out = []
    for a in basis_a:
        for b in basis_b:
            out.append(np.einsum("i,j,ijk->k", a, b, tensor))
    return out


def closure_weighted_ideals(tensor, v, max_iter=64):
    """Recompute the drift-weighted ideal chain by explicit span closure.

    n^(1) = everything, n^(2) = [n, n] + span brackets of v with n, and
    from there n^(i+1) = [n, n^(i)] + [v, n^(i-1)].  Returns the chain of
    orthonormal row bases down to (and including) the first zero ideal.
    """
    dim = tensor.shape[0]
    full = np.eye(dim)
    chain = [full]
    prev = full
    cur = _span_basis(_bracket_all(tensor, full, full)
                      + _bracket_all(tensor, [v], full) or [np.zeros(dim)])
    chain.append(cur)
    for _ in range(max_iter):
        if cur.shape[0] == 0:
            break
        gens = _bracket_all(tensor, full, cur) + _bracket_all(tensor, [v], prev)
        nxt = _span_basis(gens or [np.zeros(dim)])
        chain.append(nxt)
        prev, cur = cur, nxt
    return chain


def subspace_contained(inner, outer, tol=1e-10):
    if inner.shape[0] == 0:
        return True
    if outer.shape[0] == 0:
        return False
    proj = inner @ outer.T @ outer
    return float(np.max(np.abs(proj - inner))) <= tol


# ---------------------------------------------------------------------------
# walk enumeration through matrix products


def enumerate_rep_walk(rep, xis, probs, n_steps):
    """Exact n-step distribution of the walk, multiplying in the representation.

    Yields (probability, coordinates of log(product)) over all atom words.
    Only sensible for tiny q**n.
    """
    exps = [nilpotent_expm(rep_matrix(rep, xi)) for xi in xis]
    for word in product(range(len(xis)), repeat=n_steps):
        p = 1.0
        m = np.eye(rep.shape[1])
        for a in word:
            p *= probs[a]
            m = m @ exps[a]
        coeff, _ = rep_coordinates(rep, nilpotent_logm(m))
        yield p, coeff


# ---------------------------------------------------------------------------
# closed-form moment constants


def gaussian_p_norm(p):
    """||N(0,1)||_p = sqrt(2) (Gamma((p+1)/2) / Gamma(1/2))^(1/p)."""
    return math.sqrt(2.0) * (math.gamma((p + 1) / 2.0)
                             / math.gamma(0.5)) ** (1.0 / p)


def exponential_p_norm(p):
    """||Exp(1)||_p = Gamma(p+1)^(1/p)."""
    return math.gamma(p + 1.0) ** (1.0 / p)
