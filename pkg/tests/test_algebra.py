import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nilwalk.algebra import (NilpotentAlgebra, algebra_from_json,
                             algebra_to_json, containment_residual,
                             layer_components, layer_project,
                             lower_central_filtration, lower_central_series,
                             validate_algebra, weighted_filtration)
from nilwalk.presets import (abelian_algebra, filiform_algebra,
                             free_step3_algebra, heisenberg_algebra)

from oracles import closure_weighted_ideals, subspace_contained

PRESET_ALGEBRAS = [heisenberg_algebra(), filiform_algebra(4),
                   free_step3_algebra(), abelian_algebra(2)]


def test_validate_accepts_presets():
    for alg in PRESET_ALGEBRAS:
        rep = validate_algebra(alg)
        assert rep.ok, rep.messages
        assert rep.antisymmetry_residual <= 1e-12
        assert rep.jacobi_residual <= 1e-12


def test_validate_rejects_broken_antisymmetry():
    t = np.zeros((2, 2, 2))
    t[0, 1, 1] = 1.0  # missing the mirrored entry
    rep = validate_algebra(NilpotentAlgebra(dim=2, step=1, tensor=t))
    assert not rep.ok
    assert any("antisymmetry" in m for m in rep.messages)


def test_validate_rejects_wrong_step():
    alg = heisenberg_algebra()
    rep = validate_algebra(NilpotentAlgebra(dim=3, step=3, tensor=alg.tensor))
    assert not rep.ok


def test_jacobi_violation_detected():
    # [e1,e2]=e3, [e1,e3]=e1 is not a Lie algebra (and not nilpotent)
    t = np.zeros((3, 3, 3))
    t[0, 1, 2], t[1, 0, 2] = 1.0, -1.0
    t[0, 2, 0], t[2, 0, 0] = 1.0, -1.0
    rep = validate_algebra(NilpotentAlgebra(dim=3, step=2, tensor=t))
    assert not rep.ok


def test_lower_central_series_heisenberg():
    dims = [b.shape[0] for b in lower_central_series(heisenberg_algebra())]
    assert dims == [3, 1, 0]


def test_lower_central_series_filiform7():
    dims = [b.shape[0] for b in lower_central_series(filiform_algebra(7))]
    assert dims == [7, 5, 4, 3, 2, 1, 0]


def test_standard_filtration_layers():
    filt = lower_central_filtration(filiform_algebra(4))
    assert filt.kind == "lower_central"
    assert filt.depth == 3
    assert filt.layer_dims() == (2, 1, 1)
    assert filt.weights == (1, 2, 3)


def test_heisenberg_weighted_depth_three():
    """Drift along e1 pushes the bracket direction out to weight 3."""
    alg = heisenberg_algebra()
    filt = weighted_filtration(alg, np.array([1.0, 0.0, 0.0]))
    assert filt.depth == 3
    assert filt.layer_dims() == (2, 0, 1)
    # e3 sits exactly in the weight-3 layer
    comps = layer_components(filt, np.array([0.0, 0.0, 1.0]))
    norms = [np.linalg.norm(c) for c in comps]
    assert norms[2] == pytest.approx(1.0, abs=1e-12)
    assert norms[0] <= 1e-12 and norms[1] <= 1e-12


def test_weighted_depends_on_v_mod_derived():
    alg = heisenberg_algebra()
    a = weighted_filtration(alg, np.array([1.0, 0.0, 0.0]))
    b = weighted_filtration(alg, np.array([1.0, 0.0, 7.0]))  # shifted by [n,n]
    assert a.depth == b.depth
    for la, lb in zip(a.ideals, b.ideals):
        assert containment_residual(la, lb) <= 1e-10
        assert containment_residual(lb, la) <= 1e-10


def test_degenerate_v_falls_back_to_gamma():
    alg = heisenberg_algebra()
    filt = weighted_filtration(alg, np.array([0.0, 0.0, 1.0]))  # v in [n,n]
    gamma = lower_central_filtration(alg)
    assert filt.depth == gamma.depth
    assert filt.layer_dims() == gamma.layer_dims()


@pytest.mark.parametrize("alg", PRESET_ALGEBRAS,
                         ids=["heisenberg", "filiform4", "engel5", "abelian2"])
def test_weighted_matches_closure_oracle(alg):
    rng = np.random.default_rng(5)
    for _ in range(10):
        v = rng.normal(size=alg.dim)
        filt = weighted_filtration(alg, v)
        chain = closure_weighted_ideals(alg.tensor, v)
        assert len(filt.ideals) <= len(chain)
        for ours, theirs in zip(filt.ideals, chain):
            assert subspace_contained(ours, theirs)
            assert subspace_contained(theirs, ours)


@pytest.mark.parametrize("alg", PRESET_ALGEBRAS,
                         ids=["heisenberg", "filiform4", "engel5", "abelian2"])
def test_filtration_invariants_random_v(alg):
    """Nestedness, bracket grading, gamma sandwich, termination window."""
    rng = np.random.default_rng(11)
    gamma = lower_central_series(alg)
    for _ in range(20):
        v = rng.normal(size=alg.dim) * rng.choice([0.1, 1.0, 10.0])
        filt = weighted_filtration(alg, v)
        ideals = filt.ideals
        assert alg.step <= filt.depth <= 2 * alg.step
        for i in range(len(ideals) - 1):
            assert containment_residual(ideals[i + 1], ideals[i]) <= 1e-10
        for i in range(1, len(ideals) + 1):
            for j in range(1, len(ideals) + 1):
                bi = ideals[min(i, len(ideals)) - 1]
                bj = ideals[min(j, len(ideals)) - 1]
                gens = [alg.bracket(a, b) for a in bi for b in bj]
                if not gens:
                    continue
                target = ideals[min(i + j, len(ideals)) - 1]
                for g in gens:
                    if np.linalg.norm(g) > 1e-12:
                        assert containment_residual(
                            g[None, :] / np.linalg.norm(g), target) <= 1e-10
        for i, gam in enumerate(gamma, start=1):
            if i <= len(ideals) and gam.shape[0]:
                assert containment_residual(gam, ideals[i - 1]) <= 1e-10
            k = min(2 * i, len(ideals))
            if i + 1 <= len(gamma):
                assert containment_residual(ideals[k - 1], gamma[i]) <= 1e-10 \
                    or ideals[k - 1].shape[0] == 0


def test_iterated_bracket_weight_bound():
    """Products with k drift factors and one n^(i) factor land in n^(2k+i)."""
    alg = filiform_algebra(4)
    rng = np.random.default_rng(3)
    v = rng.normal(size=4)
    filt = weighted_filtration(alg, v)
    ideals = filt.ideals
    for _ in range(25):
        i = rng.integers(1, len(ideals))
        basis = ideals[i - 1]
        if basis.shape[0] == 0:
            continue
        u = basis.T @ rng.normal(size=basis.shape[0])
        w = alg.bracket(v, alg.bracket(v, u))  # k = 2, m >= 2 factors
        p = min(2 * 2 + i, len(ideals))
        nw = np.linalg.norm(w)
        if nw > 1e-12:
            assert containment_residual(w[None, :] / nw, ideals[p - 1]) <= 1e-10


def test_layer_components_recombine():
    alg = free_step3_algebra()
    filt = lower_central_filtration(alg)
    rng = np.random.default_rng(8)
    x = rng.normal(size=alg.dim)
    parts = layer_project(filt, x)
    assert np.allclose(np.sum(parts, axis=0), x, atol=1e-12)
    # coordinate norms agree with the ambient projections
    for part, coord in zip(parts, layer_components(filt, x)):
        assert np.linalg.norm(part) == pytest.approx(np.linalg.norm(coord),
                                                     abs=1e-12)


def test_layer_components_trivial_split():
    filt = lower_central_filtration(heisenberg_algebra())
    parts = layer_project(filt, np.array([1.0, 0.0, 5.0]))
    assert np.allclose(parts[0], [1.0, 0.0, 0.0])
    assert np.allclose(parts[1], [0.0, 0.0, 5.0])


def test_json_round_trip():
    alg = free_step3_algebra()
    clone = algebra_from_json(algebra_to_json(alg))
    assert clone.dim == alg.dim and clone.step == alg.step
    assert np.array_equal(clone.tensor, alg.tensor)
    assert clone.labels == alg.labels


@given(st.integers(min_value=1, max_value=5))
@settings(max_examples=20, deadline=None)
def test_abelian_any_dim(dim):
    alg = abelian_algebra(dim)
    assert validate_algebra(alg).ok
    filt = lower_central_filtration(alg)
    assert filt.depth == 1
    assert filt.layer_dims() == (dim,)


@given(st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5)),
       st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5)))
@settings(max_examples=50, deadline=None)
def test_bracket_bilinear_antisymmetric(xs, ys):
    alg = heisenberg_algebra()
    x, y = np.array(xs), np.array(ys)
    assert np.allclose(alg.bracket(x, y), -alg.bracket(y, x), atol=1e-9)
    assert np.allclose(alg.bracket(2.0 * x, y), 2.0 * alg.bracket(x, y),
                       atol=1e-9)


def test_ad_matrix_matches_bracket():
    alg = free_step3_algebra()
    rng = np.random.default_rng(2)
    x, w = rng.normal(size=5), rng.normal(size=5)
    assert np.allclose(alg.ad(x) @ w, alg.bracket(x, w), atol=1e-12)
