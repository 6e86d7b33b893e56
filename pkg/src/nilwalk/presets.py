"""Named experiment setups: algebras, step laws, gauges, scan actions.

Each walk preset bundles an algebra, a finite twist group, an atomic
step law, and a policy for the filtration and gauge.  Derived data
(drift, spectral constant, centering element) comes from the step law
itself; the builder only decides whether to conjugate and which
filtration the norm lives on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import groups
from .algebra import (Filtration, NilpotentAlgebra, lower_central_filtration,
                      weighted_filtration)
from .errors import NumericalValidationError
from .norms import HomogeneousNorm, build_gauge
from .semidirect import (StepDistribution, conjugate_distribution,
                         finite_group, q_validate)
from .walker import SampleMatrix

CENTERING_TOL = 1e-12


def heisenberg_algebra() -> NilpotentAlgebra:
    """Dimension 3, step 2: [e1, e2] = e3."""
    c = np.zeros((3, 3, 3))
    c[0, 1, 2], c[1, 0, 2] = 1.0, -1.0
    return NilpotentAlgebra(dim=3, step=2, tensor=c)


def filiform_algebra(dim: int = 4) -> NilpotentAlgebra:
    """Maximal-step chain algebra: [e1, e_i] = e_{i+1} for 2 <= i < dim."""
    if dim < 3:
        raise ValueError("filiform needs dimension at least 3")
    c = np.zeros((dim, dim, dim))
    for i in range(1, dim - 1):
        c[0, i, i + 1], c[i, 0, i + 1] = 1.0, -1.0
    return NilpotentAlgebra(dim=dim, step=dim - 1, tensor=c)


def free_step3_algebra() -> NilpotentAlgebra:
    """Free 2-generator algebra cut at step 3: dimension 5.

    [e1,e2] = e3, [e1,e3] = e4, [e2,e3] = e5; extends the dimension-4
    chain algebra by the second independent weight-3 bracket.
    """
    c = np.zeros((5, 5, 5))
    for i, j, k in ((0, 1, 2), (0, 2, 3), (1, 2, 4)):
        c[i, j, k], c[j, i, k] = 1.0, -1.0
    return NilpotentAlgebra(dim=5, step=3, tensor=c)


def abelian_algebra(dim: int) -> NilpotentAlgebra:
    return NilpotentAlgebra(dim=dim, step=1, tensor=np.zeros((dim, dim, dim)))


def _uniform_generators(alg: NilpotentAlgebra, q, k: int = 2) -> StepDistribution:
    """Uniform law on +/- the first k basis directions, no twist."""
    atoms = []
    for i in range(k):
        for s in (1.0, -1.0):
            xi = np.zeros(alg.dim)
            xi[i] = s
            atoms.append(xi)
    return StepDistribution(alg=alg, q=q, probs=np.full(2 * k, 1.0 / (2 * k)),
                            xis=np.stack(atoms), kappas=np.zeros(2 * k, dtype=np.int64))


@dataclass(frozen=True)
class WalkSetup:
    """Everything a Monte Carlo run needs, plus notes for the manifest."""

    preset: str
    alg: NilpotentAlgebra
    base_dist: StepDistribution
    dist: StepDistribution          # law the walker actually runs
    filtration: Filtration
    norm: HomogeneousNorm
    conjugated: bool
    scaling_exponent: float
    eps: float | None
    notes: tuple[str, ...]


def _walk_heisenberg_srw(eps):
    alg = heisenberg_algebra()
    return alg, _uniform_generators(alg, finite_group(groups.trivial(3)))


def _walk_heisenberg_drift(eps):
    alg = heisenberg_algebra()
    xis = np.array([[1.0, 1.0, 0.0], [1.0, -1.0, 0.0]])
    dist = StepDistribution(alg=alg, q=finite_group(groups.trivial(3)),
                            probs=np.array([0.5, 0.5]), xis=xis,
                            kappas=np.zeros(2, dtype=np.int64))
    return alg, dist


def _walk_filiform4_srw(eps):
    alg = filiform_algebra(4)
    return alg, _uniform_generators(alg, finite_group(groups.trivial(4)))


def _walk_engel5_srw(eps):
    alg = free_step3_algebra()
    return alg, _uniform_generators(alg, finite_group(groups.trivial(5)))


def _walk_r2_c4(eps):
    alg = abelian_algebra(2)
    q = finite_group(groups.cyclic_rotations(4))
    dist = StepDistribution(alg=alg, q=q, probs=np.array([1.0]),
                            xis=np.array([[1.0, 0.0]]),
                            kappas=np.array([1], dtype=np.int64))
    return alg, dist


def _walk_r1_flip_eps(eps):
    if eps is None:
        eps = 0.01
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie strictly between 0 and 1")
    alg = abelian_algebra(1)
    q = finite_group(groups.sign_flip_line())
    dist = StepDistribution(alg=alg, q=q, probs=np.array([1.0 - eps, eps]),
                            xis=np.array([[1.0], [0.0]]),
                            kappas=np.array([0, 1], dtype=np.int64))
    return alg, dist


WALK_PRESETS = {
    "heisenberg-srw": (_walk_heisenberg_srw, "centred +/-e1, +/-e2 walk on the step-2 group"),
    "heisenberg-drift": (_walk_heisenberg_drift, "drifted walk, steps exp(e1 +/- e2)"),
    "filiform4-srw": (_walk_filiform4_srw, "centred generator walk on the step-3 chain group"),
    "engel5-srw": (_walk_engel5_srw, "centred generator walk on the free step-3 group"),
    "r2-c4": (_walk_r2_c4, "plane shift twisted by quarter turns"),
    "r1-flip-eps": (_walk_r1_flip_eps, "line shift with a rare sign flip (set --eps)"),
}

ALGEBRA_PRESETS = {
    "heisenberg": heisenberg_algebra,
    "filiform4": lambda: filiform_algebra(4),
    "engel5": free_step3_algebra,
    "abelian1": lambda: abelian_algebra(1),
    "abelian2": lambda: abelian_algebra(2),
}

SPLIT_PRESETS = {
    "d4-r2": (lambda: finite_group(groups.dihedral(4)),
              "dihedral group of order 8 acting on the plane"),
    "s3-r2": (lambda: finite_group(groups.symmetric3_planar()),
              "triangle symmetries (order 6) acting on the plane"),
}


def build_walk_setup(preset: str, eps: float | None = None, seed: int = 0,
                     gauge_mode: str = "bracket_hull",
                     filtration_choice: str = "auto",
                     conjugate: str = "auto") -> WalkSetup:
    """Assemble the distribution, filtration, and gauge for a walk preset.

    filtration_choice "auto" adapts the filtration to the invariant drift
    (degenerating to the lower central series for centred laws);
    "standard" forces the lower central series.  conjugate "auto" applies
    the centering conjugation whenever the law calls for one.
    """
    if preset not in WALK_PRESETS:
        raise KeyError(f"unknown walk preset {preset!r}")
    factory, _ = WALK_PRESETS[preset]
    alg, base = factory(eps)
    return assemble_setup(preset, alg, base, eps=eps, seed=seed,
                          gauge_mode=gauge_mode,
                          filtration_choice=filtration_choice,
                          conjugate=conjugate)


def assemble_setup(name: str, alg: NilpotentAlgebra, base: StepDistribution,
                   eps: float | None = None, seed: int = 0,
                   gauge_mode: str = "bracket_hull",
                   filtration_choice: str = "auto",
                   conjugate: str = "auto") -> WalkSetup:
    """Apply the conjugation/filtration/gauge policy to an explicit law."""
    rep = q_validate(alg, base.q)
    if not rep.ok:
        raise NumericalValidationError(f"twist group fails validation: {rep}")

    notes = []
    dist = base
    conjugated = False
    if conjugate not in ("auto", "never"):
        raise ValueError("conjugate must be 'auto' or 'never'")
    if conjugate == "auto" and float(np.linalg.norm(base.centering)) > CENTERING_TOL:
        dist = conjugate_distribution(base)
        conjugated = True
        notes.append("law conjugated by the centering element before walking")

    if filtration_choice == "auto":
        filt = weighted_filtration(alg, dist.v_mu)
        if float(np.linalg.norm(dist.v_mu)) <= CENTERING_TOL:
            notes.append("centred law: adapted filtration equals the lower central series")
    elif filtration_choice == "standard":
        filt = lower_central_filtration(alg)
    else:
        raise ValueError("filtration must be 'auto' or 'standard'")

    drifted = float(np.linalg.norm(dist.v_mu)) > CENTERING_TOL
    if drifted and filt.kind == "lower_central":
        s = alg.step
        exponent = (2.0 * s - 1.0) / (2.0 * s)
        notes.append("drifted walk in the unadapted gauge: displacement scale "
                     f"n^{exponent:g}")
    else:
        exponent = 0.5

    norm = build_gauge(alg, filt, mode=gauge_mode, seed=seed)
    if norm.fallback_weights:
        notes.append("hull construction degenerate on weights "
                     f"{norm.fallback_weights}; scaled gauge used there")
    return WalkSetup(preset=name, alg=alg, base_dist=base, dist=dist,
                     filtration=filt, norm=norm, conjugated=conjugated,
                     scaling_exponent=exponent, eps=eps, notes=tuple(notes))


def build_split_group(preset: str):
    if preset not in SPLIT_PRESETS:
        raise KeyError(f"unknown split preset {preset!r}")
    factory, _ = SPLIT_PRESETS[preset]
    return factory()


def stay_diagnostic(result: SampleMatrix, dist: StepDistribution,
                    eps: float, n: int) -> dict:
    """Fraction of replicates that never flipped, against the exact power.

    A replicate that avoided every flip atom ends with the twist at the
    identity and the first displacement coordinate exactly n; any flip
    makes both impossible at once, so the event is read off the final
    state exactly.
    """
    last = result.column(n)
    ident = int(dist.q.identity)
    stayed = (result.q_index[:, last] == ident) & (result.final_y[:, 0] == float(n))
    emp = float(np.mean(stayed))
    exact = float((1.0 - eps) ** n)
    half = 3.0 * float(np.sqrt(exact * (1.0 - exact) / result.replications))
    return {"empirical": emp, "exact": exact, "halfwidth_3sigma": half,
            "within_band": bool(abs(emp - exact) <= half)}
