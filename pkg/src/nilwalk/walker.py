"""Random walk simulation with drift recentring and running maxima.

The walk w_n multiplies i.i.d. increments (xi, kappa) in the semidirect
product.  What gets measured is the recentred nilpotent part

    y_n = z_n * (-n v),

v the invariant drift of the step law.  Rather than recomputing that
product each step, the engine uses the algebraic identity

    y_n = y_{n-1} * C_{n-1}(Ad(q_{n-1}) zeta_n),      zeta = xi * (-v),

where C_m is conjugation by m v.  On the Lie algebra C_m is the matrix
exponential of ad_{m v}, a polynomial in m because ad_v is nilpotent, so
each step costs a single BCH product.  A cross-check mode also tracks z_n
and verifies the direct recentring at every checkpoint.

Replicates advance in lockstep as numpy batches.  Each replicate draws
from its own counter-based substream keyed by (seed, replicate), and the
thread pool splits work over fixed-size replicate chunks, so results are
bit-identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import layer_components
from .bch import bch
from .norms import HomogeneousNorm, hom_norm
from .errors import ResourceCeilingError
from .rng import STREAM_WALK, AliasSampler, substream
from .semidirect import StepDistribution

RNG_BLOCK_STEPS = 256
REPLICATE_CHUNK = 512
DEFAULT_MAX_WORK = 2 ** 34


def thread_cap() -> int:
    raw = os.environ.get("NILWALK_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = min(os.cpu_count() or 1, 4)
    return n


@dataclass(frozen=True)
class WalkConfig:
    dist: StepDistribution
    norm: HomogeneousNorm
    n_steps: int
    checkpoints: tuple[int, ...]
    replications: int
    seed: int
    scaling_exponent: float = 0.5
    cross_check: bool = False
    conjugated: bool = False
    centering_offset: float = 0.0
    max_work: int = DEFAULT_MAX_WORK

    def __post_init__(self):
        cps = tuple(sorted(set(int(c) for c in self.checkpoints)))
        if not cps:
            raise ValueError("need at least one checkpoint")
        if cps[0] < 1 or cps[-1] != self.n_steps:
            raise ValueError("checkpoints must lie in [1, n_steps] and include n_steps")
        object.__setattr__(self, "checkpoints", cps)
        if self.n_steps * self.replications > self.max_work:
            raise ResourceCeilingError(
                f"requested {self.n_steps} steps x {self.replications} replicates "
                f"exceeds the work ceiling {self.max_work}")


@dataclass
class SampleMatrix:
    """Checkpointed Monte Carlo output; rows are replicates."""

    checkpoints: tuple[int, ...]
    running_max: np.ndarray        # (R, K) running max of |y_k|
    y_norm: np.ndarray             # (R, K) |y_n| at the checkpoint
    layer_euclid: np.ndarray       # (R, K, L) euclidean layer components of y_n
    q_index: np.ndarray            # (R, K) twist position
    final_y: np.ndarray            # (R, d)
    scaling_exponent: float
    cross_residual: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def replications(self) -> int:
        return self.running_max.shape[0]

    def scaled_max(self) -> np.ndarray:
        n = np.asarray(self.checkpoints, dtype=float)
        return self.running_max / n[None, :] ** self.scaling_exponent

    def column(self, n: int) -> int:
        return self.checkpoints.index(n)


def recentre(dist: StepDistribution, z: np.ndarray, n: int) -> np.ndarray:
    """y_n = z_n * (-n v_mu), the drift-removed position."""
    return bch(dist.alg, z, -float(n) * dist.v_mu)


def _ad_power_series(dist: StepDistribution) -> list[np.ndarray]:
    """Matrices ad_v^k / k! for k = 0 .. step-1 (exact conjugation by m v)."""
    alg = dist.alg
    ad_v = alg.ad(dist.v_mu)
    mats = [np.eye(alg.dim)]
    for k in range(1, alg.step):
        mats.append(mats[-1] @ ad_v / k)
    return mats


def atom_indices(dist: StepDistribution, seed: int, replicate: int,
                 n_steps: int) -> np.ndarray:
    """The atom choices a replicate will make; mirrors the engine's draws."""
    sampler = AliasSampler(dist.probs)
    u = substream(seed, STREAM_WALK, replicate).random((n_steps, 2))
    return sampler.sample(u)


def _run_chunk(cfg: WalkConfig, rep_ids: np.ndarray) -> dict:
    dist = cfg.dist
    alg = dist.alg
    d = alg.dim
    r = len(rep_ids)
    k_cp = len(cfg.checkpoints)
    cp_set = {n: i for i, n in enumerate(cfg.checkpoints)}

    sampler = AliasSampler(dist.probs)
    drifted = bool(np.linalg.norm(dist.v_mu) > 0)
    zetas = np.stack([bch(alg, xi, -dist.v_mu) for xi in dist.xis]) if drifted \
        else dist.xis
    ad_pows = _ad_power_series(dist) if drifted else None
    q_trivial = dist.q.order == 1
    mats = dist.q.matrices
    table = dist.q.table

    y = np.zeros((r, d))
    z = np.zeros((r, d)) if cfg.cross_check else None
    qidx = np.full(r, dist.q.identity, dtype=np.int64)
    run_max = np.zeros(r)

    out_max = np.zeros((r, k_cp))
    out_norm = np.zeros((r, k_cp))
    out_layers = np.zeros((r, k_cp, len(cfg.norm.filtration.layers)))
    out_q = np.zeros((r, k_cp), dtype=np.int64)
    cross_resid = 0.0

    gens = [substream(cfg.seed, STREAM_WALK, int(rep)) for rep in rep_ids]
    step = 0
    while step < cfg.n_steps:
        block = min(RNG_BLOCK_STEPS, cfg.n_steps - step)
        u = np.stack([g.random((block, 2)) for g in gens])  # (r, block, 2)
        for j in range(block):
            n = step + j + 1
            aidx = sampler.sample(u[:, j, :])
            zeta = zetas[aidx]                       # (r, d)
            if not q_trivial:
                inc = np.einsum("rij,rj->ri", mats[qidx], zeta)
            else:
                inc = zeta
            if drifted:
                m = float(n - 1)
                conj = inc.copy()
                scale = 1.0
                for p in range(1, len(ad_pows)):
                    scale *= m
                    conj += scale * (inc @ ad_pows[p].T)
                inc = conj
            y = bch(alg, y, inc)
            if cfg.cross_check:
                raw = dist.xis[aidx]
                zinc = raw if q_trivial else np.einsum("rij,rj->ri", mats[qidx], raw)
                z = bch(alg, z, zinc)
            if not q_trivial:
                qidx = table[qidx, dist.kappas[aidx]]
            val = hom_norm(cfg.norm, y)
            run_max = np.maximum(run_max, val)
            if n in cp_set:
                col = cp_set[n]
                out_max[:, col] = run_max
                out_norm[:, col] = val
                comps = layer_components(cfg.norm.filtration, y)
                for li, c in enumerate(comps):
                    out_layers[:, col, li] = np.linalg.norm(c, axis=-1) if c.shape[-1] else 0.0
                out_q[:, col] = qidx
                if cfg.cross_check:
                    direct = recentre(dist, z, n)
                    cross_resid = max(cross_resid,
                                      float(np.max(np.abs(direct - y))))
        step += block

    return {"max": out_max, "norm": out_norm, "layers": out_layers,
            "q": out_q, "final_y": y,
            "cross": cross_resid if cfg.cross_check else None}


def monte_carlo(cfg: WalkConfig) -> SampleMatrix:
    """Run all replicates; byte-stable for any NILWALK_THREADS value."""
    chunks = [np.arange(lo, min(lo + REPLICATE_CHUNK, cfg.replications))
              for lo in range(0, cfg.replications, REPLICATE_CHUNK)]
    workers = max(1, min(thread_cap(), len(chunks)))
    if workers == 1:
        results = [_run_chunk(cfg, ch) for ch in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda ch: _run_chunk(cfg, ch), chunks))
    out = SampleMatrix(
        checkpoints=cfg.checkpoints,
        running_max=np.concatenate([res["max"] for res in results]),
        y_norm=np.concatenate([res["norm"] for res in results]),
        layer_euclid=np.concatenate([res["layers"] for res in results]),
        q_index=np.concatenate([res["q"] for res in results]),
        final_y=np.concatenate([np.atleast_2d(res["final_y"]) for res in results]),
        scaling_exponent=cfg.scaling_exponent,
        cross_residual=(max(res["cross"] for res in results)
                        if cfg.cross_check else None),
        meta={"conjugated": cfg.conjugated,
              "centering_offset": cfg.centering_offset,
              "seed": cfg.seed},
    )
    return out


def simulate_walk(cfg: WalkConfig, replicate: int = 0) -> SampleMatrix:
    """One trajectory (the given replicate), same stream as monte_carlo."""
    res = _run_chunk(cfg, np.array([replicate]))
    return SampleMatrix(
        checkpoints=cfg.checkpoints,
        running_max=res["max"], y_norm=res["norm"], layer_euclid=res["layers"],
        q_index=res["q"], final_y=np.atleast_2d(res["final_y"]),
        scaling_exponent=cfg.scaling_exponent,
        cross_residual=res["cross"],
        meta={"conjugated": cfg.conjugated,
              "centering_offset": cfg.centering_offset, "seed": cfg.seed},
    )


def doubling_compose(dist: StepDistribution, y1: np.ndarray, q1: np.ndarray,
                     y2: np.ndarray, q2: np.ndarray, n: int):
    """Combine two independent n-step runs into a 2n-step state.

    (y_{2n}, q_{2n}) = (y_n * n v * Ad(q_n) y'_n * (-n v), q_n q'_n); the
    distributional identity behind time-doubling arguments.
    """
    alg = dist.alg
    nv = float(n) * dist.v_mu
    y1 = np.atleast_2d(y1)
    y2 = np.atleast_2d(y2)
    q1 = np.atleast_1d(q1)
    q2 = np.atleast_1d(q2)
    rot = np.einsum("rij,rj->ri", dist.q.matrices[q1], y2)
    inner = bch(alg, bch(alg, nv, rot), -nv)
    y = bch(alg, y1, inner)
    q = dist.q.table[q1, q2]
    return y, q
