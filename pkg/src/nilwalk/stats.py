"""Concentration diagnostics: tail curves, exponent fits, growth checks.

The estimators quantify how a family of samples concentrates:

  * tail_curve        exceedance probabilities with exact binomial bands
  * fit_alpha         two independent estimates of the exponent alpha in
                      P(|f| >= t) <= c2 exp(-c1 t^alpha): one from the
                      growth of L^p norms (||f||_p ~ p^(1/alpha)), one from
                      the slope of log(-log p) against log t
  * laplace_check     empirical moment generating function against a
                      quadratic bound exp(K t^2)
  * lil_diagnostic    per-replicate sup of |y_n| / (n log log n)^alpha
                      along dyadic times, with an unbounded-growth flag

The two alpha estimates answer different questions and are reported side
by side, never averaged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta as beta_dist

from .rng import STREAM_BOOTSTRAP, substream

MOMENT_ORDERS = (2, 4, 8, 16)
TAIL_WINDOW = (1e-4, 0.2)
BOUNDED_SUPPORT_ALPHA = 5.0
N_BOOTSTRAP = 1000


def tail_curve(samples: np.ndarray, thresholds: np.ndarray,
               level: float = 0.05):
    """(p_hat, lower, upper) exceedance estimates with Clopper-Pearson bands."""
    x = np.abs(np.asarray(samples, dtype=float))
    t = np.asarray(thresholds, dtype=float)
    n = x.size
    k = (x[None, :] >= t[:, None]).sum(axis=1)
    p_hat = k / n
    lo = np.where(k == 0, 0.0, beta_dist.ppf(level / 2, np.maximum(k, 1), n - np.maximum(k, 1) + 1))
    hi = np.where(k == n, 1.0, beta_dist.ppf(1 - level / 2, k + 1, np.maximum(n - k, 1)))
    return p_hat, lo, hi


@dataclass(frozen=True)
class ConcentrationFit:
    alpha_moments: float
    alpha_moments_ci: tuple[float, float]
    alpha_tail: float
    alpha_tail_ci: tuple[float, float]
    c_moment: float               # ||f||_p <~ c_moment * p^(1/alpha_moments)
    c1: float                     # tail bound c2 exp(-c1 t^alpha_tail)
    c2: float
    moment_orders: tuple[int, ...]
    family_norms: tuple[float, ...]   # sup over n of ||f_n||_p, per order
    tail_t: tuple[float, ...]
    tail_p: tuple[float, ...]
    flags: tuple[str, ...] = ()


def _family_norms(groups: list[np.ndarray], orders) -> np.ndarray:
    out = []
    for p in orders:
        vals = [float(np.mean(np.abs(g) ** p) ** (1.0 / p)) for g in groups]
        out.append(max(vals))
    return np.array(out)


def _sup_tail(groups: list[np.ndarray], t: np.ndarray) -> np.ndarray:
    """Family exceedance sup_n P(|f_n| >= t), evaluated on a grid."""
    p = np.zeros_like(t)
    for g in groups:
        x = np.abs(g)
        p = np.maximum(p, (x[None, :] >= t[:, None]).mean(axis=1))
    return p


def _tail_grid(groups: list[np.ndarray], window) -> np.ndarray:
    pooled = np.sort(np.abs(np.concatenate(groups)))
    n = pooled.size
    lo_p = max(window[0], 2.0 / n)
    probs = np.geomspace(window[1], lo_p, 25)
    idx = np.clip((np.ceil((1.0 - probs) * n) - 1).astype(int), 0, n - 1)
    return np.unique(pooled[idx])


def _fit_alpha_once(groups, orders, t_grid, window):
    fam = _family_norms(groups, orders)
    lp = np.log(np.asarray(orders, dtype=float))
    slope, intercept = np.polyfit(lp, np.log(fam), 1)
    alpha_m = 1.0 / slope if slope > 0 else np.inf
    c_m = float(np.exp(intercept))

    p_hat = _sup_tail(groups, t_grid)
    mask = (p_hat >= window[0]) & (p_hat <= window[1]) & (t_grid > 0) & (p_hat < 1)
    if mask.sum() >= 3:
        x = np.log(t_grid[mask])
        yv = np.log(-np.log(p_hat[mask]))
        alpha_t, icpt_t = np.polyfit(x, yv, 1)
    else:
        alpha_t, icpt_t = np.nan, np.nan
    return alpha_m, c_m, alpha_t, p_hat, mask


def fit_alpha(samples_by_n: dict[int, np.ndarray],
              orders=MOMENT_ORDERS, window=TAIL_WINDOW,
              n_bootstrap: int = N_BOOTSTRAP, seed: int = 0) -> ConcentrationFit:
    """Joint concentration-exponent fit for a family of sample groups.

    The moment route regresses the family norm sup_n ||f_n||_p on p; the
    tail route regresses the double log of the family exceedance on log t
    inside the window.  Confidence intervals are percentile bootstrap.
    """
    groups = [np.abs(np.asarray(v, dtype=float).ravel()) for v in samples_by_n.values()]
    if not groups:
        raise ValueError("need at least one sample group")
    flags = []
    if all(float(np.std(g)) < 1e-15 for g in groups):
        flags.append("degenerate-samples")
    t_grid = _tail_grid(groups, window)
    alpha_m, c_m, alpha_t, p_hat, mask = _fit_alpha_once(groups, orders, t_grid, window)
    if mask.sum() < 3:
        flags.append("tail-window-too-narrow")

    rng = substream(seed, STREAM_BOOTSTRAP, 1)
    boots_m, boots_t = [], []
    for _ in range(n_bootstrap):
        res = [g[rng.integers(0, g.size, g.size)] for g in groups]
        am, _, at, _, bmask = _fit_alpha_once(res, orders, t_grid, window)
        boots_m.append(am)
        if np.isfinite(at):
            boots_t.append(at)
    ci_m = _pct_ci(boots_m)
    ci_t = _pct_ci(boots_t) if boots_t else (np.nan, np.nan)

    # second pass for the tail-bound constants with alpha fixed
    c1, c2 = np.nan, np.nan
    if np.isfinite(alpha_t) and mask.sum() >= 2:
        design = t_grid[mask] ** alpha_t
        a, b = np.polyfit(design, np.log(p_hat[mask]), 1)
        c1, c2 = float(-a), float(np.exp(b))

    if np.isfinite(alpha_m) and alpha_m > BOUNDED_SUPPORT_ALPHA and \
            (not np.isfinite(alpha_t) or alpha_t > BOUNDED_SUPPORT_ALPHA):
        flags.append("bounded-support-regime")

    return ConcentrationFit(
        alpha_moments=float(alpha_m), alpha_moments_ci=ci_m,
        alpha_tail=float(alpha_t), alpha_tail_ci=ci_t,
        c_moment=c_m, c1=c1, c2=c2,
        moment_orders=tuple(orders),
        family_norms=tuple(_family_norms(groups, orders)),
        tail_t=tuple(float(t) for t in t_grid[mask]),
        tail_p=tuple(float(p) for p in p_hat[mask]),
        flags=tuple(flags),
    )


def _pct_ci(values, lo: float = 2.5, hi: float = 97.5) -> tuple[float, float]:
    arr = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    if arr.size == 0:
        return (np.nan, np.nan)
    return (float(np.percentile(arr, lo)), float(np.percentile(arr, hi)))


# ---------------------------------------------------------------------------
# moment generating function check

@dataclass(frozen=True)
class LaplaceReport:
    t_grid: tuple[float, ...]
    log_mgf: tuple[float, ...]
    bound: tuple[float, ...]
    margin_upper: tuple[float, ...]   # upper CI of log MGF minus bound
    margin_lower: tuple[float, ...]   # lower CI of log MGF minus bound
    verdict: str                      # subgaussian | subexponential | exceeds
    window: float | None              # |t| < window claimed, if any
    first_violation_t: float | None
    truncated_at: float | None        # grid cut where exp overflowed
    max_margin: float


def laplace_check(samples: np.ndarray, bound_k: float,
                  window: float | None = None,
                  t_max: float | None = None, grid_points: int = 41) -> LaplaceReport:
    """Compare the empirical log MGF of centred samples with K t^2.

    The verdict is based on the lower confidence edge: a point violates
    only when even the optimistic estimate sits above the bound.  When the
    exponential overflows at large |t| the grid is truncated and reported.
    """
    x = np.asarray(samples, dtype=float)
    x = x - x.mean()
    n = x.size
    if t_max is None:
        t_max = 2.0 * window if window else 4.0 / max(float(np.std(x)), 1e-12)
    tg = np.linspace(-t_max, t_max, grid_points)
    tg = tg[tg != 0]
    hi_x = float(np.max(np.abs(x)))
    # the standard error squares exp(t x), so the cutoff is half the
    # exponent at which float64 overflows
    keep = np.abs(tg) * hi_x < 350.0
    truncated = None if keep.all() else float(np.min(np.abs(tg[~keep])))
    tg = tg[keep]
    log_mgf, m_up, m_lo, bound = [], [], [], []
    for t in tg:
        e = np.exp(t * x)
        m = float(e.mean())
        se = float(e.std(ddof=1)) / np.sqrt(n)
        b = bound_k * t * t
        log_mgf.append(np.log(m))
        m_up.append(np.log(m + 1.96 * se) - b)
        m_lo.append(np.log(max(m - 1.96 * se, 1e-300)) - b)
        bound.append(b)
    log_mgf = np.array(log_mgf)
    m_up = np.array(m_up)
    m_lo = np.array(m_lo)
    viol = np.array(m_lo) > 0
    first_viol = float(np.min(np.abs(tg[viol]))) if viol.any() else None
    if not viol.any():
        verdict = "subgaussian"
    elif window is not None and first_viol is not None and first_viol >= window:
        verdict = "subexponential"
    else:
        verdict = "exceeds"
    return LaplaceReport(
        t_grid=tuple(float(t) for t in tg),
        log_mgf=tuple(float(v) for v in log_mgf),
        bound=tuple(float(b) for b in bound),
        margin_upper=tuple(float(v) for v in m_up),
        margin_lower=tuple(float(v) for v in m_lo),
        verdict=verdict, window=window,
        first_violation_t=first_viol, truncated_at=truncated,
        max_margin=float(np.max(m_lo)),
    )


# ---------------------------------------------------------------------------
# iterated-logarithm growth diagnostic

@dataclass(frozen=True)
class LilReport:
    alpha: float
    dyadic_n: tuple[int, ...]
    c_hat: np.ndarray                 # per replicate
    median_c: float
    frac_peak_top: float
    unbounded_flag: bool
    median_ratio: tuple[float, ...]   # per-j median of the scaled ratio
    top_window: int = 3


def lil_diagnostic(dyadic_n, values: np.ndarray, alpha: float,
                   top_window: int = 3) -> LilReport:
    """Scaled growth along dyadic times.

    values[r, j] is the displacement statistic of replicate r at time
    dyadic_n[j].  The per-replicate constant is max_j of
    values / (n log log n)^alpha.  Growth is flagged when the scaled
    ratio is still climbing at the end of the range: in more than half
    of the replicates the largest ratio occurs among the last
    `top_window` times.  When the exponent is right the ratio sequence
    is roughly stationary and its peak falls anywhere, so the fraction
    stays far below one half; when the exponent is too small the ratio
    drifts upward and the peak concentrates at the top.
    """
    ns = np.asarray(dyadic_n, dtype=float)
    vals = np.asarray(values, dtype=float)
    if vals.shape[1] != ns.size:
        raise ValueError("values must have one column per dyadic time")
    usable = ns >= 4  # log log n must be positive
    ns = ns[usable]
    vals = vals[:, usable]
    denom = (ns * np.log(np.log(ns))) ** alpha
    ratios = vals / denom[None, :]
    c_hat = ratios.max(axis=1)
    peak_top = np.argmax(ratios, axis=1) >= ratios.shape[1] - top_window
    frac = float(np.mean(peak_top))
    return LilReport(alpha=float(alpha), dyadic_n=tuple(int(v) for v in ns),
                     c_hat=c_hat, median_c=float(np.median(c_hat)),
                     frac_peak_top=frac, unbounded_flag=frac > 0.5,
                     median_ratio=tuple(float(v) for v in np.median(ratios, axis=0)),
                     top_window=top_window)


# ---------------------------------------------------------------------------
# plain SVG rendering (no plotting dependency, fully deterministic)

def render_tail_svg(t: np.ndarray, p_hat: np.ndarray, lo: np.ndarray,
                    hi: np.ndarray, fitted=None, title: str = "tail curve") -> str:
    """Static log-log tail plot as an SVG string.

    fitted, if given, is (c1, c2, alpha) for the curve c2 exp(-c1 t^alpha).
    """
    w, h, m = 640, 420, 56
    t = np.asarray(t, dtype=float)
    p = np.asarray(p_hat, dtype=float)
    keep = (t > 0) & (p > 0)
    t, p = t[keep], p[keep]
    lo = np.maximum(np.asarray(lo, dtype=float)[keep], 1e-12)
    hi = np.maximum(np.asarray(hi, dtype=float)[keep], 1e-12)
    if t.size == 0:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}"/>'
    lx, ly = np.log10(t), np.log10(p)
    x0, x1 = float(lx.min()), float(lx.max()) or 1.0
    ylo = float(np.log10(lo).min())
    y1 = float(np.maximum(ly, np.log10(hi)).max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == ylo:
        y1 = ylo + 1.0

    def sx(v):
        return m + (v - x0) / (x1 - x0) * (w - 2 * m)

    def sy(v):
        return h - m - (v - ylo) / (y1 - ylo) * (h - 2 * m)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
             f'viewBox="0 0 {w} {h}">',
             f'<rect width="{w}" height="{h}" fill="white"/>',
             f'<text x="{w/2:.1f}" y="24" text-anchor="middle" '
             f'font-family="monospace" font-size="14">{title}</text>',
             f'<line x1="{m}" y1="{h-m}" x2="{w-m}" y2="{h-m}" stroke="black"/>',
             f'<line x1="{m}" y1="{m}" x2="{m}" y2="{h-m}" stroke="black"/>']
    for xv, pl, ph in zip(lx, np.log10(lo), np.log10(hi)):
        parts.append(f'<line x1="{sx(xv):.2f}" y1="{sy(pl):.2f}" '
                     f'x2="{sx(xv):.2f}" y2="{sy(ph):.2f}" stroke="#999"/>')
    pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(lx, ly))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#205080" stroke-width="1.5"/>')
    for a, b in zip(lx, ly):
        parts.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="#205080"/>')
    if fitted is not None:
        c1, c2, al = fitted
        tt = np.geomspace(10 ** x0, 10 ** x1, 64)
        pp = np.maximum(c2 * np.exp(-c1 * tt ** al), 1e-12)
        pts = " ".join(f"{sx(np.log10(a)):.2f},{sy(np.log10(b)):.2f}"
                       for a, b in zip(tt, pp))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#a03020" '
                     f'stroke-dasharray="5,4"/>')
    parts.append(f'<text x="{w/2:.1f}" y="{h-16}" text-anchor="middle" '
                 f'font-family="monospace" font-size="12">log10 t</text>')
    parts.append(f'<text x="16" y="{h/2:.1f}" font-family="monospace" font-size="12" '
                 f'transform="rotate(-90 16 {h/2:.1f})" text-anchor="middle">log10 P</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def render_histogram_svg(counts: np.ndarray, edges: np.ndarray,
                         title: str = "histogram",
                         mark: float | None = None) -> str:
    """Bar-chart SVG for precomputed histogram counts; mark draws a vertical line."""
    w, h, m = 640, 420, 56
    counts = np.asarray(counts, dtype=float)
    edges = np.asarray(edges, dtype=float)
    peak = max(float(counts.max()), 1.0)
    x0, x1 = float(edges[0]), float(edges[-1])
    if x1 == x0:
        x1 = x0 + 1.0

    def sx(v):
        return m + (v - x0) / (x1 - x0) * (w - 2 * m)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
             f'viewBox="0 0 {w} {h}">',
             f'<rect width="{w}" height="{h}" fill="white"/>',
             f'<text x="{w/2:.1f}" y="24" text-anchor="middle" '
             f'font-family="monospace" font-size="14">{title}</text>',
             f'<line x1="{m}" y1="{h-m}" x2="{w-m}" y2="{h-m}" stroke="black"/>',
             f'<line x1="{m}" y1="{m}" x2="{m}" y2="{h-m}" stroke="black"/>']
    for c, e0, e1 in zip(counts, edges[:-1], edges[1:]):
        bh = (h - 2 * m) * c / peak
        parts.append(f'<rect x="{sx(e0):.2f}" y="{h-m-bh:.2f}" '
                     f'width="{max(sx(e1)-sx(e0)-0.5, 0.5):.2f}" height="{bh:.2f}" '
                     f'fill="#4878a8"/>')
    if mark is not None and x0 <= mark <= x1:
        parts.append(f'<line x1="{sx(mark):.2f}" y1="{m}" x2="{sx(mark):.2f}" '
                     f'y2="{h-m}" stroke="#a03020" stroke-dasharray="5,4"/>')
    parts.append(f'<text x="{w/2:.1f}" y="{h-16}" text-anchor="middle" '
                 f'font-family="monospace" font-size="12">value</text>')
    parts.append("</svg>")
    return "\n".join(parts)
