"""Root counting: sign-scan + bisection, and the delta-integral cross-check.

Counting proceeds on the oversampled FFT grid: every sign change brackets a
root (simple roots are a.s. the only kind), every bracket is refined by
bisection plus a short guarded Newton polish.  Cells whose |P| dips near
zero without a sign change are audited through the stationary point of P:
they hide either nothing, a tangency, or a pair of roots missed by the scan.

``count_kacrice`` evaluates (1/2 delta) * int |P'| 1_{|P| < delta} dt by
locating the two |P| = delta crossings around each root and integrating
|P'| with 15-node Gauss-Legendre in between; it must reproduce the integer
count whenever delta is below the sample's safe threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from trigroots.ensemble import CoefficientSample
from trigroots.polyeval import (
    FULL,
    EvaluationGrid,
    WindowSpec,
    eval_grid,
    eval_grid_batch,
    eval_point,
    eval_points,
)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)

#: |P| at an audited stationary point below this (times the sample scale)
#: cannot be told apart from a double root in double precision
_TANGENCY_EPS = 1e-9

#: cubic-Hermite extremum estimates within this fraction of the sample
#: scale are re-resolved by bisection (interpolation error is ~1e-4 of
#: scale at the default oversampling, far below the margin)
_SCREEN_MARGIN = 1e-3

_NEWTON_POLISH_STEPS = 3
_AUDIT_BISECT_STAGE1 = 14
_AUDIT_BISECT_STAGE2 = 26
_CROSSING_BISECT_STEPS = 45

_AUDIT_CLEAN, _AUDIT_DOUBLE, _AUDIT_TANGENT = 0, 1, 2


@dataclass(frozen=True)
class RootCountResult:
    count: int
    roots: np.ndarray
    residuals: np.ndarray | None
    derivatives: np.ndarray | None
    tangency_cells: tuple[int, ...]   # all audited dip cells
    unresolved_cells: tuple[int, ...]  # audited cells stuck at a tangency
    uncertain: bool
    n: int
    window: WindowSpec
    M: int
    tol: float


@dataclass(frozen=True)
class KacRiceResult:
    value: float
    flagged: bool
    safe_delta_estimate: float
    delta: float
    root_count: int

    def __float__(self):
        return self.value


def default_tol(n: int) -> float:
    return 1e-12 * n


def gaussian_expectation_exact(n: int, window: WindowSpec = FULL) -> float:
    """Mean root count of the Gaussian ensemble, exact at every n.

    The half-window value is half the full-window one (stationarity of the
    Gaussian ensemble; verified by Monte Carlo, not assumed from theory).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    full = 2.0 * math.sqrt((2 * n + 1) * (n + 1) / 6.0)
    return full if window.kind == "full" else 0.5 * full


def _cell_arrays(grid: EvaluationGrid, sample: CoefficientSample):
    """Left/right values per scan cell, closing the window as needed."""
    P, Q = grid.P, grid.Pprime
    if grid.window.circular:
        Pl, Pr = P, np.roll(P, -1)
        Ql, Qr = Q, np.roll(Q, -1)
    else:
        p_end, q_end = eval_point(sample, grid.window.end(grid.n))
        Pl, Pr = P, np.append(P[1:], p_end)
        Ql, Qr = Q, np.append(Q[1:], q_end)
    return Pl, Pr, Ql, Qr


def _signs(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0.0, 1.0, -1.0)


def _audit_candidates(Pl, Pr, Ql, Qr, h):
    """Cells with no sign change, a stationary point, and a suspicious dip."""
    crossing = _signs(Pl) * _signs(Pr) < 0
    dip = np.minimum(np.abs(Pl), np.abs(Pr)) < 0.5 * h * np.maximum(np.abs(Ql), np.abs(Qr))
    stationary = _signs(Ql) * _signs(Qr) < 0
    return crossing, (~crossing) & stationary & dip


def _hermite_extremum(p0, p1, q0, q1, h):
    """Interior stationary point of the cubic Hermite interpolant per cell.

    Returns (x, value) with x in (0, 1) cell coordinates; x is NaN when the
    quadratic derivative has no clean interior root (sent to bisection).
    """
    m0, m1 = h * q0, h * q1
    a = 6.0 * (p0 - p1) + 3.0 * (m0 + m1)
    b = -6.0 * (p0 - p1) - 4.0 * m0 - 2.0 * m1
    c = m0

    def cubic(x):
        x2, x3 = x * x, x * x * x
        return (p0 * (2 * x3 - 3 * x2 + 1) + m0 * (x3 - 2 * x2 + x)
                + p1 * (-2 * x3 + 3 * x2) + m1 * (x3 - x2))

    lin = np.abs(a) <= 1e-14 * np.maximum(np.abs(b), 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        xl = np.where(lin, -c / np.where(b == 0.0, np.nan, b), np.nan)
        disc = b * b - 4.0 * a * c
        sq = np.sqrt(np.maximum(disc, 0.0))
        qq = -0.5 * (b + np.where(b >= 0, sq, -sq))
        x1 = np.where(~lin & (disc >= 0.0), qq / np.where(a == 0.0, np.nan, a), np.nan)
        x2 = np.where(~lin & (disc >= 0.0) & (qq != 0.0), c / np.where(qq == 0.0, np.nan, qq), np.nan)
    x = np.full_like(p0, np.nan)
    best = np.full_like(p0, np.inf)
    for cand in (xl, x1, x2):
        ok = np.isfinite(cand) & (cand > 0.0) & (cand < 1.0)
        v = np.where(ok, np.abs(cubic(np.where(ok, cand, 0.5))), np.inf)
        better = ok & (v < best)
        x = np.where(better, cand, x)
        best = np.where(better, v, best)
    val = cubic(np.where(np.isnan(x), 0.5, x))
    return x, val


def _resolve_audits(p0, p1, q0, q1, h, t_left, scale, pq_fn):
    """Classify audited cells: clean, a hidden root pair, or tangency.

    The cubic-Hermite extremum screens out clear cases; only cells whose
    interpolated extremum is within the screen margin of zero (or has no
    clean quadratic root) are resolved by bisection on the derivative sign
    change, with extra refinement for near-zero stationary values.
    Returns (status, t_star) per cell.
    """
    scale = np.broadcast_to(np.asarray(scale, dtype=float), p0.shape)
    x, val = _hermite_extremum(p0, p1, q0, q1, h)
    needs = np.isnan(x) | (np.abs(val) <= _SCREEN_MARGIN * scale)
    status = np.where((~needs) & (_signs(val) != _signs(p0)),
                      _AUDIT_DOUBLE, _AUDIT_CLEAN)
    t_star = t_left + np.where(np.isnan(x), 0.5, x) * h

    if needs.any():
        idx = np.nonzero(needs)[0]
        lo = t_left[idx].astype(float)
        hi = lo + h
        _, q_lo = pq_fn(lo, idx)
        s_lo = _signs(q_lo)
        for _ in range(_AUDIT_BISECT_STAGE1):
            mid = 0.5 * (lo + hi)
            _, q_mid = pq_fn(mid, idx)
            left = _signs(q_mid) == s_lo
            lo = np.where(left, mid, lo)
            hi = np.where(left, hi, mid)
        ts = 0.5 * (lo + hi)
        ps, _ = pq_fn(ts, idx)
        tiny = np.abs(ps) <= 1e-6 * scale[idx]
        if tiny.any():
            sub = np.nonzero(tiny)[0]
            lo2, hi2, s2 = lo[sub], hi[sub], s_lo[sub]
            for _ in range(_AUDIT_BISECT_STAGE2):
                mid = 0.5 * (lo2 + hi2)
                _, q_mid = pq_fn(mid, idx[sub])
                left = _signs(q_mid) == s2
                lo2 = np.where(left, mid, lo2)
                hi2 = np.where(left, hi2, mid)
            ts2 = 0.5 * (lo2 + hi2)
            ps2, _ = pq_fn(ts2, idx[sub])
            ts[sub] = ts2
            ps[sub] = ps2
        tangent = np.abs(ps) <= _TANGENCY_EPS * scale[idx]
        double = (~tangent) & (_signs(ps) != _signs(p0[idx]))
        status[idx] = np.select([tangent, double], [_AUDIT_TANGENT, _AUDIT_DOUBLE],
                                default=_AUDIT_CLEAN)
        t_star[idx] = ts
    return status, t_star


def count_roots(sample: CoefficientSample, window: WindowSpec = FULL,
                M: int | None = None, tol: float | None = None,
                refine: bool = True) -> RootCountResult:
    """Count (and optionally refine) the real roots in the window.

    With ``refine=False`` the count is identical but root locations are
    linear-interpolation estimates and residuals are not evaluated.
    """
    n = sample.n
    if tol is None:
        tol = default_tol(n)
    grid = eval_grid(sample, window, M)
    h = grid.spacing
    if not 0.0 < tol < h:
        raise ValueError(f"tol={tol} outside (0, grid spacing {h})")
    scale = float(np.max(np.abs(grid.P)))
    if scale == 0.0:
        return RootCountResult(0, np.empty(0), None, None, (), (), True,
                               n, window, grid.M, tol)
    Pl, Pr, Ql, Qr = _cell_arrays(grid, sample)
    crossing, audit = _audit_candidates(Pl, Pr, Ql, Qr, h)
    t_left = grid.t_values()

    lo = t_left[crossing]
    hi = lo + h
    s_lo = _signs(Pl[crossing])

    uncertain = False
    unresolved: tuple[int, ...] = ()
    audit_cells = np.flatnonzero(audit)
    if audit_cells.size:
        def pq_fn(ts, which):
            return eval_points(sample, ts)

        status, t_star = _resolve_audits(
            Pl[audit_cells], Pr[audit_cells], Ql[audit_cells], Qr[audit_cells],
            h, t_left[audit_cells], scale, pq_fn)
        tangent = status == _AUDIT_TANGENT
        uncertain = bool(tangent.any())
        unresolved = tuple(audit_cells[tangent].tolist())
        double = status == _AUDIT_DOUBLE
        if double.any():
            tl = t_left[audit_cells[double]]
            ts = t_star[double]
            sl = _signs(Pl[audit_cells[double]])
            lo = np.concatenate([lo, tl, ts])
            hi = np.concatenate([hi, ts, tl + h])
            s_lo = np.concatenate([s_lo, sl, -sl])

    if lo.size == 0:
        return RootCountResult(0, np.empty(0), np.empty(0) if refine else None,
                               np.empty(0) if refine else None,
                               tuple(audit_cells.tolist()), unresolved, uncertain,
                               n, window, grid.M, tol)

    if refine:
        roots, resid, deriv = _refine_brackets(sample, lo, hi, s_lo, tol)
    else:
        # linear interpolation of the crossing inside each bracket
        p_lo, _ = eval_points(sample, lo)
        p_hi, _ = eval_points(sample, hi)
        denom = np.where(p_lo - p_hi == 0.0, 1.0, p_lo - p_hi)
        roots = lo + (hi - lo) * p_lo / denom
        resid = deriv = None

    order = np.argsort(roots)
    roots = roots[order]
    if resid is not None:
        resid = resid[order]
        deriv = deriv[order]
    count = int(roots.size)
    if count > 2 * n:
        uncertain = True  # exceeds the degree bound: grid artifact
    return RootCountResult(count, roots, resid, deriv,
                           tuple(audit_cells.tolist()), unresolved, uncertain,
                           n, window, grid.M, tol)


def _refine_brackets(sample, lo, hi, s_lo, tol):
    """Vectorized bisection to width tol, then a guarded Newton polish."""
    width = float(np.max(hi - lo))
    steps = max(1, int(math.ceil(math.log2(width / tol))))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        p_mid, _ = eval_points(sample, mid)
        take_left = _signs(p_mid) == s_lo
        lo = np.where(take_left, mid, lo)
        hi = np.where(take_left, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(_NEWTON_POLISH_STEPS):
        p, q = eval_points(sample, x)
        step = np.where(q != 0.0, p / np.where(q == 0.0, 1.0, q), 0.0)
        x_new = x - step
        inside = (x_new >= lo) & (x_new <= hi)
        x = np.where(inside, x_new, x)
    p, q = eval_points(sample, x)
    return x, np.abs(p), q


def count_batch(ys: np.ndarray, n: int, window: WindowSpec, M: int):
    """Root counts for a batch of coefficient arrays (B, n, 2).

    Fast path for Monte Carlo loops: counts agree with ``count_roots``
    (sign scan plus the same stationary-point audit), only the root
    positions are skipped.  Returns (counts, uncertain) arrays.
    """
    B = ys.shape[0]
    P, Q = eval_grid_batch(ys, n, window, M)
    h = window.length(n) / M
    if window.circular:
        Pl, Pr = P, np.roll(P, -1, axis=1)
        Ql, Qr = Q, np.roll(Q, -1, axis=1)
        t_left = window.start(n) + h * np.arange(M)
    else:
        i = np.arange(1, n + 1)
        end_c = np.cos(i * math.pi)  # exact (-1)^i pattern at t = n*pi
        end_s = np.sin(i * math.pi)
        w = i / n
        p_end = (ys[:, :, 0] @ end_c + ys[:, :, 1] @ end_s) / math.sqrt(n)
        q_end = (ys[:, :, 0] @ (-w * end_s) + ys[:, :, 1] @ (w * end_c)) / math.sqrt(n)
        Pl, Pr = P, np.concatenate([P[:, 1:], p_end[:, None]], axis=1)
        Ql, Qr = Q, np.concatenate([Q[:, 1:], q_end[:, None]], axis=1)
        t_left = h * np.arange(M)
    crossing, audit = _audit_candidates(Pl, Pr, Ql, Qr, h)
    counts = crossing.sum(axis=1).astype(int)
    uncertain = np.zeros(B, dtype=bool)

    rows, cells = np.nonzero(audit)
    if rows.size:
        scale = np.maximum(np.max(np.abs(P), axis=1), 1e-300)
        i = np.arange(1, n + 1, dtype=float)
        w = i / n
        y1 = ys[rows, :, 0]
        y2 = ys[rows, :, 1]
        inv = 1.0 / math.sqrt(n)

        def pq_fn(ts, which):
            th = np.multiply.outer(ts / n, i)
            c, s = np.cos(th), np.sin(th)
            p = (np.sum(c * y1[which], axis=1) + np.sum(s * y2[which], axis=1)) * inv
            q = (np.sum(c * (w * y2[which]), axis=1)
                 - np.sum(s * (w * y1[which]), axis=1)) * inv
            return p, q

        status, _ = _resolve_audits(Pl[rows, cells], Pr[rows, cells],
                                    Ql[rows, cells], Qr[rows, cells],
                                    h, t_left[cells], scale[rows], pq_fn)
        np.add.at(counts, rows[status == _AUDIT_DOUBLE], 2)
        uncertain[rows[status == _AUDIT_TANGENT]] = True
    dead = np.max(np.abs(P), axis=1) == 0.0
    uncertain |= dead
    uncertain |= counts > 2 * n
    return counts, uncertain


def safe_delta_estimate(grid: EvaluationGrid,
                        sample: CoefficientSample | None = None) -> float:
    """Grid estimate of the largest delta for which the delta-integral is
    exact: min over the window of |P| + |P'| and the endpoint |P|."""
    m = float(np.min(np.abs(grid.P) + np.abs(grid.Pprime)))
    m = min(m, float(abs(grid.P[0])))
    if sample is not None and not grid.window.circular:
        p_end, _ = eval_point(sample, grid.window.end(grid.n))
        m = min(m, abs(p_end))
    return m


def count_kacrice(sample: CoefficientSample, window: WindowSpec = FULL,
                  delta: float = 1e-6, M: int | None = None) -> KacRiceResult:
    """Approximate-integral root count (1/2 delta) int |P'| 1_{|P|<delta}.

    Around each refined root the two |P| = delta crossings are located by
    bisection and |P'| is integrated with 15-node Gauss-Legendre between
    them; audited near-tangent cells are integrated on a local fine grid.
    A warning flag is raised when delta exceeds the sample's safe estimate.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    rr = count_roots(sample, window, M=M, refine=True)
    grid = eval_grid(sample, window, M)
    safe = safe_delta_estimate(grid, sample)
    flagged = bool(delta > safe or rr.uncertain)

    total = 0.0
    if rr.count:
        roots, deriv = rr.roots, rr.derivatives
        t_lo = _find_level_crossing(sample, roots, deriv, delta, grid.spacing, side=-1.0)
        t_hi = _find_level_crossing(sample, roots, deriv, delta, grid.spacing, side=+1.0)
        if window.kind == "half":
            t_lo = np.maximum(t_lo, 0.0)
            t_hi = np.minimum(t_hi, window.end(sample.n))
        mid = 0.5 * (t_hi + t_lo)
        half = 0.5 * (t_hi - t_lo)
        nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        _, qv = eval_points(sample, nodes.ravel())
        qv = np.abs(qv).reshape(nodes.shape)
        total += float(np.sum((qv @ _GL_WEIGHTS) * half))

    # unresolved tangency cells can still carry |P| < delta mass that is
    # not attached to any counted root (resolved cells contribute nothing:
    # clean cells stay above the tangency scale, double cells' roots are
    # already in the root list)
    for cell in rr.unresolved_cells:
        total += _tangency_mass(sample, grid, cell, delta)

    return KacRiceResult(value=total / (2.0 * delta), flagged=flagged,
                         safe_delta_estimate=safe, delta=delta,
                         root_count=rr.count)


def _tangency_mass(sample, grid, cell, delta):
    """int |P'| over the |P| < delta dip of an unresolved tangency cell."""
    t0 = grid.t_values()[cell]
    h = grid.spacing
    lo, hi = np.array([t0]), np.array([t0 + h])
    _, q_lo = eval_points(sample, lo)
    s_lo = _signs(q_lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        _, q_mid = eval_points(sample, mid)
        left = _signs(q_mid) == s_lo
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    t_star = float((0.5 * (lo + hi))[0])
    p_star, _ = eval_points(sample, np.array([t_star]))
    if abs(p_star[0]) >= delta:
        return 0.0
    # |P| is unimodal on each side of the dip: the |P'| integral telescopes
    # to (delta - |P(t*)|) per side once the delta crossings are bracketed
    unit = np.array([1.0])
    left = _find_level_crossing(sample, np.array([t_star]), unit, delta, h,
                                side=-1.0)
    right = _find_level_crossing(sample, np.array([t_star]), unit, delta, h,
                                 side=+1.0)
    p_l, _ = eval_points(sample, left)
    p_r, _ = eval_points(sample, right)
    return float((abs(p_l[0]) - abs(p_star[0])) + (abs(p_r[0]) - abs(p_star[0])))


def _find_level_crossing(sample, roots, deriv, delta, h, side):
    """Nearest t on the given side of each root with |P(t)| = delta."""
    w = np.minimum(0.5 * h, 2.0 * delta / np.maximum(np.abs(deriv), 1e-300))
    t_out = roots + side * w
    p_out, _ = eval_points(sample, t_out)
    for _ in range(64):
        inside = np.abs(p_out) < delta
        if not inside.any():
            break
        w = np.where(inside, 2.0 * w, w)
        t_out = roots + side * w
        p_out, _ = eval_points(sample, t_out)
    lo = roots.copy()      # |P| < delta here
    hi = t_out             # |P| >= delta here
    for _ in range(_CROSSING_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        p_mid, _ = eval_points(sample, mid)
        inside = np.abs(p_mid) < delta
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def roots_csv_rows(result: RootCountResult, trial_index: int):
    """(trial_index, root, residual) rows for the optional per-sample dump."""
    resid = result.residuals if result.residuals is not None else np.full(result.count, np.nan)
    return [(trial_index, float(r), float(e)) for r, e in zip(result.roots, resid)]
