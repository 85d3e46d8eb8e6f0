"""Drop calculus for 1-Lipschitz piecewise-linear functions on [0, a].

The continuous analogue of :mod:`pindrop.seqpart`: partitions are descending
positive reals a = a_0 > a_1 > ... with controlled ratios, and the drop of f
along a partition is sum_n [ f(a_n) - min_{[a_n, a_{n-1}]} f ].

The central structural object is the set of *hard points*: p is hard when
min_{[p/2, p]} f = f(p).  For piecewise-linear f the hard set is a finite
union of closed intervals, computed here exactly (segment sweep, no
sampling), and the infimum of the drop over all good partitions equals the
sum of f's decrements over the hard intervals (:func:`tdrop_exact`).

The remaining operations build explicit partitions: a half-scale recursion
achieving the closed-form drop bound for envelope-constrained functions,
a merge pass that normalizes ratio-crowded partitions, a rebalancing step
enforcing a lower ratio gap (tau-goodness), and the exact bridge to integer
partitions via floors.
"""

from __future__ import annotations

import json
import math
from typing import Sequence

import numpy as np

from .seqpart import DropSequence, IntegerPartition, as_drop_sequence
from .bounds import half_scale_threshold

STOP_SCALE_FACTOR = 2.0 ** -40  # default truncation: a * 2^-40


# ---------------------------------------------------------------------------
# piecewise-linear functions


class PLFunction:
    """Piecewise-linear function on [0, a] given by breakpoints.

    Breakpoint x-values must be strictly increasing, start at 0, and the
    function must be 1-Lipschitz (|slope| <= 1 up to float slack).
    """

    __slots__ = ("xs", "ys")

    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or xs.shape != ys.shape:
            raise ValueError("need matching 1-d breakpoint arrays with >= 2 points")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("breakpoints must be finite")
        if abs(float(xs[0])) > 1e-15:
            raise ValueError("domain must start at 0")
        xs[0] = 0.0
        dx = np.diff(xs)
        if np.any(dx <= 0):
            raise ValueError("breakpoint x-values must be strictly increasing")
        dy = np.diff(ys)
        if np.any(np.abs(dy) > dx * (1.0 + 1e-12) + 1e-15):
            raise ValueError("function must be 1-Lipschitz")
        xs.setflags(write=False)
        ys.setflags(write=False)
        self.xs = xs
        self.ys = ys

    @property
    def a(self) -> float:
        return float(self.xs[-1])

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)

    def _candidates(self, lo: float, hi: float):
        """Breakpoint-or-endpoint x values where extrema over [lo, hi] occur."""
        i0 = int(np.searchsorted(self.xs, lo, side="right"))
        i1 = int(np.searchsorted(self.xs, hi, side="left"))
        return [lo] + self.xs[i0:i1].tolist() + ([hi] if hi > lo else [])

    def min_on(self, lo: float, hi: float) -> float:
        """Exact minimum over [lo, hi] (attained at a breakpoint or endpoint)."""
        if not 0.0 <= lo <= hi <= self.a * (1 + 1e-12):
            raise ValueError("range outside domain")
        cand = self._candidates(lo, min(hi, self.a))
        return float(min(self(x) for x in cand))

    def argmin_smallest(self, lo: float, hi: float) -> float:
        """Smallest point of [lo, hi] attaining the minimum."""
        cand = self._candidates(lo, min(hi, self.a))
        vals = [float(self(x)) for x in cand]
        m = min(vals)
        for x, v in zip(cand, vals):
            if v == m:
                return float(x)
        raise AssertionError("unreachable")

    def argmin_largest(self, lo: float, hi: float, tol: float = 0.0) -> float:
        """Largest point of [lo, hi] attaining the minimum (within tol)."""
        cand = self._candidates(lo, min(hi, self.a))
        vals = [float(self(x)) for x in cand]
        m = min(vals)
        for x, v in zip(reversed(cand), reversed(vals)):
            if v <= m + tol:
                return float(x)
        raise AssertionError("unreachable")

    def restrict(self, hi: float) -> "PLFunction":
        """The restriction f|[0, hi] as a new PLFunction."""
        if not 0.0 < hi <= self.a * (1 + 1e-12):
            raise ValueError("restriction endpoint outside (0, a]")
        hi = min(hi, self.a)
        i1 = int(np.searchsorted(self.xs, hi, side="left"))
        xs = np.concatenate((self.xs[:i1], [hi]))
        ys = np.concatenate((self.ys[:i1], [float(self(hi))]))
        return PLFunction(xs, ys)

    def to_json(self) -> str:
        return json.dumps(
            {"a": self.a, "breakpoints": [[float(x), float(y)] for x, y in zip(self.xs, self.ys)]}
        )

    @classmethod
    def from_json(cls, text: str) -> "PLFunction":
        obj = json.loads(text)
        bp = obj["breakpoints"]
        xs = [p[0] for p in bp]
        ys = [p[1] for p in bp]
        f = cls(xs, ys)
        if abs(f.a - float(obj["a"])) > 1e-9 * max(1.0, abs(float(obj["a"]))):
            raise ValueError("field 'a' disagrees with the last breakpoint")
        return f

    def __repr__(self) -> str:
        return f"PLFunction(a={self.a:g}, {len(self.xs)} breakpoints)"


# ---------------------------------------------------------------------------
# real partitions


class RealPartition:
    """Descending positive cut points a = p_0 > p_1 > ... > p_q > 0.

    ``truncated`` records that the partition was cut off above 0, in which
    case drop evaluations add the worst-case residual of an ideal
    continuation (see :func:`total_drop`).  ``tau`` optionally records the
    ratio gap the partition was rebalanced to (set by :func:`tau_adjust`).
    """

    __slots__ = ("points", "truncated", "tau")

    def __init__(self, points: Sequence[float], truncated: bool = False, tau: float | None = None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size < 1:
            raise ValueError("need a nonempty 1-d point array")
        if not np.all(np.isfinite(pts)) or pts[-1] <= 0.0:
            raise ValueError("points must be finite and positive")
        if np.any(np.diff(pts) >= 0):
            raise ValueError("points must be strictly decreasing")
        pts.setflags(write=False)
        self.points = pts
        self.truncated = bool(truncated)
        self.tau = None if tau is None else float(tau)

    @property
    def top(self) -> float:
        return float(self.points[0])

    @property
    def bottom(self) -> float:
        return float(self.points[-1])

    def ratios(self) -> np.ndarray:
        return self.points[:-1] / self.points[1:]

    def is_good(self) -> bool:
        return self.points.size < 2 or bool(np.all(self.ratios() <= 2.0 * (1 + 1e-12)))

    def is_tau_good(self, tau: float) -> bool:
        if not self.is_good():
            return False
        if self.points.size < 2:
            return True
        return bool(np.all(self.ratios() >= (1.0 + tau) * (1 - 1e-12)))

    def to_json(self) -> str:
        return json.dumps(
            {
                "points": [float(p) for p in self.points],
                "truncated": self.truncated,
                "tau": self.tau,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "RealPartition":
        obj = json.loads(text)
        return cls(obj["points"], obj.get("truncated", False), obj.get("tau"))

    def __repr__(self) -> str:
        return (
            f"RealPartition({self.points.size} points, top={self.top:g}, "
            f"bottom={self.bottom:g}, truncated={self.truncated})"
        )


def total_drop(f: PLFunction, partition: RealPartition) -> float:
    """Drop of f along the partition, plus the truncation residual.

    Sum over intervals [p_n, p_{n-1}] of f(p_n) - min f.  For truncated
    partitions adds p_q - f(p_q) + f(0): an ideal halving continuation below
    the last point pays at most that much (the payments telescope through
    the nondecreasing function x - f(x)), so the returned value is an upper
    bound for the drop of a completed partition.
    """
    pts = partition.points
    if pts[0] > f.a * (1 + 1e-12):
        raise ValueError("partition exceeds the function domain")
    if abs(pts[0] - f.a) > 1e-9 * max(1.0, f.a):
        raise ValueError("partition must start at the domain endpoint a")
    if not partition.is_good():
        raise ValueError("partition is not good (ratio > 2)")
    total = 0.0
    for i in range(1, pts.size):
        total = total + (float(f(pts[i])) - f.min_on(float(pts[i]), float(pts[i - 1])))
    if partition.truncated:
        pq = float(pts[-1])
        total = total + (pq - float(f(pq)) + float(f(0.0)))
    return total


# ---------------------------------------------------------------------------
# hard points


class HardSet:
    """Finite union of closed intervals [u_j, v_j], ascending in x.

    A left endpoint u = 0 stands for an interval open at 0 (hardness is only
    defined on (0, a], but the closure is the natural object to store).
    """

    __slots__ = ("intervals",)

    def __init__(self, intervals: Sequence[tuple]):
        iv = [(float(u), float(v)) for u, v in intervals]
        for u, v in iv:
            if not (0.0 <= u <= v):
                raise ValueError("invalid hard interval")
        for (u1, v1), (u2, v2) in zip(iv, iv[1:]):
            if u2 <= v1:
                raise ValueError("hard intervals must be disjoint and ascending")
        self.intervals = iv

    def contains(self, p: float, tol: float = 0.0) -> bool:
        return any(u - tol <= p <= v + tol for u, v in self.intervals)

    def measure(self) -> float:
        return sum(v - u for u, v in self.intervals)

    def drop(self, f: PLFunction) -> float:
        return sum(float(f(u)) - float(f(v)) for u, v in self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __repr__(self) -> str:
        return f"HardSet({self.intervals!r})"


def _solve_affine_nonneg(A: float, B: float, lo: float, hi: float):
    """Solution interval of A + B*x >= 0 within [lo, hi], or None."""
    vlo = A + B * lo
    vhi = A + B * hi
    if vlo >= 0.0 and vhi >= 0.0:
        return (lo, hi)
    if vlo < 0.0 and vhi < 0.0:
        return None
    root = -A / B  # B != 0 here since the signs differ
    root = min(max(root, lo), hi)
    if vlo >= 0.0:
        return (lo, root)
    return (root, hi)


def hard_points(f: PLFunction) -> HardSet:
    """The set of p in (0, a] with min_{[p/2, p]} f = f(p), exactly.

    Sweep over a grid of candidate boundaries {x_i} union {2 x_i} union {a}:
    between consecutive grid points, both f(p) and f(p/2) are affine in p and
    the set of breakpoints interior to (p/2, p) is constant, so hardness
    reduces to two affine inequalities solved in closed form.
    """
    a = f.a
    xs = f.xs
    ys = f.ys
    grid = set()
    for x in xs:
        x = float(x)
        if 0.0 < x <= a:
            grid.add(x)
        if 0.0 < 2.0 * x <= a:
            grid.add(2.0 * x)
    grid.add(a)
    grid = sorted(grid)
    bounds_list = [0.0] + grid

    # per-segment affine coefficients of f
    slopes = np.diff(ys) / np.diff(xs)
    intercepts = ys[:-1] - slopes * xs[:-1]

    def seg_index(x: float) -> int:
        # segment containing x (x interior to the domain here)
        i = int(np.searchsorted(xs, x, side="right")) - 1
        return min(max(i, 0), len(slopes) - 1)

    raw: list[tuple] = []
    for plo, phi in zip(bounds_list, bounds_list[1:]):
        mid = 0.5 * (plo + phi)
        iR = seg_index(mid)
        iL = seg_index(0.5 * mid)
        cR, sR = float(intercepts[iR]), float(slopes[iR])
        cL, sL = float(intercepts[iL]), float(slopes[iL])
        # interior breakpoints of (p/2, p), constant across this cell
        inner = [float(y) for x, y in zip(xs, ys) if 0.5 * mid < x < mid]
        Y = min(inner) if inner else math.inf
        # f(p) <= f(p/2):  (cL - cR) + (sL/2 - sR) p >= 0
        sol = _solve_affine_nonneg(cL - cR, 0.5 * sL - sR, plo, phi)
        if sol is None:
            continue
        # f(p) <= Y:  (Y - cR) - sR p >= 0
        if Y < math.inf:
            sol2 = _solve_affine_nonneg(Y - cR, -sR, sol[0], sol[1])
            if sol2 is None:
                continue
            sol = sol2
        if sol[1] == 0.0:
            continue  # hardness is defined on (0, a]; skip the bare point p = 0
        raw.append(sol)

    # glue intervals that touch (adjacent cells share endpoints); genuine
    # touches have gap exactly 0, so the slack only needs to absorb rounding
    # relative to the local coordinate, not to the domain size
    merged: list[list] = []
    for u, v in raw:
        if merged and u - merged[-1][1] <= 1e-12 * max(abs(u), abs(merged[-1][1])):
            merged[-1][1] = max(merged[-1][1], v)
        else:
            merged.append([u, v])
    return HardSet([(u, v) for u, v in merged])


def tdrop_exact(f: PLFunction) -> float:
    """Exact infimum of the drop over good partitions: the hard-set decrement.

    Equals sum_j f(u_j) - f(v_j) over the hard intervals; f is nonincreasing
    on each of them.
    """
    return hard_points(f).drop(f)


# ---------------------------------------------------------------------------
# partition constructions


def _check_envelope(f: PLFunction, D: float, C: float) -> None:
    tol = 1e-9 * max(1.0, f.a)
    if abs(float(f(0.0))) > tol:
        raise ValueError("need f(0) = 0")
    if np.any(f.ys < D * f.xs - tol) or np.any(f.ys > C * f.xs + tol):
        raise ValueError("function leaves the envelope D*x <= f <= C*x")


def construct_partition_basic(
    f: PLFunction, D: float, C: float, stop_scale: float | None = None
) -> RealPartition:
    """Half-scale recursion building a good partition with small drop.

    Requires -1 <= D < C <= 1, C >= 2D and D x <= f(x) <= C x on [0, a].
    The result is good, truncated at ``stop_scale`` (default a * 2^-40), and
    its total drop (including the truncation residual) is at most

        (a - f(a)) * (C - 2D)/(1 + 2C - 3D)  +  (1 - D) * stop_scale.

    At each step: cut at the smallest minimizer of the preceding half-scale
    window if the window dips below the current endpoint value; otherwise cut
    at half scale when the half-point rise stays below the threshold slope
    h = (C-2D)/(1+C-D); otherwise descend to the deepest point b where the
    rise meets the h-line and climb back with a ladder of largest minimizers
    of doubling windows.
    """
    if not (-1.0 <= D < C <= 1.0 and C >= 2.0 * D):
        raise ValueError("need -1 <= D < C <= 1 with C >= 2D")
    _check_envelope(f, D, C)
    a = f.a
    if stop_scale is None:
        stop_scale = a * STOP_SCALE_FACTOR
    if not 0.0 < stop_scale < a:
        raise ValueError("stop_scale must lie in (0, a)")
    h = half_scale_threshold(C, D)

    points = [a]
    cur = a
    guard = 0
    max_steps = 10000 + 64 * int(math.log2(a / stop_scale) + 2)
    while cur > stop_scale:
        guard += 1
        if guard > max_steps:  # pragma: no cover - construction always terminates
            raise RuntimeError("partition construction failed to terminate")
        fcur = float(f(cur))
        half = 0.5 * cur
        m = f.min_on(half, cur)
        if m < fcur:
            nxt = f.argmin_smallest(half, cur)
            if nxt >= cur:  # pragma: no cover - smallest minimizer is < cur here
                raise AssertionError("minimizer did not advance")
            points.append(nxt)
            cur = nxt
            continue
        if float(f(half)) - fcur <= h * (cur - half):
            points.append(half)
            cur = half
            continue
        # descend to the deepest point where the rise meets the h-line
        b = _largest_h_crossing(f, cur, fcur, h)
        if not 0.0 < b < half:  # pragma: no cover - guaranteed by the envelope
            raise AssertionError("h-line crossing outside (0, a_n/2)")
        # the climb-back guarantee f(2 b_m) <= f(b_m) can break by an ulp in
        # float evaluation; a rounding-scale tolerance keeps the ladder moving
        ladder_tol = 1e-12 * max(1.0, a)
        ladder = [b]
        while ladder[-1] < half:
            bm = ladder[-1]
            nxt = f.argmin_largest(bm, 2.0 * bm, tol=ladder_tol)
            if nxt <= bm:  # pragma: no cover - ruled out by the envelope bound
                raise AssertionError("ladder stalled")
            ladder.append(nxt)
        points.extend(reversed(ladder))
        cur = b
    return RealPartition(points, truncated=True)


def _largest_h_crossing(f: PLFunction, an: float, fan: float, h: float) -> float:
    """Largest b in [0, an/2) with f(b) - f(an) = h*(an - b).

    g(x) = f(x) - fan - h*(an - x) satisfies g(an/2) > 0 (caller guarantees)
    and g(0) <= 0; walk the segments right-to-left to the first sign change.
    """
    half = 0.5 * an
    xs = f.xs
    cut = [float(x) for x in xs if 0.0 < x < half]
    nodes = [0.0] + cut + [half]

    def g(x: float) -> float:
        return float(f(x)) - fan - h * (an - x)

    gr = g(nodes[-1])
    for i in range(len(nodes) - 2, -1, -1):
        xl, xr = nodes[i], nodes[i + 1]
        gl = g(xl)
        if gl <= 0.0 < gr:
            if gl == 0.0:
                return xl
            return xl + (xr - xl) * (-gl) / (gr - gl)
        gr = gl
    raise AssertionError("no h-line crossing found")  # pragma: no cover


def merge_partition(f: PLFunction, partition: RealPartition) -> RealPartition:
    """Normalize a good partition so ratio-crowded intervals come in a fixed shape.

    First inserts an interior minimizer into every interval whose minimum is
    strictly interior (typing each interval as increasing: min at the lower
    endpoint, or decreasing: min at the upper endpoint), then repeatedly
    merges any adjacent pair with p_{n-2}/p_n < 2 unless the pair is
    (decreasing below, increasing above).  The drop never increases, the
    result is good, and every surviving point satisfies p_{n-3}/p_n >= 2.
    """
    if not partition.is_good():
        raise ValueError("partition is not good")
    if partition.points[0] > f.a * (1 + 1e-12):
        raise ValueError("partition exceeds the function domain")
    pts = [float(p) for p in partition.points]

    # phase 1: split intervals with strictly interior minima
    out = [pts[0]]
    for lo_pt in pts[1:]:
        hi_pt = out[-1]
        m = f.min_on(lo_pt, hi_pt)
        if m < float(f(lo_pt)) and m < float(f(hi_pt)):
            out.append(f.argmin_smallest(lo_pt, hi_pt))
        out.append(lo_pt)
    pts = out

    # interval i spans [pts[i], pts[i-1]]; type 'inc' iff min sits at pts[i]
    def interval_type(i: int) -> str:
        m = f.min_on(pts[i], pts[i - 1])
        return "inc" if m == float(f(pts[i])) else "dec"

    types = [None] + [interval_type(i) for i in range(1, len(pts))]

    changed = True
    while changed:
        changed = False
        n = 2
        while n < len(pts):
            if pts[n - 2] / pts[n] < 2.0 and not (types[n] == "dec" and types[n - 1] == "inc"):
                low_t, up_t = types[n], types[n - 1]
                if low_t == "inc" and up_t == "inc":
                    new_t = "inc"
                elif low_t == "dec" and up_t == "dec":
                    new_t = "dec"
                else:  # (inc below, dec above)
                    new_t = "inc" if float(f(pts[n])) <= float(f(pts[n - 2])) else "dec"
                del pts[n - 1]
                del types[n - 1]
                types[n - 1] = new_t
                changed = True
            else:
                n += 1

    return RealPartition(pts, truncated=partition.truncated, tau=partition.tau)


def tau_adjust(f: PLFunction, partition: RealPartition, tau: float, K: int) -> RealPartition:
    """Rebalance ratios within blocks of K intervals so all ratios are >= 1+tau.

    Requires (1+tau)^K < 2 and that the partition's K-step ratios satisfy
    p_{iK}/p_{(i+1)K} >= 2 (as produced by :func:`merge_partition` for K=3).
    Block boundary points are preserved exactly; within each block, ratios
    below 1+tau are raised to exactly 1+tau and the excess is absorbed by
    shrinking larger ratios, which keeps every ratio in [1+tau, 2].  The
    total drop increases by at most 6*K*(K-1)*tau*a.

    A trailing block with fewer than K intervals is kept if already
    compliant, otherwise the partition is truncated at the last complete
    block boundary (``truncated`` is set).
    """
    if not (tau > 0.0 and K >= 1 and (1.0 + tau) ** K < 2.0):
        raise ValueError("need tau > 0 and (1+tau)^K < 2")
    if not partition.is_good():
        raise ValueError("partition is not good")
    pts = [float(p) for p in partition.points]
    q = len(pts) - 1  # number of intervals
    nblocks = q // K
    for i in range(nblocks):
        if pts[i * K] / pts[i * K + K] < 2.0 * (1 - 1e-12):
            raise ValueError("block-ratio precondition p_{iK}/p_{(i+1)K} >= 2 fails")

    new_pts = [pts[0]]
    for i in range(nblocks):
        top = pts[i * K]
        bot = pts[i * K + K]
        betas = [pts[i * K + j - 1] / pts[i * K + j] for j in range(1, K + 1)]
        small = [j for j in range(K) if betas[j] < 1.0 + tau]
        if small:
            excess = 1.0
            for j in small:
                excess *= (1.0 + tau) / betas[j]
                betas[j] = 1.0 + tau
            for j in range(K):
                if j in small or excess <= 1.0 + 1e-15:
                    continue
                room = betas[j] / (1.0 + tau)
                r = min(excess, room)
                betas[j] /= r
                excess /= r
            if excess > 1.0 + 1e-9:  # pragma: no cover - blocked by precondition
                raise AssertionError("could not absorb ratio excess inside block")
        v = top
        for j in range(K - 1):
            v = v / betas[j]
            new_pts.append(v)
        new_pts.append(bot)  # snap the block boundary exactly

    tail = pts[nblocks * K :]
    truncated = partition.truncated
    if len(tail) > 1:
        tail_ok = all(
            tail[j] / tail[j + 1] >= (1.0 + tau) * (1 - 1e-12) for j in range(len(tail) - 1)
        )
        if tail_ok:
            new_pts.extend(tail[1:])
        else:
            truncated = True  # drop the incomplete tail; residual accounts for it

    result = RealPartition(new_pts, truncated=truncated, tau=tau)
    if not result.is_tau_good(tau):  # pragma: no cover - defensive
        raise AssertionError("tau adjustment failed to produce a tau-good partition")
    return result


def discretize_partition(f, partition: RealPartition, ell: int, L: int) -> IntegerPartition:
    """Integer partition N_j = floor(ell * p_n), bridging to the discrete drop.

    Requires a (2 tau)-good input covering [0, L/ell] (``partition.tau`` must
    be set); the result is a (tau)-good integer partition of (0, L] whose
    discrete drop exceeds the continuous one by at most
    (2/log2(1+2 tau) + 4) * log2(ell)/ell (checked in the test-suite, where
    the grid sequence of f is available).

    Truncated partitions are continued by ideal halving below their last
    point so the small integers are filled in.
    """
    if partition.tau is None:
        raise ValueError("partition.tau must be set (use tau_adjust first)")
    tau2 = partition.tau
    if not partition.is_tau_good(tau2):
        raise ValueError("partition is not tau-good for its recorded tau")
    ell = int(ell)
    L = int(L)
    if ell < 2 or not 1 <= L <= ell:
        raise ValueError("need ell >= 2 and 1 <= L <= ell")
    if abs(partition.top - L / ell) > 1e-9 * max(1.0, L / ell):
        raise ValueError("partition must start at L/ell")
    if f is not None and partition.top > f.a * (1 + 1e-12):
        raise ValueError("partition exceeds the function domain")

    pts = [float(p) for p in partition.points]
    if partition.truncated:
        v = pts[-1]
        while v * ell >= 1.0:
            v *= 0.5
            pts.append(v)

    Ns = []
    for p in pts:
        t = ell * p
        Ns.append(int(math.floor(t + 1e-12 * max(1.0, t))))
    Ns.append(0)
    seq = sorted(set(n for n in Ns if n >= 0))
    if seq[0] != 0 or seq[-1] != L:
        raise ValueError("floors do not produce a partition of (0, L]")
    result = IntegerPartition(seq)
    if not result.is_tau_good(tau2 / 2.0):
        raise ValueError(
            "discretized partition is not (tau/2)-good; the real partition "
            "must descend below 2/ell (truncate it or extend it)"
        )
    return result


# ---------------------------------------------------------------------------
# bridges between sequences and functions


def sequence_to_function(sigma, zeta: float = 0.0) -> PLFunction:
    """Rescaled prefix-sum interpolant of sigma on [0, 1].

    f interpolates the points (j/ell, P_j/ell) for j/ell >= sqrt(zeta) and is
    linear from the origin below that; f is automatically 1-Lipschitz, and
    when the prefix sums satisfy P_j >= gamma*j - zeta*ell for all j, the
    result satisfies f(x) >= (gamma - sqrt(zeta))*x on [0, 1].
    """
    seq = as_drop_sequence(sigma)
    if not 0.0 <= zeta < 1.0:
        raise ValueError("zeta must lie in [0, 1)")
    ell = seq.ell
    cut = math.sqrt(zeta)
    j0 = max(1, int(math.ceil(cut * ell - 1e-12)))
    xs = [0.0] + [j / ell for j in range(j0, ell + 1)]
    ys = [0.0] + [float(seq.prefix[j]) / ell for j in range(j0, ell + 1)]
    return PLFunction(xs, ys)


def sequence_from_function(f: PLFunction, ell: int) -> DropSequence:
    """Grid increments sigma_i = ell*(f(i/ell) - f((i-1)/ell)) for f on [0, 1]."""
    ell = int(ell)
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if abs(f.a - 1.0) > 1e-12:
        raise ValueError("grid reading requires domain [0, 1]")
    vals = f(np.arange(ell + 1) / ell)
    return DropSequence(ell * np.diff(vals))
