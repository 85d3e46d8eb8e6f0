"""Drop calculus for sequences with entries in [-1, 1].

A drop sequence sigma = (sigma_1, ..., sigma_ell) has prefix sums
P_0 = 0, P_j = sigma_1 + ... + sigma_j.  The walk's *retained drop* relative
to a partition 0 = N_0 < N_1 < ... < N_q = L is

    M(sigma, P) = sum_j ( P_{N_j} - min_{N_j <= i <= N_{j+1}} P_i ),

i.e. each block only pays for descent below its own starting height.
Partitions are constrained to grow at a controlled rate:

  * good:      N_{j+1} - N_j <= N_j + 1   (forces N_1 = 1),
  * tau-good:  additionally N_{j+1} - N_j >= tau * N_j.

``mtau`` minimizes M over tau-good partitions by dynamic programming;
``mtau_bruteforce`` is an independent exhaustive check.  Both evaluate every
candidate partition as the identical left-associated float64 sum over the
shared prefix array, so their values agree bit-for-bit, not just to rounding.
"""

from __future__ import annotations

from typing import Iterator, NamedTuple, Sequence, Union

import numpy as np

VALUE_TOL = 1e-9        # slack for validating sigma entries against [-1, 1]
ORACLE_LIMIT = 24       # default cap on brute-force length

_oracle_kernel = None   # lazily compiled numba kernel (see _get_kernel)


class DropSequence:
    """Sequence with entries in [-1, 1] plus cached prefix sums.

    Entries may exceed the range by up to ``VALUE_TOL`` (e.g. grid increments
    of a 1-Lipschitz function computed in floating point); they are clipped.
    """

    __slots__ = ("values", "prefix")

    def __init__(self, values: Sequence[float]):
        v = np.asarray(values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("drop sequence must be a nonempty 1-d array")
        if not np.all(np.isfinite(v)):
            raise ValueError("drop sequence entries must be finite")
        excess = float(np.max(np.abs(v))) - 1.0
        if excess > VALUE_TOL:
            raise ValueError(
                f"drop sequence entries must lie in [-1, 1]; worst excess {excess:.3g}"
            )
        v = np.clip(v, -1.0, 1.0)
        v.setflags(write=False)
        self.values = v
        p = np.concatenate(([0.0], np.cumsum(v)))
        p.setflags(write=False)
        self.prefix = p

    @property
    def ell(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self) -> Iterator[float]:
        return iter(self.values.tolist())

    def __getitem__(self, index):
        return self.values[index]

    def __repr__(self) -> str:
        return f"DropSequence({self.values.tolist()!r})"


SigmaLike = Union[DropSequence, Sequence[float], np.ndarray]


def as_drop_sequence(sigma: SigmaLike) -> DropSequence:
    if isinstance(sigma, DropSequence):
        return sigma
    return DropSequence(sigma)


class IntegerPartition:
    """Strictly increasing cut points 0 = N_0 < N_1 < ... < N_q = L."""

    __slots__ = ("points",)

    def __init__(self, points: Sequence[int]):
        pts = tuple(int(p) for p in points)
        if len(pts) < 2 or pts[0] != 0:
            raise ValueError("integer partition must start at 0 and contain its endpoint")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("integer partition points must be strictly increasing")
        self.points = pts

    @property
    def length(self) -> int:
        return self.points[-1]

    def gaps(self) -> tuple:
        return tuple(b - a for a, b in zip(self.points, self.points[1:]))

    def is_good(self) -> bool:
        return all(b - a <= a + 1 for a, b in zip(self.points, self.points[1:]))

    def is_tau_good(self, tau: float) -> bool:
        # the gap condition is evaluated in double precision, consistently
        # with mtau / mtau_bruteforce / enumerate_tau_good
        return self.is_good() and all(
            b - a >= tau * a for a, b in zip(self.points, self.points[1:])
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, IntegerPartition) and self.points == other.points

    def __hash__(self) -> int:
        return hash(self.points)

    def __repr__(self) -> str:
        return f"IntegerPartition({list(self.points)!r})"


class DropValue(NamedTuple):
    value: float
    partition: IntegerPartition


def drop_S(sigma: SigmaLike) -> float:
    """Total drop of the walk: -min_j P_j (>= 0 since P_0 = 0)."""
    seq = as_drop_sequence(sigma)
    return float(-np.min(seq.prefix))


def drop_M(sigma: SigmaLike, partition: IntegerPartition) -> float:
    """Retained drop of the walk chopped along ``partition``.

    The partition must be good and span (0, L] for some L <= len(sigma).
    Evaluation is the left-associated sum over blocks, so re-evaluating a
    partition returned by :func:`mtau` reproduces its value exactly.
    """
    seq = as_drop_sequence(sigma)
    if not isinstance(partition, IntegerPartition):
        partition = IntegerPartition(partition)
    if partition.length > seq.ell:
        raise ValueError("partition extends past the end of the sequence")
    if not partition.is_good():
        raise ValueError("partition is not good (gap > previous point + 1)")
    pref = seq.prefix
    total = 0.0
    pts = partition.points
    for a, b in zip(pts, pts[1:]):
        total = total + (pref[a] - float(np.min(pref[a : b + 1])))
    return float(total)


def _tau_feasible(gap: int, start: int, tau: float) -> bool:
    return gap >= tau * start


def mtau(sigma: SigmaLike, tau: float, prefix_len: int | None = None) -> DropValue:
    """Minimal retained drop over tau-good partitions of (0, L].

    Parameters
    ----------
    sigma : array-like with entries in [-1, 1]
    tau : float in [0, 1); tau = 0 means plain good partitions
    prefix_len : optimize over (0, L] for L = prefix_len (default: len(sigma))

    Returns
    -------
    DropValue
        value and an optimal partition (ties broken by choosing the smallest
        optimal predecessor at every traceback step, which makes the result
        the lexicographically smallest optimal predecessor chain).

    Notes
    -----
    Quadratic dynamic program over (predecessor, endpoint) pairs; fine up to
    a few times 10^4 entries.
    """
    seq = as_drop_sequence(sigma)
    L = seq.ell if prefix_len is None else int(prefix_len)
    if not 1 <= L <= seq.ell:
        raise ValueError("prefix_len must be in [1, len(sigma)]")
    if not 0.0 <= tau < 1.0:
        raise ValueError("tau must lie in [0, 1)")
    pref = seq.prefix
    best = np.full(L + 1, np.inf)
    best[0] = 0.0
    pred = np.full(L + 1, -1, dtype=np.int64)
    for N in range(1, L + 1):
        lo = (N - 1 + 1) // 2  # smallest N' with N - N' <= N' + 1
        # rm[k] = min(pref[lo + k .. N])
        rm = np.minimum.accumulate(pref[N : lo - 1 if lo else None : -1])[::-1]
        cand = best[lo:N] + (pref[lo:N] - rm[:-1])
        starts = np.arange(lo, N)
        feas = (N - starts) >= tau * starts
        cand[~feas] = np.inf
        k = int(np.argmin(cand))
        best[N] = cand[k]
        pred[N] = lo + k
    pts = [L]
    while pts[-1] != 0:
        pts.append(int(pred[pts[-1]]))
    pts.reverse()
    return DropValue(float(best[L]), IntegerPartition(pts))


def enumerate_tau_good(length: int, tau: float) -> Iterator[IntegerPartition]:
    """Yield every tau-good partition of (0, length], lexicographically."""
    if length < 1:
        raise ValueError("length must be >= 1")
    if not 0.0 <= tau < 1.0:
        raise ValueError("tau must lie in [0, 1)")

    def rec(points):
        cur = points[-1]
        if cur == length:
            yield IntegerPartition(points)
            return
        for nxt in range(cur + 1, min(length, 2 * cur + 1) + 1):
            if _tau_feasible(nxt - cur, cur, tau):
                yield from rec(points + [nxt])

    yield from rec([0])


def _oracle_python(pref: np.ndarray, L: int, tau: float):
    best = np.inf
    best_pts: tuple = ()

    def rec(cur, running, points):
        nonlocal best, best_pts
        hi = min(L, 2 * cur + 1)
        for nxt in range(cur + 1, hi + 1):
            if not _tau_feasible(nxt - cur, cur, tau):
                continue
            val = running + (pref[cur] - float(np.min(pref[cur : nxt + 1])))
            if nxt == L:
                if val < best:
                    best = val
                    best_pts = tuple(points + [L])
            else:
                rec(nxt, val, points + [nxt])

    rec(0, 0.0, [0])
    return best, best_pts


def _get_kernel():
    """Compile (once) the numba enumeration kernel, or return None."""
    global _oracle_kernel
    if _oracle_kernel is not None:
        return _oracle_kernel if _oracle_kernel is not False else None
    try:
        import numba
    except ImportError:
        _oracle_kernel = False
        return None

    @numba.njit(cache=True)
    def kernel(pref, L, tau):  # pragma: no cover - exercised via wrapper
        pts = np.empty(L + 1, np.int64)
        sums = np.empty(L + 1, np.float64)
        nxt = np.empty(L + 1, np.int64)
        best = np.inf
        best_pts = np.empty(L + 1, np.int64)
        best_len = 0
        depth = 0
        pts[0] = 0
        sums[0] = 0.0
        nxt[0] = 1
        while depth >= 0:
            cur = pts[depth]
            child = nxt[depth]
            hi = min(L, 2 * cur + 1)
            while child <= hi and child - cur < tau * cur:
                child += 1
            if child > hi:
                depth -= 1
                continue
            nxt[depth] = child + 1
            m = pref[cur]
            for i in range(cur + 1, child + 1):
                if pref[i] < m:
                    m = pref[i]
            val = sums[depth] + (pref[cur] - m)
            if child == L:
                if val < best:
                    best = val
                    best_len = depth + 2
                    for i in range(depth + 1):
                        best_pts[i] = pts[i]
                    best_pts[depth + 1] = L
            else:
                depth += 1
                pts[depth] = child
                sums[depth] = val
                nxt[depth] = child + 1
        return best, best_pts[:best_len]

    _oracle_kernel = kernel
    return kernel


def mtau_bruteforce(
    sigma: SigmaLike, tau: float, prefix_len: int | None = None, limit: int = ORACLE_LIMIT
) -> DropValue:
    """Exhaustive minimum of drop_M over all tau-good partitions.

    Independent of the dynamic program in :func:`mtau` (it enumerates every
    partition), but shares the prefix array and the left-associated block-sum
    evaluation, so the two agree exactly.  Refuses lengths above ``limit``.
    """
    seq = as_drop_sequence(sigma)
    L = seq.ell if prefix_len is None else int(prefix_len)
    if not 1 <= L <= seq.ell:
        raise ValueError("prefix_len must be in [1, len(sigma)]")
    if not 0.0 <= tau < 1.0:
        raise ValueError("tau must lie in [0, 1)")
    if L > limit:
        raise ValueError(f"refusing brute force for length {L} > limit {limit}")
    kernel = _get_kernel()
    if kernel is not None:
        value, pts = kernel(seq.prefix, L, float(tau))
        return DropValue(float(value), IntegerPartition([int(p) for p in pts]))
    value, pts = _oracle_python(seq.prefix, L, tau)
    return DropValue(float(value), IntegerPartition(pts))
