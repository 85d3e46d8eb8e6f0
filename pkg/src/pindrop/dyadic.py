"""Sparse base-2^T quad-tree measures on the unit square.

Provides construction and serialization of dyadic measures, coarsening and
cell conditioning, multi-scale energies, branching-regularity extraction,
greedy regularization into regular pieces, line projections with L^2 norms,
entropy, and direction scans for concentrated projections.

Cells at level j have side 2^(-jT) and are keyed by interleaved bit paths
(Morton order, x bits in odd positions): the parent of key k is k >> 2T.
Only positive-mass cells are stored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .seqpart import DropSequence

__all__ = [
    "DyadicMeasure",
    "LineMeasure",
    "RegularPiece",
    "RegularityReport",
    "uniform_measure",
    "four_corner_measure",
    "product_cantor_measure",
    "random_measure",
    "coarsen",
    "localize",
    "energy",
    "energy_pairwise",
    "extract_sigma",
    "bourgain_split",
    "bourgain_decompose",
    "theta_grid",
    "project",
    "l2_norm_sq",
    "projection_norms",
    "marstrand_fraction",
    "bad_test",
    "bad_direction_fraction",
    "entropy",
    "morton_encode",
    "morton_decode",
    "cell_boxes",
]

_MAX_CELLS = 1 << 24  # refuse to materialize more leaves than this
_ROOT_TOL = 1e-9


# ---------------------------------------------------------------------------
# Morton keys


def _spread_bits(v: np.ndarray) -> np.ndarray:
    """Spread the low 32 bits of each entry into the even bit positions."""
    v = v.astype(np.uint64) & np.uint64(0xFFFFFFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x0000FFFF0000FFFF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF00FF00FF)
    v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    v = (v | (v << np.uint64(2))) & np.uint64(0x3333333333333333)
    v = (v | (v << np.uint64(1))) & np.uint64(0x5555555555555555)
    return v


def _compact_bits(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_spread_bits` (keeps even bit positions)."""
    v = v.astype(np.uint64) & np.uint64(0x5555555555555555)
    v = (v | (v >> np.uint64(1))) & np.uint64(0x3333333333333333)
    v = (v | (v >> np.uint64(2))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    v = (v | (v >> np.uint64(4))) & np.uint64(0x00FF00FF00FF00FF)
    v = (v | (v >> np.uint64(8))) & np.uint64(0x0000FFFF0000FFFF)
    v = (v | (v >> np.uint64(16))) & np.uint64(0x00000000FFFFFFFF)
    return v


def morton_encode(ix, iy) -> np.ndarray:
    """Interleave integer grid coordinates into Morton keys."""
    ix = np.asarray(ix)
    iy = np.asarray(iy)
    return ((_spread_bits(ix) << np.uint64(1)) | _spread_bits(iy)).astype(np.int64)


def morton_decode(keys) -> tuple[np.ndarray, np.ndarray]:
    """Split Morton keys back into (ix, iy) grid coordinates."""
    k = np.asarray(keys).astype(np.uint64)
    return (
        _compact_bits(k >> np.uint64(1)).astype(np.int64),
        _compact_bits(k).astype(np.int64),
    )


def cell_boxes(base_exp: int, level: int, keys) -> tuple[np.ndarray, np.ndarray, float]:
    """Lower-left corners (x0, y0) and common side of cells given by keys."""
    ix, iy = morton_decode(keys)
    side = 2.0 ** (-base_exp * level)
    return ix * side, iy * side, side


def _aggregate(keys: np.ndarray, masses: np.ndarray, shift: int):
    """Sum masses of sorted keys grouped by key >> shift; returns sorted groups."""
    if shift == 0:
        return keys, masses
    pk = keys >> np.int64(shift)
    starts = np.flatnonzero(np.diff(pk)) + 1
    starts = np.concatenate(([0], starts))
    return pk[starts], np.add.reduceat(masses, starts)


# ---------------------------------------------------------------------------
# planar measures


class DyadicMeasure:
    """Probability measure on [0,1)^2 resolved down to cells of side 2^(-T*depth).

    The measure is uniform inside each depth-level cell, so it is determined
    by the leaf masses. All coarser levels are precomputed bottom-up; the
    children of every stored cell sum to it exactly by construction.
    """

    __slots__ = ("base_exp", "depth", "_levels")

    def __init__(self, base_exp: int, depth: int, leaf_keys, leaf_masses, normalize: bool = False):
        T = int(base_exp)
        depth = int(depth)
        if T < 1:
            raise ValueError("base_exp must be a positive integer")
        if depth < 1:
            raise ValueError("depth must be a positive integer")
        if 2 * T * depth > 62:
            raise ValueError("2*base_exp*depth must be at most 62 to fit int64 keys")
        keys = np.asarray(leaf_keys, dtype=np.int64)
        masses = np.asarray(leaf_masses, dtype=np.float64)
        if keys.shape != masses.shape or keys.ndim != 1:
            raise ValueError("leaf keys and masses must be 1-d arrays of equal length")
        if keys.size == 0:
            raise ValueError("measure must have at least one positive-mass cell")
        if np.any(masses < 0.0) or not np.all(np.isfinite(masses)):
            raise ValueError("masses must be finite and nonnegative")
        pos = masses > 0.0
        keys, masses = keys[pos], masses[pos]
        if keys.size == 0:
            raise ValueError("measure has zero total mass")
        order = np.argsort(keys, kind="stable")
        keys, masses = keys[order], masses[order]
        if np.any(np.diff(keys) == 0):
            raise ValueError("duplicate leaf keys")
        if keys[0] < 0 or keys[-1] >> np.int64(2 * T * depth) != 0:
            raise ValueError("leaf keys out of range for this depth")

        levels = [None] * (depth + 1)
        levels[depth] = (keys, masses)
        for j in range(depth - 1, -1, -1):
            levels[j] = _aggregate(*levels[j + 1], 2 * T)
        root = float(levels[0][1][0])
        if normalize:
            levels = [(k, m / root) for k, m in levels]
            root = float(levels[0][1][0])
        if abs(root - 1.0) > _ROOT_TOL:
            raise ValueError(f"total mass {root} is not 1 within {_ROOT_TOL}")

        self.base_exp = T
        self.depth = depth
        self._levels = levels

    # -- basic accessors

    def cells(self, level: int) -> tuple[np.ndarray, np.ndarray]:
        """(keys, masses) of the positive-mass cells at a level (read-only)."""
        if not 0 <= level <= self.depth:
            raise ValueError("level out of range")
        return self._levels[level]

    @property
    def total_mass(self) -> float:
        return float(self._levels[0][1][0])

    @property
    def leaf_count(self) -> int:
        return int(self._levels[self.depth][0].size)

    def mass_of(self, level: int, key: int) -> float:
        keys, masses = self.cells(level)
        i = int(np.searchsorted(keys, key))
        if i < len(keys) and keys[i] == key:
            return float(masses[i])
        return 0.0

    def validate_tree(self, tol: float = 1e-12) -> None:
        """Assert that children sum to their parent at every level."""
        for j in range(self.depth):
            pk, pm = _aggregate(*self._levels[j + 1], 2 * self.base_exp)
            keys, masses = self._levels[j]
            if pk.shape != keys.shape or np.any(pk != keys):
                raise AssertionError(f"support mismatch between levels {j} and {j + 1}")
            err = np.max(np.abs(pm - masses) / np.maximum(masses, 1e-300))
            if err > tol:
                raise AssertionError(f"child masses disagree with level {j} by {err}")

    # -- serialization

    def to_json(self) -> str:
        keys, masses = self._levels[self.depth]
        cells = [[self.depth, int(k), float(m)] for k, m in zip(keys, masses)]
        return json.dumps(
            {"T": self.base_exp, "depth": self.depth, "cells": cells},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str, normalize: bool = False) -> "DyadicMeasure":
        data = json.loads(text)
        return cls.from_cells(int(data["T"]), int(data["depth"]), data["cells"], normalize=normalize)

    @classmethod
    def from_cells(cls, base_exp: int, depth: int, cells, normalize: bool = False) -> "DyadicMeasure":
        """Build from [level, path, mass] triples; coarse cells spread uniformly.

        Cells must be pairwise disjoint (no cell may be an ancestor of another).
        """
        T = int(base_exp)
        by_level: dict[int, list[tuple[int, float]]] = {}
        for entry in cells:
            level, path, mass = int(entry[0]), int(entry[1]), float(entry[2])
            if not 0 <= level <= depth:
                raise ValueError(f"cell level {level} outside [0, {depth}]")
            if not 0 <= path < 1 << (2 * T * level):
                raise ValueError(f"cell path {path} out of range at level {level}")
            by_level.setdefault(level, []).append((path, mass))

        seen: dict[int, np.ndarray] = {}
        total_leaves = 0
        for level in sorted(by_level):
            paths = np.array(sorted(p for p, _ in by_level[level]), dtype=np.int64)
            if np.any(np.diff(paths) == 0):
                raise ValueError(f"duplicate cell at level {level}")
            for shallower, spaths in seen.items():
                anc = paths >> np.int64(2 * T * (level - shallower))
                if np.any(np.isin(anc, spaths)):
                    raise ValueError("overlapping cells: one is an ancestor of another")
            seen[level] = paths
            total_leaves += len(paths) << (2 * T * (depth - level))
            if total_leaves > _MAX_CELLS:
                raise ValueError("expanding cells to leaf depth exceeds the cell limit")

        leaf_keys = []
        leaf_masses = []
        for level, entries in by_level.items():
            n_desc = 1 << (2 * T * (depth - level))
            for path, mass in entries:
                base = np.int64(path) << np.int64(2 * T * (depth - level))
                leaf_keys.append(base + np.arange(n_desc, dtype=np.int64))
                leaf_masses.append(np.full(n_desc, mass / n_desc))
        return cls(
            T,
            depth,
            np.concatenate(leaf_keys),
            np.concatenate(leaf_masses),
            normalize=normalize,
        )

    def __repr__(self) -> str:
        return (
            f"DyadicMeasure(base_exp={self.base_exp}, depth={self.depth}, "
            f"leaves={self.leaf_count})"
        )


# ---------------------------------------------------------------------------
# generators


def uniform_measure(base_exp: int, depth: int) -> DyadicMeasure:
    """Lebesgue measure on [0,1)^2 resolved to the given depth."""
    n = 1 << (2 * base_exp * depth)
    if n > _MAX_CELLS:
        raise ValueError("uniform measure at this depth exceeds the cell limit")
    return DyadicMeasure(base_exp, depth, np.arange(n, dtype=np.int64), np.full(n, 1.0 / n))


def four_corner_measure(base_exp: int, depth: int) -> DyadicMeasure:
    """Self-similar measure on the quarter-ratio corner Cantor set.

    Each halving step alternates between branching into all four children
    and descending into the outer-corner child of the quadrant chosen at the
    previous step, which realizes four maps of ratio 1/4 onto the corners.
    """
    steps = base_exp * depth
    keys = np.zeros(1, dtype=np.int64)
    last_choice = np.zeros(1, dtype=np.int64)
    n_branch = 0
    for step in range(1, steps + 1):
        if step % 2 == 1:
            offsets = np.arange(4, dtype=np.int64)
            keys = ((keys[:, None] << np.int64(2)) | offsets[None, :]).ravel()
            last_choice = np.broadcast_to(offsets, (last_choice.size, 4)).ravel()
            n_branch += 1
            if keys.size > _MAX_CELLS:
                raise ValueError("corner Cantor at this depth exceeds the cell limit")
        else:
            keys = (keys << np.int64(2)) | last_choice
    masses = np.full(keys.size, 4.0**-n_branch)
    return DyadicMeasure(base_exp, depth, keys, masses)


def product_cantor_measure(base_exp: int, depth: int, s: float, u: float) -> DyadicMeasure:
    """Product of two axis Cantor measures with three-block branching.

    The horizontal factor halves-and-branches during the first
    round(s*u/(1+u) * steps) halving steps and the vertical factor during the
    first round(s/(1+u) * steps), so the planar branching exponents form a
    run at 1 (both branch), then 0 (one branches), then -1 (neither), with
    average mass decay tuned to 2^(-s) per halving step overall.
    """
    if not 0.0 < s <= 2.0:
        raise ValueError("s must lie in (0, 2]")
    if not 1.0 <= u <= 2.0:
        raise ValueError("u must lie in [1, 2]")
    steps = base_exp * depth
    sx = min(1.0, s * u / (1.0 + u))
    sy = min(1.0, s - sx)
    if sy < 0.0:
        raise ValueError("s and u are incompatible (vertical exponent negative)")
    bx = round(sx * steps)
    by = round(sy * steps)
    keys = np.zeros(1, dtype=np.int64)
    log2_cells = 0
    for step in range(1, steps + 1):
        branch_x = step <= bx
        branch_y = step <= by
        if branch_x and branch_y:
            offsets = np.arange(4, dtype=np.int64)
        elif branch_x:
            offsets = np.array([0, 2], dtype=np.int64)  # x bit varies, y bit 0
        elif branch_y:
            offsets = np.array([0, 1], dtype=np.int64)
        else:
            offsets = np.zeros(1, dtype=np.int64)
        keys = ((keys[:, None] << np.int64(2)) | offsets[None, :]).ravel()
        log2_cells += int(branch_x) + int(branch_y)
        if keys.size > _MAX_CELLS:
            raise ValueError("product Cantor at this depth exceeds the cell limit")
    masses = np.full(keys.size, 2.0**-log2_cells)
    return DyadicMeasure(base_exp, depth, keys, masses)


def random_measure(base_exp: int, depth: int, seed, max_cells: int = 4096) -> DyadicMeasure:
    """Random sparse measure: each cell branches into a random child subset
    with random conditional masses; expected support is capped at max_cells."""
    rng = np.random.default_rng(seed)
    arity = 1 << (2 * base_exp)
    keys = [np.int64(0)]
    masses = [1.0]
    for _ in range(depth):
        cap = max(1, max_cells // len(keys))
        new_keys: list[np.int64] = []
        new_masses: list[float] = []
        for key, mass in zip(keys, masses):
            b = int(rng.integers(1, min(arity, cap) + 1))
            children = rng.choice(arity, size=b, replace=False)
            children.sort()
            weights = rng.random(b) + 0.1
            weights /= weights.sum()
            for c, w in zip(children, weights):
                new_keys.append((key << np.int64(2 * base_exp)) | np.int64(c))
                new_masses.append(mass * float(w))
        keys, masses = new_keys, new_masses
    m = np.asarray(masses)
    return DyadicMeasure(base_exp, depth, np.asarray(keys), m / m.sum())


# ---------------------------------------------------------------------------
# coarsening / conditioning


def coarsen(mu: DyadicMeasure, new_depth: int) -> DyadicMeasure:
    """The coarser measure agreeing with mu on all cells of the new depth."""
    if new_depth > mu.depth:
        raise ValueError("cannot coarsen to a depth below the measure's resolution")
    keys, masses = mu.cells(new_depth)
    return DyadicMeasure(mu.base_exp, new_depth, keys.copy(), masses.copy())


def localize(mu: DyadicMeasure, Q: tuple[int, int], N: int) -> DyadicMeasure:
    """Conditional measure on cell Q=(level, key), rescaled to the unit square
    and truncated to depth N - level."""
    M, key = int(Q[0]), int(Q[1])
    if not 0 <= M < N <= mu.depth:
        raise ValueError("need cell level < N <= depth")
    T = mu.base_exp
    keys, masses = mu.cells(mu.depth)
    shift = np.int64(2 * T * (mu.depth - M))
    lo = int(np.searchsorted(keys, np.int64(key) << shift, side="left"))
    hi = int(np.searchsorted(keys, np.int64(key + 1) << shift, side="left"))
    if hi == lo:
        raise ValueError("cell has zero mass")
    local = keys[lo:hi] - (np.int64(key) << shift)
    local, local_masses = _aggregate(local, masses[lo:hi], 2 * T * (mu.depth - N))
    return DyadicMeasure(T, N - M, local, local_masses, normalize=True)


# ---------------------------------------------------------------------------
# energy


def energy(mu: DyadicMeasure, s: float) -> float:
    """Multi-scale energy: sum over levels j of 2^(sTj) * sum of squared cell masses."""
    if not 0.0 < s < 2.0:
        raise ValueError("s must lie in (0, 2)")
    T = mu.base_exp
    total = 0.0
    for j in range(1, mu.depth + 1):
        _, masses = mu.cells(j)
        total += 2.0 ** (s * T * j) * float(np.sum(masses * masses))
    return total


def energy_pairwise(mu: DyadicMeasure, s: float, chunk: int = 512) -> float:
    """Brute-force oracle: sum over distinct leaf-center pairs of
    m_i * m_j / |c_i - c_j|^s. Comparable to :func:`energy` up to an
    empirically calibrated factor depending on (base_exp, s)."""
    if not 0.0 < s < 2.0:
        raise ValueError("s must lie in (0, 2)")
    keys, masses = mu.cells(mu.depth)
    x0, y0, side = cell_boxes(mu.base_exp, mu.depth, keys)
    cx = x0 + 0.5 * side
    cy = y0 + 0.5 * side
    total = 0.0
    n = keys.size
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        dx = cx[start:stop, None] - cx[None, :]
        dy = cy[start:stop, None] - cy[None, :]
        d2 = dx * dx + dy * dy
        w = masses[start:stop, None] * masses[None, :]
        with np.errstate(divide="ignore"):
            contrib = w * d2 ** (-0.5 * s)
        contrib[~np.isfinite(contrib)] = 0.0  # drops the diagonal (distance 0)
        total += float(np.sum(contrib))
    return total


# ---------------------------------------------------------------------------
# regularity


@dataclass(frozen=True)
class RegularityReport:
    """First pair of cells whose mass ratios cannot share a regularity band."""

    level: int
    cell: int
    ratio: float
    cell2: int
    ratio2: float
    reason: str


def _ratio_bands(ratios: np.ndarray) -> np.ndarray:
    """The integer band of each ratio r: the k >= 0 with 2^-(k+1) < r <= 2^-k."""
    m, e = np.frexp(ratios)
    k = np.where(m == 0.5, 1 - e, -e)
    return np.maximum(k, 0).astype(np.int64)


def _level_ratios(mu_keys, mu_masses, parent_keys, parent_masses, shift):
    parents_of = mu_keys >> np.int64(shift)
    idx = np.searchsorted(parent_keys, parents_of)
    return mu_masses / parent_masses[idx]


def extract_sigma(mu: DyadicMeasure, sigma=None, tol: float = 1e-9):
    """Recover the per-level branching exponents of a regular measure.

    If every level's parent-to-child mass ratios fit in one dyadic band
    (2^-(k+1), 2^-k], returns the exponent sequence with sigma_j = k/T - 1;
    if the ratios only fit a common non-dyadic band, the exponent is the
    real number matching the largest ratio. When ``sigma`` is given, the
    stated exponents are verified instead of re-derived. On failure returns
    a :class:`RegularityReport` for the first violating level.
    """
    T = mu.base_exp
    out = []
    for j in range(1, mu.depth + 1):
        keys, masses = mu.cells(j)
        pkeys, pmasses = mu.cells(j - 1)
        r = _level_ratios(keys, masses, pkeys, pmasses, 2 * T)
        i_max = int(np.argmax(r))
        i_min = int(np.argmin(r))
        r_max, r_min = float(r[i_max]), float(r[i_min])

        if sigma is not None:
            b = 2.0 ** (-T * (float(sigma[j - 1]) + 1.0))
            if r_max > b * (1.0 + tol) or b > 2.0 * r_min * (1.0 + tol):
                return RegularityReport(
                    j, int(keys[i_max]), r_max, int(keys[i_min]), r_min,
                    "stated band does not cover the observed mass ratios",
                )
            out.append(float(sigma[j - 1]))
            continue

        if r_max > 2.0 * r_min * (1.0 + tol):
            return RegularityReport(
                j, int(keys[i_max]), r_max, int(keys[i_min]), r_min,
                "mass ratios spread over more than a factor of 2",
            )
        k = int(_ratio_bands(np.array([min(r_max, 1.0)]))[0])
        if k <= 2 * T and r_min > 2.0 ** -(k + 1) * (1.0 - tol):
            sigma_j = k / T - 1.0
        else:
            b = max(r_max, 2.0 ** (-2 * T))
            if b > 2.0 * r_min * (1.0 + tol):
                return RegularityReport(
                    j, int(keys[i_max]), r_max, int(keys[i_min]), r_min,
                    "mass ratios below the deepest admissible band",
                )
            sigma_j = -1.0 - math.log2(b) / T
        out.append(min(max(sigma_j, -1.0), 1.0))
    return DropSequence(out)


@dataclass(frozen=True)
class RegularPiece:
    """One regular piece of a measure: depth-level support cells, the
    branching-exponent sequence of the conditioned measure, and its mass
    under the measure it was split from."""

    support: np.ndarray
    sigma: DropSequence
    mass: float
    measure: DyadicMeasure

    def __len__(self) -> int:
        return int(self.support.size)


def _split_arrays(T: int, depth: int, keys: np.ndarray, masses: np.ndarray):
    """Greedy band regularization on raw (sorted) leaf arrays.

    Runs from the finest level upward. At each level, cells are classified
    by the dyadic band of their parent-mass ratio, the smallest band index
    of maximal restricted mass is kept, and the rest (including the
    overflow band of ratios at or below 2^-(2T+1)) is discarded. Pruning
    siblings raises the surviving cells' ratios, so the classification is
    repeated on the survivors until every cell at the level shares one
    band; only then is the exponent k/T - 1 recorded. Coarser-level prunes
    remove whole subtrees, so once a level stabilizes its band is final.
    """
    sigmas = np.empty(depth)
    n_bands = 2 * T + 1
    for j in range(depth, 0, -1):
        while True:
            ckeys, cmasses = _aggregate(keys, masses, 2 * T * (depth - j))
            pkeys, pmasses = _aggregate(ckeys, cmasses, 2 * T)
            r = _level_ratios(ckeys, cmasses, pkeys, pmasses, 2 * T)
            bands = np.minimum(_ratio_bands(r), n_bands)  # n_bands = overflow bin
            band_mass = np.bincount(bands, weights=cmasses, minlength=n_bands + 1)
            k = int(np.argmax(band_mass[:n_bands]))  # argmax takes the smallest tie
            if band_mass[k] <= 0.0:
                raise AssertionError(f"no admissible ratio band at level {j}")
            cell_keep = bands == k
            if cell_keep.all():
                break
            counts = np.diff(np.concatenate((
                np.searchsorted(keys >> np.int64(2 * T * (depth - j)), ckeys, side="left"),
                [keys.size],
            )))
            keys = keys[np.repeat(cell_keep, counts)]
            masses = masses[np.repeat(cell_keep, counts)]
        sigmas[j - 1] = k / T - 1.0
    return keys, masses, sigmas


def bourgain_split(mu: DyadicMeasure, base_exp: int | None = None, depth: int | None = None) -> RegularPiece:
    """Extract one regular piece by greedy dyadic band selection.

    Level by level from the finest scale, cells are binned by the dyadic
    band of their parent-mass ratio; the smallest band holding maximal mass
    is kept and the rest (including the overflow band of ratio <= 2^-(2T+1))
    is discarded, repeating at the same level until the survivors share one
    band. The conditioned result is exactly regular for the recorded
    exponent sequence. When every level stabilizes in one pass the piece
    keeps at least a (4T+2)^-depth fraction of the mass; the repeated
    pruning can cost more on adversarial mass profiles.
    """
    if base_exp is not None and int(base_exp) != mu.base_exp:
        raise ValueError("base_exp does not match the measure")
    if depth is not None and int(depth) != mu.depth:
        raise ValueError("depth does not match the measure")
    keys, masses = mu.cells(mu.depth)
    if float(np.sum(masses)) <= 0.0:
        raise ValueError("measure has zero mass")
    kept_keys, kept_masses, sigmas = _split_arrays(mu.base_exp, mu.depth, keys, masses)
    mass = float(np.sum(kept_masses))
    piece_measure = DyadicMeasure(mu.base_exp, mu.depth, kept_keys, kept_masses, normalize=True)
    return RegularPiece(kept_keys.copy(), DropSequence(sigmas), mass, piece_measure)


def bourgain_decompose(mu: DyadicMeasure, eps: float) -> tuple[list[RegularPiece], float]:
    """Split a measure into disjoint regular pieces plus a small residual.

    Pieces are extracted greedily until the remaining mass is at most
    2^(-eps*T*depth). Each piece's mass is at least 2^(-eps*T*depth) times
    (4T+2)^-depth, its conditioned measure is regular for its recorded
    exponents (asserted via :func:`extract_sigma`), and the output is a
    deterministic function of the input.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    T, depth = mu.base_exp, mu.depth
    threshold = 2.0 ** (-eps * T * depth)
    floor = threshold * float(4 * T + 2) ** -depth
    keys, masses = mu.cells(depth)
    keys, masses = keys.copy(), masses.copy()
    pieces: list[RegularPiece] = []
    remaining = float(np.sum(masses))
    while remaining > threshold:
        kept_keys, kept_masses, sigmas = _split_arrays(T, depth, keys, masses)
        mass = float(np.sum(kept_masses))
        if not mass >= floor * (1.0 - 1e-9):
            raise AssertionError("piece mass fell below the guaranteed floor")
        measure = DyadicMeasure(T, depth, kept_keys, kept_masses, normalize=True)
        piece = RegularPiece(kept_keys.copy(), DropSequence(sigmas), mass, measure)
        check = extract_sigma(measure, sigma=piece.sigma)
        if isinstance(check, RegularityReport):
            raise AssertionError(f"piece failed its own regularity bands: {check}")
        pieces.append(piece)
        keep = ~np.isin(keys, kept_keys, assume_unique=True)
        keys, masses = keys[keep], masses[keep]
        remaining = float(np.sum(masses)) if keys.size else 0.0
    return pieces, remaining


# ---------------------------------------------------------------------------
# line measures and projections


class LineMeasure:
    """Mass on half-open bins of width 2^(-T*depth) aligned at 0 on the line.

    Bin i covers [i*w, (i+1)*w). Projections of the unit square land within
    [-sqrt(2), sqrt(2)]. The L^2 norm treats each bin as constant density
    mass/width, so the uniform measure on [0,1) has squared norm exactly 1.
    """

    __slots__ = ("base_exp", "depth", "idx", "masses")

    def __init__(self, base_exp: int, depth: int, idx, masses):
        self.base_exp = int(base_exp)
        self.depth = int(depth)
        idx = np.asarray(idx, dtype=np.int64)
        masses = np.asarray(masses, dtype=np.float64)
        if idx.shape != masses.shape or idx.ndim != 1:
            raise ValueError("bin indices and masses must be 1-d arrays of equal length")
        if np.any(masses < 0.0) or not np.all(np.isfinite(masses)):
            raise ValueError("masses must be finite and nonnegative")
        pos = masses > 0.0
        idx, masses = idx[pos], masses[pos]
        order = np.argsort(idx, kind="stable")
        idx, masses = idx[order], masses[order]
        if np.any(np.diff(idx) == 0):
            raise ValueError("duplicate bin indices")
        self.idx = idx
        self.masses = masses

    @property
    def bin_width(self) -> float:
        return 2.0 ** (-self.base_exp * self.depth)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    @property
    def support_count(self) -> int:
        return int(self.idx.size)

    def coarsen(self, level: int) -> "LineMeasure":
        if level > self.depth:
            raise ValueError("cannot coarsen to a depth below the resolution")
        shift = self.base_exp * (self.depth - level)
        idx, masses = _aggregate(self.idx, self.masses, shift)
        return LineMeasure(self.base_exp, level, idx, masses)

    def __repr__(self) -> str:
        return (
            f"LineMeasure(base_exp={self.base_exp}, depth={self.depth}, "
            f"bins={self.support_count})"
        )


def theta_grid(n: int) -> np.ndarray:
    """n direction angles evenly spaced on the half-circle [0, pi)."""
    return np.arange(n) * (math.pi / n)


def _as_direction(theta) -> tuple[float, float]:
    if np.isscalar(theta):
        return math.cos(float(theta)), math.sin(float(theta))
    c, s = float(theta[0]), float(theta[1])
    norm = math.hypot(c, s)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("direction vector must have unit length")
    return c, s


def project(mu: DyadicMeasure, theta, m: int | None = None) -> LineMeasure:
    """Pushforward of the depth-m coarsening under x -> x . theta.

    Each cell projects to an interval; its mass is spread over the (at most
    three) bins of width 2^(-T*m) that the interval overlaps, proportionally
    to overlap length. Total mass is conserved exactly.
    """
    if m is None:
        m = mu.depth
    if m > mu.depth:
        raise ValueError("projection depth exceeds the measure's depth")
    c, s = _as_direction(theta)
    keys, masses = mu.cells(m)
    ix, iy = morton_decode(keys)
    # work in units of the bin width w = 2^(-T*m)
    lo = ix * c + iy * s + min(c, 0.0) + min(s, 0.0)
    length = abs(c) + abs(s)
    b0 = np.floor(lo).astype(np.int64)
    frac = lo - b0
    # overlaps with bins b0, b0+1, b0+2 in units of w
    o0 = np.minimum(1.0 - frac, length)
    o1 = np.clip(np.minimum(2.0 - frac, length) - (1.0 - frac), 0.0, None)
    m0 = masses * (o0 / length)
    m1 = masses * (o1 / length)
    m2 = masses - m0 - m1
    base = int(b0.min())
    n_bins = int(b0.max()) - base + 3
    acc = np.zeros(n_bins)
    np.add.at(acc, b0 - base, m0)
    np.add.at(acc, b0 - base + 1, m1)
    np.add.at(acc, b0 - base + 2, np.maximum(m2, 0.0))
    idx = np.flatnonzero(acc > 0.0)
    return LineMeasure(mu.base_exp, m, idx + base, acc[idx])


def l2_norm_sq(nu: LineMeasure) -> float:
    """Squared L^2 norm of the piecewise-constant density: sum mass^2/width."""
    return float(np.sum(nu.masses * nu.masses)) / nu.bin_width


def projection_norms(mu: DyadicMeasure, n_theta: int = 4096, m: int | None = None) -> np.ndarray:
    """Squared projection L^2 norms over the half-circle direction grid."""
    return np.array([l2_norm_sq(project(mu, t, m)) for t in theta_grid(n_theta)])


def marstrand_fraction(mu: DyadicMeasure, R: float, n_theta: int = 4096) -> float:
    """Fraction of grid directions whose squared projection norm is at least
    R times the depth-1 energy of the measure."""
    threshold = R * energy(mu, 1.0)
    norms = projection_norms(mu, n_theta)
    return float(np.mean(norms >= threshold))


def bad_test(mu: DyadicMeasure, x: int, j: int, k: int, theta, eps: float) -> bool:
    """Whether the direction concentrates the local measure at cell scale j
    over k levels: squared projection norm >= 2^(eps*T*k) times its energy."""
    if k < 1:
        raise ValueError("the scale block (j, j+k] must be nonempty")
    if j < 0 or j + k > mu.depth:
        raise ValueError("scale block out of range")
    key_j = int(x) >> (2 * mu.base_exp * (mu.depth - j)) if j > 0 else 0
    local = localize(mu, (j, key_j), j + k)
    norm = l2_norm_sq(project(local, theta, k))
    return norm >= 2.0 ** (eps * mu.base_exp * k) * energy(local, 1.0)


def bad_direction_fraction(
    mu: DyadicMeasure,
    x: int,
    j0: int,
    eps: float,
    tau: float,
    n_theta: int = 256,
) -> float:
    """Fraction of grid directions bad for some block j0 <= j < j+k <= depth
    with k >= tau*j.

    This is a single-resolution truncation: blocks beyond the measure's own
    depth (and the union over ever-finer resolutions) are out of numerical
    reach and are not scanned.
    """
    angles = theta_grid(n_theta)
    bad = np.zeros(n_theta, dtype=bool)
    for j in range(max(j0, 0), mu.depth):
        key_j = int(x) >> (2 * mu.base_exp * (mu.depth - j)) if j > 0 else 0
        for k in range(max(1, math.ceil(tau * j)), mu.depth - j + 1):
            local = localize(mu, (j, key_j), j + k)
            threshold = 2.0 ** (eps * mu.base_exp * k) * energy(local, 1.0)
            for i in np.flatnonzero(~bad):
                if l2_norm_sq(project(local, angles[i], k)) >= threshold:
                    bad[i] = True
        if bad.all():
            break
    return float(np.mean(bad))


# ---------------------------------------------------------------------------
# entropy


def entropy(nu, level: int) -> float:
    """Base-2 entropy of the measure over its cells at the given level."""
    if isinstance(nu, DyadicMeasure):
        _, masses = nu.cells(level)
    elif isinstance(nu, LineMeasure):
        masses = nu.coarsen(level).masses
    else:
        raise TypeError("entropy expects a planar or line measure")
    return float(-np.sum(masses * np.log2(masses)))
