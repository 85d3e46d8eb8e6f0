"""Tests for the continuous drop calculus.

The hard-point sweep is validated against direct window minimization (which
PLFunction computes exactly), and the optimal-drop formula is validated by
independently rebuilding the optimal partition from first principles: descend
through hard intervals, jump to window minimizers elsewhere.
"""

import json
import math

import numpy as np
import pytest

from pindrop.bounds import basic_ratio, half_scale_threshold
from pindrop.lipdrop import (
    HardSet,
    PLFunction,
    RealPartition,
    construct_partition_basic,
    discretize_partition,
    hard_points,
    merge_partition,
    sequence_from_function,
    sequence_to_function,
    tau_adjust,
    tdrop_exact,
    total_drop,
)
from pindrop.seqpart import DropSequence, IntegerPartition, drop_M

TENT = PLFunction([0.0, 0.5, 1.0], [0.0, 0.5, 0.0])
PLATEAU = PLFunction([0.0, 1 / 3, 1.0], [0.0, 1 / 3, 1 / 3])
IDENTITY = PLFunction([0.0, 1.0], [0.0, 1.0])
FULL_DESCENT = PLFunction([0.0, 1.0], [0.0, -1.0])


def random_envelope_function(rng, D, C, a=1.0, segments=24):
    """Random 1-Lipschitz walk with D*x <= f(x) <= C*x, f(0) = 0."""
    xs = np.linspace(0.0, a, segments + 1)
    ys = [0.0]
    for j in range(1, segments + 1):
        step = xs[j] - xs[j - 1]
        lo = max(ys[-1] - step, D * xs[j])
        hi = max(min(ys[-1] + step, C * xs[j]), lo)
        ys.append(rng.uniform(lo, hi))
    return PLFunction(xs, ys)


def random_plfunction(rng, a=1.0, segments=20):
    """Random 1-Lipschitz walk from 0, unconstrained otherwise."""
    xs = np.sort(rng.uniform(0.0, a, segments - 1))
    xs = np.concatenate(([0.0], xs, [a]))
    xs = np.unique(xs)
    ys = [0.0]
    for j in range(1, len(xs)):
        step = xs[j] - xs[j - 1]
        ys.append(ys[-1] + rng.uniform(-step, step))
    return PLFunction(xs, ys)


def random_good_partition(rng, a=1.0, depth=12):
    pts = [a]
    while len(pts) < depth:
        pts.append(pts[-1] / rng.uniform(1.05, 2.0))
    return RealPartition(pts, truncated=True)


# ---------------------------------------------------------------------------
# PLFunction


def test_plfunction_basics():
    f = TENT
    assert f.a == 1.0
    assert f(0.25) == pytest.approx(0.25)
    assert f(0.75) == pytest.approx(0.25)
    # exact min/argmin with ties resolved by position
    assert f.min_on(0.25, 0.75) == pytest.approx(0.25, abs=1e-15)
    assert f.argmin_smallest(0.25, 0.75) == 0.25
    assert f.argmin_largest(0.25, 0.75) == 0.75
    g = f.restrict(0.5)
    assert g.a == 0.5 and g(0.5) == pytest.approx(0.5)
    h = PLFunction.from_json(f.to_json())
    assert np.array_equal(h.xs, f.xs) and np.array_equal(h.ys, f.ys)


def test_plfunction_validation():
    with pytest.raises(ValueError):
        PLFunction([0.0, 1.0], [0.0, 1.5])  # slope > 1
    with pytest.raises(ValueError):
        PLFunction([0.5, 1.0], [0.0, 0.1])  # domain not starting at 0
    with pytest.raises(ValueError):
        PLFunction([0.0, 0.5, 0.5, 1.0], [0.0, 0.1, 0.2, 0.3])  # repeated x
    with pytest.raises(ValueError):
        PLFunction([0.0], [0.0])  # single point
    bad = json.dumps({"a": 2.0, "breakpoints": [[0.0, 0.0], [1.0, 0.5]]})
    with pytest.raises(ValueError):
        PLFunction.from_json(bad)


# ---------------------------------------------------------------------------
# hard points and the optimal drop


def test_hard_points_pinned():
    hs = hard_points(TENT)
    assert len(hs) == 1
    (u, v) = hs.intervals[0]
    assert u == pytest.approx(2 / 3, abs=1e-12) and v == pytest.approx(1.0, abs=1e-12)
    assert tdrop_exact(TENT) == pytest.approx(1 / 3, abs=1e-12)

    hs = hard_points(PLATEAU)
    assert len(hs) == 1
    (u, v) = hs.intervals[0]
    assert u == pytest.approx(2 / 3, abs=1e-12) and v == pytest.approx(1.0, abs=1e-12)
    assert tdrop_exact(PLATEAU) == pytest.approx(0.0, abs=1e-12)

    assert len(hard_points(IDENTITY)) == 0
    assert tdrop_exact(IDENTITY) == 0.0

    hs = hard_points(FULL_DESCENT)
    assert len(hs) == 1
    (u, v) = hs.intervals[0]
    assert u == pytest.approx(0.0, abs=1e-12) and v == pytest.approx(1.0, abs=1e-12)
    assert tdrop_exact(FULL_DESCENT) == pytest.approx(1.0, abs=1e-12)


def test_hard_points_membership_matches_direct_minimization():
    rng = np.random.default_rng(7)
    for _ in range(40):
        f = random_plfunction(rng)
        hs = hard_points(f)
        boundaries = [x for iv in hs.intervals for x in iv]
        for p in rng.uniform(1e-3, f.a, 60):
            if boundaries and min(abs(p - b) for b in boundaries) < 1e-6:
                continue  # skip knife-edge points
            is_hard = f.min_on(p / 2, p) >= float(f(p)) - 1e-12
            assert hs.contains(p) == is_hard, (p, hs.intervals)


def test_f_nonincreasing_on_hard_intervals():
    rng = np.random.default_rng(11)
    for _ in range(40):
        f = random_plfunction(rng)
        for u, v in hard_points(f):
            grid = [u] + [float(x) for x in f.xs if u < x < v] + [v]
            vals = [float(f(x)) for x in grid]
            assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))


def _optimal_partition_from_structure(f, stop):
    """Independent rebuild of an optimal partition from the hard intervals.

    Descend through hard intervals with halving steps (paying exactly the
    decrement of f), and jump to the smallest window minimizer elsewhere
    (paying nothing).
    """
    hs = hard_points(f)
    pts = [f.a]
    cur = f.a
    while cur > stop:
        inside = next((iv for iv in hs.intervals if iv[0] < cur <= iv[1]), None)
        if inside is not None and inside[0] < cur * (1 - 1e-15):
            nxt = max(inside[0], cur / 2)
        else:
            nxt = f.argmin_smallest(cur / 2, cur)
            if nxt >= cur:
                # float knife-edge: exactly at a hard interval's left endpoint
                # the window minimum ties with f(cur) but rounds apart
                assert any(abs(cur - u) <= 1e-9 for u, _ in hs.intervals), cur
                nxt = f.argmin_smallest(cur / 2, cur * (1 - 1e-12))
            assert nxt < cur, "window minimizer failed to advance"
        pts.append(nxt)
        cur = nxt
    return RealPartition(pts, truncated=True)


def test_tdrop_attained_by_structure_partition():
    rng = np.random.default_rng(23)
    stop = 2.0**-40
    for _ in range(30):
        f = random_plfunction(rng)
        t = tdrop_exact(f)
        part = _optimal_partition_from_structure(f, stop)
        got = total_drop(f, part)
        assert t - 1e-9 <= got <= t + 2 * stop + 1e-9


def test_total_drop_random_partitions_bounded_below():
    rng = np.random.default_rng(31)
    for _ in range(40):
        f = random_plfunction(rng)
        t = tdrop_exact(f)
        part = random_good_partition(rng)
        assert total_drop(f, part) >= t - 1e-9


# ---------------------------------------------------------------------------
# total_drop and the grid bridge


def test_total_drop_matches_integer_drop_on_grid():
    rng = np.random.default_rng(5)
    ell = 64
    for _ in range(20):
        sigma = DropSequence(rng.uniform(-1, 1, ell))
        f = sequence_to_function(sigma)
        ipart = IntegerPartition([0, 1, 2, 4, 8, 16, 32, 64])
        rpart = RealPartition([n / ell for n in reversed([1, 2, 4, 8, 16, 32, 64])])
        # the discrete drop has one extra window, (0, 1], paying max(0, -P_1)/ell
        first_window = max(0.0, -float(f(1 / ell)))
        lhs = total_drop(f, rpart)
        rhs = float(drop_M(sigma, ipart)) / ell - first_window
        assert lhs == pytest.approx(rhs, abs=1e-12)
        trunc = RealPartition(rpart.points, truncated=True)
        assert total_drop(f, trunc) == pytest.approx(
            total_drop(f, rpart) + (1 / ell - float(f(1 / ell)) + float(f(0.0))), abs=1e-12
        )


def test_total_drop_validation():
    with pytest.raises(ValueError):
        total_drop(TENT, RealPartition([0.9, 0.5]))  # does not start at a
    with pytest.raises(ValueError):
        total_drop(TENT, RealPartition([1.0, 0.2]))  # ratio 5 > 2: not good


# ---------------------------------------------------------------------------
# the half-scale construction


def test_construct_basic_pinned_tent():
    part = construct_partition_basic(TENT, D=0.0, C=1.0)
    assert part.is_good() and part.truncated
    assert part.bottom <= 2.0**-40
    # the bound rho*(a - f(a)) = 1/3 meets the optimal drop: squeezed tight
    got = total_drop(TENT, part)
    assert abs(got - 1 / 3) <= 2 * 2.0**-40 + 1e-9
    # the descent block spans [1/3, 1] with chord exactly h = 1/2 once the
    # zero-decrement ladder interval [1/3, 2/3] is typed as decreasing
    pts = [float(p) for p in part.points]
    assert pts[:3] == [1.0, 2 / 3, 1 / 3]
    types = _interval_types(TENT, pts, prefer="dec")
    assert types[0] == "dec" and types[1] == "dec" and types[2] == "inc"
    h = half_scale_threshold(1.0, 0.0)
    rate = (float(TENT(pts[2])) - float(TENT(pts[0]))) / (pts[0] - pts[2])
    assert rate == pytest.approx(h, abs=1e-12)


def test_construct_basic_pinned_full_descent():
    part = construct_partition_basic(FULL_DESCENT, D=-1.0, C=0.0)
    got = total_drop(FULL_DESCENT, part)
    # rho = 1/2, a - f(a) = 2: bound = 1, again tight
    assert abs(got - 1.0) <= 2 * 2.0**-40 + 1e-9
    ratios = part.ratios()
    assert np.allclose(ratios, 2.0)  # pure half-scale descent


def _interval_types(f, pts, prefer="inc"):
    """Type each interval [pts[i], pts[i-1]] by where its minimum sits.

    An interval whose minimum ties at both endpoints carries no decrement and
    can be typed either way; ``prefer`` picks the label for those ties ("dec"
    keeps descent blocks connected, "inc" matches the merge normalization).
    """
    types = []
    for i in range(1, len(pts)):
        m = f.min_on(pts[i], pts[i - 1])
        at_low = m >= float(f(pts[i])) - 1e-12
        at_high = m >= float(f(pts[i - 1])) - 1e-12
        if at_low and at_high:
            types.append(prefer)
        elif at_low:
            types.append("inc")
        elif at_high:
            types.append("dec")
        else:
            types.append("interior")
    return types


@pytest.mark.parametrize(
    "D,C", [(0.0, 1.0), (-0.3, 0.5), (0.2, 0.7), (-1.0, 0.0), (-0.5, -0.2), (0.45, 0.95)]
)
def test_construct_basic_random(D, C):
    rng = np.random.default_rng(int(1000 * (C - D)))
    h = half_scale_threshold(C, D)
    rho = basic_ratio(C, D)
    stop = 2.0**-40
    for _ in range(10):
        f = random_envelope_function(rng, D, C)
        part = construct_partition_basic(f, D, C, stop_scale=stop)
        assert part.is_good() and part.truncated and part.bottom <= stop
        got = total_drop(f, part)
        bound = rho * (f.a - float(f(f.a))) + (1 - D) * stop
        assert got <= bound + 1e-9
        assert got >= tdrop_exact(f) - 1e-9
        # every interval has its minimum at an endpoint
        pts = [float(p) for p in part.points]
        types = _interval_types(f, pts, prefer="dec")
        assert "interior" not in types
        # maximal decreasing blocks descend no steeper than the threshold h
        i = 0
        while i < len(types):
            if types[i] != "dec":
                i += 1
                continue
            j = i
            while j + 1 < len(types) and types[j + 1] == "dec":
                j += 1
            upper, lower = pts[i], pts[j + 1]  # x-interval [lower, upper]
            rate = (float(f(lower)) - float(f(upper))) / (upper - lower)
            assert rate <= h + 1e-9
            i = j + 1


def test_construct_basic_validation():
    with pytest.raises(ValueError):
        construct_partition_basic(TENT, D=0.4, C=0.5)  # C < 2D
    with pytest.raises(ValueError):
        construct_partition_basic(TENT, D=0.5, C=0.5)  # D = C
    with pytest.raises(ValueError):
        construct_partition_basic(FULL_DESCENT, D=0.0, C=1.0)  # leaves envelope
    with pytest.raises(ValueError):
        construct_partition_basic(TENT, D=0.0, C=1.0, stop_scale=2.0)


# ---------------------------------------------------------------------------
# merging and rebalancing


def test_merge_partition_properties():
    rng = np.random.default_rng(41)
    for _ in range(50):
        f = random_plfunction(rng)
        part = random_good_partition(rng, depth=rng.integers(4, 16))
        merged = merge_partition(f, part)
        assert merged.is_good()
        assert total_drop(f, merged) <= total_drop(f, part) + 1e-12
        pts = [float(p) for p in merged.points]
        types = _interval_types(f, pts)
        assert "interior" not in types
        for n in range(2, len(pts)):
            if pts[n - 2] / pts[n] < 2.0:
                assert types[n - 1] == "dec" and types[n - 2] == "inc", (
                    "crowded pair must be (dec below, inc above)"
                )
        for n in range(3, len(pts)):
            assert pts[n - 3] / pts[n] >= 2.0 * (1 - 1e-12)
        again = merge_partition(f, merged)
        assert total_drop(f, again) == pytest.approx(total_drop(f, merged), abs=1e-12)


def test_tau_adjust_properties():
    rng = np.random.default_rng(43)
    tau, K = 0.05, 3
    for _ in range(40):
        f = random_plfunction(rng)
        part = merge_partition(f, random_good_partition(rng, depth=rng.integers(7, 16)))
        adjusted = tau_adjust(f, part, tau, K)
        assert adjusted.is_tau_good(tau) and adjusted.tau == tau
        nblocks = (len(part.points) - 1) // K
        for i in range(nblocks):
            assert adjusted.points[i * K] == part.points[i * K]
        # the full drop may also account for a freshly truncated tail
        before = total_drop(f, RealPartition(part.points, truncated=True))
        after = total_drop(f, adjusted)
        assert after <= before + 6 * K * (K - 1) * tau * part.top + 1e-9


def test_tau_adjust_noop_when_already_tau_good():
    pts = [1.0]
    for r in [1.9, 1.3, 1.8, 1.2, 1.9, 1.4]:
        pts.append(pts[-1] / r)
    part = RealPartition(pts)
    adjusted = tau_adjust(IDENTITY, part, tau=0.1, K=3)
    assert np.array_equal(adjusted.points, part.points)
    assert adjusted.tau == 0.1


def test_tau_adjust_validation():
    part = RealPartition([1.0, 0.5, 0.25, 0.125])
    with pytest.raises(ValueError):
        tau_adjust(IDENTITY, part, tau=0.3, K=3)  # (1.3)^3 > 2
    crowded = RealPartition([1.0, 1 / 1.1, 1 / 1.1**2, 1 / 1.1**3])
    with pytest.raises(ValueError):
        tau_adjust(IDENTITY, crowded, tau=0.05, K=3)  # block ratio 1.331 < 2


# ---------------------------------------------------------------------------
# discretization


def test_discretize_pinned_halving():
    part = RealPartition([1.0, 0.5, 0.25], truncated=True, tau=1.0)
    ipart = discretize_partition(None, part, ell=8, L=8)
    assert ipart == IntegerPartition([0, 1, 2, 4, 8])
    assert ipart.is_tau_good(0.5)


def test_discretize_budget():
    rng = np.random.default_rng(47)
    tau2, K = 0.1, 3
    for ell in (256, 1024):
        for _ in range(8):
            f = random_envelope_function(rng, -0.3, 0.5)
            part = construct_partition_basic(f, -0.3, 0.5)
            part = tau_adjust(f, merge_partition(f, part), tau2, K)
            ipart = discretize_partition(f, part, ell=ell, L=ell)
            tau_out = tau2 / 2
            assert ipart.is_tau_good(tau_out)
            sigma = sequence_from_function(f, ell)
            lhs = float(drop_M(sigma, ipart)) / ell
            budget = (2 / math.log2(1 + 2 * tau_out) + 4) * math.log2(ell) / ell
            assert lhs <= total_drop(f, part) + budget


def test_discretize_validation():
    with pytest.raises(ValueError):
        discretize_partition(None, RealPartition([1.0, 0.5]), ell=8, L=8)  # tau unset
    part = RealPartition([1.0, 0.5], tau=1.0)
    with pytest.raises(ValueError):
        discretize_partition(None, part, ell=8, L=4)  # top != L/ell
    coarse = RealPartition([1.0, 0.6], tau=0.5)
    with pytest.raises(ValueError):
        discretize_partition(None, coarse, ell=8, L=8)  # floors skip small integers


# ---------------------------------------------------------------------------
# sequence/function bridges


def test_sequence_function_round_trip():
    rng = np.random.default_rng(53)
    for ell in (8, 64, 257):
        sigma = DropSequence(rng.uniform(-1, 1, ell))
        f = sequence_to_function(sigma)
        back = sequence_from_function(f, ell)
        assert np.allclose(back.values, sigma.values, atol=1e-9)
        g = sequence_to_function(back)
        assert np.allclose(g(f.xs), f(f.xs), atol=1e-12)


def test_sequence_to_function_prefix_floor():
    rng = np.random.default_rng(59)
    ell, zeta = 200, 0.04
    for _ in range(20):
        sigma = DropSequence(rng.uniform(-1, 1, ell))
        prefix = sigma.prefix[1:]
        gamma = float(np.min((prefix + zeta * ell) / np.arange(1, ell + 1)))
        f = sequence_to_function(sigma, zeta=zeta)
        xs = np.linspace(0.0, 1.0, 400)
        assert np.all(f(xs) >= (gamma - math.sqrt(zeta)) * xs - 1e-9)


def test_sequence_to_function_extremes():
    ell = 50
    alternating = DropSequence([(-1.0) ** i for i in range(ell)])
    f = sequence_to_function(alternating)
    assert f.a == 1.0
    all_down = DropSequence([-1.0] * ell)
    g = sequence_to_function(all_down, zeta=0.09)
    assert float(g(1.0)) == pytest.approx(-1.0)


def test_sequence_from_function_validation():
    with pytest.raises(ValueError):
        sequence_from_function(PLFunction([0.0, 0.5], [0.0, 0.25]), ell=4)


# ---------------------------------------------------------------------------
# HardSet container


def test_hardset_validation():
    with pytest.raises(ValueError):
        HardSet([(0.5, 0.4)])
    with pytest.raises(ValueError):
        HardSet([(0.1, 0.3), (0.2, 0.5)])  # overlapping
    hs = HardSet([(0.1, 0.2), (0.5, 0.5)])  # degenerate interval allowed
    assert hs.contains(0.5) and not hs.contains(0.4)
    assert hs.measure() == pytest.approx(0.1)
