"""Tests for distance-set box counts and the lower-bound pipeline."""

import json
import math
import warnings

import numpy as np
import pytest

from pindrop.distlab import (
    BoundReport,
    distance_counts,
    entropy_chain_check,
    figure1_data,
    l2_support_bound_check,
    lower_bound_pipeline,
    pinned_counts,
    pinned_distance_measure,
)
from pindrop.dyadic import (
    DyadicMeasure,
    LineMeasure,
    entropy,
    four_corner_measure,
    morton_encode,
    product_cantor_measure,
    random_measure,
    uniform_measure,
)
from pindrop.seqpart import IntegerPartition, mtau


def _row_measure(depth: int, n: int, iy: int = 0) -> DyadicMeasure:
    cells = [
        [depth, int(morton_encode(np.array([i]), np.array([iy]))[0]), 1.0 / n]
        for i in range(n)
    ]
    return DyadicMeasure.from_cells(1, depth, cells)


# ---------------------------------------------------------------------------
# pinned counts


def test_single_cell_hits_one_or_two_bins():
    mu = DyadicMeasure.from_cells(1, 3, [[3, 0, 1.0]])
    assert 1 <= pinned_counts(mu, (2.0, 0.5)) <= 2


def test_full_grid_count_matches_distance_range():
    mu = uniform_measure(1, 6)
    count = pinned_counts(mu, (2.0, 2.0))
    # distances from (2,2) to the unit square span [sqrt2, 2 sqrt2]
    assert 0.5 <= count / 2**6 <= 1.5


def test_row_collapses_to_projection_count():
    mu = _row_measure(3, 8)
    count = pinned_counts(mu, (4.0, 1.0 / 16))
    assert 8 <= count <= 10


def test_pinned_counts_monotone_under_inclusion():
    mu = random_measure(1, 6, seed=2)
    keys, masses = mu.cells(6)
    half = DyadicMeasure(1, 6, keys[: keys.size // 2], masses[: keys.size // 2], normalize=True)
    assert pinned_counts(half, (2.0, 0.5)) <= pinned_counts(mu, (2.0, 0.5))


def test_pinned_counts_refinement_factor():
    for seed in (0, 1, 2):
        mu = random_measure(1, 7, seed=seed)
        for ell in range(2, 7):
            coarse = pinned_counts(mu, (2.0, 0.5), ell=ell)
            fine = pinned_counts(mu, (2.0, 0.5), ell=ell + 1)
            assert coarse <= 4 * fine
            assert fine <= 4 * coarse


def test_pinned_counts_warns_when_pin_too_close():
    mu = uniform_measure(1, 3)
    with pytest.warns(UserWarning, match="separation"):
        pinned_counts(mu, (0.5, 0.5))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pinned_counts(mu, (2.0, 0.5))


def test_pinned_counts_validates_depth():
    mu = uniform_measure(1, 3)
    with pytest.raises(ValueError):
        pinned_counts(mu, (2.0, 0.5), ell=4)
    with pytest.raises(ValueError):
        pinned_counts(mu, (2.0, 0.5), ell=0)


# ---------------------------------------------------------------------------
# pinned distance pushforward


def test_pinned_distance_measure_conserves_mass():
    for seed in range(4):
        mu = random_measure(1, 6, seed=seed)
        nu = pinned_distance_measure(mu, (2.0, 0.5))
        assert abs(nu.total_mass - 1.0) <= 1e-12
        w = nu.bin_width
        assert nu.idx.min() * w >= 1.0 - w  # pin at distance >= 1
        assert (nu.idx.max() + 1) * w <= math.sqrt(2.0) + 2.0 + w


def test_pinned_distance_support_within_outer_cover():
    mu = random_measure(1, 6, seed=9)
    nu = pinned_distance_measure(mu, (2.0, 0.5))
    assert nu.support_count <= pinned_counts(mu, (2.0, 0.5))
    assert entropy(nu, nu.depth) <= math.log2(nu.support_count) + 1e-12


# ---------------------------------------------------------------------------
# full distance set


def test_distance_single_cell():
    mu = DyadicMeasure.from_cells(1, 3, [[3, 0, 1.0]])
    assert distance_counts(mu) <= 2


def test_distance_counts_arithmetic_grid():
    # a row of 2^k equally spaced cells: differences form ~2 * 2^k bins
    mu = _row_measure(4, 8)
    count = distance_counts(mu)
    assert 8 <= count <= 4 * 8


def test_distance_counts_four_corner_regression():
    assert distance_counts(four_corner_measure(1, 8)) == 312


def test_distance_counts_bipartite():
    a = _row_measure(3, 4, iy=0)
    b = _row_measure(3, 4, iy=7)
    c_ab = distance_counts(a, b)
    c_ba = distance_counts(b, a)
    assert c_ab == c_ba
    assert c_ab >= 1
    # bipartite distances exclude 0: every distance is at least 6 cells
    assert distance_counts(a, b) <= distance_counts(a) + distance_counts(b) + c_ab


def test_distance_counts_validation():
    with pytest.raises(ValueError, match="caps"):
        distance_counts(uniform_measure(1, 7))
    with pytest.raises(ValueError, match="base"):
        distance_counts(uniform_measure(1, 3), uniform_measure(2, 3))


# ---------------------------------------------------------------------------
# pipeline


def test_pipeline_uniform_main_term_is_one():
    reports = lower_bound_pipeline(uniform_measure(1, 10), (2.0, 0.5))
    assert len(reports) == 1
    r = reports[0]
    assert r.main_term == 1.0
    assert r.mtau_value == 0.0
    assert r.empirical_count >= 0.9
    assert r.piece_mass == pytest.approx(1.0, abs=1e-12)


def test_pipeline_product_cantor_matches_reference():
    mu = product_cantor_measure(1, 10, 1.2, 2.0)
    reports = lower_bound_pipeline(mu, (2.0, 0.5), tau=0.05, s=1.2, u=2.0)
    assert len(reports) == 1
    r = reports[0]
    assert r.mtau_value == pytest.approx(2.0, abs=1e-12)
    assert r.main_term == pytest.approx(0.8, abs=1e-12)
    assert r.theory_refs["pinned_exponent"] == pytest.approx(0.8, abs=1e-12)
    # slack: discretization budget with unit constants
    budget = r.error_budget
    slack = budget["two_beta"] + budget["log2_term"] + budget["mass_term"]
    assert r.main_term <= r.theory_refs["pinned_exponent"] + slack
    assert r.empirical_count >= r.main_term - slack


def test_pipeline_line_supported_measure_consistent():
    # a single deep cell is (-1)-regular at every scale
    mu = DyadicMeasure.from_cells(1, 6, [[6, 0, 1.0]])
    reports = lower_bound_pipeline(mu, (2.0, 0.5), tau=0.05)
    r = reports[0]
    value, _ = mtau([-1.0] * 6, 0.05)
    assert r.mtau_value == value
    assert r.main_term == 1.0 - value / 6


def test_pipeline_reports_are_deterministic():
    mu = random_measure(1, 7, seed=5)
    a = [r.to_json() for r in lower_bound_pipeline(mu, (2.0, 0.5))]
    b = [r.to_json() for r in lower_bound_pipeline(mu, (2.0, 0.5))]
    assert a == b


def test_pipeline_report_fields_and_ranges():
    mu = random_measure(2, 5, seed=8)
    reports = lower_bound_pipeline(mu, (2.0, 0.5), tau=0.1, eps=0.1, beta=0.05, s=1.3, u=2.0)
    assert reports, "decomposition should produce at least one piece"
    for r in reports:
        assert 0.0 <= r.main_term <= 1.0
        assert 0.0 <= r.empirical_count <= 1.0 + 1.0 / (2 * 5)
        assert 0.0 <= r.bad_fraction_sampled <= 1.0
        assert r.sigma_summary["ell"] == 5
        assert r.partition[0] == 0 and r.partition[-1] == 5
        d = json.loads(r.to_json())
        assert d["count_convention"].startswith("outer-cover")
        assert d["mtau_value"] == r.mtau_value


def test_pipeline_validates_params():
    mu = uniform_measure(1, 4)
    with pytest.raises(ValueError):
        lower_bound_pipeline(mu, (2.0, 0.5), tau=0.0)
    with pytest.raises(ValueError):
        lower_bound_pipeline(mu, (2.0, 0.5), beta=1.0)


# ---------------------------------------------------------------------------
# entropy chain


def test_entropy_chain_uniform_regression():
    mu = uniform_measure(1, 6)
    report = entropy_chain_check(mu, (2.0, 0.5), IntegerPartition([0, 1, 2, 4, 6]))
    assert report["q"] == 4
    assert not report["degenerate"]
    # frozen calibration of the per-block linearization constant
    assert report["gap_per_q"] == pytest.approx(0.12156, abs=1e-4)


def test_entropy_chain_single_cell_degenerate():
    mu = DyadicMeasure.from_cells(1, 4, [[4, 0, 1.0]])
    report = entropy_chain_check(mu, (2.0, 0.5), IntegerPartition([0, 1, 2, 4]))
    assert report["degenerate"]
    # one atom: pinned entropy ~0, so the left side is near T*ell
    assert report["left"] == pytest.approx(4.0, abs=1.0)


def test_entropy_chain_refinement_scan():
    mu = random_measure(1, 6, seed=4)
    coarse = entropy_chain_check(mu, (2.0, 0.5), IntegerPartition([0, 1, 3, 6]))
    fine = entropy_chain_check(mu, (2.0, 0.5), IntegerPartition([0, 1, 2, 3, 4, 5, 6]))
    # refining changes the right-hand sum only within O(1) per added block
    assert abs(fine["right_sum"] - coarse["right_sum"]) <= 2.0 * (fine["q"] - coarse["q"]) + 2.0


def test_entropy_chain_validates_partition():
    mu = uniform_measure(1, 4)
    with pytest.raises(ValueError, match="cover"):
        entropy_chain_check(mu, (2.0, 0.5), IntegerPartition([0, 1, 2, 3]))
    with pytest.raises(ValueError, match="growth"):
        entropy_chain_check(mu, (2.0, 0.5), IntegerPartition([0, 4]))


# ---------------------------------------------------------------------------
# support bound


def test_l2_support_bound_uniform_equality():
    mu = uniform_measure(1, 5)
    from pindrop.dyadic import project

    nu = project(mu, 0.0)
    assert l2_support_bound_check(nu)
    assert nu.support_count == 2**5  # equality case


def test_l2_support_bound_single_bin():
    nu = LineMeasure(1, 4, [3], [1.0])
    assert l2_support_bound_check(nu)
    assert l2_support_bound_check(nu, L=2)


def test_l2_support_bound_random_densities():
    rng = np.random.default_rng(12)
    for _ in range(100):
        n = int(rng.integers(1, 100))
        idx = rng.choice(1000, size=n, replace=False)
        masses = rng.random(n) + 1e-9
        masses /= masses.sum()
        nu = LineMeasure(1, 8, idx, masses)
        assert l2_support_bound_check(nu)
        assert l2_support_bound_check(nu, L=int(rng.integers(1, 9)))


# ---------------------------------------------------------------------------
# reference curves


def test_figure1_start_values():
    lines = figure1_data().strip().split("\n")
    assert lines[0] == "s,packing,full_distance,pinned,wolff"
    s, packing, full, pinned, wolff = lines[1].split(",")
    assert float(s) == 1.0
    assert float(packing) == pytest.approx((2.0 + math.sqrt(3.0)) / 4.0, abs=1e-9)
    assert float(packing) == pytest.approx(0.933013, abs=1e-6)
    assert float(full) == pytest.approx(37.0 / 54.0, abs=1e-12)
    assert float(pinned) == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert float(wolff) == pytest.approx(0.5, abs=1e-12)


def test_figure1_crossings_and_domains():
    rows = [line.split(",") for line in figure1_data().strip().split("\n")[1:]]
    by_s = {float(r[0]): r for r in rows}
    # pinned curve meets the classical one exactly at s = 6/5
    assert float(by_s[1.2][3]) == pytest.approx(float(by_s[1.2][4]), abs=1e-12)
    assert float(by_s[1.19][3]) > float(by_s[1.19][4])
    assert float(by_s[1.21][3]) < float(by_s[1.21][4])
    # full-distance curve crosses near s = 1.21931
    assert float(by_s[1.21][1 + 1]) > float(by_s[1.21][4])
    assert float(by_s[1.23][2]) < float(by_s[1.23][4])
    # blank outside (1, 4/3]
    assert by_s[1.34][2] == "" and by_s[1.34][4] == ""
    assert by_s[1.5][1] != "" and by_s[1.5][3] != ""
    assert float(by_s[1.5][1]) == pytest.approx(1.0, abs=1e-12)
