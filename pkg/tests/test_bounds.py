import math

import numpy as np
import pytest

from pindrop import bounds


class _PL:
    """Tiny stand-in for a piecewise-linear function (xs, ys, interp call)."""

    def __init__(self, xs, ys):
        self.xs = np.asarray(xs, float)
        self.ys = np.asarray(ys, float)

    def __call__(self, x):
        return float(np.interp(x, self.xs, self.ys))


def test_psi_chi_values():
    assert abs(bounds.psi_su(1.2, 2.0) - 0.8) < 1e-15
    assert abs(bounds.chi(1.2, 2.0) - 0.8) < 1e-15
    # threshold equals 2s/3 when u = 2
    for s in np.linspace(0.1, 1.9, 37):
        assert abs(bounds.chi(s, 2.0) - min(2 * s / 3, 1.0)) < 1e-12
    # chi == 1 exactly on u <= 2s-1, continuous across the branch
    assert bounds.chi(1.0, 1.0) == 1.0
    assert abs(bounds.psi_su(1.0, 1.0 + 1e-9) - 1.0) < 1e-8
    assert bounds.chi(1.5, 2.0) == 1.0
    assert bounds.chi(2.0, 2.0) == 1.0


def test_psi_chi_validation():
    with pytest.raises(ValueError):
        bounds.psi_su(1.5, 1.2)
    with pytest.raises(ValueError):
        bounds.psi_su(0.0, 1.0)
    with pytest.raises(ValueError):
        bounds.psi_su(1.5, 2.0)  # u <= 2s-1: threshold is 1, not psi
    with pytest.raises(ValueError):
        bounds.chi(-0.2, 1.0)


def test_psi_pack_floor_and_identity():
    v = bounds.psi_pack(1.0)
    assert abs(v - (2.0 + math.sqrt(3.0)) / 4.0) < 1e-15
    assert abs(v - 0.9330127018922193) < 1e-12
    assert abs(bounds.psi_pack(1.5) - 1.0) < 1e-15
    for s in np.linspace(1.0 + 1e-9, 2.0, 101):
        assert abs((1.0 - bounds.psi_pack(s)) - bounds.phi(s - 1.0)) < 1e-12
    # min over (1, 1.5] sits at the left endpoint
    grid = np.linspace(1.0 + 1e-9, 1.5, 100001)
    vals = [bounds.psi_pack(s) for s in grid]
    assert min(vals) >= (2.0 + math.sqrt(3.0)) / 4.0 - 1e-9


def test_phi_values_and_maximizer():
    assert abs(bounds.phi(0.0) - (2.0 - math.sqrt(3.0)) / 4.0) < 1e-15
    assert abs(bounds.phi(1.0 / 7.0) - 1.0 / 28.0) < 1e-15
    assert abs(bounds.phi_argmax(1.0 / 7.0) - 4.0 / 7.0) < 1e-15
    # phi(D) is the max over admissible C of (1-C)(C/2-D)/(1+2C-3D)
    for D in (0.0, 0.1, 1.0 / 7.0, 0.3, 0.45):
        cstar = bounds.phi_argmax(D)
        ratio = lambda C: (1 - C) * (C / 2 - D) / (1 + 2 * C - 3 * D)
        assert abs(ratio(cstar) - bounds.phi(D)) < 1e-13
        grid = np.linspace(2 * D + 1e-9, 1.0, 20001)
        assert max(ratio(C) for C in grid) <= bounds.phi(D) + 1e-9
    assert bounds.phi_argmax(0.5) == pytest.approx(1.0, abs=1e-12)


def test_basic_ratio_and_threshold():
    assert bounds.basic_ratio(1.0, 0.0) == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert bounds.basic_ratio(0.5, 0.25) == 0.0
    assert bounds.half_scale_threshold(1.0, 0.0) == 0.5
    with pytest.raises(ValueError):
        bounds.basic_ratio(0.2, 0.5)


def test_lambda_wolff():
    assert abs(bounds.lambda_wolff(0.0) - 37.0 / 54.0) < 1e-15
    for D in np.linspace(0.0, 1.0 / 3.0, 41):
        lam = bounds.lambda_wolff(D)
        c = bounds.wolff_constants(D) if D < 1.0 / 3.0 else None
        if c is not None:
            assert abs(c["xi"] * (1.0 - 2.0 * c["eta"]) - lam) < 1e-13
            assert abs((1.0 - lam) - ((1.0 - 2.0 * D) / 3.0 - c["delta"])) < 1e-13
        # s-variable form of the same rational function
        s = 1.0 + D
        alt = s * (147.0 - 170.0 * s + 60.0 * s * s) / (18.0 * (12.0 - 14.0 * s + 5.0 * s * s))
        assert abs(lam - alt) < 1e-13


def test_wolff_constants_at_zero():
    c = bounds.wolff_constants(0.0)
    assert abs(c["delta"] - 1.0 / 54.0) < 1e-15
    assert abs(c["xi"] - 13.0 / 18.0) < 1e-15
    assert abs(c["eta"] - 1.0 / 39.0) < 1e-15
    assert abs(c["t1"] - (1.0 / 3.0 - c["delta"] * 0.0)) < 1e-15  # t1 = 1/3 at D=0
    for D in np.linspace(0.0, 0.33, 12):
        c = bounds.wolff_constants(D)
        assert 0.0 < c["delta"] < 1.0 / 36.0
        assert 2.0 / 3.0 < c["xi"] < 1.0
        assert c["eta"] > 0.0


def test_legacy_bounds():
    lb = bounds.legacy_bounds(4.0 / 3.0, 1.0)
    assert abs(lb["wolff"] - 1.0) < 1e-12
    assert lb["bourgain_floor"] == 0.5
    lb = bounds.legacy_bounds(1.2, 0.8)
    assert abs(lb["wolff"] - 0.8) < 1e-12
    assert abs(lb["peres_schlag"] - (2.0 + 0.8 - 1.2)) < 1e-12
    assert abs(lb["iosevich_liu"] - (3.0 + 2.4 - 3.6)) < 1e-12
    with pytest.raises(ValueError):
        bounds.legacy_bounds(1.2, 1.1)


def test_crossings_against_classical():
    # 2s/3 overtakes min(3s/2-1, 1) exactly up to s = 6/5
    f = lambda s: 2 * s / 3 - (1.5 * s - 1.0)
    assert abs(f(1.2)) < 1e-12
    # lambda_wolff(s-1) overtakes it up to s ~ 1.21931
    g = lambda s: bounds.lambda_wolff(s - 1.0) - (1.5 * s - 1.0)
    lo, hi = 1.2, 1.25
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    assert abs(0.5 * (lo + hi) - 1.21931) < 2e-4
    assert g(1.05) > 0 and g(1.3) < 0


def test_stability_envelopes_plateau():
    # the flat-top extremal shape at D=0 sits inside all three envelopes
    D, delta = 0.0, 1.0 / 54.0
    f = _PL([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], [0.0, 1.0 / 3.0, 1.0 / 3.0, 0.0])
    rep = bounds.stability_envelopes(f, D, delta)
    assert rep["holds"]
    assert abs(rep["t1"] - 1.0 / 3.0) < 1e-15
    assert rep["ranges"]["left"]["margin_upper"] >= -1e-12
    assert rep["ranges"]["left"]["margin_lower"] == pytest.approx(3 * delta, abs=1e-12)
    # a function escaping the envelope is flagged
    g = _PL([0.0, 0.5, 1.0], [0.0, 0.1, 0.0])
    rep = bounds.stability_envelopes(g, D, delta)
    assert not rep["holds"]
    with pytest.raises(ValueError):
        bounds.stability_envelopes(f, 0.4, delta)
    with pytest.raises(ValueError):
        bounds.stability_envelopes(f, 0.0, 0.2)