"""Closed-form threshold and bound functions.

Pure formula evaluators for the dimension thresholds used by the pipeline,
the envelope constants of the near-extremal stability estimate, and the
classical comparison bounds.  Everything here is exact arithmetic on floats;
no iteration, no data.
"""

from __future__ import annotations

import math

import numpy as np


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


# ---------------------------------------------------------------------------
# pinned-distance thresholds


def psi_su(s: float, u: float) -> float:
    """Threshold s(2+u-2s)/(2+2u-3s) on the region 0 < s <= u <= 2, u > 2s-1."""
    _check(0.0 < s <= u <= 2.0, "need 0 < s <= u <= 2")
    _check(u > 2.0 * s - 1.0, "need u > 2s - 1 (otherwise the threshold is 1)")
    return s * (2.0 + u - 2.0 * s) / (2.0 + 2.0 * u - 3.0 * s)


def chi(s: float, u: float) -> float:
    """min(psi_su, 1), with the value 1 exactly when u <= 2s - 1."""
    _check(0.0 < s <= u <= 2.0, "need 0 < s <= u <= 2")
    if u <= 2.0 * s - 1.0:
        return 1.0
    if s == 2.0:  # only reachable with u = 2 = 2s - 2 < 2s - 1, kept defensive
        return 1.0
    return min(psi_su(s, u), 1.0)


def psi_pack(s: float) -> float:
    """Packing-dimension threshold (1 + s + sqrt(3s(2-s)))/4 for s in (0, 2]."""
    _check(0.0 < s <= 2.0, "need 0 < s <= 2")
    return (1.0 + s + math.sqrt(3.0 * s * (2.0 - s))) / 4.0


def phi(D: float) -> float:
    """Optimal drop ratio (2 - D - sqrt(3 - 3 D^2))/4 for D in [0, 1]."""
    _check(0.0 <= D <= 1.0, "need D in [0, 1]")
    return (2.0 - D - math.sqrt(3.0 - 3.0 * D * D)) / 4.0


def phi_argmax(D: float) -> float:
    """The slope C in (2D, 1] at which the drop ratio attains phi(D).

    Only meaningful for D in [0, 1/2] (beyond that the maximizer leaves the
    admissible range of upper slopes).
    """
    _check(0.0 <= D <= 0.5, "need D in [0, 1/2]")
    return (3.0 * D - 1.0 + math.sqrt(3.0 - 3.0 * D * D)) / 2.0


def basic_ratio(C: float, D: float) -> float:
    """Drop-per-height ratio (C-2D)/(1+2C-3D) for envelope slopes D <= C."""
    _check(-1.0 <= D <= C <= 1.0, "need -1 <= D <= C <= 1")
    return (C - 2.0 * D) / (1.0 + 2.0 * C - 3.0 * D)


def half_scale_threshold(C: float, D: float) -> float:
    """Threshold h = (C-2D)/(1+C-D) separating the half-scale cut cases."""
    _check(-1.0 <= D <= C <= 1.0, "need -1 <= D <= C <= 1")
    return (C - 2.0 * D) / (1.0 + C - D)


# ---------------------------------------------------------------------------
# full-distance-set bound and its constants


def lambda_wolff(D: float) -> float:
    """(1+D)(37-50D+60D^2) / (18(3-4D+5D^2)) on D in [0, 1/3]."""
    _check(0.0 <= D <= 1.0 / 3.0, "need D in [0, 1/3]")
    return (1.0 + D) * (37.0 - 50.0 * D + 60.0 * D * D) / (18.0 * (3.0 - 4.0 * D + 5.0 * D * D))


def stability_t1(D: float, delta: float) -> float:
    """Envelope corner t1 = (1+D)/3 - delta*((1+D)/(1-2D) - (1-D))."""
    _check(0.0 <= D < 0.5, "need D in [0, 1/2)")
    return (1.0 + D) / 3.0 - delta * ((1.0 + D) / (1.0 - 2.0 * D) - (1.0 - D))


def wolff_constants(D: float) -> dict:
    """The constants (delta, xi, eta, t1) attached to the full-set bound.

    They satisfy xi*(1-2*eta) = lambda_wolff(D) and
    1 - lambda_wolff(D) = (1-2D)/3 - delta, with xi in (2/3, 1),
    delta in (0, 1/36), eta > 0 for D in [0, 1/3).
    """
    _check(0.0 <= D < 1.0 / 3.0, "need D in [0, 1/3)")
    den = 18.0 * (3.0 - 4.0 * D + 5.0 * D * D)
    delta = (1.0 + D) * (1.0 - 2.0 * D) / den
    xi = (1.0 + D) * (13.0 - 20.0 * D + 24.0 * D * D) / (6.0 * (3.0 - 4.0 * D + 5.0 * D * D))
    eta = (1.0 - 2.0 * D) * (1.0 - 3.0 * D) / (3.0 * (13.0 - 20.0 * D + 24.0 * D * D))
    return {"delta": delta, "xi": xi, "eta": eta, "t1": stability_t1(D, delta)}


# ---------------------------------------------------------------------------
# stability envelopes for near-extremal functions


def _pl_line_gap(f, xlo, xhi, alpha, beta):
    """Exact (min, max) of f(x) - (alpha + beta*x) over [xlo, xhi] for PL f.

    The difference is piecewise linear, so extrema occur at breakpoints of f
    inside the range or at the range endpoints.
    """
    xs = np.asarray(f.xs)
    cand = [xlo, xhi]
    cand.extend(xs[(xs > xlo) & (xs < xhi)].tolist())
    vals = [float(f(x)) - (alpha + beta * x) for x in cand]
    return min(vals), max(vals)


def stability_envelopes(f, D: float, delta: float, tol: float = 1e-9) -> dict:
    """Check the three-piece envelope that pins down near-extremal functions.

    For a 1-Lipschitz f on [0,1] with f(0)=0, f >= Dx, whose exact total drop
    exceeds (1-2D)/3 - delta, the graph is confined to:

      * [0, t1]:                 x - 3*delta*(1-D) <  f(x) <= x
      * [t1, 2*t1-6*delta*(1-D)]: t1 - 3*delta*(1-D) < f(x)
      * [2*t1, 1]:   3*t1 - x - 3*delta*(1-D) < f(x)
                                 < 1 + D - x + 3*delta*(1-D)/(1-2D)

    with t1 from :func:`stability_t1`.  Returns per-range margins (minimum of
    f minus lower envelope, resp. upper envelope minus f); ``holds`` means
    margin >= -tol, since extremal witnesses attain the envelopes exactly.

    ``f`` is any piecewise-linear function object with ``xs``/``ys``
    breakpoint arrays and scalar evaluation (see pindrop.lipdrop.PLFunction).
    """
    _check(0.0 <= D <= 1.0 / 3.0, "need D in [0, 1/3]")
    _check(0.0 < delta <= 1.0 / 21.0, "need delta in (0, 1/21]")
    if abs(float(f(0.0))) > tol:
        raise ValueError("f(0) must be 0")
    if float(f.xs[-1]) < 1.0 - 1e-12:
        raise ValueError("f must be defined on [0, 1]")
    t1 = stability_t1(D, delta)
    e = 3.0 * delta * (1.0 - D)
    ranges = {}

    # margin_lower = min(f - lower envelope); margin_upper = min(upper - f)
    lo_gap, _ = _pl_line_gap(f, 0.0, t1, -e, 1.0)
    _, hi_gap = _pl_line_gap(f, 0.0, t1, 0.0, 1.0)
    ranges["left"] = {
        "x": (0.0, t1),
        "margin_lower": lo_gap,
        "margin_upper": -hi_gap,
        "holds": lo_gap >= -tol and -hi_gap >= -tol,
    }

    x_mid_hi = 2.0 * t1 - 2.0 * e
    lo_gap, _ = _pl_line_gap(f, t1, x_mid_hi, t1 - e, 0.0)
    ranges["middle"] = {
        "x": (t1, x_mid_hi),
        "margin_lower": lo_gap,
        "margin_upper": None,
        "holds": lo_gap >= -tol,
    }

    up = 1.0 + D + 3.0 * delta * (1.0 - D) / (1.0 - 2.0 * D)
    lo_gap, _ = _pl_line_gap(f, 2.0 * t1, 1.0, 3.0 * t1 - e, -1.0)
    _, hi_gap = _pl_line_gap(f, 2.0 * t1, 1.0, up, -1.0)
    ranges["right"] = {
        "x": (2.0 * t1, 1.0),
        "margin_lower": lo_gap,
        "margin_upper": -hi_gap,
        "holds": lo_gap >= -tol and -hi_gap >= -tol,
    }

    return {
        "t1": t1,
        "tol": tol,
        "ranges": ranges,
        "holds": all(r["holds"] for r in ranges.values()),
    }


# ---------------------------------------------------------------------------
# classical comparison bounds


def legacy_bounds(s: float, t: float) -> dict:
    """Earlier planar distance-set bounds, for comparison plots and tables.

    Returns a dict with:
      * ``wolff``: min(3s/2 - 1, 1), a full-distance-set dimension bound
        meaningful for s > 1;
      * ``bourgain_floor``: 1/2 (the explicit part of the s >= 1 bound, whose
        known improvement over 1/2 is a non-explicit universal constant);
      * ``peres_schlag``: 2 + t - max(s, 1), the dimension of the exceptional
        pin set for target t <= min(s, 1);
      * ``iosevich_liu``: 3 + 3t - 3s, an improvement of the former in part
        of the parameter region.
    """
    _check(0.0 < s <= 2.0, "need s in (0, 2]")
    _check(0.0 < t <= min(s, 1.0), "need 0 < t <= min(s, 1)")
    return {
        "wolff": min(1.5 * s - 1.0, 1.0),
        "bourgain_floor": 0.5,
        "peres_schlag": 2.0 + t - max(s, 1.0),
        "iosevich_liu": 3.0 + 3.0 * t - 3.0 * s,
    }
