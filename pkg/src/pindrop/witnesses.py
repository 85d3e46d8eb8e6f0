"""Extremal functions attaining the drop-calculus bounds with equality.

Constructors for the piecewise-linear functions whose minimal total drop
matches the closed-form envelope bounds exactly:

* ``witness_basic`` -- for every admissible envelope slope pair ``(D, C)``
  and endpoint value ``b``, a function with
  ``tdrop_exact(f) == (a - b)*(C - 2D)/(1 + 2C - 3D)``.
* ``witness_initial`` -- the upper slope tuned so that the restriction to
  every self-similar prefix point attains the optimal prefix drop ratio
  ``phi(D)``.
* ``witness_stability`` -- three families of near-extremal functions whose
  total drop sits exactly ``delta`` below the slope-pair maximum, used to
  show the stability envelopes cannot be widened.

Each constructor returns a :class:`~pindrop.lipdrop.PLFunction` (or the
:class:`BasicWitness` subclass that also stores the ladder of prefix
points).  Companion helpers expose the predicted drop values and the
predicted hard-interval structure, so correctness is a direct comparison
against the exact sweep in :mod:`pindrop.lipdrop`.
"""

from __future__ import annotations

import math

from .bounds import basic_ratio, phi, phi_argmax, stability_t1
from .lipdrop import (
    STOP_SCALE_FACTOR,
    HardSet,
    PLFunction,
    hard_points,
    tdrop_exact,
)

__all__ = [
    "BasicWitness",
    "witness_basic",
    "witness_initial",
    "witness_stability",
    "basic_drop_value",
    "basic_hard_intervals",
    "ladder_ratio",
    "stability_drop_value",
    "stability_hard_intervals",
    "verify_witness",
]

# A stored ladder point is kept only when the truncation of the geometric
# tail perturbs its restricted drop ratio by at most ~1e-10 (the combined
# drop carried by the discarded tail plus the splice ramp is < 2 * x_tail).
_LADDER_ACCURACY = 2e10


class BasicWitness(PLFunction):
    """Extremal function plus the prefix points attaining the drop ratio.

    ``ladder`` holds the x-values (descending) at which the restricted
    drop ratio ``tdrop_exact(f|[0,u]) / u`` equals ``ladder_ratio(C, D)``;
    it is empty when the upper envelope slope is 1 (single hard interval,
    no self-similar structure) or when truncation makes a point inaccurate.
    """

    __slots__ = ("ladder",)

    def __init__(self, xs, ys, ladder=()):
        super().__init__(xs, ys)
        self.ladder = tuple(float(u) for u in ladder)


def _check_basic_params(a: float, b: float, C: float, D: float) -> None:
    if not (math.isfinite(a) and a > 0.0):
        raise ValueError("need a > 0")
    if not (-1.0 <= D < C <= 1.0):
        raise ValueError("need -1 <= D < C <= 1")
    if C < 2.0 * D:
        raise ValueError("need C >= 2D")
    tol = 1e-12 * max(1.0, abs(a))
    if not (D * a - tol <= b <= C * a + tol):
        raise ValueError("need b in [D*a, C*a]")


def _dedupe_descending(points, scale: float):
    """Merge analytically coincident breakpoints of a descending (x, y) list.

    The tolerance is relative to the pair's own magnitude so that genuine
    geometry (consecutive ladder points differ by a bounded factor) is never
    merged, however deep the ladder descends.
    """
    kept = []
    for x, y in points:
        if kept and abs(x - kept[-1][0]) <= 1e-13 * max(abs(x), abs(kept[-1][0])):
            if abs(y - kept[-1][1]) > 1e-9 * max(1.0, scale):
                raise AssertionError("coincident breakpoints with distinct values")
            continue
        kept.append((float(x), float(y)))
    kept.reverse()
    while kept and kept[0][0] <= 0.0:
        if abs(kept[0][1]) > 1e-9 * max(1.0, scale):
            raise AssertionError("breakpoint at the origin with nonzero value")
        kept.pop(0)
    xs = [0.0] + [p[0] for p in kept]
    ys = [0.0] + [p[1] for p in kept]
    return xs, ys


def _basic_layout(a: float, b: float, C: float, D: float, stop_scale: float):
    """Breakpoints, hard intervals, and ladder of the basic witness.

    Returns a dict with keys ``points`` (descending (x, y) pairs, origin
    excluded), ``hard`` (ascending closed intervals predicted to carry the
    whole drop), and ``ladder`` (descending prefix points whose restricted
    ratio is accurate despite tail truncation; empty when C == 1).
    """
    w = a - b
    if C == 1.0:
        x1 = (1.0 + D) * w / (3.0 * (1.0 - D))
        x3 = w / (1.0 - D)
        points = [(a, b), (x3, D * x3), (2.0 * x1, x1), (x1, x1)]
        hard = [(2.0 * x1, x3)] if x3 - 2.0 * x1 > 0.0 else []
        return {"points": points, "hard": hard, "ladder": []}

    q = (1.0 + D) * (1.0 - C) / ((1.0 - D) * (2.0 + C))
    points = [(a, b)]
    hard_desc = []
    ladder = []
    x_up = w / (1.0 - D)  # foot of the current slope -1 descent
    points.append((x_up, D * x_up))
    qk = 1.0
    for _ in range(10_000):
        x_lo = w * qk * q / (1.0 - C)  # lower corner of this period's flat
        points.append((2.0 * x_lo, C * x_lo))
        points.append((x_lo, C * x_lo))
        if x_up - 2.0 * x_lo > 0.0:
            hard_desc.append((2.0 * x_lo, x_up))
        ladder.append(2.0 * x_lo)
        if x_lo < stop_scale:
            break
        qk *= q
        x_up = w * qk / (1.0 - D)
        points.append((x_up, D * x_up))
    else:  # pragma: no cover - q < 2/3 always, so the loop terminates
        raise AssertionError("witness ladder failed to terminate")
    x_tail = points[-1][0]
    ladder = [u for u in ladder if u > 0.0 and u >= _LADDER_ACCURACY * x_tail]
    return {"points": points, "hard": hard_desc[::-1], "ladder": ladder}


def witness_basic(a: float, b: float, C: float, D: float, stop_scale: float | None = None) -> BasicWitness:
    """Extremal function for the slope pair ``(D, C)`` with ``f(a) = b``.

    The function ascends at slope 1, pauses on flats, and descends at slope
    -1 exactly so that its hard intervals carry total drop
    ``(a - b)*(C - 2D)/(1 + 2C - 3D)``, the envelope bound, attained.
    For ``C < 1`` the breakpoints form a geometric self-similar ladder,
    truncated once it descends below ``stop_scale`` (default ``a * 2**-40``)
    and spliced to the origin by a ramp of slope ``C``; the truncation
    changes the total drop by less than ``2 * stop_scale``.
    """
    _check_basic_params(a, b, C, D)
    a = float(a)
    C = float(C)
    D = float(D)
    b = min(max(float(b), D * a), C * a)
    if stop_scale is None:
        stop_scale = a * STOP_SCALE_FACTOR
    if not 0.0 < stop_scale < a:
        raise ValueError("need 0 < stop_scale < a")
    layout = _basic_layout(a, b, C, D, float(stop_scale))
    xs, ys = _dedupe_descending(layout["points"], a)
    return BasicWitness(xs, ys, layout["ladder"])


def basic_drop_value(a: float, b: float, C: float, D: float) -> float:
    """Exact total drop of the basic witness: ``(a - b) * (C-2D)/(1+2C-3D)``."""
    _check_basic_params(a, b, C, D)
    return (a - b) * basic_ratio(C, D)


def basic_hard_intervals(a: float, b: float, C: float, D: float, stop_scale: float | None = None) -> HardSet:
    """Predicted hard intervals of ``witness_basic`` (same truncation depth).

    Exact whenever ``C > 2D`` strictly and, for ``C < 1``, also ``C > 0``
    (a nonpositive splice ramp adds zero-drop hard points near the origin
    that the closed-form layout does not enumerate).
    """
    _check_basic_params(a, b, C, D)
    if stop_scale is None:
        stop_scale = a * STOP_SCALE_FACTOR
    layout = _basic_layout(float(a), float(b), float(C), float(D), float(stop_scale))
    return HardSet(layout["hard"])


def ladder_ratio(C: float, D: float) -> float:
    """Restricted drop ratio at the witness ladder points.

    ``(1 - C)*(C/2 - D)/(1 + 2C - 3D)``; maximized over ``C`` this equals
    ``phi(D)`` at ``C = phi_argmax(D)``.
    """
    if not (-1.0 <= D < C < 1.0 and C >= 2.0 * D):
        raise ValueError("need -1 <= D < C < 1 with C >= 2D")
    return (1.0 - C) * (C / 2.0 - D) / (1.0 + 2.0 * C - 3.0 * D)


def witness_initial(D: float, stop_scale: float | None = None) -> BasicWitness:
    """Extremal function for the prefix drop ratio ``phi(D)``.

    The basic witness on ``[0, 1]`` with ``b = D`` and the upper slope
    ``C = phi_argmax(D)``; the restriction to every stored ladder point
    ``u`` satisfies ``tdrop_exact(f|[0,u]) / u == phi(D)``, and the ratio is
    strictly larger at every other prefix point.
    """
    if not 0.0 <= D < 0.5:
        raise ValueError("need D in [0, 1/2)")
    C = phi_argmax(D)
    return witness_basic(1.0, D, C, D, stop_scale=stop_scale)


# ---------------------------------------------------------------------------
# near-extremal families for the stability envelopes


def _check_stability_params(kind: str, D: float, delta, eta, xi) -> None:
    if kind in ("f1", "f2"):
        if delta is None or eta is not None or xi is not None:
            raise ValueError(f"kind {kind!r} takes exactly the parameters D and delta")
        if not 0.0 <= D <= 1.0 / 3.0:
            raise ValueError("need D in [0, 1/3]")
        if not 0.0 <= delta <= 1.0 / 12.0:
            raise ValueError("need delta in [0, 1/12]")
    elif kind == "f3":
        if eta is None or xi is None or delta is not None:
            raise ValueError("kind 'f3' takes exactly the parameters D, eta and xi")
        if not 0.0 <= D <= 0.26:
            raise ValueError("need D in [0, 0.26]")
        if not 0.0 < eta <= 1.0 / 3.0 - D:
            raise ValueError("need eta in (0, 1/3 - D]")
        if not 0.0 < xi <= 1.0:
            raise ValueError("need xi in (0, 1]")
    else:
        raise ValueError("kind must be one of 'f1', 'f2', 'f3'")


def _stability_layout(kind: str, D: float, delta, eta, xi):
    """Descending breakpoints and exact hard intervals of one family member."""
    if kind == "f1":
        p1 = 1.5 * delta * (1.0 + D)
        p2 = 3.0 * delta
        p3 = 0.5 * (1.0 + D + 3.0 * delta * (1.0 - D))
        points = [(1.0, D), (p3, 0.5 * (1.0 + D - 3.0 * delta * (1.0 - D))), (p2, p2 * D), (p1, p1)]
        hard = []
        if delta > 0.0:
            hard.append((2.0 * delta * (1.0 + D), 3.0 * delta))
        hard.append((2.0 / 3.0 * (1.0 + D + 3.0 * delta * (1.0 - D)), 1.0))
        return points, hard
    if kind == "f2":
        t1 = stability_t1(D, delta)
        peak = 1.5 * (t1 - delta * (1.0 - D))
        xr = 1.0 - 3.0 * delta / (1.0 - 2.0 * D)
        points = [(1.0, D), (xr, D * xr), (peak, peak)]
        # for D == 0 the zero tail beyond xr is hard as well (zero drop)
        hard = [(2.0 * (t1 - delta * (1.0 - D)), 1.0 if D == 0.0 else xr)]
        return points, hard
    x1 = xi * (4.0 / 3.0 - eta) / (1.0 + D)
    x2 = min(x1, 1.0)
    peak = 0.5 * x2 * (1.0 + D)
    points = [(1.0, D), (x2, D * x2), (peak, peak)]
    hard = [(2.0 / 3.0 * x2 * (1.0 + D), 1.0 if D == 0.0 else x2)]
    return points, hard


def witness_stability(kind: str, D: float, delta: float | None = None,
                      eta: float | None = None, xi: float | None = None) -> PLFunction:
    """Near-extremal function of one of the three stability families.

    * ``f1``: drop ``(1-2D)/3 - delta``, hugging the lower envelope on an
      initial segment before ascending at slope 1.
    * ``f2``: drop ``(1-2D)/3 - delta``, hugging the upper envelope before
      descending onto the line ``D*x``.
    * ``f3``: a scaled tent of height ``x2*(1+D)/2`` and drop
      ``x2*(1-2D)/3`` with ``x2 = min(xi*(4/3 - eta)/(1+D), 1)``, pinning
      the joint constraint between the prefix parameters down to its
      closed-form boundary.
    """
    _check_stability_params(kind, float(D), delta, eta, xi)
    points, _ = _stability_layout(kind, float(D), delta, eta, xi)
    xs, ys = _dedupe_descending(points, 1.0)
    return PLFunction(xs, ys)


def stability_drop_value(kind: str, D: float, delta: float | None = None,
                         eta: float | None = None, xi: float | None = None) -> float:
    """Exact total drop of the named stability witness."""
    _check_stability_params(kind, float(D), delta, eta, xi)
    if kind in ("f1", "f2"):
        return (1.0 - 2.0 * D) / 3.0 - delta
    x2 = min(xi * (4.0 / 3.0 - eta) / (1.0 + D), 1.0)
    return x2 * (1.0 - 2.0 * D) / 3.0


def stability_hard_intervals(kind: str, D: float, delta: float | None = None,
                             eta: float | None = None, xi: float | None = None) -> HardSet:
    """Exact hard intervals of the named stability witness."""
    _check_stability_params(kind, float(D), delta, eta, xi)
    _, hard = _stability_layout(kind, float(D), delta, eta, xi)
    return HardSet(hard)


# ---------------------------------------------------------------------------
# verification report


def _interval_error(expected: HardSet, measured: HardSet) -> float:
    if len(expected) != len(measured):
        return math.inf
    err = 0.0
    for (u1, v1), (u2, v2) in zip(expected, measured):
        err = max(err, abs(u1 - u2), abs(v1 - v2))
    return err


def verify_witness(kind: str, params: dict, stop_scale: float | None = None) -> dict:
    """Build a witness and compare measured against predicted quantities.

    ``params`` carries the constructor arguments for ``kind`` (one of
    ``basic``, ``initial``, ``f1``, ``f2``, ``f3``).  The report contains
    the function's breakpoints, predicted and measured total drop, the
    predicted and measured hard intervals (when the closed-form structure
    is exact), ladder ratios where applicable, and an overall ``ok`` flag
    at tolerance 1e-9.
    """
    params = dict(params)
    ladder_target = None
    if kind == "basic":
        a, b, C, D = (float(params[k]) for k in ("a", "b", "C", "D"))
        fn = witness_basic(a, b, C, D, stop_scale=stop_scale)
        predicted_drop = basic_drop_value(a, b, C, D)
        structural = C > 2.0 * D and (C == 1.0 or C > 0.0)
        expected_hard = basic_hard_intervals(a, b, C, D, stop_scale=stop_scale) if structural else None
        if C < 1.0:
            ladder_target = ladder_ratio(C, D)
    elif kind == "initial":
        D = float(params["D"])
        fn = witness_initial(D, stop_scale=stop_scale)
        C = phi_argmax(D)
        predicted_drop = basic_drop_value(1.0, D, C, D)
        expected_hard = basic_hard_intervals(1.0, D, C, D, stop_scale=stop_scale)
        ladder_target = phi(D)
    elif kind in ("f1", "f2", "f3"):
        D = float(params["D"])
        kw = {k: float(params[k]) for k in ("delta", "eta", "xi") if k in params}
        fn = witness_stability(kind, D, **kw)
        predicted_drop = stability_drop_value(kind, D, **kw)
        expected_hard = stability_hard_intervals(kind, D, **kw)
    else:
        raise ValueError("kind must be one of 'basic', 'initial', 'f1', 'f2', 'f3'")

    measured_drop = tdrop_exact(fn)
    measured_hard = hard_points(fn)
    report = {
        "kind": kind,
        "params": params,
        "function": {"a": fn.a, "breakpoints": [[float(x), float(y)] for x, y in zip(fn.xs, fn.ys)]},
        "predicted_drop": float(predicted_drop),
        "measured_drop": float(measured_drop),
        "drop_abs_error": abs(float(measured_drop) - float(predicted_drop)),
        "predicted_hard": None if expected_hard is None else [list(iv) for iv in expected_hard],
        "measured_hard": [list(iv) for iv in measured_hard],
        "hard_max_error": None if expected_hard is None else _interval_error(expected_hard, measured_hard),
        "ladder": list(getattr(fn, "ladder", ())),
        "ladder_ratio_target": ladder_target,
        "ladder_ratios": None,
        "ladder_max_error": None,
    }
    if ladder_target is not None and report["ladder"]:
        ratios = [tdrop_exact(fn.restrict(u)) / u for u in report["ladder"]]
        report["ladder_ratios"] = ratios
        report["ladder_max_error"] = max(abs(r - ladder_target) for r in ratios)
    ok = report["drop_abs_error"] <= 1e-9
    if report["hard_max_error"] is not None:
        ok = ok and report["hard_max_error"] <= 1e-9
    if report["ladder_max_error"] is not None:
        ok = ok and report["ladder_max_error"] <= 1e-9
    report["ok"] = bool(ok)
    return report
