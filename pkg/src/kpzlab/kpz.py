"""Closed-form dimension formulas and the registry of (BM set, SLE set) pairs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ParameterDomainError

_EPS = 1e-12


def _check_unit(d: float, name: str = "d") -> None:
    if not (-_EPS <= d <= 1.0 + _EPS):
        raise ParameterDomainError(f"{name} must lie in [0, 1], got {d!r}")


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 2.0:
        raise ParameterDomainError(f"gamma must lie in (0, 2), got {gamma!r}")


def gamma_of(kappa_prime: float) -> float:
    if not kappa_prime > 4.0:
        raise ParameterDomainError("kappa_prime must exceed 4")
    return 4.0 / math.sqrt(kappa_prime)


def kpz_forward(d: float, gamma: float) -> float:
    """Euclidean dimension of the image of a time set of dimension ``d``."""
    _check_unit(d)
    _check_gamma(gamma)
    g2 = gamma * gamma
    return (2.0 + g2 / 2.0) * d - (g2 / 2.0) * d * d


def kpz_inverse(x: float, gamma: float) -> float:
    """Root in [0, 1] of ``kpz_forward(d, gamma) = x``."""
    if not (-_EPS <= x <= 2.0 + _EPS):
        raise ParameterDomainError(f"x must lie in [0, 2], got {x!r}")
    _check_gamma(gamma)
    g2 = gamma * gamma
    b = 2.0 + g2 / 2.0
    disc = max(b * b - 2.0 * g2 * x, 0.0)
    # rationalised root, free of cancellation near x = 0
    return 2.0 * x / (b + math.sqrt(disc))


def kpz_boundary(d: float, gamma: float) -> float:
    """One-dimensional (boundary) version of the quadratic relation."""
    _check_unit(d)
    _check_gamma(gamma)
    q = gamma * gamma / 4.0
    return (1.0 + q) * d - q * d * d


def flowline_image_dim(d: float, kappa: float) -> float:
    """Dimension of the image of a boundary set of dimension ``d`` under a flow line, kappa in (0, 4)."""
    _check_unit(d)
    if not 0.0 < kappa < 4.0:
        raise ParameterDomainError(f"kappa must lie in (0, 4), got {kappa!r}")
    disc = (4.0 + kappa) ** 2 - 16.0 * kappa * d
    assert disc >= -1e-9, "negative discriminant for d <= 1, kappa < 4"
    root = math.sqrt(max(disc, 0.0))
    return (4.0 + kappa - root) * (12.0 + 3.0 * kappa + root) / (32.0 * kappa)


def _check_tuple_kp(kappa_prime: float, m: int) -> None:
    if not 4.0 < kappa_prime < 8.0:
        raise ParameterDomainError(f"kappa_prime must lie in (4, 8), got {kappa_prime!r}")
    if int(m) != m or m < 3:
        raise ParameterDomainError(f"m must be an integer >= 3, got {m!r}")


class TupleDim(NamedTuple):
    value: float
    empty: bool


def m_tuple_threshold(kappa_prime: float) -> float:
    """Largest m with nonempty (m-2)-tuple cone times: (2k'-4)/(k'-4)."""
    return (2.0 * kappa_prime - 4.0) / (kappa_prime - 4.0)


def m_tuple_bm_dim(kappa_prime: float, m: int) -> TupleDim:
    """``1/2 - (m-2)(k'/8 - 1/2)`` with the emptiness flag ``m > (2k'-4)/(k'-4)``.

    The flag is evaluated as ``(m-2)(k'-4) > 4`` with a relative slack of 1e-12
    so that thresholds hit in exact arithmetic are not lost to rounding.
    """
    _check_tuple_kp(kappa_prime, m)
    value = 0.5 - (m - 2) * (kappa_prime / 8.0 - 0.5)
    empty = (m - 2) * (kappa_prime - 4.0) > 4.0 * (1.0 + _EPS)
    return TupleDim(value, empty)


def m_tuple_sle_dim(kappa_prime: float, m: int) -> float:
    _check_tuple_kp(kappa_prime, m)
    kp = kappa_prime
    return (4 * m - 4 - kp * (m - 2)) * (12 + (kp - 4) * m) / (8 * kp)


def flowline_rho(kappa: float, theta_angle: float) -> float:
    return theta_angle * (2.0 - kappa / 2.0) / math.pi - 2.0


def flowline_angle_max(kappa: float) -> float:
    return min(math.pi * kappa / (4.0 - kappa), math.pi)


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TableRow:
    """One (SLE set, BM set) pair.

    ``bm_dim`` and ``sle_dim`` take ``kappa_prime`` plus the row's extra
    parameters as keywords (``theta_angle`` for flow lines, ``m`` for tuples).
    ``validity`` is an open kappa_prime interval.
    """

    name: str
    sle_set: str
    bm_set: str
    bm_dim: Callable[..., float] = field(repr=False)
    sle_dim: Callable[..., float] = field(repr=False)
    validity: tuple[float, float]
    detector: str | None
    extra: tuple[str, ...] = ()

    def contains(self, kappa_prime: float) -> bool:
        lo, hi = self.validity
        return lo < kappa_prime < hi

    def gamma(self, kappa_prime: float) -> float:
        return gamma_of(kappa_prime)

    def kpz_of_bm(self, kappa_prime: float, **kw) -> float:
        return kpz_forward(self.bm_dim(kappa_prime, **kw), self.gamma(kappa_prime))


def _flow_bm(kp: float, theta_angle: float) -> float:
    kappa = 16.0 / kp
    return 0.5 - (flowline_rho(kappa, theta_angle) + 2.0) / kappa


def _flow_sle(kp: float, theta_angle: float) -> float:
    kappa = 16.0 / kp
    rho = flowline_rho(kappa, theta_angle)
    return 2.0 - (rho + kappa / 2.0 + 2.0) * (rho - kappa / 2.0 + 6.0) / (2.0 * kappa)


_ROWS = (
    TableRow("trace_kappa", "SLE_kappa trace, kappa in (0,4)", "running infima of L or R",
             lambda kp: 0.5, lambda kp: 1.0 + (16.0 / kp) / 8.0,
             (4.0, math.inf), "running_infima_L"),
    TableRow("trace_kappa_prime", "SLE_kappa' trace, kappa' in (4,8)", "ancestor-free times",
             lambda kp: kp / 8.0, lambda kp: 1.0 + kp / 8.0,
             (4.0, 8.0), "ancestor_free"),
    TableRow("cut_points", "cut points of SLE_kappa', kappa' in (4,8)",
             "simultaneous running infima of L and R",
             lambda kp: 1.0 - kp / 8.0, lambda kp: 3.0 - 3.0 * kp / 8.0,
             (4.0, 8.0), "simultaneous_infima"),
    TableRow("double_points", "double points of SLE_kappa', kappa' in (4,8)",
             "composition of subordinators",
             lambda kp: kp / 8.0 - 0.5, lambda kp: 2.0 - (12.0 - kp) * (4.0 + kp) / (8.0 * kp),
             (4.0, 8.0), "composed_range"),
    TableRow("double_points_large", "double points of SLE_kappa', kappa' > 8",
             "running infima of L or R",
             lambda kp: 0.5, lambda kp: 1.0 + 2.0 / kp,
             (8.0, math.inf), "running_infima_L"),
    TableRow("flowline_intersection", "GFF flow-line intersection with angle gap theta",
             "composition of subordinators",
             _flow_bm, _flow_sle, (4.0, math.inf), None, ("theta_angle",)),
    TableRow("cle_gasket", "CLE_kappa' gasket, kappa' in (4,8)",
             "times in no left cone interval",
             lambda kp: 0.5 + kp / 16.0, lambda kp: 2.0 - (8.0 - kp) * (3.0 * kp - 8.0) / (32.0 * kp),
             (4.0, 8.0), "left_cone_complement"),
    TableRow("m_tuple_points", "m-tuple points of space-filling SLE_kappa'",
             "(m-2)-tuple cone times",
             lambda kp, m: m_tuple_bm_dim(kp, m).value, m_tuple_sle_dim,
             (4.0, 8.0), "m_tuple_times", ("m",)),
)


def table1() -> list[TableRow]:
    return list(_ROWS)


def row(name: str) -> TableRow:
    for r in _ROWS:
        if r.name == name:
            return r
    raise KeyError(name)


def sample_validity(r: TableRow, n: int = 50, upper_cap: float = 64.0) -> np.ndarray:
    """``n`` interior kappa_prime values of a row's validity interval."""
    lo, hi = r.validity
    hi = min(hi, upper_cap)
    return lo + (hi - lo) * (np.arange(1, n + 1) / (n + 1))


def row_checks(r: TableRow, kappa_prime: float, n_angles: int = 10,
               ms: tuple[int, ...] = (3, 4, 5)) -> list[dict]:
    """Forward-identity checks of one row at one kappa_prime, over its extra parameters.

    Parameter values outside the row's domain (negative BM dimension) are skipped.
    """
    out = []
    if r.extra == ("theta_angle",):
        kappa = 16.0 / kappa_prime
        amax = flowline_angle_max(kappa)
        grid = [{"theta_angle": amax * (i + 1) / n_angles} for i in range(n_angles)]
    elif r.extra == ("m",):
        grid = [{"m": m} for m in ms]
    else:
        grid = [{}]
    for kw in grid:
        bm = r.bm_dim(kappa_prime, **kw)
        if not -_EPS <= bm <= 1.0 + _EPS:
            continue
        bm = min(max(bm, 0.0), 1.0)
        sle = r.sle_dim(kappa_prime, **kw)
        kb = kpz_forward(bm, gamma_of(kappa_prime))
        rec = {"row": r.name, "kappa_prime": float(kappa_prime), "bm_dim": float(bm),
               "sle_dim": float(sle), "kpz_of_bm": float(kb), "abs_err": float(abs(kb - sle))}
        rec.update({k: float(v) for k, v in kw.items()})
        out.append(rec)
    return out
