"""Bivariate families: tail-copula densities for first-tree edges and pair
copulas for deeper edges.

Tail families are normalized so that integrating the density over either
coordinate (the other held fixed) gives 1; their h-functions are genuine
conditional CDFs on (0, inf). Pair families live on the unit square. All
evaluators are vectorized and work in log space where the raw algebra
overflows inside the estimation search boxes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoClosedForm
from .numerics import (
    invert_monotone,
    log_gamma,
    quad_1d,
    reg_beta_cdf,
    reg_beta_quantile,
    std_normal_cdf,
    std_normal_quantile,
)

#: Pair-copula arguments are clamped to this closed sub-interval of (0, 1).
EPS_UNIT = 1e-12

TAIL_KINDS = ("hr", "logistic", "neglogistic", "dirichlet")
PAIR_KINDS = ("indep", "gaussian", "clayton", "gumbel", "frank", "joe",
              "survclayton", "survgumbel", "survjoe")

#: Estimation search boxes: kind -> (low, high, ScalarProblem transform).
TAIL_BOXES = {
    "hr": (1e-3, 50.0, "log"),
    "logistic": (1.0 + 1e-6, 28.0, "logm1"),
    "neglogistic": (1e-3, 28.0, "log"),
    "dirichlet": (1e-3, 28.0, "log"),
}
PAIR_BOXES = {
    "gaussian": (-0.999, 0.999, "atanh"),
    "clayton": (1e-6, 28.0, "log"),
    "gumbel": (1.0 + 1e-8, 17.0, "logm1"),
    "frank": (-35.0, 35.0, "identity"),
    "joe": (1.0 + 1e-8, 30.0, "logm1"),
}
PAIR_BOXES["survclayton"] = PAIR_BOXES["clayton"]
PAIR_BOXES["survgumbel"] = PAIR_BOXES["gumbel"]
PAIR_BOXES["survjoe"] = PAIR_BOXES["joe"]


def _clip_unit(x):
    return np.clip(np.asarray(x, dtype=float), EPS_UNIT, 1.0 - EPS_UNIT)


def _ret(x):
    """Collapse 0-d arrays back to float."""
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def _pos(name, *arrays):
    out = []
    for arr in arrays:
        arr = np.asarray(arr, dtype=float)
        if np.any(~(arr > 0.0)):
            raise DomainError(f"{name} needs strictly positive arguments")
        out.append(arr)
    return out


# ---------------------------------------------------------------------------
# tail families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailFamily:
    """A parametric bivariate tail-copula density."""

    kind: str
    theta: float

    def __post_init__(self) -> None:
        if self.kind not in TAIL_KINDS:
            raise DomainError(f"unknown tail family {self.kind!r}")
        th = self.theta
        if not np.isfinite(th):
            raise DomainError(f"{self.kind} parameter must be finite, got {th}")
        if self.kind == "logistic":
            if not th > 1.0:
                raise DomainError(f"logistic needs theta > 1, got {th}")
        elif not th > 0.0:
            raise DomainError(f"{self.kind} needs theta > 0, got {th}")


def tail_log_density(fam: TailFamily, x, y):
    """log r(x, y); homogeneous of order -1 with unit margins."""
    x, y = _pos("tail density", x, y)
    th = fam.theta
    lx, ly = np.log(x), np.log(y)
    if fam.kind == "hr":
        z = lx - ly - th / 2.0
        out = -lx - 0.5 * math.log(2.0 * math.pi * th) - z * z / (2.0 * th)
    elif fam.kind == "logistic":
        out = (math.log(th - 1.0) + (th - 1.0) * (lx + ly)
               + (1.0 / th - 2.0) * np.logaddexp(th * lx, th * ly))
    elif fam.kind == "neglogistic":
        out = (math.log1p(th) - (th + 1.0) * (lx + ly)
               + (-1.0 / th - 2.0) * np.logaddexp(-th * lx, -th * ly))
    else:  # dirichlet
        c = math.log(2.0) + log_gamma(2.0 * th) - 2.0 * log_gamma(th)
        out = c + th * (lx + ly) - (2.0 * th + 1.0) * np.log(x + y)
    return _ret(out)


def tail_density(fam: TailFamily, x, y):
    return _ret(np.exp(tail_log_density(fam, x, y)))


def tail_h(fam: TailFamily, x, y):
    """Conditional CDF of the first coordinate at x, given the second equals y."""
    x, y = _pos("tail h", x, y)
    th = fam.theta
    t = np.log(x) - np.log(y)
    if fam.kind == "hr":
        out = std_normal_cdf((t - th / 2.0) / math.sqrt(th))
    elif fam.kind == "logistic":
        out = -np.expm1((1.0 - th) / th * np.logaddexp(0.0, th * t))
    elif fam.kind == "neglogistic":
        out = np.exp(-(1.0 + th) / th * np.logaddexp(0.0, -th * t))
    else:  # dirichlet
        out = reg_beta_cdf(x / (x + y), th + 1.0, th)
    return _ret(out)


def tail_h_inv(fam: TailFamily, u, y):
    """Inverse of tail_h in x at fixed y."""
    (y,) = _pos("tail h_inv", y)
    u = _clip_unit(u)
    th = fam.theta
    if fam.kind == "hr":
        out = y * np.exp(th / 2.0 + math.sqrt(th) * std_normal_quantile(u))
    elif fam.kind == "logistic":
        out = y * np.expm1(th / (1.0 - th) * np.log1p(-u)) ** (1.0 / th)
    elif fam.kind == "neglogistic":
        out = y * np.expm1(-th / (1.0 + th) * np.log(u)) ** (-1.0 / th)
    else:  # dirichlet
        p = np.clip(reg_beta_quantile(u, th + 1.0, th), 1e-15, 1.0 - 1e-15)
        out = y * p / (1.0 - p)
    return _ret(out)


def tail_chi(fam: TailFamily) -> float:
    """Bivariate tail-dependence coefficient of the family."""
    th = fam.theta
    if fam.kind == "hr":
        return float(2.0 - 2.0 * std_normal_cdf(math.sqrt(th) / 2.0))
    if fam.kind == "logistic":
        return 2.0 - 2.0 ** (1.0 / th)
    if fam.kind == "neglogistic":
        return 2.0 ** (-1.0 / th)
    return quad_1d(lambda t: float(reg_beta_cdf(1.0 / (1.0 + t), th + 1.0, th)),
                   0.0, 1.0, tol=1e-11)


# ---------------------------------------------------------------------------
# pair families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairFamily:
    """A parametric copula density on the unit square (or independence)."""

    kind: str
    theta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in PAIR_KINDS:
            raise DomainError(f"unknown pair family {self.kind!r}")
        th = self.theta
        if self.kind == "indep":
            if th is not None:
                raise DomainError("independence takes no parameter")
            return
        if th is None or not np.isfinite(th):
            raise DomainError(f"{self.kind} needs a finite parameter, got {th}")
        base = _base_kind(self.kind)
        if base == "gaussian" and not -1.0 < th < 1.0:
            raise DomainError(f"gaussian needs -1 < rho < 1, got {th}")
        if base == "clayton" and not th > 0.0:
            raise DomainError(f"clayton needs theta > 0, got {th}")
        if base in ("gumbel", "joe") and not th >= 1.0:
            raise DomainError(f"{base} needs theta >= 1, got {th}")
        if base == "frank" and th == 0.0:
            raise DomainError("frank needs theta != 0")

    @property
    def n_params(self) -> int:
        return 0 if self.kind == "indep" else 1


def _base_kind(kind: str) -> str:
    return kind[4:] if kind.startswith("surv") else kind


def _reflected(kind: str) -> bool:
    return kind.startswith("surv")


def _clayton_log_s(u, v, th):
    """log(u**-th + v**-th - 1), overflow-safe."""
    la, lb = -th * np.log(u), -th * np.log(v)
    m = np.maximum(la, lb)
    return m + np.log(np.exp(la - m) + np.exp(lb - m) - np.exp(-m))


def _log_density_base(kind: str, u, v, th) -> np.ndarray:
    if kind == "indep":
        return np.zeros(np.broadcast(u, v).shape)
    if kind == "gaussian":
        x, y = std_normal_quantile(u), std_normal_quantile(v)
        r2 = th * th
        return (-0.5 * math.log1p(-r2)
                - (r2 * (x * x + y * y) - 2.0 * th * x * y) / (2.0 * (1.0 - r2)))
    if kind == "clayton":
        ls = _clayton_log_s(u, v, th)
        return math.log1p(th) - (th + 1.0) * (np.log(u) + np.log(v)) - (2.0 + 1.0 / th) * ls
    if kind == "gumbel":
        lxt, lyt = np.log(-np.log(u)), np.log(-np.log(v))
        la = np.logaddexp(th * lxt, th * lyt)
        a_pow = np.exp(la / th)
        return (-a_pow + (th - 1.0) * (lxt + lyt) + (1.0 / th - 2.0) * la
                - np.log(u) - np.log(v) + np.log(a_pow + th - 1.0))
    if kind == "frank":
        gu, gv, g1 = np.expm1(-th * u), np.expm1(-th * v), math.expm1(-th)
        return (math.log(-th * g1) + np.log1p(gu) + np.log1p(gv)
                - 2.0 * np.log(np.abs(g1 + gu * gv)))
    # joe
    lxb, lyb = np.log1p(-u), np.log1p(-v)   # log of 1-u, 1-v
    la, lb = th * lxb, th * lyb             # log of (1-u)**th, (1-v)**th
    lt = np.logaddexp(la, lb + np.log1p(-np.exp(la)))
    bracket = np.logaddexp(
        math.log(th - 1.0) + np.log1p(-np.exp(la)) + np.log1p(-np.exp(lb))
        if th > 1.0 else -np.inf,
        math.log(th) + lt)
    return (th - 1.0) * (lxb + lyb) + (1.0 / th - 2.0) * lt + bracket


def _h_base(kind: str, u, v, th) -> np.ndarray:
    """Conditional CDF of the first argument given the second."""
    if kind == "indep":
        return np.broadcast_to(np.asarray(u, dtype=float), np.broadcast(u, v).shape)
    if kind == "gaussian":
        x, y = std_normal_quantile(u), std_normal_quantile(v)
        return std_normal_cdf((x - th * y) / math.sqrt(1.0 - th * th))
    if kind == "clayton":
        ls = _clayton_log_s(u, v, th)
        return np.exp(-(th + 1.0) * np.log(v) - (1.0 + 1.0 / th) * ls)
    if kind == "gumbel":
        lxt, lyt = np.log(-np.log(u)), np.log(-np.log(v))
        la = np.logaddexp(th * lxt, th * lyt)
        return np.exp(-np.exp(la / th) + (th - 1.0) * lyt
                      + (1.0 / th - 1.0) * la - np.log(v))
    if kind == "frank":
        gu, gv, g1 = np.expm1(-th * u), np.expm1(-th * v), math.expm1(-th)
        return (1.0 + gv) * gu / (g1 + gu * gv)
    # joe
    lxb, lyb = np.log1p(-u), np.log1p(-v)
    la, lb = th * lxb, th * lyb
    lt = np.logaddexp(la, lb + np.log1p(-np.exp(la)))
    return np.exp((1.0 / th - 1.0) * lt + (th - 1.0) * lyb + np.log1p(-np.exp(la)))


def _h_inv_base(kind: str, w, v, th) -> np.ndarray:
    if kind == "indep":
        return np.broadcast_to(np.asarray(w, dtype=float), np.broadcast(w, v).shape)
    if kind == "gaussian":
        x = std_normal_quantile(w) * math.sqrt(1.0 - th * th) + th * std_normal_quantile(v)
        return std_normal_cdf(x)
    if kind == "clayton":
        t = -th * np.log(v) + np.log(np.expm1(-th / (th + 1.0) * np.log(w)))
        return np.exp(-np.logaddexp(0.0, t) / th)
    if kind == "frank":
        gv, g1 = np.expm1(-th * v), math.expm1(-th)
        gu = w * g1 / (1.0 + (1.0 - w) * gv)
        return -np.log1p(gu) / th
    # gumbel / joe: monotone bisection on the h-function
    w_arr, v_arr = np.broadcast_arrays(np.asarray(w, dtype=float),
                                       np.asarray(v, dtype=float))
    return invert_monotone(lambda uu: _h_base(kind, uu, v_arr, th), w_arr,
                           (EPS_UNIT, 1.0 - EPS_UNIT), tol=1e-11)


def pair_log_density(fam: PairFamily, u, v):
    u, v = _clip_unit(u), _clip_unit(v)
    if _reflected(fam.kind):
        u, v = 1.0 - u, 1.0 - v
    return _ret(_log_density_base(_base_kind(fam.kind), u, v, fam.theta))


def pair_density(fam: PairFamily, u, v):
    return _ret(np.exp(pair_log_density(fam, u, v)))


def pair_h(fam: PairFamily, u, v):
    """Conditional CDF of the first argument given the second, clamped to (0, 1)."""
    u, v = _clip_unit(u), _clip_unit(v)
    if _reflected(fam.kind):
        out = 1.0 - _h_base(_base_kind(fam.kind), 1.0 - u, 1.0 - v, fam.theta)
    else:
        out = _h_base(fam.kind, u, v, fam.theta)
    return _ret(_clip_unit(out))


def pair_h_inv(fam: PairFamily, w, v):
    """Inverse of pair_h in its first argument."""
    w, v = _clip_unit(w), _clip_unit(v)
    if _reflected(fam.kind):
        out = 1.0 - _h_inv_base(_base_kind(fam.kind), 1.0 - w, 1.0 - v, fam.theta)
    else:
        out = _h_inv_base(fam.kind, w, v, fam.theta)
    return _ret(_clip_unit(out))


def pair_tau(fam: PairFamily) -> float:
    """Population Kendall's tau of the family."""
    kind, th = _base_kind(fam.kind), fam.theta
    if kind == "indep":
        return 0.0
    if kind == "gaussian":
        return 2.0 / math.pi * math.asin(th)
    if kind == "clayton":
        return th / (th + 2.0)
    if kind == "gumbel":
        return 1.0 - 1.0 / th
    if kind == "frank":
        a = abs(th)
        debye = quad_1d(lambda t: t / math.expm1(t) if t > 0 else 1.0, 0.0, a,
                        tol=1e-12) / a
        return math.copysign(1.0 + 4.0 * (debye - 1.0) / a, th)
    # joe: Archimedean generator integral
    def gen_ratio(s: float) -> float:
        sth = s ** th
        return math.log1p(-sth) * (1.0 - sth) / (th * s ** (th - 1.0))

    return 1.0 + 4.0 * quad_1d(gen_ratio, 0.0, 1.0, tol=1e-11)


def tau_inverse(kind: str, tau: float, closed_form_only: bool = False) -> float:
    """Parameter whose population tau equals `tau`; numeric for frank/joe."""
    base = _base_kind(kind)
    if base == "indep":
        raise DomainError("independence has no parameter to solve for")
    if base == "gaussian":
        if not -1.0 < tau < 1.0:
            raise DomainError(f"gaussian tau must lie in (-1, 1), got {tau}")
        return math.sin(math.pi * tau / 2.0)
    if base == "clayton":
        if not 0.0 < tau < 1.0:
            raise DomainError(f"clayton tau must lie in (0, 1), got {tau}")
        return 2.0 * tau / (1.0 - tau)
    if base == "gumbel":
        if not 0.0 <= tau < 1.0:
            raise DomainError(f"gumbel tau must lie in [0, 1), got {tau}")
        return 1.0 / (1.0 - tau)
    if closed_form_only:
        raise NoClosedForm(f"no closed-form tau inverse for {base}")
    lo, hi, _ = PAIR_BOXES[base]
    lo_tau = pair_tau(PairFamily(base, lo))
    hi_tau = pair_tau(PairFamily(base, hi))
    if not lo_tau - 1e-12 <= tau <= hi_tau + 1e-12:
        raise DomainError(
            f"{base} tau must lie in [{lo_tau:.4f}, {hi_tau:.4f}], got {tau}")

    def tau_of(t):
        # frank's tau is continuous through theta = 0 (independence limit),
        # but the parameter itself is excluded; bisection may land there.
        flat = [0.0 if base == "frank" and x == 0.0
                else pair_tau(PairFamily(base, float(x)))
                for x in np.atleast_1d(t)]
        return np.asarray(flat).reshape(np.shape(t))

    return float(invert_monotone(tau_of, tau, (lo, hi), tol=1e-9))
