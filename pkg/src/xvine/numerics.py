"""Numerical kernels: special functions, scalar optimization, monotone inversion,
quadrature, and reproducible random streams.

Everything here is a thin, contract-checked layer over numpy/scipy. The rest of
the package never imports scipy directly for these tasks, so tolerances and
truncation conventions live in one place.
"""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import BracketFailure, DomainError, NoConvergence

#: Upper limit substituted for an infinite quadrature endpoint. Integrands in
#: this package decay at least like x**-2, so the discarded tail mass is below
#: 1/IMPROPER_LIMIT and well under the tolerances in use.
IMPROPER_LIMIT = 1.0e6

#: Parameter transforms available to ScalarProblem: optimization runs on the
#: transformed (unconstrained or better-scaled) axis.
_TRANSFORMS: dict[str, tuple[Callable, Callable]] = {
    "identity": (lambda x: x, lambda t: t),
    "log": (np.log, np.exp),
    "logm1": (lambda x: np.log(x - 1.0), lambda t: np.exp(t) + 1.0),
    "atanh": (np.arctanh, np.tanh),
}


def std_normal_cdf(x):
    """Standard normal CDF, vectorized."""
    return special.ndtr(np.asarray(x, dtype=float))


def std_normal_quantile(u):
    """Standard normal quantile; DomainError outside [0, 1]."""
    u = np.asarray(u, dtype=float)
    if np.any((u < 0.0) | (u > 1.0) | np.isnan(u)):
        raise DomainError("normal quantile needs u in [0, 1]")
    return special.ndtri(u)


def reg_beta_cdf(x, a: float, b: float):
    """Regularized incomplete beta I_x(a, b), vectorized in x."""
    if a <= 0.0 or b <= 0.0:
        raise DomainError(f"beta shapes must be positive, got a={a}, b={b}")
    return special.betainc(a, b, np.asarray(x, dtype=float))


def reg_beta_quantile(u, a: float, b: float):
    """Inverse of reg_beta_cdf in x."""
    if a <= 0.0 or b <= 0.0:
        raise DomainError(f"beta shapes must be positive, got a={a}, b={b}")
    u = np.asarray(u, dtype=float)
    if np.any((u < 0.0) | (u > 1.0) | np.isnan(u)):
        raise DomainError("beta quantile needs u in [0, 1]")
    return special.betaincinv(a, b, u)


def log_gamma(a):
    """log Gamma(a) for a > 0."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0.0):
        raise DomainError("log_gamma needs a > 0")
    return special.gammaln(a)


@dataclass(frozen=True)
class ScalarProblem:
    """A one-dimensional minimization problem on a box.

    objective is evaluated on the original scale; the search itself runs on the
    transformed axis named by `transform` (a key of the transform table), so
    half-line or interval domains become well-scaled.
    """

    objective: Callable[[float], float]
    bracket: tuple[float, float]
    transform: str = "identity"

    def __post_init__(self) -> None:
        lo, hi = self.bracket
        if not lo < hi:
            raise DomainError(f"empty bracket ({lo}, {hi})")
        if self.transform not in _TRANSFORMS:
            raise DomainError(f"unknown transform {self.transform!r}")


def minimize_scalar(problem: ScalarProblem, tol: float = 1e-6) -> tuple[float, float]:
    """Minimize a ScalarProblem; returns (argmin, min value).

    The argmin is located to within `tol` on the transformed scale.
    """
    fwd, inv = _TRANSFORMS[problem.transform]
    t_lo, t_hi = fwd(problem.bracket[0]), fwd(problem.bracket[1])

    def goal(t: float) -> float:
        val = problem.objective(float(inv(t)))
        # fminbound compares values; replace non-finite by a huge finite penalty
        return float(val) if np.isfinite(val) else 1e300

    res = optimize.minimize_scalar(
        goal, bounds=(t_lo, t_hi), method="bounded",
        options={"xatol": tol, "maxiter": 500},
    )
    if not res.success:
        raise NoConvergence(f"bounded scalar search failed: {res.message}")
    return float(inv(res.x)), float(res.fun)


def invert_monotone(f, target, bracket, tol: float = 1e-10,
                    expand: bool = False, max_iter: int = 200):
    """Solve f(x) = target for monotone (vectorized) f by bisection.

    Parameters
    ----------
    f : callable mapping arrays to arrays (monotone in its argument).
    target : scalar or array of target values.
    bracket : (lo, hi) scalars or arrays bracketing every solution.
    tol : stop when |f(mid) - target| <= tol everywhere.
    expand : geometrically widen the bracket (hi *= 2, positive lo /= 2) until
        it straddles every target; without it a non-straddling bracket raises
        BracketFailure.

    Returns an array shaped like the broadcast inputs (floats collapse back to
    float).
    """
    target = np.asarray(target, dtype=float)
    scalar_in = target.ndim == 0
    lo = np.broadcast_to(np.asarray(bracket[0], dtype=float), target.shape).astype(float).copy()
    hi = np.broadcast_to(np.asarray(bracket[1], dtype=float), target.shape).astype(float).copy()
    if np.any(lo >= hi):
        raise BracketFailure("bracket lower end not below upper end")

    flo = np.asarray(f(lo), dtype=float)
    fhi = np.asarray(f(hi), dtype=float)
    sign = 1.0 if np.all(fhi >= flo) else -1.0
    if sign < 0 and not np.all(fhi <= flo):
        raise BracketFailure("f is not monotone over the bracket")

    if expand:
        for _ in range(max_iter):
            grow_hi = sign * fhi < sign * target
            grow_lo = sign * flo > sign * target
            if not (grow_hi.any() or grow_lo.any()):
                break
            hi = np.where(grow_hi, hi * 2.0, hi)
            lo = np.where(grow_lo, np.where(lo > 0, lo / 2.0, lo * 2.0 - 1.0), lo)
            flo = np.where(grow_lo, np.asarray(f(lo), dtype=float), flo)
            fhi = np.where(grow_hi, np.asarray(f(hi), dtype=float), fhi)
        else:
            raise BracketFailure("bracket expansion did not straddle the target")
    straddle = (sign * flo <= sign * target + tol) & (sign * fhi >= sign * target - tol)
    if not np.all(straddle):
        raise BracketFailure("target not bracketed")

    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = np.asarray(f(mid), dtype=float)
        err = fm - target
        if np.all(np.abs(err) <= tol):
            break
        go_up = sign * err < 0
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
        if np.all((hi - lo) <= 1e-15 * np.maximum(1.0, np.abs(mid))):
            break
    else:
        raise NoConvergence("bisection did not reach tolerance")
    return float(mid) if scalar_in else mid


def quad_1d(f, lo: float, hi: float, tol: float = 1e-8) -> float:
    """Adaptive quadrature of f over (lo, hi); infinite hi truncated at IMPROPER_LIMIT."""
    if np.isinf(hi):
        hi = IMPROPER_LIMIT
    val, err = integrate.quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=300)
    if err > 50 * max(tol, tol * abs(val)):
        raise NoConvergence(f"quadrature error estimate {err:.3g} above tolerance")
    return float(val)


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for (seed, *path); distinct paths give independent streams."""
    if seed < 0:
        raise DomainError("seed must be a nonnegative integer")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
