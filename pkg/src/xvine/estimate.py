"""Rank-based pseudo-samples, per-edge fits, family selection, structure learning, truncation."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import (
    DegenerateColumn,
    DomainError,
    InfeasibleLevel,
    InsufficientData,
    NotATree,
    XVineError,
)
from .families import (
    PAIR_BOXES,
    PAIR_KINDS,
    TAIL_BOXES,
    TAIL_KINDS,
    PairFamily,
    TailFamily,
    pair_h,
    pair_log_density,
    tail_h,
    tail_log_density,
)
from .model import XVineSpec
from .numerics import _TRANSFORMS, ScalarProblem, minimize_scalar
from .vines import VineSequence

DEFAULT_TAIL_CATALOGUE = TAIL_KINDS
DEFAULT_PAIR_CATALOGUE = PAIR_KINDS


# ---------------------------------------------------------------------------
# pseudo-samples

@dataclass(frozen=True)
class PseudoSample:
    """Observations on the inverted-Pareto scale plus exceedance bookkeeping."""

    z: np.ndarray
    k: float
    n: int
    exceed: np.ndarray

    def __post_init__(self) -> None:
        if self.z.ndim != 2 or self.z.shape != self.exceed.shape:
            raise DomainError("pseudo-sample arrays must be matching 2-d arrays")
        if self.n != self.z.shape[0]:
            raise DomainError("row count mismatch in pseudo-sample")
        if not 0 < self.k:
            raise DomainError("effective sample size k must be positive")

    @property
    def d(self) -> int:
        return self.z.shape[1]


def rank_transform(data: np.ndarray, k: int) -> PseudoSample:
    """Turn raw observations into inverted-Pareto pseudo-observations.

    Column ``j`` is mapped through its maximal ranks to
    ``(n / k) * (1 - (rnk - 0.5) / n)``, so values below 1 flag the ``k``
    largest observations of that column.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise DomainError("data must be a 2-d array")
    n, d = X.shape
    if n < 2 or d < 2:
        raise DomainError("need at least two rows and two columns")
    if not np.isfinite(X).all():
        raise DomainError("data contains non-finite entries")
    if not 0 < k < n:
        raise DomainError(f"k must lie strictly between 0 and n={n}")
    for j in range(d):
        if np.all(X[:, j] == X[0, j]):
            raise DegenerateColumn(f"column {j + 1} is constant")
    rnk = stats.rankdata(X, method="max", axis=0)
    u_hat = 1.0 - (rnk - 0.5) / n
    z = u_hat * (n / float(k))
    return PseudoSample(z=z, k=float(k), n=n, exceed=z < 1.0)


def from_inverted_pareto(data: np.ndarray) -> PseudoSample:
    """Wrap samples already on the inverted-Pareto scale; k is the mean exceedance count."""
    Z = np.asarray(data, dtype=float)
    if Z.ndim != 2:
        raise DomainError("data must be a 2-d array")
    n, d = Z.shape
    if n < 2 or d < 2:
        raise DomainError("need at least two rows and two columns")
    if not np.isfinite(Z).all() or (Z <= 0).any():
        raise DomainError("inverted-Pareto data must be strictly positive and finite")
    exceed = Z < 1.0
    k = float(exceed.sum(axis=0).mean())
    if k < 1.0:
        raise InsufficientData("fewer than one exceedance per column on average")
    return PseudoSample(z=Z.copy(), k=k, n=n, exceed=exceed)


def _check_indices(ps: PseudoSample, idx: Sequence[int], m: int) -> tuple[int, ...]:
    out = tuple(int(i) for i in idx)
    if len(out) != m or len(set(out)) != m:
        raise DomainError(f"expected {m} distinct indices, got {idx!r}")
    if any(not 1 <= i <= ps.d for i in out):
        raise DomainError(f"indices out of range 1..{ps.d}: {idx!r}")
    return out


def empirical_chi(ps: PseudoSample, idx: Sequence[int]) -> float:
    """Empirical tail dependence of two or more coordinates: joint exceedances over k."""
    out = _check_indices(ps, idx, len(idx))
    if len(out) < 2:
        raise DomainError("need at least two indices")
    mask = np.logical_and.reduce([ps.exceed[:, i - 1] for i in out])
    return float(mask.sum()) / ps.k


def empirical_tau(u: np.ndarray, v: np.ndarray) -> float:
    """Sample Kendall's tau; degenerate inputs give 0."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.size != v.size:
        raise DomainError("mismatched sample sizes")
    if u.size < 2:
        return 0.0
    t = stats.kendalltau(u, v).statistic
    return float(t) if np.isfinite(t) else 0.0


# ---------------------------------------------------------------------------
# single-edge fits

@dataclass(frozen=True)
class EdgeFit:
    """Outcome of fitting one parametric family on one edge."""

    family: TailFamily | PairFamily
    loglik: float
    aic: float
    n_eff: int
    at_boundary: bool = False
    forced_indep: bool = False
    selected_over: tuple[tuple[str, float], ...] = ()


def _maximize(kind: str, box: tuple, make_loglik: Callable[[float], float]) -> tuple[float, float, bool]:
    lo, hi, transform = box

    def objective(theta: float) -> float:
        val = make_loglik(theta)
        return -val if math.isfinite(val) else 1e300

    theta, neg = minimize_scalar(ScalarProblem(objective, (lo, hi), transform), tol=1e-7)
    fwd = _TRANSFORMS[transform][0]
    t, tlo, thi = fwd(theta), fwd(lo), fwd(hi)
    margin = 1e-3 * (thi - tlo)
    boundary = bool((t - tlo) < margin or (thi - t) < margin)
    return theta, -neg, boundary


def fit_tail_edge(
    ps: PseudoSample,
    a: int,
    b: int,
    kind: str,
    *,
    n_min: int = 10,
    aic_convention: str = "paper",
) -> EdgeFit:
    """Censored-likelihood fit of a tail family on a first-tree edge.

    Maximizes the likelihood twice, once over each coordinate's exceedance
    rows, and averages the two estimates.  The reported AIC follows either
    the half-sum convention (``"paper"``) or ``2 - (l_a + l_b)`` (``"standard"``).
    """
    a, b = _check_indices(ps, (a, b), 2)
    if kind not in TAIL_BOXES:
        raise DomainError(f"unknown tail family {kind!r}")
    if aic_convention not in ("paper", "standard"):
        raise DomainError(f"unknown AIC convention {aic_convention!r}")
    mask_a = ps.exceed[:, a - 1]
    mask_b = ps.exceed[:, b - 1]
    if mask_a.sum() < n_min or mask_b.sum() < n_min:
        raise InsufficientData(
            f"edge ({a},{b}): need at least {n_min} exceedances on each side"
        )
    thetas, logls, flags = [], [], []
    for mask in (mask_a, mask_b):
        za = ps.z[mask, a - 1]
        zb = ps.z[mask, b - 1]

        def loglik(theta: float, za=za, zb=zb) -> float:
            vals = tail_log_density(TailFamily(kind, theta), za, zb)
            return float(np.sum(vals))

        theta, ll, flag = _maximize(kind, TAIL_BOXES[kind], loglik)
        thetas.append(theta)
        logls.append(ll)
        flags.append(flag)
    theta_hat = 0.5 * (thetas[0] + thetas[1])
    half_sum = 0.5 * (logls[0] + logls[1])
    aic = 2.0 - half_sum if aic_convention == "paper" else 2.0 - (logls[0] + logls[1])
    n_eff = int((mask_a | mask_b).sum())
    return EdgeFit(
        family=TailFamily(kind, theta_hat),
        loglik=half_sum,
        aic=aic,
        n_eff=n_eff,
        at_boundary=any(flags),
    )


def fit_pair_edge(u: np.ndarray, v: np.ndarray, kind: str, *, n_min: int = 10) -> EdgeFit:
    """Maximum pseudo-likelihood fit of a pair-copula family."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.size != v.size:
        raise DomainError("mismatched sample sizes")
    n = int(u.size)
    if kind == "indep":
        return EdgeFit(family=PairFamily("indep"), loglik=0.0, aic=0.0, n_eff=n)
    if kind not in PAIR_BOXES:
        raise DomainError(f"unknown pair family {kind!r}")
    if n < n_min:
        raise InsufficientData(f"need at least {n_min} rows, got {n}")

    def loglik(theta: float) -> float:
        vals = pair_log_density(PairFamily(kind, theta), u, v)
        return float(np.sum(vals))

    theta, ll, flag = _maximize(kind, PAIR_BOXES[kind], loglik)
    return EdgeFit(
        family=PairFamily(kind, theta),
        loglik=ll,
        aic=2.0 - 2.0 * ll,
        n_eff=n,
        at_boundary=flag,
    )


def select_tail_family(
    ps: PseudoSample,
    a: int,
    b: int,
    catalogue: Sequence[str] = DEFAULT_TAIL_CATALOGUE,
    *,
    n_min: int = 10,
    aic_convention: str = "paper",
) -> EdgeFit:
    """Fit every tail family in the catalogue and keep the lowest AIC."""
    if not catalogue:
        raise DomainError("empty tail catalogue")
    fits = [
        fit_tail_edge(ps, a, b, kind, n_min=n_min, aic_convention=aic_convention)
        for kind in catalogue
    ]
    best = min(range(len(fits)), key=lambda i: fits[i].aic)
    table = tuple((catalogue[i], fits[i].aic) for i in range(len(fits)))
    f = fits[best]
    return EdgeFit(
        family=f.family,
        loglik=f.loglik,
        aic=f.aic,
        n_eff=f.n_eff,
        at_boundary=f.at_boundary,
        selected_over=table,
    )


def select_pair_family(
    u: np.ndarray,
    v: np.ndarray,
    catalogue: Sequence[str] = DEFAULT_PAIR_CATALOGUE,
    *,
    tau_min: float = 0.05,
    n_min: int = 10,
) -> EdgeFit:
    """AIC-based pair-family selection with an independence shortcut.

    Edges whose sample is too small or whose Kendall's tau is below
    ``tau_min`` in absolute value are forced to the independence copula
    without trying the rest of the catalogue.
    """
    if not catalogue:
        raise DomainError("empty pair catalogue")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = int(u.size)
    if n < n_min or abs(empirical_tau(u, v)) < tau_min:
        return EdgeFit(
            family=PairFamily("indep"), loglik=0.0, aic=0.0, n_eff=n, forced_indep=True
        )
    fits = [fit_pair_edge(u, v, kind, n_min=n_min) for kind in catalogue]
    best = min(range(len(fits)), key=lambda i: fits[i].aic)
    table = tuple((catalogue[i], fits[i].aic) for i in range(len(fits)))
    f = fits[best]
    return EdgeFit(
        family=f.family,
        loglik=f.loglik,
        aic=f.aic,
        n_eff=f.n_eff,
        at_boundary=f.at_boundary,
        selected_over=table,
    )


# ---------------------------------------------------------------------------
# maximum spanning trees

def _kruskal(nodes: Sequence, weighted: Sequence[tuple[float, tuple, object]]) -> list:
    """Maximum spanning tree by Kruskal with deterministic tie-breaking."""
    parent = {node: node for node in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for _w, _key, payload in sorted(weighted, key=lambda t: (-t[0], t[1])):
        ra, rb = find(payload.link[0]), find(payload.link[1])
        if ra == rb:
            continue
        parent[ra] = rb
        chosen.append(payload)
        if len(chosen) == len(nodes) - 1:
            break
    if len(chosen) != len(nodes) - 1:
        raise NotATree("candidate graph is not connected")
    return chosen


# ---------------------------------------------------------------------------
# sequential pipeline

@dataclass(frozen=True)
class FitOptions:
    """Knobs for the full fitting pipeline."""

    input_kind: str = "raw"
    structure: VineSequence | None = None
    truncation: int | str = "auto"
    tail_catalogue: tuple[str, ...] = DEFAULT_TAIL_CATALOGUE
    pair_catalogue: tuple[str, ...] = DEFAULT_PAIR_CATALOGUE
    tail_families: Mapping[tuple, str] = field(default_factory=dict)
    pair_families: Mapping[tuple, str] = field(default_factory=dict)
    psi0: float = 0.9
    tau_min: float = 0.05
    n_min: int = 10
    aic_convention: str = "paper"
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.input_kind not in ("raw", "inverted-pareto"):
            raise DomainError(f"unknown input kind {self.input_kind!r}")
        if isinstance(self.truncation, str):
            if self.truncation not in ("auto", "mbic"):
                raise DomainError(f"unknown truncation mode {self.truncation!r}")
        elif not isinstance(self.truncation, int):
            raise DomainError("truncation must be an int, 'auto' or 'mbic'")
        if not 0.0 < self.psi0 < 1.0:
            raise DomainError("psi0 must lie in (0, 1)")
        if self.aic_convention not in ("paper", "standard"):
            raise DomainError(f"unknown AIC convention {self.aic_convention!r}")


def _edge_key(a: int, b: int, cond: frozenset) -> tuple:
    lo, hi = (a, b) if a < b else (b, a)
    return (lo, hi, tuple(sorted(cond)))


@dataclass
class _EdgeState:
    """One fitted edge carried through the sequential pipeline."""

    a: int
    b: int
    cond: frozenset
    raw: frozenset
    union: frozenset
    level: int
    fit: EdgeFit
    u_a: np.ndarray
    u_b: np.ndarray

    @property
    def key(self) -> tuple:
        return _edge_key(self.a, self.b, self.cond)


@dataclass(frozen=True)
class _Slot:
    """A position in the tree sequence waiting to be fitted."""

    a: int
    b: int
    cond: frozenset
    raw: frozenset
    sa: _EdgeState | None
    sb: _EdgeState | None

    @property
    def link(self) -> tuple:
        return (self.sa.raw, self.sb.raw) if self.sa is not None else (self.a, self.b)


@dataclass(frozen=True)
class FitReport:
    """Fitted model plus per-edge diagnostics and the truncation trace."""

    spec: XVineSpec
    edges: tuple[dict, ...]
    k: float
    n: int
    mbic: tuple[float, ...] = ()
    q_star: int | None = None
    errors: tuple[str, ...] = ()

    def to_json(self) -> dict:
        from .model import model_to_json

        out = model_to_json(self.spec)
        out["edges"] = [dict(rec) for rec in self.edges]
        out["k"] = self.k
        out["n"] = self.n
        if self.mbic:
            out["mbic"] = list(self.mbic)
        if self.q_star is not None:
            out["q_star"] = self.q_star
        if self.errors:
            out["errors"] = list(self.errors)
        return out


def mbic_curve(records: Sequence[Sequence[dict]], psi0: float = 0.9) -> list[float]:
    """Truncation criterion per level; entry ``q-1`` scores truncating after tree q."""
    if not 0.0 < psi0 < 1.0:
        raise DomainError("psi0 must lie in (0, 1)")
    out = [0.0]
    acc = 0.0
    for j in range(2, len(records) + 1):
        psi = psi0 ** (j - 1)
        for rec in records[j - 1]:
            if rec["family"] != "indep":
                acc += math.log(rec["n_eff"]) - 2.0 * math.log(psi / (1.0 - psi))
            acc -= 2.0 * rec["loglik"] + 2.0 * math.log(1.0 - psi)
        out.append(acc)
    return out


def _fit_one_tail(ps, slot, opts) -> tuple[EdgeFit, np.ndarray, np.ndarray]:
    fixed = opts.tail_families.get(_edge_key(slot.a, slot.b, slot.cond))
    if fixed is not None:
        fit = fit_tail_edge(
            ps, slot.a, slot.b, fixed, n_min=opts.n_min, aic_convention=opts.aic_convention
        )
    else:
        fit = select_tail_family(
            ps,
            slot.a,
            slot.b,
            opts.tail_catalogue,
            n_min=opts.n_min,
            aic_convention=opts.aic_convention,
        )
    za = ps.z[:, slot.a - 1]
    zb = ps.z[:, slot.b - 1]
    u_a = tail_h(fit.family, za, zb)
    u_b = tail_h(fit.family, zb, za)
    return fit, u_a, u_b


def _fit_one_pair(ps, slot, mask, opts) -> tuple[EdgeFit, np.ndarray, np.ndarray]:
    side_a = slot.sa.u_a if slot.sa.a == slot.a else slot.sa.u_b
    side_b = slot.sb.u_a if slot.sb.a == slot.b else slot.sb.u_b
    fixed = opts.pair_families.get(_edge_key(slot.a, slot.b, slot.cond))
    if fixed is not None:
        fit = fit_pair_edge(side_a[mask], side_b[mask], fixed, n_min=opts.n_min)
    else:
        fit = select_pair_family(
            side_a[mask],
            side_b[mask],
            opts.pair_catalogue,
            tau_min=opts.tau_min,
            n_min=opts.n_min,
        )
    u_a = pair_h(fit.family, side_a, side_b)
    u_b = pair_h(fit.family, side_b, side_a)
    return fit, u_a, u_b


def _record(state: _EdgeState) -> dict:
    fam = state.fit.family
    return {
        "a": state.a,
        "b": state.b,
        "cond": sorted(state.cond),
        "level": state.level,
        "family": fam.kind,
        "theta": fam.theta,
        "loglik": state.fit.loglik,
        "aic": state.fit.aic,
        "n_eff": state.fit.n_eff,
        "at_boundary": state.fit.at_boundary,
        "forced_indep": state.fit.forced_indep,
        "selected_over": [[kind, aic] for kind, aic in state.fit.selected_over],
    }


def fit_pipeline(data: np.ndarray, k: int | None = None, options: FitOptions | None = None) -> FitReport:
    """Fit an X-vine model tree by tree.

    The first tree carries tail families fitted on marginal exceedances;
    deeper trees carry pair copulas fitted on conditional pseudo-observations
    restricted to joint exceedances of the conditioning variables.  Without a
    given structure, trees are maximum spanning trees under empirical chi
    (first tree) or absolute Kendall's tau (deeper trees).
    """
    opts = options or FitOptions()
    if opts.input_kind == "raw":
        if k is None:
            raise DomainError("k is required for raw input")
        ps = rank_transform(data, k)
    else:
        ps = from_inverted_pareto(data)
    d = ps.d
    if opts.structure is not None and opts.structure.d != d:
        raise DomainError(
            f"structure has {opts.structure.d} variables but data has {d} columns"
        )

    q_cap = d - 1 if opts.structure is None else opts.structure.q
    if isinstance(opts.truncation, int):
        if not 1 <= opts.truncation <= d - 1:
            raise InfeasibleLevel(f"truncation level {opts.truncation} not in 1..{d - 1}")
        if opts.truncation > q_cap:
            raise InfeasibleLevel(
                f"truncation level {opts.truncation} exceeds structure depth {q_cap}"
            )
        q_fit = opts.truncation
    else:
        q_fit = q_cap

    n_threads = opts.threads if opts.threads is not None else 1
    errors: list[str] = []
    levels: list[list[_EdgeState]] = []

    def run_fits(worker, slots):
        if n_threads > 1 and len(slots) > 1:
            with ThreadPoolExecutor(max_workers=n_threads) as pool:
                return list(pool.map(worker, slots))
        return [worker(slot) for slot in slots]

    # --- first tree -------------------------------------------------------
    if opts.structure is not None:
        slots1 = [
            _Slot(e.a, e.b, frozenset(), frozenset({e.a, e.b}), None, None)
            for e in opts.structure.level_edges(1)
        ]
    else:
        weighted = []
        for a, b in combinations(range(1, d + 1), 2):
            slot = _Slot(a, b, frozenset(), frozenset({a, b}), None, None)
            weighted.append((empirical_chi(ps, (a, b)), (a, b), slot))
        slots1 = _kruskal(list(range(1, d + 1)), weighted)

    def tail_worker(slot):
        fit, u_a, u_b = _fit_one_tail(ps, slot, opts)
        return _EdgeState(
            a=slot.a,
            b=slot.b,
            cond=frozenset(),
            raw=slot.raw,
            union=frozenset({slot.a, slot.b}),
            level=1,
            fit=fit,
            u_a=u_a,
            u_b=u_b,
        )

    levels.append(run_fits(tail_worker, slots1))

    # --- deeper trees -----------------------------------------------------
    for level in range(2, q_fit + 1):
        prev = levels[-1]
        if opts.structure is not None:
            by_key = {s.key: s for s in prev}
            slots = []
            for e in opts.structure.level_edges(level):
                ca, cb = e.child_a, e.child_b
                sa = by_key[_edge_key(ca.a, ca.b, ca.cond)]
                sb = by_key[_edge_key(cb.a, cb.b, cb.cond)]
                slots.append(_Slot(e.a, e.b, e.cond, frozenset({sa.raw, sb.raw}), sa, sb))
        else:
            weighted = []
            for s, t in combinations(prev, 2):
                if len(s.raw & t.raw) != 1:
                    continue
                cond = s.union & t.union
                pair = sorted((s.union | t.union) - cond)
                a, b = pair
                sa, sb = (s, t) if a in s.union else (t, s)
                mask = np.logical_and.reduce(
                    [ps.exceed[:, j - 1] for j in sorted(cond)]
                )
                side_a = sa.u_a if sa.a == a else sa.u_b
                side_b = sb.u_a if sb.a == b else sb.u_b
                w = (
                    abs(empirical_tau(side_a[mask], side_b[mask]))
                    if int(mask.sum()) >= 2
                    else 0.0
                )
                slot = _Slot(a, b, cond, frozenset({s.raw, t.raw}), sa, sb)
                weighted.append((w, _edge_key(a, b, cond), slot))
            slots = _kruskal([s.raw for s in prev], weighted)

        def pair_worker(slot, level=level):
            mask = np.logical_and.reduce(
                [ps.exceed[:, j - 1] for j in sorted(slot.cond)]
            )
            try:
                fit, u_a, u_b = _fit_one_pair(ps, slot, mask, opts)
            except XVineError as exc:
                errors.append(
                    f"edge ({slot.a},{slot.b};{','.join(map(str, sorted(slot.cond)))}): {exc}"
                )
                fit = EdgeFit(
                    family=PairFamily("indep"),
                    loglik=0.0,
                    aic=0.0,
                    n_eff=int(mask.sum()),
                    forced_indep=True,
                )
                side_a = slot.sa.u_a if slot.sa.a == slot.a else slot.sa.u_b
                side_b = slot.sb.u_a if slot.sb.a == slot.b else slot.sb.u_b
                u_a, u_b = side_a, side_b
            return _EdgeState(
                a=slot.a,
                b=slot.b,
                cond=slot.cond,
                raw=slot.raw,
                union=frozenset(slot.cond | {slot.a, slot.b}),
                level=level,
                fit=fit,
                u_a=u_a,
                u_b=u_b,
            )

        levels.append(run_fits(pair_worker, slots))

    # --- truncation -------------------------------------------------------
    records = [[_record(s) for s in lvl] for lvl in levels]
    mbic_list: tuple[float, ...] = ()
    q_star: int | None = None
    if opts.truncation == "mbic":
        curve = mbic_curve(records, opts.psi0)
        mbic_list = tuple(curve)
        q_star = 1 + int(np.argmin(curve))
        q_emit = q_star
    else:
        q_emit = q_fit

    trees = [[s.raw for s in lvl] for lvl in levels[:q_emit]]
    vine = VineSequence(trees, d=d)
    tail = {}
    pairs = {}
    kept: list[dict] = []
    for lvl in levels[:q_emit]:
        for s in lvl:
            edge = vine.find_edge((s.a, s.b, s.cond))
            if s.level == 1:
                tail[edge] = s.fit.family
            else:
                pairs[edge] = s.fit.family
            kept.append(_record(s))
    spec = XVineSpec(vine, tail, pairs)
    return FitReport(
        spec=spec,
        edges=tuple(kept),
        k=ps.k,
        n=ps.n,
        mbic=mbic_list,
        q_star=q_star,
        errors=tuple(errors),
    )
