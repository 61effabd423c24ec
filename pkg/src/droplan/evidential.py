"""Normal-Inverse-Gamma (NIG) handling: joint density over (mean, variance),
highest-density-region thresholds, contour extrema, standardization, and the
precomputed per-alpha lookup table of standardized extrema.

The NIG here is the joint law of a Gaussian's parameters,

    (mu, var) ~ NIG(gamma, lam, alpha, beta):
        var ~ InvGamma(alpha, beta),  mu | var ~ N(gamma, var / lam),

the output format of an evidential regression head.  The highest-density
region at confidence eta is the superlevel set {(mu, var): density >= c_th}
whose probability mass equals eta; its axis-aligned bounding rectangle
[mu_min, mu_max] x [var_min, var_max] is the surrogate set consumed by the
worst-case CVaR bounds.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import DomainError, DroplanError, NumericalFailure, TableRangeError, TableVersionError

__all__ = [
    "NIGParams",
    "Confidence",
    "SurrogateSet",
    "StandardizeTransform",
    "LookupRow",
    "LookupTable",
    "TABLE_SCHEMA_VERSION",
    "ALPHA_RANGE",
    "nig_density",
    "nig_mode",
    "hdr_mass",
    "hdr_threshold",
    "contour_extrema",
    "trace_contour",
    "standardize",
    "default_alpha_grid",
    "build_lookup",
    "surrogate_from_params",
    "save_table",
    "load_table",
    "table_to_dict",
    "table_from_dict",
]

TABLE_SCHEMA_VERSION = 1
# alpha range the offline table covers
ALPHA_RANGE = (1.01, 10.0)

_BRENTQ_RTOL = 4.0 * np.finfo(float).eps


@dataclass(frozen=True)
class NIGParams:
    """NIG parameters for one coordinate axis.

    gamma: location (position unit); lam: evidence weight (> 0);
    alpha: inverse-gamma shape (> 1); beta: inverse-gamma scale (> 0).
    """

    gamma: float
    lam: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.lam > 0.0):
            raise DomainError(f"lam must be > 0, got {self.lam}")
        if not (self.alpha > 1.0):
            raise DomainError(f"alpha must be > 1, got {self.alpha}")
        if not (self.beta > 0.0):
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if not math.isfinite(self.gamma):
            raise DomainError(f"gamma must be finite, got {self.gamma}")


@dataclass(frozen=True)
class Confidence:
    """Highest-density-region confidence eta in (0, 1)."""

    eta: float

    def __post_init__(self):
        if not (0.0 < self.eta < 1.0):
            raise DomainError(f"eta must lie in (0, 1), got {self.eta}")


@dataclass(frozen=True)
class SurrogateSet:
    """Per-axis rectangle [mu_min, mu_max] x [var_min, var_max] bounding the
    HDR contour, plus the generating NIG location gamma (= interval center)."""

    mu_min: float
    mu_max: float
    var_min: float
    var_max: float
    gamma: float

    def __post_init__(self):
        if not (self.mu_min < self.mu_max):
            raise DomainError(f"mu interval degenerate: [{self.mu_min}, {self.mu_max}]")
        if not (0.0 < self.var_min < self.var_max):
            raise DomainError(f"var interval invalid: [{self.var_min}, {self.var_max}]")
        resid = abs(self.mu_min + self.mu_max - 2.0 * self.gamma)
        scale = max(1.0, abs(2.0 * self.gamma), self.mu_max - self.mu_min)
        if resid > 1e-9 * scale:
            raise DomainError(
                f"mu interval not symmetric about gamma={self.gamma}: "
                f"[{self.mu_min}, {self.mu_max}]"
            )

    @property
    def mu_halfwidth(self) -> float:
        return 0.5 * (self.mu_max - self.mu_min)


def _log_density(p: NIGParams, mu, var):
    """Log joint density log NIG(mu, var | p); broadcasts over numpy inputs."""
    var = np.asarray(var, dtype=float)
    mu = np.asarray(mu, dtype=float)
    log_norm = 0.5 * (np.log(p.lam) - np.log(2.0 * np.pi) - np.log(var)) - (
        0.5 * p.lam * (mu - p.gamma) ** 2 / var
    )
    log_ig = p.alpha * math.log(p.beta) - gammaln(p.alpha) - (p.alpha + 1.0) * np.log(var) - p.beta / var
    return log_norm + log_ig


def nig_density(p: NIGParams, mu, var):
    """Joint NIG density N(mu | gamma, var/lam) * InvGamma(var | alpha, beta).

    Accepts scalars or broadcastable arrays; var must be positive.
    """
    var_arr = np.asarray(var, dtype=float)
    if np.any(var_arr <= 0.0):
        raise DomainError("var must be positive")
    out = np.exp(_log_density(p, mu, var_arr))
    return float(out) if np.isscalar(var) and np.isscalar(mu) else out


def nig_mode(p: NIGParams) -> tuple[float, float]:
    """Joint-density mode (gamma, 2*beta / (2*alpha + 3)); lam-independent."""
    return (p.gamma, 2.0 * p.beta / (2.0 * p.alpha + 3.0))


def _log_peak(p: NIGParams, y):
    """log density(gamma, y): the density profile along the symmetry axis."""
    y = np.asarray(y, dtype=float)
    const = 0.5 * (math.log(p.lam) - math.log(2.0 * math.pi)) + p.alpha * math.log(p.beta) - gammaln(p.alpha)
    return const - (p.alpha + 1.5) * np.log(y) - p.beta / y


def _var_roots(p: NIGParams, c: float) -> tuple[float, float]:
    """The two variances with density(gamma, y) = c, bracketing the mode variance."""
    y_mode = nig_mode(p)[1]
    log_c = math.log(c)

    def g(y: float) -> float:
        return float(_log_peak(p, y)) - log_c

    if g(y_mode) <= 0.0:
        raise DomainError("threshold c is not below the mode density")

    y_lo = 0.5 * y_mode
    tries = 0
    while g(y_lo) > 0.0:
        y_lo *= 0.5
        tries += 1
        if tries > 1000:
            raise NumericalFailure(f"no lower variance bracket for c={c}")
    lo = float(brentq(g, y_lo, y_mode, xtol=1e-300, rtol=_BRENTQ_RTOL))

    y_hi = 2.0 * y_mode
    tries = 0
    while g(y_hi) > 0.0:
        y_hi *= 2.0
        tries += 1
        if tries > 1000:
            raise NumericalFailure(f"no upper variance bracket for c={c}")
    hi = float(brentq(g, y_mode, y_hi, xtol=1e-300, rtol=_BRENTQ_RTOL))
    return lo, hi


def _stationary_var(p: NIGParams, x) -> np.ndarray:
    """Variance maximizing the density at horizontal offset x: the curve on
    which dx/dy = 0, y(x) = (2*beta + lam*(x-gamma)^2) / (2*alpha + 3)."""
    x = np.asarray(x, dtype=float)
    return (2.0 * p.beta + p.lam * (x - p.gamma) ** 2) / (2.0 * p.alpha + 3.0)


def _x_profile_log(p: NIGParams, x):
    """log of max_var density(x, var) = log density(x, stationary_var(x))."""
    return _log_density(p, x, _stationary_var(p, x))


def hdr_mass(p: NIGParams, c: float, tol: float) -> float:
    """P[density(mu, var) >= c] for (mu, var) ~ NIG, to absolute error <= tol.

    The mu-integral is done analytically per variance slice (the superlevel
    slice is the interval gamma +/- w(var)), leaving a 1-D adaptive quadrature
    over var between the two variance roots of density(gamma, var) = c.
    """
    if not (0.0 < tol <= 1e-2):
        raise DomainError(f"tol must lie in (0, 1e-2], got {tol}")
    if c < 0.0:
        raise DomainError(f"threshold c must be >= 0, got {c}")
    if c == 0.0:
        return 1.0
    mode_density = float(np.exp(_log_peak(p, nig_mode(p)[1])))
    if c >= mode_density:
        return 0.0

    y1, y2 = _var_roots(p, c)
    log_c = math.log(c)
    log_ig_const = p.alpha * math.log(p.beta) - gammaln(p.alpha)
    lam = p.lam
    alpha1 = p.alpha + 1.0
    beta = p.beta
    half_log = 0.5 * (math.log(lam) - math.log(2.0 * math.pi))

    def integrand(y: float) -> float:
        # width of the slice in standardized Gaussian units:
        # P(|mu - gamma| <= w | var = y) = erf(sqrt(log(peak(y) / c)))
        log_ratio = half_log + log_ig_const - (alpha1 + 0.5) * math.log(y) - beta / y - log_c
        if log_ratio <= 0.0:
            return 0.0
        inner = math.erf(math.sqrt(log_ratio))
        ig_pdf = math.exp(log_ig_const - alpha1 * math.log(y) - beta / y)
        return inner * ig_pdf

    y_mode = nig_mode(p)[1]
    pts = [y_mode] if y1 < y_mode < y2 else None
    val, abserr = quad(integrand, y1, y2, epsabs=0.25 * tol, epsrel=1e-10, limit=200, points=pts)
    if abserr > tol:
        raise NumericalFailure(
            f"HDR mass quadrature error {abserr:.2e} exceeds tol={tol} (c={c})"
        )
    return min(1.0, max(0.0, float(val)))


def hdr_threshold(p: NIGParams, eta: Confidence, tol: float) -> float:
    """Density threshold c_th with |P[density >= c_th] - eta| <= tol.

    Bisection in log-threshold space on the strictly decreasing map
    c -> mass(c), refined with false-position steps.
    """
    if not (0.0 < tol <= 1e-3):
        raise DomainError(f"tol must lie in (0, 1e-3], got {tol}")
    mode_density = float(np.exp(_log_peak(p, nig_mode(p)[1])))
    mass_tol = 0.25 * tol

    # mass ~ 1 at t_lo (excluded tail < 1e-10 even at alpha = 1.01) and ~ 0 at
    # t_hi; the endpoints are never evaluated, only used as the bracket.
    t_lo = math.log(mode_density) - 60.0
    t_hi = math.log(mode_density * (1.0 - 1e-12))
    m_lo, m_hi = 1.0, 0.0
    target = eta.eta

    use_bisect = True
    for _ in range(200):
        if use_bisect or not (m_lo > m_hi):
            t = 0.5 * (t_lo + t_hi)
        else:
            # false-position step on the bracket, clamped to its interior
            t = t_lo + (m_lo - target) * (t_hi - t_lo) / (m_lo - m_hi)
            span = t_hi - t_lo
            t = min(max(t, t_lo + 0.01 * span), t_hi - 0.01 * span)
        use_bisect = not use_bisect
        m = hdr_mass(p, math.exp(t), mass_tol)
        if abs(m - target) <= 0.5 * tol:
            return math.exp(t)
        if m > target:
            t_lo, m_lo = t, m
        else:
            t_hi, m_hi = t, m
    raise NumericalFailure(f"HDR threshold search did not converge for eta={target}")


def contour_extrema(p: NIGParams, c_th: float) -> SurrogateSet:
    """Axis-aligned extrema of the contour {density = c_th}.

    Variance extrema are the roots of density(gamma, var) = c_th around the
    mode variance; the mu extremum solves density(x, y(x)) = c_th along the
    stationarity curve y(x) where dx/dy = 0 (there the density over var is
    maximized, so this is the root of the x-profile).
    """
    mode_density = float(np.exp(_log_peak(p, nig_mode(p)[1])))
    if not (0.0 < c_th < mode_density):
        raise DomainError(
            f"c_th must lie in (0, mode density={mode_density}), got {c_th}"
        )
    var_min, var_max = _var_roots(p, c_th)

    log_c = math.log(c_th)

    def h(x: float) -> float:
        return float(_x_profile_log(p, x)) - log_c

    d = math.sqrt(p.beta / p.lam)
    tries = 0
    while h(p.gamma + d) > 0.0:
        d *= 2.0
        tries += 1
        if tries > 1000:
            raise NumericalFailure(f"no bracket for the mu extremum at c_th={c_th}")
    mu_max = float(brentq(h, p.gamma, p.gamma + d, xtol=1e-300, rtol=_BRENTQ_RTOL))

    s = SurrogateSet(
        mu_min=2.0 * p.gamma - mu_max,
        mu_max=mu_max,
        var_min=var_min,
        var_max=var_max,
        gamma=p.gamma,
    )
    _check_mode_inside(s, p)
    return s


def _check_mode_inside(s: SurrogateSet, p: NIGParams) -> None:
    y_mode = nig_mode(p)[1]
    if not (s.var_min < y_mode < s.var_max):
        raise DomainError(
            f"mode variance {y_mode} not inside [{s.var_min}, {s.var_max}]"
        )


def trace_contour(p: NIGParams, c_th: float, n: int = 2000) -> np.ndarray:
    """Points (mu, var) tracing the closed contour {density = c_th}.

    Sweeps the variance between the contour's variance roots and places the
    two symmetric mu solutions per slice; returns a closed polygon of shape
    (2n+1, 2) ordered around the contour.
    """
    y1, y2 = _var_roots(p, c_th)
    y = np.linspace(y1, y2, n)
    log_ratio = _log_peak(p, y) - math.log(c_th)
    w = np.sqrt(np.maximum(0.0, 2.0 * y / p.lam * log_ratio))
    right = np.column_stack([p.gamma + w, y])
    left = np.column_stack([p.gamma - w[::-1], y[::-1]])
    return np.vstack([right, left, right[:1]])


@dataclass(frozen=True)
class StandardizeTransform:
    """Affine maps between (mu, var) and standardized (u, v) coordinates.

    u = (mu - gamma) * sqrt(lam / beta), v = var / beta; under these maps the
    NIG becomes NIG(0, 1, alpha, 1), so contour shapes depend only on alpha.
    """

    gamma: float
    lam: float
    beta: float

    @property
    def u_scale(self) -> float:
        return math.sqrt(self.lam / self.beta)

    def to_std(self, mu: float, var: float) -> tuple[float, float]:
        return ((mu - self.gamma) * self.u_scale, var / self.beta)

    def from_std(self, u: float, v: float) -> tuple[float, float]:
        return (self.gamma + u / self.u_scale, v * self.beta)


def standardize(p: NIGParams) -> StandardizeTransform:
    """Transform descriptor standardizing p to NIG(0, 1, alpha, 1)."""
    return StandardizeTransform(gamma=p.gamma, lam=p.lam, beta=p.beta)


@dataclass(frozen=True)
class LookupRow:
    """Standardized contour extrema for one alpha."""

    alpha: float
    u_min: float
    u_max: float
    v_min: float
    v_max: float

    def __post_init__(self):
        if abs(self.u_min + self.u_max) > 1e-9:
            raise DomainError(f"row not symmetric: u_min={self.u_min}, u_max={self.u_max}")
        v_mode = 2.0 / (2.0 * self.alpha + 3.0)
        if not (0.0 < self.v_min < v_mode < self.v_max):
            raise DomainError(
                f"standardized mode variance {v_mode} not inside "
                f"[{self.v_min}, {self.v_max}] for alpha={self.alpha}"
            )


@dataclass(frozen=True)
class LookupTable:
    """Standardized contour-extrema table over an alpha grid, for one eta."""

    eta: float
    alpha_grid: tuple[float, ...]
    rows: tuple[LookupRow, ...]
    version: int = TABLE_SCHEMA_VERSION

    def __post_init__(self):
        if len(self.rows) != len(self.alpha_grid):
            raise DomainError("row count does not match alpha grid")
        if any(r.alpha != a for r, a in zip(self.rows, self.alpha_grid)):
            raise DomainError("row alphas disagree with the alpha grid")
        if list(self.alpha_grid) != sorted(self.alpha_grid):
            raise DomainError("alpha grid must be sorted ascending")


def default_alpha_grid(n: int = 128) -> np.ndarray:
    """Log-spaced alpha grid over the supported range [1.01, 10]."""
    return np.geomspace(ALPHA_RANGE[0], ALPHA_RANGE[1], n)


def _validate_alpha_grid(alpha_grid: Sequence[float]) -> list[float]:
    grid = [float(a) for a in alpha_grid]
    if len(grid) < 64:
        raise DomainError(f"alpha grid needs >= 64 points, got {len(grid)}")
    if grid != sorted(grid) or len(set(grid)) != len(grid):
        raise DomainError("alpha grid must be strictly increasing")
    slack = 1e-12
    if grid[0] < ALPHA_RANGE[0] - slack or grid[-1] > ALPHA_RANGE[1] + slack:
        raise DomainError(
            f"alpha grid must lie within [{ALPHA_RANGE[0]}, {ALPHA_RANGE[1]}]"
        )
    return grid


def build_lookup(eta: Confidence, alpha_grid: Sequence[float], tol: float = 1e-6) -> LookupTable:
    """Standardized extrema rows for every alpha on the grid.

    Each row solves the HDR threshold and contour extrema for
    NIG(0, 1, alpha, 1); u_min is pinned to -u_max (exact symmetry).
    Numerical failures are re-raised annotated with the failing alpha.
    """
    grid = _validate_alpha_grid(alpha_grid)
    rows = []
    for a in grid:
        try:
            p_std = NIGParams(gamma=0.0, lam=1.0, alpha=a, beta=1.0)
            c = hdr_threshold(p_std, eta, tol)
            s = contour_extrema(p_std, c)
            rows.append(
                LookupRow(alpha=a, u_min=-s.mu_max, u_max=s.mu_max, v_min=s.var_min, v_max=s.var_max)
            )
        except DroplanError as e:
            raise NumericalFailure(f"lookup-table row failed at alpha={a}: {e}") from e
    return LookupTable(eta=eta.eta, alpha_grid=tuple(grid), rows=tuple(rows))


def surrogate_from_params(
    p: NIGParams,
    eta: Confidence,
    table: Optional[LookupTable] = None,
    *,
    tol: float = 1e-6,
    allow_direct_fallback: bool = False,
) -> SurrogateSet:
    """Surrogate rectangle for p at confidence eta.

    With a table: interpolate the standardized extrema linearly in alpha
    between the bracketing grid points, then destandardize.  Without one (or
    with ``allow_direct_fallback`` when alpha is out of table range): solve
    the HDR threshold and contour extrema directly on p.
    """
    if table is None:
        return contour_extrema(p, hdr_threshold(p, eta, tol))

    if abs(table.eta - eta.eta) > 1e-12:
        raise DomainError(f"table eta={table.eta} does not match requested eta={eta.eta}")
    grid = table.alpha_grid
    a = p.alpha
    if a < grid[0] or a > grid[-1]:
        if allow_direct_fallback:
            return contour_extrema(p, hdr_threshold(p, eta, tol))
        raise TableRangeError(
            f"alpha={a} outside table range [{grid[0]}, {grid[-1]}]"
        )

    i = bisect_left(grid, a)
    if i < len(grid) and grid[i] == a:
        row = table.rows[i]
        u_max, v_min, v_max = row.u_max, row.v_min, row.v_max
    else:
        lo, hi = table.rows[i - 1], table.rows[i]
        w = (a - lo.alpha) / (hi.alpha - lo.alpha)
        u_max = (1.0 - w) * lo.u_max + w * hi.u_max
        v_min = (1.0 - w) * lo.v_min + w * hi.v_min
        v_max = (1.0 - w) * lo.v_max + w * hi.v_max

    tr = standardize(p)
    mu_max, var_max = tr.from_std(u_max, v_max)
    var_min = v_min * p.beta
    s = SurrogateSet(
        mu_min=2.0 * p.gamma - mu_max,
        mu_max=mu_max,
        var_min=var_min,
        var_max=var_max,
        gamma=p.gamma,
    )
    _check_mode_inside(s, p)
    return s


def table_to_dict(table: LookupTable) -> dict:
    return {
        "version": table.version,
        "eta": table.eta,
        "alpha_grid": list(table.alpha_grid),
        "rows": [
            {
                "alpha": r.alpha,
                "u_min": r.u_min,
                "u_max": r.u_max,
                "v_min": r.v_min,
                "v_max": r.v_max,
            }
            for r in table.rows
        ],
    }


def table_from_dict(doc: dict) -> LookupTable:
    version = doc.get("version")
    if version != TABLE_SCHEMA_VERSION:
        raise TableVersionError(
            f"unsupported table version {version!r}; expected {TABLE_SCHEMA_VERSION}"
        )
    rows = tuple(
        LookupRow(
            alpha=float(r["alpha"]),
            u_min=float(r["u_min"]),
            u_max=float(r["u_max"]),
            v_min=float(r["v_min"]),
            v_max=float(r["v_max"]),
        )
        for r in doc["rows"]
    )
    return LookupTable(
        eta=float(doc["eta"]),
        alpha_grid=tuple(float(a) for a in doc["alpha_grid"]),
        rows=rows,
        version=version,
    )


def save_table(table: LookupTable, path) -> None:
    """Write the table as versioned JSON; floats round-trip exactly."""
    Path(path).write_text(json.dumps(table_to_dict(table), indent=1) + "\n")


def load_table(path) -> LookupTable:
    """Load a table written by save_table; rejects schema-version mismatches."""
    return table_from_dict(json.loads(Path(path).read_text()))
