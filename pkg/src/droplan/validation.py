"""Oracle suites: numeric property checks backing the analytic machinery.

Each suite re-derives quantities through an independent route (Monte Carlo,
quadrature, finite differences, dense scans) and compares against the closed
forms and bounds.  The CLI ``validate`` subcommand runs these and reports one
line per check; the acceptance tests call them with pinned parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from . import evidential, risk, robust
from .errors import DomainError
from .evidential import Confidence, NIGParams
from .risk import GaussianScalar, RiskLevel

__all__ = [
    "CheckResult",
    "SuiteReport",
    "SUITE_NAMES",
    "suite_lemmas",
    "suite_proposition",
    "suite_contour",
    "suite_lookup",
    "run_suites",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail}"


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _check(name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


# ---------------------------------------------------------------------------
# independent oracles


def quad_cvar_neg_abs_sq(g: GaussianScalar, eps: RiskLevel) -> float:
    """Quadrature CVaR_eps[-|X|^2]: -E[X^2 : |X| <= -VaR_eps[-|X|]] / (1-eps)."""
    k = risk.var_neg_abs(g, eps)
    mu, sig = g.mu, g.sigma

    def integrand(s: float) -> float:
        z1 = (s - mu) / sig
        z2 = (s + mu) / sig
        dens = (math.exp(-0.5 * z1 * z1) + math.exp(-0.5 * z2 * z2)) / (
            sig * math.sqrt(2.0 * math.pi)
        )
        return s * s * dens

    val, _ = quad(integrand, 0.0, -k, epsabs=1e-12, epsrel=1e-12, limit=100)
    return -val / (1.0 - eps.epsilon)


def quad_half_normal_cvar_coeff(eps: RiskLevel) -> float:
    """kappa(eps) by quadrature: CVaR_eps[-|Z|] for Z ~ N(0,1)."""
    return risk.cvar_neg_abs(GaussianScalar(0.0, 1.0), eps)


def quad_upper_tail_mean(g: GaussianScalar, eps: RiskLevel) -> float:
    """E[X | X >= VaR_eps[X]] by quadrature of the truncated normal."""
    mu, sig = g.mu, g.sigma
    lo = -np.inf if eps.epsilon == 0.0 else risk.var_normal(g, eps)

    def integrand(x: float) -> float:
        z = (x - mu) / sig
        return x * math.exp(-0.5 * z * z) / (sig * math.sqrt(2.0 * math.pi))

    val, _ = quad(integrand, lo, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    return val / (1.0 - eps.epsilon)


def _nig_logdensity_oracle(p: NIGParams, mu, var):
    """Independent NIG log-density (written out, not shared with production)."""
    from scipy.special import gammaln

    mu = np.asarray(mu, float)
    var = np.asarray(var, float)
    ln = 0.5 * np.log(p.lam / (2.0 * np.pi * var)) - 0.5 * p.lam * (mu - p.gamma) ** 2 / var
    li = p.alpha * np.log(p.beta) - gammaln(p.alpha) - (p.alpha + 1.0) * np.log(var) - p.beta / var
    return ln + li


def trace_bbox_oracle(p: NIGParams, c_th: float, n_scan: int = 20000):
    """Bounding box of {density = c_th} by dense scanning plus local refinement.

    Variance extent: sign scan of the on-axis log density over a wide log
    grid, refined by plain bisection.  Mu extent: bounded maximization of the
    per-slice half width gamma + w(y).  Independent of the production
    root-finding path.
    """
    log_c = math.log(c_th)
    y_mode = 2.0 * p.beta / (2.0 * p.alpha + 3.0)

    def on_axis(y):
        return _nig_logdensity_oracle(p, p.gamma, y) - log_c

    ys = np.geomspace(y_mode * 1e-6, y_mode * 1e8, n_scan)
    vals = on_axis(ys)
    pos = vals > 0.0
    if not pos.any():
        raise DomainError("scan found no superlevel slice")
    i0, i1 = np.nonzero(pos)[0][[0, -1]]

    def bisect(lo, hi, want_rising):
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if (on_axis(mid) > 0.0) == want_rising:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    y_lo = bisect(ys[i0 - 1], ys[i0], want_rising=True)
    y_hi = bisect(ys[i1 + 1], ys[i1], want_rising=False)

    def neg_halfwidth(y):
        log_ratio = float(_nig_logdensity_oracle(p, p.gamma, y)) - log_c
        if log_ratio <= 0.0:
            return 0.0
        return -math.sqrt(2.0 * y / p.lam * log_ratio)

    res = minimize_scalar(neg_halfwidth, bounds=(y_lo, y_hi), method="bounded",
                          options={"xatol": 1e-14})
    w_max = -res.fun
    return p.gamma - w_max, p.gamma + w_max, y_lo, y_hi


def _rand_gaussian(rng) -> GaussianScalar:
    return GaussianScalar(mu=rng.uniform(-3.0, 3.0), sigma=rng.uniform(0.1, 3.0))


def _rand_eps(rng) -> RiskLevel:
    return RiskLevel(rng.uniform(0.05, 0.95))


# ---------------------------------------------------------------------------
# suites


def suite_lemmas(seed: int = 0, n: int = 200) -> SuiteReport:
    """VaR/CVaR property sweeps against Monte Carlo, quadrature, and finite
    differences."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    checks = []

    # VaR square identity, probability-space comparison
    n_mc = 200_000
    worst = 0.0
    ok = True
    for _ in range(n):
        g, eps = _rand_gaussian(rng), _rand_eps(rng)
        k = risk.var_neg_abs(g, eps)
        x = rng.normal(g.mu, g.sigma, n_mc)
        emp = float(np.mean(-(x**2) <= -(k**2)))
        se = math.sqrt(eps.epsilon * (1.0 - eps.epsilon) / n_mc)
        dev = abs(emp - eps.epsilon) / se
        worst = max(worst, dev)
        ok &= dev <= 4.0
    checks.append(_check("var-square-identity", ok, f"worst |emp-eps| = {worst:.2f} SE (<= 4)"))

    # VaR ordering
    ok = True
    for _ in range(n):
        g, eps = _rand_gaussian(rng), _rand_eps(rng)
        ok &= risk.var_normal(g, eps) > risk.var_neg_abs(g, eps)
    checks.append(_check("var-ordering", ok, "VaR[X] > VaR[-|X|] on all draws"))

    # derivative vs central finite differences
    worst = 0.0
    for _ in range(n):
        g, eps = _rand_gaussian(rng), _rand_eps(rng)
        h = 1e-5
        fd = (
            risk.var_neg_abs(GaussianScalar(g.mu + h, g.sigma), eps)
            - risk.var_neg_abs(GaussianScalar(g.mu - h, g.sigma), eps)
        ) / (2.0 * h)
        worst = max(worst, abs(fd - risk.var_deriv_wrt_mu(g, eps)))
    checks.append(_check("var-derivative", worst <= 1e-5, f"worst |fd - analytic| = {worst:.2e} (<= 1e-5)"))

    # CVaR square inequality by quadrature
    worst = math.inf
    for _ in range(n):
        g, eps = _rand_gaussian(rng), _rand_eps(rng)
        lhs = quad_cvar_neg_abs_sq(g, eps)
        rhs = -risk.cvar_neg_abs(g, eps) ** 2
        worst = min(worst, rhs - lhs)
    checks.append(_check("cvar-square-inequality", worst >= -1e-8, f"worst slack = {worst:.2e} (>= -1e-8)"))

    # main-text conversion lemma by Monte Carlo (upper-tail convention bridged
    # to this module's levels)
    n_mc = 100_000
    worst = math.inf
    ok = True
    for _ in range(n):
        g = _rand_gaussian(rng)
        e = rng.uniform(0.05, 0.95)
        x = rng.normal(g.mu, g.sigma, n_mc)
        lhs = risk.mc_cvar(lambda r, m: -(r.normal(g.mu, g.sigma, m) ** 2),
                           RiskLevel(1.0 - e), n_mc, seed=int(rng.integers(2**32)))
        rhs_est = risk.mc_cvar(lambda r, m: np.abs(r.normal(g.mu, g.sigma, m)),
                               RiskLevel(e), n_mc, seed=int(rng.integers(2**32)))
        slack = -rhs_est.value**2 - lhs.value
        tol = 3.0 * (lhs.stderr + 2.0 * abs(rhs_est.value) * rhs_est.stderr)
        ok &= slack >= -tol
        worst = min(worst, slack + tol)
    checks.append(_check("cvar-conversion-lemma", ok, f"worst slack+3SE = {worst:.2e} (>= 0)"))

    # CVaR monotonicity in |mu|
    ok = True
    for sig in (0.3, 1.0, 2.5):
        for e in (0.1, 0.5, 0.9):
            eps = RiskLevel(e)
            vals = [risk.cvar_neg_abs(GaussianScalar(m, sig), eps) for m in (0.0, 0.4, 0.9, 1.7, 3.0)]
            ok &= all(b < a for a, b in zip(vals, vals[1:]))
    checks.append(_check("cvar-monotone-in-abs-mu", ok, "strictly decreasing on mu grids"))

    # tail premium bound under its precondition
    worst = math.inf
    count = 0
    while count < n:
        g, eps = _rand_gaussian(rng), _rand_eps(rng)
        if g.mu == 0.0:
            continue
        v = risk.var_normal(g, eps)
        if not ((v > 0 and g.mu > 0) or (v < 0 and g.mu < 0)):
            continue
        count += 1
        worst = min(worst, (-abs(g.mu) + risk.delta(eps) * g.sigma) - risk.cvar_neg_abs(g, eps))
    checks.append(_check("tail-premium-bound", worst > 0.0, f"worst gap = {worst:.2e} (> 0)"))

    # kappa/delta sign, monotonicity, and continuity on an eps grid
    grid = np.linspace(0.0, 0.98, 50)
    kv = [risk.kappa(RiskLevel(float(e))) for e in grid]
    dv = [risk.delta(RiskLevel(float(e))) for e in grid]
    ok = all(k < 0 for k in kv) and all(d > 0 for d in dv[1:]) and dv[0] == 0.0
    ok &= all(b > a for a, b in zip(kv, kv[1:]))  # kappa increases toward 0
    ok &= all(b > a for a, b in zip(dv, dv[1:]))  # delta increases
    jumps = max(
        max(abs(b - a) for a, b in zip(kv, kv[1:])),
        max(abs(b - a) for a, b in zip(dv[:-5], dv[1:-4])),
    )
    checks.append(_check("kappa-delta-shape", ok and jumps < 1.0, f"signs/monotone ok, max step {jumps:.3f}"))

    # kappa closed form vs quadrature; delta vs truncated-normal quadrature
    worst_k = worst_d = 0.0
    for e in (0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95):
        eps = RiskLevel(e)
        worst_k = max(worst_k, abs(risk.kappa(eps) - quad_half_normal_cvar_coeff(eps)))
        g = GaussianScalar(0.7, 1.3)
        worst_d = max(
            worst_d,
            abs((g.mu + risk.delta(eps) * g.sigma) - quad_upper_tail_mean(g, eps)),
        )
    checks.append(_check("kappa-quadrature", worst_k <= 1e-8, f"worst |diff| = {worst_k:.2e}"))
    checks.append(_check("delta-quadrature", worst_d <= 1e-8, f"worst |diff| = {worst_d:.2e}"))

    # tail-convention bridge: P[Y >= VaR_{1-eps}[Y]] = eps by Monte Carlo
    ok = True
    worst = 0.0
    for _ in range(min(n, 50)):
        g = _rand_gaussian(rng)
        e = rng.uniform(0.05, 0.95)
        v = risk.var_normal(g, RiskLevel(1.0 - e))
        x = rng.normal(g.mu, g.sigma, n_mc)
        emp = float(np.mean(x >= v))
        se = math.sqrt(e * (1.0 - e) / n_mc)
        dev = abs(emp - e) / se
        worst = max(worst, dev)
        ok &= dev <= 4.0
    checks.append(_check("tail-convention-bridge", ok, f"worst |emp-eps| = {worst:.2f} SE (<= 4)"))

    return SuiteReport(suite="lemmas", checks=tuple(checks))


def _rand_surrogate(rng) -> evidential.SurrogateSet:
    gamma = rng.uniform(-3.0, 3.0)
    half = rng.uniform(0.2, 2.0)
    var_min = rng.uniform(0.05, 0.5)
    var_max = var_min * (1.0 + rng.uniform(0.5, 4.0))
    return evidential.SurrogateSet(
        mu_min=gamma - half, mu_max=gamma + half, var_min=var_min, var_max=var_max, gamma=gamma
    )


def suite_proposition(seed: int = 0, n: int = 200) -> SuiteReport:
    """Conservativeness and case structure of the per-axis worst-case bound."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 202]))
    checks = []

    worst_margin = math.inf
    worst_inmu = 0.0
    all_negative = True
    partition_ok = True
    for _ in range(n):
        s = _rand_surrogate(rng)
        eps = _rand_eps(rng)
        c = s.gamma + rng.uniform(-6.0, 6.0)
        bound = robust.axis_worst_cvar_bound(c, s, eps)
        oracle = robust.oracle_axis_worst_cvar(c, s, eps, grid=64)
        worst_margin = min(worst_margin, bound.value - oracle)
        all_negative &= bound.value < 0.0
        if bound.case is robust.BoundCase.IN_MU:
            worst_inmu = max(worst_inmu, abs(bound.value - oracle))
        in_mu = s.mu_min <= c <= s.mu_max
        in_unsafe = robust.unsafe_interval(s, eps).contains(c)
        expected = (
            robust.BoundCase.IN_MU if in_mu
            else robust.BoundCase.IN_UNSAFE if in_unsafe
            else robust.BoundCase.OUTSIDE
        )
        partition_ok &= bound.case is expected
    checks.append(_check("prop-conservative", worst_margin >= -1e-6,
                         f"worst bound-oracle margin = {worst_margin:.2e} (>= -1e-6)"))
    checks.append(_check("prop-inmu-equality", worst_inmu <= 1e-6,
                         f"worst InMu |bound-oracle| = {worst_inmu:.2e} (<= 1e-6)"))
    checks.append(_check("prop-strictly-negative", all_negative, "bound < 0 on all draws"))
    checks.append(_check("prop-case-partition", partition_ok, "cases exclusive and exhaustive"))

    # one-sided negativity at the unsafe-interval boundary
    ok = True
    for _ in range(50):
        s = _rand_surrogate(rng)
        eps = _rand_eps(rng)
        hi = robust.unsafe_interval(s, eps).hi
        for c in (hi - 1e-6, hi + 1e-6):
            ok &= robust.axis_worst_cvar_bound(c, s, eps).value < 0.0
    checks.append(_check("prop-boundary-negative", ok, "both case values < 0 at boundary +/- 1e-6"))

    # outside case decreases linearly in |c - gamma| with slope -1
    worst = 0.0
    for _ in range(50):
        s = _rand_surrogate(rng)
        eps = _rand_eps(rng)
        hi = robust.unsafe_interval(s, eps).hi
        c = hi + rng.uniform(0.5, 3.0)
        h = 1e-6
        f1 = robust.axis_worst_cvar_bound(c + h, s, eps).value
        f0 = robust.axis_worst_cvar_bound(c - h, s, eps).value
        worst = max(worst, abs((f1 - f0) / (2.0 * h) + 1.0))
    checks.append(_check("prop-outside-slope", worst <= 1e-6, f"worst |slope+1| = {worst:.2e}"))

    # end-to-end Monte-Carlo conservativeness of the loss bound
    ok = True
    worst = math.inf
    for _ in range(10):
        n_c = int(rng.integers(1, 4))
        axes = []
        for _ in range(n_c):
            s = _rand_surrogate(rng)
            p = NIGParams(gamma=s.gamma, lam=1.0, alpha=2.0, beta=1.0)
            axes.append(robust.AxisModel(nig=p, surrogate=s, eta=Confidence(0.9)))
        obs = robust.ObstacleModel(axes=tuple(axes), radius_obs=rng.uniform(0.0, 0.5))
        ego = robust.EgoDisc(
            center=tuple(ax.surrogate.gamma + rng.uniform(-4.0, 4.0) for ax in axes),
            radius_ego=rng.uniform(0.0, 0.5),
        )
        eps = RiskLevel(rng.uniform(0.2, 0.9))
        bound = robust.dr_loss_upper_bound(ego, obs, eps)
        # worst grid distribution per axis, then empirical CVaR of the loss
        n_mc = 200_000
        r = ego.radius_ego + obs.radius_obs
        samples = np.full(n_mc, r * r)
        for ci, ax in zip(ego.center, obs.axes):
            s = ax.surrogate
            mus = np.linspace(s.mu_min, s.mu_max, 64)
            mus = np.unique(np.append(mus, min(max(ci, s.mu_min), s.mu_max)))
            variances = np.linspace(s.var_min, s.var_max, 64)
            vals = robust._folded_cvar_grid(ci - mus[:, None], np.sqrt(variances)[None, :], eps)
            i, j = np.unravel_index(np.argmax(vals), vals.shape)
            draws = rng.normal(mus[i], math.sqrt(variances[j]), n_mc)
            samples -= (ci - draws) ** 2
        m = int(math.ceil((1.0 - eps.epsilon) * n_mc))
        tail = np.partition(samples, n_mc - m)[n_mc - m:]
        emp = float(tail.mean())
        se = float(tail.std(ddof=1) / math.sqrt(m))
        ok &= emp <= bound + 3.0 * se
        worst = min(worst, bound + 3.0 * se - emp)
    checks.append(_check("prop-loss-mc-conservative", ok, f"worst bound-emp+3SE = {worst:.2e} (>= 0)"))

    return SuiteReport(suite="proposition", checks=tuple(checks))


def _rand_nig(rng) -> NIGParams:
    return NIGParams(
        gamma=rng.uniform(-5.0, 5.0),
        lam=float(np.exp(rng.uniform(math.log(0.3), math.log(30.0)))),
        alpha=rng.uniform(1.05, 9.0),
        beta=float(np.exp(rng.uniform(math.log(0.05), math.log(5.0)))),
    )


def suite_contour(seed: int = 0, n: int = 20) -> SuiteReport:
    """HDR threshold self-consistency, contour extrema vs dense tracing, the
    superset relation, and contour-shape properties."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 303]))
    checks = []

    worst_mass = 0.0
    worst_rel = 0.0
    worst_slack = math.inf
    concave_ok = True
    for _ in range(n):
        p = _rand_nig(rng)
        for eta in (0.8, 0.9, 0.95):
            c_th = evidential.hdr_threshold(p, Confidence(eta), 1e-4)
            worst_mass = max(worst_mass, abs(evidential.hdr_mass(p, c_th, 1e-5) - eta))
            s = evidential.contour_extrema(p, c_th)
            lo, hi, y_lo, y_hi = trace_bbox_oracle(p, c_th)
            for a, b in ((lo, s.mu_min), (hi, s.mu_max), (y_lo, s.var_min), (y_hi, s.var_max)):
                worst_rel = max(worst_rel, abs(a - b) / max(1e-12, abs(b)))
            pts = evidential.trace_contour(p, c_th, 5000)
            slack = min(
                (pts[:, 0] - s.mu_min).min(),
                (s.mu_max - pts[:, 0]).min(),
                (pts[:, 1] - s.var_min).min(),
                (s.var_max - pts[:, 1]).min(),
            )
            worst_slack = min(worst_slack, float(slack))
            # concavity of the right branch x(y) between the variance roots
            ys = np.linspace(s.var_min + 0.05 * (s.var_max - s.var_min),
                             s.var_max - 0.05 * (s.var_max - s.var_min), 200)
            log_ratio = evidential._log_peak(p, ys) - math.log(c_th)
            xs = p.gamma + np.sqrt(np.maximum(0.0, 2.0 * ys / p.lam * log_ratio))
            d2 = np.diff(xs, 2)
            concave_ok &= bool(np.all(d2 <= 1e-6))
    checks.append(_check("hdr-threshold-consistency", worst_mass <= 1e-3,
                         f"worst |mass(c_th)-eta| = {worst_mass:.2e} (<= 1e-3)"))
    checks.append(_check("contour-extrema-vs-trace", worst_rel <= 1e-6,
                         f"worst relative bbox error = {worst_rel:.2e} (<= 1e-6)"))
    checks.append(_check("contour-superset", worst_slack >= -1e-9,
                         f"worst rectangle slack = {worst_slack:.2e} (>= -1e-9)"))
    checks.append(_check("contour-concavity-split", concave_ok,
                         "right-branch x(y) second differences <= 1e-6"))

    # mass strictly decreasing in c
    p = _rand_nig(rng)
    mode_density = evidential.nig_density(p, *evidential.nig_mode(p))
    cs = np.linspace(0.05, 0.95, 10) * mode_density
    masses = [evidential.hdr_mass(p, float(c), 1e-6) for c in cs]
    ok = all(b < a for a, b in zip(masses, masses[1:]))
    checks.append(_check("hdr-mass-monotone", ok, "mass(c) strictly decreasing on grid"))

    # rectangle mass >= eta (conservativeness of the surrogate)
    ok = True
    worst = math.inf
    for _ in range(5):
        p = _rand_nig(rng)
        eta = 0.9
        s = evidential.surrogate_from_params(p, Confidence(eta))
        n_mc = 200_000
        var = 1.0 / rng.gamma(p.alpha, 1.0 / p.beta, n_mc)
        mu = p.gamma + rng.normal(size=n_mc) * np.sqrt(var / p.lam)
        inside = (mu >= s.mu_min) & (mu <= s.mu_max) & (var >= s.var_min) & (var <= s.var_max)
        frac = float(inside.mean())
        se = math.sqrt(frac * (1.0 - frac) / n_mc)
        ok &= frac >= eta - 3.0 * se
        worst = min(worst, frac - eta)
    checks.append(_check("rectangle-mass-conservative", ok,
                         f"worst rectangle mass - eta = {worst:.3f} (>= -3 SE)"))

    return SuiteReport(suite="contour", checks=tuple(checks))


def suite_lookup(seed: int = 0, n: int = 50, grid_points: int = 128) -> SuiteReport:
    """Lookup-table invariance across (gamma, lam, beta), interpolation error
    on held-out alphas, and persistence round-trip."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 404]))
    checks = []
    eta = Confidence(0.9)
    grid = evidential.default_alpha_grid(grid_points)
    table = evidential.build_lookup(eta, grid, tol=1e-6)

    ok = all(r.u_min == -r.u_max for r in table.rows)
    checks.append(_check("lookup-row-symmetry", ok, "u_min == -u_max on every row"))

    worst = 0.0
    for _ in range(n):
        a = float(rng.choice(grid))
        p = NIGParams(
            gamma=rng.uniform(-5.0, 5.0),
            lam=float(np.exp(rng.uniform(math.log(0.3), math.log(30.0)))),
            alpha=a,
            beta=float(np.exp(rng.uniform(math.log(0.05), math.log(5.0)))),
        )
        s_tab = evidential.surrogate_from_params(p, eta, table)
        s_dir = evidential.surrogate_from_params(p, eta)
        for x, y in ((s_tab.mu_max, s_dir.mu_max), (s_tab.var_min, s_dir.var_min), (s_tab.var_max, s_dir.var_max)):
            worst = max(worst, abs(x - y) / max(1e-12, abs(y)))
    checks.append(_check("lookup-invariance", worst <= 1e-4,
                         f"worst on-grid relative error = {worst:.2e} (<= 1e-4)"))

    # interpolation error at bracketing-interval midpoints (held out)
    worst = 0.0
    idx = rng.choice(len(grid) - 1, size=min(16, len(grid) - 1), replace=False)
    for i in idx:
        a = 0.5 * (grid[i] + grid[i + 1])
        p = NIGParams(gamma=0.0, lam=1.0, alpha=float(a), beta=1.0)
        s_tab = evidential.surrogate_from_params(p, eta, table)
        s_dir = evidential.surrogate_from_params(p, eta)
        for x, y in ((s_tab.mu_max, s_dir.mu_max), (s_tab.var_min, s_dir.var_min), (s_tab.var_max, s_dir.var_max)):
            worst = max(worst, abs(x - y) / max(1e-12, abs(y)))
    checks.append(_check("lookup-interpolation", worst <= 1e-3,
                         f"worst held-out relative error = {worst:.2e} (<= 1e-3)"))

    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as td:
        path = Path(td) / "table.json"
        evidential.save_table(table, path)
        again = evidential.load_table(path)
    checks.append(_check("lookup-roundtrip", again == table, "JSON round trip is bit-identical"))

    return SuiteReport(suite="lookup", checks=tuple(checks))


SUITE_NAMES = ("lemmas", "proposition", "contour", "lookup")

_SUITES = {
    "lemmas": suite_lemmas,
    "proposition": suite_proposition,
    "contour": suite_contour,
    "lookup": suite_lookup,
}


def run_suites(names: Sequence[str], seed: int = 0, n: Optional[int] = None) -> list[SuiteReport]:
    """Run the named suites ('all' expands to every suite) with a shared seed.

    ``n`` scales the random-sweep sizes; each suite has its own default when
    n is None.
    """
    expanded = list(SUITE_NAMES) if "all" in names else list(names)
    reports = []
    for name in expanded:
        if name not in _SUITES:
            raise DomainError(f"unknown suite {name!r}; choose from {SUITE_NAMES + ('all',)}")
        fn = _SUITES[name]
        reports.append(fn(seed=seed) if n is None else fn(seed=seed, n=n))
    return reports
