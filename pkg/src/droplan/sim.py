"""Closed-loop 2D obstacle-avoidance episodes comparing a point-estimate
policy, a plain plug-in CVaR policy, and the distributionally robust
(surrogate-set) CVaR policy.

Ground truth is drawn hierarchically from the evidential model itself
(variance from the inverse-gamma marginal, mean from the conditional normal,
position from the resulting Gaussian), which makes the confidence/risk
guarantees empirically checkable.  Obstacles are static within an episode;
the perceived model stays fixed while the controller replans every step and
only the first control of each plan is applied.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .control import MPCConfig, State, solve_mpc, step_dynamics
from .errors import DomainError
from .evidential import Confidence, NIGParams, hdr_threshold, trace_contour
from .risk import GaussianScalar, RiskLevel, cvar_neg_abs
from .risk import delta as risk_delta
from .robust import EgoDisc, ObstacleModel, axis_bound_values, obstacle_from_nig

__all__ = [
    "GOAL_TOLERANCE",
    "ScenarioObstacle",
    "Scenario",
    "PolicyKind",
    "PolicyConstraint",
    "EpisodeResult",
    "BatchResult",
    "BATCH_CSV_HEADER",
    "load_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "shipped_scenario_path",
    "default_mpc_config",
    "sample_ground_truth",
    "build_policy_constraint",
    "run_episode",
    "run_batch",
    "write_batch_csv",
    "write_trajectory_csv",
    "write_contour_csv",
]

GOAL_TOLERANCE = 0.2

BATCH_CSV_HEADER = "policy,episodes,success_pct,collision_pct,mean_cost,mean_min_distance,mean_solve_ms"


@dataclass(frozen=True)
class ScenarioObstacle:
    """One obstacle: per-axis NIG locations, shared evidence parameters,
    per-axis confidence, and the true disc radius."""

    gamma: tuple[float, ...]
    lam: float
    alpha: float
    beta: float
    eta: float
    radius: float

    def axes_params(self) -> tuple[NIGParams, ...]:
        return tuple(
            NIGParams(gamma=g, lam=self.lam, alpha=self.alpha, beta=self.beta)
            for g in self.gamma
        )


@dataclass(frozen=True)
class Scenario:
    ego_start: State
    goal: tuple[float, ...]
    ego_radius: float
    dt: float
    max_steps: int
    obstacles: tuple[ScenarioObstacle, ...]
    label: str
    seed: int

    def __post_init__(self):
        if self.max_steps < 1:
            raise DomainError("max_steps must be >= 1")
        if self.ego_radius < 0.0 or any(o.radius < 0.0 for o in self.obstacles):
            raise DomainError("radii must be >= 0")
        if self.label not in ("confident", "uncertain"):
            raise DomainError(f"label must be 'confident' or 'uncertain', got {self.label!r}")


class PolicyKind(Enum):
    SINGLE_ESTIMATE = "single-estimate"
    PLAIN_CVAR = "cvar"
    DR_EDL_CVAR = "dr-edl-cvar"

    @classmethod
    def from_string(cls, name: str) -> "PolicyKind":
        for k in cls:
            if k.value == name:
                return k
        raise DomainError(f"unknown policy {name!r}; choose from {[k.value for k in cls]}")


@dataclass(frozen=True)
class EpisodeResult:
    success: bool
    collision: bool
    total_cost: float
    min_distance: float
    mean_solve_time: float  # milliseconds; 0.0 when timing is disabled
    trajectory: tuple[State, ...]
    step_feasible: tuple[bool, ...]  # policy constraint evaluated at each visited state

    def __post_init__(self):
        if self.success and self.collision:
            raise DomainError("an episode cannot both succeed and collide")
        if self.min_distance < 0.0:
            raise DomainError("min_distance must be >= 0")


@dataclass(frozen=True)
class BatchResult:
    policy: str
    episodes: int
    success_pct: float
    collision_pct: float
    mean_cost: float
    mean_min_distance: float
    mean_solve_ms: float

    def csv_row(self) -> str:
        return ",".join(
            [
                self.policy,
                repr(self.episodes),
                repr(self.success_pct),
                repr(self.collision_pct),
                repr(self.mean_cost),
                repr(self.mean_min_distance),
                repr(self.mean_solve_ms),
            ]
        )


def scenario_from_dict(doc: dict) -> Scenario:
    obstacles = tuple(
        ScenarioObstacle(
            gamma=tuple(float(g) for g in ob["gamma"]),
            lam=float(ob["lambda"]),
            alpha=float(ob["alpha"]),
            beta=float(ob["beta"]),
            eta=float(ob["eta"]),
            radius=float(ob["radius"]),
        )
        for ob in doc["obstacles"]
    )
    return Scenario(
        ego_start=State(
            position=tuple(float(x) for x in doc["ego_start"]["position"]),
            velocity=tuple(float(x) for x in doc["ego_start"]["velocity"]),
        ),
        goal=tuple(float(x) for x in doc["goal"]),
        ego_radius=float(doc["ego_radius"]),
        dt=float(doc["dt"]),
        max_steps=int(doc["max_steps"]),
        obstacles=obstacles,
        label=str(doc["label"]),
        seed=int(doc["seed"]),
    )


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "ego_start": {
            "position": list(sc.ego_start.position),
            "velocity": list(sc.ego_start.velocity),
        },
        "goal": list(sc.goal),
        "ego_radius": sc.ego_radius,
        "dt": sc.dt,
        "max_steps": sc.max_steps,
        "obstacles": [
            {
                "gamma": list(o.gamma),
                "lambda": o.lam,
                "alpha": o.alpha,
                "beta": o.beta,
                "eta": o.eta,
                "radius": o.radius,
            }
            for o in sc.obstacles
        ],
        "label": sc.label,
        "seed": sc.seed,
    }


def load_scenario(path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def shipped_scenario_path(name: str) -> Path:
    """Filesystem path of a scenario shipped with the package ('confident' or
    'uncertain')."""
    ref = resources.files("droplan") / "scenarios" / f"{name}.json"
    with resources.as_file(ref) as p:
        return Path(p)


def default_mpc_config(
    sc: Scenario,
    *,
    epsilon: float = 0.9,
    seed: Optional[int] = None,
) -> MPCConfig:
    """Desk-scale solver defaults for a scenario; used by the CLI."""
    return MPCConfig(
        horizon=28,
        dt=sc.dt,
        n_samples=300,
        n_elite=30,
        n_iters=6,
        u_max=3.0,
        w_goal=0.3,
        w_effort=0.05,
        w_term=30.0,
        goal=sc.goal,
        ego_radius=sc.ego_radius,
        epsilon=RiskLevel(epsilon),
        seed=sc.seed if seed is None else seed,
    )


def sample_ground_truth(axes_params: Sequence[NIGParams], seed) -> np.ndarray:
    """Hierarchical draw of a true obstacle position, one coordinate per axis:
    var ~ InvGamma(alpha, beta), mu ~ N(gamma, var/lam), pos ~ N(mu, var)."""
    rng = np.random.default_rng(seed)
    out = np.empty(len(axes_params))
    for i, p in enumerate(axes_params):
        var = 1.0 / rng.gamma(p.alpha, 1.0 / p.beta)
        mu = p.gamma + rng.normal() * math.sqrt(var / p.lam)
        out[i] = mu + rng.normal() * math.sqrt(var)
    return out


class _FoldedCvarTable:
    """Fast CVaR_eps[-|X|] for X ~ N(mu_d, sigma^2) at fixed (sigma, eps).

    Dense cubic spline of the adaptive-quadrature values over |mu_d| <= 8
    sigma; beyond that the folded mass on the far side is below double
    precision and CVaR_eps[-|X|] equals CVaR_eps[-X] = -|mu_d| + delta*sigma
    exactly.  Agreement with the scalar op is covered by the test suite.
    """

    _SWITCH = 8.0

    def __init__(self, sigma: float, eps: RiskLevel, n_nodes: int = 257):
        from scipy.interpolate import CubicSpline

        self.sigma = sigma
        self.eps = eps
        self._cut = self._SWITCH * sigma
        nodes = np.linspace(0.0, self._cut, n_nodes)
        vals = [cvar_neg_abs(GaussianScalar(float(m), sigma), eps) for m in nodes]
        self._spline = CubicSpline(nodes, vals)
        self._tail_offset = risk_delta(eps) * sigma

    def __call__(self, mu_d: np.ndarray) -> np.ndarray:
        m = np.abs(np.asarray(mu_d, dtype=float))
        out = np.empty_like(m)
        near = m <= self._cut
        out[near] = self._spline(m[near])
        out[~near] = -m[~near] + self._tail_offset
        return out


class PolicyConstraint:
    """Per-obstacle safety test under one of the three policies.

    ``loss_positions`` returns the policy's loss bound at each ego position
    (feasible iff <= 0); ``evaluate`` applies it to a single EgoDisc.
    """

    def __init__(self, kind: PolicyKind, obstacle: ObstacleModel, eps: RiskLevel):
        self.kind = kind
        self.obstacle = obstacle
        self.eps = eps
        if kind is PolicyKind.PLAIN_CVAR:
            for ax in obstacle.axes:
                if ax.nig.alpha <= 1.0:
                    raise DomainError("plug-in variance beta/(alpha-1) needs alpha > 1")
            self._plug_sigmas = tuple(
                math.sqrt(ax.nig.beta / (ax.nig.alpha - 1.0)) for ax in obstacle.axes
            )
            self._plug_cvars = tuple(
                _FoldedCvarTable(sig, eps) for sig in self._plug_sigmas
            )

    def loss_positions(self, points: np.ndarray, ego_radius: float) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.obstacle.n_c:
            raise DomainError(
                f"dimension mismatch: points {pts.shape[1]}-d vs obstacle {self.obstacle.n_c}-d"
            )
        r = ego_radius + self.obstacle.radius_obs
        loss = np.full(pts.shape[0], r * r)
        if self.kind is PolicyKind.SINGLE_ESTIMATE:
            for i, ax in enumerate(self.obstacle.axes):
                loss -= (pts[:, i] - ax.nig.gamma) ** 2
        elif self.kind is PolicyKind.PLAIN_CVAR:
            for i, ax in enumerate(self.obstacle.axes):
                b = self._plug_cvars[i](pts[:, i] - ax.nig.gamma)
                loss -= b * b
        else:
            for i, ax in enumerate(self.obstacle.axes):
                b = axis_bound_values(pts[:, i], ax.surrogate, self.eps)
                loss -= b * b
        return loss

    def feasible_positions(self, points: np.ndarray, ego_radius: float) -> np.ndarray:
        return self.loss_positions(points, ego_radius) <= 0.0

    def evaluate(self, ego: EgoDisc) -> bool:
        return bool(
            self.feasible_positions(np.asarray(ego.center)[None, :], ego.radius_ego)[0]
        )


def build_policy_constraint(
    kind: PolicyKind, obstacle: ObstacleModel, eps: RiskLevel
) -> PolicyConstraint:
    """Constraint evaluator for one obstacle under the given policy.

    Single-estimate: deterministic loss against the NIG location (point
    estimate).  Plain CVaR: folded-normal CVaR under the single plug-in
    Gaussian N(gamma, beta/(alpha-1)) per axis, no ambiguity set.  DR:
    worst-case bound over the surrogate rectangle.
    """
    return PolicyConstraint(kind, obstacle, eps)


def _combined_position_constraint(
    constraints: Sequence[PolicyConstraint], ego_radius: float
):
    def feasible(points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.ones(pts.shape[0], dtype=bool)
        for c in constraints:
            ok &= c.feasible_positions(pts, ego_radius)
        return ok

    return feasible


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def run_episode(
    sc: Scenario,
    kind: PolicyKind,
    cfg: MPCConfig,
    table=None,
    *,
    truth_seed: Optional[int] = None,
    measure_time: bool = False,
) -> EpisodeResult:
    """One closed-loop episode: replan each step, apply the first control,
    advance the true dynamics, and check collision against the sampled
    ground-truth obstacle discs.

    Terminates on goal (success), collision, or max_steps.  ``truth_seed``
    overrides the scenario seed for the ground-truth draw (used by batches).
    """
    models = [
        obstacle_from_nig(ob.axes_params(), Confidence(ob.eta), ob.radius, table)
        for ob in sc.obstacles
    ]
    constraints = [build_policy_constraint(kind, m, cfg.epsilon) for m in models]
    combined = _combined_position_constraint(constraints, sc.ego_radius)

    t_seed = sc.seed if truth_seed is None else truth_seed
    truths = [
        sample_ground_truth(ob.axes_params(), _derived_seed(t_seed, i))
        for i, ob in enumerate(sc.obstacles)
    ]
    radii = [sc.ego_radius + ob.radius for ob in sc.obstacles]
    goal = np.asarray(sc.goal)

    s = sc.ego_start
    trajectory = [s]
    total_cost = 0.0
    min_dist = math.inf
    solve_ms: list[float] = []
    success = collision = False
    warm: Optional[np.ndarray] = None

    for step in range(sc.max_steps):
        pos = np.asarray(s.position)
        dists = [float(np.linalg.norm(pos - t)) for t in truths]
        min_dist = min(min_dist, *dists)
        if any(d < r for d, r in zip(dists, radii)):
            collision = True
            break
        if float(np.linalg.norm(pos - goal)) <= GOAL_TOLERANCE:
            success = True
            break

        step_cfg = dataclasses.replace(cfg, seed=_derived_seed(cfg.seed, step))
        t0 = time.perf_counter() if measure_time else 0.0
        plan = solve_mpc(s, step_cfg, obstacles=models, constraint=combined, init_mean=warm)
        if measure_time:
            solve_ms.append((time.perf_counter() - t0) * 1e3)
        # warm-start the next replan with this plan shifted one step
        tape = np.asarray([c.accel for c in plan.controls])
        warm = np.vstack([tape[1:], np.zeros((1, tape.shape[1]))])

        u0 = plan.controls[0]
        total_cost += cfg.w_goal * float(np.sum((pos - goal) ** 2)) + cfg.w_effort * float(
            np.sum(np.square(u0.accel))
        )
        s = step_dynamics(s, u0, sc.dt)
        trajectory.append(s)
    else:
        # max_steps exhausted: classify the final state
        pos = np.asarray(s.position)
        dists = [float(np.linalg.norm(pos - t)) for t in truths]
        min_dist = min(min_dist, *dists)
        if any(d < r for d, r in zip(dists, radii)):
            collision = True
        elif float(np.linalg.norm(pos - goal)) <= GOAL_TOLERANCE:
            success = True

    all_pos = np.asarray([st.position for st in trajectory])
    step_feasible = tuple(bool(b) for b in combined(all_pos))
    return EpisodeResult(
        success=success,
        collision=collision,
        total_cost=total_cost,
        min_distance=min_dist,
        mean_solve_time=float(np.mean(solve_ms)) if solve_ms else 0.0,
        trajectory=tuple(trajectory),
        step_feasible=step_feasible,
    )


def _env_threads() -> int:
    try:
        return max(1, int(os.environ.get("DRO_EDL_THREADS", "1")))
    except ValueError:
        return 1


def run_batch(
    sc: Scenario,
    kind: PolicyKind,
    cfg: MPCConfig,
    n_episodes: int,
    seed: int,
    table=None,
    *,
    measure_time: bool = False,
    n_threads: Optional[int] = None,
) -> BatchResult:
    """Aggregate metrics over n_episodes with derived per-episode seeds.

    Episode i redraws the ground truth with seed (seed, i) and reseeds the
    solver with (seed, i, 1); results are bit-reproducible for a fixed master
    seed regardless of the thread count (DRO_EDL_THREADS caps parallelism).
    """
    if n_episodes < 1:
        raise DomainError("n_episodes must be >= 1")
    threads = _env_threads() if n_threads is None else max(1, n_threads)

    def one(i: int) -> EpisodeResult:
        ep_cfg = dataclasses.replace(cfg, seed=_derived_seed(seed, i, 1))
        return run_episode(
            sc, kind, ep_cfg, table, truth_seed=_derived_seed(seed, i), measure_time=measure_time
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(one, range(n_episodes)))
    else:
        results = [one(i) for i in range(n_episodes)]

    return BatchResult(
        policy=kind.value,
        episodes=n_episodes,
        success_pct=100.0 * sum(r.success for r in results) / n_episodes,
        collision_pct=100.0 * sum(r.collision for r in results) / n_episodes,
        mean_cost=float(np.mean([r.total_cost for r in results])),
        mean_min_distance=float(np.mean([r.min_distance for r in results])),
        mean_solve_ms=float(np.mean([r.mean_solve_time for r in results])),
    )


def write_batch_csv(results: Sequence[BatchResult], path) -> None:
    lines = [BATCH_CSV_HEADER] + [r.csv_row() for r in results]
    Path(path).write_text("\n".join(lines) + "\n")


def write_trajectory_csv(result: EpisodeResult, path) -> None:
    """Rows t,x,y,vx,vy,feasible; feasible is the policy constraint evaluated
    at that state against the perceived obstacles."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "x", "y", "vx", "vy", "feasible"])
        for t, (st, ok) in enumerate(zip(result.trajectory, result.step_feasible)):
            w.writerow(
                [t, repr(st.position[0]), repr(st.position[1]), repr(st.velocity[0]), repr(st.velocity[1]), ok]
            )


def write_contour_csv(sc: Scenario, path, *, n_points: int = 400, tol: float = 1e-5) -> None:
    """Plot-ready per-axis HDR contours and surrogate rectangle corners.

    Columns obstacle,axis,kind,mu,var with kind in {contour, rectangle}; the
    rectangle rows trace the 5-point closed outline of the surrogate set in
    the (mu, var) plane of that axis.
    """
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["obstacle", "axis", "kind", "mu", "var"])
        for oi, ob in enumerate(sc.obstacles):
            model = obstacle_from_nig(ob.axes_params(), Confidence(ob.eta), ob.radius)
            for ai, (p, ax) in enumerate(zip(ob.axes_params(), model.axes)):
                c_th = hdr_threshold(p, Confidence(ob.eta), tol)
                for mu, var in trace_contour(p, c_th, n_points // 2):
                    w.writerow([oi, ai, "contour", repr(float(mu)), repr(float(var))])
                s = ax.surrogate
                corners = [
                    (s.mu_min, s.var_min),
                    (s.mu_max, s.var_min),
                    (s.mu_max, s.var_max),
                    (s.mu_min, s.var_max),
                    (s.mu_min, s.var_min),
                ]
                for mu, var in corners:
                    w.writerow([oi, ai, "rectangle", repr(mu), repr(var)])
