"""Discrete-time double-integrator dynamics, trajectory cost, and a
sampling-based (cross-entropy) MPC solver enforcing the distributionally
robust collision constraint at every step of the horizon.

The cross-entropy method is used instead of a gradient NLP because the
per-axis worst-case bound is piecewise (it may jump at the unsafe-interval
boundary), so no smoothness is required of the constraint.  Rollouts whose
constraint fails at any step t in [0, T-1] are discarded; the sampling law is
refit to the cheapest feasible rollouts.  If no feasible rollout is found in
any iteration, a maximal-braking fallback plan is returned with
``feasible=False``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .risk import RiskLevel
from .robust import ObstacleModel, axis_bound_values

__all__ = [
    "State",
    "Control",
    "MPCConfig",
    "Plan",
    "step_dynamics",
    "dr_position_constraint",
    "rollout",
    "solve_mpc",
]

# Feasibility evaluator: (m, d) positions -> (m,) bool mask
PositionConstraint = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class State:
    position: tuple[float, ...]
    velocity: tuple[float, ...]

    def __post_init__(self):
        if len(self.position) != len(self.velocity):
            raise DomainError("position/velocity dimension mismatch")
        if not all(np.isfinite(self.position)) or not all(np.isfinite(self.velocity)):
            raise DomainError("state components must be finite")


@dataclass(frozen=True)
class Control:
    accel: tuple[float, ...]


@dataclass(frozen=True)
class MPCConfig:
    """Solver and problem configuration.

    horizon steps T, step dt, cross-entropy sample/elite/iteration counts,
    box bound u_max on each acceleration component, quadratic cost weights
    (per-step goal tracking, control effort, terminal goal), the goal
    position, the ego disc radius used by the robust constraint, the CVaR
    risk level, and the sampling seed.
    """

    horizon: int
    dt: float
    n_samples: int
    n_elite: int
    n_iters: int
    u_max: float
    w_goal: float
    w_effort: float
    w_term: float
    goal: tuple[float, ...]
    ego_radius: float
    epsilon: RiskLevel
    seed: int

    def __post_init__(self):
        if self.horizon < 1:
            raise DomainError("horizon must be >= 1")
        if not (self.dt > 0.0):
            raise DomainError("dt must be positive")
        if not (0 < self.n_elite < self.n_samples):
            raise DomainError("need 0 < n_elite < n_samples")
        if self.n_iters < 1:
            raise DomainError("n_iters must be >= 1")
        if not (self.u_max > 0.0):
            raise DomainError("u_max must be positive")
        if self.ego_radius < 0.0:
            raise DomainError("ego_radius must be >= 0")
        if self.seed < 0:
            raise DomainError("seed must be a non-negative integer")


@dataclass(frozen=True)
class Plan:
    """One solved control sequence with its simulated states and cost.

    ``elite_costs`` records the best feasible cost seen up to each CEM
    iteration (empty for the braking fallback)."""

    controls: tuple[Control, ...]
    states: tuple[State, ...]
    cost: float
    feasible: bool
    elite_costs: tuple[float, ...] = field(default=())


def step_dynamics(s: State, u: Control, dt: float) -> State:
    """Double integrator: p += v*dt + a*dt^2/2, v += a*dt."""
    p = np.asarray(s.position)
    v = np.asarray(s.velocity)
    a = np.asarray(u.accel)
    return State(
        position=tuple(p + v * dt + 0.5 * a * dt * dt),
        velocity=tuple(v + a * dt),
    )


def dr_position_constraint(
    obstacles: Sequence[ObstacleModel], eps: RiskLevel, ego_radius: float
) -> PositionConstraint:
    """Vectorized distributionally robust feasibility test on ego positions.

    A point is feasible iff for every obstacle the loss bound
    (r_ego + r_obs)^2 - sum_i b_i(c_i)^2 is <= 0.
    """

    def feasible(points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ok = np.ones(pts.shape[0], dtype=bool)
        for obs in obstacles:
            if pts.shape[1] != obs.n_c:
                raise DomainError(
                    f"dimension mismatch: points {pts.shape[1]}-d vs obstacle {obs.n_c}-d"
                )
            r = ego_radius + obs.radius_obs
            loss = np.full(pts.shape[0], r * r)
            for i, ax in enumerate(obs.axes):
                b = axis_bound_values(pts[:, i], ax.surrogate, eps)
                loss -= b * b
            ok &= loss <= 0.0
        return ok

    return feasible


def terminal_cost(pos_T: np.ndarray, vel_T: np.ndarray, cfg: MPCConfig) -> np.ndarray:
    """q(x_T) = w_term * (||p_T - goal||^2 + ||v_T||^2): the velocity term makes
    stopping at the goal optimal rather than orbiting through it."""
    goal = np.asarray(cfg.goal)
    return cfg.w_term * (((pos_T - goal) ** 2).sum(axis=-1) + (vel_T**2).sum(axis=-1))


def _simulate_batch(p0: np.ndarray, v0: np.ndarray, U: np.ndarray, dt: float):
    """Batched double-integrator rollout.  U: (n, T, d) -> positions (n, T+1, d),
    velocities (n, T+1, d)."""
    n, T, d = U.shape
    pos = np.empty((n, T + 1, d))
    vel = np.empty((n, T + 1, d))
    pos[:, 0] = p0
    vel[:, 0] = v0
    for t in range(T):
        a = U[:, t]
        pos[:, t + 1] = pos[:, t] + vel[:, t] * dt + 0.5 * a * dt * dt
        vel[:, t + 1] = vel[:, t] + a * dt
    return pos, vel


def _batch_costs(pos: np.ndarray, vel: np.ndarray, U: np.ndarray, cfg: MPCConfig) -> np.ndarray:
    goal = np.asarray(cfg.goal)
    stage_goal = ((pos[:, :-1] - goal) ** 2).sum(axis=2).sum(axis=1)
    effort = (U**2).sum(axis=2).sum(axis=1)
    return cfg.w_goal * stage_goal + cfg.w_effort * effort + terminal_cost(pos[:, -1], vel[:, -1], cfg)


def _batch_feasible(pos: np.ndarray, constraint: PositionConstraint) -> np.ndarray:
    """Constraint holds at every t in [0, T-1]; the terminal state is free."""
    n, T1, d = pos.shape
    flat = pos[:, :-1].reshape(-1, d)
    return constraint(flat).reshape(n, T1 - 1).all(axis=1)


def _braking_tape(s0: State, cfg: MPCConfig) -> np.ndarray:
    """Maximal deceleration toward zero velocity, then hold."""
    d = len(s0.velocity)
    v = np.asarray(s0.velocity, dtype=float)
    U = np.zeros((cfg.horizon, d))
    for t in range(cfg.horizon):
        U[t] = np.clip(-v / cfg.dt, -cfg.u_max, cfg.u_max)
        v = v + U[t] * cfg.dt
    return U


def _resolve_constraint(
    cfg: MPCConfig,
    obstacles: Sequence[ObstacleModel],
    constraint: Optional[PositionConstraint],
) -> PositionConstraint:
    if constraint is not None:
        return constraint
    if obstacles:
        return dr_position_constraint(obstacles, cfg.epsilon, cfg.ego_radius)
    return lambda pts: np.ones(np.atleast_2d(pts).shape[0], dtype=bool)


def _plan_from_tape(
    s0: State,
    U: np.ndarray,
    cfg: MPCConfig,
    constraint: PositionConstraint,
    *,
    feasible_override: Optional[bool] = None,
    elite_costs: tuple[float, ...] = (),
) -> Plan:
    pos, vel = _simulate_batch(
        np.asarray(s0.position, dtype=float),
        np.asarray(s0.velocity, dtype=float),
        U[None],
        cfg.dt,
    )
    cost = float(_batch_costs(pos, vel, U[None], cfg)[0])
    feas = bool(_batch_feasible(pos, constraint)[0])
    if feasible_override is not None:
        feas = feasible_override
    states = tuple(
        State(position=tuple(pos[0, t]), velocity=tuple(vel[0, t]))
        for t in range(cfg.horizon + 1)
    )
    controls = tuple(Control(accel=tuple(U[t])) for t in range(cfg.horizon))
    return Plan(controls=controls, states=states, cost=cost, feasible=feas, elite_costs=elite_costs)


def rollout(
    s0: State,
    controls: Sequence[Control],
    cfg: MPCConfig,
    obstacles: Sequence[ObstacleModel] = (),
    constraint: Optional[PositionConstraint] = None,
) -> Plan:
    """Simulate one control sequence; cost and per-step feasibility.

    Cost is sum_t [w_goal*||p_t - goal||^2 + w_effort*||u_t||^2] for
    t in [0, T-1] plus w_term*||p_T - goal||^2; feasible iff the constraint
    holds at every t in [0, T-1] for every obstacle.
    """
    if len(controls) != cfg.horizon:
        raise DomainError(f"need {cfg.horizon} controls, got {len(controls)}")
    U = np.asarray([c.accel for c in controls], dtype=float)
    return _plan_from_tape(s0, U, cfg, _resolve_constraint(cfg, obstacles, constraint))


def solve_mpc(
    s0: State,
    cfg: MPCConfig,
    obstacles: Sequence[ObstacleModel] = (),
    constraint: Optional[PositionConstraint] = None,
    init_mean: Optional[np.ndarray] = None,
) -> Plan:
    """Cross-entropy search over control tapes.

    Per iteration: sample ``n_samples`` tapes from a diagonal Gaussian (plus
    the braking tape and the incumbent best), clip to the box bound, discard
    infeasible rollouts, refit mean/std to the ``n_elite`` cheapest feasible
    ones.  ``init_mean`` warm-starts the sampling mean (receding-horizon use
    passes the previous tape shifted by one step).  Deterministic for a fixed
    (s0, cfg, obstacles, init_mean) via per-iteration generators keyed by
    (seed, iteration).
    """
    check = _resolve_constraint(cfg, obstacles, constraint)
    T, d = cfg.horizon, len(s0.position)
    p0 = np.asarray(s0.position, dtype=float)
    v0 = np.asarray(s0.velocity, dtype=float)

    if init_mean is not None:
        mean = np.asarray(init_mean, dtype=float)
        if mean.shape != (T, d):
            raise DomainError(f"init_mean must have shape {(T, d)}, got {mean.shape}")
    else:
        mean = np.zeros((T, d))
    std = np.full((T, d), 0.5 * cfg.u_max)
    std_floor = 0.02 * cfg.u_max
    brake = _braking_tape(s0, cfg)

    best_cost = np.inf
    best_U: Optional[np.ndarray] = None
    history: list[float] = []

    for it in range(cfg.n_iters):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, it]))
        U = rng.normal(mean, std, size=(cfg.n_samples, T, d))
        np.clip(U, -cfg.u_max, cfg.u_max, out=U)
        extras = [brake[None], np.clip(mean, -cfg.u_max, cfg.u_max)[None]]
        if best_U is not None:
            extras.append(best_U[None])
        U = np.concatenate([U] + extras, axis=0)

        pos, vel = _simulate_batch(p0, v0, U, cfg.dt)
        costs = _batch_costs(pos, vel, U, cfg)
        feas = _batch_feasible(pos, check)

        if feas.any():
            f_idx = np.nonzero(feas)[0]
            order = f_idx[np.argsort(costs[f_idx], kind="stable")]
            if costs[order[0]] < best_cost:
                best_cost = float(costs[order[0]])
                best_U = U[order[0]].copy()
            elite = U[order[: cfg.n_elite]]
            mean = elite.mean(axis=0)
            std = np.maximum(elite.std(axis=0), std_floor)
        history.append(best_cost)

    if best_U is None:
        return _plan_from_tape(s0, brake, cfg, check, feasible_override=False)
    return _plan_from_tape(s0, best_U, cfg, check, elite_costs=tuple(history))
