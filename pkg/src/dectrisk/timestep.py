"""Fixed-step time integrators for the semi-discrete equations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DecError, IntegratorDivergence, SimulationError

INTEGRATORS = ("rk4", "implicit-midpoint")


@dataclass(frozen=True)
class IntegratorConfig:
    kind: str = "rk4"
    dt: float = 1.0
    tolerance: float = 1e-13
    max_iterations: int = 100

    def __post_init__(self):
        if self.kind not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.kind!r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def rk4_step(state, model, dt):
    """Classical four-stage Runge-Kutta step."""
    x = state.vector()
    t = state.time
    k1 = model(state).vector()
    k2 = model(state.with_vector(x + 0.5 * dt * k1, t + 0.5 * dt)).vector()
    k3 = model(state.with_vector(x + 0.5 * dt * k2, t + 0.5 * dt)).vector()
    k4 = model(state.with_vector(x + dt * k3, t + dt)).vector()
    return state.with_vector(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t + dt)


def implicit_midpoint_step(state, model, dt, tolerance=1e-13, max_iterations=100):
    """x1 = x0 + dt f((x0 + x1)/2), by fixed-point iteration on the midpoint.

    Converged when the max-norm change of the midpoint iterate, relative to
    its max norm, drops below ``tolerance``.  The final update uses the
    tendency at the converged midpoint so that linear invariants with zero
    rate are preserved to roundoff.
    """
    x0 = state.vector()
    t_mid = state.time + 0.5 * dt
    mid = x0 + 0.5 * dt * model(state).vector()
    history = []
    for _ in range(max_iterations):
        k = model(state.with_vector(mid, t_mid)).vector()
        new = x0 + 0.5 * dt * k
        change = float(np.max(np.abs(new - mid)) / max(np.max(np.abs(new)), np.finfo(float).tiny))
        history.append(change)
        mid = new
        if not np.isfinite(change):
            break
        if change < tolerance:
            k = model(state.with_vector(mid, t_mid)).vector()
            return state.with_vector(x0 + dt * k, state.time + dt)
    raise IntegratorDivergence(
        f"implicit midpoint did not converge in {len(history)} iterations "
        f"(last relative change {history[-1]:.3g}, tolerance {tolerance:g})", history)


def step(state, integrator: IntegratorConfig, model: Callable):
    """Advance ``state`` by one step of size ``integrator.dt``.

    ``model`` maps a state to its tendency (anything with a ``vector()``
    method ordered like ``state.vector()``).
    """
    if integrator.kind == "rk4":
        return rk4_step(state, model, integrator.dt)
    return implicit_midpoint_step(state, model, integrator.dt, integrator.tolerance,
                                  integrator.max_iterations)


@dataclass
class RunResult:
    initial: object
    final: object
    n_steps: int


def run(initial, integrator: IntegratorConfig, n_steps: int, model: Callable,
        callbacks: Sequence[Callable] = (), cadence: int = 1) -> RunResult:
    """Take ``n_steps`` steps, calling ``callback(step_index, state)`` every ``cadence`` steps.

    Callbacks always see step 0.  A failure inside a step is re-raised as
    :class:`SimulationError` carrying the index of the step being taken.
    """
    if n_steps < 0:
        raise ValueError(f"n_steps must be non-negative, got {n_steps}")
    if cadence < 1:
        raise ValueError(f"cadence must be at least 1, got {cadence}")
    state = initial
    for cb in callbacks:
        cb(0, state)
    for i in range(1, n_steps + 1):
        try:
            state = step(state, integrator, model)
        except (DecError, FloatingPointError, ValueError) as exc:
            raise SimulationError(i, exc) from exc
        if i % cadence == 0:
            for cb in callbacks:
                cb(i, state)
    return RunResult(initial, state, n_steps)
