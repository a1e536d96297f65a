"""Time-ordered state propagation under time-dependent Hamiltonians.

``evolve`` integrates the Schrodinger equation i d|psi>/dt = H(t)|psi>
with an adaptive eighth-order Runge-Kutta stepper (DOP853) at a default
relative tolerance of 1e-10.  The norm is never renormalized; drift away
from 1 is a solver diagnostic.  ``evolve_oracle`` is an independent
piecewise-constant midpoint matrix-exponential product used to
cross-check the stepper.  ``run_sequence`` schedules piecewise drive
stages with a continuous atomic coordinate z0 + v*t across stage
boundaries and accumulates the time spent in Rydberg levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson, solve_ivp

from dualrail.core import SimulationParams
from dualrail.hamiltonians import (
    DUAL_RAIL_BASIS,
    GAP_BASIS,
    SINGLE_RAIL_BASIS,
    DriveStage,
    h_dual_rail,
    h_gap_four_level,
    h_single_rail,
)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


class EvolutionError(RuntimeError):
    """Raised when the integrator fails to converge or loses the norm."""


@dataclass(frozen=True)
class ComplexState:
    """Complex amplitudes over a named level basis."""

    basis: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (len(self.basis),):
            raise ValueError("amplitude vector does not match basis size")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_label(cls, basis: Sequence[str], label: str) -> "ComplexState":
        basis = tuple(basis)
        amps = np.zeros(len(basis), dtype=complex)
        amps[basis.index(label)] = 1.0
        return cls(basis, amps)

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[self.basis.index(label)])

    def population(self, label: str) -> float:
        return abs(self.amplitude(label)) ** 2

    def phase(self, label: str) -> float:
        return float(np.angle(self.amplitude(label)))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class TrajectoryResult:
    """Final state plus sampled populations/phases and Rydberg residence.

    ``times`` is strictly increasing across the whole sequence;
    ``populations`` and ``phases`` have one column per basis level.
    ``rydberg_time_us`` integrates the total population of the r* levels
    over the full sequence; ``boundary_states`` holds the state at the
    end of each stage.
    """

    final_state: ComplexState
    times: np.ndarray
    populations: np.ndarray
    phases: np.ndarray
    rydberg_time_us: float
    boundary_states: tuple[ComplexState, ...]
    stage_edges: tuple[float, ...]


def evolve(
    state: ComplexState,
    h_builder: Callable[[float], np.ndarray],
    t0: float,
    t1: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> ComplexState:
    """Propagate ``state`` from t0 to t1 under H(t) = h_builder(t)."""
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    if t1 == t0:
        return state
    sol = _integrate(state.amplitudes, h_builder, t0, t1, rtol, atol)
    return ComplexState(state.basis, sol.y[:, -1])


def _integrate(y0, h_builder, t0, t1, rtol, atol, t_eval=None, dense_output=False):
    def rhs(t, y):
        return -1j * (h_builder(t) @ y)

    sol = solve_ivp(
        rhs,
        (t0, t1),
        np.asarray(y0, dtype=complex),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        dense_output=dense_output,
    )
    if not sol.success:
        raise EvolutionError(
            f"integration failed on [{t0}, {t1}]: {sol.message}"
        )
    norm = np.linalg.norm(sol.y[:, -1])
    if abs(norm - 1.0) > 1e-6:
        raise EvolutionError(
            f"norm drifted to {norm!r} on [{t0}, {t1}]; tolerances too loose"
        )
    return sol


def evolve_oracle(
    state: ComplexState,
    h_builder: Callable[[float], np.ndarray],
    t0: float,
    t1: float,
    n_steps: int,
) -> ComplexState:
    """Midpoint matrix-exponential product with n_steps uniform slices.

    Exact for Hamiltonians that commute with themselves at different
    times; otherwise converges to :func:`evolve` as n_steps grows.  Kept
    free of adaptive-stepper machinery so the two routes stay independent.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    dt = (t1 - t0) / n_steps
    mids = t0 + (np.arange(n_steps) + 0.5) * dt
    hs = np.stack([h_builder(t) for t in mids])
    evals, evecs = np.linalg.eigh(hs)
    psi = state.amplitudes.copy()
    for j in range(n_steps):
        r = evecs[j]
        psi = r @ (np.exp(-1j * evals[j] * dt) * (r.conj().T @ psi))
    return ComplexState(state.basis, psi)


def _stage_builder(
    basis: tuple[str, ...], stage: DriveStage, params: SimulationParams
) -> Callable[[float], np.ndarray]:
    z0, v = params.z0_um, params.v_mps
    n = len(basis)
    if stage.kind == "wait_idle":
        zero = np.zeros((n, n), dtype=complex)
        return lambda t: zero
    if basis == GAP_BASIS:
        return lambda t: h_gap_four_level(t, stage, z0, v)
    if basis == DUAL_RAIL_BASIS:
        if stage.kind not in ("excite", "deexcite"):
            raise ValueError(f"stage {stage.kind!r} undefined for the 3-level basis")
        return lambda t: h_dual_rail(t, stage.rabi, stage.wavevector, z0, v)
    if basis == SINGLE_RAIL_BASIS:
        if stage.kind not in ("excite", "deexcite"):
            raise ValueError(f"stage {stage.kind!r} undefined for the 2-level basis")
        return lambda t: h_single_rail(t, stage.rabi, stage.wavevector, z0, v)
    raise ValueError(f"no stage dispatch for basis {basis!r}")


def run_sequence(
    initial: ComplexState,
    stages: Sequence[DriveStage],
    params: SimulationParams,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    samples_per_stage: int = 1000,
) -> TrajectoryResult:
    """Propagate through contiguous stages starting at t = 0.

    Each stage is integrated on its own interval so no step spans an
    amplitude discontinuity, while the atomic coordinate z0 + v*t keeps
    running across boundaries.  Rydberg residence time is accumulated by
    Simpson quadrature on the dense solver interpolant, independently of
    the coarse sample grid.
    """
    rydberg_idx = [i for i, lab in enumerate(initial.basis) if lab.startswith("r")]
    t_start = 0.0
    psi = initial.amplitudes
    times, pops, phases = [], [], []
    boundary_states = []
    stage_edges = []
    rydberg_time = 0.0

    for i, stage in enumerate(stages):
        t_end = t_start + stage.duration
        builder = _stage_builder(initial.basis, stage, params)
        grid = np.linspace(t_start, t_end, samples_per_stage + 1)
        sol = _integrate(
            psi, builder, t_start, t_end, rtol, atol,
            t_eval=grid, dense_output=True,
        )
        keep = slice(None) if i == 0 else slice(1, None)
        times.append(sol.t[keep])
        pops.append(np.abs(sol.y[:, keep].T) ** 2)
        phases.append(np.angle(sol.y[:, keep].T))

        if rydberg_idx:
            fine = np.linspace(t_start, t_end, 4001)
            dense = sol.sol(fine)
            occupancy = np.sum(np.abs(dense[rydberg_idx, :]) ** 2, axis=0)
            rydberg_time += float(simpson(occupancy, x=fine))

        psi = sol.y[:, -1]
        boundary_states.append(ComplexState(initial.basis, psi))
        stage_edges.append(t_end)
        t_start = t_end

    return TrajectoryResult(
        final_state=ComplexState(initial.basis, psi),
        times=np.concatenate(times),
        populations=np.vstack(pops),
        phases=np.vstack(phases),
        rydberg_time_us=rydberg_time,
        boundary_states=tuple(boundary_states),
        stage_edges=tuple(stage_edges),
    )


def trajectory_to_csv(result: TrajectoryResult, path: str) -> None:
    """Write the sampled trajectory as CSV with 12-significant-digit fields."""
    basis = result.final_state.basis
    header = (
        ["t_us"]
        + [f"pop_{lab}" for lab in basis]
        + [f"phase_{lab}" for lab in basis]
    )
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in range(result.times.shape[0]):
            fields = [f"{result.times[row]:.11e}"]
            fields += [f"{p:.11e}" for p in result.populations[row]]
            fields += [f"{p:.11e}" for p in result.phases[row]]
            fh.write(",".join(fields) + "\n")
