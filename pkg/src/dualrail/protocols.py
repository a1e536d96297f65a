"""Single-atom protocols: excite/restore, gap-time shelving, baselines.

The resilient protocols drive both Rydberg rails; population leaves the
ground state in one effective pi pulse of duration pi/(sqrt(2)*Omega) and
returns after a 3*pi deexcitation pulse whose amplitude Omega_dp is tuned
slightly away from Omega to cancel the Doppler phase picked up during
excitation.  A negative Omega_dp additionally imprints the pi phase a
controlled-Z gate needs.  The traditional baseline drives a single rail
and is kept for comparison; its restored phase carries the uncompensated
Doppler term.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from dualrail.core import (
    AtomSpecies,
    SimulationParams,
    WavevectorSet,
    continuum_weight_mass,
    gap_wait_time,
    maxwell_grid,
    maxwell_weight,
    rad_per_us_to_mhz,
    mhz_to_rad_per_us,
)
from dualrail.hamiltonians import (
    DUAL_RAIL_BASIS,
    GAP_BASIS,
    SINGLE_RAIL_BASIS,
    DriveStage,
    deexcite_stage,
    excite_stage,
    idle_stage,
    infrared_stage,
    pi_time,
)
from dualrail.propagator import (
    DEFAULT_RTOL,
    ComplexState,
    TrajectoryResult,
    run_sequence,
)


class ConvergenceError(RuntimeError):
    """Raised when a velocity grid does not cover the Maxwell distribution."""


class OptimizationError(RuntimeError):
    """Raised when no interior optimum exists in the search bracket."""


class PhaseExtractionError(RuntimeError):
    """Raised when the Rydberg amplitude is too small to carry a phase."""


@dataclass(frozen=True)
class ProtocolOutcome:
    """Endpoint observables of one protocol run."""

    ground_population: float
    ground_phase: float
    r3_leak: float
    rydberg_time_us: float

    @property
    def error(self) -> float:
        return 1.0 - self.ground_population


@dataclass(frozen=True)
class AveragedOutcome:
    """Maxwell-weighted means over a velocity grid."""

    ground_population: float
    mean_abs_phase: float
    r3_leak: float
    rydberg_time_us: float
    weight_mass: float
    n_points: int

    @property
    def error(self) -> float:
        return 1.0 - self.ground_population


@dataclass(frozen=True)
class PhaseFit:
    """Doppler phase slope phi / (2 pi k v / Omega) over a velocity range."""

    slope_ratio: float
    residual: float
    velocities: np.ndarray
    ratios: np.ndarray


def analytic_w(t, omega: float, k: float, z0: float, v: float):
    """Perturbative rail amplitudes (w1, w2) of the cos/sin drive.

    Valid for k*v << Omega; a warning is emitted above k*v = 0.1*Omega.
    Accepts scalar or array t.  In the v -> 0, z0 = 0 limit
    w1 = -i sin(Omega t), w2 = 0 and |w1|^2 + |w2|^2 = sin^2(Omega t).
    """
    if abs(k * v) > 0.1 * abs(omega):
        warnings.warn(
            "analytic rail amplitudes requested outside their validity "
            f"range: k*v/Omega = {k * v / omega:.3f} > 0.1",
            stacklevel=2,
        )
    t = np.asarray(t, dtype=float)
    kz0 = k * z0
    kv = k * v
    out = []
    for alpha, f in ((1, np.sin), (2, np.cos)):
        w = np.zeros_like(t, dtype=complex)
        for eta in (+1.0, -1.0):
            rate = kv + eta * omega
            w += (f(kz0) - f(kz0 + rate * t)) / (2.0 * rate)
        w = (1j) ** (2 - alpha) * omega * w
        out.append(w if w.ndim else complex(w))
    return out[0], out[1]


def restore_stages(omega: float, omega_dp: float, k: float) -> list[DriveStage]:
    """Pi excitation followed by the 3*pi restoring pulse."""
    return [
        excite_stage(omega, k, pi_time(omega)),
        deexcite_stage(omega_dp, k, 3.0 * pi_time(omega_dp)),
    ]


def gap_stages(
    omega: float,
    omega_dp: float,
    omega_if: float,
    wavevectors: WavevectorSet,
    n_cycles: int,
) -> list[DriveStage]:
    """Excite, shelve through n infrared cycles, then restore."""
    return [
        excite_stage(omega, wavevectors.k_excite, pi_time(omega)),
        infrared_stage(
            omega_if, wavevectors.k_wait, gap_wait_time(n_cycles, omega_if)
        ),
        deexcite_stage(omega_dp, wavevectors.k_excite, 3.0 * pi_time(omega_dp)),
    ]


def _outcome_from_trajectory(
    result: TrajectoryResult, r3_leak: float = 0.0
) -> ProtocolOutcome:
    final = result.final_state
    return ProtocolOutcome(
        ground_population=final.population("1"),
        ground_phase=final.phase("1"),
        r3_leak=r3_leak,
        rydberg_time_us=result.rydberg_time_us,
    )


def run_excite_restore(
    params: SimulationParams, k: float, rtol: float = DEFAULT_RTOL
) -> ProtocolOutcome:
    """Immediate pi + 3*pi state transfer and restoration, no wait window."""
    stages = restore_stages(params.omega, params.omega_dp, k)
    initial = ComplexState.from_label(DUAL_RAIL_BASIS, "1")
    traj = run_sequence(initial, stages, params, rtol=rtol)
    return _outcome_from_trajectory(traj)


def run_gap_protocol(
    params: SimulationParams,
    wavevectors: WavevectorSet,
    rtol: float = DEFAULT_RTOL,
) -> ProtocolOutcome:
    """Restoration with an infrared-shelved wait window between the pulses.

    The wait duration must equal 4*n*pi/(sqrt(2)*Omega_IF) so the
    population completes full cycles through the auxiliary state; the
    residual population left in r3 at the end of the window is reported
    as ``r3_leak``.
    """
    expected = gap_wait_time(params.n_gap_cycles, params.omega_if)
    if params.t_wait_us and not math.isclose(
        params.t_wait_us, expected, rel_tol=1e-12
    ):
        raise ValueError(
            f"wait time {params.t_wait_us} breaks the full-cycle condition; "
            f"expected {expected} for n={params.n_gap_cycles}"
        )
    stages = gap_stages(
        params.omega,
        params.omega_dp,
        params.omega_if,
        wavevectors,
        params.n_gap_cycles,
    )
    initial = ComplexState.from_label(GAP_BASIS, "1")
    traj = run_sequence(initial, stages, params, rtol=rtol)
    leak = traj.boundary_states[1].population("r3")
    return _outcome_from_trajectory(traj, r3_leak=leak)


def run_traditional_restore(
    params: SimulationParams, k: float, rtol: float = DEFAULT_RTOL
) -> ProtocolOutcome:
    """Single-rail pi / idle wait / pi baseline.

    Both pulses use the same wavevector sign, so the Doppler phase
    k*v*t_wait accumulated in the Rydberg state survives into the
    restored ground-state phase.
    """
    t_pi = math.pi / abs(params.omega)
    stages = [excite_stage(params.omega, k, t_pi)]
    if params.t_wait_us > 0:
        stages.append(idle_stage(params.t_wait_us))
    stages.append(deexcite_stage(params.omega, k, t_pi))
    initial = ComplexState.from_label(SINGLE_RAIL_BASIS, "1")
    traj = run_sequence(initial, stages, params, rtol=rtol)
    return _outcome_from_trajectory(traj)


def extract_phase_phi(
    omega: float, k: float, v: float, rtol: float = DEFAULT_RTOL
) -> float:
    """Doppler phase modulation of the rail amplitudes after a pi pulse.

    Propagates from the ground state for pi/(sqrt(2)*Omega) at z0 = 0 and
    returns phi with C_r1 = -i C_r e^{+i phi}, C_r2 = -i C_r e^{-i phi};
    phi(v=0) = 0 fixes the branch.
    """
    params = SimulationParams(omega=omega, v_mps=v)
    stages = [excite_stage(omega, k, pi_time(omega))]
    initial = ComplexState.from_label(DUAL_RAIL_BASIS, "1")
    traj = run_sequence(initial, stages, params, rtol=rtol, samples_per_stage=2)
    c_r1 = traj.final_state.amplitude("r1")
    c_r2 = traj.final_state.amplitude("r2")
    if min(abs(c_r1), abs(c_r2)) < 1e-6:
        raise PhaseExtractionError(
            "rail amplitudes too small for a well-defined phase"
        )
    return 0.5 * float(np.angle(c_r1 / c_r2))


def phase_linearity(
    omega: float, k: float, velocities: Sequence[float], rtol: float = DEFAULT_RTOL
) -> PhaseFit:
    """Fit phi(pi/(sqrt(2)*Omega)) against its linear Doppler form."""
    velocities = np.asarray(velocities, dtype=float)
    phis = np.array([extract_phase_phi(omega, k, v, rtol) for v in velocities])
    ratios = phis * omega / (2.0 * math.pi * k * velocities)
    slope = float(np.mean(ratios))
    residual = float(np.max(np.abs(ratios - slope)))
    return PhaseFit(slope, residual, velocities, ratios)


def optimize_deexcitation(
    omega: float,
    k: float,
    v_ref: float = 0.05,
    sign: int = +1,
    bracket_fraction: float = 0.10,
    xatol_mhz: float = 1e-6,
    rtol: float = DEFAULT_RTOL,
) -> float:
    """Deexcitation amplitude minimizing the restored-population error.

    Scans |Omega_dp| in a bracket around |Omega| with a bounded scalar
    minimizer at 1e-6 MHz resolution, evaluating the pi + 3*pi sequence at
    the reference velocity.  The Doppler phase is linear in v, so the
    optimum found at one velocity holds for all of them.  Returns the
    signed amplitude in rad/us.

    At v_ref = 0 every 3*pi-area pulse restores the state exactly and the
    objective is degenerate; the convention is to return sign*|Omega|.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if v_ref == 0.0:
        return sign * abs(omega)

    omega_mhz = rad_per_us_to_mhz(abs(omega))
    lo = omega_mhz * (1.0 - bracket_fraction)
    hi = omega_mhz * (1.0 + bracket_fraction)

    def objective(x_mhz: float) -> float:
        params = SimulationParams(
            omega=abs(omega),
            omega_dp=sign * mhz_to_rad_per_us(x_mhz),
            v_mps=v_ref,
        )
        return run_excite_restore(params, k, rtol=rtol).error

    res = minimize_scalar(
        objective,
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": xatol_mhz},
    )
    if not res.success:
        raise OptimizationError(res.message)
    if min(res.x - lo, hi - res.x) < 10.0 * xatol_mhz:
        raise OptimizationError(
            f"optimum {res.x:.6f} MHz sits on the bracket edge "
            f"[{lo:.6f}, {hi:.6f}]; widen the bracket"
        )
    return sign * mhz_to_rad_per_us(res.x)


def grid_outcomes(
    runner: Callable[[float], ProtocolOutcome],
    velocities: Iterable[float],
    jobs: int = 1,
) -> list[ProtocolOutcome]:
    """Evaluate a protocol at each velocity, in deterministic grid order."""
    velocities = list(velocities)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(runner, velocities))
    return [runner(v) for v in velocities]


def maxwell_average(
    runner: Callable[[float], ProtocolOutcome],
    temperature_uk: float,
    species: AtomSpecies,
    velocities: np.ndarray | None = None,
    jobs: int = 1,
) -> AveragedOutcome:
    """Maxwell-weighted protocol averages over a symmetric velocity grid.

    The default grid spans +-5 thermal rms speeds with 201 points.  The
    grid must carry at least 0.999 of the continuum probability mass;
    single-point grids bypass weighting and return that outcome.
    """
    if velocities is None:
        velocities = maxwell_grid(temperature_uk, species)
    velocities = np.asarray(velocities, dtype=float)

    if velocities.size == 1:
        out = runner(float(velocities[0]))
        return AveragedOutcome(
            ground_population=out.ground_population,
            mean_abs_phase=abs(out.ground_phase),
            r3_leak=out.r3_leak,
            rydberg_time_us=out.rydberg_time_us,
            weight_mass=1.0,
            n_points=1,
        )

    mass = continuum_weight_mass(velocities, temperature_uk, species)
    if mass < 0.999:
        raise ConvergenceError(
            f"velocity grid carries only {mass:.6f} of the Maxwell weight"
        )

    weights = maxwell_weight(velocities, temperature_uk, species)
    weights = weights / np.sum(weights)
    outcomes = grid_outcomes(runner, velocities, jobs=jobs)

    pops = np.array([o.ground_population for o in outcomes])
    phases = np.array([abs(o.ground_phase) for o in outcomes])
    leaks = np.array([o.r3_leak for o in outcomes])
    tr = np.array([o.rydberg_time_us for o in outcomes])
    return AveragedOutcome(
        ground_population=float(weights @ pops),
        mean_abs_phase=float(weights @ phases),
        r3_leak=float(weights @ leaks),
        rydberg_time_us=float(weights @ tr),
        weight_mass=mass,
        n_points=velocities.size,
    )


def restore_runner(params: SimulationParams, k: float, v: float) -> ProtocolOutcome:
    return run_excite_restore(replace(params, v_mps=v), k)


def gap_runner(
    params: SimulationParams, wavevectors: WavevectorSet, v: float
) -> ProtocolOutcome:
    return run_gap_protocol(replace(params, v_mps=v), wavevectors)


def traditional_runner(
    params: SimulationParams, k: float, v: float
) -> ProtocolOutcome:
    return run_traditional_restore(replace(params, v_mps=v), k)


def sweep_to_csv(
    rows: Sequence[tuple[float, float, ProtocolOutcome]], path: str
) -> None:
    """Write (velocity, z0, outcome) sweep rows as CSV."""
    header = "v_mps,z0_um,pop_error,phase_rad,r3_leak,rydberg_time_us"
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for v, z0, out in rows:
            fields = (
                f"{v:.11e}",
                f"{z0:.11e}",
                f"{out.error:.11e}",
                f"{out.ground_phase:.11e}",
                f"{out.r3_leak:.11e}",
                f"{out.rydberg_time_us:.11e}",
            )
            fh.write(",".join(fields) + "\n")


def summary_report(avg: AveragedOutcome) -> str:
    """Key/value text report of a Maxwell-averaged protocol outcome."""
    lines = [
        f"mean_population = {avg.ground_population:.12g}",
        f"mean_abs_phase_rad = {avg.mean_abs_phase:.12g}",
        f"mean_r3_leak = {avg.r3_leak:.12g}",
        f"mean_rydberg_time_us = {avg.rydberg_time_us:.12g}",
        f"weight_mass = {avg.weight_mass:.12g}",
        f"grid_points = {avg.n_points}",
    ]
    return "\n".join(lines) + "\n"
