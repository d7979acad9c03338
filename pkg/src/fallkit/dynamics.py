"""Rigid-body model of a standing human as an inverted pendulum.

The subject is a rod pivoting at the ground under gravity alone:

    theta'' = (m * g * d / I) * sin(theta)

with theta measured from the upward vertical (0 upright, pi/2 at the
floor).  Two inertia models are supported: a uniform rod (I = m*L^2/3,
d = L/2) and a point mass at the tip (I = m*L^2, d = L).

Integration is classical fixed-step RK4.  Along with the simulator the
module carries its own validation oracles: total mechanical energy
(conserved by the frictionless joint) and the closed-form angular
velocity at a given angle from the energy balance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels

# Impact threshold: the torso axis reaches the floor plane.  The test is
# on |theta| so mirrored (negated) scenarios are equally valid.
FLOOR_ANGLE = math.pi / 2.0


class InertiaModel(Enum):
    UNIFORM_ROD = "uniform_rod"
    POINT_MASS = "point_mass"


class Termination(Enum):
    IMPACT = "impact"
    TIMEOUT = "timeout"
    RECOVERED = "recovered"


class AlreadyDownError(ValueError):
    """Initial angle already at or past the floor."""


class UnreachableAngleError(ValueError):
    """Requested angle is not reachable from the given initial state."""


@dataclass(frozen=True)
class PendulumParams:
    """Physical description of one simulated subject.

    length is the full subject height used as the rod length, in meters.
    """

    length: float
    mass: float
    gravity: float = 9.81
    inertia_model: InertiaModel = InertiaModel.UNIFORM_ROD

    def __post_init__(self) -> None:
        if not (self.length > 0.0 and self.mass > 0.0 and self.gravity > 0.0):
            raise ValueError(
                f"length, mass and gravity must be positive, got "
                f"({self.length}, {self.mass}, {self.gravity})"
            )

    @property
    def inertia(self) -> float:
        """Moment of inertia about the pivot, kg m^2."""
        if self.inertia_model is InertiaModel.UNIFORM_ROD:
            return self.mass * self.length**2 / 3.0
        return self.mass * self.length**2

    @property
    def com_distance(self) -> float:
        """Distance from the pivot to the center of mass, m."""
        if self.inertia_model is InertiaModel.UNIFORM_ROD:
            return self.length / 2.0
        return self.length

    @property
    def accel_coeff(self) -> float:
        """m*g*d/I, the coefficient of sin(theta) in the equation of motion."""
        return self.mass * self.gravity * self.com_distance / self.inertia


@dataclass(frozen=True)
class PendulumState:
    """Angle (rad), angular velocity (rad/s) and time (s)."""

    theta: float
    omega: float
    t: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta) and math.isfinite(self.omega) and math.isfinite(self.t)):
            raise ValueError(f"state must be finite, got ({self.theta}, {self.omega}, {self.t})")


@dataclass
class Trajectory:
    """Uniformly sampled (t, theta, omega) series from one simulation.

    Sample arrays are stored column-wise; `samples` materializes them as
    PendulumState objects when object access is more convenient.
    """

    dt: float
    t: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    terminated_by: Termination = field(default=Termination.TIMEOUT)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def samples(self) -> list[PendulumState]:
        return [
            PendulumState(float(th), float(om), float(tt))
            for tt, th, om in zip(self.t, self.theta, self.omega)
        ]

    def final_state(self) -> PendulumState:
        return PendulumState(float(self.theta[-1]), float(self.omega[-1]), float(self.t[-1]))

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)


def angular_acceleration(params: PendulumParams, theta):
    """Angular acceleration (m*g*d/I)*sin(theta); accepts scalars or arrays."""
    return params.accel_coeff * np.sin(theta)


def step_rk4(params: PendulumParams, state: PendulumState, dt: float) -> PendulumState:
    """Advance the state by one RK4 step of size dt."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    theta, omega = _kernels.rk4_step(params.accel_coeff, state.theta, state.omega, dt)
    return PendulumState(theta, omega, state.t + dt)


def advance(params: PendulumParams, state: PendulumState, dt: float, n_steps: int) -> PendulumState:
    """n_steps RK4 steps without recording the intermediate states."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n_steps < 0:
        raise ValueError(f"n_steps must be nonnegative, got {n_steps}")
    theta, omega = _kernels.rk4_advance(params.accel_coeff, state.theta, state.omega, dt, n_steps)
    return PendulumState(theta, omega, state.t + n_steps * dt)


def simulate_fall(
    params: PendulumParams,
    initial: PendulumState,
    dt: float = 1e-3,
    max_t: float = 30.0,
) -> Trajectory:
    """Integrate a passive fall until floor impact or the time limit.

    Samples are recorded every dt.  The run stops at the first sample with
    |theta| >= pi/2 (no sub-step refinement of the impact instant; the dt
    quantization is far below any downstream tolerance).

    Raises AlreadyDownError if the initial angle is already at or past
    the floor.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not max_t > 0.0:
        raise ValueError(f"max_t must be positive, got {max_t}")
    if abs(initial.theta) >= FLOOR_ANGLE:
        raise AlreadyDownError(f"initial theta {initial.theta} is already at or past pi/2")

    n_max = int(round(max_t / dt))
    thetas, omegas, stop_idx = _kernels.passive_trajectory(
        params.accel_coeff, initial.theta, initial.omega, dt, 1, n_max, FLOOR_ANGLE, 0
    )
    t = initial.t + dt * np.arange(thetas.shape[0])
    terminated = Termination.IMPACT if stop_idx >= 0 else Termination.TIMEOUT
    return Trajectory(dt=dt, t=t, theta=thetas, omega=omegas, terminated_by=terminated)


def energy_of(params: PendulumParams, theta, omega):
    """Total mechanical energy for angle/velocity scalars or arrays.

    Potential energy is referenced to the pivot plane, so the energy of a
    horizontal pendulum at rest is exactly zero.
    """
    kinetic = 0.5 * params.inertia * np.square(omega)
    potential = params.mass * params.gravity * params.com_distance * np.cos(theta)
    return kinetic + potential


def total_energy(params: PendulumParams, state: PendulumState) -> float:
    """Total mechanical energy of one state, joules."""
    return float(energy_of(params, state.theta, state.omega))


def omega_at_angle(params: PendulumParams, theta0: float, omega0: float, theta: float) -> float:
    """Closed-form angular velocity at `theta` from the energy balance.

    omega(theta) = sqrt(omega0^2 + 2*(m*g*d/I)*(cos(theta0) - cos(theta)))

    Valid on the forward branch (theta >= theta0 for omega0 >= 0).  Raises
    UnreachableAngleError when the radicand is negative, i.e. the pendulum
    never reaches `theta` from the given initial state.
    """
    radicand = omega0**2 + 2.0 * params.accel_coeff * (math.cos(theta0) - math.cos(theta))
    if radicand < 0.0:
        raise UnreachableAngleError(
            f"theta={theta} is not reachable from (theta0={theta0}, omega0={omega0})"
        )
    return math.sqrt(radicand)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write `t,theta,omega` rows with 17 significant digits per value."""
    data = np.column_stack([traj.t, traj.theta, traj.omega])
    with open(path, "w", newline="") as fh:
        fh.write("t,theta,omega\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")
