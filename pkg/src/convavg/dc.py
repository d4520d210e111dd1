"""DC operating-point solver for the averaged converter model.

Finds the state (i_L1, i_L2, v_C1, v_C2) at which every averaged
inductor voltage and capacitor current vanishes, with the effective duty
mu resolved inside the residual at every evaluation so the solver walks
freely across the CCM/DCM boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .avgmodel import derivative, resolve_ports
from .converter import (CUK, ConverterSpec, OperatingPointRequest,
                        dcm_predicted, equivalent_inductance)

_MAX_ITERATIONS = 200
_TOL = 1e-9
_MAX_HALVINGS = 20
_FD_REL_STEP = 1e-6


class SolverError(RuntimeError):
    pass


class NonConvergence(SolverError):
    """Newton iteration exhausted its budget without meeting tolerance."""

    def __init__(self, message, iterations, residual_norm):
        super().__init__(message)
        self.iterations = iterations
        self.residual_norm = residual_norm


class SingularJacobian(SolverError):
    """The finite-difference Jacobian could not be factored."""


@dataclass(frozen=True)
class StateVector:
    """Averaged converter state."""

    i_L1: float
    i_L2: float
    v_C1: float
    v_C2: float

    def as_array(self):
        return np.array([self.i_L1, self.i_L2, self.v_C1, self.v_C2])

    @classmethod
    def from_array(cls, x):
        return cls(i_L1=float(x[0]), i_L2=float(x[1]),
                   v_C1=float(x[2]), v_C2=float(x[3]))


@dataclass(frozen=True)
class OperatingPoint:
    """Solved DC operating point of one converter at one duty cycle."""

    D: float
    state: StateVector
    V0: float
    mu: float
    mode: str
    residual_norm: float
    iterations: int = 0
    converged: bool = True


def _scales(spec, x):
    v_scale = abs(spec.Vg) + abs(x[2]) + abs(x[3]) + 1.0
    i_scale = abs(x[0]) + abs(x[1]) + 1.0
    return v_scale, i_scale


def _residual(spec, d, x):
    """Averaged branch residuals in physical units (volts, amps)."""
    f = derivative(spec, d, x)
    return f * np.array([spec.L1, spec.L2, spec.C1, spec.C2])


def _residual_norm(spec, d, x):
    r = _residual(spec, d, x)
    v_scale, i_scale = _scales(spec, x)
    return max(abs(r[0]) / v_scale, abs(r[1]) / v_scale,
               abs(r[2]) / i_scale, abs(r[3]) / i_scale)


def _jacobian(spec, d, x):
    J = np.zeros((4, 4))
    for j in range(4):
        h = _FD_REL_STEP * (abs(x[j]) + 1.0)
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (_residual(spec, d, xp) - _residual(spec, d, xm)) / (2.0 * h)
    return J


def initial_guess(spec: ConverterSpec, D: float) -> np.ndarray:
    """Closed-form lossless starting state for the Newton iteration."""
    if spec.Vg <= 0.0:
        return np.array([0.0, 0.0, max(spec.Vg, 0.0), 0.0])
    if dcm_predicted(spec, D):
        v0 = spec.Vg * D * sqrt(spec.R / (2.0 * equivalent_inductance(spec) * spec.f_s))
    else:
        v0 = spec.Vg * D / (1.0 - D)
    i_out = v0 / spec.R
    i_in = v0 * v0 / (spec.R * spec.Vg)
    if spec.kind == CUK:
        return np.array([i_in, i_out, spec.Vg + v0, -v0])
    return np.array([i_in, i_out, spec.Vg, v0])


def solve_dc(request: OperatingPointRequest, initial=None, *,
             max_iterations: int = _MAX_ITERATIONS, tol: float = _TOL) -> OperatingPoint:
    """Solve for the DC operating point of the averaged model.

    Damped Newton iteration on the four averaged branch equations.  The
    iteration converges when both the scaled residual norm and the
    relative state update drop below ``tol``.

    Args:
        request: converter plus commanded duty cycle.
        initial: optional warm-start state (array-like of four values);
            defaults to the closed-form lossless estimate.
        max_iterations: Newton iteration budget.
        tol: relative convergence tolerance.

    Raises:
        NonConvergence: iteration budget exhausted.
        SingularJacobian: the residual Jacobian lost rank.
    """
    spec, d = request.spec, request.D
    if initial is None:
        x = initial_guess(spec, d)
    else:
        if hasattr(initial, "as_array"):
            initial = initial.as_array()
        x = np.asarray(initial, dtype=float).copy()
        if x.shape != (4,):
            raise ValueError("initial state must have four entries")

    norm = _residual_norm(spec, d, x)
    iterations = 0
    while norm > tol:
        if iterations >= max_iterations:
            raise NonConvergence(
                "no convergence after %d iterations (residual %.3e)"
                % (iterations, norm), iterations, norm)
        J = _jacobian(spec, d, x)
        r = _residual(spec, d, x)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(
                "Jacobian singular at iteration %d" % iterations) from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobian(
                "Jacobian produced a non-finite step at iteration %d" % iterations)

        lam = 1.0
        accepted = None
        for _ in range(_MAX_HALVINGS + 1):
            trial = x + lam * step
            trial_norm = _residual_norm(spec, d, trial)
            if trial_norm < norm or not np.isfinite(norm):
                accepted = (trial, trial_norm, lam)
                break
            lam *= 0.5
        if accepted is None:
            # No damping factor reduced the residual; take the smallest
            # step anyway so kinked regions cannot stall the iteration.
            trial = x + lam * step
            accepted = (trial, _residual_norm(spec, d, trial), lam)
        new_x, new_norm, lam = accepted

        v_scale, i_scale = _scales(spec, x)
        rel_update = max(abs(new_x[0] - x[0]) / i_scale,
                         abs(new_x[1] - x[1]) / i_scale,
                         abs(new_x[2] - x[2]) / v_scale,
                         abs(new_x[3] - x[3]) / v_scale)
        x, norm = new_x, new_norm
        iterations += 1
        if norm <= tol and rel_update <= tol:
            break
        if norm <= tol and lam == 1.0 and rel_update <= 10.0 * tol:
            break

    ports = resolve_ports(spec, d, x)
    return OperatingPoint(D=d, state=StateVector.from_array(x), V0=ports.v_out,
                          mu=ports.mu, mode=ports.mode, residual_norm=norm,
                          iterations=iterations, converged=True)


def _failed_point(d, exc):
    nan = float("nan")
    residual = getattr(exc, "residual_norm", nan)
    iterations = getattr(exc, "iterations", 0)
    return OperatingPoint(D=d, state=StateVector(nan, nan, nan, nan), V0=nan,
                          mu=nan, mode="none", residual_norm=residual,
                          iterations=iterations, converged=False)


def sweep_duty(spec: ConverterSpec, D_from: float, D_to: float,
               D_step: float) -> list:
    """Operating points on an inclusive duty grid, warm-starting each
    solve from the previous converged state.

    A point that fails to converge is recorded with ``converged=False``
    (NaN state) and the sweep continues from the closed-form guess at
    the next duty.
    """
    if D_step <= 0.0:
        raise ValueError("duty step must be positive")
    n = int(round((D_to - D_from) / D_step))
    if n < 0:
        raise ValueError("empty duty range")
    duties = [D_from + k * D_step for k in range(n + 1)]
    points = []
    warm = None
    for d in duties:
        request = OperatingPointRequest(spec=spec, D=d)
        try:
            op = solve_dc(request, initial=warm)
        except SolverError as exc:
            points.append(_failed_point(d, exc))
            warm = None
            continue
        points.append(op)
        warm = op.state.as_array()
    return points
