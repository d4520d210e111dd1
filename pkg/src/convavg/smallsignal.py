"""Small-signal linearization and frequency responses.

The averaged model is differentiated numerically around a DC operating
point to obtain a state-space quadruple per input (duty and source
voltage).  Differencing is mode-consistent: if a probe point resolves
to a different conduction mode than the operating point, the difference
switches to the one-sided form that stays in the operating mode.  An
operating point lying exactly on the mode boundary is flagged as
degenerate and linearized one-sided.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .avgmodel import derivative, resolve_ports
from .converter import ConverterSpec, ValidationError
from .dc import OperatingPoint

_KINK_TOL = 1e-9


class DegenerateOperatingPoint(UserWarning):
    """Operating point sits exactly on the mode-selection kink."""


@dataclass(frozen=True)
class LinearModel:
    """State-space linearization  dx/dt = A x + B_d d + B_g vg,  v0 = C x + D_d d + D_g vg."""

    A: np.ndarray
    B_d: np.ndarray
    B_g: np.ndarray
    C: np.ndarray
    D_d: float
    D_g: float
    spec: ConverterSpec
    D: float
    degenerate: bool = False


@dataclass(frozen=True)
class Margins:
    phase_margin_deg: object      # float, or None without a gain crossover
    gain_crossover_hz: object
    gain_margin_db: object        # float, inf without a phase crossover
    phase_crossover_hz: object


@dataclass(frozen=True)
class FrequencyResponse:
    f: np.ndarray
    response: np.ndarray          # complex transfer-function samples
    magnitude_db: np.ndarray
    phase_deg: np.ndarray         # unwrapped
    margins: Margins


def _eval(spec, d, x):
    """Derivative, output and mode at one probe point."""
    ports = resolve_ports(spec, d, x)
    return derivative(spec, d, x, ports), ports.v_out, ports.mode


def _column(spec, d, x, base_mode, probe):
    """Mode-consistent difference quotient for one input direction.

    probe(s) must return the perturbed (spec, d, x) for offset s.
    Returns (df, dv0, used_one_sided).
    """
    f_p, v_p, m_p = _eval(*probe(+1.0))
    f_m, v_m, m_m = _eval(*probe(-1.0))
    if m_p == base_mode and m_m == base_mode:
        return 0.5 * (f_p - f_m), 0.5 * (v_p - v_m), False
    f_0, v_0, _ = _eval(spec, d, x)
    if m_p == base_mode:
        return f_p - f_0, v_p - v_0, True
    if m_m == base_mode:
        return f_0 - f_m, v_0 - v_m, True
    # neither probe stays in the operating mode; fall back to central
    return 0.5 * (f_p - f_m), 0.5 * (v_p - v_m), True


def linearize(spec: ConverterSpec, op: OperatingPoint) -> LinearModel:
    """Linearize the averaged model around a solved operating point.

    The duty and the source voltage are treated as the two inputs; the
    load voltage is the output.  A degenerate operating point (mode
    boundary) produces a warning and a flagged model.
    """
    if not op.converged:
        raise ValidationError("cannot linearize an unconverged operating point")
    d = float(op.D)
    x = op.state.as_array()
    base = resolve_ports(spec, d, x)
    degenerate = abs(base.mu_candidate - d) <= _KINK_TOL * max(1.0, d)
    if degenerate:
        warnings.warn(
            "operating point lies on the mode boundary; "
            "using one-sided differences", DegenerateOperatingPoint)

    A = np.zeros((4, 4))
    C = np.zeros(4)
    for j in range(4):
        h = 1e-6 * (abs(x[j]) + 1.0)

        def probe(s, j=j, h=h):
            xp = x.copy()
            xp[j] += s * h
            return spec, d, xp

        df, dv, _ = _column(spec, d, x, base.mode, probe)
        A[:, j] = df / h
        C[j] = dv / h

    h_d = 1e-6 * (abs(d) + 1.0)
    df, dv, _ = _column(spec, d, x, base.mode,
                        lambda s: (spec, d + s * h_d, x))
    B_d = df / h_d
    D_d = dv / h_d

    h_g = 1e-6 * (abs(spec.Vg) + 1.0)
    df, dv, _ = _column(
        spec, d, x, base.mode,
        lambda s: (dataclasses.replace(spec, Vg=spec.Vg + s * h_g), d, x))
    B_g = df / h_g
    D_g = dv / h_g

    return LinearModel(A=A, B_d=B_d, B_g=B_g, C=C, D_d=float(D_d),
                       D_g=float(D_g), spec=spec, D=d,
                       degenerate=bool(degenerate))


def default_frequency_grid(spec: ConverterSpec, points_per_decade: int = 100) -> np.ndarray:
    """Logarithmic grid from 10 Hz up to half the switching frequency."""
    f_lo, f_hi = 10.0, 0.5 * spec.f_s
    if f_hi <= f_lo:
        raise ValidationError("switching frequency too low for the default grid")
    n = max(2, int(round(np.log10(f_hi / f_lo) * points_per_decade)) + 1)
    return np.logspace(np.log10(f_lo), np.log10(f_hi), n)


def transfer_at(model: LinearModel, input: str, f):
    """Evaluate the selected transfer function at frequencies f (Hz)."""
    if input == "duty":
        B, D_feed = model.B_d, model.D_d
    elif input == "source":
        B, D_feed = model.B_g, model.D_g
    else:
        raise ValidationError("input must be 'duty' or 'source', got %r" % (input,))
    f = np.atleast_1d(np.asarray(f, dtype=float))
    out = np.empty(f.shape, dtype=complex)
    eye = np.eye(model.A.shape[0])
    for k, fk in enumerate(f):
        s = 2j * np.pi * fk
        try:
            out[k] = model.C @ np.linalg.solve(s * eye - model.A, B) + D_feed
        except np.linalg.LinAlgError:
            # resolvent singular: an eigenvalue sits on the imaginary
            # axis at exactly this frequency
            out[k] = complex(np.inf, 0.0)
    return out


def _normalize_phase(phase, negative_dc_gain=None):
    """Shift an unwrapped phase (degrees) into the reporting branch.

    The branch puts the first sample into (-360, 0], so an integrator
    chain reads as accumulated lag (a flat +90 reads as -270).  A
    response with negative DC gain is folded by +180 so margins refer
    to the sign-corrected loop and a phase margin above 180 degrees
    stays representable.  When the sign is not supplied it is guessed
    from the first sample: a start inside (-270, -135) is taken as an
    inverting plant plus ordinary lag.
    """
    start = phase[0]
    shift = 0.0
    while start + shift > 0.0:
        shift -= 360.0
    while start + shift <= -360.0:
        shift += 360.0
    if negative_dc_gain is None:
        negative_dc_gain = -270.0 < start + shift < -135.0
    if negative_dc_gain:
        shift += 180.0
    return phase + shift


def _interp_log_f(f0, f1, y0, y1, y_target):
    """Interpolate the crossing frequency on a log-f axis."""
    lf0, lf1 = np.log10(f0), np.log10(f1)
    if y1 == y0:
        return 10.0 ** (0.5 * (lf0 + lf1))
    w = (y_target - y0) / (y1 - y0)
    return 10.0 ** (lf0 + w * (lf1 - lf0))


def _interp_at_f(f, y, fc):
    lf = np.log10(f)
    return float(np.interp(np.log10(fc), lf, y))


def extract_margins(f: np.ndarray, response: np.ndarray,
                    negative_dc_gain=None) -> Margins:
    """Gain and phase margins from sampled frequency-response data.

    The phase margin is taken at the last unity-gain crossing; the gain
    margin is the worst case over all -180-degree crossings of the
    normalized phase (see _normalize_phase; pass negative_dc_gain to
    pin the sign fold instead of inferring it from the samples).
    """
    f = np.asarray(f, dtype=float)
    response = np.asarray(response, dtype=complex)
    if f.size < 2:
        raise ValidationError("margin extraction needs at least two samples")
    mag_db = 20.0 * np.log10(np.maximum(np.abs(response), 1e-300))
    phase = _normalize_phase(np.degrees(np.unwrap(np.angle(response))),
                             negative_dc_gain)

    pm = None
    f_gc = None
    crossings = []
    for i in range(f.size - 1):
        a, b = mag_db[i], mag_db[i + 1]
        if a == 0.0:
            crossings.append(f[i])
        elif a * b < 0.0:
            crossings.append(_interp_log_f(f[i], f[i + 1], a, b, 0.0))
    if mag_db[-1] == 0.0:
        crossings.append(f[-1])
    if crossings:
        f_gc = crossings[-1]
        pm = 180.0 + _interp_at_f(f, phase, f_gc)

    gm = np.inf
    f_pc = None
    shifted = phase + 180.0
    for i in range(f.size - 1):
        a, b = shifted[i], shifted[i + 1]
        hit = None
        if a == 0.0:
            hit = f[i]
        elif a * b < 0.0:
            hit = _interp_log_f(f[i], f[i + 1], a, b, 0.0)
        if hit is not None:
            candidate = -_interp_at_f(f, mag_db, hit)
            if candidate < gm:
                gm = candidate
                f_pc = hit
    if shifted[-1] == 0.0:
        candidate = -mag_db[-1]
        if candidate < gm:
            gm = candidate
            f_pc = f[-1]

    return Margins(phase_margin_deg=pm, gain_crossover_hz=f_gc,
                   gain_margin_db=float(gm) if np.isfinite(gm) else np.inf,
                   phase_crossover_hz=f_pc)


def frequency_response(model: LinearModel, input: str = "duty",
                       f=None) -> FrequencyResponse:
    """Transfer function samples plus stability margins over a grid."""
    if f is None:
        f = default_frequency_grid(model.spec)
    f = np.atleast_1d(np.asarray(f, dtype=float))
    if np.any(f <= 0.0):
        raise ValidationError("frequencies must be positive")
    if np.any(np.diff(f) <= 0.0):
        raise ValidationError("frequency grid must be strictly increasing")
    H = transfer_at(model, input, f)
    B, D_feed = (model.B_d, model.D_d) if input == "duty" else (model.B_g, model.D_g)
    try:
        g0 = float(model.C @ np.linalg.solve(-model.A, B) + D_feed)
        negative = g0 < 0.0
    except np.linalg.LinAlgError:
        negative = None
    mag_db = 20.0 * np.log10(np.maximum(np.abs(H), 1e-300))
    phase = _normalize_phase(np.degrees(np.unwrap(np.angle(H))), negative)
    return FrequencyResponse(f=f, response=H, magnitude_db=mag_db,
                             phase_deg=phase,
                             margins=extract_margins(f, H, negative))
