"""Large-signal averaged network: port resolution and state derivatives.

The switch pair is replaced in place by its period-average: a dependent
voltage source in the transistor position and a dependent current source
in the diode position, tied together by the (1-mu):mu transformer
relations, with the conduction drops (R_on1 on the transistor side; V_d
weighted by the diode conduction fraction, plus R_d, on the diode side)
in series.  Kirchhoff's laws around either topology then reduce the cell
to three scalars:

* ``i_sum``  -- summed inductor current entering the cell,
* ``W``      -- total voltage across the two transformer ports in
                series (the loop voltage the cell splits between its
                windings: V1 = (1-mu)*W, V2 = mu*W),
* ``mu``     -- effective duty.

In continuous conduction mu is the commanded duty D.  In discontinuous
conduction mu is pinned by the effective-resistance law
mu = V2/(V2 + Re*I1); because V2 and I1 themselves depend on mu through
the network, the value used here is the root of

    g(mu) = (mu - 1)*W(mu) + mu*Re*i_sum = 0,   W(mu) = a + b*mu + c*(1-mu)/mu

where a, b, c collect the topology's loop voltages (a: capacitor and
load-node contributions, b: current-proportional drops, c = V_d*D the
diode-drop term carrying the conduction fraction D*(1-mu)/mu).  g is
smooth and bracketed on (0, 1), so a safeguarded Newton iteration from
the c = 0 closed form converges in a handful of steps.

The larger of the two candidates wins: mu = max(D, mu_dcm), with ties
resolved to continuous conduction.  Degenerate operating points
(negative summed current, or no positive loop voltage to drive the
cell) fall back to mu = D and are flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .converter import ConverterSpec, SEPIC, effective_resistance
from .switchcell import CCM, DCM, MU_CLAMP_EPS

_MU_FLOOR = 1e-12


@dataclass
class PortSolution:
    """Resolved averaged-cell operating point at one (state, duty) pair."""

    mu: float
    mu_candidate: float   # DCM-law root before comparison with D
    mode: str
    fallback: bool        # True when the degenerate-point guard tripped
    V1: float             # transformer-port voltages [V]
    V2: float
    I1: float             # port currents [A]
    I2: float
    i_c1: float           # coupling-capacitor current [A]
    i_c2: float           # output-capacitor current [A]
    v_node1: float        # voltage at the transistor node [V]
    v_node2: float        # voltage at the diode-side coupling node [V]
    v_out: float          # load-node voltage [V]


def _loop_coefficients(spec, d, i_L1, i_L2, v_C1, v_C2):
    """Coefficients of W(mu) = a + b*mu + c*(1-mu)/mu for this state."""
    i_sum = i_L1 + i_L2
    if spec.kind == SEPIC:
        share = spec.R * spec.R_C2 / (spec.R + spec.R_C2)
        a = (v_C1 + spec.R_C1 * i_L1
             + (spec.R * v_C2) / (spec.R + spec.R_C2) + share * i_sum
             + spec.R_d * i_sum)
        b = -(spec.R_C1 + share + spec.R_d + spec.R_on1) * i_sum
    else:
        a = v_C1 + spec.R_C1 * i_L1 + spec.R_d * i_sum
        b = -(spec.R_C1 + spec.R_d + spec.R_on1) * i_sum
    c = spec.V_d * d if i_sum > 0.0 else 0.0
    return a, b, c


def _solve_mu_dcm(a, b, c, re_i):
    """Root of g(mu) = (mu-1)*W(mu) + mu*re_i on (0, 1).

    ``re_i`` is Re * i_sum.  Starts from the exact c = 0 quadratic root
    and polishes with Newton steps safeguarded by a shrinking bracket.
    """
    # c = 0 reduction: b*mu^2 + (a - b + re_i)*mu - a = 0, positive root
    # written in the cancellation-free form.
    p = a - b + re_i
    disc = p * p + 4.0 * a * b
    if disc < 0.0:
        disc = 0.0
    mu = 2.0 * a / (p + sqrt(disc))
    lo, hi = _MU_FLOOR, 1.0 - 1e-15
    if not (lo < mu < hi):
        mu = 0.5 * (lo + hi)
    scale = abs(a) + abs(b) + abs(c) + abs(re_i) + 1e-300
    for _ in range(60):
        w = a + b * mu + c * (1.0 - mu) / mu
        g = (mu - 1.0) * w + mu * re_i
        if g > 0.0:
            hi = mu
        else:
            lo = mu
        if abs(g) <= 1e-14 * scale:
            break
        dw = b - c / (mu * mu)
        dg = w + (mu - 1.0) * dw + re_i
        if dg != 0.0:
            step = g / dg
            nxt = mu - step
        else:
            nxt = 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - mu) <= 1e-16:
            mu = nxt
            break
        mu = nxt
    return mu


def resolve_ports(spec: ConverterSpec, d: float, x) -> PortSolution:
    """Resolve the averaged cell at state x = (i_L1, i_L2, v_C1, v_C2).

    Duty values outside (0, 1) are clamped just inside it, so callers
    integrating arbitrary stimuli never hand the cell a degenerate
    commanded duty.
    """
    i_L1, i_L2, v_C1, v_C2 = float(x[0]), float(x[1]), float(x[2]), float(x[3])
    if d < _MU_FLOOR:
        d = _MU_FLOOR
    elif d > 1.0 - MU_CLAMP_EPS:
        d = 1.0 - MU_CLAMP_EPS
    i_sum = i_L1 + i_L2
    a, b, c = _loop_coefficients(spec, d, i_L1, i_L2, v_C1, v_C2)

    fallback = (i_sum < 0.0) or (a <= 0.0)
    if fallback:
        mu = d
        mu_candidate = d
        mode = CCM
    else:
        re_i = effective_resistance(spec, d) * i_sum
        mu_candidate = _solve_mu_dcm(a, b, c, re_i)
        if mu_candidate > d:
            mu = min(mu_candidate, 1.0 - MU_CLAMP_EPS)
            mode = DCM
        else:
            mu = d
            mode = CCM

    w = a + b * mu + c * (1.0 - mu) / mu
    V1 = (1.0 - mu) * w
    V2 = mu * w
    I1 = mu * i_sum
    I2 = (1.0 - mu) * i_sum
    i_c1 = (1.0 - mu) * i_L1 - mu * i_L2
    v_node1 = V1 + spec.R_on1 * I1
    d2e = d * (1.0 - mu) / mu     # diode conduction fraction
    diode_drop = (spec.V_d * d2e if i_sum > 0.0 else 0.0) + spec.R_d * I2

    if spec.kind == SEPIC:
        i_c2 = (spec.R * I2 - v_C2) / (spec.R + spec.R_C2)
        v_out = v_C2 + spec.R_C2 * i_c2
        v_node2 = v_node1 - v_C1 - spec.R_C1 * i_c1
    else:
        i_c2 = -(spec.R * i_L2 + v_C2) / (spec.R + spec.R_C2)
        v_out = v_C2 + spec.R_C2 * i_c2
        v_node2 = -V2 + diode_drop

    return PortSolution(mu=mu, mu_candidate=mu_candidate, mode=mode,
                        fallback=fallback, V1=V1, V2=V2, I1=I1, I2=I2,
                        i_c1=i_c1, i_c2=i_c2, v_node1=v_node1,
                        v_node2=v_node2, v_out=v_out)


def derivative(spec: ConverterSpec, d: float, x, ports: PortSolution = None):
    """Averaged state derivative d/dt (i_L1, i_L2, v_C1, v_C2).

    Pass a pre-resolved ``ports`` to avoid resolving the cell twice.
    """
    if ports is None:
        ports = resolve_ports(spec, d, x)
    i_L1, i_L2 = float(x[0]), float(x[1])
    di_L1 = (spec.Vg - spec.R_L1 * i_L1 - ports.v_node1) / spec.L1
    if spec.kind == SEPIC:
        di_L2 = -(ports.v_node2 + spec.R_L2 * i_L2) / spec.L2
    else:
        di_L2 = (ports.v_out - ports.v_node2 - spec.R_L2 * i_L2) / spec.L2
    dv_C1 = ports.i_c1 / spec.C1
    dv_C2 = ports.i_c2 / spec.C2
    return np.array([di_L1, di_L2, dv_C1, dv_C2])


def output_voltage(spec: ConverterSpec, d: float, x) -> float:
    """Load-node voltage V0 at state x (includes the C2 ESR drop)."""
    return resolve_ports(spec, d, x).v_out
