"""Tests for the DC operating-point solver.

Expected numbers were frozen from independent closed-form evaluation
(loss-free-resistor power balance) and a bisection root-finder on the
effective duty, before the Newton solver existed.
"""

import dataclasses
import math

import numpy as np
import pytest

from convavg import (
    SEPIC,
    CUK,
    CCM,
    DCM,
    ConverterSpec,
    NonConvergence,
    OperatingPointRequest,
    StateVector,
    dcm_predicted,
    effective_resistance,
    equivalent_inductance,
    initial_guess,
    resolve_ports,
    solve_dc,
    sweep_duty,
)

SEPIC_BENCH = ConverterSpec(kind=SEPIC, Vg=62.0, R=52.0, L1=13e-3, L2=166e-6,
                         C1=0.5e-6, C2=1000e-6, f_s=50e3, R_L1=0.13, R_L2=0.11,
                         R_on1=0.031, V_d=0.7, R_d=0.12, R_C1=0.27, R_C2=0.11)
CUK_BENCH = ConverterSpec(kind=CUK, Vg=25.0, R=100.0, L1=1e-3, L2=1e-3,
                       C1=850e-6, C2=47e-6, f_s=20e3, R_L1=0.15, R_L2=0.2,
                       R_on1=0.031, V_d=0.75, R_d=0.11, R_C1=0.2, R_C2=0.3)

# loss-free-resistor closed forms, frozen:
#   sepic ideal: V0 = Vg*sqrt(R/Re) = 62*sqrt(52/409.77) = 22.086
#   cuk ideal:   |V0| = Vg*D*sqrt(R/(2*L*fs)) = 23.479
SEPIC_IDEAL_V0 = 2.2086381128e1
CUK_IDEAL_V0 = 2.3478713764e1
# bisection oracle on the effective-duty closure, frozen:
SEPIC_IDEAL_MU = 0.262663000020


def test_sepic_ideal_dc_matches_power_balance():
    spec = dataclasses.replace(SEPIC_BENCH, ideal=True)
    op = solve_dc(OperatingPointRequest(spec=spec, D=0.2))
    assert op.converged
    assert op.mode == DCM
    ref = 62.0 * math.sqrt(52.0 / effective_resistance(spec, 0.2))
    assert abs(ref - SEPIC_IDEAL_V0) < 1e-9
    assert op.V0 == pytest.approx(SEPIC_IDEAL_V0, rel=1e-3)
    # solver should land far tighter than the 0.1% contract
    assert op.V0 == pytest.approx(SEPIC_IDEAL_V0, rel=1e-8)


def test_sepic_ideal_effective_duty_matches_bisection_oracle():
    spec = dataclasses.replace(SEPIC_BENCH, ideal=True)
    op = solve_dc(OperatingPointRequest(spec=spec, D=0.2))
    assert op.mu == pytest.approx(SEPIC_IDEAL_MU, abs=1e-8)
    assert op.mu > 0.2


def test_cuk_ideal_dc_matches_conversion_law():
    spec = dataclasses.replace(CUK_BENCH, ideal=True)
    op = solve_dc(OperatingPointRequest(spec=spec, D=0.42))
    leq = equivalent_inductance(spec)
    ref = 25.0 * 0.42 * math.sqrt(100.0 / (2.0 * leq * spec.f_s))
    assert abs(ref - CUK_IDEAL_V0) < 1e-9
    assert abs(op.V0) == pytest.approx(CUK_IDEAL_V0, rel=1e-8)
    assert op.V0 < 0.0  # inverting topology
    assert op.mode == DCM


def test_sepic_nonideal_dc_point():
    op = solve_dc(OperatingPointRequest(spec=SEPIC_BENCH, D=0.2))
    assert op.converged
    assert op.mode == DCM
    # nameplate: 22 V within 5%
    assert abs(op.V0 - 22.0) / 22.0 < 0.05
    # regression against the frozen solve
    assert op.V0 == pytest.approx(21.8363946042, rel=1e-8)
    assert op.state.i_L1 == pytest.approx(0.151245857317, rel=1e-6)
    assert op.state.i_L2 == pytest.approx(0.419930665465, rel=1e-6)
    assert op.state.v_C1 == pytest.approx(62.0265304117, rel=1e-6)
    assert op.mu == pytest.approx(0.264797048342, rel=1e-6)
    assert op.residual_norm <= 1e-9


def test_cuk_nonideal_dc_point():
    op = solve_dc(OperatingPointRequest(spec=CUK_BENCH, D=0.42))
    assert op.converged
    assert op.V0 < 0.0
    assert op.V0 == pytest.approx(-23.2398755, rel=1e-6)
    assert op.mu == pytest.approx(0.486465, abs=2e-5)
    assert op.mode == DCM


def test_load_current_identity():
    # charge balance on the output capacitor pins the averaged second
    # inductor current to the load current
    for spec, d in ((SEPIC_BENCH, 0.2), (CUK_BENCH, 0.42)):
        op = solve_dc(OperatingPointRequest(spec=spec, D=d))
        assert op.state.i_L2 == pytest.approx(abs(op.V0) / spec.R, rel=1e-8)


def test_ideal_dcm_port_identities():
    # loss-free-resistor relations at the resolved ideal equilibrium
    spec = dataclasses.replace(SEPIC_BENCH, ideal=True)
    op = solve_dc(OperatingPointRequest(spec=spec, D=0.2))
    ports = resolve_ports(spec, 0.2, op.state.as_array())
    re = effective_resistance(spec, 0.2)
    assert ports.I1 == pytest.approx(ports.V1 / re, rel=1e-9)
    assert ports.V1 * ports.I1 == pytest.approx(ports.V2 * ports.I2, rel=1e-9)
    # input and output power agree
    assert spec.Vg ** 2 / re == pytest.approx(op.V0 ** 2 / spec.R, rel=1e-8)


def test_ideal_volt_second_balance():
    # D1*V1 == D2*V2 at every ideal equilibrium
    for spec0, d in ((SEPIC_BENCH, 0.2), (CUK_BENCH, 0.42)):
        spec = dataclasses.replace(spec0, ideal=True)
        op = solve_dc(OperatingPointRequest(spec=spec, D=d))
        ports = resolve_ports(spec, d, op.state.as_array())
        d1 = d
        d2 = d1 * (1.0 - ports.mu) / ports.mu
        assert d1 * ports.V1 == pytest.approx(d2 * ports.V2,
                                              rel=1e-9, abs=1e-9 * abs(ports.V1))


def test_vanishing_duty_gives_vanishing_output():
    # deep-DCM output scales linearly with duty and heads to zero
    spec = dataclasses.replace(SEPIC_BENCH, ideal=True)
    a = solve_dc(OperatingPointRequest(spec=spec, D=1e-4))
    b = solve_dc(OperatingPointRequest(spec=spec, D=1e-5))
    assert abs(a.V0) < 0.02
    assert abs(b.V0) == pytest.approx(abs(a.V0) / 10.0, rel=1e-3)


def test_mode_agrees_with_predictor_on_ideal_spot_checks():
    spec = dataclasses.replace(SEPIC_BENCH, ideal=True)
    for d in (0.1, 0.3, 0.43, 0.45, 0.6, 0.85):
        op = solve_dc(OperatingPointRequest(spec=spec, D=d))
        want = DCM if dcm_predicted(spec, d) else CCM
        assert op.mode == want, "mode mismatch at D=%g" % d


def test_initial_guess_is_close_for_ideal_converter():
    spec = dataclasses.replace(SEPIC_BENCH, ideal=True)
    guess = initial_guess(spec, 0.2)
    op = solve_dc(OperatingPointRequest(spec=spec, D=0.2))
    assert abs(guess[3] - op.V0) / abs(op.V0) < 0.05


def test_solver_accepts_state_vector_initial():
    op = solve_dc(OperatingPointRequest(spec=SEPIC_BENCH, D=0.2))
    again = solve_dc(OperatingPointRequest(spec=SEPIC_BENCH, D=0.2),
                     initial=op.state)
    assert again.V0 == pytest.approx(op.V0, rel=1e-10)
    assert again.iterations <= op.iterations


def test_nonconvergence_raises_with_tiny_budget():
    with pytest.raises(NonConvergence) as info:
        solve_dc(OperatingPointRequest(spec=SEPIC_BENCH, D=0.2),
                 initial=np.array([50.0, -80.0, 900.0, -400.0]),
                 max_iterations=1)
    assert info.value.iterations == 1
    assert info.value.residual_norm > 0.0


def test_sweep_matches_pointwise_cold_solves():
    ops = sweep_duty(SEPIC_BENCH, 0.25, 0.45, 0.05)
    assert len(ops) == 5
    for op in ops:
        cold = solve_dc(OperatingPointRequest(spec=SEPIC_BENCH, D=op.D))
        assert op.V0 == pytest.approx(cold.V0, rel=1e-6)
        assert abs(op.state.i_L1 - cold.state.i_L1) <= 1e-6 * max(
            1.0, abs(cold.state.i_L1))


def test_single_point_sweep_equals_solve():
    ops = sweep_duty(CUK_BENCH, 0.42, 0.42, 0.01)
    assert len(ops) == 1
    direct = solve_dc(OperatingPointRequest(spec=CUK_BENCH, D=0.42))
    assert ops[0].V0 == pytest.approx(direct.V0, rel=1e-9)


def test_sweep_rejects_bad_step():
    with pytest.raises(ValueError):
        sweep_duty(SEPIC_BENCH, 0.2, 0.4, -0.01)


def test_cuk_sweep_tracks_ideal_law_within_losses():
    # |V0| through the discontinuous range stays below the loss-free
    # conversion law and within 10% of it
    leq = equivalent_inductance(CUK_BENCH)
    ops = sweep_duty(CUK_BENCH, 0.2, 0.5, 0.05)
    for op in ops:
        law = 25.0 * op.D * math.sqrt(100.0 / (2.0 * leq * CUK_BENCH.f_s))
        assert op.mode == DCM
        assert abs(op.V0) < law
        assert abs(abs(op.V0) - law) / law < 0.10


def test_state_vector_round_trip():
    s = StateVector(i_L1=1.0, i_L2=-2.0, v_C1=3.5, v_C2=-4.25)
    arr = s.as_array()
    assert arr.tolist() == [1.0, -2.0, 3.5, -4.25]
    assert StateVector.from_array(arr) == s
