"""End-to-end pipelines: states, readout, classification, distances."""

import numpy as np
import pytest

from homonmr.hamiltonian import (
    IX1,
    IX2,
    IZ1,
    IZ2,
    TWO_PI,
    SpinSystem,
    cytosine,
)
from homonmr.experiment import (
    FidTrace,
    classify_dj,
    dj_run,
    distance_closed,
    distance_curve,
    distance_numeric,
    ideal_pps_deviation,
    left_line_intensity,
    left_line_offset_hz,
    pps_run,
    readout,
    run_sequence,
    sequence_propagator,
    spectrum,
    thermal_reference_intensity,
    thermal_state,
)
from homonmr.sequence import Sequence, build_pps
from homonmr.spinops import DensityState, expm_hermitian


def test_thermal_state_diagonals():
    matched = SpinSystem(omega0_1=TWO_PI * 100e6, omega0_2=TWO_PI * 100e6,
                         j=TWO_PI * 7.1)
    assert np.allclose(thermal_state(matched).matrix,
                       np.diag([1.0, 0.0, 0.0, -1.0]), atol=1e-15)
    lopsided = SpinSystem(omega0_1=4.0, omega0_2=1.0, j=0.0)
    assert np.allclose(thermal_state(lopsided).matrix,
                       np.diag([0.625, 0.375, -0.375, -0.625]), atol=1e-15)


def test_ideal_pps_deviation():
    m = ideal_pps_deviation().matrix
    assert np.allclose(m, np.diag([0.75, -0.25, -0.25, -0.25]), atol=1e-15)


def test_distance_closed_anchor_values(sys):
    free_zero = distance_closed("free", sys, 0.0)
    assert free_zero == pytest.approx(
        2.0 * np.sqrt(2.0) * np.sqrt(1.0 - np.cos(np.pi / 4.0)), rel=1e-12)
    assert free_zero == pytest.approx(1.5307337294603591, rel=1e-12)
    assert distance_closed("free", sys, sys.entangling_time) == \
        pytest.approx(0.0, abs=1e-12)
    t_best = 54.0 / 765.0
    assert distance_closed("compensated", sys, t_best) < 0.1
    assert distance_closed("compensated", sys, t_best + 0.33e-3) > 1.0
    with pytest.raises(ValueError):
        distance_closed("mystery", sys, 0.0)
    with pytest.raises(ValueError):
        distance_numeric("mystery", sys, 0.0)


def test_distance_closed_matches_numeric_everywhere(sys):
    grid = np.linspace(0.0, 2.0 * sys.entangling_time, 41)
    for kind in ("free", "conventional", "compensated"):
        rows = distance_curve(kind, sys, grid)
        assert rows.shape == (41, 4)
        assert np.max(rows[:, 3]) < 1e-8


def test_distance_numeric_start_time_invariance(sys):
    t = 70.3e-3
    a = distance_numeric("compensated", sys, t, t_start=0.0)
    b = distance_numeric("compensated", sys, t, t_start=0.789e-3)
    assert a == pytest.approx(b, abs=1e-9)


def test_readout_pure_ground_state(sys):
    ket = np.zeros((4, 4), dtype=complex)
    ket[0, 0] = 1.0
    state = DensityState(ket, convention="true")
    spec = spectrum(readout(state, sys))
    left = left_line_offset_hz(sys)
    assert left == pytest.approx(3.55)
    assert spec.value_near(left) > 0.0
    assert abs(spec.value_near(-left)) < 0.05 * spec.value_near(left)
    partner = -sys.delta_omega0 / TWO_PI
    for off in (partner + left, partner - left):
        assert abs(spec.value_near(off)) < 0.05 * spec.value_near(left)
    assert spec.peaks[0][0] == pytest.approx(left, abs=0.2)


def test_readout_thermal_doublet(sys):
    spec = spectrum(readout(thermal_state(sys), sys))
    left = left_line_offset_hz(sys)
    up = spec.value_near(left)
    down = spec.value_near(-left)
    assert up > 0.0 and down > 0.0
    assert up == pytest.approx(down, rel=0.05)
    partner = -sys.delta_omega0 / TWO_PI
    assert abs(spec.value_near(partner + left)) < 0.05 * up
    assert abs(spec.value_near(partner - left)) < 0.05 * up


def test_readout_both_spins_tipped_shows_four_lines(sys):
    tip = expm_hermitian(-(np.pi / 2.0) * (IX1 + IX2), 1.0)
    state = tip.apply(thermal_state(sys))
    spec = spectrum(readout(state, sys, reading_pulse=False))
    left = left_line_offset_hz(sys)
    partner = -sys.delta_omega0 / TWO_PI
    values = [spec.value_near(off) for off in
              (left, -left, partner + left, partner - left)]
    assert all(v > 0.0 for v in values)
    assert min(values) > 0.5 * max(values)


def test_line_width_tracks_transverse_lifetime(sys):
    spec = spectrum(readout(thermal_state(sys), sys, duration=20.0))
    left = left_line_offset_hz(sys)
    mask = np.abs(spec.frequencies - left) <= 2.0
    freqs = spec.frequencies[mask][::-1]
    vals = spec.amplitudes.real[mask][::-1]
    peak = vals.max()
    above = freqs[vals >= 0.5 * peak]
    fwhm = above.max() - above.min()
    assert fwhm == pytest.approx(1.0 / (np.pi * sys.t2), abs=0.06)


def test_readout_guards(sys):
    state = thermal_state(sys)
    with pytest.raises(ValueError, match="dt"):
        readout(state, sys, dt=1e-3)
    undamped = SpinSystem(omega0_1=sys.omega0_1, omega0_2=sys.omega0_2,
                          j=sys.j)
    with pytest.raises(ValueError, match="duration"):
        readout(thermal_state(undamped), undamped)


def test_spectrum_satisfies_parseval(sys):
    fid = readout(thermal_state(sys), sys)
    spec = spectrum(fid)
    n = len(fid.samples)
    power_time = np.sum(np.abs(fid.samples) ** 2)
    power_freq = np.sum(np.abs(spec.amplitudes) ** 2) / (fid.dt ** 2 * 2 * n)
    assert power_freq == pytest.approx(power_time, rel=1e-12)


def test_spectrum_value_near_guard(sys):
    spec = spectrum(readout(thermal_state(sys), sys))
    with pytest.raises(ValueError):
        spec.value_near(1e6)


def test_fid_trace_validation():
    with pytest.raises(ValueError):
        FidTrace(samples=np.array([1.0 + 0j]), dt=1e-3, reference=0.0)
    with pytest.raises(ValueError):
        FidTrace(samples=np.zeros(4, dtype=complex), dt=0.0, reference=0.0)
    tr = FidTrace(samples=np.zeros(4, dtype=complex), dt=2e-3, reference=0.0)
    assert np.allclose(tr.times, [0.0, 2e-3, 4e-3, 6e-3])


def test_classify_indeterminate_on_empty_state(sys):
    silent = DensityState(np.zeros((4, 4), dtype=complex),
                          convention="deviation")
    spec = spectrum(readout(silent, sys))
    assert classify_dj(spec, sys) == "indeterminate"
    assert classify_dj(spec, sys, reference=1.0) == "indeterminate"


def test_dj_hard_idealized_channels_pattern(sys, hetero):
    reference = thermal_reference_intensity(sys)
    expected = {"f1": "constant", "f2": "constant",
                "f3": "balanced", "f4": "balanced"}
    for label, want in expected.items():
        res = dj_run(label, sys, hetero, reference=reference)
        assert res.classification == want, (label, res.left_intensity)
        assert abs(res.left_intensity) > 0.5 * abs(reference)


def test_dj_soft_shared_coil_points(sys, homo):
    reference = thermal_reference_intensity(sys)
    res1 = dj_run("f1", sys, homo, taus=5.229e-3, reference=reference)
    assert res1.classification == "constant"
    res3 = dj_run("f3", sys, homo, taus=5.229e-3, reference=reference)
    assert res3.classification == "balanced"


def test_dj_conventional_model_flips_constant_branch(sys, homo, conventional):
    reference = thermal_reference_intensity(sys)
    t = 69.8e-3
    physical = dj_run("f1", sys, homo, total_j_time=t, taus=5.229e-3,
                      reference=reference)
    falsified = dj_run("f1", sys, conventional, total_j_time=t,
                       taus=5.229e-3, reference=reference)
    assert physical.classification == "constant"
    assert falsified.classification != "constant"


def test_pps_uncompensated_invariant(sys, homo):
    res = pps_run(sys, homo, taus=5.229e-3)
    assert res.dominant == "00"
    assert res.fidelity > 0.98
    assert res.p00 == pytest.approx(res.populations[0])


def test_pps_compensation_does_not_hurt_at_optimum(sys, homo):
    t_best = 54.0 / 765.0
    plain = pps_run(sys, homo, total_j_time=t_best, taus=5.229e-3)
    comp = pps_run(sys, homo, total_j_time=t_best, compensate=True,
                   taus=5.229e-3)
    assert plain.dominant == "00" and comp.dominant == "00"
    assert comp.fidelity >= plain.fidelity - 1e-12
    assert comp.p00 >= plain.p00 - 1e-12


def test_sequence_propagator_rejects_gradients(sys, homo):
    with pytest.raises(ValueError, match="gradient"):
        sequence_propagator(build_pps(False), sys, homo)


def test_empty_sequence_leaves_state_unchanged(sys, homo):
    res = run_sequence(Sequence(name="empty", columns=()), sys, homo)
    assert res.t_end == 0.0
    assert np.allclose(res.state.matrix, thermal_state(sys).matrix,
                       atol=1e-15)
