"""Time evolution for two-spin Hamiltonians.

Piecewise-constant midpoint integration: each step applies
exp(-i H(t_mid) dt), giving a product with global O(dt^2) accuracy.
Constant Hamiltonians are propagated exactly in a single
exponential.  The step size for time-dependent evaluators is tied to
the fastest angular frequency present: dt <= (2 pi / omega_max) / 20.

Gate-level helpers build the ideal entangling operation, free coupling
evolution, instantaneous (hard) pulses including the shared-coil cross
rotations, and the echo-style compensated coupling block whose pair of
inversion pulses cancels the partner-spin kicks.
"""

from __future__ import annotations

import numpy as np

from .spinops import DensityState, UnitaryOp, expm_hermitian, frobenius_distance
from .hamiltonian import (
    IX1, IY1, IX2, IY2, IZZ,
    LAB_EXACT, ROTATING_EXACT, ROTATING_SECULAR_HOMO,
    ROTATING_SECULAR_HETERO, CONVENTIONAL_OFFSET,
    HamiltonianModel, SpinSystem, TimeDependentOperator,
)

# Minimum samples per period of the fastest frequency present.
SAMPLES_PER_PERIOD = 20

# Gradient crushers must average over at least this many phase slices.
MIN_CRUSH_SLICES = 16


def max_step(omega_max: float) -> float:
    """Largest admissible integration step for a given fastest
    angular frequency; infinite for a constant Hamiltonian."""
    if omega_max <= 0.0:
        return np.inf
    return (2.0 * np.pi / omega_max) / SAMPLES_PER_PERIOD


def propagator(h: TimeDependentOperator, t0: float, t1: float,
               dt: float | None = None) -> UnitaryOp:
    """Propagator from absolute time t0 to t1 under evaluator h.

    Constant evaluators are exponentiated once.  Time-dependent ones
    are integrated with the midpoint rule at a step no larger than the
    sampling rule allows; the span is divided evenly.

    Args:
        h: Hamiltonian evaluator with sampling metadata.
        t0: start time (s).
        t1: end time (s), must satisfy t1 >= t0.
        dt: requested step (s); None picks the sampling-rule limit.

    Raises:
        ValueError: when t1 < t0, or dt exceeds the sampling rule for
            this evaluator.
    """
    if t1 < t0:
        raise ValueError("propagation requires t1 >= t0")
    span = t1 - t0
    if span == 0.0:
        return UnitaryOp(np.eye(4, dtype=complex))
    if h.static:
        return expm_hermitian(h.matrix, span)
    limit = max_step(h.omega_max)
    if dt is None:
        dt = limit
    elif dt > limit * (1.0 + 1e-12):
        raise ValueError(
            f"step {dt:g} s violates the sampling rule; need dt <= "
            f"{limit:g} s for omega_max = {h.omega_max:g} rad/s")
    n = max(1, int(np.ceil(span / dt - 1e-12)))
    step = span / n
    u = np.eye(4, dtype=complex)
    for k in range(n):
        t_mid = t0 + (k + 0.5) * step
        u = expm_hermitian(h(t_mid), step).matrix @ u
    return UnitaryOp(u)


def evolve(state: DensityState, h: TimeDependentOperator, t0: float, t1: float,
           dt: float | None = None) -> DensityState:
    """Evolve a density state from t0 to t1 under evaluator h."""
    return propagator(h, t0, t1, dt).apply(state)


def u_entangler() -> UnitaryOp:
    """Conditional-phase entangling gate exp(-i pi Iz(x)Iz)."""
    return expm_hermitian(np.pi * IZZ, 1.0)


def u_j(sys: SpinSystem, t: float) -> UnitaryOp:
    """Free evolution exp(-i J t Iz(x)Iz) under the secular coupling.

    At t = pi/J this is exactly the entangling gate."""
    return expm_hermitian(sys.j * t * IZZ, 1.0)


def _inversion_pair(sys: SpinSystem, cross_angle: float) -> np.ndarray:
    """Simultaneous hard pi pulse on spin 1 about x while the shared
    coil flips spin 2 about the in-plane axis at cross_angle."""
    own = expm_hermitian(np.pi * IX1, 1.0).matrix
    cross = expm_hermitian(
        np.pi * (np.cos(cross_angle) * IX2 + np.sin(cross_angle) * IY2),
        1.0).matrix
    return own @ cross


def u_j_star(sys: SpinSystem, t: float, t_start: float = 0.0) -> UnitaryOp:
    """Compensated coupling block: two half-period free evolutions,
    each followed by a hard pi pulse on spin 1.

    The shared coil makes every channel-1 pi pulse also invert spin 2,
    about the in-plane axis at angle delta_omega0 * T + phase for a
    pulse applied at absolute time T.  Placing the pulses at t/2 and t
    after the block starts makes the two spin-2 inversions compose to
    a pure spin-2 z rotation that exactly cancels the offset picked up
    between them, so the block equals

        exp(-i t (delta_omega0 I(x)Iz + J Iz(x)Iz))

    independent of t_start.  Equal resonance frequencies are assumed
    for the cross-flip amplitude (unit coil ratio).

    Args:
        sys: spin system supplying delta_omega0 and J.
        t: total block duration (s).
        t_start: absolute time at which the block begins.
    """
    half = u_j(sys, 0.5 * t).matrix
    pair1 = _inversion_pair(sys, sys.delta_omega0 * (t_start + 0.5 * t))
    pair2 = _inversion_pair(sys, sys.delta_omega0 * (t_start + t))
    return UnitaryOp(pair2 @ half @ pair1 @ half)


def hard_pulse_unitary(model: HamiltonianModel, sys: SpinSystem,
                       pulses: list[tuple[int, float, float]],
                       t_abs: float) -> UnitaryOp:
    """Instantaneous rotation for simultaneous hard pulses.

    Each pulse is (target, flip, phase): a rotation of the target spin
    by the flip angle about the in-plane axis at the phase angle.
    Under the shared-coil variants the partner spin is simultaneously
    rotated by g^(+/-1) times the flip angle about the in-plane axis at
    +/- delta_omega0 * t_abs + phase, so the absolute application time
    enters the gate.  Under the separate-channel and conventional
    variants only the target moves.  Simultaneous pulses compose by
    summing generators before exponentiating.

    Raises:
        ValueError: under LabExact, where instantaneous pulses are not
            meaningful and sequences must be translated to soft pulses.
    """
    v = model.variant
    if v == LAB_EXACT:
        raise ValueError(
            "hard pulses are undefined under LabExact; translate the "
            "sequence to soft pulses first")
    cross = v in (ROTATING_EXACT, ROTATING_SECULAR_HOMO)
    gen = np.zeros((4, 4), dtype=complex)
    for target, flip, phase in pulses:
        if target == 1:
            own_x, own_y, oth_x, oth_y = IX1, IY1, IX2, IY2
            amp, angle = sys.g, sys.delta_omega0 * t_abs + phase
        else:
            own_x, own_y, oth_x, oth_y = IX2, IY2, IX1, IY1
            amp, angle = 1.0 / sys.g, -sys.delta_omega0 * t_abs + phase
        gen = gen + flip * (np.cos(phase) * own_x + np.sin(phase) * own_y)
        if cross:
            gen = gen + amp * flip * (
                np.cos(angle) * oth_x + np.sin(angle) * oth_y)
    return expm_hermitian(-gen, 1.0)


def gradient_crush(state: DensityState, n_slices: int = 64) -> DensityState:
    """Pulsed-field-gradient crusher.

    Averages the state over a uniform distribution of total-Iz phase
    twists, which zeroes every coherence between states of different
    total magnetization while leaving populations and the zero-quantum
    coherence untouched.  Trace-preserving and idempotent.

    Args:
        state: input density state (either convention).
        n_slices: phase samples across [0, 2 pi); at least 16.
    """
    if n_slices < MIN_CRUSH_SLICES:
        raise ValueError(f"n_slices must be at least {MIN_CRUSH_SLICES}")
    # Total-Iz quantum numbers of |00>, |01>, |10>, |11>.
    m = np.array([1.0, 0.0, 0.0, -1.0])
    acc = np.zeros((4, 4), dtype=complex)
    for k in range(n_slices):
        theta = 2.0 * np.pi * k / n_slices
        phases = np.exp(-1.0j * theta * m)
        acc += phases[:, None] * state.matrix * np.conj(phases)[None, :]
    return DensityState(acc / n_slices, convention=state.convention)


def richardson_ratio(run, dt: float) -> float:
    """Step-halving convergence diagnostic for a propagator builder.

    Args:
        run: callable mapping a step size to a UnitaryOp.
        dt: base step; the reference is computed at dt/8.

    Returns:
        ||U(dt) - U(dt/8)|| / ||U(dt/2) - U(dt/8)||, which approaches
        (1 - 1/64) / (1/4 - 1/64) = 4.2 for a second-order method.
    """
    u_base = run(dt).matrix
    u_half = run(dt / 2.0).matrix
    u_ref = run(dt / 8.0).matrix
    num = frobenius_distance(u_base, u_ref)
    den = frobenius_distance(u_half, u_ref)
    if den == 0.0:
        raise ValueError("reference and half-step propagators coincide")
    return num / den
