"""Hamiltonians for a two-spin liquid-state NMR register.

Builds every operator needed to simulate the register at three levels
of approximation: the laboratory frame with explicit rf carriers, the
exact per-spin rotating frame (only terms near twice the Larmor
frequency dropped), and the secular rotating frame used for gate
design.  The conventional operator forms found in parts of the
literature are also provided, quarantined behind falsification
constructors, so that simulations can demonstrate where those forms
disagree with observable spin dynamics.

Conventions.  Angular frequencies are rad/s throughout.  Spin 1 is the
left tensor factor, basis |00>, |01>, |10>, |11>.  The register
Hamiltonian in the laboratory frame is

    H0 = -w01 Iz(x)I - w02 I(x)Iz + J (Ix(x)Ix + Iy(x)Iy + Iz(x)Iz)

and a transmit channel k driving resonantly at carrier w_rf,k couples
to both spins through the shared coil, scaled by the frequency ratio
g = w02/w01.  Transforming with U(t) = exp(-i w_rot,1 Iz t) (x)
exp(-i w_rot,2 Iz t) adds +w_rot,1 Iz(x)I + w_rot,2 I(x)Iz to the
conjugated Hamiltonian; in the per-spin co-rotating frame the Zeeman
terms cancel exactly and the isotropic coupling splits into the static
J Iz(x)Iz part plus a zero-quantum block oscillating at the Larmor
difference.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence as SequenceType

import numpy as np

from .spinops import spin_op

TWO_PI = 2.0 * np.pi

# Warning floor for |delta_omega0| / J below which the secular coupling
# form J Iz(x)Iz stops being a safe replacement for the isotropic one.
SECULAR_RATIO_FLOOR = 50.0

# Relative tolerance for the resonance condition carrier == target Larmor.
RESONANCE_RTOL = 1e-9

IX1 = spin_op(2, 0, "x")
IY1 = spin_op(2, 0, "y")
IZ1 = spin_op(2, 0, "z")
IX2 = spin_op(2, 1, "x")
IY2 = spin_op(2, 1, "y")
IZ2 = spin_op(2, 1, "z")
IZZ = IZ1 @ IZ2
COUPLING_ISOTROPIC = IX1 @ IX2 + IY1 @ IY2 + IZ1 @ IZ2
# Zero-quantum flip-flop part of the isotropic coupling (central block).
COUPLING_FLIPFLOP = IX1 @ IX2 + IY1 @ IY2


@dataclass(frozen=True)
class SpinSystem:
    """Static description of a two-spin molecule in a fixed field.

    Attributes:
        omega0_1: Larmor angular frequency of spin 1 (rad/s, > 0).
        omega0_2: Larmor angular frequency of spin 2 (rad/s, > 0).
        j: scalar coupling strength (rad/s, >= 0).
        t2: transverse relaxation time (s); used only as readout
            apodization, never during pulse sequences.
        t1: longitudinal relaxation time (s); recorded for reference,
            unused in the dynamics.
    """

    omega0_1: float
    omega0_2: float
    j: float
    t2: float = np.inf
    t1: float = np.inf

    def __post_init__(self):
        if not (self.omega0_1 > 0 and self.omega0_2 > 0):
            raise ValueError("Larmor frequencies must be positive")
        if self.j < 0:
            raise ValueError("coupling strength must be nonnegative")
        if not (self.t2 > 0 and self.t1 > 0):
            raise ValueError("relaxation times must be positive")

    @property
    def delta_omega0(self) -> float:
        """Larmor difference omega0_2 - omega0_1 (rad/s)."""
        return self.omega0_2 - self.omega0_1

    @property
    def g(self) -> float:
        """Ratio of resonance frequencies omega0_2 / omega0_1."""
        return self.omega0_2 / self.omega0_1

    @property
    def secular_ok(self) -> bool:
        """True when |delta_omega0| is comfortably larger than J.

        The floor of 50 J is a conservative warning threshold, far
        below the ratios of real molecules (hundreds to millions).
        """
        return abs(self.delta_omega0) > SECULAR_RATIO_FLOOR * self.j

    @property
    def entangling_time(self) -> float:
        """Free-evolution duration pi/J that realizes the two-qubit
        conditional phase gate."""
        if self.j == 0:
            raise ValueError("entangling time undefined for J = 0")
        return np.pi / self.j


def cytosine(omega0_1: float = TWO_PI * 500e6) -> SpinSystem:
    """Two proton qubits of cytosine in D2O at a 500 MHz spectrometer.

    J/2pi = 7.1 Hz, |delta_omega0|/2pi = 765.0 Hz, T2 ~ 1 s, T1 ~ 7 s.
    Pass a smaller omega0_1 to build a frequency-scaled variant that
    keeps the delta_omega0 and J values (and hence every inequality the
    rotating-frame derivation relies on) while making lab-frame
    integration affordable.
    """
    return SpinSystem(
        omega0_1=omega0_1,
        omega0_2=omega0_1 + TWO_PI * 765.0,
        j=TWO_PI * 7.1,
        t2=1.0,
        t1=7.0,
    )


@dataclass(frozen=True)
class RfChannel:
    """One transmit channel of the spectrometer.

    Attributes:
        target: spin index the channel addresses (1 or 2).
        carrier: carrier angular frequency omega_rf (rad/s, > 0).
        amplitude: envelope omega_1(t) in rad/s; either a constant or a
            callable of absolute time.  Must be nonnegative.
        phase: pulse phase phi (rad); 0 drives about x, pi/2 about y.
    """

    target: int
    carrier: float
    amplitude: float | Callable[[float], float]
    phase: float = 0.0

    def __post_init__(self):
        if self.target not in (1, 2):
            raise ValueError("target spin must be 1 or 2")
        if not self.carrier > 0:
            raise ValueError("carrier frequency must be positive")
        if not callable(self.amplitude) and self.amplitude < 0:
            raise ValueError("amplitude envelope must be nonnegative")

    def amp(self, t: float) -> float:
        if callable(self.amplitude):
            return float(self.amplitude(t))
        return float(self.amplitude)


@dataclass(frozen=True)
class FrameSpec:
    """Per-spin rotation angular velocities defining a rotating frame."""

    omega_rot_1: float
    omega_rot_2: float

    def __post_init__(self):
        if not (np.isfinite(self.omega_rot_1) and np.isfinite(self.omega_rot_2)):
            raise ValueError("frame angular velocities must be finite")

    @property
    def delta(self) -> float:
        """Frame difference omega_rot_2 - omega_rot_1 (rad/s)."""
        return self.omega_rot_2 - self.omega_rot_1

    @classmethod
    def co_rotating(cls, sys: SpinSystem) -> "FrameSpec":
        """Each spin's frame rotates at its own Larmor frequency."""
        return cls(sys.omega0_1, sys.omega0_2)

    @classmethod
    def common(cls, sys: SpinSystem) -> "FrameSpec":
        """Both frames rotate at the spin-1 Larmor frequency."""
        return cls(sys.omega0_1, sys.omega0_1)

    @classmethod
    def lab(cls) -> "FrameSpec":
        """Zero rotation: the identity transform."""
        return cls(0.0, 0.0)


@dataclass(frozen=True)
class TimeDependentOperator:
    """Hamiltonian evaluator with sampling metadata.

    Attributes:
        func: maps absolute time (s) to a Hermitian matrix.
        omega_max: fastest angular frequency present in the time
            dependence (rad/s); the integrator derives its step-size
            rule from it.  Zero means the operator is constant.
        matrix: the constant matrix when omega_max == 0, else None.
    """

    func: Callable[[float], np.ndarray]
    omega_max: float
    matrix: np.ndarray | None = None

    @property
    def static(self) -> bool:
        return self.matrix is not None

    def __call__(self, t: float) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        return self.func(t)

    @classmethod
    def constant(cls, matrix: np.ndarray) -> "TimeDependentOperator":
        m = np.asarray(matrix, dtype=complex)
        return cls(func=lambda t: m, omega_max=0.0, matrix=m)


# Model variants.  The physical ladder goes LabExact (everything kept)
# -> RotatingExact (only terms near 2 omega0 dropped) ->
# RotatingSecularHomo (system coupling secular, controls keep the
# difference-frequency cross terms).  RotatingSecularHetero is the
# idealized separate-channel reference in which a pulse touches only
# its target spin.  The remaining variants reproduce operator forms
# from the literature that disagree with the rotating-frame derivation
# and exist solely so experiments can falsify them.
LAB_EXACT = "LabExact"
ROTATING_EXACT = "RotatingExact"
ROTATING_SECULAR_HOMO = "RotatingSecularHomo"
ROTATING_SECULAR_HETERO = "RotatingSecularHetero"
CONVENTIONAL_OFFSET = "ConventionalOffset"
COMMON_ROTATING_EXACT = "CommonRotatingExact"
CONVENTIONAL_LAB = "ConventionalLab"

PHYSICAL_VARIANTS = (
    LAB_EXACT,
    ROTATING_EXACT,
    ROTATING_SECULAR_HOMO,
    ROTATING_SECULAR_HETERO,
)
FALSIFICATION_VARIANTS = (
    CONVENTIONAL_OFFSET,
    COMMON_ROTATING_EXACT,
    CONVENTIONAL_LAB,
)
ALL_VARIANTS = PHYSICAL_VARIANTS + FALSIFICATION_VARIANTS


@dataclass(frozen=True)
class HamiltonianModel:
    """Selectable physics model for propagation.

    Use standard_model() for the physical variants.  The conventional
    variants must be requested through falsification_model() so they
    cannot be picked up accidentally for production simulation.

    The frame field is informational: each variant has a canonical
    frame (lab, per-spin co-rotating, or common) and a non-None frame
    must match it.
    """

    variant: str
    frame: FrameSpec | None = None

    def __post_init__(self):
        if self.variant not in ALL_VARIANTS:
            raise ValueError(
                f"unknown variant {self.variant!r}; choose from {ALL_VARIANTS}")

    @property
    def falsification(self) -> bool:
        return self.variant in FALSIFICATION_VARIANTS

    def canonical_frame(self, sys: SpinSystem) -> FrameSpec:
        if self.variant in (LAB_EXACT, CONVENTIONAL_LAB):
            return FrameSpec.lab()
        if self.variant in (CONVENTIONAL_OFFSET, COMMON_ROTATING_EXACT):
            return FrameSpec.common(sys)
        return FrameSpec.co_rotating(sys)

    def check_frame(self, sys: SpinSystem) -> None:
        if self.frame is None:
            return
        canon = self.canonical_frame(sys)
        if not (np.isclose(self.frame.omega_rot_1, canon.omega_rot_1)
                and np.isclose(self.frame.omega_rot_2, canon.omega_rot_2)):
            raise ValueError(
                f"variant {self.variant} requires its canonical frame; "
                f"got {self.frame}, expected {canon}")


def standard_model(variant: str, frame: FrameSpec | None = None) -> HamiltonianModel:
    """Construct a physical model variant.

    Raises:
        ValueError: for conventional variants, which must be obtained
            through falsification_model().
    """
    if variant in FALSIFICATION_VARIANTS:
        raise ValueError(
            f"{variant} is a falsification-only variant; construct it "
            "explicitly with falsification_model()")
    return HamiltonianModel(variant, frame)


def falsification_model(variant: str, frame: FrameSpec | None = None) -> HamiltonianModel:
    """Construct one of the deliberately wrong literature variants."""
    if variant not in FALSIFICATION_VARIANTS:
        raise ValueError(
            f"{variant} is a physical variant; use standard_model()")
    return HamiltonianModel(variant, frame)


def model_from_name(name: str) -> HamiltonianModel:
    """Resolve a variant name from configuration, either kind."""
    if name in FALSIFICATION_VARIANTS:
        return falsification_model(name)
    return standard_model(name)


def h_zeeman_lab(sys: SpinSystem) -> np.ndarray:
    return -sys.omega0_1 * IZ1 - sys.omega0_2 * IZ2


def h_system_lab(sys: SpinSystem) -> np.ndarray:
    """Free two-spin Hamiltonian in the laboratory frame."""
    return h_zeeman_lab(sys) + sys.j * COUPLING_ISOTROPIC


def h_rf_lab(sys: SpinSystem, channel: RfChannel, t: float) -> np.ndarray:
    """Laboratory-frame drive of one channel at absolute time t.

    The coil couples to both spins; the partner spin sees the field
    scaled by the frequency ratio g (channel 1) or 1/g (channel 2).
    """
    factor = -2.0 * channel.amp(t) * np.cos(channel.carrier * t - channel.phase)
    if channel.target == 1:
        pattern = IX1 + sys.g * IX2
    else:
        pattern = IX1 / sys.g + IX2
    return factor * pattern


def h_lab(sys: SpinSystem, channels: SequenceType[RfChannel], t: float) -> np.ndarray:
    """Full laboratory-frame Hamiltonian at absolute time t."""
    h = h_system_lab(sys)
    for channel in channels:
        h = h + h_rf_lab(sys, channel, t)
    return h


def frame_unitary(frame: FrameSpec, t: float) -> np.ndarray:
    """Transform matrix exp(-i w1 Iz t) (x) exp(-i w2 Iz t), diagonal."""
    half1 = 0.5 * frame.omega_rot_1 * t
    half2 = 0.5 * frame.omega_rot_2 * t
    phases = np.exp(-1.0j * np.array(
        [half1 + half2, half1 - half2, -half1 + half2, -half1 - half2]))
    return np.diag(phases)


def to_rotating(h_eval: TimeDependentOperator | Callable[[float], np.ndarray],
                frame: FrameSpec,
                omega_max: float | None = None) -> TimeDependentOperator:
    """Transform a time-dependent Hamiltonian into a rotating frame.

    Returns an evaluator for U(t) H(t) U(t)^dagger + w_rot,1 Iz(x)I +
    w_rot,2 I(x)Iz where U is the frame transform.  The additive term
    is the frame contribution -i U (dU^dagger/dt), whose sign follows
    from dU/dt = -i (w_rot,1 Iz(x)I + w_rot,2 I(x)Iz) U; with this sign
    the per-spin co-rotating frame cancels the Zeeman terms exactly.

    Args:
        h_eval: source evaluator; a plain callable needs omega_max.
        frame: rotating-frame angular velocities.
        omega_max: fastest frequency of the source when h_eval is a
            plain callable; ignored otherwise.
    """
    if isinstance(h_eval, TimeDependentOperator):
        src = h_eval
    else:
        if omega_max is None:
            raise ValueError("omega_max required for a plain callable")
        src = TimeDependentOperator(func=h_eval, omega_max=omega_max)
    frame_term = frame.omega_rot_1 * IZ1 + frame.omega_rot_2 * IZ2

    def transformed(t: float) -> np.ndarray:
        u = frame_unitary(frame, t)
        return u @ src(t) @ u.conj().T + frame_term

    out_omega = src.omega_max + 2.0 * max(
        abs(frame.omega_rot_1), abs(frame.omega_rot_2))
    if out_omega == 0.0:
        return TimeDependentOperator.constant(transformed(0.0))
    return TimeDependentOperator(func=transformed, omega_max=out_omega)


def h_secular_system(sys: SpinSystem) -> np.ndarray:
    """Secular system Hamiltonian J Iz(x)Iz of the co-rotating frame.

    Valid when |delta_omega0| >> J so the zero-quantum block of the
    isotropic coupling averages out; warns when the margin is thin.
    """
    if not sys.secular_ok:
        warnings.warn(
            "secular system form requested with |delta_omega0| <= "
            f"{SECULAR_RATIO_FLOOR:g} J; the zero-quantum block may not "
            "average out", stacklevel=2)
    return sys.j * IZZ


def h_system_rotating_exact(sys: SpinSystem, t: float) -> np.ndarray:
    """Co-rotating-frame system Hamiltonian with the oscillating
    zero-quantum block retained.

    The |01><10| element carries (J/2) exp(+i delta_omega0 t); only
    terms at twice the Larmor frequencies have been dropped.
    """
    h = sys.j * IZZ.astype(complex).copy()
    phase = np.exp(1.0j * sys.delta_omega0 * t)
    h[1, 2] += 0.5 * sys.j * phase
    h[2, 1] += 0.5 * sys.j * np.conj(phase)
    return h


def h_control_homo(sys: SpinSystem, channel: RfChannel, t: float) -> np.ndarray:
    """Resonant control Hamiltonian in the per-spin co-rotating frame
    for a shared-coil (same nuclear species) register.

    The channel rotates its target about the programmed axis and drags
    the partner spin about an axis precessing at the Larmor difference:

        channel 1: -w1(t) [cos(phi) Ix1 + sin(phi) Iy1
                           + g cos(dw t + phi) Ix2 + g sin(dw t + phi) Iy2]
        channel 2: -w1(t) [cos(phi) Ix2 + sin(phi) Iy2
                           + (1/g)(cos(-dw t + phi) Ix1 + sin(-dw t + phi) Iy1)]

    with dw = delta_omega0.  Only terms near twice the Larmor
    frequencies have been dropped; the cross terms are kept in full.

    Raises:
        ValueError: when the carrier is off the target's resonance;
            off-resonant drive is only defined through the laboratory
            frame evaluators.
    """
    target_larmor = sys.omega0_1 if channel.target == 1 else sys.omega0_2
    if abs(channel.carrier - target_larmor) > RESONANCE_RTOL * target_larmor:
        raise ValueError(
            "carrier must equal the target spin's Larmor frequency; "
            f"got {channel.carrier} vs {target_larmor}")
    amp = channel.amp(t)
    phi = channel.phase
    dw = sys.delta_omega0
    if channel.target == 1:
        cross = sys.g
        cross_angle = dw * t + phi
        own_x, own_y, other_x, other_y = IX1, IY1, IX2, IY2
    else:
        cross = 1.0 / sys.g
        cross_angle = -dw * t + phi
        own_x, own_y, other_x, other_y = IX2, IY2, IX1, IY1
    return -amp * (
        np.cos(phi) * own_x + np.sin(phi) * own_y
        + cross * np.cos(cross_angle) * other_x
        + cross * np.sin(cross_angle) * other_y)


def h_control_hetero(sys: SpinSystem, channel: RfChannel, t: float) -> np.ndarray:
    """Idealized separate-channel control: the drive touches only its
    target spin, about a fixed axis set by the pulse phase."""
    amp = channel.amp(t)
    phi = channel.phase
    if channel.target == 1:
        return -amp * (np.cos(phi) * IX1 + np.sin(phi) * IY1)
    return -amp * (np.cos(phi) * IX2 + np.sin(phi) * IY2)


def h_conventional(sys: SpinSystem) -> np.ndarray:
    """Common-frame system form widely assumed in the literature:
    -delta_omega0 I(x)Iz + J Iz(x)Iz.

    Provided solely for falsification experiments; the actual common
    frame transform of the lab Hamiltonian produces
    h_common_rotating(), which differs by the static zero-quantum
    block.
    """
    return -sys.delta_omega0 * IZ2 + sys.j * IZZ


def h_common_rotating(sys: SpinSystem) -> np.ndarray:
    """Exact common-frame system Hamiltonian (both frames at the spin-1
    Larmor frequency): offset on spin 2 plus the full isotropic
    coupling, whose zero-quantum block is static here."""
    return -sys.delta_omega0 * IZ2 + sys.j * COUPLING_ISOTROPIC


def h_conventional_lab(sys: SpinSystem) -> np.ndarray:
    """Laboratory-frame form with a secular coupling, also seen in the
    literature; incorrect because the coupling cannot be truncated to
    Iz(x)Iz in the laboratory frame.  Falsification use only."""
    return h_zeeman_lab(sys) + sys.j * IZZ


def system_operator(model: HamiltonianModel, sys: SpinSystem) -> TimeDependentOperator:
    """System (drive-free) Hamiltonian evaluator for a model variant."""
    model.check_frame(sys)
    v = model.variant
    if v == LAB_EXACT:
        return TimeDependentOperator.constant(h_system_lab(sys))
    if v == ROTATING_EXACT:
        return TimeDependentOperator(
            func=lambda t: h_system_rotating_exact(sys, t),
            omega_max=abs(sys.delta_omega0))
    if v in (ROTATING_SECULAR_HOMO, ROTATING_SECULAR_HETERO):
        return TimeDependentOperator.constant(sys.j * IZZ)
    if v == CONVENTIONAL_OFFSET:
        return TimeDependentOperator.constant(h_conventional(sys))
    if v == COMMON_ROTATING_EXACT:
        return TimeDependentOperator.constant(h_common_rotating(sys))
    if v == CONVENTIONAL_LAB:
        return TimeDependentOperator.constant(h_conventional_lab(sys))
    raise ValueError(f"unknown variant {v!r}")


def drive_operator(model: HamiltonianModel, sys: SpinSystem,
                   channels: SequenceType[RfChannel],
                   envelope_bandwidth: float = 0.0) -> TimeDependentOperator:
    """Drive Hamiltonian evaluator for the active channels of a model.

    Args:
        model: physics model; selects lab, shared-coil rotating-frame,
            or target-only control forms.
        channels: active channels with absolute-time envelopes.
        envelope_bandwidth: fastest angular frequency of the envelopes
            (rad/s), folded into the sampling metadata.
    """
    model.check_frame(sys)
    v = model.variant
    chs = tuple(channels)
    if v == LAB_EXACT:
        def func(t: float) -> np.ndarray:
            h = np.zeros((4, 4), dtype=complex)
            for ch in chs:
                h = h + h_rf_lab(sys, ch, t)
            return h
        omega = 2.0 * max(ch.carrier for ch in chs) + envelope_bandwidth
        return TimeDependentOperator(func=func, omega_max=omega)
    if v in (ROTATING_EXACT, ROTATING_SECULAR_HOMO):
        def func(t: float) -> np.ndarray:
            h = np.zeros((4, 4), dtype=complex)
            for ch in chs:
                h = h + h_control_homo(sys, ch, t)
            return h
        return TimeDependentOperator(
            func=func, omega_max=abs(sys.delta_omega0) + envelope_bandwidth)
    if v in (ROTATING_SECULAR_HETERO, CONVENTIONAL_OFFSET):
        def func(t: float) -> np.ndarray:
            h = np.zeros((4, 4), dtype=complex)
            for ch in chs:
                h = h + h_control_hetero(sys, ch, t)
            return h
        return TimeDependentOperator(func=func, omega_max=envelope_bandwidth)
    raise ValueError(f"variant {v} does not define sequence drives")
