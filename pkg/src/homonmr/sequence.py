"""Pulse-sequence representation, text grammar, and builders.

A sequence is a tuple of columns executed left to right; each column
holds one element per transmit track (s1, s2).  Hard pulses are
instantaneous rotations; soft pulses carry a Gaussian envelope of a
given width; delays may be literal seconds or symbolic fractions of
the coupling period; fg denotes a pulsed-field-gradient crusher.

Text form, one column per line:

    track ':' item (';' track ':' item)*
    track := 's1' | 's2' | 'both'
    item  := 'pi' ['/' INT] axis ['width' DUR]
           | 'delay' DUR | 'fg' | 'nop'
    axis  := 'x' | 'y' | '-x' | '-y'
    DUR   := FLOAT ('s'|'ms'|'us') | '1/' INT 'J'

'#' starts a comment; blank lines are skipped.  parse_sequence and
format_sequence round-trip: parsing a formatted sequence reproduces
its columns exactly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable

from .hamiltonian import TWO_PI, SpinSystem

AXIS_PHASES = {
    "x": 0.0,
    "y": math.pi / 2.0,
    "-x": math.pi,
    "-y": -math.pi / 2.0,
}

# A soft pulse's envelope is truncated at three standard deviations on
# each side, so the width (total support) is six sigma.
GAUSSIAN_SUPPORT_SIGMAS = 6.0

# Nominal flip angle integral must match to this relative tolerance.
CALIBRATION_RTOL = 1e-6

# Admissible soft-pulse widths span (selectivity window): more than a
# full beat of the Larmor difference, less than a tenth of the
# coupling period.
LOWER_WINDOW_BEATS = 1.0
UPPER_WINDOW_FRACTION = 0.1


class SequenceParseError(ValueError):
    """Raised for malformed sequence text, with line position."""


@dataclass(frozen=True)
class GaussianEnvelope:
    """Truncated Gaussian amplitude envelope of a soft pulse.

    The envelope is centered on its support [0, width] and truncated
    at plus/minus three standard deviations; the peak amplitude is set
    so the integral of omega_1(t) equals the flip angle exactly.

    Attributes:
        flip: nominal rotation angle (rad), in (0, 2 pi].
        width: total support (s), > 0.
    """

    flip: float
    width: float

    def __post_init__(self):
        if not 0.0 < self.flip <= TWO_PI:
            raise ValueError("flip angle must lie in (0, 2 pi]")
        if not self.width > 0.0:
            raise ValueError("width must be positive")

    @property
    def sigma(self) -> float:
        return self.width / GAUSSIAN_SUPPORT_SIGMAS

    @property
    def peak(self) -> float:
        half_sigmas = GAUSSIAN_SUPPORT_SIGMAS / 2.0
        area = self.sigma * math.sqrt(2.0 * math.pi) * math.erf(
            half_sigmas / math.sqrt(2.0))
        return self.flip / area

    @property
    def bandwidth(self) -> float:
        """Angular-frequency scale of envelope variation, 2 pi/sigma."""
        return TWO_PI / self.sigma

    def amplitude(self, t_rel: float) -> float:
        """Envelope value at time t_rel after the pulse starts."""
        if t_rel < 0.0 or t_rel > self.width:
            return 0.0
        x = (t_rel - 0.5 * self.width) / self.sigma
        return self.peak * math.exp(-0.5 * x * x)


@dataclass(frozen=True)
class Pulse:
    """One rotation on one track.

    Attributes:
        denom: flip angle is pi/denom.
        axis: 'x', 'y', '-x', or '-y'.
        shape: 'hard' (instantaneous) or 'gaussian'.
        width: envelope support (s) for gaussian pulses, else None.
        carrier: explicit carrier (rad/s) set by translation; None
            means resonant with the track's spin.  Not compared.
        compensation: marks the echo inversion pulses that a
            translation pass must keep hard.  Not compared.
    """

    denom: int
    axis: str
    shape: str = "hard"
    width: float | None = None
    carrier: float | None = field(default=None, compare=False)
    compensation: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.denom < 1:
            raise ValueError("flip denominator must be a positive integer")
        if self.axis not in AXIS_PHASES:
            raise ValueError(f"unknown axis {self.axis!r}")
        if self.shape not in ("hard", "gaussian"):
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.shape == "gaussian":
            if self.width is None or not self.width > 0.0:
                raise ValueError("gaussian pulses need a positive width")
        elif self.width is not None:
            raise ValueError("hard pulses take no width")

    @property
    def flip(self) -> float:
        return math.pi / self.denom

    @property
    def phase(self) -> float:
        return AXIS_PHASES[self.axis]

    def envelope(self) -> GaussianEnvelope:
        if self.shape != "gaussian":
            raise ValueError("only gaussian pulses carry an envelope")
        return GaussianEnvelope(flip=self.flip, width=self.width)

    def duration(self) -> float:
        return self.width if self.shape == "gaussian" else 0.0


@dataclass(frozen=True)
class Delay:
    """Free evolution; literal seconds or a symbolic coupling fraction.

    A symbolic delay with j_fraction = n lasts one n-th of the coupling
    period, 2 pi / (n J)."""

    seconds: float | None = None
    j_fraction: int | None = None

    def __post_init__(self):
        if (self.seconds is None) == (self.j_fraction is None):
            raise ValueError("set exactly one of seconds or j_fraction")
        if self.seconds is not None and not self.seconds >= 0.0:
            raise ValueError("delay must be nonnegative")
        if self.j_fraction is not None and self.j_fraction < 1:
            raise ValueError("j_fraction must be a positive integer")

    def duration(self, sys: SpinSystem | None = None) -> float:
        if self.seconds is not None:
            return self.seconds
        if sys is None:
            raise ValueError("symbolic delay needs a spin system to resolve")
        if sys.j == 0.0:
            raise ValueError("cannot resolve a coupling delay with J = 0")
        return TWO_PI / (self.j_fraction * sys.j)


@dataclass(frozen=True)
class Gradient:
    """Pulsed-field-gradient crusher; instantaneous in the simulation."""

    n_slices: int = 64


@dataclass(frozen=True)
class Nop:
    """Idle placeholder on a track."""


Element = Pulse | Delay | Gradient | Nop


@dataclass(frozen=True)
class Column:
    """Simultaneous elements on the two tracks.

    Both tracks start together at the column boundary; the column lasts
    as long as its longest element, the other track idling under the
    system Hamiltonian.  Delays and gradients must appear on both
    tracks identically so the timing is unambiguous, and a single
    column may not mix hard and soft pulses.
    """

    s1: Element
    s2: Element

    def __post_init__(self):
        if isinstance(self.s1, Delay) != isinstance(self.s2, Delay):
            raise ValueError("a delay must occupy both tracks")
        if isinstance(self.s1, Delay) and self.s1 != self.s2:
            raise ValueError("track delays must be identical")
        if isinstance(self.s1, Gradient) != isinstance(self.s2, Gradient):
            raise ValueError("a gradient must occupy both tracks")
        if isinstance(self.s1, Gradient) and self.s1 != self.s2:
            raise ValueError("track gradients must be identical")
        if (isinstance(self.s1, Pulse) and isinstance(self.s2, Pulse)
                and self.s1.shape != self.s2.shape):
            raise ValueError("cannot mix hard and soft pulses in one column")

    def duration(self, sys: SpinSystem | None = None) -> float:
        d = 0.0
        for el in (self.s1, self.s2):
            if isinstance(el, Pulse):
                d = max(d, el.duration())
            elif isinstance(el, Delay):
                d = max(d, el.duration(sys))
        return d

    def pulses(self) -> list[tuple[int, Pulse]]:
        out = []
        if isinstance(self.s1, Pulse):
            out.append((1, self.s1))
        if isinstance(self.s2, Pulse):
            out.append((2, self.s2))
        return out


@dataclass(frozen=True)
class Sequence:
    """Named tuple of columns.  Equality compares columns only; the
    name is metadata and does not survive the text form."""

    name: str
    columns: tuple[Column, ...]

    def __eq__(self, other):
        if not isinstance(other, Sequence):
            return NotImplemented
        return self.columns == other.columns

    def __hash__(self):
        return hash(self.columns)

    def duration(self, sys: SpinSystem | None = None) -> float:
        return sum(col.duration(sys) for col in self.columns)


_DUR_SYMBOLIC = re.compile(r"^1/(\d+)J$")
_DUR_LITERAL = re.compile(r"^([0-9][0-9.eE+-]*)(s|ms|us)$")
_UNIT_SCALE = {"s": 1.0, "ms": 1e-3, "us": 1e-6}


def _parse_duration(token: str, ln: int) -> Delay:
    m = _DUR_SYMBOLIC.match(token)
    if m:
        return Delay(j_fraction=int(m.group(1)))
    m = _DUR_LITERAL.match(token)
    if m:
        try:
            value = float(m.group(1))
        except ValueError:
            raise SequenceParseError(
                f"line {ln}: bad duration value {token!r}") from None
        return Delay(seconds=value * _UNIT_SCALE[m.group(2)])
    raise SequenceParseError(
        f"line {ln}: bad duration {token!r}; expected e.g. '5.2ms' or '1/4J'")


def _parse_width(token: str, ln: int) -> float:
    delay = _parse_duration(token, ln)
    if delay.seconds is None:
        raise SequenceParseError(
            f"line {ln}: pulse width must be a literal duration, "
            f"not {token!r}")
    return delay.seconds


def _parse_item(text: str, ln: int) -> Element:
    tokens = text.split()
    if not tokens:
        raise SequenceParseError(f"line {ln}: empty item")
    head = tokens[0]
    if head == "nop":
        if len(tokens) > 1:
            raise SequenceParseError(f"line {ln}: nop takes no arguments")
        return Nop()
    if head == "fg":
        if len(tokens) > 1:
            raise SequenceParseError(f"line {ln}: fg takes no arguments")
        return Gradient()
    if head == "delay":
        if len(tokens) != 2:
            raise SequenceParseError(
                f"line {ln}: delay takes exactly one duration")
        return _parse_duration(tokens[1], ln)
    if head == "pi" or head.startswith("pi/"):
        if head == "pi":
            denom = 1
        else:
            try:
                denom = int(head[3:])
            except ValueError:
                raise SequenceParseError(
                    f"line {ln}: bad flip fraction {head!r}") from None
        if len(tokens) < 2:
            raise SequenceParseError(f"line {ln}: pulse needs an axis")
        axis = tokens[1]
        if axis not in AXIS_PHASES:
            raise SequenceParseError(
                f"line {ln}: unknown axis {axis!r} at column "
                f"{text.find(axis) + 1}")
        rest = tokens[2:]
        if not rest:
            return Pulse(denom=denom, axis=axis)
        if len(rest) == 2 and rest[0] == "width":
            width = _parse_width(rest[1], ln)
            return Pulse(denom=denom, axis=axis, shape="gaussian", width=width)
        raise SequenceParseError(
            f"line {ln}: unexpected tokens {' '.join(rest)!r} after pulse")
    raise SequenceParseError(f"line {ln}: unknown item {head!r}")


def parse_sequence(text: str, name: str = "parsed") -> Sequence:
    """Parse sequence text into its column representation.

    Raises:
        SequenceParseError: on malformed text, naming the line.
    """
    columns = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        entries: dict[str, Element] = {}
        for segment in line.split(";"):
            segment = segment.strip()
            if ":" not in segment:
                raise SequenceParseError(
                    f"line {ln}: expected 'track: item', got {segment!r}")
            track, item_text = segment.split(":", 1)
            track = track.strip()
            if track not in ("s1", "s2", "both"):
                raise SequenceParseError(
                    f"line {ln}: unknown track {track!r}")
            if track in entries or "both" in entries or (
                    track == "both" and entries):
                raise SequenceParseError(
                    f"line {ln}: conflicting entries for track {track!r}")
            entries[track] = _parse_item(item_text.strip(), ln)
        try:
            if "both" in entries:
                column = Column(entries["both"], entries["both"])
            else:
                column = Column(entries.get("s1", Nop()),
                                entries.get("s2", Nop()))
        except ValueError as exc:
            raise SequenceParseError(f"line {ln}: {exc}") from None
        columns.append(column)
    return Sequence(name=name, columns=tuple(columns))


def _format_duration(delay: Delay) -> str:
    if delay.j_fraction is not None:
        return f"1/{delay.j_fraction}J"
    return f"{delay.seconds:.17g}s"


def _format_item(el: Element) -> str:
    if isinstance(el, Nop):
        return "nop"
    if isinstance(el, Gradient):
        return "fg"
    if isinstance(el, Delay):
        return f"delay {_format_duration(el)}"
    if isinstance(el, Pulse):
        head = "pi" if el.denom == 1 else f"pi/{el.denom}"
        out = f"{head} {el.axis}"
        if el.shape == "gaussian":
            out += f" width {el.width:.17g}s"
        return out
    raise TypeError(f"unknown element {el!r}")


def format_sequence(seq: Sequence) -> str:
    """Render a sequence in the text grammar, one column per line."""
    lines = []
    for col in seq.columns:
        if col.s1 == col.s2 and isinstance(col.s1, (Delay, Gradient, Nop)):
            lines.append(f"both: {_format_item(col.s1)}")
        else:
            lines.append(
                f"s1: {_format_item(col.s1)} ; s2: {_format_item(col.s2)}")
    return "\n".join(lines) + "\n"


def soft_width_window(sys: SpinSystem) -> tuple[float, float]:
    """Admissible soft-pulse width interval (lower, upper) in seconds.

    A selective pulse must last longer than one beat of the Larmor
    difference, so the partner-spin cross terms average out, yet stay
    well below the coupling period so the register barely evolves
    under J while the pulse plays."""
    lower = LOWER_WINDOW_BEATS * TWO_PI / abs(sys.delta_omega0)
    upper = UPPER_WINDOW_FRACTION * TWO_PI / sys.j
    return lower, upper


def translate_hard_to_soft(seq: Sequence, tau: float | tuple[float, float],
                           sys: SpinSystem) -> Sequence:
    """Replace hard pulses with resonant Gaussian soft pulses.

    Args:
        seq: source sequence.
        tau: soft width (s); a pair gives per-track widths (s1, s2).
        sys: spin system fixing the admissible width window and the
            per-track resonant carriers.

    Pulses flagged as compensation survive untouched: the echo pair
    relies on broadband inversions.  Existing gaussian pulses are kept.

    Raises:
        ValueError: when a width falls outside the admissible window;
            the message names the violated bound.
    """
    taus = tau if isinstance(tau, tuple) else (tau, tau)
    lower, upper = soft_width_window(sys)
    for track, value in zip((1, 2), taus):
        if not value > lower:
            raise ValueError(
                f"track s{track} width {value:g} s is at or below the "
                f"selectivity lower bound 2 pi/|delta_omega0| = {lower:g} s")
        if not value < upper:
            raise ValueError(
                f"track s{track} width {value:g} s is at or above the "
                f"coupling upper bound (2 pi/J)/10 = {upper:g} s")
    carriers = (sys.omega0_1, sys.omega0_2)

    def translate(el: Element, track: int) -> Element:
        if not isinstance(el, Pulse) or el.shape != "hard" or el.compensation:
            return el
        return Pulse(denom=el.denom, axis=el.axis, shape="gaussian",
                     width=taus[track - 1], carrier=carriers[track - 1])

    columns = tuple(
        Column(translate(col.s1, 1), translate(col.s2, 2))
        for col in seq.columns)
    return Sequence(name=f"{seq.name}-soft", columns=columns)


def _p(denom: int, axis: str, compensation: bool = False) -> Pulse:
    return Pulse(denom=denom, axis=axis, compensation=compensation)


DJ_LABELS = ("f1", "f2", "f3", "f4")


def build_dj(label: str) -> Sequence:
    """Hard-pulse sequence evaluating one of the four one-bit functions
    in the two-spin function-evaluation experiment, reading pulse
    included as the final column.

    The constant functions f1 and f2 use a pair of quarter-period
    delays with inversion pulses refocusing the coupling; the balanced
    functions f3 and f4 use a half-period delay so the conditional
    phase survives.  Appending the spin-1 reading pulse makes the
    sequence output directly observable as the spin-1 doublet.
    """
    if label not in DJ_LABELS:
        raise ValueError(f"unknown function label {label!r}; "
                         f"choose from {DJ_LABELS}")
    quarter = Delay(j_fraction=4)
    half = Delay(j_fraction=2)
    if label in ("f1", "f2"):
        col6_s2: Element = _p(1, "x") if label == "f1" else Nop()
        columns = (
            Column(_p(2, "y"), _p(2, "-y")),
            Column(Nop(), Nop()),
            Column(quarter, quarter),
            Column(Nop(), _p(1, "x")),
            Column(quarter, quarter),
            Column(Nop(), col6_s2),
            Column(_p(2, "-y"), _p(2, "y")),
        )
    else:
        col5_s2 = _p(2, "x") if label == "f3" else _p(2, "-x")
        columns = (
            Column(_p(2, "y"), _p(2, "-y")),
            Column(Nop(), _p(2, "y")),
            Column(half, half),
            Column(_p(2, "-y"), _p(2, "-y")),
            Column(_p(2, "-x"), col5_s2),
            Column(_p(2, "y"), Nop()),
            Column(_p(2, "-y"), _p(2, "y")),
        )
    columns = columns + (Column(_p(2, "x"), Nop()),)
    return Sequence(name=f"dj_{label}", columns=columns)


def build_pps(compensate: bool = False) -> Sequence:
    """Temporal-averaging preparation of the pseudo-pure |00> state.

    A third-flip pulse on spin 2 and a quarter-flip pulse on spin 1,
    each followed by a gradient crusher, shape the populations; a
    half-period delay then a final quarter pulse and crusher leave the
    deviation populations of |00> above the uniform background.

    With compensate=True the half-period delay is replaced by two
    quarter-period delays, each followed by a hard inversion pulse on
    spin 1, which cancels the partner-spin kicks of a shared coil
    while refocusing nothing else: the net coupling evolution is
    preserved.  The reading pulse is not part of this sequence.
    """
    if compensate:
        quarter = Delay(j_fraction=4)
        coupling = (
            Column(quarter, quarter),
            Column(_p(1, "x", compensation=True), Nop()),
            Column(quarter, quarter),
            Column(_p(1, "x", compensation=True), Nop()),
        )
        name = "pps-compensated"
    else:
        half = Delay(j_fraction=2)
        coupling = (Column(half, half),)
        name = "pps"
    columns = (
        Column(Nop(), _p(3, "x")),
        Column(Gradient(), Gradient()),
        Column(_p(4, "x"), Nop()),
    ) + coupling + (
        Column(_p(4, "-y"), Nop()),
        Column(Gradient(), Gradient()),
    )
    return Sequence(name=name, columns=columns)


def scale_coupling_delays(seq: Sequence, factor: float,
                          sys: SpinSystem) -> Sequence:
    """Rescale every delay column by a common factor, resolving
    symbolic durations; pulses are untouched.  Used to sweep the total
    coupling-evolution time of a sequence."""
    if not factor > 0.0:
        raise ValueError("scale factor must be positive")

    def scale(el: Element) -> Element:
        if isinstance(el, Delay):
            return Delay(seconds=factor * el.duration(sys))
        return el

    columns = tuple(Column(scale(c.s1), scale(c.s2)) for c in seq.columns)
    return Sequence(name=seq.name, columns=columns)


def sequences_equal(a: Iterable[Column], b: Iterable[Column]) -> bool:
    return tuple(a) == tuple(b)
