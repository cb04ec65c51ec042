"""Doppler bin folding and congruence-based unfolding across staggered PRFs.

A target moving faster than one PRF's unambiguous window appears in a folded
(aliased) Doppler bin in each channel. When the per-channel bin counts M_i are
pairwise coprime and all channels share one bin spacing, the folded residues
determine the true bin uniquely modulo Theta = prod M_i; a coarse frequency
estimate (from the subpulse axis) then picks the sign/wrap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "PrfChannel",
    "CongruenceSystem",
    "UnfoldResult",
    "NotInvertibleError",
    "OutOfWindowError",
    "modular_inverse",
    "ccrt_solve",
    "apparent_bin",
    "fold_bin",
    "doppler_to_velocity",
    "velocity_to_doppler",
    "unfold",
    "unfold_tolerant",
]


class NotInvertibleError(ValueError):
    """Raised when a modular inverse does not exist (non-coprime moduli)."""


class OutOfWindowError(ValueError):
    """Raised when a frequency or delay falls outside the representable window."""


@dataclass(frozen=True)
class PrfChannel:
    """One PRF channel: pulse count M, subpulse count N, bin spacing prf/M."""

    prf: float
    num_pulses: int
    num_subpulses: int = 1

    def __post_init__(self):
        if self.prf <= 0:
            raise ValueError("prf must be positive")
        for name in ("num_pulses", "num_subpulses"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer")
            object.__setattr__(self, name, int(v))

    @property
    def bin_spacing(self) -> float:
        return self.prf / self.num_pulses


@dataclass(frozen=True)
class CongruenceSystem:
    """Simultaneous congruences b = residues[i] (mod moduli[i])."""

    moduli: tuple[int, ...]
    residues: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "moduli", tuple(int(m) for m in self.moduli))
        object.__setattr__(self, "residues", tuple(int(r) for r in self.residues))
        if len(self.moduli) != len(self.residues) or not self.moduli:
            raise ValueError("moduli and residues must be non-empty and equal length")
        for m, r in zip(self.moduli, self.residues):
            if m < 1:
                raise ValueError("moduli must be >= 1")
            if not 0 <= r < m:
                raise ValueError(f"residue {r} out of range for modulus {m}")
        for i in range(len(self.moduli)):
            for j in range(i + 1, len(self.moduli)):
                if math.gcd(self.moduli[i], self.moduli[j]) != 1:
                    raise NotInvertibleError(
                        f"moduli {self.moduli[i]} and {self.moduli[j]} are not coprime"
                    )

    @property
    def theta(self) -> int:
        return math.prod(self.moduli)


@dataclass(frozen=True)
class UnfoldResult:
    bin: int
    doppler_hz: float
    velocity_mps: float
    sign_resolved: bool
    coarse_hz: float


def modular_inverse(a: int, m: int) -> int:
    """Smallest b in [1, m) with (a*b) mod m = 1, by extended Euclid."""
    a, m = int(a), int(m)
    if m < 1:
        raise ValueError("modulus must be >= 1")
    g, x, _ = _extended_gcd(a % m, m)
    if g != 1:
        raise NotInvertibleError(f"{a} has no inverse modulo {m} (gcd {g})")
    if m == 1:
        return 0
    return x % m


def _extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    # returns (g, x, y) with a*x + b*y = g
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    return old_r, old_x, old_y


def ccrt_solve(sys: CongruenceSystem) -> int:
    """Unique b in [0, Theta) satisfying every congruence of the system.

    b = (sum_i residues[i] * beta_i) mod Theta with beta_i = b_i * Theta/M_i
    and b_i the modular inverse of Theta/M_i modulo M_i.
    """
    theta = sys.theta
    total = 0
    for m_i, r_i in zip(sys.moduli, sys.residues):
        q_i = theta // m_i
        b_i = modular_inverse(q_i, m_i)
        total += r_i * b_i * q_i
    return total % theta


def apparent_bin(f_ap: float, channel: PrfChannel) -> int:
    """Folded Doppler bin observed for an in-window frequency.

    Non-negative frequencies map to floor(|f|/spacing); negative ones to
    M - floor(|f|/spacing), with the boundary result M wrapped to 0.
    """
    half = channel.prf / 2.0
    if abs(f_ap) > half * (1.0 + 1e-12):
        raise OutOfWindowError(f"|{f_ap}| Hz exceeds the +-{half} Hz window")
    m = channel.num_pulses
    k = int(math.floor(abs(f_ap) / channel.bin_spacing))
    if f_ap >= 0:
        return min(k, m - 1) if k == m else k
    b = m - k
    return 0 if b == m else b


def fold_bin(b_d: int, channel: PrfChannel) -> int:
    """Residue of a true bin index: b_d mod M."""
    if b_d < 0:
        raise ValueError("bin index must be non-negative")
    return int(b_d) % channel.num_pulses


def doppler_to_velocity(f_d: float, wavelength: float) -> float:
    """Radial velocity for a Doppler shift: v = f * wavelength / 2."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    return f_d * wavelength / 2.0


def velocity_to_doppler(v: float, wavelength: float) -> float:
    """Doppler shift for a radial velocity: f = 2 v / wavelength."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    return 2.0 * v / wavelength


def common_bin_spacing(channels: Sequence[PrfChannel], rel_tol: float = 1e-9) -> float:
    """The shared bin spacing of a channel set; raises if they differ."""
    if not channels:
        raise ValueError("channel list must be non-empty")
    spacing = channels[0].bin_spacing
    for ch in channels[1:]:
        if abs(ch.bin_spacing - spacing) > rel_tol * spacing:
            raise ValueError(
                "channels do not share a common bin spacing: "
                f"{spacing} Hz vs {ch.bin_spacing} Hz; exact congruence "
                "unfolding requires prf_i = M_i * spacing with one spacing"
            )
    return spacing


def unfold(
    residues: Sequence[int],
    channels: Sequence[PrfChannel],
    coarse_hz: float,
    fmax_hz: float | None = None,
    wavelength_m: float | None = None,
) -> UnfoldResult:
    """Recover the true Doppler frequency from per-channel folded bins.

    Solves the congruence system for the true bin b in [0, Theta), then picks
    the lattice frequency (b + q*Theta) * spacing (integer q, magnitude
    bounded by fmax_hz) closest to the coarse estimate. fmax_hz defaults to
    half the full unfolded span Theta*spacing/2. Velocity is reported when a
    wavelength is supplied, else NaN.
    """
    if len(residues) != len(channels):
        raise ValueError("one residue per channel required")
    spacing = common_bin_spacing(channels)
    sys = CongruenceSystem(
        moduli=tuple(ch.num_pulses for ch in channels),
        residues=tuple(int(r) for r in residues),
    )
    b = ccrt_solve(sys)
    theta = sys.theta
    span = theta * spacing
    fmax = span / 2.0 if fmax_hz is None else float(fmax_hz)

    base = b * spacing
    q_lo = math.ceil((-fmax - base) / span)
    q_hi = math.floor((fmax - base) / span)
    candidates = [base + q * span for q in range(q_lo, q_hi + 1)]
    if not candidates:
        raise OutOfWindowError(
            f"no unfolded frequency for bin {b} within +-{fmax} Hz"
        )
    best = min(candidates, key=lambda f: (abs(f - coarse_hz), -f))
    ties = [f for f in candidates if abs(abs(f - coarse_hz) - abs(best - coarse_hz)) <= 1e-9 * max(1.0, abs(best))]
    sign_resolved = len(ties) == 1
    velocity = doppler_to_velocity(best, wavelength_m) if wavelength_m else math.nan
    return UnfoldResult(
        bin=b,
        doppler_hz=best,
        velocity_mps=velocity,
        sign_resolved=sign_resolved,
        coarse_hz=float(coarse_hz),
    )


def unfold_tolerant(
    residues: Sequence[int],
    channels: Sequence[PrfChannel],
    coarse_hz: float,
    fmax_hz: float | None = None,
    wavelength_m: float | None = None,
) -> UnfoldResult:
    """Coincidence-mode unfold for imperfect residue measurements.

    Channel spacings are averaged instead of required identical, and every
    per-channel residue perturbation within +-1 bin is tried; the solution
    whose unfolded frequency lands closest to the coarse estimate wins. Use
    this only when the configuration cannot guarantee one exact shared bin
    spacing; the exact :func:`unfold` is the reference behavior.
    """
    if len(residues) != len(channels):
        raise ValueError("one residue per channel required")
    mean_spacing = sum(ch.bin_spacing for ch in channels) / len(channels)
    snapped = [
        PrfChannel(prf=mean_spacing * ch.num_pulses,
                   num_pulses=ch.num_pulses,
                   num_subpulses=ch.num_subpulses)
        for ch in channels
    ]
    best: UnfoldResult | None = None
    for deltas in itertools.product((-1, 0, 1), repeat=len(residues)):
        shifted = [
            (int(r) + d) % ch.num_pulses
            for r, d, ch in zip(residues, deltas, snapped)
        ]
        try:
            res = unfold(shifted, snapped, coarse_hz, fmax_hz, wavelength_m)
        except OutOfWindowError:
            continue
        if best is None or abs(res.doppler_hz - coarse_hz) < abs(best.doppler_hz - coarse_hz):
            best = res
    if best is None:
        raise OutOfWindowError("no residue perturbation yields an in-window frequency")
    return best
