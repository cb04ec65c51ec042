"""End-to-end pulsed radar simulation: waveform, echoes, compression, maps.

A linear-FM pulse train is transmitted on several PRF channels. Each received
pulse is range-compressed twice: once against the full replica (fine Doppler
resolution, narrow Doppler tolerance) and once against each of N replica
segments (coarse resolution, wide tolerance). Per-range DFTs turn the pulse
and segment axes into the two Doppler maps whose peaks feed the
congruence-based velocity unfolding in ccrt.

Intra-pulse Doppler is modelled as a phase that advances once per subpulse
interval; that is what degrades the full-replica compression of fast targets
while the shorter segments tolerate it (see synth_echo for why the hold is
deliberate).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .ccrt import (
    OutOfWindowError,
    PrfChannel,
    UnfoldResult,
    unfold,
    unfold_tolerant,
    velocity_to_doppler,
)
from .numerics import RngStream, matched_filter

__all__ = [
    "SPEED_OF_LIGHT",
    "RadarSetup",
    "TargetTruth",
    "Datacube",
    "DopplerMap",
    "ChannelDetection",
    "DetectionReport",
    "make_lfm",
    "split_subpulses",
    "synth_echo",
    "compress_pp",
    "compress_sp",
    "build_datacube",
    "doppler_maps",
    "detect_and_unfold",
    "simulate_channel",
    "run_pipeline",
    "export_float32",
    "export_datacube",
    "export_maps",
]

SPEED_OF_LIGHT = 299_792_458.0

# peak-to-median ratio a map peak must reach to count as a detection
DETECTION_THRESHOLD = 3.0


@dataclass(frozen=True)
class RadarSetup:
    """Waveform and channel-set description.

    wavelength_m must agree with SPEED_OF_LIGHT / carrier_hz to 1e-6
    relative; use :meth:`build` to fill it (and the default sample rate of
    4x bandwidth) automatically.
    """

    carrier_hz: float
    wavelength_m: float
    pulse_width_s: float
    bandwidth_hz: float
    sample_rate_hz: float
    channels: tuple

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.carrier_hz <= 0:
            raise ValueError(f"carrier_hz must be positive, got {self.carrier_hz!r}")
        if self.pulse_width_s <= 0:
            raise ValueError(f"pulse_width_s must be positive, got {self.pulse_width_s!r}")
        if self.bandwidth_hz < 0:
            raise ValueError(f"bandwidth_hz must be non-negative, got {self.bandwidth_hz!r}")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz!r}")
        nominal = SPEED_OF_LIGHT / self.carrier_hz
        if abs(self.wavelength_m - nominal) > 1e-6 * nominal:
            raise ValueError(
                f"wavelength_m {self.wavelength_m!r} does not match "
                f"c/carrier_hz = {nominal!r} (1e-6 relative tolerance)"
            )
        if self.sample_rate_hz < 2.0 * self.bandwidth_hz:
            raise ValueError(
                f"sample_rate_hz {self.sample_rate_hz!r} must be at least twice "
                f"bandwidth_hz {self.bandwidth_hz!r}"
            )
        if self.pulse_width_s * self.sample_rate_hz < 8:
            raise ValueError("pulse must span at least 8 samples")
        for ch in self.channels:
            if not isinstance(ch, PrfChannel):
                raise TypeError(f"channels must be PrfChannel, got {type(ch).__name__}")
            if 1.0 / ch.prf < self.pulse_width_s:
                raise ValueError(
                    f"channel PRI {1.0 / ch.prf!r} s is shorter than the "
                    f"pulse width {self.pulse_width_s!r} s"
                )

    @classmethod
    def build(cls, carrier_hz, pulse_width_s, bandwidth_hz, channels, sample_rate_hz=None):
        if sample_rate_hz is None:
            sample_rate_hz = 4.0 * bandwidth_hz
        return cls(
            carrier_hz=float(carrier_hz),
            wavelength_m=SPEED_OF_LIGHT / float(carrier_hz),
            pulse_width_s=float(pulse_width_s),
            bandwidth_hz=float(bandwidth_hz),
            sample_rate_hz=float(sample_rate_hz),
            channels=tuple(channels),
        )

    @property
    def replica_length(self) -> int:
        return int(round(self.pulse_width_s * self.sample_rate_hz))


@dataclass(frozen=True)
class TargetTruth:
    """Ground-truth point target; negative radial velocity means receding."""

    range_m: float
    radial_velocity_mps: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.range_m > 0:
            raise ValueError(f"range_m must be positive, got {self.range_m!r}")
        if not math.isfinite(self.radial_velocity_mps):
            raise ValueError("radial_velocity_mps must be finite")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be non-negative, got {self.amplitude!r}")


@dataclass(frozen=True)
class Datacube:
    """Compressed samples of one channel, indexed [range, pulse, subpulse]."""

    channel: PrfChannel
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        object.__setattr__(self, "data", data)
        if data.ndim != 3:
            raise ValueError(f"datacube must be 3-D, got shape {data.shape}")
        if data.shape[1] != self.channel.num_pulses or data.shape[2] != self.channel.num_subpulses:
            raise ValueError(
                f"datacube shape {data.shape} does not match channel "
                f"({self.channel.num_pulses} pulses, {self.channel.num_subpulses} subpulses)"
            )
        if not np.isfinite(data).all():
            raise ValueError("datacube entries must be finite")


@dataclass(frozen=True)
class DopplerMap:
    """Magnitude maps of one channel.

    pp: [pulse-doppler bin, range bin], from the full-replica path.
    sp: [pulse-doppler bin, subpulse-doppler bin, range bin], from the 2-D DFT.
    """

    channel: PrfChannel
    pp: np.ndarray
    sp: np.ndarray


@dataclass(frozen=True)
class ChannelDetection:
    apparent_bin: int
    coarse_bin: int
    peak_range_bin: int
    peak_ratio: float  # pulse-map peak over map median
    detected: bool


@dataclass(frozen=True)
class DetectionReport:
    channels: tuple
    fused: UnfoldResult | None
    velocity_mps: float
    detected: bool


def make_lfm(setup: RadarSetup) -> np.ndarray:
    """Unit-magnitude linear-FM replica sampled on [-tau/2, tau/2)."""
    length = setup.replica_length
    t = np.arange(length) / setup.sample_rate_hz - setup.pulse_width_s / 2.0
    rate = setup.bandwidth_hz / setup.pulse_width_s
    return np.exp(1j * math.pi * rate * t * t)


def split_subpulses(replica: Sequence, n: int) -> list:
    """Cut the replica into n contiguous segments of near-equal length.

    Lengths differ by at most one sample; the leftover samples go to the
    trailing segments so the final one is never the short one. Concatenating
    the segments reproduces the replica.
    """
    arr = np.asarray(replica)
    if n < 1:
        raise ValueError(f"subpulse count must be >= 1, got {n}")
    if n > arr.size:
        raise ValueError(f"cannot split {arr.size} samples into {n} subpulses")
    base, rem = divmod(arr.size, n)
    lengths = [base] * (n - rem) + [base + 1] * rem
    out = []
    start = 0
    for length in lengths:
        out.append(arr[start : start + length])
        start += length
    return out


def _segment_offsets(segments) -> list:
    offsets = []
    pos = 0
    for seg in segments:
        offsets.append(pos)
        pos += len(seg)
    return offsets


def synth_echo(
    setup: RadarSetup,
    channel: PrfChannel,
    truth: TargetTruth,
    rng: RngStream = None,
    noise_sigma: float = 0.0,
) -> np.ndarray:
    """Raw receive window per pulse, shape (num_pulses, PRI samples).

    The echo is the replica delayed by round(2*range/c * Fs) samples and
    rotated by the Doppler phase exp(j 2 pi f_d (m/prf + t_fast)), where
    t_fast is the sample time inside the pulse repetition interval held
    constant over each subpulse interval (the phase advances at the subpulse
    rate N/tau). The hold matters for a chirp: with a continuous per-sample
    ramp the chirp's range-Doppler coupling re-absorbs the mismatch into a
    range shift, hiding exactly the full-replica degradation the subpulse
    path exists to survive; sampling at the rate the segment axis is read at
    keeps the two compression paths comparable. Complex white noise of
    per-component variance noise_sigma^2/2 is added when noise_sigma > 0
    (real grid drawn first, then imaginary).
    """
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be non-negative, got {noise_sigma!r}")
    if noise_sigma > 0 and rng is None:
        raise ValueError("an RngStream is required when noise_sigma > 0")
    replica = make_lfm(setup)
    length = replica.size
    window = int(round(setup.sample_rate_hz / channel.prf))
    delay = int(round(2.0 * truth.range_m / SPEED_OF_LIGHT * setup.sample_rate_hz))
    if delay < 0 or delay + length > window:
        raise OutOfWindowError(
            f"echo at delay {delay} samples (+{length} long) does not fit the "
            f"{window}-sample receive window of prf {channel.prf} Hz"
        )
    f_d = velocity_to_doppler(truth.radial_velocity_mps, setup.wavelength_m)
    pulses = np.arange(channel.num_pulses)[:, None]
    segments = split_subpulses(replica, channel.num_subpulses)
    starts = np.repeat(_segment_offsets(segments), [len(s) for s in segments])
    t_fast = (delay + starts)[None, :] / setup.sample_rate_hz
    phase = np.exp(2j * math.pi * f_d * (pulses / channel.prf + t_fast))
    rx = np.zeros((channel.num_pulses, window), dtype=np.complex128)
    rx[:, delay : delay + length] = truth.amplitude * replica[None, :] * phase
    if noise_sigma > 0:
        g = rng.generator
        scale = noise_sigma / math.sqrt(2.0)
        rx += g.normal(0.0, scale, rx.shape)
        rx += 1j * g.normal(0.0, scale, rx.shape)
    return rx


def compress_pp(rx_per_pulse, replica) -> np.ndarray:
    """Full-replica range compression of every pulse; shape (pulses, range)."""
    rx = np.asarray(rx_per_pulse)
    return np.stack([matched_filter(row, replica) for row in rx])


def compress_sp(rx_per_pulse, subpulse_replicas) -> np.ndarray:
    """Per-segment range compression, segments aligned to one range axis.

    Each segment's output is shifted back by the segment's offset inside the
    pulse, so a stationary scatterer peaks in the same range bin in every
    segment. On that shared axis the segment outputs sum to the full-replica
    compression exactly (correlation is linear in the replica), which is why
    n = 1 reproduces compress_pp bit for bit. Shape (pulses, segments, range).
    """
    rx = np.asarray(rx_per_pulse)
    segments = [np.asarray(s) for s in subpulse_replicas]
    offsets = _segment_offsets(segments)
    total = sum(seg.size for seg in segments)
    out_len = rx.shape[1] - total + 1
    if out_len < 1:
        raise ValueError("receive window shorter than the concatenated segments")
    rows = []
    for row in rx:
        rows.append(
            np.stack(
                [
                    matched_filter(row, seg)[off : off + out_len]
                    for seg, off in zip(segments, offsets)
                ]
            )
        )
    return np.stack(rows)


def build_datacube(profiles, channel: PrfChannel) -> Datacube:
    """Arrange compress_sp output (pulses, segments, range) as a Datacube."""
    arr = np.asarray(profiles, dtype=np.complex128)
    if arr.ndim != 3:
        raise ValueError(f"expected (pulses, segments, range) profiles, got shape {arr.shape}")
    return Datacube(channel=channel, data=np.ascontiguousarray(arr.transpose(2, 0, 1)))


def doppler_maps(cube: Datacube) -> DopplerMap:
    """Magnitude Doppler maps of one datacube.

    The pulse map DFTs the pulse axis of the segment-summed cube (the segment
    sum equals the full-replica compression, so no second compression pass is
    needed); the segment map applies the 2-D DFT over (pulse, segment).
    """
    data = cube.data  # (range, pulse, subpulse)
    pp = np.abs(np.fft.fft(data.sum(axis=2), axis=1)).T
    sp = np.abs(np.fft.fft2(data, axes=(1, 2)))
    return DopplerMap(channel=cube.channel, pp=pp, sp=np.moveaxis(sp, 0, 2))


def _coarse_bin_to_hz(l_bin: int, num_subpulses: int, pulse_width_s: float) -> float:
    # segment-axis DFT bin spacing is 1/tau; bins above half map to negative
    # frequencies (the Nyquist bin keeps the positive sign)
    if l_bin > num_subpulses / 2:
        l_bin -= num_subpulses
    return l_bin / pulse_width_s


def detect_and_unfold(
    maps: Sequence[DopplerMap],
    setup: RadarSetup,
    spacing_tolerance_hz: float = 0.0,
) -> DetectionReport:
    """Peak-pick every channel's maps and fuse them into one velocity.

    A channel detects when its pulse-map peak reaches 3x the map median. The
    folded pulse-map bins become congruence residues; the median segment-axis
    frequency across channels picks the unfolded lattice point. Any channel
    below threshold, or a residue set with no lattice point inside the
    segment-axis window, yields a no-detection report.

    A positive spacing_tolerance_hz switches to coincidence-mode unfolding
    (mean bin spacing, residues snapped within one bin) for channel sets
    whose spacings differ by at most that much; exact congruence unfolding
    is the reference behavior and stays the default.
    """
    if not maps:
        raise ValueError("at least one channel map is required")
    detections = []
    coarse_votes = []
    for dmap in maps:
        pp = dmap.pp
        k_bin, r_bin = np.unravel_index(int(np.argmax(pp)), pp.shape)
        median = float(np.median(pp))
        peak = float(pp[k_bin, r_bin])
        ratio = peak / median if median > 0 else math.inf
        k_sp, l_bin, _ = np.unravel_index(int(np.argmax(dmap.sp)), dmap.sp.shape)
        del k_sp
        coarse_votes.append(
            _coarse_bin_to_hz(int(l_bin), dmap.channel.num_subpulses, setup.pulse_width_s)
        )
        detections.append(
            ChannelDetection(
                apparent_bin=int(k_bin),
                coarse_bin=int(l_bin),
                peak_range_bin=int(r_bin),
                peak_ratio=ratio,
                detected=ratio >= DETECTION_THRESHOLD,
            )
        )
    detections = tuple(detections)
    if not all(d.detected for d in detections):
        return DetectionReport(channels=detections, fused=None, velocity_mps=math.nan, detected=False)
    subpulse_counts = {m.channel.num_subpulses for m in maps}
    if len(subpulse_counts) != 1:
        raise ValueError(f"channels disagree on subpulse count: {sorted(subpulse_counts)}")
    fmax = subpulse_counts.pop() / (2.0 * setup.pulse_width_s)
    coarse = float(np.median(coarse_votes))
    unfolder = unfold_tolerant if spacing_tolerance_hz > 0 else unfold
    try:
        fused = unfolder(
            residues=[d.apparent_bin for d in detections],
            channels=[m.channel for m in maps],
            coarse_hz=coarse,
            fmax_hz=fmax,
            wavelength_m=setup.wavelength_m,
        )
    except OutOfWindowError:
        return DetectionReport(channels=detections, fused=None, velocity_mps=math.nan, detected=False)
    return DetectionReport(
        channels=detections,
        fused=fused,
        velocity_mps=fused.velocity_mps,
        detected=True,
    )


def simulate_channel(
    setup: RadarSetup,
    channel: PrfChannel,
    truth: TargetTruth,
    rng: RngStream = None,
    noise_sigma: float = 0.0,
):
    """Synthesize one channel and carry it to (Datacube, DopplerMap)."""
    rx = synth_echo(setup, channel, truth, rng=rng, noise_sigma=noise_sigma)
    replica = make_lfm(setup)
    segments = split_subpulses(replica, channel.num_subpulses)
    cube = build_datacube(compress_sp(rx, segments), channel)
    return cube, doppler_maps(cube)


def run_pipeline(
    setup: RadarSetup,
    truth: TargetTruth,
    seed: int = None,
    noise_sigma: float = 0.0,
    spacing_tolerance_hz: float = 0.0,
) -> DetectionReport:
    """Simulate every channel (stream per channel) and fuse the detections."""
    maps = []
    for index, channel in enumerate(setup.channels):
        rng = RngStream(seed, stream_id=index) if seed is not None else None
        _, dmap = simulate_channel(setup, channel, truth, rng=rng, noise_sigma=noise_sigma)
        maps.append(dmap)
    return detect_and_unfold(maps, setup, spacing_tolerance_hz=spacing_tolerance_hz)


def export_float32(path, array, axis_names, meta: dict = None) -> Path:
    """Write an array as little-endian float32 plus a JSON sidecar.

    Complex input gains a trailing length-2 component axis (real, imag).
    The sidecar (at path + '.json') records dtype, shape, axis names, and
    row-major ordering so the grid can be reloaded without guessing.
    """
    arr = np.asarray(array)
    names = list(axis_names)
    if np.iscomplexobj(arr):
        arr = np.stack([arr.real, arr.imag], axis=-1)
        names.append("component")
    if arr.ndim != len(names):
        raise ValueError(f"{arr.ndim}-D grid needs {arr.ndim} axis names, got {names}")
    out = Path(path)
    arr.astype("<f4").tofile(out)
    sidecar = {
        "dtype": "<f4",
        "order": "C",
        "shape": [int(s) for s in arr.shape],
        "axes": names,
    }
    if meta:
        sidecar.update(meta)
    Path(str(out) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return out


def export_datacube(cube: Datacube, path) -> Path:
    return export_float32(
        path,
        cube.data,
        ("range", "pulse", "subpulse"),
        meta={"prf_hz": cube.channel.prf},
    )


def export_maps(dmap: DopplerMap, path_base) -> tuple:
    base = str(path_base)
    pp_path = export_float32(
        base + ".pp.f32", dmap.pp, ("pulse_doppler", "range"), meta={"prf_hz": dmap.channel.prf}
    )
    sp_path = export_float32(
        base + ".sp.f32",
        dmap.sp,
        ("pulse_doppler", "subpulse_doppler", "range"),
        meta={"prf_hz": dmap.channel.prf},
    )
    return pp_path, sp_path
