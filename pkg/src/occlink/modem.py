"""LED waveform encoders and frame-sequence decoders.

Four schemes are supported:

* ``NYQUIST_OOK`` - LED held bright/dark per bit, camera samples at twice the
  pulse rate.  A bit lasts four frame periods (two pulse periods) and is read
  from two consecutive frame pairs.  Framing uses an HDLC flag with bit
  stuffing.
* ``UFSOOK`` - undersampled FSK.  Space is a harmonic of the frame rate,
  mark is a harmonic offset by half the frame rate.  Each bit spans two
  frames.  The start delimiter is a high-frequency burst that integrates to
  half intensity over the exposure window; a 16-bit length header follows.
* ``ROLLING_OOK`` - Manchester-coded OOK read from the row bands of a
  rolling-shutter frame.  Delimiter ``111000`` (illegal in Manchester), then a
  16-bit length header.
* ``S2PSK`` - two LED groups blink at the same frequency; in-phase encodes 0,
  anti-phase encodes 1.  HDLC framing as for Nyquist OOK.

Waveforms are piecewise on a uniform slot grid; each slot holds either a
constant level or a 50% duty square tone per LED group.  Tone phase is
continuous across slots so the exact exposure-window average can be computed
in closed form by :meth:`LedWaveform.mean`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class ModemError(ValueError):
    pass


class FlickerError(ModemError):
    """A configured LED frequency is below the flicker-free limit."""


class UndersampledError(ModemError):
    """Rolling-shutter bands narrower than one row."""


FLICKER_LIMIT_HZ = 100.0
HDLC_FLAG = (0, 1, 1, 1, 1, 1, 1, 0)
ROLLING_SFD = (1, 1, 1, 0, 0, 0)
LENGTH_BITS = 16
UFSOOK_SFD_FRAMES = 4
DEFAULT_THRESHOLDS = (0.33, 0.66)


class Scheme(enum.Enum):
    NYQUIST_OOK = "nyquist_ook"
    UFSOOK = "ufsook"
    ROLLING_OOK = "rolling_ook"
    S2PSK = "s2psk"


@dataclass(frozen=True)
class Packet:
    payload: tuple
    sfd: tuple = HDLC_FLAG

    def __post_init__(self):
        bits = tuple(int(b) for b in self.payload)
        if any(b not in (0, 1) for b in bits):
            raise ModemError("payload must contain only 0/1")
        object.__setattr__(self, "payload", bits)

    @property
    def length(self) -> int:
        return len(self.payload)

    @classmethod
    def random(cls, rng: np.random.Generator, length: int) -> "Packet":
        return cls(tuple(rng.integers(0, 2, size=length).tolist()))


@dataclass(frozen=True)
class DemodResult:
    bits: tuple = ()
    frames_consumed: int = 0
    unclear_frames: int = 0
    sync_found: bool = False
    erasures: int = 0

    def __post_init__(self):
        if not self.sync_found and self.bits:
            raise ModemError("bits must be empty when sync is not found")

    @property
    def ok(self) -> bool:
        return self.sync_found and self.erasures == 0


NO_SYNC = DemodResult()


# ---------------------------------------------------------------------------
# framing helpers


def stuff_bits(bits) -> list[int]:
    """Insert a 0 after every run of five 1s."""
    out, run = [], 0
    for b in bits:
        out.append(b)
        run = run + 1 if b == 1 else 0
        if run == 5:
            out.append(0)
            run = 0
    return out


def destuff_bits(bits) -> list[int] | None:
    """Inverse of :func:`stuff_bits`; ``None`` when a stuffed bit is not 0."""
    out, run, skip = [], 0, False
    for b in bits:
        if skip:
            if b != 0:
                return None
            skip, run = False, 0
            continue
        out.append(b)
        run = run + 1 if b == 1 else 0
        if run == 5:
            skip = True
    return out


def hdlc_frame(packet: Packet) -> list[int]:
    flag = list(packet.sfd)
    return flag + stuff_bits(packet.payload) + flag


def _find(seq: np.ndarray, pattern, start: int = 0) -> int:
    """First index >= start where ``pattern`` occurs in ``seq``, else -1."""
    m = len(pattern)
    if len(seq) - start < m:
        return -1
    windows = np.lib.stride_tricks.sliding_window_view(seq[start:], m)
    hits = np.flatnonzero(np.all(windows == np.asarray(pattern), axis=1))
    return int(hits[0]) + start if hits.size else -1


def hdlc_deframe(bits, flag=HDLC_FLAG):
    """Locate an HDLC-framed payload in a bit sequence containing -1 erasures.

    Returns ``(payload or None, end_index, erasures)``; ``end_index`` is -1 when
    no opening flag is found.
    """
    seq = np.asarray(bits, dtype=int)
    start = _find(seq, flag)
    if start < 0:
        return None, -1, 0
    body_start = start + len(flag)
    # stuffed data never holds six 1s in a row, so the closing flag is the
    # first such run after the opening flag
    ones = _find(seq, (1,) * 6, body_start)
    if ones < 0 or ones + 7 > len(seq):
        return None, len(seq), 0
    body = seq[body_start:ones - 1]
    end = ones + 7
    erased = int(np.count_nonzero(body < 0))
    if erased:
        return None, end, erased
    payload = destuff_bits(body.tolist())
    if payload is None:
        return None, end, 1
    return payload, end, 0


def int_to_bits(value: int, width: int) -> list[int]:
    if not 0 <= value < 2**width:
        raise ModemError(f"value {value} does not fit in {width} bits")
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def bits_to_int(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def manchester(bits) -> list[int]:
    """Rising mid-bit transition encodes 1."""
    chips = []
    for b in bits:
        chips.extend((0, 1) if b else (1, 0))
    return chips


# ---------------------------------------------------------------------------
# waveform


def _square_on_cycles(p):
    """Cumulative on-fraction of a 50% square wave up to phase ``p`` (cycles)."""
    fl = np.floor(p)
    return 0.5 * fl + np.minimum(p - fl, 0.5)


@dataclass(frozen=True, eq=False)
class LedWaveform:
    """Piecewise LED drive on a uniform slot grid.

    ``freqs[k, g] > 0`` marks a square tone in slot ``k`` for group ``g`` with an
    extra phase ``offsets[k, g]`` (cycles); otherwise ``levels[k, g]`` is held.
    Idle segments extend before ``start`` and after the last slot.
    """

    scheme: Scheme
    slot_duration: float
    levels: np.ndarray
    freqs: np.ndarray
    offsets: np.ndarray
    pulse_rate: float
    bit_rate: float
    start: float = 0.0
    phase0: float = 0.0
    idle_level: float = 0.0
    idle_freq: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lv = np.atleast_2d(np.asarray(self.levels, dtype=float))
        if lv.shape[0] == 1 and np.ndim(self.levels) == 1:
            lv = lv.T
        fr = np.broadcast_to(np.asarray(self.freqs, dtype=float), lv.shape).copy()
        of = np.broadcast_to(np.asarray(self.offsets, dtype=float), lv.shape).copy()
        for name, arr in (("levels", lv), ("freqs", fr), ("offsets", of)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        T = self.slot_duration
        zero = np.zeros((1, lv.shape[1]))
        phase = self.phase0 + np.vstack([zero, np.cumsum(fr * T, axis=0)])
        on = np.vstack([zero, np.cumsum(self._slot_on(fr, lv, phase[:-1] + of, T), axis=0)])
        object.__setattr__(self, "_phase", phase)
        object.__setattr__(self, "_on", on)

    @staticmethod
    def _slot_on(f, level, p0, tau):
        tone = f > 0
        safe_f = np.where(tone, f, 1.0)
        tone_on = (_square_on_cycles(p0 + safe_f * tau) - _square_on_cycles(p0)) / safe_f
        return np.where(tone, tone_on, level * tau)

    @property
    def n_slots(self) -> int:
        return self.levels.shape[0]

    @property
    def n_groups(self) -> int:
        return self.levels.shape[1]

    @property
    def duration(self) -> float:
        return self.n_slots * self.slot_duration

    @property
    def end(self) -> float:
        return self.start + self.duration

    def frequencies(self) -> set[float]:
        """Distinct tone frequencies present in the waveform (idle included)."""
        out = {float(f) for f in np.unique(self.freqs) if f > 0}
        if self.idle_freq > 0:
            out.add(float(self.idle_freq))
        return out

    def _segments(self, t):
        """Per-time segment parameters: (anchor_time, f, level, phase, on_anchor)."""
        t = np.asarray(t, dtype=float)
        n, T = self.n_slots, self.slot_duration
        k = np.floor((t - self.start) / T).astype(np.int64)
        k = np.clip(k, -1, n)
        inside = (k >= 0) & (k < n)
        kk = np.clip(k, 0, n - 1)
        anchor = np.where(k < 0, self.start, np.where(k >= n, self.end, self.start + kk * T))
        shp = t.shape + (self.n_groups,)
        f = np.where(inside[..., None], self.freqs[kk], self.idle_freq)
        lvl = np.where(inside[..., None], self.levels[kk], self.idle_level)
        kphase = np.where(k >= n, n, np.clip(k, 0, n))
        ph = self._phase[kphase] + np.where(inside[..., None], self.offsets[kk], 0.0)
        on = np.where((k < 0)[..., None], 0.0, self._on[kphase])
        return (np.broadcast_to(anchor[..., None], shp), np.broadcast_to(f, shp),
                np.broadcast_to(lvl, shp), np.broadcast_to(ph, shp), np.broadcast_to(on, shp))

    def level(self, t) -> np.ndarray:
        """Instantaneous level(s); shape ``t.shape + (n_groups,)``."""
        anchor, f, lvl, ph, _ = self._segments(t)
        t = np.asarray(t, dtype=float)[..., None]
        p = ph + f * (t - anchor)
        tone_level = ((p - np.floor(p)) < 0.5).astype(float)
        return np.where(f > 0, tone_level, lvl)

    def on_time(self, t) -> np.ndarray:
        """Integrated level from ``start`` to ``t`` (negative before start)."""
        anchor, f, lvl, ph, on = self._segments(t)
        t = np.asarray(t, dtype=float)[..., None]
        return on + self._slot_on(f, lvl, ph, t - anchor)

    def mean(self, t0, t1) -> np.ndarray:
        """Exact average level over ``[t0, t1]``; falls back to ``level`` when t1 == t0."""
        t0 = np.asarray(t0, dtype=float)
        t1 = np.asarray(t1, dtype=float)
        width = (t1 - t0)[..., None]
        inst = self.level(t0)
        with np.errstate(invalid="ignore", divide="ignore"):
            avg = (self.on_time(t1) - self.on_time(t0)) / width
        return np.where(width > 0, avg, inst)


# ---------------------------------------------------------------------------
# Nyquist-sampling OOK


FRAMES_PER_BIT_NYQUIST = 4


def nyquist_bit_rate(camera_fps: float) -> float:
    return camera_fps / FRAMES_PER_BIT_NYQUIST


def encode_nyquist_ook(packet: Packet, camera_fps: float) -> LedWaveform:
    if camera_fps <= 0 or int(camera_fps) != camera_fps or int(camera_fps) % 2:
        raise ModemError("camera_fps must be a positive even integer")
    if packet.length == 0:
        raise ModemError("empty payload")
    bits = np.asarray(hdlc_frame(packet), dtype=float)
    return LedWaveform(
        scheme=Scheme.NYQUIST_OOK,
        slot_duration=FRAMES_PER_BIT_NYQUIST / camera_fps,
        levels=bits[:, None],
        freqs=0.0,
        offsets=0.0,
        pulse_rate=camera_fps / 2,
        bit_rate=nyquist_bit_rate(camera_fps),
        meta={"camera_fps": camera_fps},
    )


def classify_levels(values, thresholds=DEFAULT_THRESHOLDS, dynamic_range=None) -> np.ndarray:
    """Map intensities to 1 (bright), 0 (dark) or -1 (unclear)."""
    v = np.asarray(values, dtype=float)
    if dynamic_range is None:
        lo, hi = (float(v.min()), float(v.max())) if v.size else (0.0, 1.0)
    else:
        lo, hi = dynamic_range
    span = hi - lo
    if span <= 0:
        return np.full(v.shape, -1, dtype=int)
    x = (v - lo) / span
    low, high = thresholds
    out = np.full(v.shape, -1, dtype=int)
    out[x >= high] = 1
    out[x <= low] = 0
    return out


def pair_decision(a, b):
    """Bit from a frame pair of classified levels; -1 erasure, -2 conflict.

    Works elementwise on arrays.  If one frame is unclear the other decides.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    out = np.where(a >= 0, np.where((b >= 0) & (b != a), -2, a), np.where(b >= 0, b, -1))
    return int(out) if out.ndim == 0 else out


def decode_pairs(values, thresholds=DEFAULT_THRESHOLDS, dynamic_range=None) -> list[int]:
    """Per-pair decisions for consecutive frame pairs (0, 1), (2, 3), ..."""
    cls = classify_levels(values, thresholds, dynamic_range)
    n = len(cls) // 2
    return pair_decision(cls[0:2 * n:2], cls[1:2 * n:2]).tolist()


def _combine(a, b):
    both = (a >= 0) & (b >= 0)
    conflict = (a == -2) | (b == -2) | (both & (a != b))
    out = np.where(a >= 0, a, np.where(b >= 0, b, -1))
    return np.where(conflict, -2, out)


def decode_nyquist_ook(frames, thresholds=DEFAULT_THRESHOLDS, dynamic_range=None) -> DemodResult:
    """Decode per-frame RoI intensities sampled at the camera frame rate."""
    v = np.asarray(frames, dtype=float)
    if v.size < 2:
        return NO_SYNC
    cls = classify_levels(v, thresholds, dynamic_range)
    fpb = FRAMES_PER_BIT_NYQUIST
    best = None
    for offset in range(fpb):
        n_groups = (len(cls) - offset) // fpb
        if n_groups <= 0:
            continue
        g = cls[offset:offset + n_groups * fpb].reshape(n_groups, fpb)
        bits = _combine(pair_decision(g[:, 0], g[:, 1]), pair_decision(g[:, 2], g[:, 3]))
        conflicts = int(np.count_nonzero(bits == -2))
        key = (conflicts, int(np.count_nonzero(bits < 0)), offset)
        if best is None or key < best[0]:
            best = (key, offset, bits)
    if best is None:
        return NO_SYNC
    _, offset, bits = best
    bits = np.where(bits == -2, -1, bits)
    payload, end, erased = hdlc_deframe(bits)
    if end < 0:
        return NO_SYNC
    consumed = min(len(v), offset + end * fpb)
    unclear = int(np.count_nonzero(cls[:consumed] < 0))
    if payload is None:
        return DemodResult((), consumed, unclear, True, max(erased, 1))
    return DemodResult(tuple(payload), consumed, unclear, True, 0)


def ideal_sample_nyquist(wave: LedWaveform, camera_fps: float, phase: float = 0.0,
                         lead_frames: int = 8, tail_frames: int = 8, exposure: float = 0.0) -> np.ndarray:
    """Sample a waveform at the frame rate, ``phase`` in [0, 1) of a frame period."""
    n = lead_frames + int(round(wave.duration * camera_fps)) + tail_frames
    t = wave.start + (np.arange(n) - lead_frames + phase) / camera_fps
    return wave.mean(t, t + exposure)[:, 0]


# ---------------------------------------------------------------------------
# UFSOOK


def _is_integer(x: float, tol: float = 1e-9) -> bool:
    return abs(x - round(x)) < tol


def ufsook_bit_rate(camera_fps: float) -> float:
    return camera_fps / 2


def validate_ufsook(camera_fps: float, space_hz: float, mark_hz: float, sfd_hz: float) -> None:
    if camera_fps <= 0:
        raise ModemError("camera_fps must be positive")
    for name, f in (("space", space_hz), ("mark", mark_hz), ("sfd", sfd_hz)):
        if f < FLICKER_LIMIT_HZ:
            raise FlickerError(f"{name} frequency {f} Hz is below {FLICKER_LIMIT_HZ} Hz")
    if not _is_integer(space_hz / camera_fps):
        raise ModemError("space frequency must be a harmonic of the frame rate")
    if not _is_integer(mark_hz / camera_fps - 0.5):
        raise ModemError("mark frequency must be a harmonic offset by half the frame rate")
    if sfd_hz * (1.0 / camera_fps) < 1.0:
        raise ModemError("sfd frequency must complete a cycle within one frame")


def encode_ufsook(packet: Packet, camera_fps: float, space_hz: float = 120.0, mark_hz: float = 105.0,
                  sfd_hz: float | None = None, phase0: float = 0.0) -> LedWaveform:
    """Continuous-phase FSK; two frame periods per bit, 4-frame SFD burst, 16-bit length."""
    if sfd_hz is None:
        sfd_hz = 40.0 * camera_fps
    validate_ufsook(camera_fps, space_hz, mark_hz, sfd_hz)
    if packet.length == 0:
        raise ModemError("empty payload")
    bits = int_to_bits(packet.length, LENGTH_BITS) + list(packet.payload)
    # one slot per frame period; a bit holds its tone for two slots
    freqs = [sfd_hz] * UFSOOK_SFD_FRAMES
    for b in bits:
        freqs += [mark_hz if b else space_hz] * 2
    freqs = np.asarray(freqs, dtype=float)[:, None]
    return LedWaveform(
        scheme=Scheme.UFSOOK,
        slot_duration=1.0 / camera_fps,
        levels=np.zeros_like(freqs),
        freqs=freqs,
        offsets=0.0,
        pulse_rate=space_hz,
        bit_rate=ufsook_bit_rate(camera_fps),
        phase0=phase0,
        idle_level=1.0,
        meta={"camera_fps": camera_fps, "space_hz": space_hz, "mark_hz": mark_hz, "sfd_hz": sfd_hz},
    )


def ideal_sample_ufsook(wave: LedWaveform, camera_fps: float, offset: float = 0.0,
                        lead_frames: int = 6, tail_frames: int = 4, exposure: float | None = None) -> np.ndarray:
    """Exposure-integrated frame samples.

    ``offset`` is the window start within a frame period as a fraction of the
    free margin ``1/fps - exposure``, so windows never straddle slot edges.
    """
    if exposure is None:
        exposure = 1.0 / wave.meta["sfd_hz"]
    margin = 1.0 / camera_fps - exposure
    n = lead_frames + wave.n_slots + tail_frames
    t = wave.start + (np.arange(n) - lead_frames) / camera_fps + offset * margin
    return wave.mean(t, t + exposure)[:, 0]


def decode_ufsook(frames, camera_fps: float | None = None, thresholds=DEFAULT_THRESHOLDS,
                  dynamic_range=None) -> DemodResult:
    """Identical pair -> 0 (space), toggled pair -> 1 (mark).

    The start delimiter shows as a run of half-intensity frames.  Intensities
    are normalized to ``dynamic_range``, default ``(0, max)``.
    """
    v = np.asarray(frames, dtype=float)
    if v.size == 0:
        return NO_SYNC
    lo, hi = dynamic_range if dynamic_range is not None else (0.0, float(v.max()))
    if hi <= lo:
        return NO_SYNC
    x = (v - lo) / (hi - lo)
    low, high = thresholds
    unclear = (x > low) & (x < high)
    s = None
    run = 0
    for i, u in enumerate(unclear):
        run = run + 1 if u else 0
        if run == UFSOOK_SFD_FRAMES - 1:
            s = i - run + 1
            break
    if s is None:
        return NO_SYNC
    state = (x >= 0.5).astype(int)
    data = s + UFSOOK_SFD_FRAMES

    def read(n_bits, at):
        if at + 2 * n_bits > len(state):
            return None
        pairs = state[at:at + 2 * n_bits].reshape(n_bits, 2)
        return (pairs[:, 0] != pairs[:, 1]).astype(int).tolist()

    header = read(LENGTH_BITS, data)
    if header is None:
        return DemodResult((), len(v), int(unclear.sum()), True, 1)
    length = bits_to_int(header)
    at = data + 2 * LENGTH_BITS
    payload = read(length, at)
    consumed = at + 2 * length
    n_unclear = int(unclear[:min(consumed, len(v))].sum())
    if payload is None or length == 0:
        return DemodResult((), len(v), n_unclear, True, 1)
    return DemodResult(tuple(payload), consumed, n_unclear, True, 0)


# ---------------------------------------------------------------------------
# rolling-shutter OOK


def validate_rolling(led_hz: float, camera_fps: float, row_time: float) -> None:
    if not led_hz > camera_fps:
        raise ModemError("LED frequency must exceed the camera frame rate")
    if not led_hz < 1.0 / row_time:
        raise ModemError("LED frequency must stay below the row-scan frequency")


def encode_rolling_ook(packet: Packet, led_hz: float, camera_fps: float | None = None,
                       row_time: float | None = None) -> LedWaveform:
    """Manchester chips of duration ``1 / (2 * led_hz)``."""
    if led_hz <= 0:
        raise ModemError("led_hz must be positive")
    if camera_fps is not None and row_time is not None:
        validate_rolling(led_hz, camera_fps, row_time)
    if packet.length == 0:
        raise ModemError("empty payload")
    body = int_to_bits(packet.length, LENGTH_BITS) + list(packet.payload)
    chips = list(ROLLING_SFD) + manchester(body)
    return LedWaveform(
        scheme=Scheme.ROLLING_OOK,
        slot_duration=1.0 / (2.0 * led_hz),
        levels=np.asarray(chips, dtype=float)[:, None],
        freqs=0.0,
        offsets=0.0,
        pulse_rate=led_hz,
        bit_rate=led_hz / 2.0,
        meta={"led_hz": led_hz},
    )


def band_rows(led_hz: float, row_time: float) -> float:
    """Rows per half-period of a square wave at ``led_hz``."""
    return 1.0 / (2.0 * led_hz * row_time)


def row_profile(pixels, columns=None) -> np.ndarray:
    img = np.asarray(pixels, dtype=float)
    if columns is not None:
        img = img[:, columns]
    return img.mean(axis=1)


def run_lengths(binary) -> tuple[np.ndarray, np.ndarray]:
    """Values and lengths of consecutive runs."""
    b = np.asarray(binary)
    if b.size == 0:
        return b, np.array([], dtype=int)
    edges = np.flatnonzero(np.diff(b)) + 1
    starts = np.r_[0, edges]
    lengths = np.diff(np.r_[starts, b.size])
    return b[starts], lengths


def band_widths(pixels, threshold: float | None = None) -> list[int]:
    """Widths (rows) of interior bright/dark bands; empty for a uniform frame."""
    prof = row_profile(pixels)
    lo, hi = prof.min(), prof.max()
    if hi - lo < 1e-9:
        return []
    thr = 0.5 * (lo + hi) if threshold is None else threshold
    _, lengths = run_lengths(prof >= thr)
    return lengths[1:-1].tolist()


def decode_rolling_ook(frame, row_time: float, led_hz_candidates, columns=None) -> DemodResult:
    """Recover a Manchester packet from the row bands of one rolling-shutter frame."""
    pixels = getattr(frame, "pixels", frame)
    prof = row_profile(pixels, columns)
    lo, hi = float(prof.min()), float(prof.max())
    if hi - lo < 1e-9:
        return NO_SYNC
    values, lengths = run_lengths((prof >= 0.5 * (lo + hi)).astype(int))
    widths = {f: band_rows(f, row_time) for f in led_hz_candidates}
    usable = {f: w for f, w in widths.items() if w >= 1.0}
    if not usable:
        raise UndersampledError("band width below one row for every candidate frequency")
    interior = lengths[1:-1] if lengths.size > 2 else lengths

    def misfit(w):
        r = interior / w
        return float(np.sum(np.abs(r - np.round(r))) + 10.0 * np.sum(np.round(r) < 1))

    chip_rows = usable[min(usable, key=lambda f: misfit(usable[f]))]
    counts = np.maximum(np.round(lengths / chip_rows).astype(int), 1)
    chips = np.repeat(values, counts)
    pos = _find(chips, ROLLING_SFD)
    if pos < 0:
        return NO_SYNC
    at = pos + len(ROLLING_SFD)
    rows_consumed = lambda n_chips: int(min(len(prof), round(n_chips * chip_rows)))

    def read(n_bits, start):
        if start + 2 * n_bits > len(chips):
            return None
        pairs = chips[start:start + 2 * n_bits].reshape(n_bits, 2)
        bits = np.where((pairs[:, 0] == 0) & (pairs[:, 1] == 1), 1,
                        np.where((pairs[:, 0] == 1) & (pairs[:, 1] == 0), 0, -1))
        return bits.tolist()

    header = read(LENGTH_BITS, at)
    if header is None or -1 in header:
        return DemodResult((), len(prof), 0, True, 1)
    length = bits_to_int(header)
    payload = read(length, at + 2 * LENGTH_BITS)
    end = at + 2 * (LENGTH_BITS + length)
    if payload is None or length == 0:
        return DemodResult((), len(prof), 0, True, 1)
    erased = payload.count(-1)
    if erased:
        return DemodResult((), rows_consumed(end), 0, True, erased)
    return DemodResult(tuple(payload), rows_consumed(end), 0, True, 0)


def ideal_sample_rolling(wave: LedWaveform, row_time: float, width: int = 4,
                         lead_chips: int = 3, tail_chips: int = 3, row_phase: float = 0.0) -> np.ndarray:
    """Row-sequential instantaneous sampling into a ``(rows, width)`` image."""
    t0 = wave.start - lead_chips * wave.slot_duration + row_phase * row_time
    n_rows = int(math.ceil((wave.duration + (lead_chips + tail_chips) * wave.slot_duration) / row_time))
    t = t0 + np.arange(n_rows) * row_time
    prof = wave.level(t)[:, 0]
    return np.repeat(prof[:, None], width, axis=1)


# ---------------------------------------------------------------------------
# S2-PSK


def encode_s2psk(packet: Packet, blink_hz: float = 125.0, symbol_rate: float = 30.0) -> LedWaveform:
    """Group A blinks at ``blink_hz``; group B matches it (0) or is inverted (1)."""
    if blink_hz < FLICKER_LIMIT_HZ:
        raise FlickerError(f"blink frequency {blink_hz} Hz is below {FLICKER_LIMIT_HZ} Hz")
    if symbol_rate <= 0:
        raise ModemError("symbol_rate must be positive")
    if packet.length == 0:
        raise ModemError("empty payload")
    bits = np.asarray(hdlc_frame(packet), dtype=float)
    n = bits.size
    offsets = np.zeros((n, 2))
    offsets[:, 1] = 0.5 * bits
    return LedWaveform(
        scheme=Scheme.S2PSK,
        slot_duration=1.0 / symbol_rate,
        levels=np.zeros((n, 2)),
        freqs=np.full((n, 2), float(blink_hz)),
        offsets=offsets,
        pulse_rate=blink_hz,
        bit_rate=symbol_rate,
        idle_freq=float(blink_hz),
        meta={"blink_hz": blink_hz, "symbol_rate": symbol_rate},
    )


def ideal_sample_s2psk(wave: LedWaveform, phase: float = 0.5, lead_frames: int = 8,
                       tail_frames: int = 8) -> tuple[np.ndarray, np.ndarray]:
    rate = wave.meta["symbol_rate"]
    n = lead_frames + wave.n_slots + tail_frames
    t = wave.start + (np.arange(n) - lead_frames + phase) / rate
    lv = wave.level(t)
    return lv[:, 0], lv[:, 1]


OCCLUSION_FLOOR = 0.05


def decode_s2psk(group_a_states, group_b_states, threshold: float = 0.5) -> DemodResult:
    """Each group is thresholded at ``threshold`` of its own peak, so the
    decision is unchanged by scaling either group's intensity."""
    a = np.asarray(group_a_states, dtype=float)
    b = np.asarray(group_b_states, dtype=float)
    if a.shape != b.shape:
        raise ModemError("group sequences must have equal length")
    if a.size == 0:
        return NO_SYNC
    peak_a, peak_b = float(a.max()), float(b.max())
    ref = max(peak_a, peak_b)
    if ref <= 0 or min(peak_a, peak_b) < OCCLUSION_FLOOR * ref:
        # one group blocked: every symbol is an erasure
        return DemodResult((), int(a.size), int(a.size), False, int(a.size))
    on_a = a >= threshold * peak_a
    on_b = b >= threshold * peak_b
    bits = (on_a != on_b).astype(int)
    payload, end, erased = hdlc_deframe(bits)
    if end < 0:
        return NO_SYNC
    if payload is None:
        return DemodResult((), min(end, a.size), 0, True, max(erased, 1))
    return DemodResult(tuple(payload), end, 0, True, 0)


# ---------------------------------------------------------------------------
# generic helpers


def encode(packet: Packet, scheme: Scheme, **kw) -> LedWaveform:
    return {
        Scheme.NYQUIST_OOK: encode_nyquist_ook,
        Scheme.UFSOOK: encode_ufsook,
        Scheme.ROLLING_OOK: encode_rolling_ook,
        Scheme.S2PSK: encode_s2psk,
    }[scheme](packet, **kw)
