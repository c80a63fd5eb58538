"""Line-oriented text formats and plain PGM export.

Waveform::

    waveform scheme=<name> slot=<s> pulse_rate=<Hz> bit_rate=<bps> start=<s> phase0=<cycles> \\
        idle_level=<x> idle_freq=<Hz> groups=<G> slots=<K>
    slot <k> <level_0> <freq_0> <offset_0> ... <level_G-1> <freq_G-1> <offset_G-1>

Demodulation result::

    demod sync=<0|1> frames=<n> unclear=<n> erasures=<n> bits=<0101...>

RoI (one per line)::

    roi <label> <x0> <y0> <x1> <y1> <cx> <cy> <area> <fill> <tag>

Keypoint (one per line; descriptor values follow the fixed fields)::

    kp <x> <y> <scale> <orientation> <response> <level> <d_0> ... <d_127>

Floats are written with ``repr`` so a write/read cycle is exact.  CSV files
start with a ``# occlink-<kind> schema=<n>`` comment line.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .detect.regions import RoI, RoiTag
from .detect.sift import Keypoint
from .modem import DemodResult, LedWaveform, Scheme

CSV_SCHEMA = 1


class FormatError(ValueError):
    pass


def _f(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# waveforms and demod results


def format_waveform(wave: LedWaveform) -> str:
    head = (f"waveform scheme={wave.scheme.value} slot={_f(wave.slot_duration)} pulse_rate={_f(wave.pulse_rate)} "
            f"bit_rate={_f(wave.bit_rate)} start={_f(wave.start)} phase0={_f(wave.phase0)} "
            f"idle_level={_f(wave.idle_level)} idle_freq={_f(wave.idle_freq)} "
            f"groups={wave.n_groups} slots={wave.n_slots}")
    lines = [head]
    for k in range(wave.n_slots):
        vals = []
        for g in range(wave.n_groups):
            vals += [_f(wave.levels[k, g]), _f(wave.freqs[k, g]), _f(wave.offsets[k, g])]
        lines.append(f"slot {k} " + " ".join(vals))
    return "\n".join(lines) + "\n"


def _fields(tokens) -> dict:
    out = {}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep:
            raise FormatError(f"expected key=value, got {tok!r}")
        out[key] = val
    return out


def parse_waveform(text: str) -> LedWaveform:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("waveform "):
        raise FormatError("missing waveform header")
    h = _fields(lines[0].split()[1:])
    try:
        groups, slots = int(h["groups"]), int(h["slots"])
        rows = np.zeros((slots, 3 * groups))
        if len(lines) - 1 != slots:
            raise FormatError(f"expected {slots} slot lines, got {len(lines) - 1}")
        for k, ln in enumerate(lines[1:]):
            parts = ln.split()
            if parts[0] != "slot" or int(parts[1]) != k or len(parts) != 2 + 3 * groups:
                raise FormatError(f"bad slot line {ln!r}")
            rows[k] = [float(x) for x in parts[2:]]
        return LedWaveform(
            scheme=Scheme(h["scheme"]), slot_duration=float(h["slot"]),
            levels=rows[:, 0::3], freqs=rows[:, 1::3], offsets=rows[:, 2::3],
            pulse_rate=float(h["pulse_rate"]), bit_rate=float(h["bit_rate"]), start=float(h["start"]),
            phase0=float(h["phase0"]), idle_level=float(h["idle_level"]), idle_freq=float(h["idle_freq"]),
        )
    except (KeyError, ValueError) as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(str(e)) from e


def format_demod(res: DemodResult) -> str:
    bits = "".join(str(b) for b in res.bits)
    return (f"demod sync={int(res.sync_found)} frames={res.frames_consumed} unclear={res.unclear_frames} "
            f"erasures={res.erasures} bits={bits}\n")


def parse_demod(text: str) -> DemodResult:
    parts = text.split()
    if not parts or parts[0] != "demod":
        raise FormatError("missing demod record")
    f = _fields(parts[1:])
    try:
        return DemodResult(tuple(int(c) for c in f.get("bits", "")), int(f["frames"]), int(f["unclear"]),
                           bool(int(f["sync"])), int(f["erasures"]))
    except (KeyError, ValueError) as e:
        raise FormatError(str(e)) from e


# ---------------------------------------------------------------------------
# RoIs and keypoints


def format_rois(rois) -> str:
    lines = []
    for r in rois:
        x0, y0, x1, y1 = r.bbox
        lines.append(f"roi {r.label} {x0} {y0} {x1} {y1} {_f(r.centroid[0])} {_f(r.centroid[1])} "
                     f"{r.area} {_f(r.circumcircle_fill)} {r.tag.value}")
    return "".join(ln + "\n" for ln in lines)


def parse_rois(text: str) -> list[RoI]:
    out = []
    for ln in text.splitlines():
        parts = ln.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] != "roi" or len(parts) != 11:
            raise FormatError(f"bad roi line {ln!r}")
        try:
            out.append(RoI((int(parts[2]), int(parts[3]), int(parts[4]), int(parts[5])),
                           (float(parts[6]), float(parts[7])), int(parts[8]), float(parts[9]),
                           RoiTag(parts[10]), int(parts[1])))
        except ValueError as e:
            raise FormatError(f"bad roi line {ln!r}: {e}") from e
    return out


def format_keypoints(kps) -> str:
    lines = []
    for k in kps:
        desc = " ".join(_f(v) for v in np.asarray(k.descriptor).ravel())
        lines.append(f"kp {_f(k.x)} {_f(k.y)} {_f(k.scale)} {_f(k.orientation)} {_f(k.response)} {k.level} {desc}")
    return "".join(ln + "\n" for ln in lines)


def parse_keypoints(text: str) -> list[Keypoint]:
    out = []
    for ln in text.splitlines():
        parts = ln.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] != "kp" or len(parts) < 7:
            raise FormatError(f"bad keypoint line {ln!r}")
        try:
            x, y, s, o, resp = (float(v) for v in parts[1:6])
            out.append(Keypoint(x, y, s, o, np.array([float(v) for v in parts[7:]]), resp, int(parts[6])))
        except ValueError as e:
            raise FormatError(f"bad keypoint line {ln!r}: {e}") from e
    return out


# ---------------------------------------------------------------------------
# PGM


def to_gray(image, lo: float = 0.0, hi: float = 1.0, maxval: int = 255) -> np.ndarray:
    img = np.asarray(getattr(image, "pixels", image), dtype=float)
    if img.dtype == bool:
        img = img.astype(float)
    span = hi - lo if hi > lo else 1.0
    return np.clip(np.rint((img - lo) / span * maxval), 0, maxval).astype(int)


def format_pgm(image, maxval: int = 255, lo: float = 0.0, hi: float = 1.0, comment: str | None = None) -> str:
    """Plain (P2) PGM of an intensity image scaled from ``[lo, hi]``."""
    g = to_gray(np.asarray(getattr(image, "pixels", image), dtype=float), lo, hi, maxval)
    h, w = g.shape
    out = io.StringIO()
    out.write("P2\n")
    if comment:
        for ln in comment.splitlines():
            out.write(f"# {ln}\n")
    out.write(f"{w} {h}\n{maxval}\n")
    for row in g:
        out.write(" ".join(str(v) for v in row) + "\n")
    return out.getvalue()


def parse_pgm(text: str) -> np.ndarray:
    """Integer grid of a P2 file."""
    tokens = []
    for ln in text.splitlines():
        tokens += ln.split("#", 1)[0].split()
    if not tokens or tokens[0] != "P2":
        raise FormatError("not a plain PGM (P2)")
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        vals = np.array([int(t) for t in tokens[4:]])
    except (IndexError, ValueError) as e:
        raise FormatError(str(e)) from e
    if vals.size != w * h or np.any(vals < 0) or np.any(vals > maxval):
        raise FormatError("pixel data does not match the header")
    return vals.reshape(h, w)


def write_pgm(path, image, **kw) -> Path:
    path = Path(path)
    path.write_text(format_pgm(image, **kw), encoding="ascii")
    return path


def write_disparity(stem, dmap) -> tuple[Path, Path]:
    """Scaled PGM (invalid pixels 0, valid disparity d mapped to 1 + 254 d / max) and a sidecar."""
    stem = Path(stem)
    scale = 254.0 / max(dmap.max_disparity, 1)
    gray = np.where(dmap.valid, 1 + np.rint(dmap.values * scale), 0).astype(int)
    pgm = stem.with_suffix(".pgm")
    pgm.write_text(format_pgm(gray, maxval=255, lo=0, hi=255), encoding="ascii")
    side = stem.with_suffix(".txt")
    side.write_text(f"window={dmap.window}\nmax_disparity={dmap.max_disparity}\nscale={_f(scale)}\n"
                    f"offset=1\ninvalid=0\nvalid_pixels={int(dmap.valid.sum())}\n", encoding="ascii")
    return pgm, side


# ---------------------------------------------------------------------------
# CSV


def format_csv(kind: str, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# occlink-{kind} schema={CSV_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_f(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path, kind: str, header, rows) -> Path:
    path = Path(path)
    path.write_text(format_csv(kind, header, rows), encoding="utf-8")
    return path


def read_csv(path) -> tuple[str, list[str], list[list[str]]]:
    """``(comment, header, rows)`` with values left as strings."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#"):
        raise FormatError("missing schema comment")
    rows = list(csv.reader(lines[1:]))
    return lines[0], rows[0], rows[1:]
