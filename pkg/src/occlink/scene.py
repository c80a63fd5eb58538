"""Synthetic camera frames of LED arrays and interfering light sources.

World coordinates follow the camera convention: X to the right, Y down, Z
along the optical axis.  Cameras look down +Z with parallel axes; a camera's
``position`` only translates it.  Pixel centers sit at integer coordinates
and the principal point is the image center.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

import numpy as np

from .channel import ChannelParams, sample_gain, transmit
from .modem import _square_on_cycles


class SceneError(ValueError):
    pass


class BehindCameraError(SceneError):
    pass


class Shutter(enum.Enum):
    GLOBAL = "global"
    ROLLING = "rolling"


@dataclass(frozen=True)
class CameraModel:
    focal_length: float = 8e-3
    pixel_size: float = 1e-5
    resolution: tuple[int, int] = (640, 480)  # (width, height)
    fps: float = 30.0
    shutter: Shutter = Shutter.GLOBAL
    row_time: float = 0.0
    exposure: float = 0.0
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    principal_offset: tuple[float, float] = (0.0, 0.0)
    camera_id: str = "cam0"

    def __post_init__(self):
        if not (self.focal_length > 0 and self.pixel_size > 0 and self.fps > 0):
            raise SceneError("focal_length, pixel_size and fps must be positive")
        w, h = self.resolution
        if w <= 0 or h <= 0:
            raise SceneError("resolution must be positive")
        if self.shutter is Shutter.ROLLING:
            if self.row_time <= 0:
                raise SceneError("rolling shutter needs row_time > 0")
            if self.row_time * h > 1.0 / self.fps + 1e-12:
                raise SceneError("row readout exceeds the frame period")
        if self.exposure < 0:
            raise SceneError("exposure must be >= 0")

    @property
    def focal_px(self) -> float:
        return self.focal_length / self.pixel_size

    @property
    def width(self) -> int:
        return self.resolution[0]

    @property
    def height(self) -> int:
        return self.resolution[1]

    @property
    def principal_point(self) -> tuple[float, float]:
        return ((self.width - 1) / 2.0 + self.principal_offset[0],
                (self.height - 1) / 2.0 + self.principal_offset[1])

    def shifted(self, dx: float = 0.0, dy: float = 0.0) -> "CameraModel":
        """Copy whose image content moves by (dx, dy) pixels."""
        ox, oy = self.principal_offset
        return replace(self, principal_offset=(ox + dx, oy + dy))


@dataclass(frozen=True, eq=False)
class Frame:
    pixels: np.ndarray
    timestamp: float = 0.0
    camera_id: str = "cam0"

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.ndim != 2:
            raise SceneError("frame pixels must be 2-D")
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


def project(world_point, cam: CameraModel) -> np.ndarray:
    """Pinhole projection to (u, v) pixel coordinates; accepts (..., 3) arrays."""
    p = np.asarray(world_point, dtype=float) - np.asarray(cam.position, dtype=float)
    z = p[..., 2]
    if np.any(z <= 0):
        raise BehindCameraError("point at or behind the camera plane")
    cx, cy = cam.principal_point
    fp = cam.focal_px
    return np.stack([cx + fp * p[..., 0] / z, cy + fp * p[..., 1] / z], axis=-1)


# ---------------------------------------------------------------------------
# drives


class Drive(Protocol):
    def mean(self, t0, t1) -> np.ndarray: ...

    def level(self, t) -> np.ndarray: ...


@dataclass(frozen=True)
class ConstantDrive:
    levels: tuple = (1.0,)

    def level(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.levels, dtype=float), t.shape + (len(self.levels),))

    def mean(self, t0, t1):
        return self.level(t0)


@dataclass(frozen=True)
class SquareDrive:
    """50% duty square wave per group with per-group phase (cycles)."""

    frequency: float
    phases: tuple = (0.0,)

    def level(self, t):
        p = self.frequency * np.asarray(t, dtype=float)[..., None] + np.asarray(self.phases)
        return ((p - np.floor(p)) < 0.5).astype(float)

    def mean(self, t0, t1):
        t0 = np.asarray(t0, dtype=float)[..., None]
        t1 = np.asarray(t1, dtype=float)[..., None]
        ph = np.asarray(self.phases)
        width = t1 - t0
        with np.errstate(invalid="ignore", divide="ignore"):
            avg = (_square_on_cycles(self.frequency * t1 + ph) - _square_on_cycles(self.frequency * t0 + ph)) / (
                self.frequency * width)
        return np.where(width > 0, avg, self.level(t0[..., 0]))


@dataclass(frozen=True)
class FrameToggleDrive:
    """Level flips once per camera frame (on in even frames)."""

    fps: float
    groups: int = 1

    def level(self, t):
        k = np.floor(np.asarray(t, dtype=float) * self.fps + 1e-9)
        on = (np.mod(k, 2) == 0).astype(float)
        return np.repeat(on[..., None], self.groups, axis=-1)

    def mean(self, t0, t1):
        return self.level(t0)


# ---------------------------------------------------------------------------
# scene elements


@dataclass(frozen=True)
class LedArraySpec:
    """A vehicle's rear LED array: a left and a right unit, each a grid."""

    world_position: tuple[float, float, float]
    left_right_separation: float = 1.2
    grid: tuple[int, int] = (2, 2)
    emitter_spacing: float = 0.06
    emitter_radius: float = 0.025
    group_labels: tuple | None = None
    drive: Drive = field(default_factory=ConstantDrive)
    name: str = ""

    def __post_init__(self):
        if not self.left_right_separation > 0:
            raise SceneError("left_right_separation must be > 0")
        r, c = self.grid
        if r <= 0 or c <= 0:
            raise SceneError("grid must be non-empty")
        if self.group_labels is not None and len(self.group_labels) != r * c:
            raise SceneError("group_labels needs one label per emitter of a unit")

    def unit_centers(self) -> np.ndarray:
        x, y, z = self.world_position
        h = self.left_right_separation / 2.0
        return np.array([[x - h, y, z], [x + h, y, z]])

    def emitters(self) -> list[tuple[np.ndarray, int, int]]:
        """(world position, unit index, group label) for every emitter."""
        r, c = self.grid
        labels = self.group_labels or (0,) * (r * c)
        out = []
        for unit, center in enumerate(self.unit_centers()):
            for i in range(r):
                for j in range(c):
                    off = np.array([(j - (c - 1) / 2.0) * self.emitter_spacing,
                                    (i - (r - 1) / 2.0) * self.emitter_spacing, 0.0])
                    out.append((center + off, unit, labels[i * c + j]))
        return out


class NoiseCategory(enum.Enum):
    AC_LIGHTING = "ac_lighting"
    NEON_BALLAST = "neon_ballast"
    LED_SCREEN = "led_screen"


# default frequency and allowed band (Hz) per category
NOISE_BANDS = {
    NoiseCategory.AC_LIGHTING: (120.0, (50.0, 5e3)),
    NoiseCategory.NEON_BALLAST: (40e3, (10e3, 100e3)),
    NoiseCategory.LED_SCREEN: (300e3, (100e3, 1e6)),
}


@dataclass(frozen=True)
class NoiseSourceSpec:
    """Interfering light; ``extent`` is (width, height) in pixels."""

    category: NoiseCategory
    world_position: tuple[float, float, float]
    intensity: float = 0.8
    extent: tuple[float, float] = (40.0, 20.0)
    shape: str = "rect"
    frequency: float | None = None
    phase: float = 0.0

    def __post_init__(self):
        default, (lo, hi) = NOISE_BANDS[self.category]
        if self.frequency is None:
            object.__setattr__(self, "frequency", default)
        if not lo <= self.frequency <= hi:
            raise SceneError(f"{self.category.value} frequency {self.frequency} Hz outside {lo}-{hi} Hz")
        if self.shape not in ("rect", "disc"):
            raise SceneError("shape must be 'rect' or 'disc'")
        if not 0 <= self.intensity <= 1:
            raise SceneError("intensity must lie in [0, 1]")

    def mean(self, t0, t1) -> np.ndarray:
        t0 = np.asarray(t0, dtype=float)
        t1 = np.asarray(t1, dtype=float)
        f = self.frequency
        if self.category is NoiseCategory.AC_LIGHTING:
            # rectified sine with period 1/f
            def cum(t):
                p = f * t + self.phase
                fl = np.floor(p)
                return (2.0 * fl + 1.0 - np.cos(math.pi * (p - fl))) / (math.pi * f)

            inst = np.abs(np.sin(math.pi * (f * t0 + self.phase)))
        else:
            def cum(t):
                return _square_on_cycles(f * t + self.phase) / f

            p = f * t0 + self.phase
            inst = ((p - np.floor(p)) < 0.5).astype(float)
        width = t1 - t0
        with np.errstate(invalid="ignore", divide="ignore"):
            avg = (cum(t1) - cum(t0)) / width
        return self.intensity * np.where(width > 0, avg, inst)


@dataclass(frozen=True)
class Occluder:
    """Opaque world-space rectangle facing the camera."""

    world_position: tuple[float, float, float]
    width: float
    height: float


@dataclass(frozen=True)
class Scene:
    arrays: tuple = ()
    noise_sources: tuple = ()
    occluders: tuple = ()
    sky: float = 0.0  # peak intensity of a static top-of-image gradient
    horizon: float = 0.35  # fraction of image height covered by the sky

    @property
    def empty(self) -> bool:
        return not (self.arrays or self.noise_sources or self.sky > 0)


# ---------------------------------------------------------------------------
# rendering


def _window_times(cam: CameraModel, t: float, rows: np.ndarray) -> np.ndarray:
    if cam.shutter is Shutter.ROLLING:
        return t + rows * cam.row_time
    return np.full(rows.shape, float(t))


def _disc_coverage(u: float, v: float, radius: float, cam: CameraModel):
    """Anti-aliased hard disc: (row slice, col slice, coverage)."""
    reach = radius + 1.0
    r0 = max(int(math.floor(v - reach)), 0)
    r1 = min(int(math.ceil(v + reach)) + 1, cam.height)
    c0 = max(int(math.floor(u - reach)), 0)
    c1 = min(int(math.ceil(u + reach)) + 1, cam.width)
    if r0 >= r1 or c0 >= c1:
        return None
    yy, xx = np.mgrid[r0:r1, c0:c1]
    dist = np.hypot(xx - u, yy - v)
    cov = np.clip(radius + 0.5 - dist, 0.0, 1.0)
    return slice(r0, r1), slice(c0, c1), cov


def _rect_coverage(u: float, v: float, w: float, h: float, cam: CameraModel):
    x0, x1 = u - w / 2.0, u + w / 2.0
    y0, y1 = v - h / 2.0, v + h / 2.0
    c0, c1 = max(int(math.floor(x0)), 0), min(int(math.ceil(x1)) + 1, cam.width)
    r0, r1 = max(int(math.floor(y0)), 0), min(int(math.ceil(y1)) + 1, cam.height)
    if r0 >= r1 or c0 >= c1:
        return None
    xs = np.arange(c0, c1)
    ys = np.arange(r0, r1)
    # pixel i covers [i - 0.5, i + 0.5]
    cx = np.clip(np.minimum(xs + 0.5, x1) - np.maximum(xs - 0.5, x0), 0.0, 1.0)
    cy = np.clip(np.minimum(ys + 0.5, y1) - np.maximum(ys - 0.5, y0), 0.0, 1.0)
    return slice(r0, r1), slice(c0, c1), cy[:, None] * cx[None, :]


def _paint(img, region, levels_per_row):
    rows, cols, cov = region
    val = cov * levels_per_row[rows][:, None]
    np.maximum(img[rows, cols], val, out=img[rows, cols])


def render_clean(scene: Scene, cam: CameraModel, t: float = 0.0) -> np.ndarray:
    """Noise-free intensity image in [0, 1]."""
    h, w = cam.height, cam.width
    img = np.zeros((h, w))
    rows = np.arange(h, dtype=float)
    t_rows = _window_times(cam, t, rows)
    if scene.sky > 0:
        span = max(scene.horizon * h, 1.0)
        grad = scene.sky * np.clip(1.0 - rows / span, 0.0, 1.0)
        img += grad[:, None]
    for src in scene.noise_sources:
        try:
            u, v = project(src.world_position, cam)
        except BehindCameraError:
            continue
        if src.shape == "disc":
            region = _disc_coverage(u, v, src.extent[0] / 2.0, cam)
        else:
            region = _rect_coverage(u, v, src.extent[0], src.extent[1], cam)
        if region is None:
            continue
        levels = src.mean(t_rows, t_rows + cam.exposure)
        _paint(img, region, levels)
    for arr in scene.arrays:
        levels = arr.drive.mean(t_rows, t_rows + cam.exposure)
        levels = np.atleast_2d(np.asarray(levels))
        for pos, _unit, group in arr.emitters():
            p = pos - np.asarray(cam.position)
            if p[2] <= 0:
                continue
            u, v = project(pos, cam)
            radius = cam.focal_px * arr.emitter_radius / p[2]
            region = _disc_coverage(u, v, radius, cam)
            if region is None:
                continue
            _paint(img, region, levels[:, group])
    for occ in scene.occluders:
        try:
            u, v = project(occ.world_position, cam)
        except BehindCameraError:
            continue
        z = occ.world_position[2] - cam.position[2]
        region = _rect_coverage(u, v, cam.focal_px * occ.width / z, cam.focal_px * occ.height / z, cam)
        if region is not None:
            rr, cc, cov = region
            img[rr, cc] *= 1.0 - cov
    return np.clip(img, 0.0, 1.0)


def render(scene: Scene, cam: CameraModel, t: float = 0.0, channel: ChannelParams | None = None,
           rng: np.random.Generator | None = None, gain: float | None = None) -> Frame:
    """Render one frame; pixel intensities pass through the optical channel.

    Normalized intensity ``s`` is emitted as ``s * 2 P_t`` and the received
    current is rescaled by ``2 P_t R`` so a unit-gain noiseless pixel reads
    ``s``.  A fading channel draws one gain per frame.
    """
    img = render_clean(scene, cam, t)
    if channel is not None:
        if gain is None:
            if rng is None and not isinstance(channel.fading, (int, float)):
                raise SceneError("fading channel needs a random generator")
            gain = float(sample_gain(channel, rng)) if rng is not None else float(channel.fading)
        sample = transmit(img * channel.on_level, channel, gain, rng)
        img = np.clip(sample.received / (channel.on_level * channel.responsivity), 0.0, 1.0)
    return Frame(img, timestamp=float(t), camera_id=cam.camera_id)


def stereo_pair(left_cam: CameraModel, baseline: float) -> tuple[CameraModel, CameraModel]:
    if not baseline > 0:
        raise SceneError("baseline must be > 0")
    x, y, z = left_cam.position
    right = replace(left_cam, position=(x + baseline, y, z), camera_id=left_cam.camera_id + "_right")
    return left_cam, right


def render_stereo(scene: Scene, left_cam: CameraModel, baseline: float, t: float = 0.0,
                  channel: ChannelParams | None = None, rng=None) -> tuple[Frame, Frame]:
    """Parallel-axis pair; a point at depth Z shifts by f*b/(Z*a) pixels."""
    left, right = stereo_pair(left_cam, baseline)
    return render(scene, left, t, channel, rng), render(scene, right, t, channel, rng)


def expected_disparity(depth: float, cam: CameraModel, baseline: float) -> float:
    if depth == math.inf:
        return 0.0
    return cam.focal_px * baseline / depth


def frame_times(cam: CameraModel, n: int, t0: float = 0.0) -> np.ndarray:
    return t0 + np.arange(n) / cam.fps


def render_sequence(scene: Scene, cam: CameraModel, n: int, t0: float = 0.0, channel=None, rng=None,
                    jitter: Sequence[tuple[float, float]] | None = None) -> list[Frame]:
    """Frames at the camera rate; optional per-frame image shifts in pixels."""
    frames = []
    for i, t in enumerate(frame_times(cam, n, t0)):
        c = cam if jitter is None else cam.shifted(*jitter[i])
        frames.append(render(scene, c, float(t), channel, rng))
    return frames


def emitter_pixels(arr: LedArraySpec, cam: CameraModel) -> list[tuple[np.ndarray, float, int, int]]:
    """Ground truth (pixel center, pixel radius, unit, group) for each emitter."""
    out = []
    for pos, unit, group in arr.emitters():
        z = pos[2] - cam.position[2]
        out.append((project(pos, cam), cam.focal_px * arr.emitter_radius / z, unit, group))
    return out


def unit_pixel_centers(arr: LedArraySpec, cam: CameraModel) -> np.ndarray:
    """Projected centers of the left and right units."""
    return project(arr.unit_centers(), cam)
