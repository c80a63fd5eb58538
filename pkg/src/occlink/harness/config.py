"""Scenario configuration in INI format.

Sections and keys (all optional; defaults shown by :data:`EXAMPLE_CONFIG`):

``[scenario]`` seed, duration
``[channel]`` transmit_power, responsivity, noise_std, fading_k, fading_z
``[modem]`` scheme, camera_fps, payload_bits
``[scene]`` vehicles (semicolon-separated ``x,y,z`` triples), noise_sources
  (semicolon-separated ``category@x,y,z`` entries), interference_amplitude
``[controller]`` temporal_threshold, base_interval
``[sweep]`` snr_db (comma list), symbols, workers
``[throughput]`` arrival_fps (comma list), service_fps, packets_per_frame,
  packet_bits, duration, buffer (``inf`` or a packet count), arrivals
  (``deterministic`` or ``poisson``)
``[trace]`` duration, frame_fps, bits_per_frame, jitter_std, tolerance,
  snr_db (``inf`` for a noiseless link), bursts (semicolon-separated
  ``start,length,amplitude`` in seconds/pixels)
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from ..channel import ChannelError, ChannelParams, FadingParams
from ..modem import Scheme
from ..scene import NoiseCategory, SceneError


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    snr_db: tuple = (0.0, 5.0, 10.0, 13.0)
    symbols: int = 100_000
    workers: int = 1

    def validate(self):
        if self.symbols < 10_000:
            raise ConfigError("at least 10^4 symbols per SNR point")
        if not self.snr_db:
            raise ConfigError("snr_db list is empty")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class ThroughputConfig:
    arrival_fps: tuple = (5.0, 10.0, 20.0, 30.0, 45.0, 60.0, 75.0, 90.0, 105.0, 120.0, 150.0)
    service_fps: float = 90.0
    packets_per_frame: int = 1
    packet_bits: int = 64
    duration: float = 10.0
    buffer: float = math.inf
    arrivals: str = "deterministic"

    def validate(self):
        if not self.arrival_fps or any(a <= 0 for a in self.arrival_fps):
            raise ConfigError("arrival rates must be positive")
        if self.service_fps <= 0 or self.duration <= 0:
            raise ConfigError("service_fps and duration must be positive")
        if self.packets_per_frame < 1 or self.packet_bits < 1:
            raise ConfigError("packets_per_frame and packet_bits must be >= 1")
        if not self.buffer >= 0:
            raise ConfigError("buffer must be >= 0")
        if self.arrivals not in ("deterministic", "poisson"):
            raise ConfigError("arrivals must be 'deterministic' or 'poisson'")


@dataclass(frozen=True)
class TraceConfig:
    duration: float = 30.0
    frame_fps: float = 30.0
    bits_per_frame: int = 8
    jitter_std: float = 0.0
    tolerance: float = 3.0
    bursts: tuple = ()  # (start s, length s, amplitude px)
    snr_db: float = math.inf

    def validate(self):
        if self.duration < 10:
            raise ConfigError("trace duration must be at least 10 s")
        if self.frame_fps <= 0 or self.bits_per_frame < 1:
            raise ConfigError("frame_fps and bits_per_frame must be positive")
        if self.jitter_std < 0 or self.tolerance <= 0:
            raise ConfigError("jitter_std must be >= 0 and tolerance > 0")
        for b in self.bursts:
            if len(b) != 3 or b[1] <= 0 or b[2] < 0:
                raise ConfigError(f"bad burst {b!r}")


@dataclass(frozen=True)
class SceneConfig:
    vehicles: tuple = ((0.0, 0.4, 10.2),)
    noise_sources: tuple = ()  # (category, (x, y, z))
    interference_amplitude: float = 0.8

    def validate(self):
        for v in self.vehicles:
            if len(v) != 3 or v[2] <= 0:
                raise ConfigError(f"vehicle position {v!r} must be x,y,z with z > 0")
        for cat, pos in self.noise_sources:
            if not isinstance(cat, NoiseCategory) or len(pos) != 3 or pos[2] <= 0:
                raise ConfigError(f"bad noise source {cat!r}@{pos!r}")
        if not 0 <= self.interference_amplitude <= 1:
            raise ConfigError("interference_amplitude must lie in [0, 1]")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    duration: float = 30.0
    channel: ChannelParams = field(default_factory=lambda: ChannelParams(noise_std=0.5))
    scheme: Scheme = Scheme.NYQUIST_OOK
    camera_fps: float = 600.0
    payload_bits: int = 32
    scene: SceneConfig = field(default_factory=SceneConfig)
    temporal_threshold: float = 20.0
    base_interval: float = 0.01
    sweep: SweepConfig = field(default_factory=SweepConfig)
    throughput: ThroughputConfig = field(default_factory=ThroughputConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)

    def validate(self) -> "ScenarioConfig":
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.payload_bits < 1 or self.camera_fps <= 0:
            raise ConfigError("payload_bits and camera_fps must be positive")
        if self.temporal_threshold <= 0 or self.base_interval <= 0:
            raise ConfigError("controller thresholds must be positive")
        for sub in (self.scene, self.sweep, self.throughput, self.trace):
            sub.validate()
        return self


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(" ", "").split(",") if x)


def _triples(text: str) -> tuple:
    out = []
    for item in text.split(";"):
        item = item.strip()
        if item:
            vals = _floats(item)
            if len(vals) != 3:
                raise ConfigError(f"expected three numbers in {item!r}")
            out.append(vals)
    return tuple(out)


def _noise_sources(text: str) -> tuple:
    out = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        cat, _, pos = item.partition("@")
        try:
            category = NoiseCategory(cat.strip())
        except ValueError as e:
            raise ConfigError(f"unknown noise category {cat!r}") from e
        vals = _floats(pos)
        if len(vals) != 3:
            raise ConfigError(f"expected x,y,z after @ in {item!r}")
        out.append((category, vals))
    return tuple(out)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate INI text; raises :class:`ConfigError`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from e
    known = {"scenario", "channel", "modem", "scene", "controller", "sweep", "throughput", "trace"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown section(s): {sorted(extra)}")

    def get(sec, key, conv, default):
        if not cp.has_option(sec, key):
            return default
        raw = cp.get(sec, key)
        try:
            return conv(raw)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"[{sec}] {key} = {raw!r}: {e}") from e

    d = ScenarioConfig()
    try:
        fk = get("channel", "fading_k", float, None)
        fz = get("channel", "fading_z", float, None)
        if (fk is None) != (fz is None):
            raise ConfigError("fading_k and fading_z go together")
        fading = FadingParams(fk, fz) if fk is not None else 1.0
        channel = ChannelParams(
            transmit_power_avg=get("channel", "transmit_power", float, d.channel.transmit_power_avg),
            responsivity=get("channel", "responsivity", float, d.channel.responsivity),
            noise_std=get("channel", "noise_std", float, d.channel.noise_std),
            fading=fading,
        )
    except (ChannelError, SceneError) as e:
        raise ConfigError(str(e)) from e
    scheme = get("modem", "scheme", Scheme, d.scheme)
    cfg = ScenarioConfig(
        seed=get("scenario", "seed", int, d.seed),
        duration=get("scenario", "duration", float, d.duration),
        channel=channel,
        scheme=scheme,
        camera_fps=get("modem", "camera_fps", float, d.camera_fps),
        payload_bits=get("modem", "payload_bits", int, d.payload_bits),
        scene=SceneConfig(
            vehicles=get("scene", "vehicles", _triples, d.scene.vehicles),
            noise_sources=get("scene", "noise_sources", _noise_sources, d.scene.noise_sources),
            interference_amplitude=get("scene", "interference_amplitude", float, d.scene.interference_amplitude),
        ),
        temporal_threshold=get("controller", "temporal_threshold", float, d.temporal_threshold),
        base_interval=get("controller", "base_interval", float, d.base_interval),
        sweep=SweepConfig(
            snr_db=get("sweep", "snr_db", _floats, d.sweep.snr_db),
            symbols=get("sweep", "symbols", int, d.sweep.symbols),
            workers=get("sweep", "workers", int, d.sweep.workers),
        ),
        throughput=ThroughputConfig(
            arrival_fps=get("throughput", "arrival_fps", _floats, d.throughput.arrival_fps),
            service_fps=get("throughput", "service_fps", float, d.throughput.service_fps),
            packets_per_frame=get("throughput", "packets_per_frame", int, d.throughput.packets_per_frame),
            packet_bits=get("throughput", "packet_bits", int, d.throughput.packet_bits),
            duration=get("throughput", "duration", float, d.throughput.duration),
            buffer=get("throughput", "buffer", float, d.throughput.buffer),
            arrivals=get("throughput", "arrivals", str.strip, d.throughput.arrivals),
        ),
        trace=TraceConfig(
            duration=get("trace", "duration", float, d.trace.duration),
            frame_fps=get("trace", "frame_fps", float, d.trace.frame_fps),
            bits_per_frame=get("trace", "bits_per_frame", int, d.trace.bits_per_frame),
            jitter_std=get("trace", "jitter_std", float, d.trace.jitter_std),
            tolerance=get("trace", "tolerance", float, d.trace.tolerance),
            bursts=get("trace", "bursts", _triples, d.trace.bursts),
            snr_db=get("trace", "snr_db", float, d.trace.snr_db),
        ),
    )
    return cfg.validate()


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return parse_config(text)


EXAMPLE_CONFIG = """\
[scenario]
seed = 0
duration = 30

[channel]
transmit_power = 1.0
responsivity = 1.0
noise_std = 0.5

[modem]
scheme = nyquist_ook
camera_fps = 600
payload_bits = 32

[scene]
vehicles = 0,0.4,10.2; 3,0.4,25
noise_sources = ac_lighting@-4,-2,20; led_screen@5,-1.5,30
interference_amplitude = 0.8

[controller]
temporal_threshold = 20
base_interval = 0.01

[sweep]
snr_db = 0, 5, 10, 13
symbols = 100000
workers = 1

[throughput]
arrival_fps = 5, 10, 20, 30, 45, 60, 75, 90, 105, 120, 150
service_fps = 90
packets_per_frame = 1
packet_bits = 64
duration = 10
buffer = inf
arrivals = deterministic

[trace]
duration = 30
frame_fps = 30
bits_per_frame = 8
jitter_std = 0.5
tolerance = 3
snr_db = 20
bursts = 18,1,6
"""
