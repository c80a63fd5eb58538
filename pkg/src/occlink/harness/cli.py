"""Command-line entry point: ``occlink <command> [--config FILE] [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import controller, ranging
from ..detect.regions import DetectionConfig, detect_rois, detect_static, roi_mask
from ..scene import CameraModel, ConstantDrive, LedArraySpec, Scene, render_sequence, render_stereo
from ..textio import format_rois, write_csv, write_disparity, write_pgm
from .config import ConfigError, ScenarioConfig, load_config
from .sweeps import (BER_HEADER, THROUGHPUT_HEADER, TRACE_HEADER, build_scene, run_ber_sweep, run_packet_trace,
                     run_throughput)

log = logging.getLogger("occlink")

POLICY_HEADER = ("time", "case", "voi_id", "distance", "interval")
RANGE_HEADER = ("vehicle", "left_x", "right_x", "row", "pixel_separation", "distance_m", "stereo_depth_m")


def _cmd_ber(cfg, out):
    write_csv(out / "ber.csv", "ber", BER_HEADER, run_ber_sweep(cfg))


def _cmd_throughput(cfg, out):
    write_csv(out / "throughput.csv", "throughput", THROUGHPUT_HEADER, run_throughput(cfg))


def _cmd_trace(cfg, out):
    write_csv(out / "trace.csv", "trace", TRACE_HEADER, run_packet_trace(cfg))


def _vehicle_distances(rois, cam: CameraModel, separation: float = 1.2):
    pairs = ranging.pair_lights(rois)
    dist = [ranging.inter_vehicle_distance(cam.focal_length, cam.pixel_size, separation,
                                           b.centroid[0] - a.centroid[0]) for a, b in pairs]
    return pairs, dist


def _cmd_detect_demo(cfg, out):
    cam = CameraModel()
    scene = build_scene(cfg)
    frames = render_sequence(scene, cam, 4)
    rois = detect_rois(frames, DetectionConfig())
    for i, f in enumerate(frames):
        write_pgm(out / f"frame{i}.pgm", f, comment=f"t={f.timestamp!r}")
    mask = np.zeros(frames[0].shape, dtype=bool)
    for r in rois:
        x0, y0, x1, y1 = r.bbox
        mask[y0:y1, x0:x1] = True
    write_pgm(out / "roi_mask.pgm", mask)
    (out / "rois.txt").write_text(format_rois(rois), encoding="utf-8")
    pairs, dist = _vehicle_distances(rois, cam)
    situation = controller.classify(dist, len(pairs), cfg.temporal_threshold)
    interval = controller.sampling_interval(situation, cfg.base_interval)
    row = controller.policy_log_row(0.0, situation, interval)
    write_csv(out / "policy.csv", "policy", POLICY_HEADER, [[row[k] for k in POLICY_HEADER]])
    log.info("%d RoIs, %d vehicles, case %s", len(rois), len(pairs), situation.case.value)


def _cmd_range_demo(cfg, out, baseline: float = 0.2, max_disp: int = 40):
    cam = CameraModel()
    scene = Scene(arrays=tuple(LedArraySpec(tuple(v), drive=ConstantDrive()) for v in cfg.scene.vehicles))
    left, right = render_stereo(scene, cam, baseline)
    dmap = ranging.sad_disparity(left, right, 11, max_disp, subpixel=True)
    write_pgm(out / "left.pgm", left)
    write_pgm(out / "right.pgm", right)
    write_disparity(out / "disparity", dmap)
    rois = detect_static(left, 0.3, 2.0)
    pairs, dist = _vehicle_distances(rois, cam)
    rows = []
    for k, ((a, b), d) in enumerate(zip(pairs, dist)):
        disp = np.concatenate([dmap.region(roi_mask(r, left.shape) & (left.pixels > 0.3)) for r in (a, b)])
        z = ranging.depth(float(np.median(disp)), cam.focal_px, baseline) if disp.size and np.median(disp) > 0 \
            else float("nan")
        rows.append((k, a.centroid[0], b.centroid[0], 0.5 * (a.centroid[1] + b.centroid[1]),
                     b.centroid[0] - a.centroid[0], d, z))
    write_csv(out / "ranging.csv", "ranging", RANGE_HEADER, rows)


COMMANDS = {
    "ber": _cmd_ber,
    "throughput": _cmd_throughput,
    "trace": _cmd_trace,
    "detect-demo": _cmd_detect_demo,
    "range-demo": _cmd_range_demo,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="occlink", description="LED-to-camera link simulator")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="INI scenario file")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config) if args.config else ScenarioConfig()
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed).validate()
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        COMMANDS[args.command](cfg, args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
