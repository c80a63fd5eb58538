import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occlink.detect import RoI, RoiTag, detect_keypoints
from occlink.modem import DemodResult, Packet, encode_nyquist_ook, encode_s2psk, encode_ufsook
from occlink.ranging import DisparityMap
from occlink.textio import (FormatError, format_csv, format_demod, format_keypoints, format_pgm, format_rois,
                            format_waveform, parse_demod, parse_keypoints, parse_pgm, parse_rois, parse_waveform,
                            read_csv, write_csv, write_disparity)

bits = st.lists(st.integers(0, 1), min_size=1, max_size=24).map(tuple)


def same_wave(a, b):
    return (a.scheme is b.scheme and a.slot_duration == b.slot_duration and np.array_equal(a.levels, b.levels)
            and np.array_equal(a.freqs, b.freqs) and np.array_equal(a.offsets, b.offsets)
            and a.start == b.start and a.phase0 == b.phase0 and a.bit_rate == b.bit_rate)


class TestWaveform:
    @given(bits)
    @settings(max_examples=20, deadline=None)
    def test_round_trip(self, payload):
        for w in (encode_nyquist_ook(Packet(payload), 600.0), encode_ufsook(Packet(payload), 30.0, phase0=0.3),
                  encode_s2psk(Packet(payload))):
            back = parse_waveform(format_waveform(w))
            assert same_wave(w, back)
            t = np.linspace(0, w.duration, 50)
            assert np.array_equal(w.mean(t, t), back.mean(t, t))

    def test_garbage(self):
        with pytest.raises(FormatError):
            parse_waveform("hello")


class TestRecords:
    @given(bits, st.integers(0, 10 ** 6), st.booleans())
    def test_demod(self, b, n, sync):
        r = DemodResult(b if sync else (), n, 3, sync, 1)
        assert parse_demod(format_demod(r)) == r

    def test_rois(self):
        rois = [RoI((1, 2, 9, 8), (4.123456789, 5.5), 30, 0.7312, RoiTag.NEAR, 1),
                RoI((10, 10, 13, 12), (11.0, 10.9), 5, 1.0, RoiTag.REJECTED, 2)]
        back = parse_rois(format_rois(rois))
        assert back == rois

    def test_keypoints(self):
        rng = np.random.default_rng(0)
        from scipy import ndimage
        img = ndimage.gaussian_filter(rng.random((64, 64)), 2)
        kps = detect_keypoints((img - img.min()) / np.ptp(img))
        back = parse_keypoints(format_keypoints(kps))
        assert len(back) == len(kps) > 0
        for a, b in zip(kps, back):
            assert (a.x, a.y, a.scale, a.orientation, a.response, a.level) == (b.x, b.y, b.scale, b.orientation,
                                                                               b.response, b.level)
            assert np.array_equal(a.descriptor, b.descriptor)

    def test_bad_lines(self):
        with pytest.raises(FormatError):
            parse_rois("roi 1 2 3")
        with pytest.raises(FormatError):
            parse_keypoints("kp a b c d e f")


class TestPgm:
    def test_round_trip(self):
        g = np.random.default_rng(1).integers(0, 256, (7, 11))
        assert np.array_equal(parse_pgm(format_pgm(g, lo=0, hi=255, comment="x\ny")), g)

    def test_scaling(self):
        assert parse_pgm(format_pgm(np.array([[0.0, 0.5, 1.0, 2.0]])))[0].tolist() == [0, 128, 255, 255]

    def test_bad(self):
        with pytest.raises(FormatError):
            parse_pgm("P5 1 1 255 0")
        with pytest.raises(FormatError):
            parse_pgm("P2 2 2 255 0 0 0")

    def test_disparity_export(self, tmp_path):
        vals = np.array([[0.0, 5.0], [10.0, 2.5]])
        valid = np.array([[False, True], [True, True]])
        pgm, side = write_disparity(tmp_path / "d", DisparityMap(vals, valid, 5, 10))
        g = parse_pgm(pgm.read_text())
        assert g.tolist() == [[0, 128], [255, 1 + round(2.5 * 25.4)]]
        meta = dict(ln.split("=") for ln in side.read_text().split())
        assert meta["window"] == "5" and meta["max_disparity"] == "10" and meta["valid_pixels"] == "3"


class TestCsv:
    def test_round_trip_exact(self, tmp_path):
        rows = [(0.1, "standard", 10, 0.30000000000000004), (math.inf, "adaptive", 0, 1e-300)]
        p = write_csv(tmp_path / "x.csv", "ber", ("a", "b", "c", "d"), rows)
        comment, header, back = read_csv(p)
        assert comment == "# occlink-ber schema=1" and header == ["a", "b", "c", "d"]
        assert [(float(r[0]), r[1], int(r[2]), float(r[3])) for r in back] == rows

    def test_missing_comment(self, tmp_path):
        p = tmp_path / "y.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            read_csv(p)

    def test_format_header(self):
        assert format_csv("t", ["x"], [[1.5]]).splitlines() == ["# occlink-t schema=1", "x", "1.5"]
