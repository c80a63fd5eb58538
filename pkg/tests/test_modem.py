import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occlink import modem as m
from occlink.scene import (CameraModel, LedArraySpec, Occluder, Scene, Shutter, SquareDrive, ConstantDrive,
                           emitter_pixels, render)
from oracles import square_wave

payloads = st.lists(st.integers(0, 1), min_size=8, max_size=512)


def packet(bits):
    return m.Packet(tuple(bits))


class TestFraming:
    @given(st.lists(st.integers(0, 1), max_size=300))
    def test_stuffing_round_trip_and_flag_free(self, bits):
        stuffed = m.stuff_bits(bits)
        assert m.destuff_bits(stuffed) == list(bits)
        s = "".join(map(str, stuffed))
        assert "111111" not in s

    @given(payloads)
    @settings(max_examples=50)
    def test_hdlc_round_trip(self, bits):
        payload, end, erased = m.hdlc_deframe(m.hdlc_frame(packet(bits)))
        assert payload == list(bits) and erased == 0 and end > 0

    def test_packet_rejects_non_bits(self):
        with pytest.raises(m.ModemError):
            m.Packet((0, 2))

    def test_demod_result_invariant(self):
        with pytest.raises(m.ModemError):
            m.DemodResult(bits=(1,), sync_found=False)


class TestNyquist:
    def test_rate_anchors(self):
        assert m.encode_nyquist_ook(packet([1] * 8), 600).bit_rate == 150
        assert m.nyquist_bit_rate(4600) == 1150
        assert m.encode_nyquist_ook(packet([1] * 8), 600).pulse_rate == 300

    def test_bad_fps_and_empty(self):
        with pytest.raises(m.ModemError):
            m.encode_nyquist_ook(packet([1]), 601)
        with pytest.raises(m.ModemError):
            m.encode_nyquist_ook(m.Packet(()), 600)

    def test_all_zero_payload_is_flat(self):
        w = m.encode_nyquist_ook(packet([0] * 8), 600)
        flag_len = len(m.HDLC_FLAG)
        assert np.all(w.levels[flag_len:flag_len + 8, 0] == 0)

    def test_pair_rules(self):
        assert m.pair_decision(1, 1) == 1
        assert m.pair_decision(-1, 0) == 0
        assert m.pair_decision(1, -1) == 1
        assert m.pair_decision(-1, -1) == -1
        assert m.pair_decision(0, 1) == -2

    def test_decode_pairs_with_unclear(self):
        assert m.decode_pairs([1.0, 1.0, 0.5, 0.0, 0.5, 1.0], dynamic_range=(0, 1)) == [1, 0, 1]

    @given(payloads, st.floats(0.05, 0.95))
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, bits, phase):
        w = m.encode_nyquist_ook(packet(bits), 600)
        res = m.decode_nyquist_ook(m.ideal_sample_nyquist(w, 600, phase))
        assert res.ok and list(res.bits) == bits

    def test_too_short(self):
        assert not m.decode_nyquist_ook([1.0]).sync_found


class TestUfsook:
    def test_rate_anchor(self):
        w = m.encode_ufsook(packet([1] * 8), 20, space_hz=120, mark_hz=110)
        assert w.bit_rate == 10

    def test_valid_30fps_config(self):
        m.validate_ufsook(30, 120, 105, 1200)

    def test_wrong_offset_and_flicker(self):
        with pytest.raises(m.ModemError):
            m.encode_ufsook(packet([1] * 8), 30, space_hz=120, mark_hz=90)
        with pytest.raises(m.FlickerError):
            m.encode_ufsook(packet([1] * 8), 30, space_hz=90, mark_hz=105)

    def test_space_alias_is_static(self):
        # 120 Hz sampled at 30 fps: same state each frame for any phase
        for ph in np.linspace(0, 1, 13, endpoint=False):
            s = square_wave(np.arange(2) / 30, 120, ph)
            assert s[0] == s[1]

    def test_mark_alias_toggles(self):
        for ph in np.linspace(0.01, 0.99, 13):
            s = square_wave(np.arange(2) / 30, 105, ph)
            assert s[0] != s[1]

    def test_only_configured_frequencies(self):
        w = m.encode_ufsook(packet([0, 1] * 8), 30)
        assert w.frequencies() <= {120.0, 105.0, 1200.0}
        assert min(w.frequencies()) >= m.FLICKER_LIMIT_HZ

    @given(payloads, st.floats(0, 1, exclude_max=True), st.floats(0, 1))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_any_phase(self, bits, phase0, offset):
        w = m.encode_ufsook(packet(bits), 30, phase0=phase0)
        res = m.decode_ufsook(m.ideal_sample_ufsook(w, 30, offset), 30)
        assert res.ok and list(res.bits) == bits

    def test_no_sfd(self):
        assert not m.decode_ufsook(np.ones(40)).sync_found

    def test_bit_rate_bound(self):
        for fps in (10, 20, 30, 60):
            assert m.ufsook_bit_rate(fps) <= fps / 2


class TestRolling:
    def test_band_width_via_renderer(self):
        cam = CameraModel(resolution=(64, 200), shutter=Shutter.ROLLING, row_time=25e-6, fps=30)
        led = LedArraySpec((0.0, 0.0, 0.5), grid=(1, 1), left_right_separation=0.01, emitter_radius=0.05,
                           drive=SquareDrive(2000.0))
        img = render(Scene(arrays=(led,)), cam, 0.0).pixels
        (u, v), r, _, _ = emitter_pixels(led, cam)[0]
        assert r > 60
        crop = img[int(v) - 55:int(v) + 55, int(u) - 2:int(u) + 3]
        assert set(m.band_widths(crop)) == {10}
        assert m.band_rows(2000.0, 25e-6) == pytest.approx(10.0)

    def test_constant_led_has_no_bands(self):
        cam = CameraModel(resolution=(64, 120), shutter=Shutter.ROLLING, row_time=25e-6)
        led = LedArraySpec((0.0, 0.0, 0.5), grid=(1, 1), emitter_radius=0.05, left_right_separation=0.01,
                           drive=ConstantDrive())
        img = render(Scene(arrays=(led,)), cam).pixels
        assert img[30:90, 28:36].min() == 1.0
        assert m.band_widths(img[30:90, 28:36]) == []

    def test_undersampled(self):
        frame = np.repeat(np.array([0, 1] * 20, float)[:, None], 4, axis=1)
        with pytest.raises(m.UndersampledError):
            m.decode_rolling_ook(frame, 25e-6, [30_000.0])

    def test_frequency_window(self):
        with pytest.raises(m.ModemError):
            m.encode_rolling_ook(packet([1] * 8), 20.0, camera_fps=30, row_time=25e-6)
        with pytest.raises(m.ModemError):
            m.encode_rolling_ook(packet([1] * 8), 50_000.0, camera_fps=30, row_time=25e-6)

    def test_manchester_convention(self):
        assert m.manchester([1, 0]) == [0, 1, 1, 0]

    @given(payloads, st.sampled_from([1000.0, 2000.0, 4000.0]), st.floats(0, 0.99))
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, bits, f, row_phase):
        w = m.encode_rolling_ook(packet(bits), f)
        frame = m.ideal_sample_rolling(w, 25e-6, row_phase=row_phase)
        res = m.decode_rolling_ook(frame, 25e-6, [1000.0, 2000.0, 4000.0])
        assert res.ok and list(res.bits) == bits


class TestS2psk:
    def test_phase_logic(self):
        w = m.encode_s2psk(packet([0, 1] * 4))
        a, b = m.ideal_sample_s2psk(w)
        res = m.decode_s2psk(a, b)
        assert list(res.bits) == [0, 1] * 4

    def test_state_pairs(self):
        # (on, on) -> 0 and (on, off) -> 1
        payload = [0, 1, 1, 0, 1, 0, 0, 0, 1]
        framed = np.array(m.hdlc_frame(packet(payload)))
        a = np.ones(framed.size)
        b = 1.0 - framed
        b[0] = 1.0 if b.max() == 0 else b[0]
        res = m.decode_s2psk(a, b)
        assert list(res.bits) == payload

    def test_flicker(self):
        with pytest.raises(m.FlickerError):
            m.encode_s2psk(packet([1] * 8), blink_hz=60)

    @given(payloads, st.floats(0.05, 0.95), st.floats(0.01, 100), st.floats(0.01, 100))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_and_scale_invariance(self, bits, phase, sa, sb):
        w = m.encode_s2psk(packet(bits))
        a, b = m.ideal_sample_s2psk(w, phase)
        ref = m.decode_s2psk(a, b)
        assert ref.ok and list(ref.bits) == bits
        assert m.decode_s2psk(sa * a, sa * b) == ref

    def test_occluded_group_is_erasure(self):
        w = m.encode_s2psk(packet([1, 0, 1, 1, 0, 0, 1, 0]))
        a, b = m.ideal_sample_s2psk(w)
        res = m.decode_s2psk(a, np.zeros_like(b))
        assert not res.sync_found and res.erasures == len(a) and res.bits == ()

    def test_partial_occlusion_through_renderer(self):
        bits = [1, 0, 0, 1, 1, 1, 0, 1, 0, 0, 1, 0]
        w = m.encode_s2psk(packet(bits), blink_hz=125, symbol_rate=30)
        cam = CameraModel(resolution=(320, 160), fps=30)
        z, r, sp = 2.0, 0.03, 0.1
        arr = LedArraySpec((0.0, 0.0, z), grid=(2, 2), group_labels=(0, 0, 1, 1), emitter_spacing=sp,
                           emitter_radius=r, left_right_separation=0.4, drive=w)
        # strip over the lower 38% of each group-1 disc height (~30% of its area)
        h = 0.38 * 2 * r
        top = sp / 2 + r - h
        occ = Occluder((0.0, top + h / 2, z - 1e-3), 2.0, h * (z - 1e-3) / z)
        scene = Scene(arrays=(arr,), occluders=(occ,))
        yy, xx = np.mgrid[0:160, 0:320]
        masks = {g: np.zeros((160, 320), bool) for g in (0, 1)}
        for (uu, vv), rr, _, g in emitter_pixels(arr, cam):
            masks[g] |= np.hypot(xx - uu, yy - vv) <= rr + 0.5
        n = w.n_slots + 16
        t = w.start + (np.arange(n) - 8 + 0.5) / 30
        frames = [render(scene, cam, float(ti)).pixels for ti in t]
        a = np.array([f[masks[0]].mean() for f in frames])
        b = np.array([f[masks[1]].mean() for f in frames])
        on = int(np.argmax(b))
        clear = render(Scene(arrays=(arr,)), cam, float(t[on])).pixels[masks[1]].sum()
        blocked = 1 - frames[on][masks[1]].sum() / clear
        assert 0.25 <= blocked <= 0.35
        res = m.decode_s2psk(a, b)
        assert res.ok and list(res.bits) == bits
