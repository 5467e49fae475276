import random
from array import array

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wirefuzz import fuzz_envelope

from caploop.document import CaptionDocument, CorrectionEvent, HighlightKind, Span
from caploop.transcribe import silence
from caploop.wire import (
    MESSAGE_TYPES,
    Envelope,
    FramingError,
    PeakAccumulator,
    ProtocolError,
    SchemaError,
    SequenceGuard,
    compute_peaks,
    correction_from_payload,
    correction_payload,
    decode_message,
    decode_pcm,
    delta_from_payload,
    delta_payload,
    encode_message,
    encode_pcm,
)


class TestEnvelopes:
    def test_correction_round_trip(self):
        env = Envelope(
            "correction",
            "s1",
            7,
            {
                "id": "c1",
                "span": {"start": 4, "end": 5},
                "original": ["fok"],
                "replacement": ["fork"],
                "kind": "corrected",
                "base_version": 1,
            },
        )
        assert decode_message(encode_message(env)) == env

    def test_all_types_round_trip(self):
        rng = random.Random(1)
        for msg_type in sorted(MESSAGE_TYPES):
            for _ in range(20):
                env = fuzz_envelope(rng, msg_type)
                assert decode_message(encode_message(env)) == env

    def test_unknown_type_rejected(self):
        with pytest.raises(ProtocolError) as err:
            decode_message('{"type":"mystery","session_id":"s","seq":1,"payload":{}}')
        assert err.value.code == "unknown_type"
        with pytest.raises(ProtocolError):
            encode_message(Envelope("mystery", "s", 1, {}))

    def test_missing_span_names_field(self):
        with pytest.raises(SchemaError) as err:
            decode_message(
                '{"type":"correction","session_id":"s","seq":1,'
                '"payload":{"id":"c1","original":[],"replacement":[],"kind":"corrected","base_version":0}}'
            )
        assert err.value.field == "span"
        assert "span" in str(err.value)

    def test_bad_json_rejected(self):
        with pytest.raises(ProtocolError) as err:
            decode_message("{nope")
        assert err.value.code == "bad_json"

    def test_seq_regression_detected(self):
        guard = SequenceGuard()
        guard.validate(Envelope("start_asr", "s", 4, {}))
        with pytest.raises(ProtocolError) as err:
            guard.validate(Envelope("stop_asr", "s", 4, {}))
        assert err.value.code == "seq_regression"
        guard2 = SequenceGuard()
        guard2.validate(Envelope("start_asr", "s", 10, {}))
        guard2.validate(Envelope("stop_asr", "s", 11, {}))

    def test_negative_seq_rejected(self):
        with pytest.raises(ProtocolError):
            decode_message('{"type":"start_asr","session_id":"s","seq":-1,"payload":{}}')

    def test_correction_payload_round_trip(self):
        event = CorrectionEvent(
            id="c9",
            span=Span(2, 4),
            original=("a", "b"),
            replacement=("x",),
            kind=HighlightKind.CORRECTED,
            author="h2",
            base_version=5,
            timestamp=123,
        )
        assert correction_from_payload(correction_payload(event)) == event

    def test_delta_payload_round_trip(self):
        doc = CaptionDocument()
        doc.append_segment(["a", "b"])
        delta = doc.apply_correction(
            CorrectionEvent(
                id="c1", span=Span(0, 1), original=("a",), replacement=("z",),
                kind=HighlightKind.CORRECTED, author="h", base_version=1,
            )
        )
        assert delta_from_payload(delta_payload(delta)) == delta


class TestPcm:
    def test_hundred_ms_frame(self):
        chunk = decode_pcm(bytes(3200))
        assert len(chunk.samples) == 1600
        assert chunk.duration == pytest.approx(0.1)

    def test_little_endian_extreme(self):
        chunk = decode_pcm(bytes([0x00, 0x80]))
        assert list(chunk.samples) == [-32768]

    def test_odd_length_rejected(self):
        with pytest.raises(FramingError):
            decode_pcm(bytes(5))

    def test_empty_rejected(self):
        with pytest.raises(FramingError):
            decode_pcm(b"")

    @given(st.binary(min_size=2, max_size=400).filter(lambda b: len(b) % 2 == 0))
    def test_round_trip_bit_exact(self, data):
        assert encode_pcm(decode_pcm(data)) == data

    @given(st.binary(min_size=1, max_size=99).filter(lambda b: len(b) % 2 == 1))
    def test_odd_always_rejected(self, data):
        with pytest.raises(FramingError):
            decode_pcm(data)


class TestPeaks:
    def test_silence(self):
        peaks = compute_peaks([silence(0.01)], window=40)
        assert set(peaks.peaks) == {0.0}
        assert len(peaks.peaks) == 4  # 160 samples / 40

    def test_full_scale_square_wave(self):
        wave = array("h", [32767 if i % 2 else -32767 for i in range(160)])
        peaks = compute_peaks([wave], window=40)
        for p in peaks.peaks:
            assert p == pytest.approx(1.0, abs=1 / 32768)

    def test_hand_computed_windows(self):
        peaks = compute_peaks([array("h", [0, 16384, -8192, 0])], window=2)
        assert peaks.peaks == (0.5, 0.25)

    def test_partial_window_counts(self):
        peaks = compute_peaks([array("h", [0] * 10)], window=4)
        assert len(peaks.peaks) == 3  # ceil(10/4)

    def test_min_sample_normalizes_to_one(self):
        peaks = compute_peaks([array("h", [-32768])], window=1)
        assert peaks.peaks == (1.0,)

    def test_window_zero_rejected(self):
        with pytest.raises(ValueError):
            PeakAccumulator(0)

    @given(
        st.lists(st.integers(min_value=-32768, max_value=32767), min_size=1, max_size=200),
        st.integers(min_value=1, max_value=16),
        st.randoms(use_true_random=False),
    )
    @settings(max_examples=120)
    def test_streaming_equals_batch(self, samples, window, rng):
        batch = compute_peaks([array("h", samples)], window)
        acc = PeakAccumulator(window)
        i = 0
        while i < len(samples):
            j = rng.randint(i + 1, len(samples))
            acc.feed(array("h", samples[i:j]))
            i = j
        assert acc.result() == batch
