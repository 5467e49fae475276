"""Regenerate the golden vectors shared with the backend.

Run from the repository root: python frontend/tools/make_golden.py
Requires the caploop package importable (pip install -e .).
"""

import json
import random
import sys
from array import array
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))

from wirefuzz import fuzz_envelope  # noqa: E402  (backend test helper)

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def envelopes():
    from caploop.wire import encode_message

    rng = random.Random(20240)
    cases = []
    for _ in range(200):
        env = fuzz_envelope(rng)
        cases.append(
            {
                "frame": encode_message(env),
                "type": env.type,
                "session_id": env.session_id,
                "seq": env.seq,
                "payload": env.payload,
            }
        )
    (GOLDEN / "envelopes.json").write_text(json.dumps(cases, indent=1), encoding="utf-8")


def peaks():
    from caploop.wire import compute_peaks

    rng = random.Random(7)
    cases = []
    samples_sets = [
        [0, 16384, -8192, 0],
        [0] * 10,
        [32767, -32767] * 8,
        [-32768],
        [rng.randint(-32768, 32767) for _ in range(315)],
    ]
    for samples in samples_sets:
        for window in (1, 2, 4, 40):
            result = compute_peaks([array("h", samples)], window)
            cases.append({"samples": samples, "window": window, "peaks": list(result.peaks)})
    (GOLDEN / "peaks.json").write_text(json.dumps(cases, indent=1), encoding="utf-8")


def deltas():
    """A document edit session and the snapshot after each delta."""
    from caploop.document import CaptionDocument, CorrectionEvent, HighlightKind, Span
    from caploop.wire import delta_payload

    doc = CaptionDocument()
    steps = []

    def push(delta):
        steps.append(
            {
                "delta": delta_payload(delta),
                "tokens": [[t.text, t.origin] for t in doc.tokens],
                "highlights": [[s.start, s.end, k.value] for s, k in doc.highlights],
                "version": doc.version,
            }
        )

    push(doc.append_segment(["she", "picked", "up", "the", "fok"]))
    push(doc.append_segment(["and", "sat", "down"]))
    push(
        doc.apply_correction(
            CorrectionEvent(
                id="c1", span=Span(4, 5), original=("fok",), replacement=("fork",),
                kind=HighlightKind.CORRECTED, author="h1", base_version=2,
            )
        )
    )
    push(
        doc.apply_correction(
            CorrectionEvent(
                id="f1", span=Span(5, 7), original=("and", "sat"), replacement=(),
                kind=HighlightKind.UNCERTAIN, author="h1", base_version=3,
            )
        )
    )
    push(
        doc.apply_correction(
            CorrectionEvent(
                id="c2", span=Span(1, 2), original=("picked",), replacement=("quickly", "picked"),
                kind=HighlightKind.CORRECTED, author="h2", base_version=4,
            )
        )
    )
    push(doc.append_segment(["the", "end"]))
    (GOLDEN / "deltas.json").write_text(json.dumps(steps, indent=1), encoding="utf-8")


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    envelopes()
    peaks()
    deltas()
    print(f"golden vectors written to {GOLDEN}")


if __name__ == "__main__":
    main()
