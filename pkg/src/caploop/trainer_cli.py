"""Out-of-process trainer conforming to the adapter contract.

Usage: python -m caploop.trainer_cli MANIFEST_DIR BASE_ARTIFACT HYPER_JSON

Reads the manifest and the base engine artifact, applies the reference
training rule, writes the new engine artifact next to the manifest, and
prints its path on stdout. Real fine-tuning backends replace this command
with anything honoring the same argv/stdout protocol."""

import json
import sys
from pathlib import Path

from caploop.adapt import Hyperparams, ReferenceTrainer
from caploop.transcribe import load_engine, save_engine


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 3:
        print("usage: trainer_cli MANIFEST_DIR BASE_ARTIFACT HYPER_JSON", file=sys.stderr)
        return 2
    manifest_dir, base_artifact, hyper_json = argv
    hyper_raw = json.loads(hyper_json)
    hyper = Hyperparams(
        learning_rate=hyper_raw.get("learning_rate", 1e-5),
        batch_size=hyper_raw.get("batch_size", 8),
        max_steps=hyper_raw.get("max_steps", 100),
    )
    base = load_engine(base_artifact)
    new_engine = ReferenceTrainer().train(manifest_dir, base, hyper)
    out_path = Path(manifest_dir) / "trained_engine.json"
    save_engine(new_engine, out_path)
    print(out_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
