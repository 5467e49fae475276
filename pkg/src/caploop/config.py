"""Service configuration: one JSON file plus CAPLOOP_* environment
overrides."""

import json
import os
from dataclasses import dataclass, fields

from caploop.adapt import Hyperparams


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8237
    data_dir: str = "./caploop-data"
    tls_certfile: str | None = None
    tls_keyfile: str | None = None
    cors_origins: tuple[str, ...] = ("*",)
    completion_url: str | None = None
    completion_model: str = ""
    completion_api_key: str | None = None
    completion_timeout: float = 10.0
    trainer: str = "reference"  # reference | external
    trainer_cmd: tuple[str, ...] = ()
    chunk_hop_s: float = 1.0
    seconds_per_word: float = 0.4
    learning_rate: float = 1e-5
    batch_size: int = 8
    max_steps: int = 100
    base_confusion: str | None = None  # JSON file: canonical word -> misrecognition
    engine_label: str = "base"

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(self.learning_rate, self.batch_size, self.max_steps)

    @classmethod
    def load(cls, path: str | None = None, env: dict | None = None) -> "ServiceConfig":
        data: dict = {}
        if path:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        cfg = cls(**{k: v for k, v in data.items() if k in {f.name for f in fields(cls)}})
        env = os.environ if env is None else env
        for f in fields(cls):
            key = f"CAPLOOP_{f.name.upper()}"
            if key not in env:
                continue
            raw = env[key]
            current = getattr(cfg, f.name)
            if f.name in ("cors_origins", "trainer_cmd"):
                value = tuple(part for part in raw.split(",") if part)
            elif isinstance(current, bool):
                value = raw.lower() in ("1", "true", "yes")
            elif isinstance(current, int) and not isinstance(current, bool):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
            else:
                value = raw or None
            setattr(cfg, f.name, value)
        if isinstance(cfg.cors_origins, list):
            cfg.cors_origins = tuple(cfg.cors_origins)
        if isinstance(cfg.trainer_cmd, list):
            cfg.trainer_cmd = tuple(cfg.trainer_cmd)
        return cfg
