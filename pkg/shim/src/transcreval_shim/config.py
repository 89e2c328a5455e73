"""Shim configuration: which models to host and how to listen."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

HASH_ENCODER = "hash-encoder"
STUB_CHAT = "stub-chat"


@dataclass
class ShimConfig:
    host: str = "127.0.0.1"
    port: int = 8901
    embed_model: str | None = HASH_ENCODER
    chat_model: str | None = STUB_CHAT
    device: str = "cpu"
    max_batch: int = 8
    # request bodies carry base64 images; this caps the decoded size
    max_image_bytes: int = 8 * 1024 * 1024
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.embed_model and not self.chat_model:
            raise ValueError("configure at least one model (embed_model or chat_model)")
        if self.max_image_bytes < 1:
            raise ValueError("max_image_bytes must be positive")


def load_config(path: str | Path | None, overrides: dict) -> ShimConfig:
    """Config file plus CLI overrides; overrides set to None are ignored.
    The literal string "none" disables a model slot from the command line."""
    data: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("shim config file must hold a JSON object")
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    for slot in ("embed_model", "chat_model"):
        if isinstance(data.get(slot), str) and data[slot].lower() == "none":
            data[slot] = None
    unknown = set(data) - set(ShimConfig.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown shim config keys: {sorted(unknown)}")
    return ShimConfig(**data)
