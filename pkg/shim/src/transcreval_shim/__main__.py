"""Entry point: `python -m transcreval_shim` or the `transcreval-shim` script."""

from __future__ import annotations

import argparse
import sys

import uvicorn

from .app import create_app
from .config import load_config


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="transcreval-shim",
        description="serve embedding and chat models over the evaluation wire contract",
    )
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    parser.add_argument("--embed-model", help="embedding model id, or 'none' to disable")
    parser.add_argument("--chat-model", help="chat model id, or 'none' to disable")
    parser.add_argument("--device")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--max-image-bytes", type=int)
    args = parser.parse_args(argv)

    config = load_config(
        args.config,
        {
            "host": args.host,
            "port": args.port,
            "embed_model": args.embed_model,
            "chat_model": args.chat_model,
            "device": args.device,
            "seed": args.seed,
            "max_image_bytes": args.max_image_bytes,
        },
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
