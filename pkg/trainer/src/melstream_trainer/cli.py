"""Command-line trainer: reads the shared net-spec/config text files,
trains on the synthetic toy corpus, writes an MFWB1 bundle + loss CSV."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from melstream import save_bundle
from melstream.errors import MelstreamError
from melstream.net import netspec_from_text

from .dataset import DatasetSpec
from .train import TrainConfig, train


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="melstream-train",
        description="Toy flow-matching training for the melstream engine",
    )
    ap.add_argument("--net-spec", required=True, help="shared network spec file")
    ap.add_argument("--out", required=True, help="output MFWB1 bundle path")
    ap.add_argument("--config", help="shared engine config file")
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--batch-size", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--clips", type=int, default=100)
    ap.add_argument("--clip-seconds", type=float, default=2.0)
    ap.add_argument("--wav-dir", help="optional folder of extra 16 kHz mono WAVs")
    ap.add_argument("--loss-csv", help="write the loss curve here")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = netspec_from_text(Path(args.net_spec).read_text())
        cfg = TrainConfig(
            steps=args.steps,
            batch_size=args.batch_size,
            seed=args.seed,
            engine_config=args.config,
            dataset=DatasetSpec(
                n_clips=args.clips,
                clip_seconds=args.clip_seconds,
                seed=args.seed,
                wav_dir=args.wav_dir,
            ),
            loss_csv=args.loss_csv,
        )
        bundle, history = train(cfg, spec)
        save_bundle(bundle, args.out)
    except (MelstreamError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    first, last = history["frozen_loss"][0], history["frozen_loss"][-1]
    print(
        f"trained {args.steps} steps; frozen-batch loss {first:.4e} -> {last:.4e}; "
        f"bundle written to {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
