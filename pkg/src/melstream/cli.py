"""Command-line entry point.

Subcommands: vocode (offline sampling), stream (frame-by-frame with
timing), baseline (pseudoinverse + RTISI-DM), verify (streaming/offline
equivalence suite), metrics, forward (single offline network pass, for
cross-implementation parity checks), init (write default spec/config).

Exit codes: 0 ok, 1 usage/config, 2 data, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .bundle import load_bundle
from .dsp import (
    StftConfig,
    StreamSynthesizer,
    analyze_signal,
    decompress_magnitudes,
    latency_report,
)
from .errors import ConfigError, DataError, InputError, MelstreamError
from .fileio import (
    DOMAIN_COMPLEX,
    DOMAIN_MEL,
    read_spectrogram,
    read_wav,
    write_spectrogram,
    write_wav,
)
from .flow import FlowConfig, StreamSession, sample_offline
from .mel import MelConfig, build_mel_operator
from .metrics import metric_report
from .net import (
    build_net,
    netspec_from_text,
    netspec_to_text,
    random_weights,
    toy_unet_spec,
)
from .rtisi import DmConfig, RtisiState
from .verify import run_verification

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3

TOY_WIDTHS = (8, 16, 24)


def _load_configs(args) -> tuple[StftConfig, MelConfig, FlowConfig]:
    kv = cfgmod.load_config_file(args.config) if getattr(args, "config", None) else {}
    stft_cfg = cfgmod.stft_config_from_dict(kv)
    mel_cfg = cfgmod.mel_config_from_dict(kv, stft_cfg)
    flow_kv = dict(kv)
    if getattr(args, "steps", None) is not None:
        flow_kv["n_steps"] = args.steps
    if getattr(args, "sigma_y", None) is not None:
        flow_kv["sigma_y"] = args.sigma_y
    if getattr(args, "seed", None) is not None:
        flow_kv["seed"] = args.seed
    flow_cfg = cfgmod.flow_config_from_dict(flow_kv)
    return stft_cfg, mel_cfg, flow_cfg


def _load_net(args, stft_cfg: StftConfig):
    spec_text = Path(args.net_spec).read_text()
    spec = netspec_from_text(spec_text)
    if args.weights:
        bundle = load_bundle(args.weights)
        bundle.validate_against(spec)
        weights = bundle.tensors
    else:
        weights = random_weights(spec, seed=getattr(args, "seed", 0) or 0)
    return build_net(spec, weights, n_freq_bins=stft_cfg.n_bins)


def _input_mels(args, stft_cfg, mel_op):
    """Mel frames from --mel (MFSPEC1) or copy-synthesis from --wav."""
    if bool(args.mel) == bool(args.wav):
        raise ConfigError("provide exactly one input: --mel or --wav")
    if args.mel:
        frames, domain = read_spectrogram(args.mel)
        if domain != DOMAIN_MEL:
            raise DataError(f"{args.mel}: expected a mel-domain (tag 1) MFSPEC1 file")
        if frames.shape[1] != mel_op.n_mels:
            raise DataError(
                f"{args.mel}: {frames.shape[1]} mel bins, operator expects {mel_op.n_mels}"
            )
        return frames
    _, samples = read_wav(args.wav, expect_sample_rate=stft_cfg.sample_rate)
    spec_frames = analyze_signal(samples, stft_cfg)
    return np.stack([mel_op.mel_frame(f) for f in spec_frames])


def cmd_vocode(args) -> int:
    stft_cfg, mel_cfg, flow_cfg = _load_configs(args)
    mel_op = build_mel_operator(mel_cfg, stft_cfg)
    net = _load_net(args, stft_cfg)
    mels = _input_mels(args, stft_cfg, mel_op)

    t0 = time.perf_counter()
    corrupted = np.stack([mel_op.pinv_decode(m) for m in mels])
    denoised = sample_offline(net, corrupted, flow_cfg)
    synth = StreamSynthesizer(stft_cfg)
    wav = np.concatenate([synth.push(f) for f in denoised])
    elapsed = time.perf_counter() - t0

    write_wav(args.out, stft_cfg.sample_rate, wav)
    print(latency_report(stft_cfg))
    audio_s = len(wav) / stft_cfg.sample_rate
    print(
        f"vocoded {len(mels)} frames ({audio_s:.2f} s) in {elapsed:.3f} s "
        f"with N={flow_cfg.n_steps} (offline RTF {elapsed / audio_s:.3f})"
    )
    return EXIT_OK


def _print_histogram(times_ms, width: int = 40):
    times_ms = np.asarray(times_ms)
    edges = np.histogram_bin_edges(times_ms, bins=8)
    counts, _ = np.histogram(times_ms, bins=edges)
    peak = max(1, counts.max())
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        bar = "#" * int(round(width * c / peak))
        print(f"  {lo:7.2f}-{hi:7.2f} ms | {bar} {c}")


def cmd_stream(args) -> int:
    stft_cfg, mel_cfg, flow_cfg = _load_configs(args)
    mel_op = build_mel_operator(mel_cfg, stft_cfg)
    net = _load_net(args, stft_cfg)
    mels = _input_mels(args, stft_cfg, mel_op)

    session = StreamSession(net, flow_cfg, stft_cfg, mel_op)
    hop_s = stft_cfg.hop_len / stft_cfg.sample_rate
    deadline_misses = 0
    chunks = []
    for mel in mels:
        t_arrival = time.perf_counter()
        chunks.append(session.step(mel))
        if args.realtime:
            spent = time.perf_counter() - t_arrival
            if spent > hop_s:
                deadline_misses += 1
            else:
                time.sleep(hop_s - spent)
    wav = np.concatenate(chunks)
    write_wav(args.out, stft_cfg.sample_rate, wav)

    if args.timing_log:
        Path(args.timing_log).write_text(session.timing_report())
    times = [t.total_ms for t in session.timings]
    print(latency_report(stft_cfg))
    print(f"RTF: {session.rtf():.3f}")
    print(
        f"per-frame time: mean {np.mean(times):.2f} ms, "
        f"p95 {np.percentile(times, 95):.2f} ms, budget {stft_cfg.hop_ms:.1f} ms"
    )
    _print_histogram(times)
    if args.realtime:
        print(f"deadline misses: {deadline_misses} / {len(mels)}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    stft_cfg, mel_cfg, _ = _load_configs(args)
    mel_op = build_mel_operator(mel_cfg, stft_cfg)
    mels = _input_mels(args, stft_cfg, mel_op)
    dm_cfg = DmConfig(beta=args.beta, iters_per_frame=args.iters)

    state = RtisiState(stft_cfg, dm_cfg)
    chunks = []
    for mel in mels:
        compressed = mel_op.pinv_decode(mel)
        # DM projections operate on physical magnitudes.
        target = np.abs(
            decompress_magnitudes(
                compressed.astype(np.complex128), stft_cfg.compress_alpha
            )
        )
        chunks.append(state.process_frame(target))
    wav = np.concatenate(chunks)
    write_wav(args.out, stft_cfg.sample_rate, wav)
    print(
        f"baseline: {len(mels)} frames, beta={dm_cfg.beta}, "
        f"{dm_cfg.iters_per_frame} iterations/frame"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    stft_cfg, mel_cfg, flow_cfg = _load_configs(args)
    mel_op = build_mel_operator(mel_cfg, stft_cfg)
    net = _load_net(args, stft_cfg)
    result = run_verification(
        net, stft_cfg, mel_op, flow_cfg, n_frames=args.frames, seed=args.seed or 0
    )
    for line in result.details:
        print(line)
    print("verification:", "PASS" if result.passed else "FAIL")
    return EXIT_OK if result.passed else EXIT_VERIFY


def cmd_metrics(args) -> int:
    stft_cfg, mel_cfg, _ = _load_configs(args)
    _, ref = read_wav(args.ref, expect_sample_rate=stft_cfg.sample_rate)
    _, est = read_wav(args.est, expect_sample_rate=stft_cfg.sample_rate)
    if len(ref) != len(est):
        n = min(len(ref), len(est))
        print(f"warning: length mismatch, trimming both to {n} samples", file=sys.stderr)
        ref, est = ref[:n], est[:n]
    report = metric_report(ref, est, stft_cfg, mel_cfg)
    print(f"SI-SDR: {report.si_sdr:.2f} dB")
    print(f"LSD: {report.lsd:.3f} dB")
    print(f"MCD: {report.mcd:.3f}")
    blob = json.dumps(report.to_dict())
    print(blob)
    if args.json:
        Path(args.json).write_text(blob + "\n")
    return EXIT_OK


def cmd_forward(args) -> int:
    stft_cfg, _, _ = _load_configs(args)
    net = _load_net(args, stft_cfg)
    frames, domain = read_spectrogram(args.frames_in)
    if domain != DOMAIN_COMPLEX:
        raise DataError("forward expects a compressed-complex (tag 0) MFSPEC1 file")
    out = net.forward_offline(frames, tau=args.tau)
    write_spectrogram(args.out, out, DOMAIN_COMPLEX)
    print(f"forward pass: {frames.shape[0]} frames at tau={args.tau}")
    return EXIT_OK


def cmd_init(args) -> int:
    out_dir = Path(args.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = toy_unet_spec(widths=TOY_WIDTHS)
    (out_dir / "net_spec.txt").write_text(netspec_to_text(spec))
    stft_cfg = StftConfig()
    mel_cfg = MelConfig()
    flow_cfg = FlowConfig()
    (out_dir / "engine.cfg").write_text(
        cfgmod.configs_to_text(stft_cfg, mel_cfg, flow_cfg)
    )
    print(f"wrote {out_dir / 'net_spec.txt'} and {out_dir / 'engine.cfg'}")
    return EXIT_OK


def _add_common(p, net: bool = True):
    p.add_argument("--config", help="key-value config file (STFT/mel/flow)")
    p.add_argument("--steps", type=int, help="number of flow steps N")
    p.add_argument("--sigma-y", dest="sigma_y", type=float, help="noise scale")
    p.add_argument("--seed", type=int, help="RNG seed")
    if net:
        p.add_argument("--net-spec", required=True, help="network spec file")
        p.add_argument("--weights", help="MFWB1 weight bundle")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="melstream",
        description="Streaming mel-spectrogram inversion engine",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vocode", help="offline vocoding of a mel file or WAV")
    _add_common(p)
    p.add_argument("--mel", help="MFSPEC1 mel input")
    p.add_argument("--wav", help="WAV input (copy-synthesis)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vocode)

    p = sub.add_parser("stream", help="frame-by-frame vocoding with timing")
    _add_common(p)
    p.add_argument("--mel")
    p.add_argument("--wav")
    p.add_argument("--out", required=True)
    p.add_argument("--timing-log", help="write per-frame timing lines here")
    p.add_argument("--realtime", action="store_true", help="simulate live arrival")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("baseline", help="pseudoinverse + RTISI-DM baseline")
    _add_common(p, net=False)
    p.add_argument("--mel")
    p.add_argument("--wav")
    p.add_argument("--beta", type=float, default=1.75)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("verify", help="streaming/offline equivalence suite")
    _add_common(p)
    p.add_argument("--frames", type=int, default=200)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("metrics", help="SI-SDR / LSD / MCD between two WAVs")
    _add_common(p, net=False)
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--json", help="write the JSON report here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("forward", help="one offline network pass (parity checks)")
    _add_common(p)
    p.add_argument("--frames-in", required=True, help="MFSPEC1 complex input")
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("init", help="write default net spec and config files")
    p.add_argument("--dir", default=".")
    p.set_defaults(func=cmd_init)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MelstreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
