"""Frame-causal convolutional U-Net with dual execution modes.

The network is described by a flat list of primitive blocks (causal
time/frequency convolutions, SiLU, frozen sub-band grouped norm,
diffusion-time affine injection, named skip store/add). A U-Net is
expressed in this IR by the ``toy_unet_spec`` builder: skips are stored
on the way down and added (never concatenated) on the way up, all
down/upsampling happens along frequency only, and deeper levels use
time dilation instead of time striding.

Execution modes:

* ``forward_offline`` - whole sequence, zero-padded causal convs.
* ``forward_step``    - one frame at a time; every time convolution
  keeps a rolling buffer of its last ``(k_t - 1) * d_t`` input frames,
  initialized to zeros so streaming matches the offline zero padding.

Complex frames enter as 2 real channels (re, im).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError, InputError, SpecMismatchError

_NORM_EPS = 1e-5


# ---------------------------------------------------------------------------
# Block specs


@dataclass(frozen=True)
class ConvSpec:
    """Causal 2-D convolution: causal along time, same-padded along
    frequency, optional stride 2 along frequency. Time stride is always 1."""

    c_in: int
    c_out: int
    k_t: int = 3
    k_f: int = 3
    d_t: int = 1
    freq_stride: int = 1
    transposed: bool = False  # frequency upsampler (zero-stuff then conv)
    causal: bool = True  # False only for negative-control test fixtures

    kind: str = "conv"

    def __post_init__(self):
        if self.k_t < 1 or self.k_f < 1 or self.d_t < 1:
            raise ConfigError("kernel sizes and dilation must be >= 1")
        if self.k_f % 2 != 1:
            raise ConfigError("frequency kernel extent must be odd")
        if self.freq_stride not in (1, 2):
            raise ConfigError("freq_stride must be 1 or 2")
        if self.transposed and (self.freq_stride != 1 or self.k_t != 1):
            raise ConfigError("transposed conv must have k_t=1, freq_stride=1")

    @property
    def receptive_field(self) -> int:
        """R_l = (k_t - 1) * d_t + 1 frames, including the current one."""
        return (self.k_t - 1) * self.d_t + 1

    @property
    def cache_len(self) -> int:
        # Non-causal fixture convs keep a cache too, so streaming runs
        # (and measurably diverges from offline, which is the point).
        return self.receptive_field - 1


@dataclass(frozen=True)
class NormSpec:
    """Sub-band grouped norm with frozen statistics: per-channel affine
    with independent statistics per contiguous frequency group. Pointwise
    in time, hence streaming-safe."""

    channels: int
    freq_groups: int = 4
    kind: str = "norm"


@dataclass(frozen=True)
class TauAffineSpec:
    """Per-channel scale/shift derived from the sinusoidal diffusion-time
    embedding through a learned linear map."""

    channels: int
    kind: str = "tau"


@dataclass(frozen=True)
class SiluSpec:
    kind: str = "silu"


@dataclass(frozen=True)
class StoreSpec:
    name: str
    kind: str = "store"


@dataclass(frozen=True)
class AddSpec:
    """Additive skip fusion; optional 1x1 projection on the stored branch
    when channel counts differ."""

    name: str
    proj_c_in: int = 0  # 0 means no projection
    proj_c_out: int = 0
    kind: str = "add"


@dataclass(frozen=True)
class NetSpec:
    blocks: tuple
    in_channels: int = 2
    emb_dim: int = 32

    def __post_init__(self):
        if self.emb_dim < 2 or self.emb_dim % 2 != 0:
            raise ConfigError("emb_dim must be an even number >= 2")
        self._validate_channels()

    def _validate_channels(self):
        c = self.in_channels
        stored: dict[str, int] = {}
        for i, b in enumerate(self.blocks):
            if b.kind == "conv":
                if b.c_in != c:
                    raise ConfigError(
                        f"block {i}: conv expects {b.c_in} channels, graph has {c}"
                    )
                c = b.c_out
            elif b.kind in ("norm", "tau"):
                if b.channels != c:
                    raise ConfigError(
                        f"block {i}: {b.kind} declared for {b.channels} channels, "
                        f"graph has {c}"
                    )
            elif b.kind == "store":
                if b.name in stored:
                    raise ConfigError(f"duplicate skip name {b.name!r}")
                stored[b.name] = c
            elif b.kind == "add":
                if b.name not in stored:
                    raise ConfigError(f"skip {b.name!r} added before being stored")
                c_skip = stored.pop(b.name)
                if b.proj_c_in:
                    if (b.proj_c_in, b.proj_c_out) != (c_skip, c):
                        raise ConfigError(
                            f"block {i}: skip projection {b.proj_c_in}->{b.proj_c_out} "
                            f"does not map {c_skip} to {c}"
                        )
                elif c_skip != c:
                    raise ConfigError(
                        f"block {i}: skip {b.name!r} has {c_skip} channels, graph has {c}"
                    )
            elif b.kind != "silu":
                raise ConfigError(f"unsupported block kind {b.kind!r}")
        if stored:
            raise ConfigError(f"stored skips never consumed: {sorted(stored)}")
        self.__dict__["out_channels"] = c

    @property
    def n_downs(self) -> int:
        return sum(
            1 for b in self.blocks if b.kind == "conv" and b.freq_stride == 2
        )

    @property
    def freq_multiple(self) -> int:
        return 2**self.n_downs

    @property
    def receptive_field(self) -> int:
        """Past frames that can influence the current output frame.

        Output frame t depends on input frames t-R .. t. Per-layer this is
        R_l - 1 = (k_t - 1) * d_t past frames, summed along the main chain.
        """
        return sum(
            (b.k_t - 1) * b.d_t for b in self.blocks if b.kind == "conv"
        )

    def param_shapes(self) -> dict[str, tuple]:
        """Expected weight-bundle tensor names and shapes, in order."""
        shapes: dict[str, tuple] = {}
        for i, b in enumerate(self.blocks):
            p = f"b{i:03d}"
            if b.kind == "conv":
                shapes[f"{p}.w"] = (b.c_out, b.c_in, b.k_t, b.k_f)
                shapes[f"{p}.bias"] = (b.c_out,)
            elif b.kind == "norm":
                for name in ("mean", "var", "gamma", "beta"):
                    shapes[f"{p}.{name}"] = (b.channels, b.freq_groups)
            elif b.kind == "tau":
                shapes[f"{p}.w"] = (2 * b.channels, self.emb_dim)
                shapes[f"{p}.bias"] = (2 * b.channels,)
            elif b.kind == "add" and b.proj_c_in:
                shapes[f"{p}.w"] = (b.proj_c_out, b.proj_c_in, 1, 1)
                shapes[f"{p}.bias"] = (b.proj_c_out,)
        return shapes

    def param_count(self) -> int:
        return sum(int(np.prod(s)) for s in self.param_shapes().values())


# ---------------------------------------------------------------------------
# Spec serialization (declarative key-value text with one block per line)


def netspec_to_text(spec: NetSpec) -> str:
    lines = [
        f"in_channels = {spec.in_channels}",
        f"emb_dim = {spec.emb_dim}",
    ]
    for b in spec.blocks:
        if b.kind == "conv":
            lines.append(
                "block = conv "
                f"c_in={b.c_in} c_out={b.c_out} k_t={b.k_t} k_f={b.k_f} "
                f"d_t={b.d_t} freq_stride={b.freq_stride} "
                f"transposed={int(b.transposed)} causal={int(b.causal)}"
            )
        elif b.kind == "norm":
            lines.append(
                f"block = norm channels={b.channels} freq_groups={b.freq_groups}"
            )
        elif b.kind == "tau":
            lines.append(f"block = tau channels={b.channels}")
        elif b.kind == "silu":
            lines.append("block = silu")
        elif b.kind == "store":
            lines.append(f"block = store name={b.name}")
        elif b.kind == "add":
            lines.append(
                f"block = add name={b.name} "
                f"proj_c_in={b.proj_c_in} proj_c_out={b.proj_c_out}"
            )
    return "\n".join(lines) + "\n"


def netspec_from_text(text: str) -> NetSpec:
    in_channels, emb_dim = 2, 32
    blocks = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"bad net-spec line: {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "in_channels":
            in_channels = int(value)
        elif key == "emb_dim":
            emb_dim = int(value)
        elif key == "block":
            parts = value.split()
            try:
                kind, kv = parts[0], dict(p.split("=", 1) for p in parts[1:])
            except ValueError as exc:
                raise ConfigError(f"bad block line: {raw!r}") from exc
            try:
                blocks.append(_block_from_kv(kind, kv))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"bad block line: {raw!r}") from exc
        else:
            raise ConfigError(f"unknown net-spec key {key!r}")
    return NetSpec(blocks=tuple(blocks), in_channels=in_channels, emb_dim=emb_dim)


def _block_from_kv(kind: str, kv: dict):
    if kind == "conv":
        return ConvSpec(
            c_in=int(kv["c_in"]),
            c_out=int(kv["c_out"]),
            k_t=int(kv.get("k_t", 3)),
            k_f=int(kv.get("k_f", 3)),
            d_t=int(kv.get("d_t", 1)),
            freq_stride=int(kv.get("freq_stride", 1)),
            transposed=bool(int(kv.get("transposed", 0))),
            causal=bool(int(kv.get("causal", 1))),
        )
    if kind == "norm":
        return NormSpec(int(kv["channels"]), int(kv.get("freq_groups", 4)))
    if kind == "tau":
        return TauAffineSpec(int(kv["channels"]))
    if kind == "silu":
        return SiluSpec()
    if kind == "store":
        return StoreSpec(kv["name"])
    if kind == "add":
        return AddSpec(
            kv["name"],
            int(kv.get("proj_c_in", 0)),
            int(kv.get("proj_c_out", 0)),
        )
    raise ConfigError(f"unknown block kind {kind!r}")


def netspec_hash(spec: NetSpec) -> str:
    return hashlib.sha256(netspec_to_text(spec).encode()).hexdigest()


# ---------------------------------------------------------------------------
# U-Net builder


def _resblock(blocks, skip_counter, c_in, c_out, k_t, k_f, d_t, freq_groups):
    name = f"res{next(skip_counter)}"
    blocks.append(StoreSpec(name))
    blocks.append(NormSpec(c_in, freq_groups))
    blocks.append(SiluSpec())
    blocks.append(ConvSpec(c_in, c_out, k_t, k_f, d_t))
    blocks.append(TauAffineSpec(c_out))
    blocks.append(NormSpec(c_out, freq_groups))
    blocks.append(SiluSpec())
    blocks.append(ConvSpec(c_out, c_out, k_t, k_f, d_t))
    if c_in == c_out:
        blocks.append(AddSpec(name))
    else:
        blocks.append(AddSpec(name, proj_c_in=c_in, proj_c_out=c_out))


def toy_unet_spec(
    widths: tuple = (32, 64, 96),
    resblocks_per_level: int = 2,
    k_t: int = 3,
    k_f: int = 3,
    freq_groups: int = 4,
    emb_dim: int = 32,
    dilations: tuple | None = None,
    in_channels: int = 2,
) -> NetSpec:
    """U-Net over frames: per-level resblocks, frequency-only down/up
    sampling, time dilation doubling per level, additive skip fusion."""
    levels = len(widths)
    if dilations is None:
        dilations = tuple(2**i for i in range(levels))
    if len(dilations) != levels:
        raise ConfigError("need one time dilation per level")

    counter = iter(range(10_000))
    blocks: list = [ConvSpec(in_channels, widths[0], k_t, k_f, 1)]
    # Down path.
    for lvl in range(levels - 1):
        for _ in range(resblocks_per_level):
            _resblock(blocks, counter, widths[lvl], widths[lvl], k_t, k_f,
                      dilations[lvl], freq_groups)
        blocks.append(StoreSpec(f"lvl{lvl}"))
        blocks.append(ConvSpec(widths[lvl], widths[lvl + 1], 1, k_f, 1, freq_stride=2))
    # Bottleneck level.
    for _ in range(resblocks_per_level):
        _resblock(blocks, counter, widths[-1], widths[-1], k_t, k_f,
                  dilations[-1], freq_groups)
    # Up path.
    for lvl in range(levels - 2, -1, -1):
        blocks.append(ConvSpec(widths[lvl + 1], widths[lvl], 1, k_f, 1, transposed=True))
        blocks.append(AddSpec(f"lvl{lvl}"))
        for _ in range(resblocks_per_level):
            _resblock(blocks, counter, widths[lvl], widths[lvl], k_t, k_f,
                      dilations[lvl], freq_groups)
    blocks.append(ConvSpec(widths[0], in_channels, k_t, k_f, 1))
    return NetSpec(blocks=tuple(blocks), in_channels=in_channels, emb_dim=emb_dim)


# ---------------------------------------------------------------------------
# Weights


def random_weights(spec: NetSpec, seed: int = 0, zero_bias: bool = False) -> dict:
    """Random float32 weights for the spec, fan-in scaled.

    With ``zero_bias`` every additive term (conv biases, norm shifts, the
    shift half of the tau affine) is zeroed so the network maps zero to
    zero exactly.
    """
    rng = np.random.default_rng(seed)
    tau_weight_names = {
        f"b{i:03d}.w" for i, b in enumerate(spec.blocks) if b.kind == "tau"
    }
    weights = {}
    for name, shape in spec.param_shapes().items():
        leaf = name.split(".")[-1]
        if leaf == "bias":
            w = np.zeros(shape) if zero_bias else 0.01 * rng.standard_normal(shape)
        elif leaf == "mean":
            w = np.zeros(shape)
        elif leaf == "var":
            w = np.ones(shape)
        elif leaf == "gamma":
            w = 1.0 + 0.1 * rng.standard_normal(shape)
        elif leaf == "beta":
            w = np.zeros(shape) if zero_bias else 0.05 * rng.standard_normal(shape)
        else:  # conv / linear weight
            fan_in = int(np.prod(shape[1:]))
            w = rng.standard_normal(shape) / math.sqrt(fan_in)
            if zero_bias and name in tau_weight_names:
                w[shape[0] // 2 :] = 0.0  # shift half acts as a bias
        weights[name] = w.astype(np.float32)
    return weights


def zero_weights(spec: NetSpec) -> dict:
    weights = {}
    for name, shape in spec.param_shapes().items():
        leaf = name.split(".")[-1]
        if leaf == "var":
            w = np.ones(shape)
        else:
            w = np.zeros(shape)
        weights[name] = w.astype(np.float32)
    return weights


# ---------------------------------------------------------------------------
# Execution


def _tau_embedding(tau: float, dim: int) -> np.ndarray:
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    ang = 1000.0 * tau * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)]).astype(np.float32)


def _silu(x: np.ndarray) -> np.ndarray:
    return (x * expit(x)).astype(np.float32)


def _freq_group_slices(n_freq: int, groups: int) -> list[slice]:
    size = n_freq // groups
    slices = []
    start = 0
    for g in range(groups):
        stop = start + size if g < groups - 1 else n_freq
        slices.append(slice(start, stop))
        start = stop
    return slices


def _conv_offline(b: ConvSpec, w, bias, x):
    """x: (c_in, F, T) float32 -> (c_out, F_out, T)."""
    _, n_freq, n_time = x.shape
    pf = b.k_f // 2
    if b.transposed:
        stuffed = np.zeros((x.shape[0], 2 * n_freq, n_time), dtype=np.float32)
        stuffed[:, ::2] = x
        x = stuffed
        n_freq *= 2
    pad_total = (b.k_t - 1) * b.d_t
    if b.causal:
        pad_front, pad_back = pad_total, 0
    else:
        pad_front = (pad_total // 2 // b.d_t) * b.d_t
        pad_back = pad_total - pad_front
    xp = np.pad(x, ((0, 0), (pf, pf), (pad_front, pad_back))).astype(np.float32)
    f_out = (n_freq + 2 * pf - b.k_f) // b.freq_stride + 1
    out = np.zeros((b.c_out, f_out, n_time), dtype=np.float32)
    for it in range(b.k_t):
        for jf in range(b.k_f):
            sl = xp[
                :,
                jf : jf + b.freq_stride * (f_out - 1) + 1 : b.freq_stride,
                it * b.d_t : it * b.d_t + n_time,
            ]
            out += np.tensordot(w[:, :, it, jf], sl, axes=([1], [0]))
    out += bias[:, None, None]
    return out


def _conv_step(b: ConvSpec, w, bias, frame, cache):
    """frame: (c_in, F); cache: (c_in, F, R-1). Returns (out, new_cache)."""
    if b.cache_len:
        window = np.concatenate([cache, frame[:, :, None]], axis=2)
    else:
        window = frame[:, :, None]
    n_freq = frame.shape[1]
    pf = b.k_f // 2
    r = window.shape[2]
    out = None
    for it in range(b.k_t):
        tap = window[:, :, (r - 1) - (b.k_t - 1 - it) * b.d_t]
        if b.transposed:
            stuffed = np.zeros((tap.shape[0], 2 * n_freq), dtype=np.float32)
            stuffed[:, ::2] = tap
            tap = stuffed
        tp = np.pad(tap, ((0, 0), (pf, pf)))
        f_in = tp.shape[1] - 2 * pf
        f_out = (f_in + 2 * pf - b.k_f) // b.freq_stride + 1
        if out is None:
            out = np.zeros((b.c_out, f_out), dtype=np.float32)
        for jf in range(b.k_f):
            out += w[:, :, it, jf] @ tp[
                :, jf : jf + b.freq_stride * (f_out - 1) + 1 : b.freq_stride
            ].astype(np.float32)
    out += bias[:, None]
    new_cache = window[:, :, 1:] if b.cache_len else cache
    return out, new_cache


def _norm_apply(b: NormSpec, params, x, time_axis: bool):
    """x: (c, F, T) offline or (c, F) per-frame."""
    n_freq = x.shape[1]
    out = np.empty_like(x)
    for g, sl in enumerate(_freq_group_slices(n_freq, b.freq_groups)):
        mean = params["mean"][:, g]
        var = params["var"][:, g]
        gamma = params["gamma"][:, g]
        beta = params["beta"][:, g]
        shape = (-1, 1, 1) if time_axis else (-1, 1)
        scale = (gamma / np.sqrt(var + _NORM_EPS)).reshape(shape).astype(np.float32)
        shift = (beta - mean * gamma / np.sqrt(var + _NORM_EPS)).reshape(shape)
        out[:, sl] = x[:, sl] * scale + shift.astype(np.float32)
    return out


class NetState:
    """Per-stream rolling caches, one per time convolution (R_l > 1)."""

    def __init__(self, net: "CausalNet"):
        self.net_id = id(net)
        self.caches: dict[int, np.ndarray] = {
            i: np.zeros(shape, dtype=np.float32)
            for i, shape in net._cache_shapes.items()
        }
        self.frame_count = 0

    def cache_shapes(self) -> dict[int, tuple]:
        return {i: c.shape for i, c in self.caches.items()}


class CausalNet:
    """Immutable frame-causal network with offline and streaming modes."""

    def __init__(self, spec: NetSpec, weights: dict, n_freq_bins: int):
        self.spec = spec
        self.n_freq_bins = n_freq_bins
        mult = spec.freq_multiple
        self._padded_bins = ((n_freq_bins + mult - 1) // mult) * mult
        self._check_weights(weights)
        self._w = {k: np.asarray(v, dtype=np.float32) for k, v in weights.items()}
        self._cache_shapes = self._compute_cache_shapes()

    def _check_weights(self, weights: dict):
        expected = self.spec.param_shapes()
        extra = set(weights) - set(expected)
        missing = set(expected) - set(weights)
        if extra:
            raise SpecMismatchError(f"orphan tensors not in spec: {sorted(extra)}")
        if missing:
            raise SpecMismatchError(f"tensors missing from bundle: {sorted(missing)}")
        for name, shape in expected.items():
            got = tuple(np.asarray(weights[name]).shape)
            if got != shape:
                raise SpecMismatchError(
                    f"tensor {name}: bundle shape {got}, spec expects {shape}"
                )

    def _compute_cache_shapes(self) -> dict[int, tuple]:
        shapes = {}
        f = self._padded_bins
        for i, b in enumerate(self.spec.blocks):
            if b.kind == "conv":
                if b.cache_len:
                    shapes[i] = (b.c_in, f, b.cache_len)
                if b.transposed:
                    f *= 2
                elif b.freq_stride == 2:
                    f = (f + 2 * (b.k_f // 2) - b.k_f) // 2 + 1
        return shapes

    @property
    def receptive_field(self) -> int:
        return self.spec.receptive_field

    @property
    def param_count(self) -> int:
        return self.spec.param_count()

    def new_state(self) -> NetState:
        return NetState(self)

    # -- frame <-> channel encoding ------------------------------------

    def _encode(self, frames: np.ndarray) -> np.ndarray:
        """(T, F) complex -> (2, F_pad, T) float32."""
        frames = np.asarray(frames)
        if not np.all(np.isfinite(frames)):
            raise InputError("non-finite values in network input")
        x = np.stack([frames.real, frames.imag]).astype(np.float32)  # (2, T, F)
        x = np.transpose(x, (0, 2, 1))  # (2, F, T)
        pad = self._padded_bins - self.n_freq_bins
        if pad:
            x = np.pad(x, ((0, 0), (0, pad), (0, 0)))
        return x

    def _decode(self, x: np.ndarray) -> np.ndarray:
        """(2, F_pad, T) -> (T, F) complex64."""
        x = x[:, : self.n_freq_bins]
        return np.transpose(x[0] + 1j * x[1]).astype(np.complex64)

    # -- execution ------------------------------------------------------

    def _block_params(self, i: int) -> dict:
        p = f"b{i:03d}"
        return {
            k[len(p) + 1 :]: v for k, v in self._w.items() if k.startswith(p + ".")
        }

    def forward_offline(self, frames: np.ndarray, tau: float) -> np.ndarray:
        """frames: (T, n_freq_bins) complex -> same shape (velocity field)."""
        x = self._encode(frames)
        emb = _tau_embedding(tau, self.spec.emb_dim)
        stored: dict[str, np.ndarray] = {}
        for i, b in enumerate(self.spec.blocks):
            if b.kind == "conv":
                p = self._block_params(i)
                x = _conv_offline(b, p["w"], p["bias"], x)
            elif b.kind == "norm":
                x = _norm_apply(b, self._block_params(i), x, time_axis=True)
            elif b.kind == "silu":
                x = _silu(x)
            elif b.kind == "tau":
                p = self._block_params(i)
                scale_shift = p["w"] @ emb + p["bias"]
                c = b.channels
                x = x * (1.0 + scale_shift[:c, None, None]) + scale_shift[c:, None, None]
                x = x.astype(np.float32)
            elif b.kind == "store":
                stored[b.name] = x
            elif b.kind == "add":
                skip = stored.pop(b.name)
                if b.proj_c_in:
                    p = self._block_params(i)
                    skip = np.tensordot(p["w"][:, :, 0, 0], skip, axes=([1], [0]))
                    skip += p["bias"][:, None, None]
                x = (x + skip).astype(np.float32)
        return self._decode(x)

    def forward_step(self, state: NetState, frame: np.ndarray, tau: float) -> np.ndarray:
        """frame: (n_freq_bins,) complex -> (n_freq_bins,) complex64."""
        if state.net_id != id(self):
            raise InputError("NetState belongs to a different network")
        x = self._encode(np.asarray(frame)[None, :])[:, :, 0]  # (2, F_pad)
        emb = _tau_embedding(tau, self.spec.emb_dim)
        stored: dict[str, np.ndarray] = {}
        for i, b in enumerate(self.spec.blocks):
            if b.kind == "conv":
                p = self._block_params(i)
                cache = state.caches.get(i)
                x, new_cache = _conv_step(b, p["w"], p["bias"], x, cache)
                if b.cache_len:
                    state.caches[i] = new_cache
            elif b.kind == "norm":
                x = _norm_apply(b, self._block_params(i), x, time_axis=False)
            elif b.kind == "silu":
                x = _silu(x)
            elif b.kind == "tau":
                p = self._block_params(i)
                scale_shift = p["w"] @ emb + p["bias"]
                c = b.channels
                x = (x * (1.0 + scale_shift[:c, None]) + scale_shift[c:, None]).astype(
                    np.float32
                )
            elif b.kind == "store":
                stored[b.name] = x
            elif b.kind == "add":
                skip = stored.pop(b.name)
                if b.proj_c_in:
                    p = self._block_params(i)
                    skip = p["w"][:, :, 0, 0] @ skip + p["bias"][:, None]
                x = (x + skip).astype(np.float32)
        state.frame_count += 1
        return self._decode(x[:, :, None])[0]


def build_net(spec: NetSpec, weights: dict, n_freq_bins: int = 257) -> CausalNet:
    return CausalNet(spec, weights, n_freq_bins)
