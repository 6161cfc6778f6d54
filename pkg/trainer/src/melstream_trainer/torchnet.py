"""Torch mirror of the engine's flat block IR.

Built from the same net-spec text the engine consumes, with parameters
held under the engine's tensor names ("b###.w", "b###.bias", ...).
Convolution kernels are stored in torch's (c_out, c_in, k_f, k_t)
layout in memory (input tensors are (batch, channel, freq, time)) and
permuted to/from the engine's (c_out, c_in, k_t, k_f) on import/export,
so a bundle round trip is bit-exact.

The sub-band grouped norm runs as a true batch norm during training
(per-channel statistics within each frequency group, running averages
tracked) and freezes to the engine's affine form at export.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from melstream.net import NetSpec

_NORM_EPS = 1e-5


def _key(name: str) -> str:
    # nn.ParameterDict forbids dots in keys.
    return name.replace(".", ":")


def tau_embedding(tau: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal embedding matching the engine: tau is (B,)."""
    half = dim // 2
    freqs = torch.exp(
        -np.log(10000.0) * torch.arange(half, dtype=torch.float32) / half
    ).to(tau.device)
    ang = 1000.0 * tau[:, None] * freqs[None, :]
    return torch.cat([torch.sin(ang), torch.cos(ang)], dim=1)


def _freq_group_slices(n_freq: int, groups: int) -> list[slice]:
    size = n_freq // groups
    out, start = [], 0
    for g in range(groups):
        stop = start + size if g < groups - 1 else n_freq
        out.append(slice(start, stop))
        start = stop
    return out


class BlockNet(nn.Module):
    """Executes the flat block list on (B, C, F, T) tensors."""

    def __init__(self, spec: NetSpec, n_freq_bins: int):
        super().__init__()
        self.spec = spec
        self.n_freq_bins = n_freq_bins
        mult = spec.freq_multiple
        self.padded_bins = ((n_freq_bins + mult - 1) // mult) * mult
        self.params = nn.ParameterDict()
        self._buffers_by_key: dict[str, str] = {}
        for name, shape in spec.param_shapes().items():
            leaf = name.split(".")[-1]
            if name.endswith(".w") and len(shape) == 4:
                shape = (shape[0], shape[1], shape[3], shape[2])  # torch: k_f, k_t
            if leaf in ("mean", "var"):
                # Running statistics, frozen at export, never a gradient leaf.
                init = torch.zeros(shape) if leaf == "mean" else torch.ones(shape)
                self.register_buffer(_key(name), init)
            else:
                self.params[_key(name)] = nn.Parameter(torch.zeros(shape))
        self.bn_momentum = 0.1

    # -- weight transport ------------------------------------------------

    def _tensor(self, name: str) -> torch.Tensor:
        k = _key(name)
        return self.params[k] if k in self.params else getattr(self, k)

    def import_weights(self, weights: dict):
        """Load an engine-layout weight dict (numpy float32 arrays)."""
        with torch.no_grad():
            for i, b in enumerate(self.spec.blocks):
                p = f"b{i:03d}"
                for name, arr in weights.items():
                    if not name.startswith(p + "."):
                        continue
                    t = torch.from_numpy(np.asarray(arr, dtype=np.float32))
                    if name.endswith(".w") and t.ndim == 4:
                        t = t.permute(0, 1, 3, 2).contiguous()  # k_t,k_f -> k_f,k_t
                    self._tensor(name).copy_(t)

    def export_weights(self) -> dict:
        """Engine-layout float32 numpy dict (conv kernels back to k_t, k_f)."""
        out = {}
        for name in self.spec.param_shapes():
            t = self._tensor(name).detach()
            if name.endswith(".w") and t.ndim == 4:
                t = t.permute(0, 1, 3, 2).contiguous()
            out[name] = t.cpu().numpy().astype(np.float32)
        return out

    # -- execution -------------------------------------------------------

    def _conv(self, b, w, bias, x):
        if b.transposed:
            stuffed = x.new_zeros(x.shape[0], x.shape[1], 2 * x.shape[2], x.shape[3])
            stuffed[:, :, ::2] = x
            x = stuffed
        pf = b.k_f // 2
        pad_total = (b.k_t - 1) * b.d_t
        if b.causal:
            front, back = pad_total, 0
        else:
            front = (pad_total // 2 // b.d_t) * b.d_t
            back = pad_total - front
        x = F.pad(x, (front, back, pf, pf))  # (time_left, time_right, f_lo, f_hi)
        return F.conv2d(x, w, bias, stride=(b.freq_stride, 1), dilation=(1, b.d_t))

    def _norm(self, i, b, x):
        mean_buf = self._tensor(f"b{i:03d}.mean")
        var_buf = self._tensor(f"b{i:03d}.var")
        gamma = self._tensor(f"b{i:03d}.gamma")
        beta = self._tensor(f"b{i:03d}.beta")
        pieces = []
        for g, sl in enumerate(_freq_group_slices(x.shape[2], b.freq_groups)):
            xg = x[:, :, sl, :]
            if self.training:
                mean = xg.mean(dim=(0, 2, 3))
                var = xg.var(dim=(0, 2, 3), unbiased=False)
                with torch.no_grad():
                    mean_buf[:, g].mul_(1 - self.bn_momentum).add_(
                        self.bn_momentum * mean
                    )
                    var_buf[:, g].mul_(1 - self.bn_momentum).add_(
                        self.bn_momentum * var
                    )
            else:
                mean, var = mean_buf[:, g], var_buf[:, g]
            scale = gamma[:, g] / torch.sqrt(var + _NORM_EPS)
            shift = beta[:, g] - mean * scale
            pieces.append(xg * scale[None, :, None, None] + shift[None, :, None, None])
        return torch.cat(pieces, dim=2)

    def forward(self, x: torch.Tensor, tau: torch.Tensor) -> torch.Tensor:
        """x: (B, in_channels, F_pad, T); tau: (B,) in [0, 1]."""
        emb = tau_embedding(tau, self.spec.emb_dim)
        stored: dict[str, torch.Tensor] = {}
        for i, b in enumerate(self.spec.blocks):
            p = f"b{i:03d}"
            if b.kind == "conv":
                x = self._conv(b, self._tensor(f"{p}.w"), self._tensor(f"{p}.bias"), x)
            elif b.kind == "norm":
                x = self._norm(i, b, x)
            elif b.kind == "silu":
                x = F.silu(x)
            elif b.kind == "tau":
                ss = emb @ self._tensor(f"{p}.w").T + self._tensor(f"{p}.bias")
                c = b.channels
                x = x * (1.0 + ss[:, :c, None, None]) + ss[:, c:, None, None]
            elif b.kind == "store":
                stored[b.name] = x
            elif b.kind == "add":
                skip = stored.pop(b.name)
                if b.proj_c_in:
                    skip = F.conv2d(
                        skip, self._tensor(f"{p}.w"), self._tensor(f"{p}.bias")
                    )
                x = x + skip
        return x

    # -- frame <-> tensor transport (matches the engine encoding) --------

    def encode_frames(self, frames: np.ndarray) -> torch.Tensor:
        """(B, T, F) complex -> (B, 2, F_pad, T) float32."""
        frames = np.asarray(frames)
        x = np.stack([frames.real, frames.imag], axis=1).astype(np.float32)
        x = np.transpose(x, (0, 1, 3, 2))  # (B, 2, F, T)
        pad = self.padded_bins - self.n_freq_bins
        if pad:
            x = np.pad(x, ((0, 0), (0, 0), (0, pad), (0, 0)))
        return torch.from_numpy(x)

    def decode_frames(self, x: torch.Tensor) -> np.ndarray:
        """(B, 2, F_pad, T) -> (B, T, F) complex64."""
        y = x[:, :, : self.n_freq_bins].detach().cpu().numpy()
        return np.transpose(y[:, 0] + 1j * y[:, 1], (0, 2, 1)).astype(np.complex64)


def build_torch_net(spec: NetSpec, n_freq_bins: int = 257) -> BlockNet:
    return BlockNet(spec, n_freq_bins)
