"""melstream: streaming mel-spectrogram inversion at fixed 48 ms latency.

Core pieces: STFT analysis/overlap-add synthesis with magnitude
compression (dsp), mel filterbank pseudoinverse corruption (mel), a
frame-causal cached convolutional U-Net (net), multi-step flow-matching
inference with per-call cache banks (flow), an RTISI difference-map
phase-retrieval baseline (rtisi), intrusive metrics, and binary formats
for spectrograms (MFSPEC1) and weights (MFWB1).
"""

from .dsp import (
    LatencyReport,
    StftConfig,
    StreamSynthesizer,
    analyze_frame,
    analyze_signal,
    compress_magnitudes,
    decompress_magnitudes,
    latency_report,
    synthesize_frames,
)
from .flow import (
    FlowConfig,
    StreamSession,
    effective_receptive_field,
    frame_noise,
    new_session,
    sample_offline,
)
from .mel import MelConfig, MelOperator, build_mel_operator
from .net import (
    CausalNet,
    NetSpec,
    NetState,
    build_net,
    netspec_from_text,
    netspec_hash,
    netspec_to_text,
    random_weights,
    toy_unet_spec,
    zero_weights,
)
from .bundle import WeightBundle, bundle_from_weights, load_bundle, save_bundle
from .fileio import (
    DOMAIN_COMPLEX,
    DOMAIN_MEL,
    read_spectrogram,
    read_wav,
    write_spectrogram,
    write_wav,
)
from .metrics import MetricReport, lsd, mcd, metric_report, si_sdr
from .rtisi import DmConfig, RtisiState, dm_iterate, rtisi_dm_frame

__version__ = "0.1.0"
