"""Forward passes of the multi-teacher Aggregation Module and the student Densify Module.

Parameter names are dotted paths into a :class:`Params` mapping; the ``init_*``
functions build a complete, seeded parameter set for each block.

Aggregation, per teacher ``i`` (independent parameters)::

    768 -conv1x1-BN-ReLU-> 256 -+-conv1x1->768-LN-GELU-conv1x1->768-LN-GELU-conv1x1->256-+-> (+)
                                 '-------------------- residual -------------------------'
    -conv1x1-BN-ReLU-> 128

then ``concat(3 x 128) -> CBAM -> conv1x1 -> fused_channels``.

Densify: two encoder-decoder passes (strided-conv downsampling + ConvNeXt
residual blocks, transposed-conv upsampling), a residual merge with the
sparse input through separate 1x1 fusion layers, and a conv head.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DimensionError
from . import params as P
from .primitives import (
    as_chw,
    batch_norm_inference,
    channel_avg_pool,
    channel_max_pool,
    conv2d,
    conv_transpose2d,
    gelu,
    global_avg_pool,
    global_max_pool,
    layer_norm,
    relu,
    sigmoid,
)

N_TEACHERS = 3
CBAM_REDUCTION = 8


def _conv(x, p, name, **kw):
    return conv2d(x, p[f"{name}.weight"], p.get(f"{name}.bias"), **kw)


def _bn(x, p, name):
    return batch_norm_inference(
        x, p[f"{name}.running_mean"], p[f"{name}.running_var"],
        p[f"{name}.weight"], p[f"{name}.bias"],
    )


def _ln(x, p, name):
    return layer_norm(x, p[f"{name}.weight"], p[f"{name}.bias"])


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# -- representation alignment -------------------------------------------------

def init_alignment_params(seed, in_channels=768, hidden=256, expand=768, out_channels=128):
    rng = _rng(seed)
    p = P.Params()
    P.add_conv(p, "reduce", rng, in_channels, hidden)
    P.add_batch_norm(p, "reduce_bn", rng, hidden)
    P.add_conv(p, "cnx.expand", rng, hidden, expand)
    P.add_layer_norm(p, "cnx.ln1", rng, expand)
    P.add_conv(p, "cnx.mix", rng, expand, expand)
    P.add_layer_norm(p, "cnx.ln2", rng, expand)
    P.add_conv(p, "cnx.project", rng, expand, hidden)
    P.add_conv(p, "project", rng, hidden, out_channels)
    P.add_batch_norm(p, "project_bn", rng, out_channels)
    return p


def alignment_block_forward(f, p):
    f = as_chw(f, "teacher feature")
    expected = p["reduce.weight"].shape[1]
    if f.shape[0] != expected:
        raise DimensionError(f"alignment block expects {expected} channels, got {f.shape[0]}")
    x = relu(_bn(_conv(f, p, "reduce"), p, "reduce_bn"))
    y = gelu(_ln(_conv(x, p, "cnx.expand"), p, "cnx.ln1"))
    y = gelu(_ln(_conv(y, p, "cnx.mix"), p, "cnx.ln2"))
    x = x + _conv(y, p, "cnx.project")
    return relu(_bn(_conv(x, p, "project"), p, "project_bn"))


# -- CBAM -------------------------------------------------------------------

def init_cbam_params(seed, channels, reduction=CBAM_REDUCTION, kernel=7):
    if channels % reduction:
        raise ConfigError(f"CBAM channels {channels} not divisible by reduction {reduction}")
    rng = _rng(seed)
    p = P.Params()
    P.add_linear(p, "mlp.fc1", rng, channels, channels // reduction)
    P.add_linear(p, "mlp.fc2", rng, channels // reduction, channels)
    P.add_conv(p, "spatial", rng, 2, 1, k=kernel)
    return p


def _mlp(v, p):
    h = relu(p["mlp.fc1.weight"] @ v + p["mlp.fc1.bias"])
    return p["mlp.fc2.weight"] @ h + p["mlp.fc2.bias"]


def cbam_gates(f, p):
    """Channel gate ``(C,)`` and spatial gate ``(1, H, W)``, plus the gated output."""
    f = as_chw(f)
    c = f.shape[0]
    if c % CBAM_REDUCTION:
        raise ConfigError(f"CBAM channels {c} not divisible by reduction {CBAM_REDUCTION}")
    if p["mlp.fc1.weight"].shape[1] != c:
        raise DimensionError(f"CBAM parameters expect {p['mlp.fc1.weight'].shape[1]} channels, got {c}")
    channel_gate = sigmoid(_mlp(global_avg_pool(f), p) + _mlp(global_max_pool(f), p))
    x = f * channel_gate[:, None, None]
    pooled = np.concatenate([channel_avg_pool(x), channel_max_pool(x)])
    k = p["spatial.weight"].shape[-1]
    # replicate padding: a spatially uniform map yields a uniform gate, borders included
    spatial_gate = sigmoid(_conv(pooled, p, "spatial", padding=k // 2, padding_mode="replicate"))
    return channel_gate, spatial_gate, x * spatial_gate


def cbam_forward(f, p):
    return cbam_gates(f, p)[2]


# -- aggregation ------------------------------------------------------------

def init_aggregation_params(seed, n_teachers=N_TEACHERS, in_channels=768, fused_channels=128):
    """Independent alignment blocks per teacher, CBAM over the concat, 1x1 fuse."""
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = seq.spawn(n_teachers + 2)
    p = P.Params()
    for i in range(n_teachers):
        p.merge(f"teacher{i}", init_alignment_params(np.random.default_rng(children[i]), in_channels))
    width = n_teachers * p["teacher0.project.weight"].shape[0]
    p.merge("cbam", init_cbam_params(np.random.default_rng(children[-2]), width))
    fuse = P.Params()
    P.add_conv(fuse, "fuse", np.random.default_rng(children[-1]), width, fused_channels)
    p.update(fuse)
    return p


def aggregate(teachers, p):
    teachers = [as_chw(t, f"teacher {i}") for i, t in enumerate(teachers)]
    n = sum(1 for k in p if k.startswith("teacher") and k.endswith(".reduce.weight"))
    if len(teachers) != n:
        raise DimensionError(f"expected {n} teacher features, got {len(teachers)}")
    spatial = {t.shape[1:] for t in teachers}
    if len(spatial) != 1:
        raise DimensionError(f"teacher spatial dims differ: {sorted(spatial)}")
    aligned = [alignment_block_forward(t, p.sub(f"teacher{i}")) for i, t in enumerate(teachers)]
    fused = cbam_forward(np.concatenate(aligned), p.sub("cbam"))
    return _conv(fused, p, "fuse")


# -- densify ----------------------------------------------------------------

@dataclass(frozen=True)
class DensifyConfig:
    in_channels: int = 768
    stage_widths: tuple = (128, 256)
    expansion: int = 4
    fusion_width: int = 256
    out_channels: int = 128

    @property
    def downsample(self):
        return 2 ** len(self.stage_widths)


def _init_encdec(rng, cfg: DensifyConfig):
    p = P.Params()
    prev = cfg.in_channels
    for k, w in enumerate(cfg.stage_widths):
        P.add_conv(p, f"enc{k}.down", rng, prev, w, k=2)
        P.add_layer_norm(p, f"enc{k}.down_ln", rng, w)
        P.add_conv(p, f"enc{k}.block.dw", rng, w, w, k=7, groups=w)
        P.add_layer_norm(p, f"enc{k}.block.ln", rng, w)
        P.add_conv(p, f"enc{k}.block.pw1", rng, w, cfg.expansion * w)
        P.add_conv(p, f"enc{k}.block.pw2", rng, cfg.expansion * w, w)
        prev = w
    outs = (cfg.in_channels,) + tuple(cfg.stage_widths[:-1])
    for k in reversed(range(len(cfg.stage_widths))):
        P.add_conv_transpose(p, f"dec{k}.up", rng, cfg.stage_widths[k], outs[k])
        P.add_batch_norm(p, f"dec{k}.bn", rng, outs[k])
    return p


def init_densify_params(seed, cfg: DensifyConfig = DensifyConfig()):
    if not cfg.stage_widths:
        raise ConfigError("densify needs at least one encoder stage")
    rng = _rng(seed)
    p = P.Params()
    p.merge("pass1", _init_encdec(rng, cfg))
    p.merge("pass2", _init_encdec(rng, cfg))
    P.add_conv(p, "fuse_dense", rng, cfg.in_channels, cfg.fusion_width)
    P.add_batch_norm(p, "fuse_dense_bn", rng, cfg.fusion_width)
    P.add_conv(p, "fuse_sparse", rng, cfg.in_channels, cfg.fusion_width)
    P.add_batch_norm(p, "fuse_sparse_bn", rng, cfg.fusion_width)
    P.add_conv(p, "head.conv1", rng, cfg.fusion_width, cfg.fusion_width, k=3)
    P.add_batch_norm(p, "head.bn1", rng, cfg.fusion_width)
    P.add_conv(p, "head.conv2", rng, cfg.fusion_width, cfg.out_channels)
    return p


def _convnext_block(x, p, name):
    c = x.shape[0]
    y = _conv(x, p, f"{name}.dw", padding=3, groups=c)
    y = _ln(y, p, f"{name}.ln")
    y = gelu(_conv(y, p, f"{name}.pw1"))
    return x + _conv(y, p, f"{name}.pw2")


def encoder_decoder_forward(x, p):
    depth = sum(1 for k in p if k.endswith(".down.weight"))
    for k in range(depth):
        x = _ln(_conv(x, p, f"enc{k}.down", stride=2), p, f"enc{k}.down_ln")
        x = _convnext_block(x, p, f"enc{k}.block")
    for k in reversed(range(depth)):
        x = conv_transpose2d(x, p[f"dec{k}.up.weight"], p[f"dec{k}.up.bias"], stride=2)
        x = relu(_bn(x, p, f"dec{k}.bn"))
    return x


def densify_forward(f_sparse, p):
    f = as_chw(f_sparse, "student feature")
    expected = p["fuse_sparse.weight"].shape[1]
    if f.shape[0] != expected:
        raise DimensionError(f"densify expects {expected} channels, got {f.shape[0]}")
    factor = 2 ** sum(1 for k in p if k.startswith("pass1.") and k.endswith(".down.weight"))
    if f.shape[1] % factor or f.shape[2] % factor:
        raise ConfigError(
            f"spatial dims {f.shape[1:]} not divisible by encoder downsampling {factor}"
        )
    dense = encoder_decoder_forward(f, p.sub("pass1"))
    dense = encoder_decoder_forward(dense, p.sub("pass2"))
    fused = (
        relu(_bn(_conv(dense, p, "fuse_dense"), p, "fuse_dense_bn"))
        + relu(_bn(_conv(f, p, "fuse_sparse"), p, "fuse_sparse_bn"))
    )
    x = relu(_bn(_conv(fused, p, "head.conv1", padding=1), p, "head.bn1"))
    return _conv(x, p, "head.conv2")
