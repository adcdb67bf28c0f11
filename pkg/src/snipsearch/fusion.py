"""Forward-only reference of the multimodal attention fusion.

Six padded token sequences (visual, textual, spatial, for query and
target) are fused through seven symmetric-attention blocks. A symmetric
attention of sequences A and B projects both onto the attention width,
runs multi-head attention twice with the roles of query and key/value
exchanged, and concatenates the two outputs along the feature axis. Three
same-modality blocks and a two-stage cross-modality chain produce five
sequences whose feature-axis concatenation is the fusion volume; a linear
projection reshapes each row into a square plane, and four independent
1x1 convolutions with LeakyReLU produce the pyramid feature stacks.

Everything here is a deterministic numpy forward pass with pluggable
embeddings; no training, no pretrained backbones. Key-padding masks are
applied by default so padded rows cannot influence valid outputs; the
unmasked variant is available behind a flag.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ShapeMismatch, TooLong
from .layout import Element


@dataclass(frozen=True)
class FusionConfig:
    seq_len: int
    d_vis: int
    d_txt: int
    d_spa: int
    d_attn: int
    n_heads: int
    proj_dim: int
    grid_h: int
    grid_w: int
    pyramid_channels: tuple[int, int, int, int]
    leaky_slope: float = 0.1
    dtype: str = "float64"

    def __post_init__(self):
        if self.d_attn % self.n_heads != 0:
            raise ShapeMismatch(
                f"d_attn {self.d_attn} not divisible by n_heads {self.n_heads}"
            )
        if self.proj_dim != self.grid_h * self.grid_w:
            raise ShapeMismatch(
                f"proj_dim {self.proj_dim} != grid {self.grid_h}x{self.grid_w}"
            )

    @property
    def d_out(self) -> int:
        """Per-branch output width: two attention halves concatenated."""
        return 2 * self.d_attn

    @property
    def fused_width(self) -> int:
        """Five fused branches concatenated along the feature axis."""
        return 5 * self.d_out

    @classmethod
    def full_scale(cls, dtype: str = "float32") -> "FusionConfig":
        return cls(
            seq_len=1024, d_vis=1024, d_txt=768, d_spa=1024,
            d_attn=512, n_heads=4, proj_dim=4096, grid_h=64, grid_w=64,
            pyramid_channels=(256, 512, 1024, 2048), leaky_slope=0.1, dtype=dtype,
        )

    @classmethod
    def tiny(cls) -> "FusionConfig":
        return cls(
            seq_len=8, d_vis=6, d_txt=5, d_spa=6,
            d_attn=4, n_heads=2, proj_dim=16, grid_h=4, grid_w=4,
            pyramid_channels=(3, 5, 7, 9), leaky_slope=0.1,
        )


@dataclass(frozen=True)
class TokenSeq:
    """A fixed-length token matrix plus the count of non-pad rows.

    Sequences built with pad_sequence have exact zeros in the pad rows;
    attention intermediates reuse the type but only promise a meaningful
    valid_len.
    """

    tokens: np.ndarray
    valid_len: int

    def __post_init__(self):
        if self.tokens.ndim != 2:
            raise ShapeMismatch(f"token matrix must be 2-D, got {self.tokens.shape}")
        if not (0 <= self.valid_len <= self.tokens.shape[0]):
            raise ShapeMismatch(
                f"valid_len {self.valid_len} outside 0..{self.tokens.shape[0]}"
            )
        if not np.all(np.isfinite(self.tokens)):
            raise ShapeMismatch("token matrix contains non-finite entries")


def pad_sequence(raw_tokens: np.ndarray, seq_len: int) -> TokenSeq:
    """Zero-pad an n x d token matrix to seq_len rows."""
    raw = np.asarray(raw_tokens)
    if raw.dtype.kind != "f":
        raw = raw.astype(np.float64)
    if raw.ndim != 2:
        raise ShapeMismatch(f"raw tokens must be 2-D, got shape {raw.shape}")
    n, d = raw.shape
    if n > seq_len:
        raise TooLong(f"{n} tokens exceed the sequence length {seq_len}")
    out = np.zeros((seq_len, d), dtype=raw.dtype)
    out[:n] = raw
    return TokenSeq(out, n)


def _item_key(item: Union[str, Element]) -> str:
    if isinstance(item, Element):
        b = item.bbox
        return f"elem|{item.kind.name}|{b.x0},{b.y0},{b.x1},{b.y1}|{item.text or ''}"
    return f"text|{item}"


def stub_embed(items: Sequence[Union[str, Element]], d: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit-norm embeddings derived from content hashes.

    Stands in for pretrained encoders: the same item and seed always embed
    to the same vector, and distinct content almost surely differs.
    """
    out = np.empty((len(items), d), dtype=np.float64)
    for i, item in enumerate(items):
        digest = hashlib.sha256(f"{seed}|{_item_key(item)}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        v = rng.standard_normal(d)
        out[i] = v / np.linalg.norm(v)
    return out


@dataclass(frozen=True)
class MhaWeights:
    """One attention block: input projections, Q/K/V maps, output map."""

    w_q_in: np.ndarray
    b_q_in: np.ndarray
    w_kv_in: np.ndarray
    b_kv_in: np.ndarray
    w_q: np.ndarray
    b_q: np.ndarray
    w_k: np.ndarray
    b_k: np.ndarray
    w_v: np.ndarray
    b_v: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray


@dataclass(frozen=True)
class SymAttnWeights:
    ab: MhaWeights
    ba: MhaWeights


@dataclass(frozen=True)
class FuseWeights:
    vv: SymAttnWeights
    tt: SymAttnWeights
    ss: SymAttnWeights
    sq_vt: SymAttnWeights
    sq_vt_tt: SymAttnWeights
    st_vq: SymAttnWeights
    st_vq_tq: SymAttnWeights
    proj_w: np.ndarray
    proj_b: np.ndarray
    pyramid: tuple[tuple[np.ndarray, np.ndarray], ...]


def _init_mha(rng: np.random.Generator, d_q: int, d_kv: int, d_attn: int, dtype) -> MhaWeights:
    def mat(rows, cols):
        return rng.uniform(-0.1, 0.1, size=(rows, cols)).astype(dtype)

    def vec(cols):
        return rng.uniform(-0.1, 0.1, size=cols).astype(dtype)

    return MhaWeights(
        w_q_in=mat(d_q, d_attn), b_q_in=vec(d_attn),
        w_kv_in=mat(d_kv, d_attn), b_kv_in=vec(d_attn),
        w_q=mat(d_attn, d_attn), b_q=vec(d_attn),
        w_k=mat(d_attn, d_attn), b_k=vec(d_attn),
        w_v=mat(d_attn, d_attn), b_v=vec(d_attn),
        w_out=mat(d_attn, d_attn), b_out=vec(d_attn),
    )


def _init_sym(rng, d_a: int, d_b: int, d_attn: int, dtype) -> SymAttnWeights:
    return SymAttnWeights(
        ab=_init_mha(rng, d_a, d_b, d_attn, dtype),
        ba=_init_mha(rng, d_b, d_a, d_attn, dtype),
    )


def init_fuse_weights(config: FusionConfig, seed: int = 0) -> FuseWeights:
    """Seeded uniform [-0.1, 0.1] weights for the full fusion stack."""
    rng = np.random.default_rng(seed)
    dtype = np.dtype(config.dtype)
    da = config.d_attn
    d_out = config.d_out
    pyramid = tuple(
        (
            rng.uniform(-0.1, 0.1, size=(ch, config.seq_len)).astype(dtype),
            rng.uniform(-0.1, 0.1, size=ch).astype(dtype),
        )
        for ch in config.pyramid_channels
    )
    return FuseWeights(
        vv=_init_sym(rng, config.d_vis, config.d_vis, da, dtype),
        tt=_init_sym(rng, config.d_txt, config.d_txt, da, dtype),
        ss=_init_sym(rng, config.d_spa, config.d_spa, da, dtype),
        sq_vt=_init_sym(rng, config.d_spa, config.d_vis, da, dtype),
        sq_vt_tt=_init_sym(rng, d_out, config.d_txt, da, dtype),
        st_vq=_init_sym(rng, config.d_spa, config.d_vis, da, dtype),
        st_vq_tq=_init_sym(rng, d_out, config.d_txt, da, dtype),
        proj_w=rng.uniform(-0.1, 0.1, size=(config.fused_width, config.proj_dim)).astype(dtype),
        proj_b=rng.uniform(-0.1, 0.1, size=config.proj_dim).astype(dtype),
        pyramid=pyramid,
    )


def attention_probabilities(
    q: TokenSeq,
    kv: TokenSeq,
    weights: MhaWeights,
    n_heads: int,
    use_key_mask: bool = True,
) -> np.ndarray:
    """Softmax attention tables, shaped (n_heads, L_q, L_kv)."""
    _, probs = _mha_core(q, kv, weights, n_heads, use_key_mask)
    return probs


def _mha_core(q_seq, kv_seq, w, n_heads, use_key_mask):
    if q_seq.tokens.shape[1] != w.w_q_in.shape[0]:
        raise ShapeMismatch(
            f"query width {q_seq.tokens.shape[1]} != projection rows {w.w_q_in.shape[0]}"
        )
    if kv_seq.tokens.shape[1] != w.w_kv_in.shape[0]:
        raise ShapeMismatch(
            f"key/value width {kv_seq.tokens.shape[1]} != projection rows {w.w_kv_in.shape[0]}"
        )
    d_attn = w.w_q_in.shape[1]
    if d_attn % n_heads != 0:
        raise ShapeMismatch(f"d_attn {d_attn} not divisible by {n_heads} heads")
    d_head = d_attn // n_heads

    q_in = q_seq.tokens @ w.w_q_in + w.b_q_in
    kv_in = kv_seq.tokens @ w.w_kv_in + w.b_kv_in
    q = q_in @ w.w_q + w.b_q
    k = kv_in @ w.w_k + w.b_k
    v = kv_in @ w.w_v + w.b_v

    lq, lkv = q.shape[0], k.shape[0]
    qh = q.reshape(lq, n_heads, d_head).transpose(1, 0, 2)
    kh = k.reshape(lkv, n_heads, d_head).transpose(1, 0, 2)
    vh = v.reshape(lkv, n_heads, d_head).transpose(1, 0, 2)

    logits = qh @ kh.transpose(0, 2, 1) / np.sqrt(d_head)
    if use_key_mask:
        if kv_seq.valid_len == 0:
            context = np.zeros((n_heads, lq, d_head), dtype=q.dtype)
            probs = np.zeros((n_heads, lq, lkv), dtype=q.dtype)
            out = context.transpose(1, 0, 2).reshape(lq, d_attn)
            return out @ w.w_out + w.b_out, probs
        logits[:, :, kv_seq.valid_len :] = -np.inf
    logits -= logits.max(axis=-1, keepdims=True)
    weights_exp = np.exp(logits)
    probs = weights_exp / weights_exp.sum(axis=-1, keepdims=True)
    context = probs @ vh
    out = context.transpose(1, 0, 2).reshape(lq, d_attn)
    return out @ w.w_out + w.b_out, probs


def mha_forward(
    q: TokenSeq,
    kv: TokenSeq,
    weights: MhaWeights,
    n_heads: int,
    use_key_mask: bool = True,
) -> np.ndarray:
    """Scaled dot-product multi-head attention of q over kv, L x d_attn.

    With masking on, padded key/value rows receive -inf logits, so their
    content cannot reach any output row.
    """
    out, _ = _mha_core(q, kv, weights, n_heads, use_key_mask)
    return out


def symmetric_attention(
    a: TokenSeq,
    b: TokenSeq,
    weights: SymAttnWeights,
    n_heads: int,
    use_key_mask: bool = True,
) -> TokenSeq:
    """Both attention directions concatenated along the feature axis."""
    ab = mha_forward(a, b, weights.ab, n_heads, use_key_mask)
    ba = mha_forward(b, a, weights.ba, n_heads, use_key_mask)
    if ab.shape[0] != ba.shape[0]:
        raise ShapeMismatch("symmetric attention needs equal sequence lengths")
    return TokenSeq(np.concatenate([ab, ba], axis=1), min(a.valid_len, b.valid_len))


@dataclass(frozen=True)
class FusionVolume:
    f_sim: np.ndarray
    f_feat: np.ndarray
    pyramid: tuple[np.ndarray, ...]


def fuse(
    qv: TokenSeq, qt: TokenSeq, qs: TokenSeq,
    tv: TokenSeq, tt: TokenSeq, ts: TokenSeq,
    weights: FuseWeights,
    config: FusionConfig,
    use_key_mask: bool = True,
) -> np.ndarray:
    """The five-branch fused feature volume, L x (5 * d_out)."""
    for name, seq, d in (
        ("qv", qv, config.d_vis), ("qt", qt, config.d_txt), ("qs", qs, config.d_spa),
        ("tv", tv, config.d_vis), ("tt", tt, config.d_txt), ("ts", ts, config.d_spa),
    ):
        if seq.tokens.shape != (config.seq_len, d):
            raise ShapeMismatch(
                f"{name} has shape {seq.tokens.shape}, expected {(config.seq_len, d)}"
            )
    nh = config.n_heads
    vv = symmetric_attention(qv, tv, weights.vv, nh, use_key_mask)
    tt_out = symmetric_attention(qt, tt, weights.tt, nh, use_key_mask)
    ss = symmetric_attention(qs, ts, weights.ss, nh, use_key_mask)
    sq_vt = symmetric_attention(qs, tv, weights.sq_vt, nh, use_key_mask)
    sq_vt_tt = symmetric_attention(sq_vt, tt, weights.sq_vt_tt, nh, use_key_mask)
    st_vq = symmetric_attention(ts, qv, weights.st_vq, nh, use_key_mask)
    st_vq_tq = symmetric_attention(st_vq, qt, weights.st_vq_tq, nh, use_key_mask)
    f_sim = np.concatenate(
        [vv.tokens, tt_out.tokens, ss.tokens, sq_vt_tt.tokens, st_vq_tq.tokens], axis=1
    )
    if f_sim.shape != (config.seq_len, config.fused_width):
        raise ShapeMismatch(f"fused volume came out {f_sim.shape}")
    return f_sim


def project_reshape(f_sim: np.ndarray, weights: FuseWeights, config: FusionConfig) -> np.ndarray:
    """Per-row linear projection reshaped into L planes of grid_h x grid_w."""
    if f_sim.shape[1] != weights.proj_w.shape[0]:
        raise ShapeMismatch(
            f"fused width {f_sim.shape[1]} != projection rows {weights.proj_w.shape[0]}"
        )
    flat = f_sim @ weights.proj_w + weights.proj_b
    return flat.reshape(f_sim.shape[0], config.grid_h, config.grid_w)


def pyramid_heads(f_feat: np.ndarray, weights: FuseWeights, config: FusionConfig) -> tuple[np.ndarray, ...]:
    """Four 1x1 convolutions over the plane-stack channels, LeakyReLU'd."""
    levels = []
    slope = config.leaky_slope
    for w, b in weights.pyramid:
        if w.shape[1] != f_feat.shape[0]:
            raise ShapeMismatch(
                f"pyramid weight expects {w.shape[1]} channels, volume has {f_feat.shape[0]}"
            )
        pre = np.tensordot(w, f_feat, axes=([1], [0])) + b[:, None, None]
        levels.append(np.where(pre >= 0, pre, slope * pre))
    return tuple(levels)


def run_fusion(
    inputs: dict[str, TokenSeq],
    weights: FuseWeights,
    config: FusionConfig,
    use_key_mask: bool = True,
) -> FusionVolume:
    """Full forward pass: fuse, project, pyramid."""
    f_sim = fuse(
        inputs["qv"], inputs["qt"], inputs["qs"],
        inputs["tv"], inputs["tt"], inputs["ts"],
        weights, config, use_key_mask,
    )
    f_feat = project_reshape(f_sim, weights, config)
    return FusionVolume(f_sim, f_feat, pyramid_heads(f_feat, weights, config))


TENSOR_FILE_VERSION = 1


def save_tensors(path: str, tensors: dict[str, np.ndarray]) -> None:
    """Versioned container of named tensors with explicit shapes."""
    meta = {
        "format": "snipsearch-tensors",
        "version": TENSOR_FILE_VERSION,
        "tensors": {
            name: {"shape": list(arr.shape), "dtype": str(arr.dtype)}
            for name, arr in tensors.items()
        },
    }
    np.savez(path, _meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **tensors)


def save_token_seqs(path: str, seqs: dict[str, TokenSeq]) -> None:
    """Persist padded sequences: '<name>' L x d plus '<name>__valid_len'.

    This is the exchange layout for real encoder outputs, letting external
    embeddings replace the deterministic stubs.
    """
    tensors: dict[str, np.ndarray] = {}
    for name, seq in seqs.items():
        tensors[name] = seq.tokens
        tensors[f"{name}__valid_len"] = np.asarray(seq.valid_len)
    save_tensors(path, tensors)


def load_token_seqs(path: str) -> dict[str, TokenSeq]:
    tensors = load_tensors(path)
    out: dict[str, TokenSeq] = {}
    for name, arr in tensors.items():
        if name.endswith("__valid_len"):
            continue
        key = f"{name}__valid_len"
        if key not in tensors:
            raise ShapeMismatch(f"tensor {name!r} has no {key!r} companion")
        out[name] = TokenSeq(arr, int(tensors[key]))
    return out


def load_tensors(path: str) -> dict[str, np.ndarray]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["_meta"]).decode())
        if meta.get("format") != "snipsearch-tensors" or meta.get("version") != TENSOR_FILE_VERSION:
            raise ShapeMismatch(f"{path!r} is not a supported tensor container")
        out = {}
        for name, info in meta["tensors"].items():
            arr = data[name]
            if list(arr.shape) != info["shape"]:
                raise ShapeMismatch(f"tensor {name!r} shape mismatch in {path!r}")
            out[name] = arr
    return out
