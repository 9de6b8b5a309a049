"""Residual feed-forward binary classifier with hand-derived backprop,
AdamW, and a self-describing binary checkpoint format.

Topology (all widths configurable):

    input -> dense(trunk_width) -> relu -> dropout
          -> n_residual_blocks * [ dense -> relu -> dense, + skip, relu,
                                   dropout ]
          -> per head width: dense -> relu
          -> dense(1)  -> raw logit

Residual blocks keep the trunk width, so the skip path is a plain
identity add. Dropout is inverted (scaled at train time) and active only
in train mode; eval-mode forward is a pure function of (params, X).

Checkpoint format: magic ``DNET``, version byte 1, little-endian u32
header length, a JSON header (config, optional feature mask, metadata,
layer order, optional optimizer hyper-parameters), then every parameter
tensor raveled as little-endian float64 in layer order; optimizer first
and second moments follow in the same order when present.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .data import FeatureMask
from .errors import ConfigError, FormatError, ShapeError, StateError
from .numerics import dropout_mask, make_rng, matmul, relu, relu_grad, sigmoid

_MAGIC = b"DNET"
_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int
    trunk_width: int = 512
    n_residual_blocks: int = 2
    dropout_rate: float = 0.2
    head_widths: tuple = (128,)

    def __post_init__(self):
        if self.input_dim < 1:
            raise ConfigError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.trunk_width < 1:
            raise ConfigError(f"trunk_width must be >= 1, got {self.trunk_width}")
        if self.n_residual_blocks < 0:
            raise ConfigError("n_residual_blocks must be >= 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        widths = tuple(int(w) for w in self.head_widths)
        if any(w < 1 for w in widths):
            raise ConfigError("head widths must be >= 1")
        object.__setattr__(self, "head_widths", widths)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "trunk_width": self.trunk_width,
            "n_residual_blocks": self.n_residual_blocks,
            "dropout_rate": self.dropout_rate,
            "head_widths": list(self.head_widths),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            input_dim=int(d["input_dim"]),
            trunk_width=int(d["trunk_width"]),
            n_residual_blocks=int(d["n_residual_blocks"]),
            dropout_rate=float(d["dropout_rate"]),
            head_widths=tuple(d["head_widths"]),
        )


def layer_shapes(cfg: ModelConfig) -> list[tuple[str, tuple]]:
    """Ordered (name, shape) pairs; this order defines the checkpoint blob."""
    w = cfg.trunk_width
    shapes = [("entry.W", (cfg.input_dim, w)), ("entry.b", (w,))]
    for k in range(cfg.n_residual_blocks):
        shapes += [
            (f"block{k}.W1", (w, w)),
            (f"block{k}.b1", (w,)),
            (f"block{k}.W2", (w, w)),
            (f"block{k}.b2", (w,)),
        ]
    prev = w
    for j, hw in enumerate(cfg.head_widths):
        shapes += [(f"head{j}.W", (prev, hw)), (f"head{j}.b", (hw,))]
        prev = hw
    shapes += [("out.W", (prev, 1)), ("out.b", (1,))]
    return shapes


def _is_weight(name: str) -> bool:
    return name.rsplit(".", 1)[1].startswith("W")


@dataclass
class ModelParams:
    """All weight/bias tensors plus the topology they belong to."""

    cfg: ModelConfig
    tensors: dict = field(default_factory=dict)

    def copy(self) -> "ModelParams":
        return ModelParams(self.cfg, {k: v.copy() for k, v in self.tensors.items()})

    def names(self) -> list[str]:
        return [name for name, _ in layer_shapes(self.cfg)]


def init_model(cfg: ModelConfig, seed: int) -> ModelParams:
    """He-uniform weights (variance 2/fan_in), zero biases, seed-determined."""
    rng = make_rng(seed)
    tensors = {}
    for name, shape in layer_shapes(cfg):
        if _is_weight(name):
            fan_in = shape[0]
            limit = np.sqrt(6.0 / fan_in)
            tensors[name] = rng.uniform(-limit, limit, size=shape)
        else:
            tensors[name] = np.zeros(shape)
    return ModelParams(cfg, tensors)


def forward(
    params: ModelParams,
    X: np.ndarray,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Run the network; returns (logits[batch], cache for backward).

    Train mode draws fresh dropout masks from ``rng``; eval mode is
    deterministic. The cache holds every intermediate needed by
    ``backward`` and is tied to this exact params object.
    """
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    cfg = params.cfg
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != cfg.input_dim:
        raise ShapeError(
            f"input must be (batch, {cfg.input_dim}), got {X.shape}"
        )
    dropping = mode == "train" and cfg.dropout_rate > 0.0
    if dropping and rng is None:
        raise ConfigError("train-mode forward with dropout needs an rng")

    def mask_like(a):
        if dropping:
            return dropout_mask(a.shape, cfg.dropout_rate, rng)
        return None

    t = params.tensors
    cache: dict = {"params_id": id(params), "mode": mode, "X": X, "blocks": [], "heads": []}

    pre0 = matmul(X, t["entry.W"]) + t["entry.b"]
    a0 = relu(pre0)
    m0 = mask_like(a0)
    h = a0 * m0 if m0 is not None else a0
    cache["entry"] = (pre0, m0)

    for k in range(cfg.n_residual_blocks):
        h_in = h
        upre = matmul(h_in, t[f"block{k}.W1"]) + t[f"block{k}.b1"]
        u = relu(upre)
        vpre = matmul(u, t[f"block{k}.W2"]) + t[f"block{k}.b2"]
        spre = vpre + h_in
        s = relu(spre)
        mk = mask_like(s)
        h = s * mk if mk is not None else s
        cache["blocks"].append((h_in, upre, u, spre, mk))

    for j in range(len(cfg.head_widths)):
        h_in = h
        tpre = matmul(h_in, t[f"head{j}.W"]) + t[f"head{j}.b"]
        h = relu(tpre)
        cache["heads"].append((h_in, tpre))

    cache["h_last"] = h
    z = (matmul(h, t["out.W"]) + t["out.b"]).ravel()
    return z, cache


def backward(params: ModelParams, cache: dict, dz: np.ndarray) -> dict:
    """Gradients of the scalar loss for every tensor, given dL/dlogit.

    The cache must come from a forward call on this same params object;
    anything else raises StateError.
    """
    if cache.get("params_id") != id(params):
        raise StateError("cache does not belong to these parameters")
    dz = np.asarray(dz, dtype=np.float64).ravel()
    n = cache["X"].shape[0]
    if dz.shape != (n,):
        raise StateError(f"upstream gradient length {dz.size} != cached batch {n}")

    cfg = params.cfg
    t = params.tensors
    grads: dict = {}
    dZ = dz.reshape(-1, 1)

    h_last = cache["h_last"]
    grads["out.W"] = matmul(h_last.T, dZ)
    grads["out.b"] = dZ.sum(axis=0)
    dh = matmul(dZ, t["out.W"].T)

    for j in reversed(range(len(cfg.head_widths))):
        h_in, tpre = cache["heads"][j]
        dtpre = dh * relu_grad(tpre)
        grads[f"head{j}.W"] = matmul(h_in.T, dtpre)
        grads[f"head{j}.b"] = dtpre.sum(axis=0)
        dh = matmul(dtpre, t[f"head{j}.W"].T)

    for k in reversed(range(cfg.n_residual_blocks)):
        h_in, upre, u, spre, mk = cache["blocks"][k]
        ds = dh * mk if mk is not None else dh
        dspre = ds * relu_grad(spre)
        grads[f"block{k}.W2"] = matmul(u.T, dspre)
        grads[f"block{k}.b2"] = dspre.sum(axis=0)
        du = matmul(dspre, t[f"block{k}.W2"].T)
        dupre = du * relu_grad(upre)
        grads[f"block{k}.W1"] = matmul(h_in.T, dupre)
        grads[f"block{k}.b1"] = dupre.sum(axis=0)
        # skip connection: gradient re-enters the block input directly
        dh = dspre + matmul(dupre, t[f"block{k}.W1"].T)

    pre0, m0 = cache["entry"]
    da0 = dh * m0 if m0 is not None else dh
    dpre0 = da0 * relu_grad(pre0)
    grads["entry.W"] = matmul(cache["X"].T, dpre0)
    grads["entry.b"] = dpre0.sum(axis=0)
    return grads


def predict_logits(params: ModelParams, X: np.ndarray) -> np.ndarray:
    z, _ = forward(params, X, mode="eval")
    return z


def predict_proba(params: ModelParams, X: np.ndarray) -> np.ndarray:
    return sigmoid(predict_logits(params, X))


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

@dataclass
class OptimizerState:
    """AdamW moments and hyper-parameters. Weight decay skips biases."""

    lr: float = 1e-4
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def init_optimizer(
    params: ModelParams,
    lr: float = 1e-4,
    weight_decay: float = 1e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> OptimizerState:
    state = OptimizerState(lr, weight_decay, beta1, beta2, eps)
    for name in params.names():
        state.m[name] = np.zeros_like(params.tensors[name])
        state.v[name] = np.zeros_like(params.tensors[name])
    return state


def adamw_step(params: ModelParams, grads: dict, state: OptimizerState) -> None:
    """One decoupled-weight-decay Adam update, in place:

        p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p
    """
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for name in params.names():
        p = params.tensors[name]
        if name not in grads:
            raise ShapeError(f"missing gradient for {name}")
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        wd = state.weight_decay if _is_weight(name) else 0.0
        kernels.adamw_update(
            p.reshape(-1),
            np.ascontiguousarray(g).reshape(-1),
            state.m[name].reshape(-1),
            state.v[name].reshape(-1),
            c1,
            c2,
            state.lr,
            state.beta1,
            state.beta2,
            state.eps,
            wd,
        )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

@dataclass
class LoadedModel:
    params: ModelParams
    mask: FeatureMask | None
    meta: dict
    optimizer_state: OptimizerState | None


def save_model(
    params: ModelParams,
    path,
    mask: FeatureMask | None = None,
    meta: dict | None = None,
    optimizer_state: OptimizerState | None = None,
) -> None:
    """Write a DNET checkpoint: config, optional mask, metadata, tensors,
    and (when given) the full optimizer state for exact resumption."""
    names = params.names()
    header = {
        "config": params.cfg.to_dict(),
        "mask": mask.to_dict() if mask is not None else None,
        "meta": meta or {},
        "layers": names,
    }
    if optimizer_state is not None:
        header["optimizer"] = {
            "lr": optimizer_state.lr,
            "weight_decay": optimizer_state.weight_decay,
            "beta1": optimizer_state.beta1,
            "beta2": optimizer_state.beta2,
            "eps": optimizer_state.eps,
            "t": optimizer_state.t,
        }
    else:
        header["optimizer"] = None
    blob = bytearray()
    for name in names:
        blob += np.ascontiguousarray(params.tensors[name], dtype="<f8").tobytes()
    if optimizer_state is not None:
        for store in (optimizer_state.m, optimizer_state.v):
            for name in names:
                blob += np.ascontiguousarray(store[name], dtype="<f8").tobytes()
    header_bytes = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes([_VERSION]))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(bytes(blob))


def load_model(path) -> LoadedModel:
    raw = Path(path).read_bytes()
    if len(raw) < 9 or raw[:4] != _MAGIC:
        raise FormatError(f"{path}: bad magic, not a DNET model file")
    if raw[4] != _VERSION:
        raise FormatError(f"{path}: unsupported DNET version {raw[4]}")
    (hlen,) = struct.unpack_from("<I", raw, 5)
    try:
        header = json.loads(raw[9 : 9 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: corrupt header: {e}") from None
    cfg = ModelConfig.from_dict(header["config"])
    shapes = layer_shapes(cfg)
    if header.get("layers") != [n for n, _ in shapes]:
        raise FormatError(f"{path}: layer list does not match config topology")

    offset = 9 + hlen
    n_copies = 1 if header.get("optimizer") is None else 3
    n_params = sum(int(np.prod(s)) for _, s in shapes)
    expected = offset + 8 * n_params * n_copies
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(raw)}")

    def read_tensors():
        nonlocal offset
        out = {}
        for name, shape in shapes:
            count = int(np.prod(shape))
            arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
            out[name] = arr.astype(np.float64).reshape(shape)
            offset += 8 * count
        return out

    params = ModelParams(cfg, read_tensors())
    opt = None
    if header.get("optimizer") is not None:
        o = header["optimizer"]
        opt = OptimizerState(
            lr=float(o["lr"]),
            weight_decay=float(o["weight_decay"]),
            beta1=float(o["beta1"]),
            beta2=float(o["beta2"]),
            eps=float(o["eps"]),
            t=int(o["t"]),
        )
        opt.m = read_tensors()
        opt.v = read_tensors()
    mask = FeatureMask.from_dict(header["mask"]) if header.get("mask") else None
    return LoadedModel(params, mask, header.get("meta", {}), opt)


def resize_input(cfg: ModelConfig, mask: FeatureMask) -> ModelConfig:
    """Config for retraining after feature reduction: the input layer
    shrinks to the kept-feature count, everything else is unchanged."""
    return replace(cfg, input_dim=len(mask))
