"""Policy-value network and its reverse-mode gradients, numpy float64.

Architecture: a conv encoder over the rasterized mesh (two 3x3 valid
convolutions with ReLU, then a 64-unit linear layer) and an MLP encoder over
the standardized S-parameter vector (512 and 256 tanh units). The two
embeddings are concatenated into a shared trunk feeding an actor head
(tanh hidden layer, softmax over the action logits) and a critic head
(tanh hidden layer, one linear unit).

Gradients are hand-derived and checked against central finite differences in
the test suite; there is no autograd here.
"""
from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT = "mwdesk-checkpoint/1"


class DivergedError(RuntimeError):
    """A non-finite value reached the optimizer; names the parameter block."""


@dataclass(frozen=True)
class NetConfig:
    grid: int = 32
    sweep_points: int = 101
    n_actions: int = 4
    conv_channels: tuple[int, int] = (8, 16)
    f1_units: int = 64
    f2_units: tuple[int, int] = (512, 256)
    head_units: int = 64
    svec_channels: int = 2

    @property
    def svec_len(self) -> int:
        return self.svec_channels * self.sweep_points

    @property
    def conv_out(self) -> tuple[int, int]:
        side = self.grid - 4  # two 3x3 valid convolutions
        if side < 1:
            raise ValueError("grid too small for two 3x3 valid convolutions")
        return side, side

    @property
    def trunk_len(self) -> int:
        return self.f1_units + self.f2_units[1]


def _orthogonal(rng: np.random.Generator, shape: tuple[int, int], gain: float) -> np.ndarray:
    a = rng.standard_normal(shape)
    q, r = np.linalg.qr(a if shape[0] >= shape[1] else a.T)
    q = q * np.sign(np.diag(r))
    if shape[0] < shape[1]:
        q = q.T
    return gain * q[: shape[0], : shape[1]]


def init_params(cfg: NetConfig, seed: int) -> dict[str, np.ndarray]:
    """Orthogonal weights (sqrt(2) before ReLU, 1 before tanh, 0.01 on the
    output heads), zero biases."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6E65]))
    c1, c2 = cfg.conv_channels
    side = cfg.conv_out[0]
    flat = side * side * c2
    f2a, f2b = cfg.f2_units
    p: dict[str, np.ndarray] = {}

    def conv(name, cin, cout, gain):
        w = _orthogonal(rng, (9 * cin, cout), gain).reshape(3, 3, cin, cout)
        p[f"{name}_w"] = w
        p[f"{name}_b"] = np.zeros(cout)

    def fc(name, nin, nout, gain):
        p[f"{name}_w"] = _orthogonal(rng, (nin, nout), gain)
        p[f"{name}_b"] = np.zeros(nout)

    conv("conv1", 1, c1, np.sqrt(2.0))
    conv("conv2", c1, c2, np.sqrt(2.0))
    fc("f1", flat, cfg.f1_units, 1.0)
    fc("f2a", cfg.svec_len, f2a, 1.0)
    fc("f2b", f2a, f2b, 1.0)
    fc("actor1", cfg.trunk_len, cfg.head_units, 1.0)
    fc("actor2", cfg.head_units, cfg.n_actions, 0.01)
    fc("critic1", cfg.trunk_len, cfg.head_units, 1.0)
    fc("critic2", cfg.head_units, 1, 0.01)
    return p


def zero_grads(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.items()}


def _im2col(x: np.ndarray) -> np.ndarray:
    """(B, H, W, C) -> (B, H-2, W-2, 9*C) patches for a 3x3 valid convolution."""
    win = np.lib.stride_tricks.sliding_window_view(x, (3, 3), axis=(1, 2))
    # axes: (B, H', W', C, kh, kw) -> (B, H', W', kh, kw, C)
    win = win.transpose(0, 1, 2, 4, 5, 3)
    b, hh, ww = win.shape[:3]
    return win.reshape(b, hh, ww, -1)


def _col2im(dcols: np.ndarray, in_shape: tuple) -> np.ndarray:
    b, hh, ww, _ = dcols.shape
    cin = in_shape[3]
    d = dcols.reshape(b, hh, ww, 3, 3, cin)
    dx = np.zeros(in_shape)
    for i in range(3):
        for j in range(3):
            dx[:, i:i + hh, j:j + ww, :] += d[:, :, :, i, j, :]
    return dx


def forward(params: dict[str, np.ndarray], cfg: NetConfig, grids: np.ndarray,
            svecs: np.ndarray, want_cache: bool = False):
    """Batched forward pass.

    grids: (B, G, G) occupancy; svecs: (B, svec_len) standardized dB values.
    Returns (pi, v) or (pi, v, cache).
    """
    grids = np.asarray(grids, dtype=float)
    svecs = np.asarray(svecs, dtype=float)
    if grids.ndim == 2:
        grids = grids[None]
    if svecs.ndim == 1:
        svecs = svecs[None]
    b = len(grids)
    if grids.shape != (b, cfg.grid, cfg.grid) or svecs.shape != (b, cfg.svec_len):
        raise ValueError(f"input shapes {grids.shape}/{svecs.shape} do not match "
                         f"net configuration {(cfg.grid, cfg.svec_len)}")

    x0 = grids[..., None]                                   # (B, G, G, 1)
    cols1 = _im2col(x0)
    z1 = cols1 @ params["conv1_w"].reshape(-1, params["conv1_w"].shape[-1]) + params["conv1_b"]
    a1 = np.maximum(z1, 0.0)
    cols2 = _im2col(a1)
    z2 = cols2 @ params["conv2_w"].reshape(-1, params["conv2_w"].shape[-1]) + params["conv2_b"]
    a2 = np.maximum(z2, 0.0)
    flat = a2.reshape(b, -1)
    f1_out = flat @ params["f1_w"] + params["f1_b"]

    t2a = np.tanh(svecs @ params["f2a_w"] + params["f2a_b"])
    t2b = np.tanh(t2a @ params["f2b_w"] + params["f2b_b"])

    trunk = np.concatenate([f1_out, t2b], axis=1)
    ta = np.tanh(trunk @ params["actor1_w"] + params["actor1_b"])
    logits = ta @ params["actor2_w"] + params["actor2_b"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    pi = expz / expz.sum(axis=1, keepdims=True)
    tc = np.tanh(trunk @ params["critic1_w"] + params["critic1_b"])
    v = (tc @ params["critic2_w"] + params["critic2_b"])[:, 0]

    if not want_cache:
        return pi, v
    cache = dict(x0=x0, cols1=cols1, z1=z1, a1=a1, cols2=cols2, z2=z2, flat=flat,
                 svecs=svecs, t2a=t2a, t2b=t2b, trunk=trunk, ta=ta, tc=tc,
                 logits=logits, pi=pi, v=v)
    return pi, v, cache


def backward(params: dict[str, np.ndarray], cfg: NetConfig, cache: dict,
             dlogits: np.ndarray, dv: np.ndarray) -> dict[str, np.ndarray]:
    """Reverse-mode gradients for all parameters from head seeds."""
    g = {}
    ta, tc, trunk = cache["ta"], cache["tc"], cache["trunk"]

    g["actor2_w"] = ta.T @ dlogits
    g["actor2_b"] = dlogits.sum(axis=0)
    dta = dlogits @ params["actor2_w"].T
    dza = dta * (1.0 - ta ** 2)
    g["actor1_w"] = trunk.T @ dza
    g["actor1_b"] = dza.sum(axis=0)
    dtrunk = dza @ params["actor1_w"].T

    dvc = dv[:, None]
    g["critic2_w"] = tc.T @ dvc
    g["critic2_b"] = dvc.sum(axis=0)
    dtc = dvc @ params["critic2_w"].T
    dzc = dtc * (1.0 - tc ** 2)
    g["critic1_w"] = trunk.T @ dzc
    g["critic1_b"] = dzc.sum(axis=0)
    dtrunk = dtrunk + dzc @ params["critic1_w"].T

    df1 = dtrunk[:, : cfg.f1_units]
    df2 = dtrunk[:, cfg.f1_units:]

    t2a, t2b = cache["t2a"], cache["t2b"]
    dz2b = df2 * (1.0 - t2b ** 2)
    g["f2b_w"] = t2a.T @ dz2b
    g["f2b_b"] = dz2b.sum(axis=0)
    dt2a = dz2b @ params["f2b_w"].T
    dz2a = dt2a * (1.0 - t2a ** 2)
    g["f2a_w"] = cache["svecs"].T @ dz2a
    g["f2a_b"] = dz2a.sum(axis=0)

    flat = cache["flat"]
    g["f1_w"] = flat.T @ df1
    g["f1_b"] = df1.sum(axis=0)
    dflat = df1 @ params["f1_w"].T
    da2 = dflat.reshape(cache["z2"].shape)
    dz2 = da2 * (cache["z2"] > 0)
    c2w = params["conv2_w"]
    g["conv2_w"] = (cache["cols2"].reshape(-1, cache["cols2"].shape[-1]).T
                    @ dz2.reshape(-1, dz2.shape[-1])).reshape(c2w.shape)
    g["conv2_b"] = dz2.sum(axis=(0, 1, 2))
    dcols2 = dz2 @ c2w.reshape(-1, c2w.shape[-1]).T
    da1 = _col2im(dcols2, cache["a1"].shape)
    dz1 = da1 * (cache["z1"] > 0)
    c1w = params["conv1_w"]
    g["conv1_w"] = (cache["cols1"].reshape(-1, cache["cols1"].shape[-1]).T
                    @ dz1.reshape(-1, dz1.shape[-1])).reshape(c1w.shape)
    g["conv1_b"] = dz1.sum(axis=(0, 1, 2))
    return g


def a3c_loss_and_grads(params: dict[str, np.ndarray], cfg: NetConfig,
                       grids: np.ndarray, svecs: np.ndarray, actions: np.ndarray,
                       returns: np.ndarray, advantages: np.ndarray,
                       entropy_beta: float):
    """Loss and gradients of the advantage actor-critic objective.

    loss = sum_t [ -log pi(a_t) * adv_t - beta * H(pi_t) + 0.5 * (V_t - R_t)^2 ]

    Advantages are treated as constants for the policy term; the value term
    differentiates through V. Returns (loss, grads, stats).
    """
    actions = np.asarray(actions, dtype=int)
    returns = np.asarray(returns, dtype=float)
    advantages = np.asarray(advantages, dtype=float)
    pi, v, cache = forward(params, cfg, grids, svecs, want_cache=True)
    b = len(pi)

    logits = cache["logits"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_pi = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    entropy = -(pi * log_pi).sum(axis=1)
    log_pi_a = log_pi[np.arange(b), actions]

    policy_loss = float(-(log_pi_a * advantages).sum())
    entropy_loss = float(-entropy_beta * entropy.sum())
    value_loss = float(0.5 * ((v - returns) ** 2).sum())
    loss = policy_loss + entropy_loss + value_loss

    onehot = np.zeros_like(pi)
    onehot[np.arange(b), actions] = 1.0
    dlogits = advantages[:, None] * (pi - onehot) \
        + entropy_beta * pi * (log_pi + entropy[:, None])
    dv = v - returns
    grads = backward(params, cfg, cache, dlogits, dv)
    stats = {"loss": loss, "policy_loss": policy_loss, "entropy_loss": entropy_loss,
             "value_loss": value_loss, "entropy": float(entropy.mean())}
    return loss, grads, stats


# --- checkpoints -------------------------------------------------------------

def save_checkpoint(path, params: dict[str, np.ndarray], cfg: NetConfig,
                    extra: dict | None = None) -> None:
    """Deterministic zip of named parameter blocks: identical nets give
    identical bytes (fixed timestamps, stored entries, sorted names)."""
    meta = {"format": CHECKPOINT_FORMAT,
            "config": asdict(cfg),
            "blocks": sorted(params),
            "extra": extra or {}}
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo("meta.json", date_time=(1980, 1, 1, 0, 0, 0))
        zf.writestr(info, json.dumps(meta, sort_keys=True, indent=1))
        for name in sorted(params):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(params[name]))
            info = zipfile.ZipInfo(f"blocks/{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], NetConfig, dict]:
    with zipfile.ZipFile(path) as zf:
        meta = json.loads(zf.read("meta.json"))
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ValueError("not a checkpoint file")
        params = {}
        for name in meta["blocks"]:
            params[name] = np.lib.format.read_array(io.BytesIO(zf.read(f"blocks/{name}.npy")))
        cfg_d = dict(meta["config"])
        cfg_d["conv_channels"] = tuple(cfg_d["conv_channels"])
        cfg_d["f2_units"] = tuple(cfg_d["f2_units"])
        return params, NetConfig(**cfg_d), meta.get("extra", {})
