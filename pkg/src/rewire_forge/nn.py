"""Layers, graph normalization, Adam and parameter checkpoints on top of :mod:`autodiff`."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

import numpy as np
import scipy.sparse

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ContractError, ParameterError

CHECKPOINT_VERSION = 1
GRAPH_NORM_EPS = 1e-5


class Module:
    """Anything holding parameter tensors, directly or in sub-modules."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for key, val in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(val, Tensor) and val.requires_grad:
                yield name, val
            elif isinstance(val, Module):
                yield from val.named_parameters(name + ".")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")
                    elif isinstance(item, Tensor) and item.requires_grad:
                        yield f"{name}.{i}", item

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = set(own) - set(state)
        if missing:
            raise ParameterError(f"state dict lacks {sorted(missing)[:5]}")
        for k, p in own.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ParameterError(f"{k}: shape {arr.shape} != {p.data.shape}")
            p.data = arr.copy()


def uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = ad.parameter(uniform_init(rng, n_in, (n_in, n_out)))
        self.bias = ad.parameter(uniform_init(rng, n_in, (n_out,))) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = ad.matmul(x, self.weight)
        return y if self.bias is None else ad.add(y, self.bias)


class MLP(Module):
    """Two (or more) linear layers with SELU in between, none after the last."""

    def __init__(self, sizes: list[int], rng: np.random.Generator):
        self.layers = [Linear(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = ad.selu(x)
        return x


def segment_mean_matrix(segment: np.ndarray, num_segments: int, weights: np.ndarray | None = None):
    """Sparse (segments x rows) matrix averaging rows within each segment.

    Rows with weight 0 are ignored; empty segments produce zero rows.
    """
    segment = np.asarray(segment, dtype=np.int64)
    w = np.ones(len(segment)) if weights is None else np.asarray(weights, dtype=np.float64)
    counts = np.bincount(segment, weights=w, minlength=num_segments)
    vals = w / np.where(counts[segment] > 0, counts[segment], 1.0)
    keep = vals != 0
    return scipy.sparse.csr_matrix(
        (vals[keep], (segment[keep], np.arange(len(segment))[keep])), shape=(num_segments, len(segment))
    )


class GraphNorm(Module):
    """Per-graph, per-channel standardization followed by a learned affine map."""

    def __init__(self, dim: int):
        self.gamma = ad.parameter(np.ones(dim))
        self.beta = ad.parameter(np.zeros(dim))

    def __call__(self, x: Tensor, segment: np.ndarray, avg: scipy.sparse.spmatrix) -> Tensor:
        return graph_norm(x, segment, avg, self.gamma, self.beta)


def graph_norm(x: Tensor, segment: np.ndarray, avg, gamma: Tensor | None = None, beta: Tensor | None = None) -> Tensor:
    """``(x - mean) / sqrt(var + eps)`` per segment and channel, then ``* gamma + beta``.

    ``avg`` is the matrix from :func:`segment_mean_matrix` for ``segment``.
    """
    centered = ad.sub(x, ad.take_rows(ad.spmm(avg, x), segment))
    var = ad.spmm(avg, ad.mul(centered, centered))
    out = ad.mul(centered, ad.take_rows(ad.power(ad.add(var, GRAPH_NORM_EPS), -0.5), segment))
    if gamma is not None:
        out = ad.add(ad.mul(out, gamma), beta)
    return out


class Adam:
    """Adam with bias correction and a learning rate decaying linearly to 0.

    ``total_steps=None`` keeps the rate constant.
    """

    def __init__(self, params: list[Tensor], lr: float = 7e-4, betas=(0.9, 0.999), eps: float = 1e-8,
                 total_steps: int | None = None, max_grad_norm: float | None = None):
        self.params = list(params)
        self.lr0 = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.total_steps = total_steps
        self.max_grad_norm = max_grad_norm
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def lr_at(self, step: int) -> float:
        if self.total_steps is None:
            return self.lr0
        return self.lr0 * max(0.0, 1.0 - step / self.total_steps)

    @property
    def lr(self) -> float:
        return self.lr_at(self.step_count)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def grad_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in self.params if p.grad is not None)))

    def step(self, lr: float | None = None) -> None:
        """One update; ``lr`` overrides the built-in schedule for this step."""
        missing = [i for i, p in enumerate(self.params) if p.grad is None]
        if len(missing) == len(self.params):
            raise ContractError("adam step with no gradients populated; call backward() first")
        lr = self.lr if lr is None else lr
        scale = 1.0
        if self.max_grad_norm is not None:
            norm = self.grad_norm()
            if norm > self.max_grad_norm:
                scale = self.max_grad_norm / (norm + 1e-12)
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for p, m, v in zip(self.params, self.m, self.v):
            # parameters that took no part in the loss see a zero gradient
            g = np.zeros_like(p.data) if p.grad is None else p.grad * scale
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data = p.data - lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def save_checkpoint(path: str | Path, params: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write ``params.bin`` (little-endian float64 records) and ``manifest.json``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    records = []
    offset = 0
    with open(path / "params.bin", "wb") as fh:
        for name in sorted(params):
            arr = np.ascontiguousarray(params[name], dtype="<f8")
            fh.write(arr.tobytes())
            records.append({"name": name, "shape": list(arr.shape), "offset": offset, "count": int(arr.size)})
            offset += arr.size
    manifest = {"version": CHECKPOINT_VERSION, "dtype": "float64-le", "records": records, "meta": meta or {}}
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise ParameterError(f"unsupported checkpoint version {manifest.get('version')!r}")
    flat = np.frombuffer((path / "params.bin").read_bytes(), dtype="<f8")
    params = {}
    for rec in manifest["records"]:
        chunk = flat[rec["offset"]: rec["offset"] + rec["count"]]
        params[rec["name"]] = chunk.reshape(rec["shape"]).astype(np.float64)
    return params, manifest.get("meta", {})
