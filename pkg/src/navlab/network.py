"""User-authored network architectures: parsing, shape validation, forward and
reverse-mode evaluation, and the Adam optimizer.

Supported modules: linear, conv1d (valid padding), relu. A conv output feeding
a linear layer is implicitly flattened. All math is float64 so gradients can be
checked against central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import Violation
from .robots import RobotModel


@dataclass(frozen=True)
class LinearSpec:
    in_features: int
    out_features: int
    bias: bool = True

    type = "linear"

    def param_count(self) -> int:
        return self.in_features * self.out_features + (self.out_features if self.bias else 0)

    def to_dict(self) -> dict:
        return {
            "type": "linear",
            "in_features": self.in_features,
            "out_features": self.out_features,
            "bias": self.bias,
        }


@dataclass(frozen=True)
class Conv1dSpec:
    in_channels: int
    out_channels: int
    kernel_size: int
    stride: int = 1

    type = "conv1d"

    def param_count(self) -> int:
        return self.out_channels * self.in_channels * self.kernel_size + self.out_channels

    def to_dict(self) -> dict:
        return {
            "type": "conv1d",
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_size": self.kernel_size,
            "stride": self.stride,
        }


@dataclass(frozen=True)
class ReluSpec:
    type = "relu"

    def param_count(self) -> int:
        return 0

    def to_dict(self) -> dict:
        return {"type": "relu"}


ModuleSpec = LinearSpec | Conv1dSpec | ReluSpec


def parse_modules(raw: list) -> tuple[list[ModuleSpec], list[Violation]]:
    """Parse raw module dicts; malformed entries become violations."""
    modules: list[ModuleSpec] = []
    violations: list[Violation] = []
    if not isinstance(raw, list) or not raw:
        return [], [Violation("modules", "must be a non-empty list")]
    for i, m in enumerate(raw):
        field = f"modules[{i}]"
        if isinstance(m, (LinearSpec, Conv1dSpec, ReluSpec)):
            modules.append(m)
            continue
        if not isinstance(m, dict):
            violations.append(Violation(field, "must be an object"))
            continue
        kind = m.get("type")
        try:
            if kind == "linear":
                modules.append(
                    LinearSpec(
                        in_features=int(m["in_features"]),
                        out_features=int(m["out_features"]),
                        bias=bool(m.get("bias", True)),
                    )
                )
            elif kind == "conv1d":
                modules.append(
                    Conv1dSpec(
                        in_channels=int(m["in_channels"]),
                        out_channels=int(m["out_channels"]),
                        kernel_size=int(m["kernel_size"]),
                        stride=int(m.get("stride", 1)),
                    )
                )
            elif kind == "relu":
                modules.append(ReluSpec())
            else:
                violations.append(Violation(field, f"unknown module type {kind!r}"))
        except (KeyError, TypeError, ValueError) as exc:
            violations.append(Violation(field, f"malformed module: {exc}"))
    return modules, violations


def validate_architecture(raw_modules: list, robot: RobotModel) -> list[Violation]:
    """Propagate shapes symbolically; report the first mismatch per module.

    The observation enters as a single-channel signal of length obs_dim; a
    flatten is implied between a conv output and a following linear layer.
    """
    modules, violations = parse_modules(raw_modules)
    if violations:
        return violations
    shape: tuple = ("flat", robot.obs_dim)
    for i, m in enumerate(modules):
        field = f"modules[{i}]"
        if isinstance(m, LinearSpec):
            if m.in_features < 1 or m.out_features < 1:
                violations.append(Violation(field, "features must be >= 1"))
                break
            size = shape[1] if shape[0] == "flat" else shape[1] * shape[2]
            if m.in_features != size:
                violations.append(
                    Violation(field, f"in_features must be {size}, got {m.in_features}")
                )
                break
            shape = ("flat", m.out_features)
        elif isinstance(m, Conv1dSpec):
            if min(m.in_channels, m.out_channels, m.kernel_size, m.stride) < 1:
                violations.append(Violation(field, "conv parameters must be >= 1"))
                break
            channels, length = (1, shape[1]) if shape[0] == "flat" else (shape[1], shape[2])
            if m.in_channels != channels:
                violations.append(
                    Violation(field, f"in_channels must be {channels}, got {m.in_channels}")
                )
                break
            if m.kernel_size > length:
                violations.append(
                    Violation(field, f"kernel_size {m.kernel_size} exceeds input length {length}")
                )
                break
            out_len = (length - m.kernel_size) // m.stride + 1
            shape = ("conv", m.out_channels, out_len)
        else:  # relu preserves shape
            pass
    if not violations:
        size = shape[1] if shape[0] == "flat" else shape[1] * shape[2]
        if size != robot.action_dim:
            violations.append(
                Violation(
                    f"modules[{len(modules) - 1}]",
                    f"network output size is {size} but the robot needs {robot.action_dim}",
                )
            )
    return violations


def network_input_size(modules: list[ModuleSpec]) -> int:
    m = modules[0]
    if isinstance(m, LinearSpec):
        return m.in_features
    if isinstance(m, Conv1dSpec):
        # single-channel signal; length is unconstrained by the module itself,
        # so input size is fixed only by the robot the net was validated for
        raise ValueError("conv1d first module: input size depends on the robot")
    raise ValueError("first module must be linear or conv1d")


class NetworkInstance:
    """A parameterized network: flat float64 vector with per-module views."""

    def __init__(self, modules: list[ModuleSpec], params: np.ndarray):
        self.modules = list(modules)
        expected = sum(m.param_count() for m in self.modules)
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (expected,):
            raise ValueError(f"expected {expected} parameters, got {params.shape}")
        if not np.all(np.isfinite(params)):
            raise ValueError("parameters must be finite")
        self.params = params
        self._views = _build_views(self.modules, self.params)
        self._cache: list | None = None

    @property
    def param_count(self) -> int:
        return self.params.size

    def view(self, index: int):
        return self._views[index]


def _build_views(modules, flat):
    views = []
    offset = 0
    for m in modules:
        if isinstance(m, LinearSpec):
            w = flat[offset : offset + m.in_features * m.out_features].reshape(
                m.out_features, m.in_features
            )
            offset += w.size
            b = None
            if m.bias:
                b = flat[offset : offset + m.out_features]
                offset += m.out_features
            views.append({"W": w, "b": b})
        elif isinstance(m, Conv1dSpec):
            w = flat[
                offset : offset + m.out_channels * m.in_channels * m.kernel_size
            ].reshape(m.out_channels, m.in_channels, m.kernel_size)
            offset += w.size
            b = flat[offset : offset + m.out_channels]
            offset += m.out_channels
            views.append({"W": w, "b": b})
        else:
            views.append({})
    return views


def init_network(modules: list, seed: int) -> NetworkInstance:
    """Seeded fan-in uniform initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    parsed, violations = parse_modules(modules)
    if violations:
        raise ValueError("; ".join(map(str, violations)))
    rng = np.random.default_rng(int(seed))
    chunks = []
    for m in parsed:
        if isinstance(m, LinearSpec):
            bound = 1.0 / math.sqrt(m.in_features)
            n = m.param_count()
        elif isinstance(m, Conv1dSpec):
            bound = 1.0 / math.sqrt(m.in_channels * m.kernel_size)
            n = m.param_count()
        else:
            continue
        chunks.append(rng.uniform(-bound, bound, size=n))
    params = np.concatenate(chunks) if chunks else np.zeros(0)
    return NetworkInstance(parsed, params)


def forward(net: NetworkInstance, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a 1-D input, caching intermediates for backward."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    cur = x
    cache = []
    for m, view in zip(net.modules, net._views):
        if isinstance(m, LinearSpec):
            flat_in = cur.reshape(-1)
            if flat_in.size != m.in_features:
                raise ValueError(
                    f"linear expected input size {m.in_features}, got {flat_in.size}"
                )
            cache.append((cur.shape, flat_in))
            cur = view["W"] @ flat_in
            if view["b"] is not None:
                cur = cur + view["b"]
        elif isinstance(m, Conv1dSpec):
            sig = cur.reshape(1, -1) if cur.ndim == 1 else cur
            if sig.shape[0] != m.in_channels:
                raise ValueError(f"conv1d expected {m.in_channels} channels, got {sig.shape[0]}")
            length = sig.shape[1]
            if m.kernel_size > length:
                raise ValueError("conv1d kernel longer than input")
            cache.append((cur.shape, sig))
            out_len = (length - m.kernel_size) // m.stride + 1
            w = view["W"]
            y = np.tile(view["b"][:, None], (1, out_len))
            last = (out_len - 1) * m.stride
            for k in range(m.kernel_size):
                y += w[:, :, k] @ sig[:, k : k + last + 1 : m.stride]
            cur = y
        else:  # relu
            cache.append((cur.shape, cur))
            cur = np.maximum(cur, 0.0)
    net._cache = cache
    return cur.reshape(-1)


def backward(net: NetworkInstance, upstream_grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact reverse-mode gradients w.r.t. all parameters and the input.

    Must follow a forward() on the same instance; consumes the cache.
    """
    if net._cache is None:
        raise RuntimeError("backward called before forward")
    grads = np.zeros_like(net.params)
    gviews = _build_views(net.modules, grads)
    # output shape of the last module: reconstruct from cached input of the
    # last module by replaying its shape rule
    up = np.asarray(upstream_grad, dtype=np.float64)
    for i in range(len(net.modules) - 1, -1, -1):
        m = net.modules[i]
        in_shape, cached = net._cache[i]
        view, gview = net._views[i], gviews[i]
        if isinstance(m, LinearSpec):
            u = up.reshape(m.out_features)
            gview["W"] += np.outer(u, cached)
            if m.bias:
                gview["b"] += u
            up = (view["W"].T @ u).reshape(in_shape)
        elif isinstance(m, Conv1dSpec):
            sig = cached
            out_len = (sig.shape[1] - m.kernel_size) // m.stride + 1
            u = up.reshape(m.out_channels, out_len)
            w = view["W"]
            dx = np.zeros_like(sig)
            last = (out_len - 1) * m.stride
            for k in range(m.kernel_size):
                cols = sig[:, k : k + last + 1 : m.stride]
                gview["W"][:, :, k] += u @ cols.T
                dx[:, k : k + last + 1 : m.stride] += w[:, :, k].T @ u
            gview["b"] += u.sum(axis=1)
            up = dx.reshape(in_shape)
        else:  # relu: zero gradient where pre-activation <= 0
            up = up.reshape(in_shape) * (cached > 0)
    net._cache = None
    return grads, up.reshape(-1)


# --- model artifact container ------------------------------------------------
#
# Layout: 8-byte magic, u32 little-endian header length, UTF-8 JSON header
# {modules, metadata, param_count}, then param_count little-endian float64s.

ARTIFACT_MAGIC = b"NAVMODEL"
_HEADER_LEN_OFFSET = len(ARTIFACT_MAGIC)
_HEADER_OFFSET = _HEADER_LEN_OFFSET + 4


@dataclass
class ModelArtifact:
    """A trained network: architecture + flat parameters + provenance."""

    modules: list[ModuleSpec]
    params: np.ndarray
    metadata: dict  # robot_id, training_id, step, eval_score

    def instantiate(self) -> NetworkInstance:
        return NetworkInstance(self.modules, self.params.copy())


def save_model(artifact: ModelArtifact, path) -> None:
    import json

    header = json.dumps(
        {
            "modules": [m.to_dict() for m in artifact.modules],
            "metadata": artifact.metadata,
            "param_count": int(artifact.params.size),
        }
    ).encode("utf-8")
    payload = np.ascontiguousarray(artifact.params, dtype="<f8").tobytes()
    blob = ARTIFACT_MAGIC + len(header).to_bytes(4, "little") + header + payload
    with open(path, "wb") as f:
        f.write(blob)


def load_model(path) -> ModelArtifact:
    import json

    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER_OFFSET:
        raise ValueError(f"truncated artifact at byte {len(data)}: header incomplete")
    if data[:_HEADER_LEN_OFFSET] != ARTIFACT_MAGIC:
        raise ValueError("bad magic at byte 0")
    header_len = int.from_bytes(data[_HEADER_LEN_OFFSET:_HEADER_OFFSET], "little")
    body_start = _HEADER_OFFSET + header_len
    if len(data) < body_start:
        raise ValueError(f"truncated artifact at byte {len(data)}: header needs {body_start} bytes")
    try:
        header = json.loads(data[_HEADER_OFFSET:body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"corrupt header at byte {_HEADER_OFFSET}: {exc}") from exc
    modules, violations = parse_modules(header.get("modules", []))
    if violations:
        raise ValueError(f"corrupt header at byte {_HEADER_OFFSET}: {violations[0]}")
    count = int(header.get("param_count", -1))
    expected_end = body_start + 8 * count
    if count < 0 or len(data) < expected_end:
        raise ValueError(
            f"truncated artifact at byte {len(data)}: parameters end at byte {expected_end}"
        )
    params = np.frombuffer(data[body_start:expected_end], dtype="<f8").astype(np.float64)
    return ModelArtifact(modules=modules, params=params, metadata=header.get("metadata", {}))


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), t=0)


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, AdamState]:
    """Standard bias-corrected Adam update, in place on params."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError("shape mismatch")
    state.t += 1
    state.m *= beta1
    state.m += (1 - beta1) * grads
    state.v *= beta2
    state.v += (1 - beta2) * grads * grads
    m_hat = state.m / (1 - beta1**state.t)
    v_hat = state.v / (1 - beta2**state.t)
    params -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, state
