"""Dense float64 tensors with reverse-mode differentiation.

Every op below takes :class:`Tensor` (or plain arrays, treated as
constants) and returns a new :class:`Tensor`. When at least one input
requires a gradient the result remembers its parents and a closure that
pushes the output gradient back to them; :meth:`Tensor.backward` walks
that graph in reverse topological order.

Leading batch dimensions are supported throughout: ``affine`` contracts
only the last axis and ``gather`` indexes rows of a ``(B, N, d)`` tensor.
"""

from __future__ import annotations

import contextlib
import struct
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy import sparse

from .errors import CheckpointError, DimensionError, EmptyNeighborhoodError, NumericError

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = _parents
        self._backward: Callable[[np.ndarray], None] | None = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into ``.grad`` of every reachable tensor."""
        if grad is None:
            if self.data.size != 1:
                raise DimensionError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        _accumulate(self, np.asarray(grad, dtype=np.float64))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __getitem__(self, key):
        return getitem(self, key)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    # never mutate in place: ``g`` may be shared with a sibling or be a view
    if t.grad is None:
        t.grad = g
    else:
        t.grad = t.grad + g


def _make(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    if grad_enabled() and any(p.requires_grad for p in parents):
        return Tensor(data, True, tuple(parents), backward)
    return Tensor(data)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ----------------------------------------------------------------- elementwise


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g, b.shape))

    return _make(a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(-g, b.shape))

    return _make(a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.shape))

    return _make(a.data * b.data, (a, b), backward)


def square(x) -> Tensor:
    x = as_tensor(x)

    def backward(g):
        _accumulate(x, 2.0 * x.data * g)

    return _make(x.data * x.data, (x,), backward)


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0

    def backward(g):
        _accumulate(x, g * mask)

    return _make(np.where(mask, x.data, 0.0), (x,), backward)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    # split by sign so neither branch overflows exp()
    z = np.exp(-np.abs(x.data))
    y = np.where(x.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z))

    def backward(g):
        _accumulate(x, g * y * (1.0 - y))

    return _make(y, (x,), backward)


def identity(x) -> Tensor:
    return as_tensor(x)


ACTIVATIONS: dict[str, Callable[[Tensor], Tensor]] = {
    "relu": relu,
    "sigmoid": sigmoid,
    "identity": identity,
}


def activation(kind: str, x) -> Tensor:
    try:
        fn = ACTIVATIONS[kind]
    except KeyError:
        raise DimensionError(f"unknown activation {kind!r}") from None
    return fn(x)


# ----------------------------------------------------------------- reductions


def sum(x, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    x = as_tensor(x)
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(x, np.broadcast_to(g, x.shape))

    return _make(out, (x,), backward)


def mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    n = x.data.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return mul(sum(x, axis=axis, keepdims=keepdims), 1.0 / float(n))


def max_pool(x, axis: int = -2) -> Tensor:
    """Elementwise max over ``axis``; the gradient goes to the first argmax."""
    x = as_tensor(x)
    axis = axis % x.ndim
    if x.shape[axis] == 0:
        raise EmptyNeighborhoodError("max pooling over an empty neighbourhood")
    arg = np.expand_dims(np.argmax(x.data, axis=axis), axis)
    out = np.take_along_axis(x.data, arg, axis=axis).squeeze(axis)

    def backward(g):
        gx = np.zeros_like(x.data)
        np.put_along_axis(gx, arg, np.expand_dims(g, axis), axis=axis)
        _accumulate(x, gx)

    return _make(out, (x,), backward)


def edge_max(
    node,
    geo: np.ndarray,
    W: Tensor,
    geo_lo: int,
    table=None,
    index: np.ndarray | None = None,
    tag: np.ndarray | None = None,
    tag_row: int | None = None,
) -> Tensor:
    """Max-pooled edge messages, fused.

    For target ``i`` with edges ``c``::

        out[i] = max_c  node[i] + table[index[i, c]]
                        + geo[i, c] @ W[geo_lo : geo_lo + G] + tag[c] * W[tag_row]

    ``node`` is ``(..., N, C)``, ``geo`` ``(..., N, K, G)``, ``table``
    ``(..., S, C)`` with ``index`` ``(..., N, K)`` (per batch entry) and
    ``tag`` ``(K,)``. ``table`` and ``tag`` are optional. Gradients reach
    ``node``, ``table`` and the used rows of ``W``; as with
    :func:`max_pool` only the first maximising edge gets the gradient.
    """
    from . import _kernels

    node = as_tensor(node)
    C = node.shape[-1]
    N = node.shape[-2]
    lead = node.shape[:-2]
    geo = np.asarray(geo, dtype=np.float64)
    K, G = geo.shape[-2], geo.shape[-1]
    if geo.shape[:-2] != node.shape[:-1]:
        raise DimensionError(f"edge geometry {geo.shape} does not match targets {node.shape}")
    if K == 0:
        raise EmptyNeighborhoodError("max pooling over an empty neighbourhood")
    if W.shape[1] != C or geo_lo + G > W.shape[0]:
        raise DimensionError(f"weight {W.shape} does not fit {G} geometric inputs to {C} channels")
    B = int(np.prod(lead)) if lead else 1
    geo_f = np.ascontiguousarray(geo.reshape(B * N, K, G))
    w_geo = np.ascontiguousarray(W.data[geo_lo : geo_lo + G])
    if table is not None:
        table = as_tensor(table)
        if table.shape[:-2] != lead or table.shape[-1] != C:
            raise DimensionError(f"table {table.shape} does not match targets {node.shape}")
        S = table.shape[-2]
        idx = np.asarray(index, dtype=np.int64).reshape(B, N, K)
        if idx.size and (idx.min() < 0 or idx.max() >= S):
            raise DimensionError("edge index out of range")
        idx_f = np.ascontiguousarray((idx + (np.arange(B) * S)[:, None, None]).reshape(B * N, K))
        table_f = np.ascontiguousarray(table.data.reshape(B * S, C))
    else:
        S = 0
        idx_f = np.zeros((B * N, K), dtype=np.int64)
        table_f = np.zeros((0, C))
    if tag is not None:
        tag_f = np.ascontiguousarray(tag, dtype=np.float64)
        w_tag = np.ascontiguousarray(W.data[tag_row])
    else:
        tag_f, w_tag = np.zeros(0), np.zeros(C)
    out, arg = _kernels.edge_max_forward(
        np.ascontiguousarray(node.data.reshape(B * N, C)), table_f, idx_f, geo_f, w_geo, tag_f, w_tag
    )

    def backward(g):
        if node.requires_grad:
            _accumulate(node, g)
        g_table, g_geo, g_tag = _kernels.edge_max_backward(
            np.ascontiguousarray(g.reshape(B * N, C)), arg, idx_f, geo_f, tag_f, B * S
        )
        if table is not None and table.requires_grad:
            _accumulate(table, g_table.reshape(table.shape))
        if W.requires_grad:
            gW = np.zeros_like(W.data)
            gW[geo_lo : geo_lo + G] = g_geo
            if tag is not None:
                gW[tag_row] += g_tag
            _accumulate(W, gW)

    parents = (node, W) if table is None else (node, W, table)
    return _make(out.reshape(node.shape), parents, backward)


def max_pool_rows(x) -> Tensor:
    """Per-column maximum of an ``m x d`` matrix."""
    return max_pool(x, axis=0)


# ----------------------------------------------------------------- structure


def concat(xs: Sequence, axis: int = -1) -> Tensor:
    ts = [as_tensor(x) for x in xs]
    out = np.concatenate([t.data for t in ts], axis=axis)
    ax = axis % out.ndim
    bounds = np.cumsum([0] + [t.shape[ax] for t in ts])

    def backward(g):
        for t, lo, hi in zip(ts, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[ax] = slice(lo, hi)
                _accumulate(t, g[tuple(sl)])

    return _make(out, ts, backward)


def broadcast_to(x, shape: tuple[int, ...]) -> Tensor:
    x = as_tensor(x)

    def backward(g):
        _accumulate(x, _unbroadcast(g, x.shape))

    return _make(np.broadcast_to(x.data, shape), (x,), backward)


def reshape(x, shape: tuple[int, ...]) -> Tensor:
    x = as_tensor(x)

    def backward(g):
        _accumulate(x, g.reshape(x.shape))

    return _make(x.data.reshape(shape), (x,), backward)


def getitem(x, key) -> Tensor:
    """Basic (slice/int) indexing only; no fancy indexing."""
    x = as_tensor(x)

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[key] = g
        _accumulate(x, gx)

    return _make(x.data[key], (x,), backward)


def _scatter_rows(g: np.ndarray, index: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Adjoint of the row gather: sum rows of ``g`` into their source slots."""
    n, width = shape[-2], shape[-1]
    rows = index.reshape(index.shape[0], -1) if len(shape) == 3 else index.reshape(1, -1)
    offset = (np.arange(rows.shape[0]) * n)[:, None]
    flat = (rows + offset).ravel()
    total = rows.shape[0] * n
    # a 0/1 sparse matrix product sums duplicates exactly like np.add.at
    m = sparse.csr_matrix((np.ones(flat.size), (flat, np.arange(flat.size))), shape=(total, flat.size))
    return np.asarray(m @ g.reshape(flat.size, width)).reshape(shape)


def gather(x, index: np.ndarray) -> Tensor:
    """Row gather along axis -2.

    ``x`` is ``(N, d)`` with ``index`` of any shape, or ``(B, N, d)`` with
    ``index`` shaped ``(B, ...)``; the result is ``index.shape + (d,)``.
    """
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.intp)
    if x.ndim == 2:
        key = (index,)
    elif x.ndim == 3:
        if index.shape[0] != x.shape[0]:
            raise DimensionError(f"gather batch mismatch {index.shape} vs {x.shape}")
        b = np.arange(x.shape[0]).reshape((-1,) + (1,) * (index.ndim - 1))
        key = (b, index)
    else:
        raise DimensionError(f"gather expects rank 2 or 3, got {x.shape}")
    out = x.data[key]

    def backward(g):
        _accumulate(x, _scatter_rows(g, index, x.shape))

    return _make(out, (x,), backward)


# ----------------------------------------------------------------- parameters


@dataclass
class ParamGroup:
    """One learnable affine map: weight ``fan_in x fan_out`` and bias."""

    name: str
    W: Tensor
    b: Tensor

    @property
    def fan_in(self) -> int:
        return self.W.shape[0]

    @property
    def fan_out(self) -> int:
        return self.W.shape[1]

    def tensors(self) -> tuple[Tensor, Tensor]:
        return self.W, self.b


def affine(x, group: ParamGroup) -> Tensor:
    """``x @ W + b`` over the last axis of ``x``."""
    x = as_tensor(x)
    W, b = group.W, group.b
    if x.shape[-1] != W.shape[0]:
        raise DimensionError(
            f"{group.name}: input width {x.shape[-1]} != expected {W.shape[0]}"
        )
    out = x.data @ W.data + b.data

    def backward(g):
        if W.requires_grad:
            _accumulate(W, x.data.reshape(-1, W.shape[0]).T @ g.reshape(-1, W.shape[1]))
        if b.requires_grad:
            _accumulate(b, g.reshape(-1, W.shape[1]).sum(axis=0))
        if x.requires_grad:
            _accumulate(x, g @ W.data.T)

    return _make(out, (x, W, b), backward)


def linear_rows(x, W: Tensor, lo: int, hi: int) -> Tensor:
    """``x @ W[lo:hi]``: one row block of a weight matrix, without bias.

    Lets a layer whose input is a concatenation apply each slice of its
    weight to the matching input piece separately, e.g. at node level
    before gathering onto edges.
    """
    x = as_tensor(x)
    if x.shape[-1] != hi - lo:
        raise DimensionError(f"input width {x.shape[-1]} != weight rows {hi - lo}")
    block = W.data[lo:hi]

    def backward(g):
        if W.requires_grad:
            gW = np.zeros_like(W.data)
            gW[lo:hi] = x.data.reshape(-1, hi - lo).T @ g.reshape(-1, W.shape[1])
            _accumulate(W, gW)
        if x.requires_grad:
            _accumulate(x, g @ block.T)

    return _make(x.data @ block, (x, W), backward)


class ParameterStore:
    """Named weight groups, created in registration order from one seed.

    Weights are Glorot-uniform, biases start at zero.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.groups: dict[str, ParamGroup] = {}
        self._rng = np.random.default_rng(self.seed)

    def add(self, name: str, fan_in: int, fan_out: int) -> ParamGroup:
        if name in self.groups:
            raise ValueError(f"parameter group {name!r} registered twice")
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        W = self._rng.uniform(-limit, limit, size=(fan_in, fan_out))
        group = ParamGroup(name, Tensor(W, True), Tensor(np.zeros(fan_out), True))
        self.groups[name] = group
        return group

    def __getitem__(self, name: str) -> ParamGroup:
        return self.groups[name]

    def __contains__(self, name: str) -> bool:
        return name in self.groups

    def __iter__(self) -> Iterator[ParamGroup]:
        return iter(self.groups.values())

    def __len__(self) -> int:
        return len(self.groups)

    def tensors(self) -> Iterator[tuple[str, Tensor]]:
        for g in self.groups.values():
            yield f"{g.name}/W", g.W
            yield f"{g.name}/b", g.b

    def zero_grad(self) -> None:
        for _, t in self.tensors():
            t.grad = None

    def num_parameters(self) -> int:
        return int(np.sum([t.data.size for _, t in self.tensors()]))

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.tensors()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        mine = dict(self.tensors())
        if set(mine) != set(arrays):
            missing = sorted(set(mine) ^ set(arrays))
            raise CheckpointError(f"parameter names do not match: {missing}")
        for k, t in mine.items():
            if t.shape != arrays[k].shape:
                raise CheckpointError(f"{k}: shape {arrays[k].shape} != {t.shape}")
            t.data = np.array(arrays[k], dtype=np.float64, copy=True)


class Adam:
    """Adam with elementwise gradient clamping to ``[-clip, clip]``."""

    def __init__(
        self,
        params: ParameterStore,
        lr: float = 1e-4,
        clip: float | None = 5.0,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.clip = clip
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(t.data) for k, t in params.tensors()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.tensors()}

    def clipped_grads(self) -> dict[str, np.ndarray]:
        grads = {}
        for k, t in self.params.tensors():
            g = np.zeros_like(t.data) if t.grad is None else t.grad
            if not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite gradient in {k}")
            grads[k] = g if self.clip is None else np.clip(g, -self.clip, self.clip)
        return grads

    def step(self) -> None:
        grads = self.clipped_grads()  # validates everything before any update
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for k, t in self.params.tensors():
            g = grads[k]
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * g
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * g * g
            t.data = t.data - self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def optimizer_step(opt: Adam) -> ParameterStore:
    opt.step()
    return opt.params


# ----------------------------------------------------------------- checking


def grad_check(
    f: Callable[[], Tensor],
    params: ParameterStore,
    h: float = 1e-5,
    samples: int = 64,
    seed: int = 0,
    floor: float = 1e-6,
    grads: dict[str, np.ndarray] | None = None,
) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``f`` recomputes the scalar loss from the current parameter values. Per
    group, ``samples`` coordinates are drawn from the flattened ``[W, b]``
    (all of them when the group is smaller). The relative error of one
    coordinate is ``|a - n| / max(|a|, |n|, floor)``. ``grads`` overrides
    the analytic gradients, for mutation testing.
    """
    if grads is None:
        params.zero_grad()
        loss = f()
        if not np.isfinite(loss.data).all():
            raise NumericError("non-finite loss")
        loss.backward()
        grads = {
            k: (np.zeros_like(t.data) if t.grad is None else t.grad.copy())
            for k, t in params.tensors()
        }
    rng = np.random.default_rng(seed)
    worst = 0.0
    with no_grad():
        for group in params:
            sizes = [group.W.data.size, group.b.data.size]
            total = sizes[0] + sizes[1]
            picks = rng.choice(total, size=min(samples, total), replace=False)
            for flat in picks:
                t, key = (group.W, f"{group.name}/W") if flat < sizes[0] else (group.b, f"{group.name}/b")
                idx = np.unravel_index(flat if flat < sizes[0] else flat - sizes[0], t.shape)
                orig = t.data[idx]
                t.data[idx] = orig + h
                fp = float(f().data)
                t.data[idx] = orig - h
                fm = float(f().data)
                t.data[idx] = orig
                if not (np.isfinite(fp) and np.isfinite(fm)):
                    raise NumericError("non-finite loss during finite differences")
                num = (fp - fm) / (2.0 * h)
                ana = float(grads[key][idx])
                err = abs(ana - num) / max(abs(ana), abs(num), floor)
                worst = max(worst, err)
    return worst


# ----------------------------------------------------------------- checkpoint

MAGIC = b"AGARCKPT"
VERSION = 1


def save_checkpoint(path, params: ParameterStore) -> None:
    """Binary dump: magic, version byte, seed, then named arrays as ``<f8``."""
    chunks = [MAGIC, struct.pack("<BqI", VERSION, params.seed, 2 * len(params))]
    for name, t in params.tensors():
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)) + raw)
        chunks.append(struct.pack("<B", t.ndim) + struct.pack(f"<{t.ndim}I", *t.shape))
        chunks.append(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def read_checkpoint(path) -> tuple[int, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:8] != MAGIC:
        raise CheckpointError(f"{path}: not an AGARCKPT file")
    pos = 8
    try:
        version, seed, count = struct.unpack_from("<BqI", buf, pos)
        pos += struct.calcsize("<BqI")
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported version {version}")
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (n,) = struct.unpack_from("<H", buf, pos)
            pos += 2
            name = buf[pos : pos + n].decode("utf-8")
            pos += n
            (ndim,) = struct.unpack_from("<B", buf, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}I", buf, pos)
            pos += 4 * ndim
            size = int(np.prod(shape))
            arrays[name] = np.frombuffer(buf, dtype="<f8", count=size, offset=pos).reshape(shape).astype(np.float64)
            pos += 8 * size
    except (struct.error, ValueError) as exc:
        raise CheckpointError(f"{path}: truncated checkpoint") from exc
    if pos != len(buf):
        raise CheckpointError(f"{path}: trailing bytes")
    return seed, arrays


def load_checkpoint(path, params: ParameterStore) -> ParameterStore:
    seed, arrays = read_checkpoint(path)
    params.load_arrays(arrays)
    params.seed = seed
    return params


def parameters_equal(a: ParameterStore, b: ParameterStore) -> bool:
    aa, bb = a.arrays(), b.arrays()
    return aa.keys() == bb.keys() and all(np.array_equal(aa[k], bb[k]) for k in aa)


def collect(tensors: Iterable[Tensor]) -> list[np.ndarray]:
    return [t.data for t in tensors]
