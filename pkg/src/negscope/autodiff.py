"""Small reverse-mode autodiff engine on top of numpy.

Graphs are built dynamically, one per instance, and recorded on a
:class:`Tape`.  Operations record a node whenever at least one input
requires a gradient; :func:`backward` walks the tape in reverse
construction order.

Conventions: vectors are rows, so a dense layer is ``x @ W`` with ``W`` of
shape ``(d_in, d_out)``.  Only two broadcasts are supported: a 1-D bias
added to every row of a 2-D tensor, and an ``(n, 1)`` column multiplying
an ``(n, d)`` matrix.
"""

from __future__ import annotations

import contextlib
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor", "Tape", "ShapeError", "GradCheckError", "GradCheckReport",
    "precision", "get_dtype", "parameter", "constant",
    "matmul", "add", "mul", "scale", "concat", "stack", "sigmoid", "tanh",
    "relu", "sum_over", "sum_rows", "total", "lookup", "scatter_rows",
    "dropout", "softmax", "cross_entropy", "backward", "grad_check",
]


class ShapeError(ValueError):
    """Operands of a primitive do not conform."""

    def __init__(self, primitive: str, *shapes):
        self.primitive = primitive
        self.shapes = tuple(tuple(s) for s in shapes)
        desc = " vs ".join(str(s) for s in self.shapes)
        super().__init__(f"{primitive}: incompatible shapes {desc}")


class GradCheckError(ValueError):
    pass


_state = threading.local()


def _dtypes() -> list:
    if not hasattr(_state, "dtype"):
        _state.dtype = [np.float32]
    return _state.dtype


def get_dtype():
    return _dtypes()[-1]


@contextlib.contextmanager
def precision(mode: str):
    """Set the float width of newly created tensors ("float32" or "float64")."""
    dtype = {"float32": np.float32, "float64": np.float64,
             "32": np.float32, "64": np.float64}[str(mode)]
    stack_ = _dtypes()
    stack_.append(dtype)
    try:
        yield dtype
    finally:
        stack_.pop()


def _tapes() -> list:
    if not hasattr(_state, "tapes"):
        _state.tapes = []
    return _state.tapes


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str = "", dtype=None):
        arr = np.asarray(data, dtype=dtype or get_dtype())
        if arr.ndim == 0:
            arr = arr.reshape(1)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True).reshape(self.data.shape)
        else:
            self.grad += g

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return _index(self, index)


def _result(arr: np.ndarray) -> Tensor:
    # op outputs keep their operands' dtype, whatever the ambient precision
    t = object.__new__(Tensor)
    t.data = arr if arr.ndim else arr.reshape(1)
    t.grad = None
    t.requires_grad = False
    t.name = ""
    return t


def parameter(data, name: str = "") -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


@dataclass
class _Node:
    op: str
    inputs: tuple
    output: Tensor
    backward: Callable[[np.ndarray], None]


class Tape:
    """Ordered record of the operations of one graph.

    Use as a context manager; operations executed inside the block are
    recorded.  Tapes nest, the innermost one records.
    """

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self):
        _tapes().append(self)
        return self

    def __exit__(self, *exc):
        _tapes().pop()

    def __len__(self):
        return len(self.nodes)

    def backward(self, loss: Tensor) -> None:
        if loss.size != 1:
            raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
        if not self.nodes:
            raise ValueError("backward on an empty tape")
        # intermediate buffers restart at zero; leaves keep accumulating
        for node in self.nodes:
            node.output.grad = None
        loss._accumulate(np.ones_like(loss.data))
        for node in reversed(self.nodes):
            g = node.output.grad
            if g is not None:
                node.backward(g)


def _record(op: str, inputs: tuple, out: Tensor, fn) -> Tensor:
    tapes = _tapes()
    if tapes and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tapes[-1].nodes.append(_Node(op, inputs, out, fn))
    return out


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else constant(x)


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    """Populate ``.grad`` of every requires-grad tensor reachable from ``loss``."""
    if tape is None:
        tapes = _tapes()
        if not tapes:
            raise ValueError("no active tape; pass one explicitly")
        tape = tapes[-1]
    tape.backward(loss)


# ---------------------------------------------------------------- primitives

def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim > 2 or b.data.ndim > 2 or a.shape[-1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    out = _result(a.data @ b.data)

    def fn(g):
        ad, bd = a.data, b.data
        if a.requires_grad:
            if bd.ndim == 1:
                ga = np.multiply.outer(g, bd) if ad.ndim == 2 else g * bd
            else:
                ga = g @ bd.T
            a._accumulate(ga)
        if b.requires_grad:
            if ad.ndim == 1:
                gb = np.outer(ad, g) if bd.ndim == 2 else ad * g
            else:
                gb = ad.T @ g
            b._accumulate(gb)

    return _record("matmul", (a, b), out, fn)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; a 1-D ``b`` is broadcast over the rows of a 2-D ``a``."""
    a, b = _wrap(a), _wrap(b)
    row_bias = a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]
    if a.shape != b.shape and not row_bias:
        raise ShapeError("add", a.shape, b.shape)
    out = _result(a.data + b.data)

    def fn(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(g.sum(axis=0) if row_bias else g)

    return _record("add", (a, b), out, fn)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; ``a`` may be an ``(n, 1)`` column gating ``b`` of shape ``(n, d)``."""
    a, b = _wrap(a), _wrap(b)
    column = (a.data.ndim == 2 and b.data.ndim == 2 and a.shape[1] == 1
              and a.shape[0] == b.shape[0] and b.shape[1] != 1)
    if a.shape != b.shape and not column:
        raise ShapeError("mul", a.shape, b.shape)
    out = _result(a.data * b.data)

    def fn(g):
        if a.requires_grad:
            ga = g * b.data
            a._accumulate(ga.sum(axis=1, keepdims=True) if column else ga)
        if b.requires_grad:
            b._accumulate(g * a.data)

    return _record("mul", (a, b), out, fn)


def scale(a: Tensor, c: float) -> Tensor:
    out = _result(a.data * c)
    return _record("scale", (a,), out, lambda g: a._accumulate(g * c))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat")
    ndim = tensors[0].data.ndim
    for t in tensors[1:]:
        other = [s for i, s in enumerate(t.shape) if i != axis % ndim]
        first = [s for i, s in enumerate(tensors[0].shape) if i != axis % ndim]
        if t.data.ndim != ndim or other != first:
            raise ShapeError("concat", tensors[0].shape, t.shape)
    out = _result(np.concatenate([t.data for t in tensors], axis=axis))
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def fn(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * ndim
                sl[axis] = slice(lo, hi)
                t._accumulate(g[tuple(sl)])

    return _record("concat", tuple(tensors), out, fn)


def stack(tensors: Sequence[Tensor]) -> Tensor:
    """Stack equal-length vectors as the rows of a matrix."""
    tensors = [_wrap(t) for t in tensors]
    shape = tensors[0].shape
    for t in tensors:
        if t.shape != shape or t.data.ndim != 1:
            raise ShapeError("stack", shape, t.shape)
    out = _result(np.stack([t.data for t in tensors]))

    def fn(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(g[i])

    return _record("stack", tuple(tensors), out, fn)


def _index(a: Tensor, index) -> Tensor:
    out = _result(a.data[index])
    basic = isinstance(index, (int, np.integer, slice)) or (
        isinstance(index, tuple) and all(isinstance(i, (int, np.integer, slice)) for i in index))

    def fn(g):
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        if basic:
            a.grad[index] += g
        else:
            np.add.at(a.grad, index, g)

    return _record("index", (a,), out, fn)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # split by sign to keep exp() from overflowing
    e = np.exp(-np.abs(x))
    s = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype, copy=False)
    out = _result(s)
    return _record("sigmoid", (a,), out, lambda g: a._accumulate(g * s * (1.0 - s)))


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)
    out = _result(t)
    return _record("tanh", (a,), out, lambda g: a._accumulate(g * (1.0 - t * t)))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    out = _result(a.data * mask)
    return _record("relu", (a,), out, lambda g: a._accumulate(g * mask))


def sum_over(tensors: Iterable[Tensor]) -> Tensor:
    """Sum of a set of same-shape tensors."""
    tensors = [_wrap(t) for t in tensors]
    if not tensors:
        raise ShapeError("sum_over")
    shape = tensors[0].shape
    acc = tensors[0].data.copy()
    for t in tensors[1:]:
        if t.shape != shape:
            raise ShapeError("sum_over", shape, t.shape)
        acc += t.data
    out = _result(acc)

    def fn(g):
        for t in tensors:
            if t.requires_grad:
                t._accumulate(g)

    return _record("sum_over", tuple(tensors), out, fn)


def sum_rows(a: Tensor) -> Tensor:
    """Column-wise sum of a matrix, i.e. the sum of its row vectors."""
    if a.data.ndim != 2:
        raise ShapeError("sum_rows", a.shape)
    out = _result(a.data.sum(axis=0))
    return _record("sum_rows", (a,), out,
                   lambda g: a._accumulate(np.broadcast_to(g, a.shape)))


def total(a: Tensor) -> Tensor:
    out = _result(a.data.sum())
    return _record("total", (a,), out,
                   lambda g: a._accumulate(np.broadcast_to(g.reshape(()), a.shape)))


def lookup(table: Tensor, rows) -> Tensor:
    """Embedding row lookup: an int gives a vector, a sequence gives a matrix."""
    if table.data.ndim != 2:
        raise ShapeError("lookup", table.shape)
    if isinstance(rows, (int, np.integer)):
        idx = int(rows)
    else:
        idx = np.asarray(rows, dtype=np.intp)
    out = _result(table.data[idx])

    def fn(g):
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, idx, g)

    return _record("lookup", (table,), out, fn)


def scatter_rows(a: Tensor, targets, n_rows: int) -> Tensor:
    """Sum row ``i`` of ``a`` into output row ``targets[i]``; output has ``n_rows`` rows."""
    targets = np.asarray(targets, dtype=np.intp)
    if a.data.ndim != 2 or targets.shape[0] != a.shape[0]:
        raise ShapeError("scatter_rows", a.shape, targets.shape)
    acc = np.zeros((n_rows, a.shape[1]), dtype=a.data.dtype)
    np.add.at(acc, targets, a.data)
    out = _result(acc)
    return _record("scatter_rows", (a,), out, lambda g: a._accumulate(g[targets]))


def dropout(a: Tensor, rate: float, rng: np.random.Generator | None, train: bool = True,
            shape=None) -> Tensor:
    """Inverted dropout.  ``shape`` overrides the mask shape, e.g. ``(n, 1)`` drops whole rows."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not train or rate == 0.0:
        return a
    mask_shape = a.shape if shape is None else shape
    keep = (rng.random(mask_shape) >= rate).astype(a.data.dtype) / (1.0 - rate)
    out = _result(a.data * keep)
    return _record("dropout", (a,), out, lambda g: a._accumulate(g * keep))


def softmax(a: Tensor) -> Tensor:
    """Softmax along the last axis."""
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=-1, keepdims=True)
    out = _result(p)

    def fn(g):
        a._accumulate(p * (g - (g * p).sum(axis=-1, keepdims=True)))

    return _record("softmax", (a,), out, fn)


def cross_entropy(probs: Tensor, targets, weights=None) -> Tensor:
    """Summed negative log-likelihood of ``targets`` under row distributions ``probs``.

    ``weights`` (one per row) scales each row's term; zero drops the row.
    """
    p = probs.data
    if p.ndim == 1:
        p2 = p[None, :]
    else:
        p2 = p
    targets = np.atleast_1d(np.asarray(targets, dtype=np.intp))
    if targets.shape[0] != p2.shape[0]:
        raise ShapeError("cross_entropy", probs.shape, targets.shape)
    w = np.ones(p2.shape[0], dtype=p.dtype) if weights is None else np.asarray(weights, dtype=p.dtype)
    rows = np.arange(p2.shape[0])
    picked = np.maximum(p2[rows, targets], np.finfo(p.dtype).tiny)
    out = _result(-(w * np.log(picked)).sum())

    def fn(g):
        full = np.zeros_like(p2)
        full[rows, targets] = -g.reshape(()) * w / picked
        probs._accumulate(full.reshape(p.shape))

    return _record("cross_entropy", (probs,), out, fn)


# ------------------------------------------------------------ gradient check

@dataclass
class GradCheckReport:
    max_rel_error: float
    tolerance: float
    worst_parameter: str = ""
    checked: int = 0
    errors: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


def grad_check(f: Callable[[], Tensor], params: dict, eps: float = 1e-5, tol: float = 1e-4,
               max_entries: int | None = None, rng: np.random.Generator | None = None,
               floor: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    ``f`` builds the graph from scratch and returns a scalar loss; ``params``
    maps names to parameter tensors.  Must be called with 64-bit tensors.
    The relative error of one entry is ``|a - n| / max(|a|, |n|, floor)``.
    With ``max_entries`` set, at most that many entries per parameter are
    probed, chosen by ``rng``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    for name, p in params.items():
        if p.data.dtype != np.float64:
            raise GradCheckError(f"parameter {name!r} is {p.data.dtype}; grad_check needs float64")
        p.zero_grad()
    with Tape() as tape:
        loss = f()
    if not np.isfinite(loss.data).all():
        raise GradCheckError("loss is not finite")
    tape.backward(loss)
    rng = rng or np.random.default_rng(0)

    report = GradCheckReport(0.0, tol)
    for name, p in params.items():
        analytic = np.zeros_like(p.data) if p.grad is None else p.grad.copy()
        if not np.isfinite(analytic).all():
            raise GradCheckError(f"non-finite analytic gradient for {name!r}")
        flat = p.data.reshape(-1)
        entries = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            entries = rng.choice(flat.size, size=max_entries, replace=False)
        worst = 0.0
        for i in entries:
            orig = flat[i]
            flat[i] = orig + eps
            up = float(f().data.sum())
            flat[i] = orig - eps
            down = float(f().data.sum())
            flat[i] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise GradCheckError(f"non-finite loss when perturbing {name!r}[{i}]")
            numeric = (up - down) / (2 * eps)
            a = float(analytic.reshape(-1)[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, err)
            report.checked += 1
        report.errors[name] = worst
        if worst >= report.max_rel_error:
            report.max_rel_error = worst
            report.worst_parameter = name
    return report
