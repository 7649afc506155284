"""Dense float64 tensors with reverse-mode automatic differentiation.

Ops record onto an explicit :class:`Tape`; one backward pass per tape.
All storage is float64 and every op output is checked for finiteness,
so NaN/Inf surfaces as an error instead of propagating silently.
Broadcasting is limited to tensor-scalar; anything else is a shape error.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "TensorError",
    "backward",
    "grad_check",
    "add",
    "sub",
    "mul",
    "matmul",
    "square",
    "sqrt",
    "absval",
    "sigmoid",
    "ssum",
    "mean",
    "scale",
    "neg",
    "concat",
    "slice_axis",
    "reshape",
    "add_rowvec",
    "rownorm",
    "frame_signal",
    "overlap_add",
]


class TensorError(ValueError):
    """Shape mismatch, domain violation, or non-finite value in an op."""


def _as_f64(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    return arr


class Tape:
    """Ordered record of ops for a single reverse pass.

    Nodes are appended in execution order, so parents always precede
    children. A tape is consumed by its first backward pass; reuse raises.
    """

    def __init__(self):
        self._nodes: list[tuple[int, list[tuple[int, Callable[[np.ndarray], np.ndarray]]]]] = []
        self._leaves: list[Tensor] = []
        self._count = 0
        self._consumed = False

    def leaf(self, data) -> "Tensor":
        """Create a tracked leaf tensor (a gradient target)."""
        arr = _as_f64(data)
        if not np.all(np.isfinite(arr)):
            raise TensorError("leaf tensor contains non-finite values")
        t = Tensor(arr, tape=self, tid=self._new_id())
        self._leaves.append(t)
        return t

    def _new_id(self) -> int:
        tid = self._count
        self._count += 1
        return tid

    def _append(self, out_tid, parents) -> None:
        self._nodes.append((out_tid, parents))


class Tensor:
    """n-d float64 array, optionally recorded on a tape."""

    __slots__ = ("data", "tape", "tid")

    def __init__(self, data, tape: Tape | None = None, tid: int | None = None):
        self.data = _as_f64(data)
        self.tape = tape
        self.tid = tid

    @staticmethod
    def const(data) -> "Tensor":
        """Untracked constant."""
        return Tensor(data)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise TensorError(f"item() on non-scalar tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        tag = "tracked" if self.tape is not None else "const"
        return f"Tensor({tag}, shape={self.shape})"

    # arithmetic sugar; scalars allowed on either side
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)


def _wrap(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _is_scalar(t: Tensor) -> bool:
    return t.data.size == 1


def _find_tape(tensors: Sequence[Tensor]) -> Tape | None:
    tape = None
    for t in tensors:
        if t.tape is None:
            continue
        if tape is None:
            tape = t.tape
        elif tape is not t.tape:
            raise TensorError("operands recorded on different tapes")
    return tape


def _check_finite(arr: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise TensorError(f"non-finite values produced by op '{op}'")


# overflow surfaces as a TensorError from the finite check, not as a warning
def _quiet():
    return np.errstate(over="ignore", invalid="ignore", divide="ignore")


def _make(out_data: np.ndarray, op: str, parents: list[tuple[Tensor, Callable]]) -> Tensor:
    """Build the result tensor, recording a node iff any parent is tracked."""
    _check_finite(out_data, op)
    tape = _find_tape([p for p, _ in parents])
    if tape is None:
        return Tensor(out_data)
    recorded = [(p.tid, vjp) for p, vjp in parents if p.tape is not None]
    out = Tensor(out_data, tape=tape, tid=tape._new_id())
    tape._append(out.tid, recorded)
    return out


def _reduce_to(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Collapse a gradient onto a scalar operand's shape."""
    if grad.shape == shape:
        return grad
    return np.sum(grad).reshape(shape)


# ---------------------------------------------------------------------------
# elementwise / binary ops


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise TensorError(f"add: shape mismatch {a.shape} vs {b.shape}")
    with _quiet():
        out = a.data + b.data
    return _make(out, "add", [
        (a, lambda g, sa=a.shape: _reduce_to(g, sa)),
        (b, lambda g, sb=b.shape: _reduce_to(g, sb)),
    ])


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise TensorError(f"sub: shape mismatch {a.shape} vs {b.shape}")
    with _quiet():
        out = a.data - b.data
    return _make(out, "sub", [
        (a, lambda g, sa=a.shape: _reduce_to(g, sa)),
        (b, lambda g, sb=b.shape: _reduce_to(-g, sb)),
    ])


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise TensorError(f"mul: shape mismatch {a.shape} vs {b.shape}")
    with _quiet():
        out = a.data * b.data
    return _make(out, "mul", [
        (a, lambda g, bd=b.data, sa=a.shape: _reduce_to(g * bd, sa)),
        (b, lambda g, ad=a.data, sb=b.shape: _reduce_to(g * ad, sb)),
    ])


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise TensorError(f"matmul: expects 2-d operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise TensorError(f"matmul: inner dims differ {a.shape} @ {b.shape}")
    with _quiet():
        out = a.data @ b.data
    return _make(out, "matmul", [
        (a, lambda g, bd=b.data: g @ bd.T),
        (b, lambda g, ad=a.data: ad.T @ g),
    ])


def scale(a, s: float) -> Tensor:
    a = _wrap(a)
    s = float(s)
    with _quiet():
        out = a.data * s
    return _make(out, "scale", [(a, lambda g, s=s: g * s)])


def neg(a) -> Tensor:
    return scale(a, -1.0)


# ---------------------------------------------------------------------------
# elementwise unary ops


def square(a) -> Tensor:
    a = _wrap(a)
    with _quiet():
        out = a.data * a.data
    return _make(out, "square", [(a, lambda g, ad=a.data: g * (2.0 * ad))])


def sqrt(a) -> Tensor:
    a = _wrap(a)
    if np.any(a.data < 0.0):
        raise TensorError("sqrt: negative argument")
    out = np.sqrt(a.data)
    return _make(out, "sqrt", [(a, lambda g, od=out: g * (0.5 / od))])


def absval(a) -> Tensor:
    a = _wrap(a)
    out = np.abs(a.data)
    return _make(out, "absval", [(a, lambda g, ad=a.data: g * np.sign(ad))])


def sigmoid(a) -> Tensor:
    a = _wrap(a)
    ad = a.data
    out = np.empty_like(ad)
    pos = ad >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-ad[pos]))
    e = np.exp(ad[~pos])
    out[~pos] = e / (1.0 + e)
    return _make(out, "sigmoid", [(a, lambda g, od=out: g * (od * (1.0 - od)))])


# ---------------------------------------------------------------------------
# reductions


def ssum(a, axis: int | None = None) -> Tensor:
    a = _wrap(a)
    if axis is None:
        out = np.sum(a.data).reshape(())
        return _make(out, "sum", [(a, lambda g, sh=a.shape: np.broadcast_to(g, sh))])
    if not -a.data.ndim <= axis < a.data.ndim:
        raise TensorError(f"sum: axis {axis} out of range for shape {a.shape}")
    out = np.sum(a.data, axis=axis)
    return _make(out, "sum", [
        (a, lambda g, ax=axis, sh=a.shape: np.broadcast_to(np.expand_dims(g, ax), sh)),
    ])


def mean(a) -> Tensor:
    a = _wrap(a)
    n = a.data.size
    out = np.mean(a.data).reshape(())
    return _make(out, "mean", [(a, lambda g, sh=a.shape, n=n: np.broadcast_to(g / n, sh))])


# ---------------------------------------------------------------------------
# structure ops


def concat(parts: Sequence, axis: int = 0) -> Tensor:
    parts = [_wrap(p) for p in parts]
    if not parts:
        raise TensorError("concat: empty input")
    out = np.concatenate([p.data for p in parts], axis=axis)
    offsets = np.cumsum([0] + [p.data.shape[axis] for p in parts])

    def make_vjp(lo, hi, ax):
        def vjp(g):
            sl = [slice(None)] * g.ndim
            sl[ax] = slice(lo, hi)
            return g[tuple(sl)]
        return vjp

    ax = axis % out.ndim
    parents = [
        (p, make_vjp(int(offsets[i]), int(offsets[i + 1]), ax))
        for i, p in enumerate(parts)
    ]
    return _make(out, "concat", parents)


def slice_axis(a, start: int, stop: int, axis: int = 0) -> Tensor:
    a = _wrap(a)
    n = a.data.shape[axis]
    if not (0 <= start <= stop <= n):
        raise TensorError(f"slice [{start}:{stop}] out of range for axis {axis} of shape {a.shape}")
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(start, stop)
    out = a.data[tuple(sl)]

    def vjp(g, sh=a.shape, sl=tuple(sl)):
        full = np.zeros(sh)
        full[sl] = g
        return full

    return _make(np.ascontiguousarray(out), "slice", [(a, vjp)])


def reshape(a, shape) -> Tensor:
    a = _wrap(a)
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != a.data.size:
        raise TensorError(f"reshape: cannot view {a.shape} as {shape}")
    out = a.data.reshape(shape)
    return _make(out, "reshape", [(a, lambda g, sh=a.shape: g.reshape(sh))])


def add_rowvec(mat, vec) -> Tensor:
    """matrix (m, n) + row vector (n,), gradient for vec is the column sum."""
    mat, vec = _wrap(mat), _wrap(vec)
    if mat.data.ndim != 2 or vec.data.ndim != 1 or mat.shape[1] != vec.shape[0]:
        raise TensorError(f"add_rowvec: incompatible shapes {mat.shape} and {vec.shape}")
    out = mat.data + vec.data[None, :]
    return _make(out, "add_rowvec", [
        (mat, lambda g: g),
        (vec, lambda g: np.sum(g, axis=0)),
    ])


def rownorm(a) -> Tensor:
    """Per-row l2 norm of a 2-d tensor; subgradient 0 at all-zero rows."""
    a = _wrap(a)
    if a.data.ndim != 2:
        raise TensorError(f"rownorm: expects 2-d input, got {a.shape}")
    with _quiet():
        out = np.sqrt(np.sum(a.data * a.data, axis=1))

    def vjp(g, ad=a.data, od=out):
        safe = np.where(od > 0.0, od, 1.0)
        coef = np.where(od > 0.0, g / safe, 0.0)
        return coef[:, None] * ad

    return _make(out, "rownorm", [(a, vjp)])


# ---------------------------------------------------------------------------
# framing ops (gradient of one is the forward of the other)


def _ola(frames: np.ndarray, hop: int) -> np.ndarray:
    n_frames, win = frames.shape
    out_len = (n_frames - 1) * hop + win
    out = np.zeros(out_len)
    if win % hop == 0:
        # blocks of width hop land on disjoint rows per shift, so a
        # reshaped view accepts a vectorized +=
        for j in range(win // hop):
            out[j * hop: j * hop + n_frames * hop].reshape(n_frames, hop)[:] += \
                frames[:, j * hop:(j + 1) * hop]
    else:
        for m in range(n_frames):
            out[m * hop: m * hop + win] += frames[m]
    return out


def _gather_frames(x: np.ndarray, window: int, hop: int) -> np.ndarray:
    view = np.lib.stride_tricks.sliding_window_view(x, window)[::hop]
    return np.ascontiguousarray(view)


def frame_signal(x, window: int, hop: int) -> Tensor:
    """Overlapping frames of a 1-d signal; requires exact frame cover."""
    x = _wrap(x)
    if x.data.ndim != 1:
        raise TensorError(f"frame_signal: expects 1-d input, got {x.shape}")
    n = x.data.shape[0]
    if n < window:
        raise TensorError(f"frame_signal: length {n} shorter than window {window}")
    if (n - window) % hop != 0:
        raise TensorError(f"frame_signal: length {n} is not window + k*hop (window={window}, hop={hop})")
    out = _gather_frames(x.data, window, hop)
    return _make(out, "frame_signal", [(x, lambda g, h=hop: _ola(g, h))])


def overlap_add(frames, hop: int) -> Tensor:
    """Overlap-add synthesis of (n_frames, window) into a 1-d signal."""
    frames = _wrap(frames)
    if frames.data.ndim != 2:
        raise TensorError(f"overlap_add: expects 2-d input, got {frames.shape}")
    win = frames.data.shape[1]
    out = _ola(frames.data, hop)
    return _make(out, "overlap_add", [
        (frames, lambda g, w=win, h=hop: _gather_frames(g, w, h)),
    ])


# ---------------------------------------------------------------------------
# backward pass and gradient checking


def backward(loss: Tensor) -> dict[Tensor, Tensor]:
    """Reverse pass from a scalar loss; returns {tracked leaf: gradient}.

    Consumes the tape: a second backward on the same tape raises.
    """
    if loss.tape is None:
        raise TensorError("backward: loss is not recorded on a tape")
    if loss.data.size != 1:
        raise TensorError(f"backward: loss must be scalar, got shape {loss.shape}")
    tape = loss.tape
    if tape._consumed:
        raise TensorError("backward: tape already consumed; rebuild the graph")
    tape._consumed = True

    grads: list[np.ndarray | None] = [None] * tape._count
    grads[loss.tid] = np.ones_like(loss.data)
    for out_tid, parents in reversed(tape._nodes):
        g = grads[out_tid]
        if g is None:
            continue
        for ptid, vjp in parents:
            contrib = vjp(g)
            if grads[ptid] is None:
                grads[ptid] = contrib
            else:
                grads[ptid] = grads[ptid] + contrib

    result: dict[Tensor, Tensor] = {}
    for leaf in tape._leaves:
        g = grads[leaf.tid]
        if g is None:
            g = np.zeros_like(leaf.data)
        g = np.asarray(g, dtype=np.float64).reshape(leaf.data.shape)
        _check_finite(g, "backward")
        result[leaf] = Tensor(g)
    return result


def grad_check(f: Callable[[Tensor], Tensor], point, step: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``f`` must map one tensor to a scalar tensor and be differentiable at
    ``point``. Relative error per coordinate uses a 1e-12 floor on the
    numeric value.
    """
    if step <= 0.0:
        raise TensorError("grad_check: step must be positive")
    point = _as_f64(point)

    tape = Tape()
    leaf = tape.leaf(point)
    out = f(leaf)
    if out.data.size != 1:
        raise TensorError("grad_check: f must be scalar-valued")
    analytic = backward(out)[leaf].data

    flat = point.reshape(-1)
    numeric = np.zeros_like(flat)
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + step
        hi = f(Tensor.const(bumped.reshape(point.shape))).item()
        bumped[i] = flat[i] - step
        lo = f(Tensor.const(bumped.reshape(point.shape))).item()
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise TensorError("grad_check: non-finite evaluation of f")
        numeric[i] = (hi - lo) / (2.0 * step)
    numeric = numeric.reshape(point.shape)

    denom = np.abs(numeric) + 1e-12
    return float(np.max(np.abs(analytic - numeric) / denom))
