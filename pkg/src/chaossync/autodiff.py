"""Minimal reverse-mode autodiff over (channels x length) float64 tensors.

Only the primitives the generator and GRU stacks need are implemented; each
primitive carries a closed-form backward that is finite-difference checked in
the test suite.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    pass


class UsageError(RuntimeError):
    pass


_ACTIVE_TAPE = None


class Tape:
    """Records tensors in creation order so backward can replay them reversed."""

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        global _ACTIVE_TAPE
        self._prev = _ACTIVE_TAPE
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, *exc):
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = self._prev
        return False

    def clear(self):
        self.nodes.clear()


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward
        if _ACTIVE_TAPE is not None and parents:
            _ACTIVE_TAPE.nodes.append(self)

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        other = _lift(other)
        _same_shape_or_scalar(self, other)

        def bwd(g, a=self, b=other):
            a._accumulate(_unbroadcast(g, a.data.shape))
            b._accumulate(_unbroadcast(g, b.data.shape))

        return Tensor(self.data + other.data, parents=(self, other), backward=bwd)

    def __sub__(self, other):
        other = _lift(other)
        _same_shape_or_scalar(self, other)

        def bwd(g, a=self, b=other):
            a._accumulate(_unbroadcast(g, a.data.shape))
            b._accumulate(_unbroadcast(-g, b.data.shape))

        return Tensor(self.data - other.data, parents=(self, other), backward=bwd)

    def __mul__(self, other):
        other = _lift(other)
        _same_shape_or_scalar(self, other)

        def bwd(g, a=self, b=other):
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

        return Tensor(self.data * other.data, parents=(self, other), backward=bwd)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        def bwd(g, a=self):
            a._accumulate(-g)

        return Tensor(-self.data, parents=(self,), backward=bwd)

    def sum(self):
        def bwd(g, a=self):
            a._accumulate(np.full_like(a.data, float(g)))

        return Tensor(self.data.sum(), parents=(self,), backward=bwd)

    def mean(self):
        n = self.data.size

        def bwd(g, a=self):
            a._accumulate(np.full_like(a.data, float(g) / n))

        return Tensor(self.data.mean(), parents=(self,), backward=bwd)


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _same_shape_or_scalar(a, b):
    if a.data.shape != b.data.shape and a.data.ndim != 0 and b.data.ndim != 0:
        raise ShapeError(f"shape mismatch: {a.data.shape} vs {b.data.shape}")


def _unbroadcast(g, shape):
    g = np.asarray(g)
    if g.shape == shape:
        return g
    return np.full(shape, 1.0) * g.sum() if shape == () else g  # scalar parent


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a (m x n) @ b (n,) or (n x p)."""
    if a.data.shape[-1] != b.data.shape[0]:
        raise ShapeError(f"matmul mismatch: {a.data.shape} vs {b.data.shape}")

    def bwd(g, a=a, b=b):
        if b.data.ndim == 1:
            a._accumulate(np.outer(g, b.data))
            b._accumulate(a.data.T @ g)
        else:
            a._accumulate(g @ b.data.T)
            b._accumulate(a.data.T @ g)

    return Tensor(a.data @ b.data, parents=(a, b), backward=bwd)


# -- activations --------------------------------------------------------


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def bwd(g, x=x, mask=mask):
        x._accumulate(g * mask)

    return Tensor(np.where(mask, x.data, 0.0), parents=(x,), backward=bwd)


def leaky_relu(x: Tensor, alpha: float = 0.2) -> Tensor:
    mask = x.data > 0

    def bwd(g, x=x, mask=mask):
        x._accumulate(g * np.where(mask, 1.0, alpha))

    return Tensor(np.where(mask, x.data, alpha * x.data), parents=(x,), backward=bwd)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def bwd(g, x=x, out=out):
        x._accumulate(g * (1.0 - out * out))

    return Tensor(out, parents=(x,), backward=bwd)


def sigmoid(x: Tensor) -> Tensor:
    out = 1.0 / (1.0 + np.exp(-x.data))

    def bwd(g, x=x, out=out):
        x._accumulate(g * out * (1.0 - out))

    return Tensor(out, parents=(x,), backward=bwd)


def activation(x: Tensor, kind: str, alpha: float = 0.2) -> Tensor:
    if kind == "relu":
        return relu(x)
    if kind == "leaky_relu":
        return leaky_relu(x, alpha)
    if kind == "tanh":
        return tanh(x)
    if kind == "sigmoid":
        return sigmoid(x)
    raise UsageError(f"unknown activation {kind!r}")


# -- convolutions -------------------------------------------------------


def conv_transpose_1d(x: Tensor, w: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Transposed 1-D convolution.

    x: (C_in, L_in); w: (C_in, C_out, K).
    Output (C_out, (L_in-1)*stride - 2*padding + K).
    """
    if stride < 1 or padding < 0:
        raise ShapeError("stride >= 1 and padding >= 0 required")
    if x.data.ndim != 2 or w.data.ndim != 3 or x.data.shape[0] != w.data.shape[0]:
        raise ShapeError(f"conv_transpose_1d shapes: input {x.data.shape}, kernel {w.data.shape}")
    cin, lin = x.data.shape
    _, cout, k = w.data.shape
    full = (lin - 1) * stride + k
    lout = full - 2 * padding
    if lout < 1:
        raise ShapeError(f"conv_transpose_1d shapes: input {x.data.shape}, kernel {w.data.shape} give empty output")
    # one contiguous matmul for all kernel taps, then strided scatter-adds
    taps = np.ascontiguousarray(w.data.transpose(2, 1, 0)).reshape(k * cout, cin) @ x.data
    taps = taps.reshape(k, cout, lin)
    buf = np.zeros((cout, full))
    for kk in range(k):
        buf[:, kk : kk + (lin - 1) * stride + 1 : stride] += taps[kk]
    out = np.ascontiguousarray(buf[:, padding : padding + lout])

    def bwd(g, x=x, w=w):
        gf = np.zeros((cout, full))
        gf[:, padding : padding + lout] = g
        # gather the strided views once; then two BLAS calls
        s = np.empty((cout, k, lin))
        for kk in range(k):
            s[:, kk, :] = gf[:, kk : kk + (lin - 1) * stride + 1 : stride]
        s2 = s.reshape(cout * k, lin)
        x._accumulate(w.data.reshape(cin, cout * k) @ s2)
        w._accumulate((x.data @ s2.T).reshape(cin, cout, k))

    return Tensor(out, parents=(x, w), backward=bwd)


def conv1d(x: Tensor, w: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Strided 1-D convolution (cross-correlation).

    x: (C_in, L_in); w: (C_out, C_in, K).
    Output (C_out, (L_in + 2*padding - K)//stride + 1).
    """
    if x.data.ndim != 2 or w.data.ndim != 3 or x.data.shape[0] != w.data.shape[1]:
        raise ShapeError(f"conv1d shapes: input {x.data.shape}, kernel {w.data.shape}")
    cin, lin = x.data.shape
    cout, _, k = w.data.shape
    lp = lin + 2 * padding
    if lp < k:
        raise ShapeError(f"conv1d shapes: input {x.data.shape}, kernel {w.data.shape} give empty output")
    lout = (lp - k) // stride + 1
    xp = np.zeros((cin, lp))
    xp[:, padding : padding + lin] = x.data
    # gather strided input windows once; single matmul over (C_in*K)
    xg = np.empty((cin, k, lout))
    for kk in range(k):
        xg[:, kk, :] = xp[:, kk : kk + (lout - 1) * stride + 1 : stride]
    xg2 = xg.reshape(cin * k, lout)
    out = w.data.reshape(cout, cin * k) @ xg2

    def bwd(g, x=x, w=w, xg2=xg2):
        gxk = (w.data.reshape(cout, cin * k).T @ g).reshape(cin, k, lout)
        gxp = np.zeros((cin, lp))
        for kk in range(k):
            gxp[:, kk : kk + (lout - 1) * stride + 1 : stride] += gxk[:, kk, :]
        x._accumulate(gxp[:, padding : padding + lin])
        w._accumulate((g @ xg2.T).reshape(cout, cin, k))

    return Tensor(out, parents=(x, w), backward=bwd)


# -- batch norm ---------------------------------------------------------


class RunningStats:
    """Per-channel running mean/variance for eval-mode batch norm."""

    def __init__(self, channels: int, momentum: float = 0.1):
        self.mean = np.zeros(channels)
        self.var = np.ones(channels)
        self.momentum = momentum

    def update(self, mean, var):
        self.mean = (1.0 - self.momentum) * self.mean + self.momentum * mean
        self.var = (1.0 - self.momentum) * self.var + self.momentum * var


def batch_norm_1d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    eps: float = 1e-5,
    mode: str = "train",
    stats: RunningStats | None = None,
) -> Tensor:
    """Per-channel normalization over the length dimension, then affine."""
    if eps <= 0:
        raise UsageError("eps must be > 0")
    if x.data.ndim != 2:
        raise ShapeError(f"batch_norm_1d expects (C, L), got {x.data.shape}")
    c, n = x.data.shape
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise ShapeError(f"affine shapes {gamma.data.shape}/{beta.data.shape} do not match {c} channels")

    if mode == "train":
        m = x.data.mean(axis=1)
        v = x.data.var(axis=1)
        if stats is not None:
            stats.update(m, v)
    elif mode == "eval":
        if stats is None:
            raise UsageError("eval mode requires running stats")
        m, v = stats.mean, stats.var
    else:
        raise UsageError(f"unknown mode {mode!r}")

    inv = 1.0 / np.sqrt(v + eps)
    xhat = (x.data - m[:, None]) * inv[:, None]
    out = gamma.data[:, None] * xhat + beta.data[:, None]

    if mode == "train":

        def bwd(g, x=x, gamma=gamma, beta=beta, xhat=xhat, inv=inv, n=n):
            gamma._accumulate((g * xhat).sum(axis=1))
            beta._accumulate(g.sum(axis=1))
            gh = g * gamma.data[:, None]
            # standard batch-norm backward over the length axis
            gx = (
                gh - gh.mean(axis=1, keepdims=True) - xhat * (gh * xhat).mean(axis=1, keepdims=True)
            ) * inv[:, None]
            x._accumulate(gx)

    else:

        def bwd(g, x=x, gamma=gamma, beta=beta, xhat=xhat, inv=inv):
            gamma._accumulate((g * xhat).sum(axis=1))
            beta._accumulate(g.sum(axis=1))
            x._accumulate(g * (gamma.data * inv)[:, None])

    return Tensor(out, parents=(x, gamma, beta), backward=bwd)


# -- losses and shaping -------------------------------------------------


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    if pred.data.shape != target.data.shape:
        raise ShapeError(f"mse_loss shapes differ: {pred.data.shape} vs {target.data.shape}")
    diff = pred.data - target.data
    n = diff.size

    def bwd(g, pred=pred, target=target, diff=diff, n=n):
        gd = (2.0 * float(g) / n) * diff
        pred._accumulate(gd)
        target._accumulate(-gd)

    return Tensor((diff * diff).mean(), parents=(pred, target), backward=bwd)


def truncate(x: Tensor, length: int) -> Tensor:
    """Keep the first `length` columns; backward zero-pads."""
    if x.data.ndim != 2 or not (1 <= length <= x.data.shape[1]):
        raise ShapeError(f"cannot truncate shape {x.data.shape} to length {length}")

    def bwd(g, x=x, length=length):
        gx = np.zeros_like(x.data)
        gx[:, :length] = g
        x._accumulate(gx)

    return Tensor(x.data[:, :length], parents=(x,), backward=bwd)


# -- backward driver ----------------------------------------------------


def backward(loss: Tensor, tape: Tape | None = None) -> None:
    """Populate .grad for everything reachable from a scalar loss."""
    if loss.data.ndim != 0:
        raise UsageError("backward requires a scalar loss")
    order = _toposort(loss)
    loss.grad = np.array(1.0)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    if tape is not None:
        tape.clear()


def _toposort(root: Tensor):
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    return order


def zero_grads(params) -> None:
    for p in params:
        p.zero_grad()


# -- optimizers ---------------------------------------------------------


class GradientDescent:
    def __init__(self, params, lr: float):
        if lr <= 0:
            raise UsageError("lr must be > 0")
        self.params = list(params)
        self.lr = lr

    def step(self):
        for p in self.params:
            if p.grad is not None:
                p.data -= self.lr * p.grad


class RMSProp:
    """acc <- decay*acc + (1-decay)*g^2, step g/sqrt(acc + eps).

    With momentum > 0 the normalized gradient feeds a momentum buffer
    (buf <- momentum*buf + g/sqrt(acc+eps)) and the buffer is applied,
    matching the torch convention where "momentum" is a separate knob from
    the squared-gradient decay.
    """

    def __init__(self, params, lr: float = 1e-4, decay: float = 0.9, eps: float = 1e-8, momentum: float = 0.0):
        if lr <= 0:
            raise UsageError("lr must be > 0")
        self.params = list(params)
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.momentum = momentum
        self.acc = [np.zeros_like(p.data) for p in self.params]
        self.buf = [np.zeros_like(p.data) for p in self.params] if momentum > 0 else None

    def step(self):
        for i, (p, a) in enumerate(zip(self.params, self.acc)):
            if p.grad is None:
                continue
            a *= self.decay
            a += (1.0 - self.decay) * p.grad * p.grad
            g = p.grad / np.sqrt(a + self.eps)
            if self.buf is not None:
                b = self.buf[i]
                b *= self.momentum
                b += g
                g = b
            p.data -= self.lr * g


class Adam:
    def __init__(self, params, lr: float = 1e-4, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise UsageError("lr must be > 0")
        self.params = list(params)
        self.lr = lr
        self.b1 = b1
        self.b2 = b2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            m *= self.b1
            m += (1.0 - self.b1) * p.grad
            v *= self.b2
            v += (1.0 - self.b2) * p.grad * p.grad
            mhat = m / (1.0 - self.b1**self.t)
            vhat = v / (1.0 - self.b2**self.t)
            p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def gd_step(params, lr: float) -> None:
    GradientDescent(params, lr).step()


def rmsprop_step(params, state: RMSProp) -> None:
    state.step()


def adam_step(params, state: Adam) -> None:
    state.step()
