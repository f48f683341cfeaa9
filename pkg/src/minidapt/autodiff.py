"""Dense float64 tensors with reverse-mode gradients.

Everything downstream (encoder, heads, losses) is built from the ops here.
All arrays are 64-bit so finite-difference checks are meaningful.
"""

import numpy as np


class ShapeError(ValueError):
    pass


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, (g, s) in enumerate(zip(grad.shape, shape)):
        if s == 1 and g != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


class Tensor:
    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._backward = lambda: None
        self._prev = ()

    @property
    def shape(self):
        return self.data.shape

    def _accum(self, g):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    # ---- graph construction helpers -------------------------------------

    def _child(self, data, prevs):
        out = Tensor(data, requires_grad=any(p.requires_grad for p in prevs))
        out._prev = tuple(prevs)
        return out

    # ---- arithmetic ------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Tensor):
            other = Tensor(other)
        out = self._child(self.data + other.data, (self, other))

        def _backward():
            self._accum(_unbroadcast(out.grad, self.data.shape))
            other._accum(_unbroadcast(out.grad, other.data.shape))

        out._backward = _backward
        return out

    __radd__ = __add__

    def __neg__(self):
        out = self._child(-self.data, (self,))
        out._backward = lambda: self._accum(-out.grad)
        return out

    def __sub__(self, other):
        if not isinstance(other, Tensor):
            other = Tensor(other)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Tensor):
            other = Tensor(other)
        out = self._child(self.data * other.data, (self, other))

        def _backward():
            self._accum(_unbroadcast(out.grad * other.data, self.data.shape))
            other._accum(_unbroadcast(out.grad * self.data, other.data.shape))

        out._backward = _backward
        return out

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def matmul(self, other):
        if not isinstance(other, Tensor):
            other = Tensor(other)
        if self.data.ndim < 1 or other.data.ndim < 2 or self.data.shape[-1] != other.data.shape[-2]:
            raise ShapeError(
                f"matmul: inner dimensions disagree for shapes "
                f"{tuple(self.data.shape)} and {tuple(other.data.shape)}"
            )
        out = self._child(self.data @ other.data, (self, other))

        def _backward():
            ga = out.grad @ np.swapaxes(other.data, -1, -2)
            gb = np.swapaxes(self.data, -1, -2) @ out.grad
            self._accum(_unbroadcast(ga, self.data.shape))
            other._accum(_unbroadcast(gb, other.data.shape))

        out._backward = _backward
        return out

    __matmul__ = matmul

    # ---- shape ops -------------------------------------------------------

    def reshape(self, *shape):
        orig = self.data.shape
        out = self._child(self.data.reshape(*shape), (self,))
        out._backward = lambda: self._accum(out.grad.reshape(orig))
        return out

    def transpose(self, *axes):
        inv = np.argsort(axes)
        out = self._child(self.data.transpose(axes), (self,))
        out._backward = lambda: self._accum(out.grad.transpose(inv))
        return out

    def __getitem__(self, idx):
        out = self._child(self.data[idx], (self,))

        def _backward():
            g = np.zeros_like(self.data)
            g[idx] = out.grad
            self._accum(g)

        out._backward = _backward
        return out

    # ---- reductions & nonlinearities ------------------------------------

    def sum(self):
        out = self._child(self.data.sum(), (self,))
        out._backward = lambda: self._accum(np.broadcast_to(out.grad, self.data.shape))
        return out

    def mean(self):
        return self.sum() / self.data.size

    def relu(self):
        out = self._child(np.maximum(self.data, 0.0), (self,))
        out._backward = lambda: self._accum(out.grad * (self.data > 0))
        return out

    def sigmoid(self):
        s = stable_sigmoid(self.data)
        out = self._child(s, (self,))
        out._backward = lambda: self._accum(out.grad * s * (1.0 - s))
        return out

    # ---- backward pass (the tape replay) ---------------------------------

    def backward(self):
        if self.data.ndim != 0 and self.data.size != 1:
            raise ShapeError(f"backward: loss must be scalar, got shape {self.data.shape}")
        tape = []
        visited = set()

        def build(node):
            if id(node) in visited:
                return
            visited.add(id(node))
            for p in node._prev:
                build(p)
            tape.append(node)

        build(self)
        if self.grad is None:
            self.grad = np.ones_like(self.data)
        for node in reversed(tape):
            if node.grad is not None:
                node._backward()


class Parameter(Tensor):
    """A named leaf tensor with a freeze flag; frozen parameters keep zero grads."""

    def __init__(self, name, value, trainable=True):
        super().__init__(value, requires_grad=trainable)
        self.name = name
        self.trainable = trainable
        self.zero_grad()

    def set_trainable(self, flag):
        self.trainable = flag
        self.requires_grad = flag
        self.zero_grad()


def stable_sigmoid(x):
    """Overflow-free sigmoid on ndarrays (branch on sign)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax_rows(x):
    """Softmax along the last axis with max-subtraction."""
    if not isinstance(x, Tensor):
        x = Tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)
    out = x._child(s, (x,))

    def _backward():
        g = out.grad
        x._accum(s * (g - (g * s).sum(axis=-1, keepdims=True)))

    out._backward = _backward
    return out


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize the last axis, then scale/shift by gamma/beta (shape [d])."""
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = x._child(xhat * gamma.data + beta.data, (x, gamma, beta))

    def _backward():
        g = out.grad
        d = x.data.shape[-1]
        sum_axes = tuple(range(g.ndim - 1))
        gamma._accum((g * xhat).sum(axis=sum_axes))
        beta._accum(g.sum(axis=sum_axes))
        gx = g * gamma.data
        x._accum(inv / d * (d * gx - gx.sum(axis=-1, keepdims=True)
                            - xhat * (gx * xhat).sum(axis=-1, keepdims=True)))

    out._backward = _backward
    return out


class BatchNormState:
    """Running statistics for one batch-norm layer (mutated only in train mode)."""

    def __init__(self, dim):
        self.running_mean = np.zeros(dim, dtype=np.float64)
        self.running_var = np.ones(dim, dtype=np.float64)

    def copy(self):
        c = BatchNormState(len(self.running_mean))
        c.running_mean = self.running_mean.copy()
        c.running_var = self.running_var.copy()
        return c


def batch_norm(x, gamma, beta, state, mode, momentum=0.1, eps=1e-5):
    """Batch normalization over axis 0 of a [B, d] tensor.

    Train mode uses batch statistics and updates `state` in place; eval mode
    reads `state` only.
    """
    if mode == "train":
        if x.data.shape[0] < 2:
            raise ShapeError("batch_norm: train mode needs batch size >= 2")
        mu = x.data.mean(axis=0)
        var = x.data.var(axis=0)
        state.running_mean = (1 - momentum) * state.running_mean + momentum * mu
        state.running_var = (1 - momentum) * state.running_var + momentum * var
    elif mode == "eval":
        mu = state.running_mean
        var = state.running_var
    else:
        raise ValueError(f"batch_norm: unknown mode {mode!r}")
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = x._child(xhat * gamma.data + beta.data, (x, gamma, beta))

    def _backward():
        g = out.grad
        gamma._accum((g * xhat).sum(axis=0))
        beta._accum(g.sum(axis=0))
        gx = g * gamma.data
        if mode == "train":
            n = x.data.shape[0]
            x._accum(inv / n * (n * gx - gx.sum(axis=0)
                                - xhat * (gx * xhat).sum(axis=0)))
        else:
            x._accum(gx * inv)

    out._backward = _backward
    return out


def embedding(table, ids):
    """Row lookup: table [V, d] indexed by an integer ndarray of any shape."""
    ids = np.asarray(ids)
    out = table._child(table.data[ids], (table,))

    def _backward():
        g = np.zeros_like(table.data)
        np.add.at(g, ids.reshape(-1), out.grad.reshape(-1, table.data.shape[1]))
        table._accum(g)

    out._backward = _backward
    return out


def dropout(x, rate, rng, mode):
    """Inverted dropout; identity in eval mode or at rate 0."""
    if mode != "train" or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout: train mode needs an rng")
    mask = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    out = x._child(x.data * mask, (x,))
    out._backward = lambda: x._accum(out.grad * mask)
    return out


IGNORE_LABEL = -100


def masked_cross_entropy(logits, labels, ignore=IGNORE_LABEL):
    """Mean cross-entropy in nats over positions whose label != ignore.

    logits: Tensor [..., V]; labels: integer ndarray of the leading shape.
    Returns a scalar Tensor; zero (no gradient) when nothing is labeled.
    """
    labels = np.asarray(labels)
    flat = logits.data.reshape(-1, logits.data.shape[-1])
    lab = labels.reshape(-1)
    sel = lab != ignore
    n = int(sel.sum())
    if n == 0:
        return Tensor(0.0)
    rows = flat[sel]
    m = rows.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(rows - m).sum(axis=1))
    picked = rows[np.arange(n), lab[sel]]
    loss = float((lse - picked).mean())
    out = logits._child(loss, (logits,))

    def _backward():
        g = np.zeros_like(flat)
        sm = np.exp(rows - lse[:, None])
        sm[np.arange(n), lab[sel]] -= 1.0
        g[sel] = sm / n
        logits._accum(float(out.grad) * g.reshape(logits.data.shape))

    out._backward = _backward
    return out


def bce_with_logits(logits, targets):
    """Mean binary cross-entropy from raw scores; stable for large |z|."""
    z = logits.data.reshape(-1)
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    loss = float((np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))).mean())
    out = logits._child(loss, (logits,))

    def _backward():
        g = (stable_sigmoid(z) - y) / z.size
        logits._accum(float(out.grad) * g.reshape(logits.data.shape))

    out._backward = _backward
    return out


def grad_check(f, params, fd_step=1e-5):
    """Max relative error between analytic gradients and central differences.

    f: zero-argument callable returning a scalar Tensor built from `params`.
    """
    for p in params:
        p.zero_grad()
    out = f()
    if not np.isfinite(out.data):
        raise ValueError("grad_check: non-finite objective")
    out.backward()
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        aflat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + fd_step
            hi = float(f().data)
            flat[i] = orig - fd_step
            lo = float(f().data)
            flat[i] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise ValueError("grad_check: non-finite objective during perturbation")
            fd = (hi - lo) / (2 * fd_step)
            denom = max(abs(aflat[i]), abs(fd), 1e-8)
            worst = max(worst, abs(aflat[i] - fd) / denom)
    return worst
