"""Minimal reverse-mode automatic differentiation.

Values are real numpy arrays; each operation records its parents and a
vector-Jacobian product.  Complex quantities are carried as ``CVar`` pairs of
real nodes.  Only the primitives defined here are differentiable: passing a
``Var`` to any other numpy function raises ``UnsupportedPrimitiveError`` at
graph-build time instead of silently dropping the gradient.
"""

from __future__ import annotations

import numpy as np


class UnsupportedPrimitiveError(TypeError):
    pass


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


class Var:
    __slots__ = ("value", "parents", "grad")

    def __init__(self, value, parents=()):
        self.value = np.asarray(value, dtype=float)
        self.parents = parents  # tuple of (Var, vjp)
        self.grad = None

    shape = property(lambda self: self.value.shape)
    ndim = property(lambda self: self.value.ndim)

    def __repr__(self):
        return f"Var({self.value!r})"

    # numpy interop: route known ufuncs to primitives, refuse everything else
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        table = {
            np.add: add,
            np.subtract: sub,
            np.multiply: mul,
            np.true_divide: div,
            np.negative: neg,
            np.exp: exp,
            np.log: log,
            np.sqrt: sqrt,
            np.sin: sin,
            np.cos: cos,
            np.tanh: tanh,
        }
        if method == "__call__" and ufunc in table and not kwargs:
            return table[ufunc](*inputs)
        raise UnsupportedPrimitiveError(f"{ufunc.__name__} is not a differentiable primitive")

    def __array_function__(self, func, types, args, kwargs):
        raise UnsupportedPrimitiveError(f"{func.__name__} is not a differentiable primitive")

    __add__ = lambda self, o: add(self, o)
    __radd__ = lambda self, o: add(o, self)
    __sub__ = lambda self, o: sub(self, o)
    __rsub__ = lambda self, o: sub(o, self)
    __mul__ = lambda self, o: mul(self, o)
    __rmul__ = lambda self, o: mul(o, self)
    __truediv__ = lambda self, o: div(self, o)
    __rtruediv__ = lambda self, o: div(o, self)
    __neg__ = lambda self: neg(self)
    __pow__ = lambda self, p: power(self, p)
    __matmul__ = lambda self, o: matmul(self, o)
    __rmatmul__ = lambda self, o: matmul(o, self)
    __getitem__ = lambda self, idx: getitem(self, idx)

    @property
    def T(self):
        return transpose(self)

    def sum(self, axis=None):
        return vsum(self, axis)

    def backward(self):
        """Accumulate d(self)/d(node) into ``node.grad`` for every ancestor."""
        if self.value.size != 1:
            raise ValueError("backward() needs a scalar output")
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p, _ in node.parents:
                if id(p) not in seen:
                    stack.append((p, False))
        for node in order:
            node.grad = None
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node.grad is None:
                continue
            for p, vjp in node.parents:
                g = vjp(node.grad)
                p.grad = g if p.grad is None else p.grad + g


def _val(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=float)


def _binary(a, b, value, ga, gb):
    parents = []
    if isinstance(a, Var):
        parents.append((a, lambda g: _unbroadcast(ga(g), a.shape)))
    if isinstance(b, Var):
        parents.append((b, lambda g: _unbroadcast(gb(g), b.shape)))
    return Var(value, tuple(parents))


def _unary(a, value, ga):
    return Var(value, ((a, ga),))


def add(a, b):
    return _binary(a, b, _val(a) + _val(b), lambda g: g, lambda g: g)


def sub(a, b):
    return _binary(a, b, _val(a) - _val(b), lambda g: g, lambda g: -g)


def mul(a, b):
    av, bv = _val(a), _val(b)
    return _binary(a, b, av * bv, lambda g: g * bv, lambda g: g * av)


def div(a, b):
    av, bv = _val(a), _val(b)
    return _binary(a, b, av / bv, lambda g: g / bv, lambda g: -g * av / bv**2)


def neg(a):
    return _unary(a, -a.value, lambda g: -g)


def power(a, p):
    if isinstance(p, Var):
        raise UnsupportedPrimitiveError("only constant exponents are supported")
    v = a.value
    return _unary(a, v**p, lambda g: g * p * v ** (p - 1))


def exp(a):
    e = np.exp(a.value)
    return _unary(a, e, lambda g: g * e)


def log(a):
    v = a.value
    return _unary(a, np.log(v), lambda g: g / v)


def sqrt(a):
    s = np.sqrt(a.value)
    return _unary(a, s, lambda g: g / (2 * s))


def sin(a):
    v = a.value
    return _unary(a, np.sin(v), lambda g: g * np.cos(v))


def cos(a):
    v = a.value
    return _unary(a, np.cos(v), lambda g: -g * np.sin(v))


def tanh(a):
    t = np.tanh(a.value)
    return _unary(a, t, lambda g: g * (1 - t * t))


def relu(a):
    v = a.value
    return _unary(a, np.maximum(v, 0.0), lambda g: g * (v > 0))


def abs_smooth(a, eps: float = 1e-12):
    """``sqrt(x^2 + eps^2) - eps``: differentiable stand-in for ``|x|``."""
    s = np.sqrt(a.value**2 + eps**2)
    return _unary(a, s - eps, lambda g: g * a.value / s)


def vsum(a, axis=None):
    v = a.value
    shape = v.shape

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, shape).copy()
        return np.broadcast_to(np.expand_dims(g, axis), shape).copy()

    return _unary(a, v.sum(axis=axis), vjp)


def mean(a, axis=None):
    n = a.value.size if axis is None else a.value.shape[axis]
    return vsum(a, axis) / n


def getitem(a, idx):
    v = a.value

    def vjp(g):
        out = np.zeros_like(v)
        np.add.at(out, idx, g)
        return out

    return _unary(a, v[idx], vjp)


def reshape(a, shape):
    old = a.value.shape
    return _unary(a, a.value.reshape(shape), lambda g: g.reshape(old))


def transpose(a):
    return _unary(a, a.value.T, lambda g: g.T)


def stack(items, axis=0):
    vals = [_val(x) for x in items]
    parents = []
    for i, x in enumerate(items):
        if isinstance(x, Var):
            parents.append((x, lambda g, i=i: np.take(g, i, axis=axis)))
    return Var(np.stack(vals, axis=axis), tuple(parents))


def concatenate(items, axis=0):
    vals = [_val(x) for x in items]
    bounds = np.cumsum([0] + [v.shape[axis] for v in vals])
    parents = []
    for i, x in enumerate(items):
        if isinstance(x, Var):
            sl = [slice(None)] * vals[i].ndim
            sl[axis] = slice(bounds[i], bounds[i + 1])
            parents.append((x, lambda g, sl=tuple(sl): g[sl]))
    return Var(np.concatenate(vals, axis=axis), tuple(parents))


def einsum(spec: str, a, b):
    """Two-operand ``np.einsum`` with an explicit output; either operand may be constant."""
    ins, out = spec.replace(" ", "").split("->")
    sa, sb = ins.split(",")
    if len(set(sa)) != len(sa) or len(set(sb)) != len(sb):
        raise UnsupportedPrimitiveError("repeated indices within one operand are not supported")
    av, bv = _val(a), _val(b)
    value = np.einsum(spec, av, bv)

    def ga(g):
        r = np.einsum(f"{out},{sb}->{sa}", g, bv) if set(sa) <= set(out + sb) else None
        if r is None:
            raise UnsupportedPrimitiveError(f"cannot differentiate {spec}")
        return r

    def gb(g):
        r = np.einsum(f"{out},{sa}->{sb}", g, av) if set(sb) <= set(out + sa) else None
        if r is None:
            raise UnsupportedPrimitiveError(f"cannot differentiate {spec}")
        return r

    parents = []
    if isinstance(a, Var):
        parents.append((a, ga))
    if isinstance(b, Var):
        parents.append((b, gb))
    return Var(value, tuple(parents))


def matmul(a, b):
    av, bv = _val(a), _val(b)
    if av.ndim != 2 and av.ndim != 1 or bv.ndim not in (1, 2):
        raise UnsupportedPrimitiveError("matmul supports vectors and matrices only")
    la = "ij" if av.ndim == 2 else "j"
    lb = "jk" if bv.ndim == 2 else "j"
    lo = (la[0] if av.ndim == 2 else "") + (lb[1] if bv.ndim == 2 else "")
    return einsum(f"{la},{lb}->{lo}", a, b)


def tape_gradient(objective, params):
    """Value and gradient of a scalar ``objective(Var)`` at ``params``."""
    x = Var(np.array(params, dtype=float))
    y = objective(x)
    if not isinstance(y, Var):
        raise UnsupportedPrimitiveError("objective did not produce a graph node")
    y.backward()
    g = x.grad if x.grad is not None else np.zeros_like(x.value)
    return float(y.value), g


# -- complex values as pairs of real nodes --------------------------------------------


def _is_node(x):
    return isinstance(x, (Var, CVar))


class CVar:
    """Complex array ``re + i im`` with real ``Var`` (or constant) parts."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0.0):
        self.re = re
        self.im = im

    @classmethod
    def const(cls, z):
        z = np.asarray(z, dtype=complex)
        return cls(z.real.copy(), z.imag.copy())

    @property
    def value(self) -> np.ndarray:
        return _val(self.re) + 1j * _val(self.im)

    def conj(self):
        return CVar(self.re, -self.im if isinstance(self.im, Var) else -np.asarray(self.im))

    def __add__(self, o):
        o = _as_c(o)
        return CVar(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = _as_c(o)
        return CVar(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return _as_c(o) - self

    def __neg__(self):
        return CVar(-self.re, -self.im)

    def __mul__(self, o):
        o = _as_c(o)
        return CVar(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = _as_c(o)
        den = o.re * o.re + o.im * o.im
        num = self * o.conj()
        return CVar(num.re / den, num.im / den)

    def __getitem__(self, idx):
        return CVar(_index(self.re, idx), _index(self.im, idx))

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def abs_smooth(self, eps: float = 1e-12):
        # sqrt(|z|^2 + eps^2) - eps
        return sqrt(_as_var(self.abs2()) + eps**2) - eps

    def exp(self):
        m = _exp_any(self.re)
        return CVar(m * _cos_any(self.im), m * _sin_any(self.im))

    def sum(self, axis=None):
        return CVar(_sum_any(self.re, axis), _sum_any(self.im, axis))


def _as_c(x):
    if isinstance(x, CVar):
        return x
    if isinstance(x, Var):
        return CVar(x, 0.0)
    z = np.asarray(x)
    if np.iscomplexobj(z):
        return CVar(z.real.copy(), z.imag.copy())
    return CVar(z.astype(float), 0.0)


def _as_var(x):
    return x if isinstance(x, Var) else Var(x)


def _index(x, idx):
    return x[idx] if isinstance(x, Var) else np.asarray(x)[idx]


def _exp_any(x):
    return exp(x) if isinstance(x, Var) else np.exp(x)


def _cos_any(x):
    return cos(x) if isinstance(x, Var) else np.cos(x)


def _sin_any(x):
    return sin(x) if isinstance(x, Var) else np.sin(x)


def _sum_any(x, axis):
    return vsum(x, axis) if isinstance(x, Var) else np.sum(x, axis=axis)


def ceinsum(spec: str, a, b) -> CVar:
    """Complex two-operand einsum on ``CVar``/complex-array operands."""
    a, b = _as_c(a), _as_c(b)

    def e(x, y):
        # a scalar zero stands for a missing real or imaginary part
        if any(not isinstance(t, Var) and np.ndim(t) == 0 and t == 0 for t in (x, y)):
            return 0.0
        if isinstance(x, Var) or isinstance(y, Var):
            return einsum(spec, x, y)
        return np.einsum(spec, x, y)

    return CVar(e(a.re, b.re) - e(a.im, b.im), e(a.re, b.im) + e(a.im, b.re))


def cstack(items, axis=0) -> CVar:
    items = [_as_c(x) for x in items]

    def st(parts):
        return stack(parts, axis) if any(isinstance(p, Var) for p in parts) else np.stack([np.asarray(p, float) for p in parts], axis)

    shape = np.broadcast(*[np.asarray(_val(p.re)) for p in items]).shape
    re = [x.re if isinstance(x.re, Var) else np.broadcast_to(x.re, shape) for x in items]
    im = [x.im if isinstance(x.im, Var) else np.broadcast_to(x.im, shape) for x in items]
    return CVar(st(re), st(im))
