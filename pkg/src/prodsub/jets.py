"""Order-2 forward-mode jets over m chart variables.

A ``Jet2`` carries the value, gradient and Hessian of a scalar quantity with
respect to the chart coordinates.  All arithmetic implements exact truncated
Taylor rules, so polynomial expressions of degree <= 2 are differentiated
exactly.  Derivatives of *derived* fields (mean curvature, frames, ...) are
taken by the finite-difference helpers at the bottom of the module, never by
higher-order jets.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import StencilError

__all__ = [
    "Jet2",
    "VecJet2",
    "jet_var",
    "jet_const",
    "jet_arith",
    "jet_unary",
    "UNARY_FNS",
    "fd_gradient",
    "FD_BASE_STEP",
]

#: default finite-difference base step, cbrt(machine epsilon)
FD_BASE_STEP = float(np.finfo(float).eps) ** (1.0 / 3.0)


class JetDomainError(ValueError):
    """A unary function was evaluated outside its domain."""

    def __init__(self, fn: str, value: float):
        super().__init__(f"{fn}: argument {value!r} outside the function domain")
        self.fn = fn
        self.value = value


def _check_same_m(a: "Jet2", b: "Jet2") -> None:
    if a.m != b.m:
        raise ValueError(f"jet dimension mismatch: {a.m} vs {b.m}")


class Jet2:
    """Truncated 2-jet: value, gradient (m,) and symmetric Hessian (m, m)."""

    __slots__ = ("m", "value", "grad", "hess")

    def __init__(self, value: float, grad: np.ndarray, hess: np.ndarray):
        self.value = float(value)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)
        self.m = self.grad.shape[0]

    def __repr__(self) -> str:
        return f"Jet2(value={self.value!r}, m={self.m})"

    # -- arithmetic -------------------------------------------------------

    @staticmethod
    def _coerce(x, m: int) -> "Jet2":
        if isinstance(x, Jet2):
            return x
        return jet_const(float(x), m)

    def __add__(self, other) -> "Jet2":
        o = Jet2._coerce(other, self.m)
        _check_same_m(self, o)
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet2":
        o = Jet2._coerce(other, self.m)
        _check_same_m(self, o)
        return Jet2(self.value - o.value, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other) -> "Jet2":
        return Jet2._coerce(other, self.m).__sub__(self)

    def __mul__(self, other) -> "Jet2":
        o = Jet2._coerce(other, self.m)
        _check_same_m(self, o)
        cross = np.outer(self.grad, o.grad)
        return Jet2(
            self.value * o.value,
            self.grad * o.value + o.grad * self.value,
            self.hess * o.value + o.hess * self.value + cross + cross.T,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet2":
        o = Jet2._coerce(other, self.m)
        _check_same_m(self, o)
        if o.value == 0.0:
            raise ZeroDivisionError("jet division by zero value")
        return self * _reciprocal(o)

    def __rtruediv__(self, other) -> "Jet2":
        return Jet2._coerce(other, self.m).__truediv__(self)

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.grad, -self.hess)

    def __pow__(self, p) -> "Jet2":
        return pow_const(self, p)


def jet_var(index: int, value: float, m: int) -> Jet2:
    """Seed jet for chart variable ``index`` of ``m``: unit gradient slot."""
    if not 0 <= index < m:
        raise ValueError(f"variable index {index} out of range for m={m}")
    grad = np.zeros(m)
    grad[index] = 1.0
    return Jet2(value, grad, np.zeros((m, m)))


def jet_const(value: float, m: int) -> Jet2:
    return Jet2(value, np.zeros(m), np.zeros((m, m)))


def _reciprocal(a: Jet2) -> Jet2:
    v = a.value
    inv = 1.0 / v
    inv2 = inv * inv
    outer = np.outer(a.grad, a.grad)
    return Jet2(inv, -a.grad * inv2, -a.hess * inv2 + 2.0 * outer * (inv2 * inv))


def _chain(a: Jet2, f: float, fp: float, fpp: float) -> Jet2:
    """Apply the scalar chain rule with derivative table (f, f', f'')."""
    return Jet2(f, fp * a.grad, fp * a.hess + fpp * np.outer(a.grad, a.grad))


def sin(a: Jet2) -> Jet2:
    s, c = math.sin(a.value), math.cos(a.value)
    return _chain(a, s, c, -s)


def cos(a: Jet2) -> Jet2:
    s, c = math.sin(a.value), math.cos(a.value)
    return _chain(a, c, -s, -c)


def tan(a: Jet2) -> Jet2:
    c = math.cos(a.value)
    if c == 0.0:
        raise JetDomainError("tan", a.value)
    t = math.tan(a.value)
    sec2 = 1.0 + t * t
    return _chain(a, t, sec2, 2.0 * t * sec2)


def sinh(a: Jet2) -> Jet2:
    s, c = math.sinh(a.value), math.cosh(a.value)
    return _chain(a, s, c, s)


def cosh(a: Jet2) -> Jet2:
    s, c = math.sinh(a.value), math.cosh(a.value)
    return _chain(a, c, s, c)


def tanh(a: Jet2) -> Jet2:
    t = math.tanh(a.value)
    sech2 = 1.0 - t * t
    return _chain(a, t, sech2, -2.0 * t * sech2)


def exp(a: Jet2) -> Jet2:
    e = math.exp(a.value)
    return _chain(a, e, e, e)


def log(a: Jet2) -> Jet2:
    if a.value <= 0.0:
        raise JetDomainError("log", a.value)
    inv = 1.0 / a.value
    return _chain(a, math.log(a.value), inv, -inv * inv)


def sqrt(a: Jet2) -> Jet2:
    if a.value <= 0.0:
        raise JetDomainError("sqrt", a.value)
    r = math.sqrt(a.value)
    return _chain(a, r, 0.5 / r, -0.25 / (r * a.value))


def atan(a: Jet2) -> Jet2:
    d = 1.0 + a.value * a.value
    return _chain(a, math.atan(a.value), 1.0 / d, -2.0 * a.value / (d * d))


def neg(a: Jet2) -> Jet2:
    return -a


def pow_const(a: Jet2, p: float) -> Jet2:
    """a**p for a real constant exponent p.

    Integer p works for any base; fractional p requires a.value > 0.
    """
    if isinstance(p, float) and p.is_integer():
        p = int(p)
    if isinstance(p, int):
        if p == 0:
            return jet_const(1.0, a.m)
        if a.value == 0.0 and p < 0:
            raise ZeroDivisionError("pow_const: zero base with negative exponent")
        f = a.value**p
        fp = p * a.value ** (p - 1)
        fpp = p * (p - 1) * (a.value ** (p - 2) if p != 1 else 0.0)
        return _chain(a, f, fp, fpp)
    if a.value <= 0.0:
        raise JetDomainError("pow_const", a.value)
    f = a.value**p
    return _chain(a, f, p * f / a.value, p * (p - 1) * f / (a.value * a.value))


UNARY_FNS = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "atan": atan,
    "neg": neg,
}

_ARITH = {
    "add": Jet2.__add__,
    "sub": Jet2.__sub__,
    "mul": Jet2.__mul__,
    "div": Jet2.__truediv__,
}


def jet_arith(kind: str, a: Jet2, b: Jet2) -> Jet2:
    try:
        op = _ARITH[kind]
    except KeyError:
        raise ValueError(f"unknown arithmetic kind {kind!r}") from None
    return op(a, b)


def jet_unary(fn: str, a: Jet2, p: float | None = None) -> Jet2:
    if fn == "pow_const":
        if p is None:
            raise ValueError("pow_const needs an exponent")
        return pow_const(a, p)
    try:
        f = UNARY_FNS[fn]
    except KeyError:
        raise ValueError(f"unknown unary function {fn!r}") from None
    return f(a)


class VecJet2:
    """Ambient-vector-valued 2-jet: one Jet2 per ambient coordinate.

    Stacks the component jets into arrays for fast downstream linear algebra:
    ``values`` (k,), ``jac`` (k, m) with jac[c, i] = d f_c / d u_i, and
    ``d2`` (k, m, m) with the per-component Hessians.
    """

    __slots__ = ("jets", "m", "values", "jac", "d2")

    def __init__(self, jets):
        jets = list(jets)
        if not jets:
            raise ValueError("VecJet2 needs at least one component")
        m = jets[0].m
        for j in jets:
            if j.m != m:
                raise ValueError("VecJet2 components disagree on m")
        self.jets = jets
        self.m = m
        self.values = np.array([j.value for j in jets])
        self.jac = np.array([j.grad for j in jets])
        self.d2 = np.array([j.hess for j in jets])

    def __len__(self) -> int:
        return len(self.jets)

    def second(self, i: int, j: int) -> np.ndarray:
        """Mixed second derivative vector d^2 f / du_i du_j, shape (k,)."""
        return self.d2[:, i, j]


def fd_gradient(field, u, i: int, step: float | None = None) -> np.ndarray:
    """Derivative of a vector-valued field along chart direction ``i``.

    Central differences with one Richardson extrapolation step over the two
    step sizes (h, h/2).  Base step h = cbrt(machine eps) * max(1, |u_i|)
    unless ``step`` overrides it (nested differences use a coarser step).
    """
    u = np.asarray(u, dtype=float)
    h = step if step is not None else FD_BASE_STEP * max(1.0, abs(u[i]))

    def delta(hh: float) -> np.ndarray:
        up = u.copy()
        um = u.copy()
        up[i] += hh
        um[i] -= hh
        fp = np.atleast_1d(np.asarray(field(up), dtype=float))
        fm = np.atleast_1d(np.asarray(field(um), dtype=float))
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise StencilError(
                f"non-finite field value near u={u.tolist()} along direction {i}"
            )
        return (fp - fm) / (2.0 * hh)

    d1 = delta(h)
    d2 = delta(0.5 * h)
    return (4.0 * d2 - d1) / 3.0
