"""Forward-mode dual scalars carrying a fixed-width gradient.

A ``Dual`` pairs a value with the vector of its partial derivatives with
respect to the K decision variables of the current run (K = 3 by default:
inclination, mean anomaly, eccentricity).  Every numeric routine in this
package is written against plain arithmetic operators plus the generic
functions below (``sin``, ``sqrt``, ...), so the same code path runs on
ordinary floats and on duals.

The payload of a ``Dual`` may be a scalar or a numpy array; in the array
case ``grad`` keeps the derivative axis FIRST, i.e. ``grad`` is
broadcast-compatible with ``(K,) + shape(value)``.  Comparisons, ``floor``
and branch decisions read only the primal value and propagate zero
derivative: discrete choices (BVH traversal, visibility, clamps at their
kink) are deliberately detached.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "Dual",
    "DomainError",
    "seed",
    "constant",
    "value_of",
    "grad_of",
    "sin",
    "cos",
    "tan",
    "atan2",
    "sqrt",
    "exp",
    "log",
    "floor",
    "fabs",
    "clamped_pow",
    "gather",
    "scatter",
    "dsum",
    "dmean",
]

_SCALARS = (int, float, np.integer, np.floating, np.ndarray)


class DomainError(ValueError):
    """A dual operation was evaluated outside its domain."""

    def __init__(self, op: str, detail: str):
        self.op = op
        super().__init__(f"{op}: {detail}")


def _lift(grad, value_ndim: int, out_ndim: int):
    # Reshape grad from (K,)+value_shape so its trailing axes align with
    # the broadcast result shape (numpy aligns from the right).
    pad = out_ndim - value_ndim
    if pad <= 0:
        return grad
    return grad.reshape(grad.shape[:1] + (1,) * pad + grad.shape[1:])


class Dual:
    """Value plus K partial derivatives, closed under arithmetic."""

    __slots__ = ("value", "grad")

    # Opt out of numpy ufunc handling so ndarray <op> Dual defers to the
    # reflected operators here instead of producing object arrays.
    __array_ufunc__ = None

    def __init__(self, value, grad):
        self.value = value
        self.grad = grad

    @property
    def k(self) -> int:
        return self.grad.shape[0]

    def __repr__(self):
        return f"Dual({self.value!r}, grad={self.grad!r})"

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            v = self.value + other.value
            nd = np.ndim(v)
            g = _lift(self.grad, np.ndim(self.value), nd) + _lift(
                other.grad, np.ndim(other.value), nd
            )
            return Dual(v, g)
        if isinstance(other, _SCALARS):
            v = self.value + other
            return Dual(v, _lift(self.grad, np.ndim(self.value), np.ndim(v)))
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            v = self.value - other.value
            nd = np.ndim(v)
            g = _lift(self.grad, np.ndim(self.value), nd) - _lift(
                other.grad, np.ndim(other.value), nd
            )
            return Dual(v, g)
        if isinstance(other, _SCALARS):
            v = self.value - other
            return Dual(v, _lift(self.grad, np.ndim(self.value), np.ndim(v)))
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _SCALARS):
            v = other - self.value
            return Dual(v, -_lift(self.grad, np.ndim(self.value), np.ndim(v)))
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Dual):
            v = self.value * other.value
            nd = np.ndim(v)
            g = _lift(self.grad, np.ndim(self.value), nd) * other.value + _lift(
                other.grad, np.ndim(other.value), nd
            ) * self.value
            return Dual(v, g)
        if isinstance(other, _SCALARS):
            v = self.value * other
            return Dual(v, _lift(self.grad, np.ndim(self.value), np.ndim(v)) * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            if np.any(other.value == 0):
                raise DomainError("div", "division by zero primal value")
            v = self.value / other.value
            nd = np.ndim(v)
            g = (
                _lift(self.grad, np.ndim(self.value), nd) * other.value
                - _lift(other.grad, np.ndim(other.value), nd) * self.value
            ) / (other.value * other.value)
            return Dual(v, g)
        if isinstance(other, _SCALARS):
            if np.any(np.asarray(other) == 0):
                raise DomainError("div", "division by zero constant")
            v = self.value / other
            return Dual(v, _lift(self.grad, np.ndim(self.value), np.ndim(v)) / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _SCALARS):
            if np.any(self.value == 0):
                raise DomainError("div", "division by zero primal value")
            v = other / self.value
            g = -_lift(self.grad, np.ndim(self.value), np.ndim(v)) * other / (
                self.value * self.value
            )
            return Dual(v, g)
        return NotImplemented

    def __pow__(self, p):
        # Real exponent only; chain rule p*x^(p-1).  Dual**Dual goes via
        # exp(p*log(x)) which callers can spell out when they need it.
        if isinstance(p, (int, float)):
            v = self.value**p
            g = _lift(self.grad, np.ndim(self.value), np.ndim(v)) * (
                p * self.value ** (p - 1)
            )
            return Dual(v, g)
        return NotImplemented

    def __neg__(self):
        return Dual(-self.value, -self.grad)

    def __pos__(self):
        return self

    def __abs__(self):
        return Dual(np.abs(self.value), self.grad * np.sign(self.value))

    def __mod__(self, c):
        # Wrap against a plain constant; derivative of x mod c is 1 a.e.
        if isinstance(c, (int, float)):
            return Dual(self.value % c, self.grad)
        return NotImplemented

    # -- detached primal decisions --------------------------------------

    def __lt__(self, other):
        return self.value < _primal(other)

    def __le__(self, other):
        return self.value <= _primal(other)

    def __gt__(self, other):
        return self.value > _primal(other)

    def __ge__(self, other):
        return self.value >= _primal(other)

    def __eq__(self, other):
        return self.value == _primal(other)

    def __ne__(self, other):
        return self.value != _primal(other)

    __hash__ = None

    def __float__(self):
        raise TypeError(
            "implicit float() on a Dual drops its gradient; use .value explicitly"
        )

    # -- elementary functions (used via the module-level generics) ------

    def _sin(self):
        return Dual(np.sin(self.value), self.grad * np.cos(self.value))

    def _cos(self):
        return Dual(np.cos(self.value), -self.grad * np.sin(self.value))

    def _tan(self):
        c = np.cos(self.value)
        return Dual(np.tan(self.value), self.grad / (c * c))

    def _sqrt(self):
        if np.any(self.value < 0):
            raise DomainError("sqrt", "negative primal value")
        s = np.sqrt(self.value)
        return Dual(s, self.grad * (0.5 / s))

    def _exp(self):
        e = np.exp(self.value)
        return Dual(e, self.grad * e)

    def _log(self):
        if np.any(self.value <= 0):
            raise DomainError("log", "non-positive primal value")
        return Dual(np.log(self.value), self.grad / self.value)

    def _floor(self):
        return Dual(np.floor(self.value), self.grad * 0.0)

    # -- array payload helpers -------------------------------------------

    def full_grad(self):
        """grad broadcast to exactly ``(K,) + shape(value)``."""
        target = (self.k,) + np.shape(self.value)
        if self.grad.shape == target:
            return self.grad
        return np.broadcast_to(self.grad, target)

    def sum(self):
        """Sum all elements of an array payload into a scalar dual."""
        v = float(np.sum(self.value))
        g = self.full_grad().reshape(self.k, -1).sum(axis=1)
        return Dual(v, g)

    def mean(self):
        n = int(np.size(self.value))
        if n == 0:
            raise DomainError("mean", "empty payload")
        return self.sum() / float(n)


def _primal(x):
    return x.value if isinstance(x, Dual) else x


# -- construction ------------------------------------------------------


def seed(value: float, slot: int, k: int = 3) -> Dual:
    """A dual whose derivative is the unit vector in position ``slot``."""
    if not 0 <= slot < k:
        raise DomainError("seed", f"slot {slot} outside [0, {k})")
    g = np.zeros(k)
    g[slot] = 1.0
    return Dual(float(value), g)


def constant(value, k: int = 3) -> Dual:
    """A dual carrying zero derivative in every slot."""
    return Dual(value, np.zeros((k,) + np.shape(value)))


def value_of(x):
    """Primal value of a scalar that may or may not be a dual."""
    return x.value if isinstance(x, Dual) else x


def grad_of(x, k: int = 3):
    """Gradient of a scalar, zeros if it is not a dual."""
    if isinstance(x, Dual):
        return np.array(x.full_grad(), dtype=float)
    return np.zeros((k,) + np.shape(x))


# -- generic elementary functions --------------------------------------


def sin(x):
    return x._sin() if isinstance(x, Dual) else (np.sin(x) if isinstance(x, np.ndarray) else math.sin(x))


def cos(x):
    return x._cos() if isinstance(x, Dual) else (np.cos(x) if isinstance(x, np.ndarray) else math.cos(x))


def tan(x):
    return x._tan() if isinstance(x, Dual) else (np.tan(x) if isinstance(x, np.ndarray) else math.tan(x))


def sqrt(x):
    if isinstance(x, Dual):
        return x._sqrt()
    if isinstance(x, np.ndarray):
        return np.sqrt(x)
    if x < 0:
        raise DomainError("sqrt", "negative value")
    return math.sqrt(x)


def exp(x):
    return x._exp() if isinstance(x, Dual) else (np.exp(x) if isinstance(x, np.ndarray) else math.exp(x))


def log(x):
    if isinstance(x, Dual):
        return x._log()
    if isinstance(x, np.ndarray):
        return np.log(x)
    if x <= 0:
        raise DomainError("log", "non-positive value")
    return math.log(x)


def floor(x):
    return x._floor() if isinstance(x, Dual) else (np.floor(x) if isinstance(x, np.ndarray) else math.floor(x))


def fabs(x):
    if isinstance(x, Dual):
        return abs(x)
    return np.abs(x) if isinstance(x, np.ndarray) else math.fabs(x)


def atan2(y, x):
    """Two-argument arctangent; d(atan2)/dy = x/(x²+y²), /dx = -y/(x²+y²)."""
    if not isinstance(y, Dual) and not isinstance(x, Dual):
        if isinstance(y, np.ndarray) or isinstance(x, np.ndarray):
            return np.arctan2(y, x)
        return math.atan2(y, x)
    yv, xv = _primal(y), _primal(x)
    v = np.arctan2(yv, xv)
    denom = xv * xv + yv * yv
    nd = np.ndim(v)
    g = 0.0
    if isinstance(y, Dual):
        g = _lift(y.grad, np.ndim(yv), nd) * (xv / denom)
    if isinstance(x, Dual):
        g = g - _lift(x.grad, np.ndim(xv), nd) * (yv / denom)
    return Dual(v, g)


def clamped_pow(x, alpha):
    """max(0, x) ** alpha with derivative 0 on and below the kink.

    ``alpha`` may be a scalar or an array matching the payload; alpha >= 1
    is required so the clamped branch stays continuous.
    """
    if np.any(np.asarray(alpha) < 1):
        raise DomainError("clamped_pow", "alpha must be >= 1")
    if isinstance(x, Dual):
        base = np.maximum(0.0, x.value)
        v = base**alpha
        slope = np.where(base > 0.0, alpha * base ** (alpha - 1.0), 0.0)
        g = _lift(x.grad, np.ndim(x.value), np.ndim(v)) * slope
        return Dual(v, g)
    return np.maximum(0.0, x) ** alpha


# -- array payload plumbing ---------------------------------------------


def gather(x, mask):
    """Select elements of an array payload by boolean mask over its shape."""
    if isinstance(x, Dual):
        return Dual(x.value[mask], x.full_grad()[:, mask])
    return x[mask]


def scatter(x, mask, shape, fill=0.0):
    """Spread a compact payload back onto ``shape`` positions where mask holds."""
    if isinstance(x, Dual):
        v = np.full(shape, fill, dtype=float)
        v[mask] = x.value
        g = np.zeros((x.k,) + tuple(shape))
        g[:, mask] = x.full_grad()
        return Dual(v, g)
    out = np.full(shape, fill, dtype=float)
    out[mask] = x
    return out


def dsum(x):
    """Sum of an array payload, dual-aware."""
    return x.sum() if isinstance(x, Dual) else float(np.sum(x))


def dmean(x):
    """Mean of an array payload, dual-aware."""
    return x.mean() if isinstance(x, Dual) else float(np.mean(x))
