"""Tiny 3-vector helpers generic over plain floats and dual scalars.

Vectors are plain sequences of three scalars so that the autodiff duals
flow through unchanged; numpy arrays are reserved for the batched pixel
paths in :mod:`deglint.imaging`.
"""

from __future__ import annotations

from . import autodiff as ad


def dot3(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross3(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def sub3(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def add3(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def scale3(a, s):
    return (a[0] * s, a[1] * s, a[2] * s)


def neg3(a):
    return (-a[0], -a[1], -a[2])


def norm3(a):
    return ad.sqrt(dot3(a, a))


def normalize3(a):
    n = norm3(a)
    return (a[0] / n, a[1] / n, a[2] / n)


def values3(a):
    """Primal components of a possibly-dual 3-vector as plain floats."""
    return (
        float(ad.value_of(a[0])),
        float(ad.value_of(a[1])),
        float(ad.value_of(a[2])),
    )


def matvec3(m, v):
    """Multiply a 3x3 row-major matrix of plain floats by a generic vector."""
    return (
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    )
