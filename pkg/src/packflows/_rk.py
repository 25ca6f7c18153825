"""Explicit ODE steppers used by the flow drivers.

Provides a Dormand-Prince 5(4) embedded pair with standard step-size control
plus fixed-step rk4/euler for oracle-style comparisons. The flow drivers need
to project the state and probe domain boundaries between accepted steps,
which is why stepping is exposed one step at a time instead of wrapping a
whole-interval integrator.
"""

import numpy as np

from .errors import StepFailureError

# Dormand-Prince coefficients
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class DomainError(Exception):
    """Raised by a field callback when a stage leaves the admissible domain."""


def _dopri_stages(field, t, y, h):
    k = [field(t, y)]
    for s in range(1, 7):
        ys = y + h * sum(a * ks for a, ks in zip(_A[s], k))
        k.append(field(t + _C[s] * h, ys))
    return k


def dopri_step(field, t, y, h, rtol, atol):
    """One trial Dormand-Prince step.

    Returns (accepted, t_new, y_new, err_norm). Raises DomainError through
    from the field.
    """
    k = _dopri_stages(field, t, y, h)
    y5 = y + h * sum(b * ks for b, ks in zip(_B5, k))
    y4 = y + h * sum(b * ks for b, ks in zip(_B4, k))
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
    err = np.sqrt(np.mean(((y5 - y4) / scale) ** 2))
    return err <= 1.0, t + h, y5, err


def rk4_step(field, t, y, h):
    k1 = field(t, y)
    k2 = field(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = field(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = field(t + h, y + h * k3)
    return t + h, y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def euler_step(field, t, y, h):
    return t + h, y + h * field(t, y)


def advance(field, t, y, h, method, rtol, atol, min_step, max_step):
    """Advance one accepted step; adaptive methods retry with smaller h.

    Returns (t_new, y_new, h_used, h_next, rejected) where rejected counts
    the failed trials. DomainError from the field is treated like an
    oversized step: halve and retry. StepFailureError when no acceptable
    step at or above min_step exists.
    """
    if method == "euler":
        t2, y2 = euler_step(field, t, y, h)
        return t2, y2, h, h, 0
    if method == "rk4":
        t2, y2 = rk4_step(field, t, y, h)
        return t2, y2, h, h, 0
    if method != "dopri5":
        raise ValueError(f"unknown method {method!r}")

    rejected = 0
    while True:
        if h < min_step:
            raise StepFailureError(f"step size {h:.3g} fell below {min_step:.3g}")
        try:
            ok, t2, y2, err = dopri_step(field, t, y, h, rtol, atol)
        except DomainError:
            h *= 0.5
            rejected += 1
            continue
        if ok:
            factor = MAX_FACTOR if err == 0.0 else min(
                MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** -0.2))
            h_next = min(h * factor, max_step)
            return t2, y2, h, h_next, rejected
        h *= max(MIN_FACTOR, min(SAFETY * err ** -0.2, 0.9))
        rejected += 1
