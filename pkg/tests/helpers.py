"""Independent reference computations used by the tests.

Nothing here imports the integrator, kernels or operators under test.
"""

import math

import numpy as np


def rk4(rhs, y0, t_end, steps):
    """Classical fixed-step Runge-Kutta; returns the state at ``t_end``."""
    y = np.array(y0, dtype=float)
    h = t_end / steps
    t = 0.0
    for _ in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


def parametric_char_rhs(t, y):
    # a = 1/2, b = (1 + 0.2 cos t)/2: tau = 0, sigma = ab
    sigma = 0.25 * (1 + 0.2 * math.cos(t))
    return np.array([y[1], -4 * sigma * y[0]])


def ermakov_rhs(a, da, stiff, C0):
    def rhs(t, y):
        k, kp = y
        return np.array([kp, da(t) / a(t) * kp - stiff(t) * k + C0 * (2 * a(t)) ** 2 / k ** 3])
    return rhs


def free_gaussian(x, t):
    """Unit Gaussian evolved freely with a = 1/2."""
    return math.pi ** -0.25 * (1 + 1j * t) ** -0.5 * np.exp(-x * x / (2 * (1 + 1j * t)))


def mehler(x, y, t):
    s, c = math.sin(t), math.cos(t)
    return np.exp(1j * ((x * x + y * y) * c - 2 * x * y) / (2 * s)) / np.sqrt(2j * math.pi * s)


def gaussian(x, center=0.0, width=1.0, momentum=0.0):
    return (math.pi * width ** 2) ** -0.25 * np.exp(-(x - center) ** 2 / (2 * width ** 2) + 1j * momentum * x)


def l2(u, v, dx):
    return math.sqrt(dx * float(np.sum(np.abs(np.asarray(u) - np.asarray(v)) ** 2)))


# criterion number -> printed line, filled by test_acceptance
ACCEPTANCE = {}


def report(number, title, value, tol):
    ok = bool(value < tol)
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}  (value {value:.3e}, tol {tol:g})"
    ACCEPTANCE[number] = line
    print(line)
    return ok
