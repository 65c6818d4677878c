"""
Independent reference computations used by the tests: finite differences,
Monte-Carlo quadrature, fixed-step RK4 and grid search. None of them touch the
jet machinery.
"""

import numpy as np


def central_difference(f, z, i, h=1e-3):
    """df/dz_i with one Richardson extrapolation step (error O(h^4))"""
    z = np.asarray(z, dtype=float)

    def step(width):
        e = np.zeros_like(z)
        e[i] = width
        return (f(z + e) - f(z - e)) / (2.0 * width)

    return (4.0 * step(h / 2.0) - step(h)) / 3.0


def second_difference(f, z, i, j, h=1e-3):
    """d^2 f / dz_i dz_j from nested central differences"""
    return central_difference(lambda w: central_difference(f, w, j, h), z, i, h)


def fundamental_tensor_fd(fs, x, y, h=1e-3):
    """g_ij = 1/2 d^2 F^2 / dy^i dy^j by finite differences"""
    n = fs.dimension
    energy = lambda v: float(fs.value(x, v)) ** 2
    return np.array([[0.5 * second_difference(energy, y, i, j, h) for j in range(n)] for i in range(n)])


def indicatrix_speeds_monte_carlo(fs, x, samples=20000, seed=7):
    """Random indicatrix points at x and the g_(x, y) speed of the curve there, n = 2"""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, samples)

    def point(angle):
        u = np.stack([np.cos(angle), np.sin(angle)], axis=1)
        return u / fs.value(x, u)[:, None]

    delta = 1e-5
    y = point(theta)
    tangent = (point(theta + delta) - point(theta - delta)) / (2 * delta)
    # g_(x, y)(v, v) = 1/2 d^2/ds^2 F^2(x, y + s v) at s = 0
    s = 1e-4
    energy = lambda w: fs.value(x, w) ** 2
    speed_sq = 0.5 * (energy(y + s * tangent) - 2 * energy(y) + energy(y - s * tangent)) / s ** 2
    return y, np.sqrt(speed_sq)


def indicatrix_length_monte_carlo(fs, x, samples=20000, seed=7):
    """Length of the indicatrix curve at x measured with g_(x, y), n = 2"""
    _, speeds = indicatrix_speeds_monte_carlo(fs, x, samples, seed)
    return 2.0 * np.pi * float(speeds.mean())


def rk4(fun, z0, t1, steps=2000):
    """Classic fixed-step Runge-Kutta from t = 0 to t1"""
    z = np.asarray(z0, dtype=float)
    h = t1 / steps
    t = 0.0
    for _ in range(steps):
        k1 = fun(t, z)
        k2 = fun(t + h / 2, z + h / 2 * k1)
        k3 = fun(t + h / 2, z + h / 2 * k2)
        k4 = fun(t + h, z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return z


def sphere_geodesic_rhs(t, z):
    """Geodesic equations of d(x1)^2 + sin(x1)^2 d(x2)^2"""
    x1, _, v1, v2 = z
    return np.array([v1, v2, np.sin(x1) * np.cos(x1) * v2 ** 2, -2.0 / np.tan(x1) * v1 * v2])


def invariant_form_grid_search(matrices, steps=721):
    """Best unit-trace positive form [[c, s], [s, 1 - c]] for 2x2 matrices by brute force

    Returns the form and its worst residual |H^T Q H - Q|.
    """
    best, best_residual = None, np.inf
    for c in np.linspace(0.01, 0.99, steps):
        limit = np.sqrt(c * (1 - c))
        for s in np.linspace(-limit, limit, 41)[1:-1]:
            Q = np.array([[c, s], [s, 1 - c]])
            residual = max(np.max(np.abs(H.T @ Q @ H - Q)) for H in matrices)
            if residual < best_residual:
                best, best_residual = Q, residual
    return best, best_residual


def sphere_christoffel(x1):
    """Levi-Civita symbols Gamma^i_jk of d(x1)^2 + sin(x1)^2 d(x2)^2"""
    gamma = np.zeros((2, 2, 2))
    gamma[0, 1, 1] = -np.sin(x1) * np.cos(x1)
    gamma[1, 0, 1] = gamma[1, 1, 0] = np.cos(x1) / np.sin(x1)
    return gamma
