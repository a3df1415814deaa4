"""Independent reference implementations used only by the tests."""
import numpy as np


def sturm_count(d, e, x):
    """Number of eigenvalues of the symmetric tridiagonal (d, e) below x."""
    count = 0
    q = 1.0
    for i in range(len(d)):
        off = e[i - 1] ** 2 if i else 0.0
        q = d[i] - x - (off / q if i else 0.0)
        if q == 0.0:
            q = 1e-300
        if q < 0:
            count += 1
    return count


def bisection_eigenvalues(d, e, tol=1e-14):
    d = np.asarray(d, float)
    e = np.asarray(e, float)
    n = d.size
    r = np.abs(np.r_[e, 0]) + np.abs(np.r_[0, e])
    lo, hi = float((d - r).min()) - 1.0, float((d + r).max()) + 1.0
    out = []
    for k in range(n):
        a, b = lo, hi
        while b - a > tol * max(1.0, abs(a), abs(b)):
            m = 0.5 * (a + b)
            if sturm_count(d, e, m) > k:
                b = m
            else:
                a = m
        out.append(0.5 * (a + b))
    return np.array(out)


def dense_tridiagonal(d, e):
    return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)


def random_jacobi(rng, n):
    return rng.uniform(-1, 1, n), rng.uniform(0.1, 1.0, n - 1)
