"""Pure numpy implementations of the hot kernels.

Signatures and return conventions match the compiled ``_ckernels`` module
exactly; ``polydiff._kernels`` picks one of the two at import time.

Polynomial maps are passed as ``exps`` (m x n int64 exponent rows) and
``coefs`` (n_out x m float64).  Status codes: 0 converged, 1 iteration cap
hit, 2 projection failed.
"""

import numpy as np

BACKEND = "python"


def poly_eval(exps, coefs, x):
    mon = np.prod(np.power(x[None, :], exps), axis=1)
    return coefs @ mon


def poly_jacobian(exps, coefs, x):
    n = exps.shape[1]
    jac = np.empty((coefs.shape[0], n))
    for k in range(n):
        d = exps[:, k]
        shifted = exps.copy()
        shifted[:, k] = np.maximum(d - 1, 0)
        mon = d * np.prod(np.power(x[None, :], shifted), axis=1)
        jac[:, k] = coefs @ mon
    return jac


def dykstra(A, b, x, tol, max_sweeps):
    """Euclidean projection onto ``{z : A z <= b}``.

    Returns ``(z, sweeps)``; ``sweeps == -1`` signals the cap was hit.
    """
    z = np.array(x, dtype=float)
    if np.all(A @ z <= b):
        return z, 0
    k = A.shape[0]
    nrm2 = np.einsum("ij,ij->i", A, A)
    incr = np.zeros((k, z.shape[0]))
    for sweep in range(1, max_sweeps + 1):
        start = z.copy()
        for i in range(k):
            w = z + incr[i]
            viol = A[i] @ w - b[i]
            if viol > 0:
                z = w - (viol / nrm2[i]) * A[i]
            else:
                z = w
            incr[i] = w - z
        if np.sqrt(np.sum((z - start) ** 2)) < tol:
            return z, sweep
    return z, -1


def invert_poly(exps, coefs, A, b, y, q, tol, max_iter, proj_tol, proj_sweeps):
    """Solve ``x + f(x) = y`` on the polytope by projected Banach iteration.

    Returns ``(x, iterations, status)``.
    """
    x = np.array(y, dtype=float)
    factor = q / (1.0 - q)
    for it in range(1, max_iter + 1):
        z = y - poly_eval(exps, coefs, x)
        x_new, sweeps = dykstra(A, b, z, proj_tol, proj_sweeps)
        if sweeps < 0:
            return x_new, it, 2
        step = np.sqrt(np.sum((x_new - x) ** 2))
        x = x_new
        if step * factor < tol:
            return x, it, 0
    return x, max_iter, 1
