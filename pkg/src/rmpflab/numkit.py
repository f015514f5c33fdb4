"""Dense linear-algebra and finite-difference helpers shared by the graph and its oracles."""

import numpy as np

PINV_RTOL = 1e-10
FD_STEP = 1e-5


def _as_finite(name, a):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def pseudo_inverse_apply(M, f, rtol=PINV_RTOL):
    """Return the minimum-norm least-squares solution of ``M a = f``.

    Singular values below ``rtol * sigma_max`` are treated as zero.
    """
    M = _as_finite("M", M)
    f = _as_finite("f", f)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"M must be square, got shape {M.shape}")
    if f.shape != (M.shape[0],):
        raise ValueError(f"f has shape {f.shape}, expected ({M.shape[0]},)")
    if M.shape[0] == 1:
        m = M[0, 0]
        return np.array([f[0] / m]) if m != 0.0 else np.zeros(1)
    U, s, Vt = np.linalg.svd(M)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros_like(f)
    keep = s > rtol * s[0]
    coeff = (U[:, keep].T @ f) / s[keep]
    return Vt[keep].T @ coeff


# Central-difference stencils: offsets and weights for the first derivative.
_STENCILS = {
    2: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    4: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}


def _directional(fn, x, v, h, order):
    offsets, weights = _STENCILS[order]
    acc = None
    for o, w in zip(offsets, weights):
        val = np.asarray(fn(x + (o * h) * v), dtype=float)
        acc = w * val if acc is None else acc + w * val
    return acc / h


def finite_diff_grad(field, x, h=FD_STEP, order=2):
    """Central-difference gradient of a scalar field."""
    x = np.asarray(x, dtype=float)
    g = np.empty(x.size)
    eye = np.eye(x.size)
    for i in range(x.size):
        g[i] = _directional(field, x, eye[i], h, order)
    return g


def finite_diff_jacobian(fn, x, h=FD_STEP, order=2):
    """Central-difference Jacobian ``d fn / dx`` with shape (out, in)."""
    x = np.asarray(x, dtype=float)
    eye = np.eye(x.size)
    cols = [np.atleast_1d(_directional(fn, x, eye[i], h, order)) for i in range(x.size)]
    return np.stack(cols, axis=-1)


def finite_diff_directional(fn, x, v, h=FD_STEP, order=2):
    """Derivative of ``t -> fn(x + t v)`` at ``t = 0``; works for array-valued ``fn``."""
    return _directional(fn, np.asarray(x, dtype=float), np.asarray(v, dtype=float), h, order)


def sym_eig_bounds(M):
    """Smallest and largest eigenvalue of the symmetric part of ``M``."""
    M = np.asarray(M, dtype=float)
    ev = np.linalg.eigvalsh(0.5 * (M + M.T))
    return float(ev[0]), float(ev[-1])


def rel_err(a, b, floor=1e-12):
    """``|a - b| / max(|b|, floor)`` in the Euclidean/Frobenius norm."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))
