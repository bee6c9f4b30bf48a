"""Finite-difference gradients for checking the analytic backward passes."""
import numpy as np


def finite_difference_gradient(f, w, step: float = 1e-5) -> np.ndarray:
    """Central differences ``(f(w + h e_i) - f(w - h e_i)) / 2h`` per coordinate."""
    w = np.array(w, dtype=float)
    g = np.empty_like(w)
    flat = w.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f(w)
        flat[i] = orig - step
        fm = f(w)
        flat[i] = orig
        gf[i] = (fp - fm) / (2.0 * step)
    return g


def relative_error(a, b, floor: float = 1e-8) -> np.ndarray:
    """Elementwise ``|a - b| / max(|a|, |b|, floor)``."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
