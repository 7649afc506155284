"""Independent brute-force oracles the tests check library code against.

These deliberately avoid the library's own code paths: plain loops,
textbook formulas, central differences.
"""

import numpy as np


def central_diff_grad(f, point: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Gradient of scalar f(ndarray) by central differences, one coordinate
    at a time."""
    point = np.asarray(point, dtype=np.float64)
    flat = point.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + step
        hi = f(bumped.reshape(point.shape))
        bumped[i] = flat[i] - step
        lo = f(bumped.reshape(point.shape))
        grad[i] = (hi - lo) / (2.0 * step)
    return grad.reshape(point.shape)


def naive_dft(frame: np.ndarray) -> np.ndarray:
    """One-sided DFT of one frame by the definition (O(n^2) loop)."""
    n = frame.size
    bins = n // 2 + 1
    out = np.zeros(bins, dtype=np.complex128)
    for k in range(bins):
        acc = 0.0 + 0.0j
        for t in range(n):
            acc += frame[t] * np.exp(-2j * np.pi * k * t / n)
        out[k] = acc
    return out


def stpr_patch_loop(nu: np.ndarray, x: np.ndarray, patch_len: int, floor: float) -> float:
    """Short-term power ratio by an explicit per-patch loop."""
    n = nu.size
    total = 0.0
    start = 0
    while start < n:
        nu_p = nu[start: start + patch_len]
        x_p = x[start: start + patch_len]
        nu_norm = float(np.sqrt(np.sum(nu_p ** 2)))
        x_norm = float(np.sqrt(np.sum(x_p ** 2)))
        total += abs(nu_norm / (x_norm + floor))
        start += patch_len
    return total


def adam_by_hand(grads: list[np.ndarray], lr: float, beta1: float, beta2: float,
                 eps: float) -> list[np.ndarray]:
    """Sequence of Adam deltas from the textbook update formulas."""
    m = np.zeros_like(grads[0])
    v = np.zeros_like(grads[0])
    deltas = []
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        deltas.append(-lr * m_hat / (np.sqrt(v_hat) + eps))
    return deltas


def energy_sdr(ref: np.ndarray, est: np.ndarray) -> float:
    """Uncapped energy-ratio SDR straight from the formula."""
    return 10.0 * np.log10(np.sum(ref ** 2) / np.sum((ref - est) ** 2))
