"""Image quality metrics: PSNR and SSIM, plus the SSIM gradient.

SSIM follows the standard formulation with an 11x11 Gaussian window
(sigma 1.5) and constants C1 = 0.01^2, C2 = 0.03^2 for values in [0, 1],
averaged over channels. Window sums use zero padding, which keeps
SSIM(x, x) = 1 everywhere and makes the convolution self-adjoint, so the
gradient is exact for the value actually computed.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import correlate1d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
PSNR_CAP = 99.0


def _gaussian_kernel1d(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - half
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


_KERNEL = _gaussian_kernel1d()


def _window_mean(img: np.ndarray) -> np.ndarray:
    out = correlate1d(img, _KERNEL, axis=0, mode="constant", cval=0.0)
    return correlate1d(out, _KERNEL, axis=1, mode="constant", cval=0.0)


def _ssim_channel(x: np.ndarray, y: np.ndarray, want_grad: bool):
    mu_x = _window_mean(x)
    mu_y = _window_mean(y)
    var_x = _window_mean(x * x) - mu_x * mu_x
    var_y = _window_mean(y * y) - mu_y * mu_y
    cov = _window_mean(x * y) - mu_x * mu_y
    a1 = 2.0 * mu_x * mu_y + SSIM_C1
    a2 = 2.0 * cov + SSIM_C2
    b1 = mu_x * mu_x + mu_y * mu_y + SSIM_C1
    b2 = var_x + var_y + SSIM_C2
    s_map = (a1 * a2) / (b1 * b2)
    value = float(s_map.mean())
    if not want_grad:
        return value, None
    # d mean(S) / dx, with S = a1 a2 / (b1 b2), chained through the window sums
    npx = s_map.size
    inv = 1.0 / (b1 * b2)
    ds_da1 = a2 * inv
    ds_da2 = a1 * inv
    ds_db1 = -s_map / b1
    ds_db2 = -s_map / b2
    ds_dmux = 2.0 * mu_y * ds_da1 + 2.0 * mu_x * ds_db1
    ds_dvarx = ds_db2
    ds_dcov = 2.0 * ds_da2
    # var and cov carry -mu terms; fold them into the mu channel before transposing
    g_mu = ds_dmux - 2.0 * mu_x * ds_dvarx - mu_y * ds_dcov
    grad = _window_mean(g_mu) + 2.0 * x * _window_mean(ds_dvarx) + y * _window_mean(ds_dcov)
    return value, grad / npx


def ssim(x: np.ndarray, y: np.ndarray) -> float:
    """Mean SSIM between two (H, W, C) or (H, W) arrays in [0, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    if x.ndim == 2:
        x = x[:, :, None]
        y = y[:, :, None]
    vals = [_ssim_channel(x[:, :, c], y[:, :, c], False)[0] for c in range(x.shape[2])]
    return float(np.mean(vals))


def ssim_with_gradient(x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """SSIM(x, y) and its gradient with respect to x, shape like x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    squeeze = x.ndim == 2
    if squeeze:
        x = x[:, :, None]
        y = y[:, :, None]
    nc = x.shape[2]
    vals = []
    grad = np.empty_like(x)
    for c in range(nc):
        v, g = _ssim_channel(x[:, :, c], y[:, :, c], True)
        vals.append(v)
        grad[:, :, c] = g / nc
    value = float(np.mean(vals))
    return value, (grad[:, :, 0] if squeeze else grad)


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr_from_arrays(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB for values in [0, 1], capped at 99.0 for identical inputs."""
    m = mse(a, b)
    if m <= 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / m))
