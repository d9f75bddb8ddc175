"""Sobel edge loss and the combined cross-entropy + Sobel objective, with analytic gradients.

Tensors are numpy arrays shaped ``(channels, height, width)``. The Sobel
kernels are applied by cross-correlation (no flip) with replicate padding, and
the magnitude carries ``eps`` under the square root so it is differentiable
where both derivatives vanish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cvsroi.errors import ShapeMismatch

EPS = 1e-12
CE_CLAMP = 1e-12

SOBEL_X = np.array([[2.0, 0.0, -2.0], [4.0, 0.0, -4.0], [2.0, 0.0, -2.0]])
SOBEL_Y = np.array([[2.0, 4.0, 2.0], [0.0, 0.0, 0.0], [-2.0, -4.0, -2.0]])


@dataclass(frozen=True)
class LossConfig:
    lam: float = 1.0
    beta: float = 1.0
    channel_reduce: str = "sum"  # "sum" or "max"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("loss.lambda must be >= 0")
        if self.beta <= 0:
            raise ValueError("loss.beta must be > 0")
        if self.channel_reduce not in ("sum", "max"):
            raise ValueError("loss.channel_reduce must be 'sum' or 'max'")


def _correlate(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """3x3 cross-correlation over the last two axes with replicate padding."""
    h, w = img.shape[-2:]
    pad = [(0, 0)] * (img.ndim - 2) + [(1, 1), (1, 1)]
    p = np.pad(img, pad, mode="edge")
    out = np.zeros(img.shape, dtype=float)
    for i in range(3):
        for j in range(3):
            k = kernel[i, j]
            if k != 0.0:
                out += k * p[..., i : i + h, j : j + w]
    return out


def _correlate_adjoint(grad_out: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Transpose of :func:`_correlate`: scatter each output gradient back to its clamped taps."""
    h, w = grad_out.shape[-2:]
    acc = np.zeros(grad_out.shape[:-2] + (h + 2, w + 2), dtype=float)
    for i in range(3):
        for j in range(3):
            k = kernel[i, j]
            if k != 0.0:
                acc[..., i : i + h, j : j + w] += k * grad_out
    # fold the padding ring back onto the replicated border pixels
    acc[..., 1, :] += acc[..., 0, :]
    acc[..., h, :] += acc[..., h + 1, :]
    acc[..., :, 1] += acc[..., :, 0]
    acc[..., :, w] += acc[..., :, w + 1]
    return acc[..., 1 : h + 1, 1 : w + 1]


def sobel_components(img: np.ndarray):
    img = np.asarray(img, dtype=float)
    return _correlate(img, SOBEL_X), _correlate(img, SOBEL_Y)


def sobel_magnitude(img: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Gradient magnitude ``sqrt(Gx^2 + Gy^2 + eps)``; works per channel on stacked input."""
    gx, gy = sobel_components(img)
    return np.sqrt(gx * gx + gy * gy + eps)


def smooth_l1(x, beta: float = 1.0):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.where(ax < beta, 0.5 * x * x / beta, ax - 0.5 * beta)
    return out if out.ndim else float(out)


def smooth_l1_grad(x, beta: float = 1.0):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < beta, x / beta, np.sign(x))


def _check_shapes(g: np.ndarray, p: np.ndarray):
    if g.shape != p.shape:
        raise ShapeMismatch(f"ground truth {g.shape} vs prediction {p.shape}")
    if g.ndim != 3:
        raise ShapeMismatch(f"expected (channels, height, width), got {g.shape}")


def edge_map(t: np.ndarray, reduce: str = "sum") -> np.ndarray:
    mag = sobel_magnitude(t)
    return mag.sum(axis=0) if reduce == "sum" else mag.max(axis=0)


def sobel_loss(g: np.ndarray, p: np.ndarray, cfg: LossConfig = LossConfig()) -> float:
    g = np.asarray(g, dtype=float)
    p = np.asarray(p, dtype=float)
    _check_shapes(g, p)
    diff = edge_map(g, cfg.channel_reduce) - edge_map(p, cfg.channel_reduce)
    # row-major accumulation order keeps the sum bit-stable
    return float(np.add.reduce(smooth_l1(diff, cfg.beta).ravel()) / diff.size)


def cross_entropy(g: np.ndarray, p: np.ndarray) -> float:
    g = np.asarray(g, dtype=float)
    p = np.asarray(p, dtype=float)
    _check_shapes(g, p)
    picked = (np.maximum(p, CE_CLAMP) * g).sum(axis=0)
    n = picked.size
    return float(np.add.reduce(-np.log(picked).ravel()) / n)


def total_loss(g: np.ndarray, p: np.ndarray, cfg: LossConfig = LossConfig()) -> float:
    return cross_entropy(g, p) + cfg.lam * sobel_loss(g, p, cfg)


def loss_terms(g, p, cfg: LossConfig = LossConfig()) -> dict:
    ce = cross_entropy(g, p)
    sob = sobel_loss(g, p, cfg)
    return {"ce": ce, "sobel": sob, "total": ce + cfg.lam * sob}


def grad_sobel_loss(g: np.ndarray, p: np.ndarray, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """d sobel_loss / d p, same shape as ``p``."""
    g = np.asarray(g, dtype=float)
    p = np.asarray(p, dtype=float)
    _check_shapes(g, p)
    gx, gy = sobel_components(p)
    mag = np.sqrt(gx * gx + gy * gy + EPS)
    e_p = mag.sum(axis=0) if cfg.channel_reduce == "sum" else mag.max(axis=0)
    diff = edge_map(g, cfg.channel_reduce) - e_p
    # loss = mean(smooth_l1(E_g - E_p)) so dL/dE_p = -smooth_l1'(diff) / N
    d_edge = -smooth_l1_grad(diff, cfg.beta) / diff.size
    if cfg.channel_reduce == "sum":
        d_mag = np.broadcast_to(d_edge, mag.shape)
    else:
        # subgradient: all weight on the first maximal channel
        winner = np.argmax(mag, axis=0)
        d_mag = np.zeros_like(mag)
        np.put_along_axis(d_mag, winner[None], d_edge[None], axis=0)
    d_gx = d_mag * gx / mag
    d_gy = d_mag * gy / mag
    return _correlate_adjoint(d_gx, SOBEL_X) + _correlate_adjoint(d_gy, SOBEL_Y)


def grad_cross_entropy(g: np.ndarray, p: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    p = np.asarray(p, dtype=float)
    _check_shapes(g, p)
    n = p.shape[1] * p.shape[2]
    safe = np.where(p > CE_CLAMP, p, 1.0)
    return np.where((g > 0) & (p > CE_CLAMP), -g / (n * safe), 0.0)


def grad_total_loss(g: np.ndarray, p: np.ndarray, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Analytic gradient of :func:`total_loss` w.r.t. every entry of ``p`` (no renormalisation)."""
    grad = grad_cross_entropy(g, p)
    if cfg.lam != 0.0:
        grad = grad + cfg.lam * grad_sobel_loss(g, p, cfg)
    return grad


def finite_difference_grad(f, p: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of scalar ``f`` at ``p``."""
    p = np.array(p, dtype=float)
    out = np.zeros_like(p)
    flat = p.reshape(-1)
    gflat = out.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(p)
        flat[i] = orig - h
        fm = f(p)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return out


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """max |a - n| / max(|a|, |n|, floor) over all entries."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_gradient(g, p, cfg: LossConfig = LossConfig(), h: float = 1e-5) -> float:
    numeric = finite_difference_grad(lambda q: total_loss(g, q, cfg), p, h)
    return max_relative_error(grad_total_loss(g, p, cfg), numeric)


def random_pair(rng: np.random.Generator, channels: int = 3, height: int = 8, width: int = 8):
    """Random one-hot ground truth and softmax-normalised prediction."""
    labels = rng.integers(0, channels, size=(height, width))
    g = (np.arange(channels)[:, None, None] == labels[None]).astype(float)
    logits = rng.normal(size=(channels, height, width))
    e = np.exp(logits - logits.max(axis=0))
    return g, e / e.sum(axis=0)
