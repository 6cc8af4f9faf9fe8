"""Weak and strong view augmentation on uint8 image batches.

Weak = random horizontal flip + small random translation (reflect padded).
Strong = a RandAugment-style policy (2 random ops with random magnitude,
followed by cutout). All randomness comes from an explicit numpy Generator,
so a fixed stream reproduces identical pixel output.
"""

from __future__ import annotations

import numpy as np
import torch


def _translate(img: np.ndarray, dx: int, dy: int, fill: int) -> np.ndarray:
    out = np.full_like(img, fill)
    h, w = img.shape[:2]
    src_x = slice(max(0, -dx), min(w, w - dx))
    dst_x = slice(max(0, dx), min(w, w + dx))
    src_y = slice(max(0, -dy), min(h, h - dy))
    dst_y = slice(max(0, dy), min(h, h + dy))
    out[dst_y, dst_x] = img[src_y, src_x]
    return out


def _blend(a: np.ndarray, b: np.ndarray, factor: float) -> np.ndarray:
    out = b.astype(np.float32) + factor * (a.astype(np.float32) - b.astype(np.float32))
    return np.clip(out, 0, 255).astype(np.uint8)


def _autocontrast(img, _mag):
    out = img.astype(np.float32)
    for c in range(img.shape[2]):
        lo, hi = out[:, :, c].min(), out[:, :, c].max()
        if hi > lo:
            out[:, :, c] = (out[:, :, c] - lo) * (255.0 / (hi - lo))
    return out.astype(np.uint8)


def _equalize(img, _mag):
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        channel = img[:, :, c]
        hist = np.bincount(channel.ravel(), minlength=256)
        nonzero = hist[hist > 0]
        if nonzero.size <= 1:
            out[:, :, c] = channel
            continue
        step = (hist.sum() - nonzero[-1]) // 255
        if step == 0:
            out[:, :, c] = channel
            continue
        lut = (np.cumsum(hist) - hist) // step
        out[:, :, c] = np.clip(lut, 0, 255).astype(np.uint8)[channel]
    return out


def _posterize(img, mag):
    bits = 8 - int(4 * mag)  # 8..4 bits
    mask = np.uint8(0xFF << (8 - bits) & 0xFF)
    return img & mask


def _solarize(img, mag):
    threshold = int(256 - 256 * mag)
    return np.where(img >= threshold, 255 - img, img).astype(np.uint8)


def _brightness(img, mag, direction):
    return _blend(img, np.zeros_like(img), 1.0 + direction * 0.9 * mag)


def _contrast(img, mag, direction):
    mean = np.full_like(img, int(img.astype(np.float32).mean().round()))
    return _blend(img, mean, 1.0 + direction * 0.9 * mag)


def _color(img, mag, direction):
    gray = (img.astype(np.float32) @ np.array([0.299, 0.587, 0.114], np.float32))
    gray3 = np.repeat(gray[:, :, None], 3, axis=2).astype(np.uint8)
    return _blend(img, gray3, 1.0 + direction * 0.9 * mag)


def _sharpness(img, mag, direction):
    f = img.astype(np.float32)
    blurred = f.copy()
    blurred[1:-1, 1:-1] = (
        f[:-2, :-2] + f[:-2, 1:-1] + f[:-2, 2:] +
        f[1:-1, :-2] + 5.0 * f[1:-1, 1:-1] + f[1:-1, 2:] +
        f[2:, :-2] + f[2:, 1:-1] + f[2:, 2:]) / 13.0
    return _blend(img, np.clip(blurred, 0, 255).astype(np.uint8), 1.0 + direction * 0.9 * mag)


def _translate_x(img, mag, direction):
    dx = int(round(direction * mag * 0.3 * img.shape[1]))
    return _translate(img, dx, 0, fill=128)


def _translate_y(img, mag, direction):
    dy = int(round(direction * mag * 0.3 * img.shape[0]))
    return _translate(img, 0, dy, fill=128)


def _identity(img, _mag):
    return img


# (fn, signed) — signed ops draw a random direction in {-1, +1}
_STRONG_OPS = [
    (_identity, False),
    (_autocontrast, False),
    (_equalize, False),
    (_posterize, False),
    (_solarize, False),
    (_brightness, True),
    (_contrast, True),
    (_color, True),
    (_sharpness, True),
    (_translate_x, True),
    (_translate_y, True),
]


def _flip_shift(img, flip, dy, dx, pad):
    h, w = img.shape[:2]
    if flip:
        img = img[:, ::-1]
    padded = np.pad(img, ((pad, pad), (pad, pad), (0, 0)), mode="reflect")
    return padded[pad + dy:pad + dy + h, pad + dx:pad + dx + w]


def weak_augment(images: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Flip-and-shift policy; shift range is 1/8 of the image side."""
    n, h, w, _ = images.shape
    max_shift = max(1, h // 8)
    flips = rng.random(n) < 0.5
    shifts = rng.integers(-max_shift, max_shift + 1, size=(n, 2))
    out = np.empty_like(images)
    for i in range(n):
        out[i] = _flip_shift(images[i], flips[i], shifts[i][0], shifts[i][1], max_shift)
    return out


def strong_augment(images: np.ndarray, rng: np.random.Generator,
                   num_ops: int = 2, cutout_frac: float = 0.5) -> np.ndarray:
    """RandAugment-style policy: flip+shift base, ``num_ops`` random ops, cutout."""
    n, h, w, _ = images.shape
    max_shift = max(1, h // 8)
    out = np.empty_like(images)
    for i in range(n):
        flip = rng.random() < 0.5
        dy, dx = rng.integers(-max_shift, max_shift + 1, size=2)
        img = _flip_shift(images[i], flip, dy, dx, max_shift)
        for _ in range(num_ops):
            op_idx = int(rng.integers(0, len(_STRONG_OPS)))
            mag = float(rng.random())
            fn, signed = _STRONG_OPS[op_idx]
            if signed:
                direction = 1.0 if rng.random() < 0.5 else -1.0
                img = fn(img, mag, direction)
            else:
                img = fn(img, mag)
        size = max(1, int(round(cutout_frac * h)))
        cy = int(rng.integers(0, h))
        cx = int(rng.integers(0, w))
        y0, y1 = max(0, cy - size // 2), min(h, cy + (size + 1) // 2)
        x0, x1 = max(0, cx - size // 2), min(w, cx + (size + 1) // 2)
        img = img.copy()
        img[y0:y1, x0:x1] = 128
        out[i] = img
    return out


def to_tensor(images: np.ndarray) -> torch.Tensor:
    """uint8 NHWC -> float32 NCHW scaled to [-1, 1]."""
    arr = images.astype(np.float32) / 127.5 - 1.0
    return torch.from_numpy(arr).permute(0, 3, 1, 2).contiguous()
