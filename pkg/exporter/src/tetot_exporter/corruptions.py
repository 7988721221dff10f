"""Synthetic image corruptions at five severity levels.

Every corruption is a pure function on a float32 RGB image with values in
``[0, 1]`` and shape ``(H, W, 3)``.  Severity runs from 1 (mild) to 5
(harsh); severity 0 is accepted as an explicit no-op so a zero-strength
run can be compared against the clean pipeline.  Randomized corruptions
draw from the generator they are handed, so a fixed seed gives a fixed
output.

The strength tables below are this module's own parameterization of the
usual common-corruptions families; the exact numbers per severity are:

  gaussian_noise    additive sigma        0.08 0.12 0.18 0.26 0.38
  shot_noise        poisson events/unit   60   25   12   5    3
  impulse_noise     flipped fraction      0.03 0.06 0.09 0.17 0.27
  speckle_noise     multiplicative sigma  0.15 0.20 0.35 0.45 0.60
  gaussian_blur     kernel sigma (px)     1    2    3    4    6
  defocus_blur      disk radius (px)      2    3    4    6    8
  zoom_blur         max zoom factor       1.06 1.11 1.16 1.21 1.26
  brightness        additive offset       0.1  0.2  0.3  0.4  0.5
  contrast          scale about the mean  0.60 0.45 0.30 0.15 0.08
  saturate          chroma gain           2    3    5    8    12
  spatter           covered fraction      0.06 0.08 0.10 0.13 0.16
  elastic_transform displacement (px)     2    4    6    8    10

All outputs are clipped back to ``[0, 1]`` and returned as float32.
"""

from __future__ import annotations

import zlib
from pathlib import Path

import numpy as np
from scipy import ndimage

from .spec import DatasetError, SpecError

_GAUSS_SIGMA = (0.08, 0.12, 0.18, 0.26, 0.38)
_SHOT_RATE = (60.0, 25.0, 12.0, 5.0, 3.0)
_IMPULSE_FRAC = (0.03, 0.06, 0.09, 0.17, 0.27)
_SPECKLE_SIGMA = (0.15, 0.20, 0.35, 0.45, 0.60)
_BLUR_SIGMA = (1.0, 2.0, 3.0, 4.0, 6.0)
_DEFOCUS_RADIUS = (2, 3, 4, 6, 8)
_ZOOM_MAX = (1.06, 1.11, 1.16, 1.21, 1.26)
_BRIGHT_OFFSET = (0.1, 0.2, 0.3, 0.4, 0.5)
_CONTRAST_SCALE = (0.60, 0.45, 0.30, 0.15, 0.08)
_SATURATE_GAIN = (2.0, 3.0, 5.0, 8.0, 12.0)
_SPATTER_FRAC = (0.06, 0.08, 0.10, 0.13, 0.16)
_ELASTIC_ALPHA = (2.0, 4.0, 6.0, 8.0, 10.0)

_SPATTER_COLOR = np.array([0.32, 0.25, 0.18], dtype=np.float64)  # mud


def _finish(img: np.ndarray) -> np.ndarray:
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def gaussian_noise(img, severity, rng):
    if severity == 0:
        return img.copy()
    sigma = _GAUSS_SIGMA[severity - 1]
    return _finish(img + rng.normal(0.0, sigma, size=img.shape))


def shot_noise(img, severity, rng):
    if severity == 0:
        return img.copy()
    rate = _SHOT_RATE[severity - 1]
    return _finish(rng.poisson(img * rate) / rate)


def impulse_noise(img, severity, rng):
    if severity == 0:
        return img.copy()
    frac = _IMPULSE_FRAC[severity - 1]
    out = img.copy()
    h, w = img.shape[:2]
    hits = rng.random((h, w)) < frac
    salt = rng.random((h, w)) < 0.5
    out[hits & salt] = 1.0
    out[hits & ~salt] = 0.0
    return _finish(out)


def speckle_noise(img, severity, rng):
    if severity == 0:
        return img.copy()
    sigma = _SPECKLE_SIGMA[severity - 1]
    return _finish(img + img * rng.normal(0.0, sigma, size=img.shape))


def gaussian_blur(img, severity, rng):
    if severity == 0:
        return img.copy()
    sigma = _BLUR_SIGMA[severity - 1]
    out = ndimage.gaussian_filter(img.astype(np.float64), (sigma, sigma, 0.0),
                                  mode="reflect")
    return _finish(out)


def _disk_kernel(radius: int) -> np.ndarray:
    span = np.arange(-radius, radius + 1)
    yy, xx = np.meshgrid(span, span, indexing="ij")
    disk = (yy ** 2 + xx ** 2 <= radius ** 2).astype(np.float64)
    return disk / disk.sum()

def defocus_blur(img, severity, rng):
    if severity == 0:
        return img.copy()
    kernel = _disk_kernel(_DEFOCUS_RADIUS[severity - 1])
    out = np.empty_like(img, dtype=np.float64)
    for c in range(img.shape[2]):
        out[:, :, c] = ndimage.convolve(img[:, :, c].astype(np.float64),
                                        kernel, mode="reflect")
    return _finish(out)


def _center_zoom(img: np.ndarray, factor: float) -> np.ndarray:
    # zoom the plane then crop back to the original frame around the center
    h, w = img.shape[:2]
    zoomed = ndimage.zoom(img, (factor, factor, 1.0), order=1, mode="reflect")
    zh, zw = zoomed.shape[:2]
    top = (zh - h) // 2
    left = (zw - w) // 2
    return zoomed[top:top + h, left:left + w]

def zoom_blur(img, severity, rng):
    if severity == 0:
        return img.copy()
    zmax = _ZOOM_MAX[severity - 1]
    factors = np.arange(1.0, zmax + 1e-9, 0.02)
    acc = img.astype(np.float64).copy()
    for f in factors[1:]:
        acc += _center_zoom(img.astype(np.float64), f)
    return _finish(acc / len(factors))


def brightness(img, severity, rng):
    if severity == 0:
        return img.copy()
    return _finish(img + _BRIGHT_OFFSET[severity - 1])


def contrast(img, severity, rng):
    if severity == 0:
        return img.copy()
    scale = _CONTRAST_SCALE[severity - 1]
    mean = img.mean()
    return _finish((img - mean) * scale + mean)


def saturate(img, severity, rng):
    if severity == 0:
        return img.copy()
    gain = _SATURATE_GAIN[severity - 1]
    gray = img @ np.array([0.299, 0.587, 0.114])
    return _finish(gray[..., None] + (img - gray[..., None]) * gain)


def spatter(img, severity, rng):
    if severity == 0:
        return img.copy()
    frac = _SPATTER_FRAC[severity - 1]
    h, w = img.shape[:2]
    field = ndimage.gaussian_filter(rng.random((h, w)), sigma=max(h, w) / 24.0)
    cut = np.quantile(field, 1.0 - frac)
    mask = field >= cut
    out = img.astype(np.float64).copy()
    out[mask] = 0.45 * out[mask] + 0.55 * _SPATTER_COLOR
    return _finish(out)


def elastic_transform(img, severity, rng):
    if severity == 0:
        return img.copy()
    alpha = _ELASTIC_ALPHA[severity - 1]
    h, w = img.shape[:2]
    smooth = max(4.0, 0.08 * max(h, w))
    dy = ndimage.gaussian_filter(rng.uniform(-1, 1, (h, w)), smooth)
    dx = ndimage.gaussian_filter(rng.uniform(-1, 1, (h, w)), smooth)
    # normalize so alpha is the peak displacement in pixels
    dy *= alpha / max(np.abs(dy).max(), 1e-12)
    dx *= alpha / max(np.abs(dx).max(), 1e-12)
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    coords = (yy + dy, xx + dx)
    out = np.empty_like(img, dtype=np.float64)
    for c in range(img.shape[2]):
        out[:, :, c] = ndimage.map_coordinates(img[:, :, c].astype(np.float64),
                                               coords, order=1, mode="reflect")
    return _finish(out)


CORRUPTIONS = {
    "brightness": brightness,
    "contrast": contrast,
    "spatter": spatter,
    "saturate": saturate,
    "elastic_transform": elastic_transform,
    "gaussian_blur": gaussian_blur,
    "defocus_blur": defocus_blur,
    "zoom_blur": zoom_blur,
    "gaussian_noise": gaussian_noise,
    "shot_noise": shot_noise,
    "impulse_noise": impulse_noise,
    "speckle_noise": speckle_noise,
}


_PARAM_TABLE = (
    ("gaussian_noise", "additive sigma", _GAUSS_SIGMA),
    ("shot_noise", "poisson events per unit", _SHOT_RATE),
    ("impulse_noise", "flipped pixel fraction", _IMPULSE_FRAC),
    ("speckle_noise", "multiplicative sigma", _SPECKLE_SIGMA),
    ("gaussian_blur", "kernel sigma (px)", _BLUR_SIGMA),
    ("defocus_blur", "disk radius (px)", _DEFOCUS_RADIUS),
    ("zoom_blur", "max zoom factor", _ZOOM_MAX),
    ("brightness", "additive offset", _BRIGHT_OFFSET),
    ("contrast", "scale about the mean", _CONTRAST_SCALE),
    ("saturate", "chroma gain", _SATURATE_GAIN),
    ("spatter", "covered fraction", _SPATTER_FRAC),
    ("elastic_transform", "peak displacement (px)", _ELASTIC_ALPHA),
)


def severity_help() -> str:
    """Human-readable table of what each severity level means per corruption."""
    lines = ["corruption strengths at severities 1..5:"]
    for name, what, values in _PARAM_TABLE:
        vals = " ".join(f"{v:g}" for v in values)
        lines.append(f"  {name:<18} {what:<24} {vals}")
    return "\n".join(lines)


def corruption_names() -> tuple[str, ...]:
    return tuple(CORRUPTIONS)


def get_corruption(name: str):
    """Look up a corruption, accepting spaces or underscores in the name."""
    key = name.strip().lower().replace(" ", "_").replace("-", "_")
    try:
        return CORRUPTIONS[key]
    except KeyError:
        raise SpecError(
            f"unknown corruption {name!r}; expected one of "
            f"{', '.join(CORRUPTIONS)}"
        ) from None


def image_rng(seed: int, rel_path: str) -> np.random.Generator:
    """Per-image generator so corruption noise depends only on (seed, path)."""
    tag = zlib.crc32(rel_path.replace("\\", "/").encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([seed, tag]))


def corrupt_image(img: np.ndarray, name: str, severity: int,
                  rng: np.random.Generator) -> np.ndarray:
    fn = get_corruption(name)
    if int(severity) != severity or not 0 <= severity <= 5:
        raise SpecError(f"severity must be an integer in [0, 5], got {severity}")
    img = np.asarray(img, dtype=np.float32)
    if img.ndim != 3 or img.shape[2] != 3:
        raise SpecError(f"expected an (H, W, 3) image, got shape {img.shape}")
    return fn(img, int(severity), rng)


def apply_corruption(data_dir, out_dir, name: str, severity: int,
                     seed: int = 0) -> dict:
    """Write a corrupted copy of an image-folder dataset.

    The class-subdirectory layout of ``data_dir`` is reproduced under
    ``out_dir`` and every readable image is corrupted and saved as PNG
    under its original stem.  Deterministic for a fixed seed: each image's
    noise stream is keyed by its path, not by visit order.
    """
    from PIL import Image

    from .export import list_images

    fn = get_corruption(name)
    if int(severity) != severity or not 1 <= severity <= 5:
        raise SpecError(f"severity must be an integer in [1, 5], got {severity}")
    data_dir = Path(data_dir)
    out_dir = Path(out_dir)
    entries, class_names = list_images(data_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path, _label in entries:
        rel = path.relative_to(data_dir)
        try:
            with Image.open(path) as im:
                arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
        except Exception:
            continue  # export skips these too
        rng = image_rng(seed, str(rel))
        out = fn(arr, int(severity), rng)
        dest = (out_dir / rel).with_suffix(".png")
        dest.parent.mkdir(parents=True, exist_ok=True)
        tmp = dest.with_name(dest.name + ".tmp")
        Image.fromarray(np.round(out * 255.0).astype(np.uint8)).save(tmp, format="PNG")
        tmp.replace(dest)
        written.append(str(rel.with_suffix(".png")))
    if not written:
        raise DatasetError(f"no readable images under {data_dir}")
    return {
        "out_dir": str(out_dir),
        "corruption": name,
        "severity": int(severity),
        "classes": class_names,
        "written": written,
    }
