"""Synthetic face-like datasets for smoke tests and demos.

Each class is a constant level plus a sinusoidal grating at a class-specific
orientation and frequency; individual images get a small random phase shift
and pixel noise.  Optionally every test image carries the same occluding
block, which gives the test residuals a shared low-rank structure.
"""

from pathlib import Path

import numpy as np

from .dataset import ManifestEntry, save_pgm, write_manifest


def texture(shape, angle, freq, phase=0.0, level=0.5, contrast=0.3):
    rows, cols = np.mgrid[0:shape[0], 0:shape[1]]
    u = cols * np.cos(angle) + rows * np.sin(angle)
    return level + contrast * np.sin(2 * np.pi * freq * u + phase)


def toy_images(n_classes=3, per_class=5, shape=(32, 32), seed=0, noise=0.02):
    """Return ``(images, labels)`` with classes named ``c0, c1, ...``."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for k in range(n_classes):
        angle = np.pi * k / n_classes
        freq = 0.08 + 0.04 * k
        level = 0.35 + 0.3 * k / max(n_classes - 1, 1)
        for _ in range(per_class):
            img = texture(shape, angle, freq, rng.uniform(-0.3, 0.3), level)
            img += noise * rng.standard_normal(shape)
            images.append(np.clip(img, 0.0, 1.0))
            labels.append(f"c{k}")
    return images, labels


def occlude(img, box, value=0.0):
    top, left, height, width = box
    out = img.copy()
    out[top:top + height, left:left + width] = value
    return out


def make_toy_dataset(out_dir, n_classes=3, per_class=5, n_train=3, shape=(32, 32),
                     seed=0, noise=0.02, occlusion=None):
    """Write a toy dataset as PGM files plus ``manifest.csv`` under `out_dir`.

    The first `n_train` images of each class are training images, the rest are
    ``test1``.  `occlusion` is an optional ``(top, left, height, width)`` box
    blacked out in every test image.

    Returns the manifest path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images, labels = toy_images(n_classes, per_class, shape, seed, noise)
    entries = []
    for i, (img, label) in enumerate(zip(images, labels)):
        idx = i % per_class
        role = "train" if idx < n_train else "test1"
        if role != "train" and occlusion is not None:
            img = occlude(img, occlusion)
        name = f"{label}_{idx:02d}.pgm"
        save_pgm(out / name, img)
        entries.append(ManifestEntry(name, label, "s1", role))
    manifest = out / "manifest.csv"
    write_manifest(manifest, entries)
    return manifest
