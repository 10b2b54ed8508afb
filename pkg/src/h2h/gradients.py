"""First- and second-order gradient fields of a grayscale image.

Derivatives are computed by correlation (not flipped convolution) with small
difference stencils, using replicate padding at the borders.  ``x`` is the
column index and ``y`` the row index, increasing downward.
"""

from typing import NamedTuple

import numpy as np

from .errors import DimensionError, NumericalError

MIN_SIDE = 3


class GradientFields(NamedTuple):
    """Per-pixel orientation/strength maps, all shaped like the source image."""

    theta: np.ndarray
    magnitude: np.ndarray
    phi: np.ndarray
    strength: np.ndarray


def as_image(image):
    """Validate a grayscale image and return it as a float64 array."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise DimensionError(f"grayscale image must be 2-D, got shape {img.shape}")
    if img.shape[0] < MIN_SIDE or img.shape[1] < MIN_SIDE:
        raise DimensionError(
            f"image must be at least {MIN_SIDE}x{MIN_SIDE} pixels, got {img.shape}"
        )
    if not np.all(np.isfinite(img)):
        raise NumericalError("image contains non-finite intensities")
    return img


def _shifts(image):
    """Return a function ``at(dy, dx)`` giving the padded image shifted by (dy, dx)."""
    padded = np.pad(image, 1, mode="edge")
    p, q = image.shape

    def at(dy, dx):
        return padded[1 + dy:1 + dy + p, 1 + dx:1 + dx + q]

    return at


def first_order(image):
    """Central differences ``(I_x, I_y)`` from the stencil ``[-1, 0, 1]``."""
    at = _shifts(as_image(image))
    ix = at(0, 1) - at(0, -1)
    iy = at(1, 0) - at(-1, 0)
    return ix, iy


def second_order(image):
    """Discrete Hessian entries ``(I_xx, I_yy, I_xy)``.

    Uses ``[1, -2, 1]`` along each axis and the cross stencil
    ``1/4 * [[1, 0, -1], [0, 0, 0], [-1, 0, 1]]`` for the mixed derivative.
    All three are exact on quadratic and bilinear surfaces.
    """
    at = _shifts(as_image(image))
    centre = at(0, 0)
    ixx = at(0, -1) - 2.0 * centre + at(0, 1)
    iyy = at(-1, 0) - 2.0 * centre + at(1, 0)
    ixy = 0.25 * (at(-1, -1) - at(-1, 1) - at(1, -1) + at(1, 1))
    return ixx, iyy, ixy


def _check_same_shape(*arrays):
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise DimensionError(f"field shapes differ: {sorted(shapes)}")
    return [np.asarray(a, dtype=np.float64) for a in arrays]


def _fold_half_turn(angle):
    # map into [0, pi); values that round up to pi fold to 0
    out = np.mod(angle, np.pi)
    out[out >= np.pi] = 0.0
    return out


def orientation_magnitude(ix, iy):
    """Unsigned gradient orientation in ``[0, pi)`` and magnitude.

    Pixels with zero magnitude get orientation 0.
    """
    ix, iy = _check_same_shape(ix, iy)
    magnitude = np.hypot(ix, iy)
    theta = _fold_half_turn(np.arctan2(iy, ix))
    theta[magnitude == 0] = 0.0
    return theta, magnitude


def hessian_orientation_strength(ixx, iyy, ixy):
    """Principal-curvature orientation in ``[0, pi)`` and eigenvalue gap.

    ``phi = atan2(2 I_xy, I_xx - I_yy) / 2`` and
    ``S = sqrt((I_xx - I_yy)^2 + 4 I_xy^2)``, which equals ``|l1 - l2|`` for
    the eigenvalues of the 2x2 Hessian.  Pixels with ``S == 0`` get ``phi = 0``.
    """
    ixx, iyy, ixy = _check_same_shape(ixx, iyy, ixy)
    diff = ixx - iyy
    strength = np.hypot(diff, 2.0 * ixy)
    phi = 0.5 * np.arctan2(2.0 * ixy, diff)
    phi = np.where(phi < 0, phi + np.pi, phi)
    phi[phi >= np.pi] = 0.0
    phi[strength == 0] = 0.0
    return phi, strength


def gradient_fields(image):
    """Compute all four per-pixel maps used by the H2H descriptor."""
    img = as_image(image)
    theta, magnitude = orientation_magnitude(*first_order(img))
    phi, strength = hessian_orientation_strength(*second_order(img))
    return GradientFields(theta, magnitude, phi, strength)
