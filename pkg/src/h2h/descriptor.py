"""H2H descriptor: jointly normalized HOG + HOH cell histograms in 2x2 blocks."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .gradients import GradientFields, as_image, gradient_fields

#: Guard added inside every normalization square root.
EPS = 1e-10


@dataclass(frozen=True)
class CellHistograms:
    """Raw per-cell histograms, each of shape ``(n_y, n_x, bins)``."""

    hog: np.ndarray
    hoh: np.ndarray

    @property
    def grid(self):
        return self.hog.shape[:2]

    @property
    def bins(self):
        return self.hog.shape[2]


@dataclass(frozen=True)
class H2HDescriptor:
    values: np.ndarray
    cell: int
    bins: int
    n_y: int
    n_x: int

    @property
    def n_blocks(self):
        return (self.n_y - 1) * (self.n_x - 1)

    def blocks(self):
        """View of the descriptor as ``(n_blocks, 8 * bins)``."""
        return self.values.reshape(self.n_blocks, 8 * self.bins)


def descriptor_length(height, width, cell, bins):
    """Length ``8 * B * K`` of the descriptor for a ``height x width`` image."""
    n_y, n_x = height // cell, width // cell
    return 8 * bins * (n_y - 1) * (n_x - 1)


def orientation_bins(angle, bins):
    """Index of the half-open bin ``[b*pi/B, (b+1)*pi/B)`` holding each angle."""
    edges = np.arange(bins) * (np.pi / bins)
    idx = np.searchsorted(edges, angle, side="right") - 1
    return np.clip(idx, 0, bins - 1)


def _cell_sums(angle, weight, cell, bins, n_y, n_x):
    rows, cols = n_y * cell, n_x * cell
    b = orientation_bins(angle[:rows, :cols], bins)
    cy = np.arange(rows)[:, None] // cell
    cx = np.arange(cols)[None, :] // cell
    flat = ((cy * n_x + cx) * bins + b).ravel()
    # bincount accumulates in raster order, so each bin sums its pixels row by row
    sums = np.bincount(flat, weights=weight[:rows, :cols].ravel(),
                       minlength=n_y * n_x * bins)
    return sums.reshape(n_y, n_x, bins)


def cell_histograms(fields: GradientFields, cell: int, bins: int) -> CellHistograms:
    """Hard-binned, magnitude-weighted orientation histograms per ``cell x cell`` tile.

    Partial cells at the bottom and right edges are dropped.
    """
    if cell < 2:
        raise ParameterError(f"cell size must be >= 2, got {cell}")
    if bins < 2:
        raise ParameterError(f"bin count must be >= 2, got {bins}")
    p, q = np.shape(fields.theta)
    n_y, n_x = p // cell, q // cell
    if n_y < 1 or n_x < 1:
        raise DimensionError(f"{p}x{q} image is smaller than one {cell}x{cell} cell")
    hog = _cell_sums(fields.theta, fields.magnitude, cell, bins, n_y, n_x)
    hoh = _cell_sums(fields.phi, fields.strength, cell, bins, n_y, n_x)
    return CellHistograms(hog, hoh)


def joint_normalize(h_hog, h_hoh):
    """Scale both histograms by ``1 / sqrt(|h_hog|^2 + |h_hoh|^2 + EPS^2)``.

    Accepts single vectors or stacks of them along leading axes.
    """
    h_hog = np.asarray(h_hog, dtype=np.float64)
    h_hoh = np.asarray(h_hoh, dtype=np.float64)
    if h_hog.shape != h_hoh.shape:
        raise DimensionError(f"histogram shapes differ: {h_hog.shape} vs {h_hoh.shape}")
    energy = np.sum(h_hog**2, axis=-1, keepdims=True) + np.sum(h_hoh**2, axis=-1, keepdims=True)
    scale = 1.0 / np.sqrt(energy + EPS**2)
    return h_hog * scale, h_hoh * scale


def assemble_blocks(cells: CellHistograms) -> np.ndarray:
    """Group jointly normalized cells into overlapping 2x2 blocks.

    Blocks slide with stride one cell and are enumerated row-major.  Each block
    is ``[hog TL, TR, BL, BR, hoh TL, TR, BL, BR]`` followed by its own
    epsilon-guarded l2 normalization.

    Returns
    -------
    ndarray
        Shape ``((n_y - 1) * (n_x - 1), 8 * bins)``.
    """
    n_y, n_x = cells.grid
    if n_y < 2 or n_x < 2:
        raise DimensionError(f"need at least 2x2 cells to form a block, got {n_y}x{n_x}")
    hog, hoh = joint_normalize(cells.hog, cells.hoh)

    def quadrants(h):
        return [h[:-1, :-1], h[:-1, 1:], h[1:, :-1], h[1:, 1:]]

    blocks = np.concatenate(quadrants(hog) + quadrants(hoh), axis=-1)
    blocks = blocks.reshape((n_y - 1) * (n_x - 1), 8 * cells.bins)
    norm = np.sqrt(np.sum(blocks**2, axis=1, keepdims=True) + EPS**2)
    return blocks / norm


def h2h_descriptor(image, cell=8, bins=9) -> H2HDescriptor:
    """Compute the H2H descriptor of a grayscale image.

    Examples
    --------
    >>> d = h2h_descriptor(np.random.default_rng(0).random((50, 40)), cell=8, bins=9)
    >>> d.values.shape, d.n_blocks
    ((1440,), 20)
    """
    img = as_image(image)
    cells = cell_histograms(gradient_fields(img), cell, bins)
    blocks = assemble_blocks(cells)
    n_y, n_x = cells.grid
    return H2HDescriptor(blocks.ravel(), cell, bins, n_y, n_x)


def feature_matrix(images, cell=8, bins=9, normalize=True, workers=1):
    """Stack descriptors of `images` as columns of a ``d x n`` matrix.

    With `normalize`, every column is additionally scaled to unit l2 norm
    (all-zero columns stay zero).  ``workers > 1`` extracts in a thread pool;
    column order always follows the input order.
    """
    def one(img):
        return h2h_descriptor(img, cell, bins).values

    images = list(images)
    if not images:
        raise DimensionError("no images to extract features from")
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(one, images))
    else:
        cols = [one(img) for img in images]
    lengths = {c.size for c in cols}
    if len(lengths) != 1:
        raise DimensionError(f"images produce descriptors of different lengths {sorted(lengths)}")
    x = np.column_stack(cols)
    if normalize:
        norms = np.linalg.norm(x, axis=0)
        nz = norms > 0
        x[:, nz] /= norms[nz]
    return x
