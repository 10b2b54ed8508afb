"""Build an H2H descriptor step by step on a synthetic image.

Run with ``python3 demos/descriptor_walkthrough.py``.
"""

import numpy as np

from h2h.descriptor import assemble_blocks, cell_histograms, h2h_descriptor
from h2h.gradients import gradient_fields
from h2h.synthetic import texture

# A 48x40 grating with a bright blob: edges for the gradient histogram,
# a curved ridge for the Hessian histogram.
img = texture((48, 40), angle=np.pi / 6, freq=0.1)
rows, cols = np.mgrid[0:48, 0:40]
img += 0.4 * np.exp(-((rows - 24) ** 2 + (cols - 20) ** 2) / 60.0)

fields = gradient_fields(img)
print("gradient magnitude  max %.3f" % fields.magnitude.max())
print("hessian strength    max %.3f" % fields.strength.max())

# Per-cell histograms: 8x8 cells, 9 unsigned orientation bins on [0, pi).
cells = cell_histograms(fields, cell=8, bins=9)
print("cell grid", cells.grid, "bins", cells.bins)
print("dominant HOG bin per cell:")
print(np.argmax(cells.hog, axis=-1))

# Cells are normalized jointly, then grouped into overlapping 2x2 blocks.
blocks = assemble_blocks(cells)
print("blocks", blocks.shape, "norms in [%.6f, %.6f]"
      % tuple(np.linalg.norm(blocks, axis=1)[[0, -1]]))

desc = h2h_descriptor(img, cell=8, bins=9)
print("descriptor length", desc.values.size, "= 8 * 9 *", desc.n_blocks)

# Intensity scaling leaves the descriptor unchanged.
print("scale invariant:", np.allclose(h2h_descriptor(3.0 * img).values,
                                      h2h_descriptor(img).values, atol=1e-12))
