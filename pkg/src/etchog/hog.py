"""Grid-wise histogram-of-oriented-gradients extraction.

The descriptor is computed in five stages:

1.  the image is cut into square grids of side ``grid_size`` and
    differentiated inside each grid, with one-sided differences on grid
    borders, so no pixel ever mixes with a neighbour across a grid
    boundary (``grid_size=None`` differentiates the whole image instead,
    a baseline mode that does NOT commute with the block cipher);
2.  per-pixel gradient strength sqrt(dx^2 + dy^2) and unsigned direction
    folded into (0, pi];
3.  strength-weighted direction histograms over ``cell_size`` cells,
    with hard nearest-center quantization into ``bins`` orientation bins
    and exact 50/50 splitting of votes that land on a bin boundary
    (circularly: pi is the boundary between the last and first bin);
4.  cells grouped into ``block_size`` x ``block_size`` blocks that may
    overlap by ``overlap`` cells;
5.  each block divided by (its Euclidean norm + eps) and all blocks
    concatenated row-major.

Bin boundaries reachable from integer gradients are decided by exact
integer tests (dy=0 -> pi; dx=0 -> pi/2; |dx|=|dy| -> pi/4 or 3pi/4,
boundaries only when 4 divides ``bins``); every other boundary has an
irrational tangent and is unreachable, so the remaining pixels are
binned through ``atan2`` safely.

Float accumulation follows a fixed order -- raster within each cell,
sequential sums of squares for block norms -- so extraction is
reproducible bit for bit and directly comparable against a naive
per-pixel reimplementation.
"""

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .image import DimensionError, validate_image

_HALF = Fraction(1, 2)
_ONE = Fraction(1)


@dataclass(frozen=True)
class HogParams:
    """Extraction knobs.

    grid_size   side of the differencing grids (None = whole image)
    cell_size   side of a histogram cell, in pixels
    bins        number of unsigned orientation bins
    block_size  side of a normalization block, in cells
    overlap     overlap between adjacent blocks, in cells
    eps         normalization damping constant
    """

    grid_size: int | None = 8
    cell_size: int = 8
    bins: int = 10
    block_size: int = 1
    overlap: int = 0
    eps: float = 1e-6

    def __post_init__(self):
        if self.grid_size is not None and self.grid_size < 2:
            raise ValueError(f"grid_size must be at least 2, got {self.grid_size}")
        if self.cell_size < 1:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if self.bins < 2:
            raise ValueError(f"bins must be at least 2, got {self.bins}")
        if self.block_size < 1:
            raise ValueError(f"block_size must be positive, got {self.block_size}")
        if not 0 <= self.overlap < self.block_size:
            raise ValueError(f"overlap must satisfy 0 <= overlap < block_size, got {self.overlap}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")


@dataclass(frozen=True)
class FeatureLayout:
    """Shape bookkeeping for one extracted feature vector."""

    cells_x: int
    cells_y: int
    blocks_x: int
    blocks_y: int
    block_size: int
    bins: int

    @property
    def length(self) -> int:
        return self.blocks_x * self.blocks_y * self.bins * self.block_size**2


def layout_for(shape: tuple[int, int], params: HogParams) -> FeatureLayout:
    height, width = shape
    if width % params.cell_size or height % params.cell_size:
        raise DimensionError(f"cell size {params.cell_size} does not divide image {width}x{height}")
    cells_x = width // params.cell_size
    cells_y = height // params.cell_size
    if cells_x < params.block_size or cells_y < params.block_size:
        raise DimensionError(
            f"block of {params.block_size} cells does not fit a {cells_x}x{cells_y} cell grid"
        )
    stride = params.block_size - params.overlap
    blocks_x = (cells_x - params.block_size) // stride + 1
    blocks_y = (cells_y - params.block_size) // stride + 1
    return FeatureLayout(cells_x, cells_y, blocks_x, blocks_y, params.block_size, params.bins)


def _onesided_diff(arr: np.ndarray, axis: int) -> np.ndarray:
    """Central differences with one-sided rules at both ends of ``axis``."""
    arr = np.moveaxis(arr, axis, -1)
    if arr.shape[-1] < 2:
        raise DimensionError("differencing needs at least 2 samples along the axis")
    out = np.empty_like(arr)
    out[..., 1:-1] = arr[..., 2:] - arr[..., :-2]
    out[..., 0] = arr[..., 1] - arr[..., 0]
    out[..., -1] = arr[..., -1] - arr[..., -2]
    return np.moveaxis(out, -1, axis)


def grid_differentials(grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(dx, dy) of one square grid; exact integers in [-255, 255]."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {grid.shape}")
    signed = grid.astype(np.int16)
    return _onesided_diff(signed, axis=1), _onesided_diff(signed, axis=0)


def differential_maps(img: np.ndarray, grid_size: int | None) -> tuple[np.ndarray, np.ndarray]:
    """Full-size (dx, dy) maps, differenced independently inside each grid."""
    img = validate_image(img)
    height, width = img.shape
    signed = img.astype(np.int16)
    if grid_size is None:
        return _onesided_diff(signed, axis=1), _onesided_diff(signed, axis=0)
    g = grid_size
    if g < 2:
        raise DimensionError(f"grid side must be at least 2, got {g}")
    if height % g or width % g:
        raise DimensionError(f"grid side {g} does not divide image {width}x{height}")
    tiles = signed.reshape(height // g, g, width // g, g).transpose(0, 2, 1, 3)
    dx = _onesided_diff(tiles, axis=3)
    dy = _onesided_diff(tiles, axis=2)

    def recombine(m: np.ndarray) -> np.ndarray:
        return m.transpose(0, 2, 1, 3).reshape(height, width)

    return recombine(dx), recombine(dy)


def gradient_maps(dx: np.ndarray, dy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradient strength and unsigned direction in (0, pi].

    Zero gradients get direction pi by convention; their strength is 0 so
    the choice never influences a histogram.
    """
    dx = np.asarray(dx)
    dy = np.asarray(dy)
    if dx.shape != dy.shape:
        raise ValueError(f"dx/dy shape mismatch: {dx.shape} vs {dy.shape}")
    sq = dx.astype(np.int64) ** 2 + dy.astype(np.int64) ** 2
    strength = np.sqrt(sq.astype(np.float64))
    theta = np.arctan2(dy.astype(np.float64), dx.astype(np.float64))
    theta = np.where(theta <= 0.0, theta + np.pi, theta)
    return strength, theta


def bin_votes(dx: int, dy: int, bins: int) -> list[tuple[int, float]]:
    """Quantize one integer gradient into (1-based bin, vote fraction) pairs.

    Interior directions produce a single full vote; directions exactly on
    a bin boundary split 50/50 between the adjacent bins, wrapping pi
    onto the first bin.  A zero gradient votes into bin 1 (its weight is
    zero upstream).
    """
    if bins < 2:
        raise ValueError(f"bins must be at least 2, got {bins}")
    if dx == 0 and dy == 0:
        return [(1, 1.0)]
    if dy == 0:
        return [(bins, 0.5), (1, 0.5)]
    if dx == 0:
        if bins % 2 == 0:
            return [(bins // 2, 0.5), (bins // 2 + 1, 0.5)]
        return [((bins + 1) // 2, 1.0)]
    if abs(dx) == abs(dy) and bins % 4 == 0:
        k = bins // 4 if (dx > 0) == (dy > 0) else 3 * bins // 4
        return [(k, 0.5), (k + 1, 0.5)]
    theta = math.atan2(dy, dx)
    if theta <= 0.0:
        theta += math.pi
    k = int(theta * bins / math.pi) + 1
    return [(min(k, bins), 1.0)]


def _vote_tables(dx: np.ndarray, dy: np.ndarray, bins: int):
    """Vectorized :func:`bin_votes`: per-pixel (bin0, bin1, w0, w1), bins 0-based.

    The second slot carries weight 0 for single-vote pixels; adding a
    zero-weighted vote is an exact no-op, so accumulation matches the
    scalar path bit for bit.
    """
    dxl = dx.astype(np.int64)
    dyl = dy.astype(np.int64)
    zero = (dxl == 0) & (dyl == 0)
    on_pi = (dyl == 0) & ~zero
    on_half_pi = (dxl == 0) & ~zero

    theta = np.arctan2(dyl.astype(np.float64), dxl.astype(np.float64))
    theta = np.where(theta <= 0.0, theta + np.pi, theta)
    k = np.minimum(np.floor(theta * bins / np.pi).astype(np.int64) + 1, bins)

    b0 = k - 1
    b1 = np.zeros_like(b0)
    w0 = np.ones(b0.shape, dtype=np.float64)
    w1 = np.zeros(b0.shape, dtype=np.float64)

    if bins % 4 == 0:
        diagonal = (np.abs(dxl) == np.abs(dyl)) & ~zero
        kd = np.where((dxl > 0) == (dyl > 0), bins // 4, 3 * bins // 4)
        b0 = np.where(diagonal, kd - 1, b0)
        b1 = np.where(diagonal, kd, b1)
        w0 = np.where(diagonal, 0.5, w0)
        w1 = np.where(diagonal, 0.5, w1)
    if bins % 2 == 0:
        b0 = np.where(on_half_pi, bins // 2 - 1, b0)
        b1 = np.where(on_half_pi, bins // 2, b1)
        w0 = np.where(on_half_pi, 0.5, w0)
        w1 = np.where(on_half_pi, 0.5, w1)
    else:
        b0 = np.where(on_half_pi, (bins + 1) // 2 - 1, b0)
    b0 = np.where(on_pi, bins - 1, b0)
    b1 = np.where(on_pi, 0, b1)
    w0 = np.where(on_pi, 0.5, w0)
    w1 = np.where(on_pi, 0.5, w1)
    b0 = np.where(zero, 0, b0)
    w0 = np.where(zero, 1.0, w0)
    w1 = np.where(zero, 0.0, w1)
    return b0, b1, w0, w1


def cell_histograms(dx: np.ndarray, dy: np.ndarray, bins: int, cell_size: int) -> np.ndarray:
    """Strength-weighted orientation histograms, shape (cells_y, cells_x, bins).

    Votes accumulate in raster order within each cell, which pins the
    floating-point result exactly.
    """
    dx = np.asarray(dx)
    dy = np.asarray(dy)
    if dx.shape != dy.shape:
        raise ValueError(f"dx/dy shape mismatch: {dx.shape} vs {dy.shape}")
    height, width = dx.shape
    if height % cell_size or width % cell_size:
        raise DimensionError(f"cell size {cell_size} does not divide image {width}x{height}")
    cells_y, cells_x = height // cell_size, width // cell_size

    strength, _ = gradient_maps(dx, dy)
    b0, b1, w0, w1 = _vote_tables(dx, dy, bins)
    cell_idx = (np.arange(height) // cell_size)[:, None] * cells_x + (np.arange(width) // cell_size)[None, :]

    flat_bins = np.stack([b0, b1], axis=-1).reshape(-1)
    flat_cells = np.stack([cell_idx, cell_idx], axis=-1).reshape(-1)
    flat_weights = np.stack([w0 * strength, w1 * strength], axis=-1).reshape(-1)
    hist = np.bincount(flat_cells * bins + flat_bins, weights=flat_weights, minlength=cells_y * cells_x * bins)
    return hist.reshape(cells_y, cells_x, bins)


def assemble_and_normalize(cells: np.ndarray, block_size: int, overlap: int, eps: float) -> np.ndarray:
    """Group cells into blocks, L2-normalize each, concatenate row-major.

    Inside a block, cells are flattened row-major with bins ascending.
    Norms use a sequential (left-to-right) sum of squares so the result
    is bit-reproducible.
    """
    cells = np.asarray(cells, dtype=np.float64)
    if cells.ndim != 3:
        raise ValueError(f"expected (cells_y, cells_x, bins), got shape {cells.shape}")
    cells_y, cells_x, _ = cells.shape
    if not 0 <= overlap < block_size:
        raise ValueError(f"overlap must satisfy 0 <= overlap < block_size, got {overlap}")
    if cells_y < block_size or cells_x < block_size:
        raise DimensionError(f"block of {block_size} cells does not fit a {cells_x}x{cells_y} cell grid")
    stride = block_size - overlap
    windows = np.lib.stride_tricks.sliding_window_view(cells, (block_size, block_size), axis=(0, 1))
    windows = windows[::stride, ::stride]
    blocks_y, blocks_x = windows.shape[:2]
    # (by, bx, bins, cell_row, cell_col) -> (by, bx, cell_row, cell_col, bins)
    vectors = windows.transpose(0, 1, 3, 4, 2).reshape(blocks_y, blocks_x, -1)
    norms = np.sqrt(np.cumsum(vectors * vectors, axis=-1)[..., -1])
    return (vectors / (norms[..., None] + eps)).reshape(-1)


def extract(img: np.ndarray, params: HogParams) -> np.ndarray:
    """End-to-end descriptor for one image."""
    img = validate_image(img)
    layout = layout_for(img.shape, params)
    dx, dy = differential_maps(img, params.grid_size)
    cells = cell_histograms(dx, dy, params.bins, params.cell_size)
    feature = assemble_and_normalize(cells, params.block_size, params.overlap, params.eps)
    assert feature.shape == (layout.length,)
    return feature


def integer_vote_multiset(img: np.ndarray, params: HogParams) -> dict[tuple[int, int], Counter]:
    """Exact-arithmetic vote multisets, one Counter per (cell_row, cell_col).

    Entries are (1-based bin, squared strength dx^2+dy^2, vote fraction)
    with integer/rational components only, so two cells can be compared
    without any tolerance.  The multiset determines the float histogram
    up to summation order.
    """
    img = validate_image(img)
    layout_for(img.shape, params)
    dx, dy = differential_maps(img, params.grid_size)
    height, width = img.shape
    cell = params.cell_size
    fractions = {1.0: _ONE, 0.5: _HALF}
    out: dict[tuple[int, int], Counter] = {
        (r, c): Counter() for r in range(height // cell) for c in range(width // cell)
    }
    for row in range(height):
        for col in range(width):
            gx = int(dx[row, col])
            gy = int(dy[row, col])
            squared = gx * gx + gy * gy
            counter = out[(row // cell, col // cell)]
            for k, w in bin_votes(gx, gy, params.bins):
                counter[(k, squared, fractions[w])] += 1
    return out


FEATURE_MAGIC = "ETCHOG v1"


def save_features(path, features, params: HogParams) -> None:
    """Write feature vectors: a header line, then one vector per line."""
    features = [np.asarray(f, dtype=np.float64) for f in features]
    if not features:
        raise ValueError("no feature vectors to save")
    length = features[0].shape[0]
    if any(f.shape != (length,) for f in features):
        raise ValueError("all feature vectors must share one length")
    lines = [
        f"{FEATURE_MAGIC} len={length} NC={params.cell_size} N={params.bins} "
        f"NB={params.block_size} NO={params.overlap}"
    ]
    for f in features:
        lines.append(" ".join(f"{v:.16e}" for v in f))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_features(path) -> tuple[list[np.ndarray], dict[str, int]]:
    """Read a feature file; returns (vectors, header fields)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines or not lines[0].startswith(FEATURE_MAGIC):
        raise ValueError(f"not a {FEATURE_MAGIC} feature file")
    fields = {}
    for token in lines[0][len(FEATURE_MAGIC) :].split():
        key, _, value = token.partition("=")
        fields[key] = int(value)
    length = fields["len"]
    vectors = []
    for line in lines[1:]:
        vec = np.array([float(tok) for tok in line.split()], dtype=np.float64)
        if vec.shape != (length,):
            raise ValueError(f"feature line has {vec.shape[0]} values, header says {length}")
        vectors.append(vec)
    return vectors, fields
