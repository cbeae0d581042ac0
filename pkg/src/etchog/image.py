"""8-bit grayscale images, PGM I/O, and square block decomposition.

Images are numpy ``uint8`` arrays of shape ``(height, width)``, row-major.
The differencing formulas elsewhere in the package use 1-based pixel
coordinates (x, y) with x running horizontally; that pixel lives at
``img[y - 1, x - 1]``.  Blocks are stacked along a leading axis in raster
order of their origins, so block ``m`` of an image with ``mx`` blocks per
row has origin (block-row ``m // mx``, block-column ``m % mx``).
"""

import numpy as np

_WHITESPACE = b" \t\n\r\x0b\x0c"


class PgmError(ValueError):
    """Malformed or unsupported PGM data."""


class DimensionError(ValueError):
    """Image dimensions incompatible with the requested tiling."""


def validate_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError(f"expected a 2-D uint8 image, got {img.dtype} with shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    return img


def _skip_header_space(data: bytes, pos: int) -> int:
    n = len(data)
    while pos < n:
        c = data[pos]
        if c in _WHITESPACE:
            pos += 1
        elif c == 0x23:  # '#' comment runs to end of line
            while pos < n and data[pos] != 0x0A:
                pos += 1
        else:
            break
    return pos


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    pos = _skip_header_space(data, pos)
    if pos >= len(data):
        raise PgmError("truncated PGM header")
    end = pos
    while end < len(data) and data[end] not in _WHITESPACE and data[end] != 0x23:
        end += 1
    return data[pos:end], end


def _int_token(data: bytes, pos: int, what: str) -> tuple[int, int]:
    tok, pos = _next_token(data, pos)
    try:
        value = int(tok)
    except ValueError:
        raise PgmError(f"malformed PGM header: bad {what} {tok!r}") from None
    return value, pos


def load_pgm(data: bytes) -> np.ndarray:
    """Parse PGM bytes (binary P5 or ASCII P2, maxval 255) into an image."""
    magic, pos = _next_token(data, 0)
    if magic not in (b"P5", b"P2"):
        raise PgmError(f"not a PGM image: magic {magic!r} (expected P5 or P2)")
    width, pos = _int_token(data, pos, "width")
    height, pos = _int_token(data, pos, "height")
    if width < 1 or height < 1:
        raise PgmError(f"malformed PGM header: bad dimensions {width}x{height}")
    maxval, pos = _int_token(data, pos, "maxval")
    if maxval != 255:
        raise PgmError(f"unsupported maxval {maxval}: only 8-bit images (maxval 255) are handled")

    count = width * height
    if magic == b"P5":
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise PgmError("malformed PGM header: missing whitespace before raster")
        raster = data[pos + 1 : pos + 1 + count]
        if len(raster) < count:
            raise PgmError(f"truncated pixel data: expected {count} bytes, found {len(raster)}")
        trailing = data[pos + 1 + count :]
        if trailing.strip(_WHITESPACE):
            raise PgmError("trailing data after pixel raster")
        flat = np.frombuffer(raster, dtype=np.uint8)
    else:
        samples = []
        while True:
            pos = _skip_header_space(data, pos)
            if pos >= len(data):
                break
            value, pos = _int_token(data, pos, "sample")
            samples.append(value)
        if len(samples) < count:
            raise PgmError(f"truncated pixel data: expected {count} samples, found {len(samples)}")
        if len(samples) > count:
            raise PgmError("trailing data after pixel raster")
        if any(s < 0 or s > 255 for s in samples):
            raise PgmError("pixel sample out of range [0, 255]")
        flat = np.array(samples, dtype=np.uint8)
    return flat.reshape(height, width)


def save_pgm(img: np.ndarray) -> bytes:
    """Serialize an image as binary PGM: ``P5\\n{X} {Y}\\n255\\n`` + raster."""
    img = validate_image(img)
    height, width = img.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + img.tobytes()


def load_pgm_file(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return load_pgm(fh.read())


def save_pgm_file(img: np.ndarray, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_pgm(img))


def split_blocks(img: np.ndarray, e: int) -> np.ndarray:
    """Cut an image into e x e blocks, stacked (M, e, e) in raster order."""
    img = validate_image(img)
    if e < 1:
        raise DimensionError(f"block side must be positive, got {e}")
    height, width = img.shape
    if height % e or width % e:
        raise DimensionError(f"block side {e} does not divide image {width}x{height}")
    my, mx = height // e, width // e
    return img.reshape(my, e, mx, e).transpose(0, 2, 1, 3).reshape(my * mx, e, e)


def merge_blocks(blocks: np.ndarray, mx: int, my: int) -> np.ndarray:
    """Inverse of :func:`split_blocks` for an mx-by-my grid of blocks."""
    blocks = np.asarray(blocks)
    if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2]:
        raise DimensionError(f"expected stacked square blocks, got shape {blocks.shape}")
    if blocks.shape[0] != mx * my:
        raise DimensionError(f"expected {mx * my} blocks for a {mx}x{my} grid, got {blocks.shape[0]}")
    e = blocks.shape[1]
    out = blocks.reshape(my, mx, e, e).transpose(0, 2, 1, 3).reshape(my * e, mx * e)
    return validate_image(out)
